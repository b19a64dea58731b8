#include "oracle.hpp"

#include <algorithm>
#include <atomic>
#include <bit>
#include <cmath>
#include <limits>

#include "error.hpp"

namespace bml {

namespace {

std::atomic<std::size_t> g_cap{kDefaultEnumerationCap};

// Neumaier-compensated running sum.
struct CompensatedSum {
    double sum = 0.0;
    double carry = 0.0;
    void add(double v) {
        const double t = sum + v;
        if (std::abs(sum) >= std::abs(v))
            carry += (sum - t) + v;
        else
            carry += (v - t) + sum;
        sum = t;
    }
    double value() const { return sum + carry; }
};

void check_normalized(std::span<const double> p, const char* name) {
    CompensatedSum s;
    for (double v : p) {
        require(v >= 0.0 && std::isfinite(v), ErrorCode::invalid_argument,
                std::string(name) + " has a negative or non-finite entry");
        s.add(v);
    }
    require(std::abs(s.value() - 1.0) <= 1e-9, ErrorCode::invalid_argument, std::string(name) + " is not normalized");
}

}  // namespace

std::size_t enumeration_cap() { return g_cap.load(); }
void set_enumeration_cap(std::size_t cap) {
    require(cap >= 1 && cap <= 40, ErrorCode::invalid_argument, "enumeration cap must be in [1, 40]");
    g_cap.store(cap);
}

std::uint64_t state_code(StateView x) {
    std::uint64_t code = 0;
    for (std::size_t i = 0; i < x.size(); ++i)
        if (x[i]) code |= std::uint64_t{1} << i;
    return code;
}

State state_from_code(std::uint64_t code, std::size_t units) {
    State x(units);
    for (std::size_t i = 0; i < units; ++i) x[i] = static_cast<std::uint8_t>((code >> i) & 1U);
    return x;
}

ExactDistribution exact_distribution(const BoltzmannMachine& machine, std::size_t cap) {
    const std::size_t n = machine.units();
    require(n <= cap, ErrorCode::cap_exceeded,
            "exact enumeration refused: " + std::to_string(n) + " units exceeds the cap of " + std::to_string(cap));
    const auto& w = machine.weights();
    const auto& b = machine.biases();

    // Split units into a low block (tabulated) and a high block (outer loop);
    // each negative energy is then a sum of three short DP chains.
    const std::size_t low = std::min<std::size_t>(n, 12);
    const std::size_t high = n - low;
    const std::uint64_t low_count = std::uint64_t{1} << low;
    const std::uint64_t high_count = std::uint64_t{1} << high;

    std::vector<double> low_neg(low_count, 0.0);
    for (std::uint64_t c = 1; c < low_count; ++c) {
        const auto t = static_cast<std::size_t>(std::countr_zero(c));
        const std::uint64_t rest = c & (c - 1);
        double v = low_neg[rest] + b(t);
        for (std::uint64_t r = rest; r; r &= r - 1) v += w(t, std::countr_zero(r));
        low_neg[c] = v;
    }
    std::vector<double> high_neg(high_count, 0.0);
    for (std::uint64_t c = 1; c < high_count; ++c) {
        const auto t = static_cast<std::size_t>(std::countr_zero(c));
        const std::uint64_t rest = c & (c - 1);
        double v = high_neg[rest] + b(low + t);
        for (std::uint64_t r = rest; r; r &= r - 1) v += w(low + t, low + std::countr_zero(r));
        high_neg[c] = v;
    }

    ExactDistribution dist;
    dist.units = n;
    dist.visible = machine.visible();
    dist.probs.resize(std::size_t{1} << n);
    std::vector<double> coupling(low);
    std::vector<double> cross(low_count, 0.0);
    double max_neg = -std::numeric_limits<double>::infinity();
    for (std::uint64_t h = 0; h < high_count; ++h) {
        for (std::size_t i = 0; i < low; ++i) {
            double c = 0.0;
            for (std::uint64_t r = h; r; r &= r - 1) c += w(i, low + std::countr_zero(r));
            coupling[i] = c;
        }
        for (std::uint64_t c = 1; c < low_count; ++c)
            cross[c] = cross[c & (c - 1)] + coupling[static_cast<std::size_t>(std::countr_zero(c))];
        double* out = dist.probs.data() + (h << low);
        for (std::uint64_t l = 0; l < low_count; ++l) {
            const double v = low_neg[l] + high_neg[h] + cross[l];
            out[l] = v;
            max_neg = std::max(max_neg, v);
        }
    }
    CompensatedSum z;
    for (double v : dist.probs) z.add(std::exp(v - max_neg));
    dist.log_z = max_neg + std::log(z.value());
    for (double& v : dist.probs) v = std::exp(v - dist.log_z);
    return dist;
}

std::vector<double> visible_marginal(const ExactDistribution& dist) {
    const std::size_t m = dist.visible;
    const std::uint64_t vis_count = std::uint64_t{1} << m;
    const std::uint64_t hid_count = std::uint64_t{1} << (dist.units - m);
    std::vector<double> marginal(vis_count, 0.0);
    for (std::uint64_t v = 0; v < vis_count; ++v) {
        CompensatedSum s;
        for (std::uint64_t h = 0; h < hid_count; ++h) s.add(dist.probs[v | (h << m)]);
        marginal[v] = s.value();
    }
    return marginal;
}

std::vector<double> visible_marginal_exact(const BoltzmannMachine& machine, std::size_t cap) {
    return visible_marginal(exact_distribution(machine, cap));
}

double kl_divergence(std::span<const double> q, std::span<const double> p) {
    require(q.size() == p.size(), ErrorCode::dimension_mismatch, "KL arguments differ in length");
    check_normalized(q, "first KL argument");
    check_normalized(p, "second KL argument");
    CompensatedSum s;
    for (std::size_t z = 0; z < q.size(); ++z) {
        if (q[z] == 0.0) continue;
        if (p[z] == 0.0) return std::numeric_limits<double>::infinity();
        s.add(q[z] * std::log(q[z] / p[z]));
    }
    return std::max(0.0, s.value());
}

namespace {

// Moments of an arbitrary weighting over the 2^units codes.
MomentVector weighted_moments(std::span<const double> weight, std::size_t limit) {
    MomentVector mv = MomentVector::zero(limit);
    const std::uint64_t mask = limit >= 64 ? ~std::uint64_t{0} : (std::uint64_t{1} << limit) - 1;
    std::vector<std::size_t> active;
    active.reserve(limit);
    // Accumulate per distinct prefix pattern first: many codes share the same
    // restriction to the first `limit` units.
    std::vector<double> prefix(std::size_t{1} << limit, 0.0);
    for (std::uint64_t c = 0; c < weight.size(); ++c) prefix[c & mask] += weight[c];
    for (std::uint64_t c = 0; c < prefix.size(); ++c) {
        const double p = prefix[c];
        if (p == 0.0) continue;
        active.clear();
        for (std::uint64_t r = c; r; r &= r - 1) active.push_back(static_cast<std::size_t>(std::countr_zero(r)));
        for (std::size_t a : active) {
            mv.first(a) += p;
            for (std::size_t bidx : active) mv.pair(a, bidx) += p;
        }
    }
    return mv;
}

}  // namespace

MomentVector exact_moments(const ExactDistribution& dist, std::size_t limit) {
    require(limit <= dist.units, ErrorCode::invalid_argument, "moment limit exceeds unit count");
    return weighted_moments(dist.probs, limit);
}

namespace {

std::vector<double> completion_weights(const ExactDistribution& dist, std::span<const double> target_visible) {
    const std::size_t m = dist.visible;
    require(target_visible.size() == (std::size_t{1} << m), ErrorCode::dimension_mismatch,
            "target distribution must have 2^m entries");
    check_normalized(target_visible, "target distribution");
    const auto pv = visible_marginal(dist);
    std::vector<double> qbar(dist.probs.size());
    const std::uint64_t vmask = (std::uint64_t{1} << m) - 1;
    for (std::uint64_t c = 0; c < qbar.size(); ++c) {
        const std::uint64_t v = c & vmask;
        qbar[c] = pv[v] > 0.0 ? target_visible[v] * dist.probs[c] / pv[v] : 0.0;
    }
    return qbar;
}

}  // namespace

MomentVector completion_moments(const ExactDistribution& dist, std::span<const double> target_visible) {
    return weighted_moments(completion_weights(dist, target_visible), dist.units);
}

double augmented_kl(const ExactDistribution& before, const ExactDistribution& after,
                    std::span<const double> target_visible) {
    require(before.units == after.units && before.visible == after.visible, ErrorCode::dimension_mismatch,
            "augmented KL needs two distributions over the same units");
    const auto qt = completion_weights(before, target_visible);
    return kl_divergence(qt, after.probs);
}

}  // namespace bml
