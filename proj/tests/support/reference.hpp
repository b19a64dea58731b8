#pragma once

// Deliberately naive reimplementations used as oracles in tests. They share
// no code with the library: plain loops, std::exp, no log-sum-exp tricks.

#include <cmath>
#include <cstdint>
#include <random>
#include <vector>

#include "machine.hpp"

namespace ref {

using Mat = std::vector<std::vector<double>>;

struct Params {
    std::size_t n = 0, m = 0;
    Mat w;
    std::vector<double> b;
};

inline Params params(const bml::BoltzmannMachine& M) {
    Params p;
    p.n = M.units();
    p.m = M.visible();
    p.w.assign(p.n, std::vector<double>(p.n, 0.0));
    p.b.assign(p.n, 0.0);
    for (std::size_t i = 0; i < p.n; ++i) {
        p.b[i] = M.bias(i);
        for (std::size_t j = 0; j < p.n; ++j) p.w[i][j] = M.weight(i, j);
    }
    return p;
}

inline int bit(std::uint64_t code, std::size_t i) { return static_cast<int>((code >> i) & 1U); }

inline double neg_energy(const Params& p, std::uint64_t code) {
    double s = 0.0;
    for (std::size_t i = 0; i < p.n; ++i) {
        if (!bit(code, i)) continue;
        s += p.b[i];
        for (std::size_t j = i + 1; j < p.n; ++j)
            if (bit(code, j)) s += p.w[i][j];
    }
    return s;
}

// Unnormalized weights shifted by the max so small machines never overflow.
inline std::vector<double> distribution(const Params& p) {
    const std::uint64_t N = std::uint64_t{1} << p.n;
    std::vector<double> e(N);
    double hi = -1e300;
    for (std::uint64_t c = 0; c < N; ++c) hi = std::max(hi, e[c] = neg_energy(p, c));
    double z = 0.0;
    for (auto& v : e) z += (v = std::exp(v - hi));
    for (auto& v : e) v /= z;
    return e;
}

inline double log_z(const Params& p) {
    const std::uint64_t N = std::uint64_t{1} << p.n;
    double hi = -1e300;
    for (std::uint64_t c = 0; c < N; ++c) hi = std::max(hi, neg_energy(p, c));
    double z = 0.0;
    for (std::uint64_t c = 0; c < N; ++c) z += std::exp(neg_energy(p, c) - hi);
    return hi + std::log(z);
}

inline std::vector<double> marginal(const Params& p, const std::vector<double>& joint) {
    std::vector<double> out(std::size_t{1} << p.m, 0.0);
    for (std::uint64_t c = 0; c < joint.size(); ++c) out[c & ((std::uint64_t{1} << p.m) - 1)] += joint[c];
    return out;
}

// First moments and pair moments (i != j) of the first `limit` units under a table.
struct Moments {
    std::vector<double> first;
    Mat pair;
};

inline Moments moments(const std::vector<double>& table, std::size_t limit) {
    Moments mo{std::vector<double>(limit, 0.0), Mat(limit, std::vector<double>(limit, 0.0))};
    for (std::uint64_t c = 0; c < table.size(); ++c)
        for (std::size_t i = 0; i < limit; ++i) {
            if (!bit(c, i)) continue;
            mo.first[i] += table[c];
            for (std::size_t j = 0; j < limit; ++j)
                if (bit(c, j)) mo.pair[i][j] += table[c];
        }
    return mo;
}

inline double kl(const std::vector<double>& q, const std::vector<double>& p) {
    double s = 0.0;
    for (std::size_t i = 0; i < q.size(); ++i)
        if (q[i] > 0) s += q[i] * std::log(q[i] / p[i]);
    return s;
}

inline double logistic(double a) { return 1.0 / (1.0 + std::exp(-a)); }

// Random machine with N(0, scale^2) couplings and biases from a plain std engine.
inline bml::BoltzmannMachine random_machine(std::size_t n, std::size_t m, std::uint32_t seed, double scale = 1.0,
                                            bool bipartite = false) {
    std::mt19937 gen(seed);
    std::normal_distribution<double> g(0.0, scale);
    bml::BoltzmannMachine M(n, m);
    for (std::size_t i = 0; i < n; ++i) {
        M.set_bias(i, g(gen));
        for (std::size_t j = i + 1; j < n; ++j) {
            if (bipartite && ((i < m) == (j < m))) continue;
            M.set_weight(i, j, g(gen));
        }
    }
    return M;
}

inline std::vector<double> random_simplex(std::size_t size, std::uint32_t seed) {
    std::mt19937 gen(seed);
    std::uniform_real_distribution<double> u(0.05, 1.0);
    std::vector<double> q(size);
    double s = 0.0;
    for (auto& v : q) s += (v = u(gen));
    for (auto& v : q) v /= s;
    return q;
}

// Index of a 0/1 vector with bit i = x[i].
template <typename Bits>
std::uint64_t code_of(const Bits& x) {
    std::uint64_t c = 0;
    for (std::size_t i = 0; i < x.size(); ++i)
        if (x[i]) c |= std::uint64_t{1} << i;
    return c;
}

// Pearson statistic of observed counts against expected probabilities. Cells
// expected below 5 are pooled into one, as the asymptotics require.
struct ChiSquare {
    double statistic = 0.0;
    std::size_t df = 0;
};

inline ChiSquare chi_square(const std::vector<double>& counts, const std::vector<double>& probs, double total) {
    ChiSquare out;
    double pooled_obs = 0.0, pooled_exp = 0.0;
    std::size_t cells = 0;
    for (std::size_t i = 0; i < probs.size(); ++i) {
        const double e = probs[i] * total;
        if (e < 5.0) {
            pooled_obs += counts[i];
            pooled_exp += e;
            continue;
        }
        out.statistic += (counts[i] - e) * (counts[i] - e) / e;
        ++cells;
    }
    if (pooled_exp > 0.0) {
        out.statistic += (pooled_obs - pooled_exp) * (pooled_obs - pooled_exp) / pooled_exp;
        ++cells;
    }
    out.df = cells - 1;
    return out;
}

// Upper quantile of chi-square(df) by the Wilson-Hilferty approximation; z is
// the matching standard normal quantile (2.3263 for the 0.01 level).
inline double chi_square_critical(std::size_t df, double z = 2.3263478740) {
    const double k = static_cast<double>(df);
    const double c = 2.0 / (9.0 * k);
    return k * std::pow(1.0 - c + z * std::sqrt(c), 3.0);
}

}  // namespace ref
