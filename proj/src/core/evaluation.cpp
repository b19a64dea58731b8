#include "evaluation.hpp"

#include <algorithm>
#include <charconv>
#include <cmath>
#include <limits>

#include "error.hpp"
#include "mstep.hpp"
#include "oracle.hpp"
#include "parallel.hpp"

namespace bml {

std::string Threshold::label() const { return (side == Side::below ? "<" : ">") + format_double(a); }

std::vector<Threshold> default_thresholds() {
    using S = Threshold::Side;
    return {{S::below, 0.01}, {S::below, 0.05}, {S::below, 0.1}, {S::below, 0.2},
            {S::above, 0.5},  {S::above, 0.9},  {S::above, 0.95}};
}

Threshold parse_threshold(const std::string& text) {
    Threshold t;
    std::string_view body = text;
    if (!body.empty() && (body.front() == '<' || body.front() == '>')) {
        t.side = body.front() == '<' ? Threshold::Side::below : Threshold::Side::above;
        body.remove_prefix(1);
    }
    const auto [end, ec] = std::from_chars(body.data(), body.data() + body.size(), t.a);
    require(ec == std::errc{} && end == body.data() + body.size(), ErrorCode::parse_error,
            "bad threshold '" + text + "' (expected e.g. <0.05 or >0.9)");
    require(t.a > 0.0 && t.a < 1.0, ErrorCode::invalid_argument, "threshold '" + text + "' must lie in (0, 1)");
    return t;
}

void EvalConfig::validate() const {
    require(samples > 0 || samples_per_unit > 0, ErrorCode::invalid_argument, "R must be positive");
    require(chains >= 1, ErrorCode::invalid_argument, "need at least one evaluation chain");
    require(!thresholds.empty(), ErrorCode::invalid_argument, "need at least one threshold");
    for (const auto& t : thresholds)
        require(t.a > 0.0 && t.a < 1.0, ErrorCode::invalid_argument, "thresholds must lie in (0, 1)");
    require(ais_temperatures >= 1, ErrorCode::invalid_argument, "AIS needs at least one temperature");
    require(ais_runs >= 1, ErrorCode::invalid_argument, "AIS needs at least one run");
    require(ais_beta_min > 0.0 && ais_beta_min < 1.0, ErrorCode::invalid_argument, "ais_beta_min must lie in (0, 1)");
    require(threads >= 1, ErrorCode::invalid_argument, "threads must be at least 1");
}

MomentVector data_moment_estimate(const BinaryDataSet& data) {
    require(data.size() > 0, ErrorCode::invalid_argument, "empty data set");
    MomentAccumulator acc(data.dim());
    for (std::size_t k = 0; k < data.size(); ++k) acc.add(data.row(k));
    return acc.finish();
}

namespace {

struct ChainSums {
    Vector first;
    Matrix pair;  // row j accumulates sigma_i x_j over i (naive: x_i x_j)
    std::uint64_t conditionals = 0;
};

}  // namespace

MomentVector model_moment_estimate(const BoltzmannMachine& machine, const EvalConfig& config, const Streams& streams,
                                   EstimateStats* stats) {
    config.validate();
    const std::size_t n = machine.units();
    const std::size_t m = machine.visible();
    const std::size_t R = config.resolved_samples(n);
    const std::size_t C = std::min(config.chains, R);
    const auto mi = static_cast<Eigen::Index>(m);

    std::vector<ChainSums> sums(C);
    parallel_for(C, config.threads, [&](std::size_t c) {
        Rng rng = streams.rng(c, Phase::evaluation, 0);
        State x(n);
        for (auto& v : x) v = rng.uniform() < 0.5 ? 1 : 0;
        FieldCache chain(machine, std::move(x));
        if (config.burn_in) gibbs_sweep_all(chain, config.burn_in, rng, config.scan);

        ChainSums& s = sums[c];
        s.first = Vector::Zero(mi);
        s.pair = Matrix::Zero(mi, mi);
        Vector sigma(mi);
        std::vector<std::size_t> active;
        active.reserve(m);
        const std::size_t keep = R * (c + 1) / C - R * c / C;
        for (std::size_t r = 0; r < keep; ++r) {
            gibbs_sweep_all(chain, 1, rng, config.scan);
            const State& st = chain.state();
            active.clear();
            for (std::size_t j = 0; j < m; ++j)
                if (st[j]) active.push_back(j);
            if (config.estimator == MomentEstimator::rao_blackwell) {
                for (std::size_t i = 0; i < m; ++i) sigma(static_cast<Eigen::Index>(i)) = chain.prob(i);
                s.conditionals += m;
                s.first += sigma;
                for (std::size_t j : active) s.pair.row(static_cast<Eigen::Index>(j)) += sigma.transpose();
            } else {
                for (std::size_t j : active) {
                    s.first(static_cast<Eigen::Index>(j)) += 1.0;
                    double* row = s.pair.data() + j * m;
                    for (std::size_t i : active) row[i] += 1.0;
                }
            }
        }
    });

    Vector first = Vector::Zero(mi);
    Matrix pair = Matrix::Zero(mi, mi);
    std::uint64_t conditionals = 0;
    for (const auto& s : sums) {
        first += s.first;
        pair += s.pair;
        conditionals += s.conditionals;
    }
    if (stats) {
        stats->conditional_evaluations += conditionals;
        stats->kept_samples += R;
    }
    const double inv = 1.0 / static_cast<double>(R);
    MomentVector out;
    out.first = first * inv;
    out.pair = (pair + pair.transpose()) * (0.5 * inv);
    out.pair.diagonal() = out.first;
    return out;
}

double avg_error(const MomentVector& q, const MomentVector& p, std::size_t m) {
    require(q.size() >= m && p.size() >= m, ErrorCode::dimension_mismatch,
            "moment vectors do not cover the first m units");
    double total = 0.0;
    for (std::size_t i = 0; i < m; ++i) {
        const auto a = static_cast<Eigen::Index>(i);
        const double d = p.first(a) - q.first(a);
        total += d * d;
        for (std::size_t j = i + 1; j < m; ++j) {
            const auto b = static_cast<Eigen::Index>(j);
            const double e = p.pair(a, b) - q.pair(a, b);
            total += e * e;
        }
    }
    return total;
}

KlGradient kl_gradient_check(const BoltzmannMachine& machine, std::span<const double> target_visible) {
    const ExactDistribution dist = exact_distribution(machine);
    const MomentVector p = exact_moments(dist, machine.units());
    const MomentVector q = completion_moments(dist, target_visible);
    KlGradient g{p.pair - q.pair, p.first - q.first};
    g.dW.diagonal().setZero();
    return g;
}

double exact_kl(const BoltzmannMachine& machine, std::span<const double> target_visible) {
    const auto model = visible_marginal_exact(machine);
    require(model.size() == target_visible.size(), ErrorCode::dimension_mismatch,
            "target distribution does not cover 2^m visible states");
    return kl_divergence(target_visible, model);
}

DiffStats diff_stats(const MomentVector& q, const MomentVector& p, std::size_t m,
                     std::span<const Threshold> thresholds, PairCounting counting) {
    require(!thresholds.empty(), ErrorCode::invalid_argument, "need at least one threshold");
    require(q.size() >= m && p.size() >= m, ErrorCode::dimension_mismatch,
            "moment vectors do not cover the first m units");
    std::vector<std::size_t> hits(thresholds.size(), 0);
    double pair_sum = 0.0;
    double single_sum = 0.0;
    for (std::size_t i = 0; i < m; ++i) {
        const auto a = static_cast<Eigen::Index>(i);
        single_sum += std::abs(p.first(a) - q.first(a));
        for (std::size_t j = 0; j < m; ++j) {
            if (j == i || (counting == PairCounting::unordered && j < i)) continue;
            const auto b = static_cast<Eigen::Index>(j);
            const double d = std::abs(p.pair(a, b) - q.pair(a, b));
            pair_sum += d;
            for (std::size_t t = 0; t < thresholds.size(); ++t)
                if (thresholds[t].admits(d)) ++hits[t];
        }
    }
    const double md = static_cast<double>(m);
    const double pair_den = counting == PairCounting::printed ? md * md : md * (md - 1.0) / 2.0;
    const double avg_den = counting == PairCounting::printed ? md * md : pair_den + md;
    DiffStats out;
    out.fractions.reserve(thresholds.size());
    for (auto h : hits) out.fractions.push_back(pair_den > 0.0 ? static_cast<double>(h) / pair_den : 0.0);
    out.avg_abs_diff = (pair_sum + single_sum) / avg_den;
    return out;
}

std::vector<double> ais_ladder(std::size_t temperatures, double beta_min) {
    require(temperatures >= 1, ErrorCode::invalid_argument, "AIS needs at least one temperature");
    std::vector<double> beta(temperatures + 1);
    beta[0] = 0.0;
    if (temperatures == 1) {
        beta[1] = 1.0;
        return beta;
    }
    const double span = static_cast<double>(temperatures - 1);
    for (std::size_t k = 1; k <= temperatures; ++k)
        beta[k] = std::pow(beta_min, static_cast<double>(temperatures - k) / span);
    beta[temperatures] = 1.0;
    return beta;
}

namespace {

double log_mean_exp(std::span<const double> x) {
    const double hi = *std::max_element(x.begin(), x.end());
    if (!std::isfinite(hi)) return hi;
    double s = 0.0;
    for (double v : x) s += std::exp(v - hi);
    return hi + std::log(s / static_cast<double>(x.size()));
}

// Views of an RBM's parameters: visible-to-hidden block and the two bias vectors.
struct RbmParams {
    Matrix w;  // m x h
    Vector b;
    Vector c;

    explicit RbmParams(const RbmLayout& layout) {
        const auto& M = layout.machine();
        const auto m = static_cast<Eigen::Index>(layout.visible());
        const auto h = static_cast<Eigen::Index>(layout.hidden());
        w = M.weights().topRightCorner(m, h);
        b = M.biases().head(m);
        c = M.biases().tail(h);
    }

    // Hidden pre-activation without biases: W^T v.
    Vector hidden_input(const Vector& v) const { return w.transpose() * v; }

    double free_log_prob(const Vector& v, const Vector& u, double beta) const {
        double s = b.dot(v);
        for (Eigen::Index j = 0; j < c.size(); ++j) s += softplus(c(j) + beta * u(j));
        return s;
    }
};

}  // namespace

AisResult ais_log_z(const RbmLayout& layout, const EvalConfig& config, const Streams& streams) {
    config.validate();
    const RbmParams P(layout);
    const auto m = P.b.size();
    const auto h = P.c.size();
    const auto beta = ais_ladder(config.ais_temperatures, config.ais_beta_min);
    const std::size_t T = beta.size() - 1;

    AisResult out;
    for (Eigen::Index i = 0; i < m; ++i) out.log_z_base += softplus(P.b(i));
    for (Eigen::Index j = 0; j < h; ++j) out.log_z_base += softplus(P.c(j));

    out.log_weights.assign(config.ais_runs, 0.0);
    parallel_for(config.ais_runs, config.threads, [&](std::size_t r) {
        Rng rng = streams.rng(r, Phase::ais, 0);
        Vector v(m), hid(h);
        for (Eigen::Index i = 0; i < m; ++i) v(i) = rng.uniform() < sigmoid(P.b(i)) ? 1.0 : 0.0;
        Vector u = P.hidden_input(v);
        double logw = 0.0;
        for (std::size_t k = 1; k <= T; ++k) {
            logw += P.free_log_prob(v, u, beta[k]) - P.free_log_prob(v, u, beta[k - 1]);
            if (k == T) break;
            // Block Gibbs transition leaving p_beta_k invariant.
            for (Eigen::Index j = 0; j < h; ++j) hid(j) = rng.uniform() < sigmoid(P.c(j) + beta[k] * u(j)) ? 1.0 : 0.0;
            const Vector a = P.w * hid;
            for (Eigen::Index i = 0; i < m; ++i) v(i) = rng.uniform() < sigmoid(P.b(i) + beta[k] * a(i)) ? 1.0 : 0.0;
            u = P.hidden_input(v);
        }
        out.log_weights[r] = logw;
    });

    out.log_z = out.log_z_base + log_mean_exp(out.log_weights);

    if (config.bootstrap > 1 && config.ais_runs > 1) {
        Rng rng = streams.rng(0, Phase::bootstrap, 0);
        std::vector<double> sample(config.ais_runs), est(config.bootstrap);
        for (auto& e : est) {
            for (auto& s : sample) s = out.log_weights[rng.index(config.ais_runs)];
            e = log_mean_exp(sample);
        }
        double mean = 0.0;
        for (double e : est) mean += e;
        mean /= static_cast<double>(est.size());
        double var = 0.0;
        for (double e : est) var += (e - mean) * (e - mean);
        out.std_error = std::sqrt(var / static_cast<double>(est.size() - 1));
    }
    return out;
}

double rbm_free_log_prob(const RbmLayout& layout, StateView v) {
    require(v.size() == layout.visible(), ErrorCode::dimension_mismatch, "visible vector has the wrong length");
    const RbmParams P(layout);
    Vector x(P.b.size());
    for (Eigen::Index i = 0; i < x.size(); ++i) x(i) = v[static_cast<std::size_t>(i)];
    return P.free_log_prob(x, P.hidden_input(x), 1.0);
}

double avg_log_prob(const RbmLayout& layout, const BinaryDataSet& data, double log_z) {
    require(std::isfinite(log_z), ErrorCode::invalid_argument, "log Z must be finite");
    require(data.size() > 0, ErrorCode::invalid_argument, "empty data set");
    require(data.dim() == layout.visible(), ErrorCode::dimension_mismatch,
            "data dimension differs from the visible layer");
    const RbmParams P(layout);
    Vector x(P.b.size());
    double total = 0.0;
    for (std::size_t k = 0; k < data.size(); ++k) {
        const auto row = data.row(k);
        for (Eigen::Index i = 0; i < x.size(); ++i) x(i) = row[static_cast<std::size_t>(i)];
        total += P.free_log_prob(x, P.hidden_input(x), 1.0);
    }
    return total / static_cast<double>(data.size()) - log_z;
}

namespace {

std::string column_name(const Threshold& t) {
    return (t.side == Threshold::Side::below ? "lt_" : "gt_") + format_double(t.a);
}

std::string cell(const std::optional<double>& v) {
    if (!v) return "";
    if (std::isinf(*v)) return *v > 0 ? "inf" : "-inf";
    return format_double(*v);
}

}  // namespace

std::string report_csv_header(std::span<const Threshold> thresholds) {
    std::string s = "epoch,avg_error,exact_kl,avg_abs_diff";
    for (const auto& t : thresholds) s += "," + column_name(t);
    s += ",log_z,avg_log_prob_train,avg_log_prob_test,split,exact_avg_error";
    return s;
}

std::string report_csv_row(const EvalReport& r) {
    std::string s = std::to_string(r.epoch) + "," + cell(r.avg_error) + "," + cell(r.exact_kl) + "," +
                    cell(r.avg_abs_diff);
    for (const auto& f : r.fractions) s += "," + cell(f);
    s += "," + cell(r.log_z) + "," + cell(r.avg_log_prob_train) + "," + cell(r.avg_log_prob_test) + "," + r.split +
         "," + cell(r.exact_avg_error);
    return s;
}

}  // namespace bml
