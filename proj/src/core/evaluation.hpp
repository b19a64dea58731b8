#pragma once

#include <cstddef>
#include <cstdint>
#include <optional>
#include <span>
#include <string>
#include <vector>

#include "data.hpp"
#include "machine.hpp"
#include "moments.hpp"
#include "rng.hpp"
#include "sampling.hpp"

namespace bml {

// A difference-statistic threshold: counts pairs with |p_ij - q_ij| < a (or > a).
struct Threshold {
    enum class Side { below, above };
    Side side = Side::below;
    double a = 0.0;

    std::string label() const;  // "<0.01", ">0.9"
    bool admits(double diff) const { return side == Side::below ? diff < a : diff > a; }
};

std::vector<Threshold> default_thresholds();
Threshold parse_threshold(const std::string& text);

// `printed` divides the ordered-pair count by m^2; `unordered` counts i < j
// and divides by the number of such pairs.
enum class PairCounting { printed, unordered };

enum class MomentEstimator { rao_blackwell, naive };

struct EvalConfig {
    std::size_t samples = 0;            // R; 0 means samples_per_unit * n
    std::size_t samples_per_unit = 1000;
    std::size_t burn_in = 100;          // full sweeps per chain before keeping samples
    std::size_t chains = 10;
    ScanOrder scan = ScanOrder::random;
    MomentEstimator estimator = MomentEstimator::rao_blackwell;
    std::vector<Threshold> thresholds = default_thresholds();
    PairCounting counting = PairCounting::printed;
    std::size_t ais_temperatures = 1000;
    std::size_t ais_runs = 100;
    double ais_beta_min = 1e-3;         // smallest positive inverse temperature of the geometric ladder
    std::size_t bootstrap = 200;
    std::uint64_t seed = 1;
    std::size_t threads = 1;

    void validate() const;
    std::size_t resolved_samples(std::size_t units) const {
        return samples ? samples : samples_per_unit * units;
    }
};

// q_i and q_ij as indicator means over the data.
MomentVector data_moment_estimate(const BinaryDataSet& data);

struct EstimateStats {
    std::uint64_t conditional_evaluations = 0;
    std::uint64_t kept_samples = 0;
};

// Visible-unit model moments from Gibbs chains over all units. With the
// Rao-Blackwell estimator each kept state x contributes p(x_i = 1 | x_-i)
// for the first moments and p(x_i = 1 | x_-i) x_j for the pairs; the pair
// estimate is symmetrized as (A_ij + A_ji) / 2.
MomentVector model_moment_estimate(const BoltzmannMachine& machine, const EvalConfig& config,
                                   const Streams& streams, EstimateStats* stats = nullptr);

// Sum over i < j <= m of (p_ij - q_ij)^2 plus sum over i <= m of (p_i - q_i)^2.
double avg_error(const MomentVector& q, const MomentVector& p, std::size_t m);

// Exact gradient of D(Q(V) || P(V; theta)): dD/db_i = p_i - q_i and
// dD/dw_ij = p_ij - q_ij, with q-moments under q(v) p(h | v; theta).
struct KlGradient {
    Matrix dW;
    Vector db;
};
KlGradient kl_gradient_check(const BoltzmannMachine& machine, std::span<const double> target_visible);

// D(Q(V) || P(V; theta)) by enumeration.
double exact_kl(const BoltzmannMachine& machine, std::span<const double> target_visible);

struct DiffStats {
    std::vector<double> fractions;  // one per threshold
    double avg_abs_diff = 0.0;
};
DiffStats diff_stats(const MomentVector& q, const MomentVector& p, std::size_t m,
                     std::span<const Threshold> thresholds, PairCounting counting = PairCounting::printed);

struct AisResult {
    double log_z = 0.0;
    double std_error = 0.0;  // bootstrap over runs
    double log_z_base = 0.0;
    std::vector<double> log_weights;
};

// Inverse temperatures 0 = beta_0 < beta_1 < ... < beta_T = 1, with beta_1..beta_T
// geometric from beta_min to 1.
std::vector<double> ais_ladder(std::size_t temperatures, double beta_min);

// Annealed importance sampling from the zero-weight RBM with the same biases.
// Hidden units are summed out analytically in the intermediate densities.
AisResult ais_log_z(const RbmLayout& layout, const EvalConfig& config, const Streams& streams);

// log sum_h exp(-E(v, h)) for an RBM.
double rbm_free_log_prob(const RbmLayout& layout, StateView v);

double avg_log_prob(const RbmLayout& layout, const BinaryDataSet& data, double log_z);

struct EvalReport {
    std::size_t epoch = 0;
    std::string split;
    std::optional<double> avg_error;
    std::optional<double> exact_kl;
    std::optional<double> avg_abs_diff;
    std::vector<std::optional<double>> fractions;
    std::optional<double> log_z;
    std::optional<double> avg_log_prob_train;
    std::optional<double> avg_log_prob_test;
    std::optional<double> exact_avg_error;
};

std::string report_csv_header(std::span<const Threshold> thresholds);
std::string report_csv_row(const EvalReport& report);

}  // namespace bml
