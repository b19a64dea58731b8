#pragma once

#include <cstddef>
#include <cstdint>
#include <functional>
#include <optional>
#include <string>
#include <vector>

#include "data.hpp"
#include "machine.hpp"
#include "mstep.hpp"

namespace bml {

enum class Method { em_cd, em_pcd, em_pe, cd, pcd };
enum class LrPolicy { constant, inverse };

const char* to_string(Method m);
Method parse_method(const std::string& s);

struct TrainConfig {
    Method method = Method::em_pcd;
    std::size_t k = 1;
    std::size_t batch_size = 100;
    double learning_rate = 0.007;
    LrPolicy lr_policy = LrPolicy::constant;
    double lr_tau = 100.0;
    std::size_t epochs = 0;
    std::size_t estep_multiplier = 1;
    std::size_t eval_every = 1;
    bool eval_initial = true;
    std::uint64_t seed = 1;
    Connectivity connectivity = Connectivity::full;
    HiddenStatistic hidden_statistic = HiddenStatistic::expected;  // only meaningful for RBMs
    std::size_t pcd_chains = 0;                                      // 0 -> batch_size
    std::size_t threads = 1;

    void validate(std::size_t data_size) const;
};

double lr_schedule(double base, std::size_t epoch, LrPolicy policy, double tau = 100.0);

struct TraceRecord {
    std::size_t epoch = 0;
    double alpha = 0.0;
    double wall_seconds = 0.0;
    std::optional<double> avg_error;
    std::optional<double> exact_kl;
    std::optional<double> augmented_kl;
    std::optional<double> avg_abs_diff;
};

struct TrainTrace {
    std::vector<TraceRecord> records;
};

// What an evaluation hook sees. `epoch_start` holds the parameters the last
// E-step used (theta_t); it equals `machine` for the initial evaluation.
struct EvalContext {
    std::size_t epoch;
    const BoltzmannMachine& machine;
    const BoltzmannMachine& epoch_start;
};

using EvalHook = std::function<void(const EvalContext&, TraceRecord&)>;

// Optional instrumentation for tests.
struct TrainObserver {
    std::function<void(std::size_t epoch, const CompleteDataSet&)> after_estep;
    std::function<void(std::size_t epoch, std::size_t batch, const BoltzmannMachine&)> before_batch;
    std::function<void(std::size_t epoch, std::size_t batch, const BoltzmannMachine&)> after_batch;
};

struct TrainResult {
    BoltzmannMachine machine;
    TrainTrace trace;
};

// The EM-like loop: each epoch completes every data vector with hidden
// states drawn under the current parameters, then runs one pass of
// mini-batch updates with the configured M-step (em-cd, em-pcd or em-pe).
TrainResult train_emlike(BoltzmannMachine machine, const BinaryDataSet& data, const TrainConfig& config,
                         const EvalHook& hook = {}, const TrainObserver& observer = {});

// Hinton-style RBM training (cd or pcd): hidden states are drawn per
// mini-batch right before its update.
TrainResult train_rbm_baseline(BoltzmannMachine machine, const BinaryDataSet& data, const TrainConfig& config,
                               const EvalHook& hook = {}, const TrainObserver& observer = {});

// Dispatches on config.method.
TrainResult train(BoltzmannMachine machine, const BinaryDataSet& data, const TrainConfig& config,
                  const EvalHook& hook = {}, const TrainObserver& observer = {});

}  // namespace bml
