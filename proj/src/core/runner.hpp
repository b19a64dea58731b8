#pragma once

#include <optional>
#include <string>
#include <utility>
#include <vector>

#include "config.hpp"
#include "data.hpp"
#include "evaluation.hpp"
#include "machine.hpp"
#include "trainer.hpp"

namespace bml {

inline constexpr const char* kVersion = "0.1.0";

struct Splits {
    BinaryDataSet train;
    std::optional<BinaryDataSet> test;
    std::optional<TargetDistribution> target;  // set for artificial data
};

Splits load_data(const DataSpec& spec);

// init_model when set, otherwise init_random with `hidden` extra units.
BoltzmannMachine initial_machine(const RunConfig& config, std::size_t visible);

// Trace metrics as configured: exact or Monte Carlo avg-error, exact KL and
// augmented KL when the machine can be enumerated.
EvalHook make_trace_hook(const RunConfig& config, const Splits& splits);

struct TrainRun {
    BoltzmannMachine initial;
    TrainResult result;
};

TrainRun run_training(const RunConfig& config, const Splits& splits);

std::string trace_csv_header(bool wall_time);
std::string trace_csv(const TrainTrace& trace, bool wall_time);

// Config echo preceded by comment lines naming the version and RNG; loads
// back through RunConfig::from_text.
std::string metadata_text(const RunConfig& config);

struct EvaluateOptions {
    bool exact = false;
    bool ais = false;
};

// One report per split (train, then test when present).
std::vector<EvalReport> evaluate_model(const BoltzmannMachine& machine, const Splits& splits, const RunConfig& config,
                                       const EvaluateOptions& options);

// ---- figure data -------------------------------------------------------

const std::vector<std::string>& figdata_experiments();

// Settings an experiment starts from; user settings are applied on top.
std::vector<std::pair<std::string, std::string>> figdata_defaults(const std::string& experiment);

// Runs the experiment and returns its CSV text.
std::string run_figdata(const std::string& experiment, const RunConfig& config);

}  // namespace bml
