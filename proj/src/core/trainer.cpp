#include "trainer.hpp"

#include <chrono>
#include <cmath>
#include <optional>

#include "error.hpp"
#include "parallel.hpp"
#include "sampling.hpp"

namespace bml {

const char* to_string(Method m) {
    switch (m) {
        case Method::em_cd: return "em-cd";
        case Method::em_pcd: return "em-pcd";
        case Method::em_pe: return "em-pe";
        case Method::cd: return "cd";
        case Method::pcd: return "pcd";
    }
    return "?";
}

Method parse_method(const std::string& s) {
    if (s == "em-cd") return Method::em_cd;
    if (s == "em-pcd") return Method::em_pcd;
    if (s == "em-pe") return Method::em_pe;
    if (s == "cd") return Method::cd;
    if (s == "pcd") return Method::pcd;
    fail(ErrorCode::invalid_argument, "unknown method '" + s + "' (expected em-cd, em-pcd, em-pe, cd or pcd)");
}

void TrainConfig::validate(std::size_t data_size) const {
    require(k >= 1, ErrorCode::invalid_argument, "k must be at least 1");
    require(batch_size >= 1 && batch_size <= data_size, ErrorCode::invalid_argument,
            "batch_size must be in [1, K] (K = " + std::to_string(data_size) + ")");
    require(learning_rate > 0.0 && std::isfinite(learning_rate), ErrorCode::invalid_argument,
            "learning_rate must be > 0");
    require(lr_tau > 0.0, ErrorCode::invalid_argument, "lr_tau must be > 0");
    require(estep_multiplier >= 1, ErrorCode::invalid_argument, "estep_multiplier must be at least 1");
    require(eval_every >= 1, ErrorCode::invalid_argument, "eval_every must be at least 1");
    require(threads >= 1, ErrorCode::invalid_argument, "threads must be at least 1");
}

double lr_schedule(double base, std::size_t epoch, LrPolicy policy, double tau) {
    if (policy == LrPolicy::constant) return base;
    return base / (1.0 + static_cast<double>(epoch) / tau);
}

namespace {

constexpr std::uint64_t kPcdStreamTag = 0x70636400;

using Clock = std::chrono::steady_clock;

struct Loop {
    const TrainConfig& config;
    const EvalHook& hook;
    const TrainObserver& observer;
    BoltzmannMachine& machine;
    TrainTrace trace;
    Clock::time_point start = Clock::now();

    void evaluate(std::size_t epoch, const BoltzmannMachine& epoch_start) {
        TraceRecord rec;
        rec.epoch = epoch;
        // The rate the epoch that just finished used.
        rec.alpha = lr_schedule(config.learning_rate, epoch ? epoch - 1 : 0, config.lr_policy, config.lr_tau);
        if (hook) hook(EvalContext{epoch, machine, epoch_start}, rec);
        rec.wall_seconds = std::chrono::duration<double>(Clock::now() - start).count();
        trace.records.push_back(rec);
    }

    bool due(std::size_t done) const { return done % config.eval_every == 0 || done == config.epochs; }

    void apply(const GradientUpdate& g, double alpha, std::size_t epoch, std::size_t batch) {
        try {
            machine.apply_update(g.dW, g.db, alpha);
        } catch (const Error& e) {
            if (e.code() != ErrorCode::non_finite) throw;
            fail(ErrorCode::non_finite, std::string("training diverged at epoch ") + std::to_string(epoch) +
                                            ", batch " + std::to_string(batch) + ": " + e.what());
        }
    }
};

}  // namespace

TrainResult train_emlike(BoltzmannMachine machine, const BinaryDataSet& data, const TrainConfig& config,
                         const EvalHook& hook, const TrainObserver& observer) {
    require(config.method == Method::em_cd || config.method == Method::em_pcd || config.method == Method::em_pe,
            ErrorCode::invalid_argument, "train_emlike needs an em-* method");
    require(data.dim() == machine.visible(), ErrorCode::dimension_mismatch,
            "data vectors have length " + std::to_string(data.dim()) + " but the machine has " +
                std::to_string(machine.visible()) + " visible units");
    config.validate(data.size());
    machine.check_invariants();
    if (config.epochs == 0) return {std::move(machine), {}};

    const bool rbm = config.connectivity == Connectivity::bipartite;
    std::optional<RbmLayout> layout;
    if (rbm) layout.emplace(machine);
    MStepOptions options;
    options.layout = layout ? &*layout : nullptr;
    options.hidden = config.hidden_statistic;

    const std::size_t n = machine.units();
    const std::size_t m = machine.visible();
    const std::size_t K = data.size();
    CompleteDataSet complete = CompleteDataSet::from_visible(data, n);
    if (rbm && options.hidden == HiddenStatistic::expected) complete.expected_hidden.assign(K * (n - m), 0.0);

    std::optional<ChainState> chains;
    const Streams pcd_streams{mix_seed(config.seed, kPcdStreamTag), 0};
    if (config.method == Method::em_pcd)
        chains = make_chains(n, config.pcd_chains ? config.pcd_chains : config.batch_size, pcd_streams);

    Loop loop{config, hook, observer, machine, {}};
    if (config.eval_initial) loop.evaluate(0, machine);

    const std::size_t steps = config.estep_multiplier * (n - m);
    for (std::size_t t = 0; t < config.epochs; ++t) {
        const Streams streams{config.seed, t};

        // E-step: h_t^(k) ~ p(h | v^(k); theta_t). General machines warm-start
        // from the previous completion.
        parallel_for(K, config.threads, [&](std::size_t d) {
            Rng rng = streams.rng(d, Phase::estep, 0);
            auto row = complete.row(d);
            State x;
            if (layout) {
                x = sample_hidden_given_visible(*layout, data.row(d), rng);
                if (complete.has_expectations()) {
                    const std::size_t h = n - m;
                    layout->hidden_probs(x, std::span<double>(complete.expected_hidden.data() + d * h, h));
                }
            } else if (t == 0) {
                x = sample_hidden_given_visible(machine, data.row(d), steps, rng);
            } else {
                x = sample_hidden_given_visible(machine, data.row(d), steps, rng,
                                                StateView(row.data() + m, n - m));
            }
            std::copy(x.begin(), x.end(), row.begin());
        });
        if (observer.after_estep) observer.after_estep(t, complete);

        const BoltzmannMachine epoch_start = machine;
        const double alpha = lr_schedule(config.learning_rate, t, config.lr_policy, config.lr_tau);
        const auto plan = batches(K, config.batch_size, streams);
        for (std::size_t j = 0; j < plan.size(); ++j) {
            if (observer.before_batch) observer.before_batch(t, j, machine);
            GradientUpdate g;
            switch (config.method) {
                case Method::em_cd: g = cd_gradient(machine, complete, plan[j], config.k, streams, options); break;
                case Method::em_pcd:
                    g = pcd_gradient(machine, complete, plan[j], *chains, config.k, pcd_streams, options);
                    break;
                default: g = pl_gradient(machine, complete, plan[j], options); break;
            }
            loop.apply(g, alpha, t, j);
            if (observer.after_batch) observer.after_batch(t, j, machine);
        }
        if (loop.due(t + 1)) loop.evaluate(t + 1, epoch_start);
    }
    return {std::move(machine), std::move(loop.trace)};
}

TrainResult train_rbm_baseline(BoltzmannMachine machine, const BinaryDataSet& data, const TrainConfig& config,
                               const EvalHook& hook, const TrainObserver& observer) {
    require(config.method == Method::cd || config.method == Method::pcd, ErrorCode::invalid_argument,
            "the RBM baseline supports cd and pcd only");
    require(data.dim() == machine.visible(), ErrorCode::dimension_mismatch,
            "data dimension differs from the visible layer");
    config.validate(data.size());
    machine.check_invariants();
    if (config.epochs == 0) return {std::move(machine), {}};
    const RbmLayout layout(machine);

    std::optional<ChainState> chains;
    const Streams pcd_streams{mix_seed(config.seed, kPcdStreamTag), 0};
    if (config.method == Method::pcd)
        chains = make_chains(machine.units(), config.pcd_chains ? config.pcd_chains : config.batch_size, pcd_streams);

    Loop loop{config, hook, observer, machine, {}};
    if (config.eval_initial) loop.evaluate(0, machine);
    for (std::size_t t = 0; t < config.epochs; ++t) {
        const Streams streams{config.seed, t};
        const BoltzmannMachine epoch_start = machine;
        const double alpha = lr_schedule(config.learning_rate, t, config.lr_policy, config.lr_tau);
        const auto plan = batches(data.size(), config.batch_size, streams);
        for (std::size_t j = 0; j < plan.size(); ++j) {
            if (observer.before_batch) observer.before_batch(t, j, machine);
            const GradientUpdate g =
                config.method == Method::cd
                    ? rbm_cd_gradient_hinton(layout, data, plan[j], config.k, streams, config.hidden_statistic)
                    : rbm_pcd_gradient_hinton(layout, data, plan[j], *chains, config.k, pcd_streams,
                                              config.hidden_statistic);
            loop.apply(g, alpha, t, j);
            if (observer.after_batch) observer.after_batch(t, j, machine);
        }
        if (loop.due(t + 1)) loop.evaluate(t + 1, epoch_start);
    }
    return {std::move(machine), std::move(loop.trace)};
}

TrainResult train(BoltzmannMachine machine, const BinaryDataSet& data, const TrainConfig& config,
                  const EvalHook& hook, const TrainObserver& observer) {
    if (config.method == Method::cd || config.method == Method::pcd)
        return train_rbm_baseline(std::move(machine), data, config, hook, observer);
    return train_emlike(std::move(machine), data, config, hook, observer);
}

}  // namespace bml
