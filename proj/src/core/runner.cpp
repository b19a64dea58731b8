#include "runner.hpp"

#include <algorithm>
#include <cmath>
#include <memory>

#include "error.hpp"
#include "oracle.hpp"

namespace bml {

Splits load_data(const DataSpec& spec) {
    switch (spec.source) {
        case DataSource::mnist: {
            require(!spec.train_images.empty(), ErrorCode::invalid_argument, "no train_images given");
            BinarizeOptions opt{spec.threshold, spec.threshold_inclusive, spec.limit};
            const auto labels = [](const std::string& p) { return p.empty() ? std::nullopt : std::optional(p); };
            Splits s{load_mnist_idx(spec.train_images, labels(spec.train_labels), opt), std::nullopt, std::nullopt};
            if (!spec.test_images.empty()) {
                opt.limit = spec.test_limit;
                s.test = load_mnist_idx(spec.test_images, labels(spec.test_labels), opt);
            }
            return s;
        }
        case DataSource::file: {
            require(!spec.train_file.empty(), ErrorCode::invalid_argument, "no train_file given");
            BinaryDataSet train = load_dataset_file(spec.train_file);
            Splits s{spec.limit ? train.head(spec.limit) : train, std::nullopt, std::nullopt};
            if (!spec.test_file.empty()) {
                BinaryDataSet test = load_dataset_file(spec.test_file);
                s.test = spec.test_limit ? test.head(spec.test_limit) : test;
            }
            return s;
        }
        case DataSource::artificial: {
            TargetDistribution target =
                make_artificial_target(spec.artificial_seed, spec.artificial_visible, spec.artificial_kind);
            Rng rng(mix_seed(spec.artificial_seed, static_cast<std::uint64_t>(Phase::data)));
            Splits s{sample_target(target, spec.artificial_size, rng), std::nullopt, std::nullopt};
            if (spec.artificial_test_size) s.test = sample_target(target, spec.artificial_test_size, rng);
            s.target = std::move(target);
            return s;
        }
    }
    fail(ErrorCode::invalid_argument, "unknown data source");
}

BoltzmannMachine initial_machine(const RunConfig& config, std::size_t visible) {
    if (!config.init_model.empty()) {
        BoltzmannMachine m = load_machine_file(config.init_model);
        require(m.visible() == visible, ErrorCode::dimension_mismatch,
                "init_model has " + std::to_string(m.visible()) + " visible units but the data has " +
                    std::to_string(visible));
        return m;
    }
    return init_random(visible + config.hidden, visible, config.train.seed, config.init_scale,
                       config.train.connectivity);
}

namespace {

// What the exact oracle compares the model's visible marginal against.
std::optional<std::vector<double>> kl_reference(const Splits& splits, const BinaryDataSet& data) {
    if (splits.target && splits.target->visible == data.dim()) return splits.target->probs;
    if (data.dim() <= 20) return empirical_distribution(data);
    return std::nullopt;
}

}  // namespace

EvalHook make_trace_hook(const RunConfig& config, const Splits& splits) {
    const std::size_t m = splits.train.dim();
    const std::size_t n = m + config.hidden;
    const std::size_t cap = config.enumeration_cap;
    const bool enumerable = n <= cap;

    bool use_kl = false;
    std::optional<std::vector<double>> reference;
    if (config.trace_kl != MetricMode::off) {
        reference = enumerable ? kl_reference(splits, splits.train) : std::nullopt;
        if (config.trace_kl == MetricMode::exact || config.trace_kl == MetricMode::monte_carlo)
            require(reference.has_value(), ErrorCode::cap_exceeded,
                    "trace_kl needs an enumerable machine (n <= enumeration_cap) and visible table");
        use_kl = reference.has_value();
    }
    MetricMode avg = config.trace_avg_error;
    if (avg == MetricMode::automatic) avg = enumerable ? MetricMode::exact : MetricMode::monte_carlo;
    if (avg == MetricMode::exact)
        require(enumerable, ErrorCode::cap_exceeded, "exact avg-error needs n <= enumeration_cap");
    if (!use_kl && avg == MetricMode::off) return {};

    auto q = std::make_shared<MomentVector>(data_moment_estimate(splits.train));
    auto ref = std::make_shared<std::optional<std::vector<double>>>(std::move(reference));
    const EvalConfig eval = config.eval;
    return [=](const EvalContext& ctx, TraceRecord& rec) {
        std::optional<ExactDistribution> dist;
        if (use_kl || avg == MetricMode::exact) dist = exact_distribution(ctx.machine, cap);
        if (use_kl) {
            rec.exact_kl = kl_divergence(**ref, visible_marginal(*dist));
            if (ctx.epoch > 0) rec.augmented_kl = augmented_kl(exact_distribution(ctx.epoch_start, cap), *dist, **ref);
        }
        if (avg == MetricMode::off) return;
        const MomentVector p = avg == MetricMode::exact
                                   ? exact_moments(*dist, ctx.machine.visible())
                                   : model_moment_estimate(ctx.machine, eval, Streams{eval.seed, ctx.epoch});
        rec.avg_error = avg_error(*q, p, ctx.machine.visible());
        rec.avg_abs_diff = diff_stats(*q, p, ctx.machine.visible(), eval.thresholds, eval.counting).avg_abs_diff;
    };
}

TrainRun run_training(const RunConfig& config, const Splits& splits) {
    config.validate();
    BoltzmannMachine init = initial_machine(config, splits.train.dim());
    TrainResult result = train(init, splits.train, config.train, make_trace_hook(config, splits));
    return {std::move(init), std::move(result)};
}

namespace {

std::string cell(const std::optional<double>& v) {
    if (!v) return "";
    if (std::isinf(*v)) return *v > 0 ? "inf" : "-inf";
    return format_double(*v);
}

}  // namespace

std::string trace_csv_header(bool wall_time) {
    return std::string("epoch,alpha,avg_error,exact_kl,augmented_kl,avg_abs_diff") + (wall_time ? ",wall_seconds" : "");
}

std::string trace_csv(const TrainTrace& trace, bool wall_time) {
    std::string s = trace_csv_header(wall_time) + "\n";
    for (const auto& r : trace.records) {
        s += std::to_string(r.epoch) + "," + format_double(r.alpha) + "," + cell(r.avg_error) + "," +
             cell(r.exact_kl) + "," + cell(r.augmented_kl) + "," + cell(r.avg_abs_diff);
        if (wall_time) s += "," + format_double(r.wall_seconds);
        s += "\n";
    }
    return s;
}

std::string metadata_text(const RunConfig& config) {
    return std::string("# bmlearn ") + kVersion + "\n# rng: " + kRngAlgorithm + "\n# eigen: " +
           std::to_string(EIGEN_WORLD_VERSION) + "." + std::to_string(EIGEN_MAJOR_VERSION) + "." +
           std::to_string(EIGEN_MINOR_VERSION) + "\n" + config.to_text();
}

std::vector<EvalReport> evaluate_model(const BoltzmannMachine& machine, const Splits& splits, const RunConfig& config,
                                       const EvaluateOptions& options) {
    config.eval.validate();
    const std::size_t m = machine.visible();
    require(splits.train.dim() == m, ErrorCode::dimension_mismatch,
            "data vectors have length " + std::to_string(splits.train.dim()) + " but the model has " +
                std::to_string(m) + " visible units");
    if (splits.test)
        require(splits.test->dim() == m, ErrorCode::dimension_mismatch, "test vectors do not match the model");

    const MomentVector p = model_moment_estimate(machine, config.eval, Streams{config.eval.seed, 0});
    std::optional<ExactDistribution> dist;
    if (options.exact) {
        require(machine.units() <= config.enumeration_cap, ErrorCode::cap_exceeded,
                "--exact needs n <= enumeration_cap (" + std::to_string(config.enumeration_cap) + ")");
        dist = exact_distribution(machine, config.enumeration_cap);
    }
    std::optional<double> log_z, train_lp, test_lp;
    if (options.ais) {
        const RbmLayout layout(machine);
        log_z = ais_log_z(layout, config.eval, Streams{config.eval.seed, 0}).log_z;
        train_lp = avg_log_prob(layout, splits.train, *log_z);
        if (splits.test) test_lp = avg_log_prob(layout, *splits.test, *log_z);
    }

    std::vector<std::pair<std::string, const BinaryDataSet*>> parts{{"train", &splits.train}};
    if (splits.test) parts.emplace_back("test", &*splits.test);
    std::vector<EvalReport> out;
    for (const auto& [name, data] : parts) {
        const MomentVector q = data_moment_estimate(*data);
        const DiffStats ds = diff_stats(q, p, m, config.eval.thresholds, config.eval.counting);
        EvalReport r;
        r.split = name;
        r.avg_error = avg_error(q, p, m);
        r.avg_abs_diff = ds.avg_abs_diff;
        r.fractions.assign(ds.fractions.begin(), ds.fractions.end());
        if (dist) {
            r.exact_avg_error = avg_error(q, exact_moments(*dist, m), m);
            const auto ref = name == "train" ? kl_reference(splits, *data)
                                             : (data->dim() <= 20 ? std::optional(empirical_distribution(*data))
                                                                  : std::nullopt);
            if (ref) r.exact_kl = kl_divergence(*ref, visible_marginal(*dist));
        }
        r.log_z = log_z;
        r.avg_log_prob_train = train_lp;
        r.avg_log_prob_test = test_lp;
        out.push_back(std::move(r));
    }
    return out;
}

// ---- figure data -------------------------------------------------------

const std::vector<std::string>& figdata_experiments() {
    static const std::vector<std::string> names{"little-kl", "estep-steps", "rbm-mnist", "bm-mnist"};
    return names;
}

std::vector<std::pair<std::string, std::string>> figdata_defaults(const std::string& experiment) {
    if (experiment == "little-kl")
        return {{"data_source", "artificial"}, {"artificial_kind", "teacher"}, {"artificial_size", "2000"},
                {"artificial_visible", "13"},  {"hidden", "7"},                 {"connectivity", "full"},
                {"method", "em-pcd"},          {"k", "1"},                       {"batch_size", "2000"},
                {"epochs", "2000"},            {"eval_every", "20"},             {"trace_kl", "exact"},
                {"trace_avg_error", "exact"}};
    const std::vector<std::pair<std::string, std::string>> mnist{
        {"data_source", "mnist"},  {"data_limit", "1000"}, {"hidden", "50"},
        {"batch_size", "500"},     {"epochs", "200"},      {"eval_every", "10"},
        {"trace_kl", "off"},       {"trace_avg_error", "monte-carlo"}};
    auto with = [&](std::vector<std::pair<std::string, std::string>> extra) {
        auto out = mnist;
        out.insert(out.end(), extra.begin(), extra.end());
        return out;
    };
    if (experiment == "estep-steps") return with({{"connectivity", "full"}, {"k", "10"}});
    if (experiment == "rbm-mnist") return with({{"connectivity", "bipartite"}, {"k", "1"}});
    if (experiment == "bm-mnist") return with({{"connectivity", "full"}, {"k", "10"}});
    fail(ErrorCode::invalid_argument, "unknown experiment '" + experiment + "' (expected little-kl, estep-steps, "
                                      "rbm-mnist or bm-mnist)");
}

std::string run_figdata(const std::string& experiment, const RunConfig& config) {
    (void)figdata_defaults(experiment);  // rejects unknown names
    config.validate();
    const Splits splits = load_data(config.data);

    auto run = [&](Method method, std::size_t multiplier) {
        RunConfig c = config;
        c.train.method = method;
        c.train.estep_multiplier = multiplier;
        return run_training(c, splits).result.trace;
    };

    std::string csv;
    if (experiment == "little-kl") {
        csv = "epoch,method,kl,augmented_kl,avg_error\n";
        for (const auto& r : run(config.train.method, config.train.estep_multiplier).records)
            csv += std::to_string(r.epoch) + "," + to_string(config.train.method) + "," + cell(r.exact_kl) + "," +
                   cell(r.augmented_kl) + "," + cell(r.avg_error) + "\n";
    } else if (experiment == "estep-steps") {
        csv = "epoch,method,estep_multiplier,avg_error\n";
        for (Method method : {Method::em_cd, Method::em_pcd, Method::em_pe})
            for (std::size_t mult : {std::size_t{1}, std::size_t{10}})
                for (const auto& r : run(method, mult).records)
                    csv += std::to_string(r.epoch) + "," + to_string(method) + "," + std::to_string(mult) + "," +
                           cell(r.avg_error) + "\n";
    } else {
        csv = "epoch,method,avg_error\n";
        std::vector<Method> methods{Method::em_cd, Method::em_pcd, Method::em_pe};
        if (experiment == "rbm-mnist") methods = {Method::cd, Method::em_cd, Method::pcd, Method::em_pcd, Method::em_pe};
        for (Method method : methods)
            for (const auto& r : run(method, config.train.estep_multiplier).records)
                csv += std::to_string(r.epoch) + "," + to_string(method) + "," + cell(r.avg_error) + "\n";
    }
    return csv;
}

}  // namespace bml
