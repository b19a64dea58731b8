// Command-line harness over the bmlearn C API.
#include <cstdio>
#include <cstdlib>
#include <filesystem>
#include <fstream>
#include <iostream>
#include <map>
#include <memory>
#include <string>
#include <vector>

#include "CLI11.hpp"
#include "bmlearn/bmlearn.h"

namespace {

struct Failure {
    int code;
    std::string message;
};

void check(bml_status st, const std::string& context = {}) {
    if (st == BML_OK) return;
    std::string msg = std::string(bml_status_name(st)) + ": " + bml_last_error();
    if (!context.empty()) msg = context + ": " + msg;
    throw Failure{st == BML_INVALID_ARGUMENT || st == BML_PARSE_ERROR ? 2 : 1, msg};
}

struct Text {
    char* p = nullptr;
    ~Text() { bml_string_free(p); }
    std::string str() const { return p ? std::string(p) : std::string(); }
};

template <typename T, void (*Free)(T*)>
struct Handle {
    T* p = nullptr;
    ~Handle() { Free(p); }
};
using Machine = Handle<bml_machine, bml_machine_free>;
using Dataset = Handle<bml_dataset, bml_dataset_free>;
using Config = Handle<bml_config, bml_config_free>;

void write_atomic(const std::string& path, const std::string& contents) {
    const std::string tmp = path + ".tmp";
    {
        std::ofstream out(tmp, std::ios::binary);
        out << contents;
        if (!out.flush()) throw Failure{1, "cannot write " + tmp};
    }
    std::error_code ec;
    std::filesystem::rename(tmp, path, ec);
    if (ec) throw Failure{1, "cannot rename " + tmp + " to " + path + ": " + ec.message()};
}

void emit(const std::string& path, const std::string& contents) {
    if (path.empty() || path == "-")
        std::cout << contents;
    else
        write_atomic(path, contents);
}

// Every configuration key exposed as --key-with-dashes. Applied in order:
// experiment defaults, BML_THREADS, --config file, then explicit flags.
struct ConfigFlags {
    std::string file;
    std::vector<std::pair<std::string, std::string>> values;  // key, value
    std::vector<CLI::Option*> options;

    void attach(CLI::App* app) {
        app->add_option("--config", file, "flat key = value configuration file");
        const std::size_t n = bml_config_key_count();
        values.resize(n);
        for (std::size_t i = 0; i < n; ++i) {
            std::string flag = bml_config_key_name(i);
            values[i].first = flag;
            for (auto& c : flag)
                if (c == '_') c = '-';
            options.push_back(app->add_option("--" + flag, values[i].second, bml_config_key_help(i))
                                  ->group("Configuration"));
        }
    }

    void apply(bml_config* cfg, const std::string& experiment = {}) const {
        if (!experiment.empty()) check(bml_figdata_defaults(cfg, experiment.c_str()));
        if (const char* threads = std::getenv("BML_THREADS"); threads && *threads)
            check(bml_config_set(cfg, "threads", threads), "BML_THREADS");
        if (!file.empty()) check(bml_config_load_file(cfg, file.c_str()));
        for (std::size_t i = 0; i < options.size(); ++i)
            if (options[i]->count())
                check(bml_config_set(cfg, values[i].first.c_str(), values[i].second.c_str()),
                      "--" + options[i]->get_name().substr(2));
    }
};

std::string config_value(const bml_config* cfg, const char* key) {
    Text t;
    check(bml_config_get(cfg, key, &t.p));
    return t.str();
}

int cmd_train(const ConfigFlags& flags) {
    Config cfg;
    check(bml_config_new(&cfg.p));
    flags.apply(cfg.p);
    check(bml_config_validate(cfg.p));
    Machine model;
    Text trace, meta;
    check(bml_train(cfg.p, &model.p, nullptr, &trace.p));
    check(bml_machine_save(model.p, config_value(cfg.p, "model_out").c_str()));
    write_atomic(config_value(cfg.p, "trace_out"), trace.str());
    check(bml_config_metadata(cfg.p, &meta.p));
    write_atomic(config_value(cfg.p, "metadata_out"), meta.str());
    return 0;
}

int cmd_evaluate(const ConfigFlags& flags, const std::string& model_path, bool exact, bool ais,
                 const std::string& out) {
    Config cfg;
    check(bml_config_new(&cfg.p));
    flags.apply(cfg.p);
    Machine model;
    check(bml_machine_load(model_path.c_str(), &model.p), model_path);
    Text csv;
    check(bml_evaluate(model.p, cfg.p, exact, ais, &csv.p));
    emit(out, csv.str());
    return 0;
}

std::string fmt(double v) {
    char buf[64];
    std::snprintf(buf, sizeof buf, "%.17g", v);
    return buf;
}

int cmd_oracle(const std::string& model_path, const std::string& target_model, const std::string& target_data,
               std::size_t cap) {
    if (cap) check(bml_set_enumeration_cap(cap));
    Machine model;
    check(bml_machine_load(model_path.c_str(), &model.p), model_path);
    const std::size_t n = bml_machine_units(model.p);
    const std::size_t m = bml_machine_visible(model.p);
    double log_z = 0.0;
    check(bml_oracle_log_z(model.p, &log_z));
    std::vector<double> first(n), pair(n * n);
    check(bml_oracle_moments(model.p, n, first.data(), pair.data()));
    std::cout << "units " << n << "\nvisible " << m << "\nlog_z " << fmt(log_z) << "\n";
    std::cout << "first";
    for (double v : first) std::cout << ' ' << fmt(v);
    std::cout << "\n";
    for (std::size_t i = 0; i < n; ++i) {
        std::cout << "pair " << i;
        for (std::size_t j = 0; j < n; ++j) std::cout << ' ' << fmt(pair[i * n + j]);
        std::cout << "\n";
    }
    if (target_model.empty() && target_data.empty()) return 0;

    std::vector<double> p(std::size_t{1} << m), q(p.size());
    check(bml_oracle_visible_marginal(model.p, p.data(), p.size()));
    if (!target_model.empty()) {
        Machine t;
        check(bml_machine_load(target_model.c_str(), &t.p), target_model);
        if (bml_machine_visible(t.p) != m) throw Failure{1, "target model has a different visible count"};
        check(bml_oracle_visible_marginal(t.p, q.data(), q.size()));
    } else {
        Dataset d;
        check(bml_dataset_load(target_data.c_str(), &d.p), target_data);
        if (bml_dataset_dim(d.p) != m) throw Failure{1, "target data has a different dimension"};
        check(bml_dataset_distribution(d.p, q.data(), q.size()));
    }
    double kl = 0.0;
    check(bml_kl_divergence(q.data(), p.data(), q.size(), &kl));
    std::cout << "kl " << fmt(kl) << "\n";
    return 0;
}

int cmd_ais(const ConfigFlags& flags, const std::string& model_path) {
    Config cfg;
    check(bml_config_new(&cfg.p));
    flags.apply(cfg.p);
    Machine model;
    check(bml_machine_load(model_path.c_str(), &model.p), model_path);
    double log_z = 0.0, se = 0.0, base = 0.0;
    check(bml_ais(model.p, cfg.p, &log_z, &se, &base));
    std::cout << "log_z " << fmt(log_z) << "\nstd_error " << fmt(se) << "\nlog_z_base " << fmt(base) << "\n";
    return 0;
}

int cmd_figdata(const ConfigFlags& flags, const std::string& experiment, const std::string& out) {
    Config cfg;
    check(bml_config_new(&cfg.p));
    flags.apply(cfg.p, experiment);
    Text csv;
    check(bml_figdata(experiment.c_str(), cfg.p, &csv.p));
    emit(out, csv.str());
    return 0;
}

int cmd_gen_data(const ConfigFlags& flags, const std::string& out, const std::string& test_out) {
    Config cfg;
    check(bml_config_new(&cfg.p));
    flags.apply(cfg.p);
    Dataset train, test;
    check(bml_generate_data(cfg.p, &train.p, &test.p));
    check(bml_dataset_save(train.p, out.c_str()));
    if (!test_out.empty()) {
        if (!test.p) throw Failure{2, "--test-out needs --artificial-test-size > 0"};
        check(bml_dataset_save(test.p, test_out.c_str()));
    }
    return 0;
}

}  // namespace

int main(int argc, char** argv) {
    CLI::App app{"Boltzmann machine training with an EM-like method"};
    app.require_subcommand(1);
    app.set_version_flag("--version", std::string(bml_version()));

    auto* train = app.add_subcommand("train", "train a machine; writes model, trace CSV and metadata");
    ConfigFlags train_flags;
    train_flags.attach(train);

    auto* evaluate = app.add_subcommand("evaluate", "evaluation report, one CSV row per data split");
    ConfigFlags eval_flags;
    eval_flags.attach(evaluate);
    std::string eval_model, eval_out;
    bool eval_exact = false, eval_ais = false;
    evaluate->add_option("--model", eval_model, "model file")->required();
    evaluate->add_flag("--exact", eval_exact, "add exact KL and exact avg-error (small machines)");
    evaluate->add_flag("--ais", eval_ais, "add AIS log Z and average log-probabilities (RBMs)");
    evaluate->add_option("--out", eval_out, "CSV output path (default stdout)");

    auto* oracle = app.add_subcommand("oracle", "exact log Z, moments and KL by enumeration");
    std::string oracle_model, oracle_target_model, oracle_target_data;
    std::size_t oracle_cap = 0;
    oracle->add_option("--model", oracle_model, "model file")->required();
    auto* tm = oracle->add_option("--target-model", oracle_target_model, "KL target: visible marginal of this model");
    oracle->add_option("--target-data", oracle_target_data, "KL target: empirical distribution of this DS file")
        ->excludes(tm);
    oracle->add_option("--cap", oracle_cap, "enumeration cap (default 25)");

    auto* ais = app.add_subcommand("ais", "AIS estimate of log Z for an RBM");
    ConfigFlags ais_flags;
    ais_flags.attach(ais);
    std::string ais_model;
    ais->add_option("--model", ais_model, "model file")->required();

    auto* figdata = app.add_subcommand("figdata", "plot-ready CSV for one experiment");
    ConfigFlags fig_flags;
    fig_flags.attach(figdata);
    std::string experiment, fig_out;
    std::vector<std::string> names;
    for (std::size_t i = 0; i < bml_figdata_count(); ++i) names.emplace_back(bml_figdata_name(i));
    figdata->add_option("experiment", experiment, "experiment name")->required()->check(CLI::IsMember(names));
    figdata->add_option("--out", fig_out, "CSV output path (default stdout)");

    auto* gen = app.add_subcommand("gen-data", "sample the artificial data set to DS files");
    ConfigFlags gen_flags;
    gen_flags.attach(gen);
    std::string gen_out, gen_test_out;
    gen->add_option("--out", gen_out, "training set output path")->required();
    gen->add_option("--test-out", gen_test_out, "test set output path");

    try {
        app.parse(argc, argv);
    } catch (const CLI::ParseError& e) {
        // Help and version exit 0; every other parse failure is a usage error.
        const int rc = app.exit(e);
        return rc == 0 ? 0 : 2;
    }

    try {
        if (train->parsed()) return cmd_train(train_flags);
        if (evaluate->parsed()) return cmd_evaluate(eval_flags, eval_model, eval_exact, eval_ais, eval_out);
        if (oracle->parsed()) return cmd_oracle(oracle_model, oracle_target_model, oracle_target_data, oracle_cap);
        if (ais->parsed()) return cmd_ais(ais_flags, ais_model);
        if (figdata->parsed()) return cmd_figdata(fig_flags, experiment, fig_out);
        if (gen->parsed()) return cmd_gen_data(gen_flags, gen_out, gen_test_out);
    } catch (const Failure& f) {
        std::cerr << "error: " << f.message << "\n";
        return f.code;
    }
    return 0;
}
