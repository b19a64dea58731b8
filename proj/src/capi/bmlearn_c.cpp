#include "bmlearn/bmlearn.h"

#include <cstring>
#include <new>
#include <string>

#include "config.hpp"
#include "error.hpp"
#include "evaluation.hpp"
#include "machine.hpp"
#include "oracle.hpp"
#include "runner.hpp"

struct bml_machine {
    bml::BoltzmannMachine m;
};
struct bml_dataset {
    bml::BinaryDataSet d;
};
struct bml_config {
    bml::RunConfig c;
};

namespace {

thread_local std::string g_last_error;

bml_status to_status(bml::ErrorCode code) {
    switch (code) {
        case bml::ErrorCode::invalid_argument: return BML_INVALID_ARGUMENT;
        case bml::ErrorCode::dimension_mismatch: return BML_DIMENSION_MISMATCH;
        case bml::ErrorCode::parse_error: return BML_PARSE_ERROR;
        case bml::ErrorCode::io_error: return BML_IO_ERROR;
        case bml::ErrorCode::cap_exceeded: return BML_CAP_EXCEEDED;
        case bml::ErrorCode::not_bipartite: return BML_NOT_BIPARTITE;
        case bml::ErrorCode::non_finite: return BML_NON_FINITE;
    }
    return BML_INTERNAL;
}

// Runs body, translating exceptions into a status and the thread's last error.
template <typename Body>
bml_status guarded(Body&& body) {
    try {
        g_last_error.clear();
        body();
        return BML_OK;
    } catch (const bml::Error& e) {
        g_last_error = e.what();
        return to_status(e.code());
    } catch (const std::bad_alloc&) {
        g_last_error = "out of memory";
        return BML_INTERNAL;
    } catch (const std::exception& e) {
        g_last_error = e.what();
        return BML_INTERNAL;
    }
}

void need(const void* p, const char* what) {
    bml::require(p != nullptr, bml::ErrorCode::invalid_argument, std::string(what) + " must not be NULL");
}

char* dup_string(const std::string& s) {
    char* out = new char[s.size() + 1];
    std::memcpy(out, s.c_str(), s.size() + 1);
    return out;
}

bml::StateView view(const bml_machine* m, const uint8_t* state, size_t length) {
    need(state, "state");
    bml::require(length == m->m.units(), bml::ErrorCode::dimension_mismatch,
                 "state has length " + std::to_string(length) + " but the machine has " +
                     std::to_string(m->m.units()) + " units");
    for (size_t i = 0; i < length; ++i)
        bml::require(state[i] <= 1, bml::ErrorCode::invalid_argument, "state entries must be 0 or 1");
    return {state, length};
}

void check_unit(const bml_machine* m, size_t i) {
    bml::require(i < m->m.units(), bml::ErrorCode::invalid_argument,
                 "unit index " + std::to_string(i) + " out of range");
}

}  // namespace

extern "C" {

const char* bml_last_error(void) { return g_last_error.c_str(); }

const char* bml_status_name(bml_status status) {
    switch (status) {
        case BML_OK: return "ok";
        case BML_INVALID_ARGUMENT: return "invalid argument";
        case BML_DIMENSION_MISMATCH: return "dimension mismatch";
        case BML_PARSE_ERROR: return "parse error";
        case BML_IO_ERROR: return "I/O error";
        case BML_CAP_EXCEEDED: return "enumeration cap exceeded";
        case BML_NOT_BIPARTITE: return "machine is not bipartite";
        case BML_NON_FINITE: return "non-finite value";
        case BML_INTERNAL: return "internal error";
    }
    return "unknown status";
}

const char* bml_version(void) { return bml::kVersion; }
const char* bml_rng_algorithm(void) { return bml::kRngAlgorithm; }
void bml_string_free(char* s) { delete[] s; }

// ---- machines -------------------------------------------------------------

bml_status bml_machine_new(size_t units, size_t visible, bml_machine** out) {
    return guarded([&] {
        need(out, "out");
        *out = new bml_machine{bml::BoltzmannMachine(units, visible)};
    });
}

bml_status bml_machine_init_random(size_t units, size_t visible, uint64_t seed, double scale, int bipartite,
                                   bml_machine** out) {
    return guarded([&] {
        need(out, "out");
        *out = new bml_machine{bml::init_random(units, visible, seed, scale,
                                                bipartite ? bml::Connectivity::bipartite : bml::Connectivity::full)};
    });
}

bml_status bml_machine_load(const char* path, bml_machine** out) {
    return guarded([&] {
        need(path, "path");
        need(out, "out");
        *out = new bml_machine{bml::load_machine_file(path)};
    });
}

bml_status bml_machine_save(const bml_machine* machine, const char* path) {
    return guarded([&] {
        need(machine, "machine");
        need(path, "path");
        bml::save_machine_file(machine->m, path);
    });
}

bml_status bml_machine_from_text(const char* text, bml_machine** out) {
    return guarded([&] {
        need(text, "text");
        need(out, "out");
        *out = new bml_machine{bml::from_text(text)};
    });
}

bml_status bml_machine_to_text(const bml_machine* machine, char** out) {
    return guarded([&] {
        need(machine, "machine");
        need(out, "out");
        *out = dup_string(bml::to_text(machine->m));
    });
}

bml_status bml_machine_clone(const bml_machine* machine, bml_machine** out) {
    return guarded([&] {
        need(machine, "machine");
        need(out, "out");
        *out = new bml_machine{machine->m};
    });
}

void bml_machine_free(bml_machine* machine) { delete machine; }

size_t bml_machine_units(const bml_machine* machine) { return machine ? machine->m.units() : 0; }
size_t bml_machine_visible(const bml_machine* machine) { return machine ? machine->m.visible() : 0; }

bml_status bml_machine_is_bipartite(const bml_machine* machine, int* out) {
    return guarded([&] {
        need(machine, "machine");
        need(out, "out");
        *out = machine->m.is_bipartite() ? 1 : 0;
    });
}

bml_status bml_machine_equal(const bml_machine* a, const bml_machine* b, int* out) {
    return guarded([&] {
        need(a, "a");
        need(b, "b");
        need(out, "out");
        *out = a->m == b->m ? 1 : 0;
    });
}

bml_status bml_machine_weight(const bml_machine* machine, size_t i, size_t j, double* out) {
    return guarded([&] {
        need(machine, "machine");
        need(out, "out");
        check_unit(machine, i);
        check_unit(machine, j);
        *out = machine->m.weight(i, j);
    });
}

bml_status bml_machine_set_weight(bml_machine* machine, size_t i, size_t j, double value) {
    return guarded([&] {
        need(machine, "machine");
        check_unit(machine, i);
        check_unit(machine, j);
        machine->m.set_weight(i, j, value);
    });
}

bml_status bml_machine_bias(const bml_machine* machine, size_t i, double* out) {
    return guarded([&] {
        need(machine, "machine");
        need(out, "out");
        check_unit(machine, i);
        *out = machine->m.bias(i);
    });
}

bml_status bml_machine_set_bias(bml_machine* machine, size_t i, double value) {
    return guarded([&] {
        need(machine, "machine");
        check_unit(machine, i);
        machine->m.set_bias(i, value);
    });
}

bml_status bml_machine_energy(const bml_machine* machine, const uint8_t* state, size_t length, double* out) {
    return guarded([&] {
        need(machine, "machine");
        need(out, "out");
        *out = bml::energy(machine->m, view(machine, state, length));
    });
}

bml_status bml_machine_conditional(const bml_machine* machine, const uint8_t* state, size_t length, size_t i,
                                   double* out) {
    return guarded([&] {
        need(machine, "machine");
        need(out, "out");
        check_unit(machine, i);
        *out = bml::conditional_prob(machine->m, view(machine, state, length), i);
    });
}

// ---- oracle ---------------------------------------------------------------

size_t bml_enumeration_cap(void) { return bml::enumeration_cap(); }

bml_status bml_set_enumeration_cap(size_t cap) { return guarded([&] { bml::set_enumeration_cap(cap); }); }

bml_status bml_oracle_log_z(const bml_machine* machine, double* out) {
    return guarded([&] {
        need(machine, "machine");
        need(out, "out");
        *out = bml::exact_distribution(machine->m).log_z;
    });
}

bml_status bml_oracle_visible_marginal(const bml_machine* machine, double* out, size_t length) {
    return guarded([&] {
        need(machine, "machine");
        need(out, "out");
        const auto p = bml::visible_marginal_exact(machine->m);
        bml::require(length == p.size(), bml::ErrorCode::dimension_mismatch,
                     "output buffer must hold 2^visible = " + std::to_string(p.size()) + " entries");
        std::copy(p.begin(), p.end(), out);
    });
}

bml_status bml_oracle_moments(const bml_machine* machine, size_t limit, double* first, double* pair) {
    return guarded([&] {
        need(machine, "machine");
        need(first, "first");
        need(pair, "pair");
        const auto mv = bml::exact_moments(bml::exact_distribution(machine->m), limit);
        for (size_t i = 0; i < limit; ++i) {
            first[i] = mv.first(static_cast<Eigen::Index>(i));
            for (size_t j = 0; j < limit; ++j)
                pair[i * limit + j] = mv.pair(static_cast<Eigen::Index>(i), static_cast<Eigen::Index>(j));
        }
    });
}

bml_status bml_kl_divergence(const double* q, const double* p, size_t length, double* out) {
    return guarded([&] {
        need(q, "q");
        need(p, "p");
        need(out, "out");
        *out = bml::kl_divergence({q, length}, {p, length});
    });
}

// ---- data sets --------------------------------------------------------------

bml_status bml_dataset_from_bits(size_t dim, const uint8_t* bits, size_t count, bml_dataset** out) {
    return guarded([&] {
        need(bits, "bits");
        need(out, "out");
        *out = new bml_dataset{bml::BinaryDataSet(dim, std::vector<uint8_t>(bits, bits + dim * count))};
    });
}

bml_status bml_dataset_load(const char* path, bml_dataset** out) {
    return guarded([&] {
        need(path, "path");
        need(out, "out");
        *out = new bml_dataset{bml::load_dataset_file(path)};
    });
}

bml_status bml_dataset_load_mnist(const char* images_path, const char* labels_path, int threshold, int inclusive,
                                  size_t limit, bml_dataset** out) {
    return guarded([&] {
        need(images_path, "images_path");
        need(out, "out");
        const bml::BinarizeOptions opt{threshold, inclusive != 0, limit};
        std::optional<std::string> labels;
        if (labels_path) labels = labels_path;
        *out = new bml_dataset{bml::load_mnist_idx(images_path, labels, opt)};
    });
}

bml_status bml_dataset_save(const bml_dataset* data, const char* path) {
    return guarded([&] {
        need(data, "data");
        need(path, "path");
        bml::save_dataset_file(data->d, path);
    });
}

void bml_dataset_free(bml_dataset* data) { delete data; }
size_t bml_dataset_size(const bml_dataset* data) { return data ? data->d.size() : 0; }
size_t bml_dataset_dim(const bml_dataset* data) { return data ? data->d.dim() : 0; }

bml_status bml_dataset_row(const bml_dataset* data, size_t k, uint8_t* out, size_t length) {
    return guarded([&] {
        need(data, "data");
        need(out, "out");
        bml::require(k < data->d.size(), bml::ErrorCode::invalid_argument, "row index out of range");
        bml::require(length == data->d.dim(), bml::ErrorCode::dimension_mismatch, "buffer length must equal dim");
        const auto row = data->d.row(k);
        std::copy(row.begin(), row.end(), out);
    });
}

bml_status bml_dataset_distribution(const bml_dataset* data, double* out, size_t length) {
    return guarded([&] {
        need(data, "data");
        need(out, "out");
        const auto p = bml::empirical_distribution(data->d);
        bml::require(length == p.size(), bml::ErrorCode::dimension_mismatch, "buffer must hold 2^dim entries");
        std::copy(p.begin(), p.end(), out);
    });
}

// ---- configuration ----------------------------------------------------------

bml_status bml_config_new(bml_config** out) {
    return guarded([&] {
        need(out, "out");
        *out = new bml_config{};
    });
}

void bml_config_free(bml_config* config) { delete config; }

bml_status bml_config_set(bml_config* config, const char* key, const char* value) {
    return guarded([&] {
        need(config, "config");
        need(key, "key");
        need(value, "value");
        config->c.set(key, value);
    });
}

bml_status bml_config_get(const bml_config* config, const char* key, char** out) {
    return guarded([&] {
        need(config, "config");
        need(key, "key");
        need(out, "out");
        *out = dup_string(config->c.get(key));
    });
}

bml_status bml_config_load_text(bml_config* config, const char* text) {
    return guarded([&] {
        need(config, "config");
        need(text, "text");
        config->c.apply_text(text);
    });
}

bml_status bml_config_load_file(bml_config* config, const char* path) {
    return guarded([&] {
        need(config, "config");
        need(path, "path");
        const std::string text = bml::read_file(path);
        const bml_status st = bml_config_load_text(config, text.c_str());
        if (st != BML_OK) throw bml::Error(bml::ErrorCode::parse_error, std::string(path) + ": " + g_last_error);
    });
}

bml_status bml_config_to_text(const bml_config* config, char** out) {
    return guarded([&] {
        need(config, "config");
        need(out, "out");
        *out = dup_string(config->c.to_text());
    });
}

bml_status bml_config_validate(const bml_config* config) {
    return guarded([&] {
        need(config, "config");
        config->c.validate();
    });
}

bml_status bml_config_metadata(const bml_config* config, char** out) {
    return guarded([&] {
        need(config, "config");
        need(out, "out");
        *out = dup_string(bml::metadata_text(config->c));
    });
}

size_t bml_config_key_count(void) { return bml::config_keys().size(); }

const char* bml_config_key_name(size_t index) {
    const auto& keys = bml::config_keys();
    return index < keys.size() ? keys[index].name.c_str() : nullptr;
}

const char* bml_config_key_help(size_t index) {
    const auto& keys = bml::config_keys();
    return index < keys.size() ? keys[index].help.c_str() : nullptr;
}

// ---- runs -------------------------------------------------------------------

bml_status bml_train(const bml_config* config, bml_machine** model_out, bml_machine** initial_out,
                     char** trace_csv_out) {
    return guarded([&] {
        need(config, "config");
        need(model_out, "model_out");
        need(trace_csv_out, "trace_csv_out");
        const bml::Splits splits = bml::load_data(config->c.data);
        bml::TrainRun run = bml::run_training(config->c, splits);
        *trace_csv_out = dup_string(bml::trace_csv(run.result.trace, config->c.trace_wall_time));
        *model_out = new bml_machine{std::move(run.result.machine)};
        if (initial_out) *initial_out = new bml_machine{std::move(run.initial)};
    });
}

bml_status bml_evaluate(const bml_machine* machine, const bml_config* config, int exact, int ais, char** csv_out) {
    return guarded([&] {
        need(machine, "machine");
        need(config, "config");
        need(csv_out, "csv_out");
        const bml::Splits splits = bml::load_data(config->c.data);
        const auto reports =
            bml::evaluate_model(machine->m, splits, config->c, bml::EvaluateOptions{exact != 0, ais != 0});
        std::string csv = bml::report_csv_header(config->c.eval.thresholds) + "\n";
        for (const auto& r : reports) csv += bml::report_csv_row(r) + "\n";
        *csv_out = dup_string(csv);
    });
}

bml_status bml_ais(const bml_machine* machine, const bml_config* config, double* log_z, double* std_error,
                   double* log_z_base) {
    return guarded([&] {
        need(machine, "machine");
        need(config, "config");
        need(log_z, "log_z");
        const bml::RbmLayout layout(machine->m);
        const auto r = bml::ais_log_z(layout, config->c.eval, bml::Streams{config->c.eval.seed, 0});
        *log_z = r.log_z;
        if (std_error) *std_error = r.std_error;
        if (log_z_base) *log_z_base = r.log_z_base;
    });
}

bml_status bml_generate_data(const bml_config* config, bml_dataset** train_out, bml_dataset** test_out) {
    return guarded([&] {
        need(config, "config");
        need(train_out, "train_out");
        bml::Splits s = bml::load_data(config->c.data);
        *train_out = new bml_dataset{std::move(s.train)};
        if (test_out) *test_out = s.test ? new bml_dataset{std::move(*s.test)} : nullptr;
    });
}

size_t bml_figdata_count(void) { return bml::figdata_experiments().size(); }

const char* bml_figdata_name(size_t index) {
    const auto& names = bml::figdata_experiments();
    return index < names.size() ? names[index].c_str() : nullptr;
}

bml_status bml_figdata_defaults(bml_config* config, const char* experiment) {
    return guarded([&] {
        need(config, "config");
        need(experiment, "experiment");
        for (const auto& [k, v] : bml::figdata_defaults(experiment)) config->c.set(k, v);
    });
}

bml_status bml_figdata(const char* experiment, const bml_config* config, char** csv_out) {
    return guarded([&] {
        need(experiment, "experiment");
        need(config, "config");
        need(csv_out, "csv_out");
        *csv_out = dup_string(bml::run_figdata(experiment, config->c));
    });
}

}  // extern "C"
