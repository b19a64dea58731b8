#pragma once

#include <cstddef>
#include <cstdint>
#include <string>
#include <vector>

#include "data.hpp"
#include "evaluation.hpp"
#include "oracle.hpp"
#include "trainer.hpp"

namespace bml {

enum class DataSource { mnist, artificial, file };

// Where training (and optional test) vectors come from.
struct DataSpec {
    DataSource source = DataSource::artificial;
    std::string train_images;
    std::string train_labels;
    std::string test_images;
    std::string test_labels;
    std::size_t limit = 0;       // keep the first N training vectors; 0 keeps all
    std::size_t test_limit = 0;
    int threshold = 128;
    bool threshold_inclusive = true;
    std::string train_file;      // DS text files for source=file
    std::string test_file;
    std::size_t artificial_size = 2000;
    std::size_t artificial_test_size = 0;
    std::uint64_t artificial_seed = 1;
    std::size_t artificial_visible = 13;
    TargetKind artificial_kind = TargetKind::teacher;
};

enum class MetricMode { automatic, exact, monte_carlo, off };

// Everything one CLI run needs. Serialized as flat "key = value" lines; the
// same text loads back into an identical configuration.
struct RunConfig {
    TrainConfig train;
    EvalConfig eval;
    DataSpec data;
    std::size_t hidden = 7;
    double init_scale = 0.01;
    std::string init_model;      // start from this model file instead of init_random
    MetricMode trace_avg_error = MetricMode::automatic;
    MetricMode trace_kl = MetricMode::automatic;
    std::size_t enumeration_cap = kDefaultEnumerationCap;
    std::string model_out = "model.bm";
    std::string trace_out = "trace.csv";
    std::string metadata_out = "run.meta";
    bool trace_wall_time = false;

    void set(const std::string& key, const std::string& value);
    std::string get(const std::string& key) const;
    void validate() const;

    std::string to_text() const;
    // Applies "key = value" lines on top of the current values; all or nothing.
    void apply_text(const std::string& text);
    static RunConfig from_text(const std::string& text);
    static RunConfig from_file(const std::string& path);
};

struct ConfigKey {
    std::string name;
    std::string help;
};

// Every recognised key, in serialization order.
const std::vector<ConfigKey>& config_keys();

// Accepts "--batch-size" / "batch-size" / "batch_size".
std::string normalize_key(std::string key);

}  // namespace bml
