#include "config.hpp"

#include <algorithm>
#include <charconv>
#include <cmath>
#include <functional>
#include <sstream>

#include "error.hpp"
#include "oracle.hpp"

namespace bml {

namespace {

std::string trim(std::string_view s) {
    const auto b = s.find_first_not_of(" \t\r");
    if (b == std::string_view::npos) return {};
    const auto e = s.find_last_not_of(" \t\r");
    return std::string(s.substr(b, e - b + 1));
}

[[noreturn]] void bad_value(const std::string& key, const std::string& value, const std::string& expected) {
    fail(ErrorCode::parse_error, "bad value '" + value + "' for " + key + " (expected " + expected + ")");
}

template <typename T>
T parse_number(const std::string& key, const std::string& value, const char* expected) {
    T out{};
    const auto [end, ec] = std::from_chars(value.data(), value.data() + value.size(), out);
    if (ec != std::errc{} || end != value.data() + value.size() || value.empty()) bad_value(key, value, expected);
    return out;
}

std::size_t parse_size(const std::string& key, const std::string& v) {
    return parse_number<std::size_t>(key, v, "a non-negative integer");
}
std::uint64_t parse_u64(const std::string& key, const std::string& v) {
    return parse_number<std::uint64_t>(key, v, "a non-negative integer");
}
double parse_real(const std::string& key, const std::string& v) {
    const double x = parse_number<double>(key, v, "a finite number");
    if (!std::isfinite(x)) bad_value(key, v, "a finite number");
    return x;
}
int parse_int(const std::string& key, const std::string& v) { return parse_number<int>(key, v, "an integer"); }

bool parse_bool(const std::string& key, const std::string& v) {
    if (v == "true" || v == "1" || v == "yes" || v == "on") return true;
    if (v == "false" || v == "0" || v == "no" || v == "off") return false;
    bad_value(key, v, "true or false");
}

std::string show(bool b) { return b ? "true" : "false"; }
std::string show(unsigned long v) { return std::to_string(v); }
std::string show(int v) { return std::to_string(v); }
std::string show(double v) { return format_double(v); }

template <typename E>
struct EnumName {
    E value;
    const char* name;
};

template <typename E, std::size_t N>
E parse_enum(const std::string& key, const std::string& v, const EnumName<E> (&names)[N]) {
    for (const auto& n : names)
        if (v == n.name) return n.value;
    std::string expected;
    for (const auto& n : names) expected += (expected.empty() ? "" : ", ") + std::string(n.name);
    bad_value(key, v, "one of " + expected);
}

template <typename E, std::size_t N>
std::string show_enum(E v, const EnumName<E> (&names)[N]) {
    for (const auto& n : names)
        if (v == n.value) return n.name;
    return "?";
}

constexpr EnumName<Method> kMethods[] = {{Method::em_cd, "em-cd"},
                                         {Method::em_pcd, "em-pcd"},
                                         {Method::em_pe, "em-pe"},
                                         {Method::cd, "cd"},
                                         {Method::pcd, "pcd"}};
constexpr EnumName<LrPolicy> kPolicies[] = {{LrPolicy::constant, "constant"}, {LrPolicy::inverse, "inverse"}};
constexpr EnumName<Connectivity> kConnectivity[] = {{Connectivity::full, "full"},
                                                    {Connectivity::bipartite, "bipartite"}};
constexpr EnumName<HiddenStatistic> kHiddenStats[] = {{HiddenStatistic::expected, "expected"},
                                                      {HiddenStatistic::sampled, "sampled"}};
constexpr EnumName<ScanOrder> kScan[] = {{ScanOrder::random, "random"}, {ScanOrder::systematic, "systematic"}};
constexpr EnumName<MomentEstimator> kEstimators[] = {{MomentEstimator::rao_blackwell, "rao-blackwell"},
                                                     {MomentEstimator::naive, "naive"}};
constexpr EnumName<PairCounting> kCounting[] = {{PairCounting::printed, "printed"},
                                                {PairCounting::unordered, "unordered"}};
constexpr EnumName<DataSource> kSources[] = {
    {DataSource::mnist, "mnist"}, {DataSource::artificial, "artificial"}, {DataSource::file, "file"}};
constexpr EnumName<TargetKind> kKinds[] = {{TargetKind::exponential, "exponential"},
                                           {TargetKind::teacher, "teacher"}};
constexpr EnumName<MetricMode> kModes[] = {{MetricMode::automatic, "auto"},
                                           {MetricMode::exact, "exact"},
                                           {MetricMode::monte_carlo, "monte-carlo"},
                                           {MetricMode::off, "off"}};

std::string show_thresholds(const std::vector<Threshold>& ts) {
    std::string s;
    for (const auto& t : ts) s += (s.empty() ? "" : ",") + t.label();
    return s;
}

std::vector<Threshold> parse_thresholds(const std::string& v) {
    std::vector<Threshold> out;
    std::stringstream in(v);
    std::string item;
    while (std::getline(in, item, ',')) out.push_back(parse_threshold(trim(item)));
    require(!out.empty(), ErrorCode::parse_error, "thresholds list is empty");
    return out;
}

struct Entry {
    ConfigKey key;
    std::function<std::string(const RunConfig&)> get;
    std::function<void(RunConfig&, const std::string&)> set;
};

#define BML_NUM(name, field, parser, help)                                                       \
    Entry {                                                                                      \
        {name, help}, [](const RunConfig& c) { return show(c.field); },                          \
            [](RunConfig& c, const std::string& v) { c.field = parser(name, v); }                \
    }
#define BML_ENUM(name, field, table, help)                                                       \
    Entry {                                                                                      \
        {name, help}, [](const RunConfig& c) { return show_enum(c.field, table); },              \
            [](RunConfig& c, const std::string& v) { c.field = parse_enum(name, v, table); }     \
    }
#define BML_STR(name, field, help)                                                               \
    Entry {                                                                                      \
        {name, help}, [](const RunConfig& c) { return c.field; },                                \
            [](RunConfig& c, const std::string& v) { c.field = v; }                              \
    }

const std::vector<Entry>& entries() {
    static const std::vector<Entry> table = {
        BML_ENUM("method", train.method, kMethods, "em-cd, em-pcd, em-pe, cd or pcd"),
        BML_NUM("k", train.k, parse_size, "Gibbs steps (full sweeps) for CD/PCD"),
        BML_NUM("batch_size", train.batch_size, parse_size, "vectors per mini-batch"),
        BML_NUM("learning_rate", train.learning_rate, parse_real, "base learning rate"),
        BML_ENUM("lr_policy", train.lr_policy, kPolicies, "constant or inverse (a0 / (1 + t/tau))"),
        BML_NUM("lr_tau", train.lr_tau, parse_real, "tau of the inverse schedule"),
        BML_NUM("epochs", train.epochs, parse_size, "epoch budget"),
        BML_NUM("estep_multiplier", train.estep_multiplier, parse_size,
                "E-step runs multiplier * (n - m) hidden updates"),
        BML_NUM("eval_every", train.eval_every, parse_size, "epochs between trace evaluations"),
        BML_NUM("eval_initial", train.eval_initial, parse_bool, "evaluate before the first epoch"),
        BML_NUM("seed", train.seed, parse_u64, "training seed"),
        BML_ENUM("connectivity", train.connectivity, kConnectivity, "full or bipartite (RBM)"),
        BML_ENUM("hidden_statistic", train.hidden_statistic, kHiddenStats,
                 "RBM hidden statistic in the moments: expected or sampled"),
        BML_NUM("pcd_chains", train.pcd_chains, parse_size, "persistent chains; 0 uses batch_size"),
        BML_NUM("threads", train.threads, parse_size, "worker threads"),
        BML_NUM("hidden", hidden, parse_size, "hidden units"),
        BML_NUM("init_scale", init_scale, parse_real, "std-dev of the initial couplings"),
        BML_STR("init_model", init_model, "start from this model file"),
        BML_ENUM("data_source", data.source, kSources, "mnist, artificial or file"),
        BML_STR("train_images", data.train_images, "IDX image file"),
        BML_STR("train_labels", data.train_labels, "IDX label file (optional)"),
        BML_STR("test_images", data.test_images, "IDX test image file (optional)"),
        BML_STR("test_labels", data.test_labels, "IDX test label file (optional)"),
        BML_NUM("data_limit", data.limit, parse_size, "keep the first N training vectors; 0 keeps all"),
        BML_NUM("test_limit", data.test_limit, parse_size, "keep the first N test vectors; 0 keeps all"),
        BML_NUM("threshold", data.threshold, parse_int, "binarization threshold"),
        BML_NUM("threshold_inclusive", data.threshold_inclusive, parse_bool,
                "pixel >= threshold is 1 (false: pixel > threshold)"),
        BML_STR("train_file", data.train_file, "DS text data file"),
        BML_STR("test_file", data.test_file, "DS text test file (optional)"),
        BML_NUM("artificial_size", data.artificial_size, parse_size, "training vectors drawn from the target"),
        BML_NUM("artificial_test_size", data.artificial_test_size, parse_size, "test vectors drawn from the target"),
        BML_NUM("artificial_seed", data.artificial_seed, parse_u64, "target construction and sampling seed"),
        BML_NUM("artificial_visible", data.artificial_visible, parse_size, "visible units of the target"),
        BML_ENUM("artificial_kind", data.artificial_kind, kKinds, "exponential or teacher"),
        BML_NUM("eval_samples", eval.samples, parse_size, "R kept samples; 0 uses eval_samples_per_unit * n"),
        BML_NUM("eval_samples_per_unit", eval.samples_per_unit, parse_size, "R per unit when eval_samples is 0"),
        BML_NUM("burn_in", eval.burn_in, parse_size, "evaluation burn-in sweeps per chain"),
        BML_NUM("eval_chains", eval.chains, parse_size, "evaluation chains"),
        BML_ENUM("eval_scan", eval.scan, kScan, "random or systematic"),
        BML_ENUM("estimator", eval.estimator, kEstimators, "rao-blackwell or naive"),
        Entry{{"thresholds", "comma-separated thresholds such as <0.01,>0.9"},
              [](const RunConfig& c) { return show_thresholds(c.eval.thresholds); },
              [](RunConfig& c, const std::string& v) { c.eval.thresholds = parse_thresholds(v); }},
        BML_ENUM("pair_counting", eval.counting, kCounting, "printed (ordered pairs / m^2) or unordered"),
        BML_NUM("ais_temperatures", eval.ais_temperatures, parse_size, "AIS inverse temperatures above zero"),
        BML_NUM("ais_runs", eval.ais_runs, parse_size, "AIS runs"),
        BML_NUM("ais_beta_min", eval.ais_beta_min, parse_real, "smallest positive AIS inverse temperature"),
        BML_NUM("bootstrap", eval.bootstrap, parse_size, "bootstrap resamples for the AIS standard error"),
        BML_NUM("eval_seed", eval.seed, parse_u64, "evaluation seed"),
        BML_ENUM("trace_avg_error", trace_avg_error, kModes, "auto, exact, monte-carlo or off"),
        BML_ENUM("trace_kl", trace_kl, kModes, "auto, exact or off"),
        BML_NUM("enumeration_cap", enumeration_cap, parse_size, "largest unit count the exact oracle accepts"),
        BML_STR("model_out", model_out, "model output path"),
        BML_STR("trace_out", trace_out, "trace CSV path"),
        BML_STR("metadata_out", metadata_out, "metadata path"),
        BML_NUM("trace_wall_time", trace_wall_time, parse_bool, "add a wall_seconds column to the trace"),
    };
    return table;
}

#undef BML_NUM
#undef BML_ENUM
#undef BML_STR

const Entry& find(const std::string& key) {
    const std::string k = normalize_key(key);
    for (const auto& e : entries())
        if (e.key.name == k) return e;
    fail(ErrorCode::invalid_argument, "unknown configuration key '" + key + "'");
}

}  // namespace

std::string normalize_key(std::string key) {
    while (!key.empty() && key.front() == '-') key.erase(key.begin());
    std::replace(key.begin(), key.end(), '-', '_');
    return key;
}

const std::vector<ConfigKey>& config_keys() {
    static const std::vector<ConfigKey> keys = [] {
        std::vector<ConfigKey> out;
        for (const auto& e : entries()) out.push_back(e.key);
        return out;
    }();
    return keys;
}

void RunConfig::set(const std::string& key, const std::string& value) { find(key).set(*this, trim(value)); }

std::string RunConfig::get(const std::string& key) const { return find(key).get(*this); }

void RunConfig::validate() const {
    train.validate(train.batch_size);  // batch_size <= K is checked again once the data is loaded
    eval.validate();
    require(init_scale >= 0.0, ErrorCode::invalid_argument, "init_scale must be >= 0");
    require(enumeration_cap >= 1 && enumeration_cap <= 40, ErrorCode::invalid_argument,
            "enumeration_cap must lie in [1, 40]");
    require(data.threshold >= 0 && data.threshold <= 256, ErrorCode::invalid_argument,
            "threshold must lie in [0, 256]");
    if (train.method == Method::cd || train.method == Method::pcd)
        require(train.connectivity == Connectivity::bipartite, ErrorCode::invalid_argument,
                "cd and pcd are RBM methods; set connectivity = bipartite");
    if (init_model.empty()) {
        switch (data.source) {
            case DataSource::mnist:
                require(!data.train_images.empty(), ErrorCode::invalid_argument, "data_source = mnist needs train_images");
                break;
            case DataSource::file:
                require(!data.train_file.empty(), ErrorCode::invalid_argument, "data_source = file needs train_file");
                break;
            case DataSource::artificial:
                require(data.artificial_size >= 1, ErrorCode::invalid_argument, "artificial_size must be >= 1");
                require(data.artificial_visible >= 1 && data.artificial_visible <= 20, ErrorCode::invalid_argument,
                        "artificial_visible must lie in [1, 20]");
                break;
        }
    }
}

std::string RunConfig::to_text() const {
    std::string s;
    for (const auto& e : entries()) s += e.key.name + " = " + e.get(*this) + "\n";
    return s;
}

RunConfig RunConfig::from_text(const std::string& text) {
    RunConfig c;
    c.apply_text(text);
    return c;
}

void RunConfig::apply_text(const std::string& text) {
    RunConfig c = *this;
    std::stringstream in(text);
    std::string line;
    std::size_t number = 0;
    while (std::getline(in, line)) {
        ++number;
        const std::string t = trim(line);
        if (t.empty() || t.front() == '#') continue;
        const auto eq = t.find('=');
        require(eq != std::string::npos, ErrorCode::parse_error,
                "config line " + std::to_string(number) + ": expected key = value");
        try {
            c.set(trim(std::string_view(t).substr(0, eq)), trim(std::string_view(t).substr(eq + 1)));
        } catch (const Error& e) {
            fail(e.code(), "config line " + std::to_string(number) + ": " + e.what());
        }
    }
    *this = std::move(c);
}

RunConfig RunConfig::from_file(const std::string& path) { return from_text(read_file(path)); }

}  // namespace bml
