#include "machine.hpp"

#include <charconv>
#include <cstdio>
#include <filesystem>
#include <fstream>
#include <sstream>

#include "error.hpp"
#include "rng.hpp"

namespace bml {

BoltzmannMachine::BoltzmannMachine(std::size_t units, std::size_t visible)
    : visible_(visible), weights_(Matrix::Zero(units, units)), bias_(Vector::Zero(units)) {
    require(units > 0, ErrorCode::invalid_argument, "machine needs at least one unit");
    require(visible > 0 && visible <= units, ErrorCode::invalid_argument,
            "visible count must be in [1, units]");
}

void BoltzmannMachine::set_weight(std::size_t i, std::size_t j, double w) {
    require(i < units() && j < units(), ErrorCode::invalid_argument, "weight index out of range");
    require(i != j, ErrorCode::invalid_argument, "diagonal weights are fixed at zero");
    require(std::isfinite(w), ErrorCode::non_finite, "weight must be finite");
    weights_(i, j) = w;
    weights_(j, i) = w;
}

void BoltzmannMachine::set_bias(std::size_t i, double b) {
    require(i < units(), ErrorCode::invalid_argument, "bias index out of range");
    require(std::isfinite(b), ErrorCode::non_finite, "bias must be finite");
    bias_(i) = b;
}

void BoltzmannMachine::apply_update(const Matrix& dW, const Vector& db, double rate) {
    const auto n = static_cast<Eigen::Index>(units());
    require(dW.rows() == n && dW.cols() == n && db.size() == n, ErrorCode::dimension_mismatch,
            "update dimensions do not match the machine");
    Matrix w = weights_ + rate * dW;
    Vector b = bias_ + rate * db;
    if (!w.allFinite() || !b.allFinite()) {
        const double max_delta = std::max(dW.cwiseAbs().maxCoeff(), db.cwiseAbs().maxCoeff());
        fail(ErrorCode::non_finite, "parameter update produced non-finite values (max |delta| = " +
                                        format_double(max_delta) + ")");
    }
    w.diagonal().setZero();
    weights_ = std::move(w);
    bias_ = std::move(b);
}

double BoltzmannMachine::local_field(std::size_t i, StateView x) const {
    double a = bias_(static_cast<Eigen::Index>(i));
    const double* row = weights_.data() + i * units();
    for (std::size_t j = 0; j < x.size(); ++j) {
        if (x[j] != 0 && j != i) a += row[j];
    }
    return a;
}

bool BoltzmannMachine::is_bipartite() const {
    const auto m = static_cast<Eigen::Index>(visible_);
    const auto h = static_cast<Eigen::Index>(hidden());
    if (!weights_.topLeftCorner(m, m).isZero(0.0)) return false;
    return h == 0 || weights_.bottomRightCorner(h, h).isZero(0.0);
}

void BoltzmannMachine::check_invariants() const {
    require(weights_.allFinite() && bias_.allFinite(), ErrorCode::non_finite, "machine has non-finite parameters");
    require(weights_.diagonal().isZero(0.0), ErrorCode::invalid_argument, "machine has a nonzero diagonal weight");
    require(weights_ == weights_.transpose(), ErrorCode::invalid_argument, "weight matrix is not symmetric");
}

bool BoltzmannMachine::operator==(const BoltzmannMachine& other) const {
    return visible_ == other.visible_ && units() == other.units() && weights_ == other.weights_ &&
           bias_ == other.bias_;
}

static void check_state(const BoltzmannMachine& machine, StateView x) {
    require(x.size() == machine.units(), ErrorCode::dimension_mismatch,
            "state has " + std::to_string(x.size()) + " entries, machine has " + std::to_string(machine.units()) +
                " units");
}

double energy(const BoltzmannMachine& machine, StateView x) {
    check_state(machine, x);
    const auto& w = machine.weights();
    double pair = 0.0;
    double lin = 0.0;
    for (std::size_t i = 0; i < x.size(); ++i) {
        if (!x[i]) continue;
        lin += machine.bias(i);
        for (std::size_t j = i + 1; j < x.size(); ++j)
            if (x[j]) pair += w(i, j);
    }
    return -(pair + lin);
}

double conditional_prob(const BoltzmannMachine& machine, StateView x, std::size_t i) {
    check_state(machine, x);
    require(i < machine.units(), ErrorCode::invalid_argument, "unit index out of range");
    return sigmoid(machine.local_field(i, x));
}

BoltzmannMachine init_random(std::size_t units, std::size_t visible, std::uint64_t seed, double scale,
                             Connectivity connectivity) {
    require(scale >= 0.0 && std::isfinite(scale), ErrorCode::invalid_argument, "init scale must be >= 0");
    BoltzmannMachine machine(units, visible);
    if (scale == 0.0) return machine;
    Rng rng(mix_seed(seed, static_cast<std::uint64_t>(Phase::init)));
    Matrix a(units, units);
    for (std::size_t i = 0; i < units; ++i)
        for (std::size_t j = 0; j < units; ++j) a(i, j) = scale * rng.normal();
    Matrix w = (a + a.transpose()) / 2.0;
    for (std::size_t i = 0; i < units; ++i) {
        for (std::size_t j = i + 1; j < units; ++j) {
            const bool cross = (i < visible) != (j < visible);
            if (connectivity == Connectivity::full || cross) machine.set_weight(i, j, w(i, j));
        }
    }
    return machine;
}

std::string format_double(double v) {
    char buf[64];
    auto [end, ec] = std::to_chars(buf, buf + sizeof(buf), v);
    return std::string(buf, end);
}

static double parse_double(const std::string& token) {
    double v = 0.0;
    const char* first = token.data();
    const char* last = first + token.size();
    if (!token.empty() && *first == '+') ++first;
    auto [ptr, ec] = std::from_chars(first, last, v);
    require(ec == std::errc() && ptr == last, ErrorCode::parse_error, "bad number '" + token + "'");
    require(std::isfinite(v), ErrorCode::non_finite, "non-finite value '" + token + "' in model file");
    return v;
}

void save_machine(const BoltzmannMachine& machine, std::ostream& out) {
    const std::size_t n = machine.units();
    out << "BM " << n << ' ' << machine.visible() << '\n';
    for (std::size_t i = 0; i < n; ++i) out << (i ? " " : "") << format_double(machine.bias(i));
    out << '\n';
    bool first = true;
    for (std::size_t i = 0; i < n; ++i)
        for (std::size_t j = i + 1; j < n; ++j) {
            out << (first ? "" : " ") << format_double(machine.weight(i, j));
            first = false;
        }
    out << '\n';
}

BoltzmannMachine load_machine(std::istream& in) {
    std::string line;
    require(static_cast<bool>(std::getline(in, line)), ErrorCode::parse_error, "empty model stream");
    std::istringstream header(line);
    std::string tag;
    long long n = 0;
    long long m = 0;
    std::string extra;
    header >> tag >> n >> m;
    require(!header.fail() && tag == "BM" && !(header >> extra), ErrorCode::parse_error,
            "model header must be 'BM <n> <m>'");
    require(n > 0 && m > 0 && m <= n, ErrorCode::parse_error, "model header has invalid unit counts");
    const auto units = static_cast<std::size_t>(n);

    require(static_cast<bool>(std::getline(in, line)), ErrorCode::parse_error, "model stream truncated before biases");
    std::istringstream bias_line(line);
    std::vector<double> biases;
    for (std::string tok; bias_line >> tok;) biases.push_back(parse_double(tok));
    require(biases.size() == units, ErrorCode::parse_error,
            "expected " + std::to_string(units) + " biases, found " + std::to_string(biases.size()));

    std::vector<double> weights;
    for (std::string tok; in >> tok;) weights.push_back(parse_double(tok));

    BoltzmannMachine machine(units, static_cast<std::size_t>(m));
    for (std::size_t i = 0; i < units; ++i) machine.set_bias(i, biases[i]);
    const std::size_t upper = units * (units - 1) / 2;
    if (weights.size() == upper) {
        std::size_t k = 0;
        for (std::size_t i = 0; i < units; ++i)
            for (std::size_t j = i + 1; j < units; ++j) machine.set_weight(i, j, weights[k++]);
    } else if (units > 1 && weights.size() == units * units) {
        // Tolerated alternative layout: the full matrix, which must satisfy the invariants.
        for (std::size_t i = 0; i < units; ++i) {
            require(weights[i * units + i] == 0.0, ErrorCode::parse_error, "nonzero diagonal weight in model file");
            for (std::size_t j = i + 1; j < units; ++j) {
                require(weights[i * units + j] == weights[j * units + i], ErrorCode::parse_error,
                        "asymmetric weights: w(" + std::to_string(i) + "," + std::to_string(j) + ") != w(" +
                            std::to_string(j) + "," + std::to_string(i) + ")");
                machine.set_weight(i, j, weights[i * units + j]);
            }
        }
    } else {
        fail(ErrorCode::parse_error, "expected " + std::to_string(upper) + " weights, found " +
                                         std::to_string(weights.size()));
    }
    return machine;
}

std::string to_text(const BoltzmannMachine& machine) {
    std::ostringstream out;
    save_machine(machine, out);
    return out.str();
}

BoltzmannMachine from_text(const std::string& text) {
    std::istringstream in(text);
    return load_machine(in);
}

void write_file_atomic(const std::string& path, const std::string& contents) {
    const std::string tmp = path + ".tmp";
    {
        std::ofstream out(tmp, std::ios::binary | std::ios::trunc);
        require(static_cast<bool>(out), ErrorCode::io_error, "cannot open '" + tmp + "' for writing");
        out << contents;
        out.flush();
        require(static_cast<bool>(out), ErrorCode::io_error, "write to '" + tmp + "' failed");
    }
    std::error_code ec;
    std::filesystem::rename(tmp, path, ec);
    require(!ec, ErrorCode::io_error, "cannot rename '" + tmp + "' to '" + path + "': " + ec.message());
}

std::string read_file(const std::string& path) {
    std::ifstream in(path, std::ios::binary);
    require(static_cast<bool>(in), ErrorCode::io_error, "cannot open '" + path + "'");
    std::ostringstream ss;
    ss << in.rdbuf();
    return ss.str();
}

void save_machine_file(const BoltzmannMachine& machine, const std::string& path) {
    write_file_atomic(path, to_text(machine));
}

BoltzmannMachine load_machine_file(const std::string& path) { return from_text(read_file(path)); }

}  // namespace bml
