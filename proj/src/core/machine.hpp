#pragma once

#include <cmath>
#include <cstddef>
#include <cstdint>
#include <iosfwd>
#include <span>
#include <string>
#include <vector>

#include <Eigen/Dense>

namespace bml {

using Matrix = Eigen::Matrix<double, Eigen::Dynamic, Eigen::Dynamic, Eigen::RowMajor>;
using Vector = Eigen::VectorXd;

// A binary configuration of all units; entry i is x_i in {0, 1}.
using State = std::vector<std::uint8_t>;
using StateView = std::span<const std::uint8_t>;

enum class Connectivity { full, bipartite };

inline double sigmoid(double a) {
    return a >= 0.0 ? 1.0 / (1.0 + std::exp(-a)) : std::exp(a) / (1.0 + std::exp(a));
}

// log(1 + e^a) without overflow.
inline double softplus(double a) { return a > 0.0 ? a + std::log1p(std::exp(-a)) : std::log1p(std::exp(a)); }

// Fully general Boltzmann machine over n binary units, the first m of which
// are visible. W is kept symmetric with a zero diagonal at all times.
class BoltzmannMachine {
public:
    BoltzmannMachine(std::size_t units, std::size_t visible);

    std::size_t units() const { return static_cast<std::size_t>(bias_.size()); }
    std::size_t visible() const { return visible_; }
    std::size_t hidden() const { return units() - visible_; }

    const Matrix& weights() const { return weights_; }
    const Vector& biases() const { return bias_; }

    double weight(std::size_t i, std::size_t j) const { return weights_(i, j); }
    double bias(std::size_t i) const { return bias_(i); }

    // Sets w_ij and w_ji together. i == j is rejected.
    void set_weight(std::size_t i, std::size_t j, double w);
    void set_bias(std::size_t i, double b);

    // W += rate * dW, b += rate * db. dW must be symmetric with a zero
    // diagonal; a non-finite result throws and leaves the machine untouched.
    void apply_update(const Matrix& dW, const Vector& db, double rate);

    // b_i + sum_{j != i} w_ij x_j, accumulated in ascending j. Every sampler
    // that needs bitwise agreement with another code path goes through here.
    double local_field(std::size_t i, StateView x) const;

    // True when no weight couples two visible or two hidden units.
    bool is_bipartite() const;

    // Throws unless symmetry, zero diagonal and finiteness hold.
    void check_invariants() const;

    bool operator==(const BoltzmannMachine& other) const;

private:
    std::size_t visible_;
    Matrix weights_;
    Vector bias_;
};

// E(x) = -(sum_{i<j} w_ij x_i x_j + sum_i b_i x_i)
double energy(const BoltzmannMachine& machine, StateView x);

// p(x_i = 1 | x_{-i})
double conditional_prob(const BoltzmannMachine& machine, StateView x, std::size_t i);

// Gaussian(0, scale^2) off-diagonal entries, symmetrized as (A + A^T)/2,
// zero biases. With Connectivity::bipartite only visible-hidden couplings
// are drawn.
BoltzmannMachine init_random(std::size_t units, std::size_t visible, std::uint64_t seed, double scale = 0.01,
                             Connectivity connectivity = Connectivity::full);

// Text model format:
//   BM <n> <m>
//   <n biases>
//   <n(n-1)/2 weights, strict upper triangle, row-major>
void save_machine(const BoltzmannMachine& machine, std::ostream& out);
BoltzmannMachine load_machine(std::istream& in);
std::string to_text(const BoltzmannMachine& machine);
BoltzmannMachine from_text(const std::string& text);
void save_machine_file(const BoltzmannMachine& machine, const std::string& path);
BoltzmannMachine load_machine_file(const std::string& path);

// Writes to path + ".tmp" then renames over path.
void write_file_atomic(const std::string& path, const std::string& contents);
std::string read_file(const std::string& path);

// Shortest decimal text that parses back to the same double.
std::string format_double(double v);

}  // namespace bml
