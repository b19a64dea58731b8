#pragma once

#include <cstddef>
#include <span>
#include <vector>

#include "data.hpp"
#include "machine.hpp"
#include "moments.hpp"
#include "rng.hpp"
#include "sampling.hpp"

namespace bml {

// Parameter direction for W += rate * dW, b += rate * db.
struct GradientUpdate {
    Matrix dW;
    Vector db;

    static GradientUpdate zero(std::size_t units) { return {Matrix::Zero(units, units), Vector::Zero(units)}; }
    void mask_bipartite(std::size_t visible);
};

// Each visible vector paired with its current hidden completion. When the
// machine is an RBM the E-step can also record p(h | v; theta_t), which lets
// the M-step use the hidden expectation instead of the single draw.
struct CompleteDataSet {
    std::size_t units = 0;
    std::size_t visible = 0;
    std::vector<std::uint8_t> states;      // size() x units, row-major
    std::vector<double> expected_hidden;   // size() x (units - visible) or empty

    std::size_t size() const { return units ? states.size() / units : 0; }
    StateView row(std::size_t k) const { return {states.data() + k * units, units}; }
    std::span<std::uint8_t> row(std::size_t k) { return {states.data() + k * units, units}; }
    bool has_expectations() const { return !expected_hidden.empty(); }
    std::span<const double> hidden_expectation(std::size_t k) const {
        const std::size_t h = units - visible;
        return {expected_hidden.data() + k * h, h};
    }

    // Visible vectors from `data`, hidden units zero.
    static CompleteDataSet from_visible(const BinaryDataSet& data, std::size_t units);
};

// Running sums of x_i and x_i x_j. Each entry receives its contributions in
// the order rows are added; zero entries contribute nothing.
class MomentAccumulator {
public:
    explicit MomentAccumulator(std::size_t size);

    void add(StateView x);
    void add(std::span<const double> x);
    std::size_t count() const { return count_; }
    MomentVector finish() const;

private:
    std::size_t count_ = 0;
    Vector first_;
    Matrix pair_;
    std::vector<std::size_t> active_;
};

// Which statistic stands in for hidden units of an RBM in the moments.
enum class HiddenStatistic { sampled, expected };

struct MStepOptions {
    const RbmLayout* layout = nullptr;  // set for RBMs: block sampling and bipartite masking
    HiddenStatistic hidden = HiddenStatistic::sampled;
};

// All rows of `batch`, in order.
std::vector<std::size_t> all_rows(std::size_t count);

MomentVector data_moments(const CompleteDataSet& batch, std::span<const std::size_t> rows);
MomentVector data_moments(const CompleteDataSet& batch);

GradientUpdate moment_difference(const MomentVector& positive, const MomentVector& negative);

// CD-k on complete data: chains start at the batch rows and take k full
// sweeps (k block steps for an RBM). The stream for row d, step s is
// streams.rng(d, cd_chain, s).
GradientUpdate cd_gradient(const BoltzmannMachine& machine, const CompleteDataSet& batch,
                           std::span<const std::size_t> rows, std::size_t k, const Streams& streams,
                           const MStepOptions& options = {});

// PCD: advances the persistent chains k sweeps, then contrasts the batch with
// them. The chains' advance counter selects the stream round.
GradientUpdate pcd_gradient(const BoltzmannMachine& machine, const CompleteDataSet& batch,
                            std::span<const std::size_t> rows, ChainState& chains, std::size_t k,
                            const Streams& streams, const MStepOptions& options = {});

// Gradient of the mean log pseudo-likelihood; deterministic.
GradientUpdate pl_gradient(const BoltzmannMachine& machine, const CompleteDataSet& batch,
                           std::span<const std::size_t> rows, const MStepOptions& options = {});

// Mean log pseudo-likelihood, used for finite-difference checks.
double pseudo_log_likelihood(const BoltzmannMachine& machine, const CompleteDataSet& batch,
                             std::span<const std::size_t> rows);

// Hinton's CD-k for RBMs on visible data. For row d the hidden draw from the
// data uses streams.rng(d, estep, 0) and half-step pair s uses
// streams.rng(d, cd_chain, s), so it reads the same variates as an E-step
// followed by cd_gradient.
GradientUpdate rbm_cd_gradient_hinton(const RbmLayout& layout, const BinaryDataSet& data,
                                      std::span<const std::size_t> rows, std::size_t k, const Streams& streams,
                                      HiddenStatistic hidden = HiddenStatistic::expected);

// Hinton-style PCD for RBMs: data positive phase with p(h | v), chains advanced by block steps.
GradientUpdate rbm_pcd_gradient_hinton(const RbmLayout& layout, const BinaryDataSet& data,
                                       std::span<const std::size_t> rows, ChainState& chains, std::size_t k,
                                       const Streams& streams, HiddenStatistic hidden = HiddenStatistic::expected);

}  // namespace bml
