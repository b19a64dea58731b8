#pragma once

#include <cstddef>
#include <optional>
#include <span>
#include <vector>

#include "machine.hpp"
#include "rng.hpp"

namespace bml {

// A machine whose couplings only join visible to hidden units. Holds a
// reference; the machine must outlive the layout.
class RbmLayout {
public:
    explicit RbmLayout(const BoltzmannMachine& machine);

    const BoltzmannMachine& machine() const { return *machine_; }
    std::size_t visible() const { return machine_->visible(); }
    std::size_t hidden() const { return machine_->hidden(); }

    // b_i + sum over the other layer, ascending. Entries of the own layer are ignored.
    double visible_field(std::size_t i, StateView x) const;
    double hidden_field(std::size_t j, StateView x) const;  // j indexes hidden units from 0

    // p(h_j = 1 | v) for every hidden unit, from the visible slice of x.
    void hidden_probs(StateView x, std::span<double> out) const;
    void visible_probs(StateView x, std::span<double> out) const;

private:
    const BoltzmannMachine* machine_;
};

// Local fields a_i = b_i + sum_{j != i} w_ij x_j kept in step with a state,
// so a single-unit update costs O(1) unless the unit flips.
class FieldCache {
public:
    FieldCache(const BoltzmannMachine& machine, State x);

    const State& state() const { return x_; }
    State&& release() { return std::move(x_); }
    double field(std::size_t i) const { return field_[i]; }
    double prob(std::size_t i) const { return sigmoid(field_[i]); }

    // Sets x_i = (u < p(x_i = 1 | x_{-i})).
    void update(std::size_t i, double u);

private:
    const BoltzmannMachine* machine_;
    State x_;
    std::vector<double> field_;
};

// One single-site update of unit i; consumes exactly one uniform.
State gibbs_update(const BoltzmannMachine& machine, StateView x, std::size_t i, Rng& rng);

// Visible units clamped; `steps` random-scan updates over hidden units (two
// uniforms each: site, then value). Without `init` the hidden units start as
// independent Bernoulli(1/2) draws.
State sample_hidden_given_visible(const BoltzmannMachine& machine, StateView visible, std::size_t steps, Rng& rng,
                                  std::optional<StateView> init = std::nullopt);

// Exact one-shot draw: h_j ~ Bernoulli(p(h_j = 1 | v)) independently, in
// ascending j, one uniform each.
State sample_hidden_given_visible(const RbmLayout& layout, StateView visible, Rng& rng);

// Resample all visible units given the hidden ones, then all hidden units
// given the new visible ones. Consumes m + (n - m) uniforms.
void rbm_block_step(const RbmLayout& layout, State& x, Rng& rng);

enum class ScanOrder { random, systematic };

// sweeps * n single-site updates over all units.
void gibbs_sweep_all(const BoltzmannMachine& machine, State& x, std::size_t sweeps, Rng& rng,
                     ScanOrder order = ScanOrder::random);
void gibbs_sweep_all(FieldCache& chain, std::size_t sweeps, Rng& rng, ScanOrder order = ScanOrder::random);

// Persistent fantasy particles. `advances` counts how many times the chains
// have been moved and keys their next random streams.
struct ChainState {
    std::size_t units = 0;
    std::vector<State> states;
    std::uint64_t advances = 0;
};

// `count` chains with independent Bernoulli(1/2) entries.
ChainState make_chains(std::size_t units, std::size_t count, const Streams& streams);

}  // namespace bml
