#include "sampling.hpp"

#include "error.hpp"

namespace bml {

RbmLayout::RbmLayout(const BoltzmannMachine& machine) : machine_(&machine) {
    require(machine.is_bipartite(), ErrorCode::not_bipartite,
            "machine has visible-visible or hidden-hidden couplings and is not an RBM");
}

double RbmLayout::visible_field(std::size_t i, StateView x) const {
    const std::size_t n = machine_->units();
    const std::size_t m = visible();
    const double* row = machine_->weights().data() + i * n;
    double a = machine_->bias(i);
    for (std::size_t j = m; j < n; ++j)
        if (x[j]) a += row[j];
    return a;
}

double RbmLayout::hidden_field(std::size_t j, StateView x) const {
    const std::size_t n = machine_->units();
    const std::size_t m = visible();
    const double* row = machine_->weights().data() + (m + j) * n;
    double a = machine_->bias(m + j);
    for (std::size_t i = 0; i < m; ++i)
        if (x[i]) a += row[i];
    return a;
}

void RbmLayout::hidden_probs(StateView x, std::span<double> out) const {
    for (std::size_t j = 0; j < hidden(); ++j) out[j] = sigmoid(hidden_field(j, x));
}

void RbmLayout::visible_probs(StateView x, std::span<double> out) const {
    for (std::size_t i = 0; i < visible(); ++i) out[i] = sigmoid(visible_field(i, x));
}

FieldCache::FieldCache(const BoltzmannMachine& machine, State x)
    : machine_(&machine), x_(std::move(x)), field_(machine.units()) {
    require(x_.size() == machine.units(), ErrorCode::dimension_mismatch, "chain state does not match the machine");
    const std::size_t n = machine.units();
    const auto& w = machine.weights();
    for (std::size_t i = 0; i < n; ++i) field_[i] = machine.bias(i);
    for (std::size_t j = 0; j < n; ++j) {
        if (!x_[j]) continue;
        const double* row = w.data() + j * n;
        for (std::size_t i = 0; i < n; ++i) field_[i] += row[i];
    }
}

void FieldCache::update(std::size_t i, double u) {
    const std::uint8_t next = u < sigmoid(field_[i]) ? 1 : 0;
    if (next == x_[i]) return;
    x_[i] = next;
    const std::size_t n = field_.size();
    const double* row = machine_->weights().data() + i * n;
    double* f = field_.data();
    if (next) {
        for (std::size_t k = 0; k < n; ++k) f[k] += row[k];
    } else {
        for (std::size_t k = 0; k < n; ++k) f[k] -= row[k];
    }
}

State gibbs_update(const BoltzmannMachine& machine, StateView x, std::size_t i, Rng& rng) {
    const double p = conditional_prob(machine, x, i);
    State out(x.begin(), x.end());
    out[i] = rng.uniform() < p ? 1 : 0;
    return out;
}

State sample_hidden_given_visible(const BoltzmannMachine& machine, StateView visible, std::size_t steps, Rng& rng,
                                  std::optional<StateView> init) {
    const std::size_t n = machine.units();
    const std::size_t m = machine.visible();
    require(visible.size() == m, ErrorCode::dimension_mismatch, "visible vector length differs from m");
    State x(n);
    std::copy(visible.begin(), visible.end(), x.begin());
    if (n == m) return x;
    require(steps >= 1, ErrorCode::invalid_argument, "E-step needs at least one update");
    if (init) {
        require(init->size() == n - m, ErrorCode::dimension_mismatch, "initial hidden vector has the wrong length");
        std::copy(init->begin(), init->end(), x.begin() + static_cast<std::ptrdiff_t>(m));
    } else {
        for (std::size_t j = m; j < n; ++j) x[j] = rng.uniform() < 0.5 ? 1 : 0;
    }

    // Only hidden fields are needed; keep them current under hidden flips.
    const std::size_t h = n - m;
    const auto& w = machine.weights();
    std::vector<double> field(h);
    for (std::size_t j = 0; j < h; ++j) field[j] = machine.local_field(m + j, x);
    for (std::size_t s = 0; s < steps; ++s) {
        const std::size_t j = rng.index(h);
        const double u = rng.uniform();
        const std::uint8_t next = u < sigmoid(field[j]) ? 1 : 0;
        if (next == x[m + j]) continue;
        x[m + j] = next;
        const double* row = w.data() + (m + j) * n + m;
        const double sign = next ? 1.0 : -1.0;
        for (std::size_t k = 0; k < h; ++k) field[k] += sign * row[k];
    }
    return x;
}

State sample_hidden_given_visible(const RbmLayout& layout, StateView visible, Rng& rng) {
    const std::size_t m = layout.visible();
    const std::size_t n = layout.machine().units();
    require(visible.size() == m, ErrorCode::dimension_mismatch, "visible vector length differs from m");
    State x(n);
    std::copy(visible.begin(), visible.end(), x.begin());
    for (std::size_t j = 0; j < n - m; ++j) x[m + j] = rng.uniform() < sigmoid(layout.hidden_field(j, x)) ? 1 : 0;
    return x;
}

void rbm_block_step(const RbmLayout& layout, State& x, Rng& rng) {
    const std::size_t m = layout.visible();
    const std::size_t h = layout.hidden();
    require(x.size() == m + h, ErrorCode::dimension_mismatch, "state does not match the RBM");
    // Visible fields read only hidden entries, so updating in place is a block update.
    for (std::size_t i = 0; i < m; ++i) x[i] = rng.uniform() < sigmoid(layout.visible_field(i, x)) ? 1 : 0;
    for (std::size_t j = 0; j < h; ++j) x[m + j] = rng.uniform() < sigmoid(layout.hidden_field(j, x)) ? 1 : 0;
}

void gibbs_sweep_all(FieldCache& chain, std::size_t sweeps, Rng& rng, ScanOrder order) {
    const std::size_t n = chain.state().size();
    for (std::size_t s = 0; s < sweeps; ++s) {
        for (std::size_t t = 0; t < n; ++t) {
            const std::size_t i = order == ScanOrder::random ? rng.index(n) : t;
            chain.update(i, rng.uniform());
        }
    }
}

void gibbs_sweep_all(const BoltzmannMachine& machine, State& x, std::size_t sweeps, Rng& rng, ScanOrder order) {
    require(sweeps >= 1, ErrorCode::invalid_argument, "need at least one sweep");
    FieldCache chain(machine, std::move(x));
    gibbs_sweep_all(chain, sweeps, rng, order);
    x = chain.release();
}

ChainState make_chains(std::size_t units, std::size_t count, const Streams& streams) {
    require(count > 0, ErrorCode::invalid_argument, "need at least one chain");
    ChainState chains;
    chains.units = units;
    chains.states.reserve(count);
    for (std::size_t c = 0; c < count; ++c) {
        Rng rng = streams.rng(c, Phase::pcd_init);
        State x(units);
        for (auto& v : x) v = rng.uniform() < 0.5 ? 1 : 0;
        chains.states.push_back(std::move(x));
    }
    return chains;
}

}  // namespace bml
