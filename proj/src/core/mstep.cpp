#include "mstep.hpp"

#include <numeric>

#include "error.hpp"

namespace bml {

void GradientUpdate::mask_bipartite(std::size_t visible) {
    const auto m = static_cast<Eigen::Index>(visible);
    const auto h = dW.rows() - m;
    dW.topLeftCorner(m, m).setZero();
    dW.bottomRightCorner(h, h).setZero();
}

CompleteDataSet CompleteDataSet::from_visible(const BinaryDataSet& data, std::size_t units) {
    require(units >= data.dim(), ErrorCode::dimension_mismatch, "machine has fewer units than the data dimension");
    CompleteDataSet set;
    set.units = units;
    set.visible = data.dim();
    set.states.assign(data.size() * units, 0);
    for (std::size_t k = 0; k < data.size(); ++k) {
        auto src = data.row(k);
        std::copy(src.begin(), src.end(), set.states.begin() + static_cast<std::ptrdiff_t>(k * units));
    }
    return set;
}

MomentAccumulator::MomentAccumulator(std::size_t size)
    : first_(Vector::Zero(static_cast<Eigen::Index>(size))), pair_(Matrix::Zero(size, size)) {
    active_.reserve(size);
}

void MomentAccumulator::add(StateView x) {
    require(x.size() == static_cast<std::size_t>(first_.size()), ErrorCode::dimension_mismatch,
            "moment row has the wrong length");
    active_.clear();
    for (std::size_t i = 0; i < x.size(); ++i)
        if (x[i]) active_.push_back(i);
    for (std::size_t i : active_) {
        first_(static_cast<Eigen::Index>(i)) += 1.0;
        double* row = pair_.data() + i * x.size();
        for (std::size_t j : active_) row[j] += 1.0;
    }
    ++count_;
}

void MomentAccumulator::add(std::span<const double> x) {
    require(x.size() == static_cast<std::size_t>(first_.size()), ErrorCode::dimension_mismatch,
            "moment row has the wrong length");
    active_.clear();
    for (std::size_t i = 0; i < x.size(); ++i)
        if (x[i] != 0.0) active_.push_back(i);
    for (std::size_t i : active_) {
        first_(static_cast<Eigen::Index>(i)) += x[i];
        double* row = pair_.data() + i * x.size();
        for (std::size_t j : active_) row[j] += x[i] * x[j];
    }
    ++count_;
}

MomentVector MomentAccumulator::finish() const {
    require(count_ > 0, ErrorCode::invalid_argument, "no rows were accumulated");
    const double k = static_cast<double>(count_);
    return {first_ / k, pair_ / k};
}

std::vector<std::size_t> all_rows(std::size_t count) {
    std::vector<std::size_t> rows(count);
    std::iota(rows.begin(), rows.end(), std::size_t{0});
    return rows;
}

namespace {

void check_batch(const BoltzmannMachine& machine, const CompleteDataSet& batch, std::span<const std::size_t> rows) {
    require(batch.units == machine.units() && batch.visible == machine.visible(), ErrorCode::dimension_mismatch,
            "complete data does not match the machine");
    require(!rows.empty(), ErrorCode::invalid_argument, "empty batch");
    for (auto r : rows) require(r < batch.size(), ErrorCode::invalid_argument, "batch row out of range");
}

// Row d of the complete data with hidden units replaced by p(h | v; theta_t).
std::vector<double> expected_row(const CompleteDataSet& batch, std::size_t d) {
    std::vector<double> x(batch.units);
    auto s = batch.row(d);
    for (std::size_t i = 0; i < batch.visible; ++i) x[i] = s[i];
    auto e = batch.hidden_expectation(d);
    std::copy(e.begin(), e.end(), x.begin() + static_cast<std::ptrdiff_t>(batch.visible));
    return x;
}

void add_chain_end(MomentAccumulator& acc, const State& x, const MStepOptions& options, std::vector<double>& scratch) {
    if (options.layout && options.hidden == HiddenStatistic::expected) {
        const std::size_t m = options.layout->visible();
        scratch.resize(x.size());
        for (std::size_t i = 0; i < m; ++i) scratch[i] = x[i];
        options.layout->hidden_probs(x, std::span<double>(scratch).subspan(m));
        acc.add(std::span<const double>(scratch));
    } else {
        acc.add(StateView(x));
    }
}

MomentVector positive_phase(const CompleteDataSet& batch, std::span<const std::size_t> rows,
                            const MStepOptions& options) {
    MomentAccumulator acc(batch.units);
    const bool expected = options.layout && options.hidden == HiddenStatistic::expected;
    require(!expected || batch.has_expectations(), ErrorCode::invalid_argument,
            "expected hidden statistic requested but the E-step recorded no expectations");
    for (auto d : rows) {
        if (expected)
            acc.add(std::span<const double>(expected_row(batch, d)));
        else
            acc.add(batch.row(d));
    }
    return acc.finish();
}

GradientUpdate finish_update(GradientUpdate g, const MStepOptions& options) {
    g.dW.diagonal().setZero();
    if (options.layout) g.mask_bipartite(options.layout->visible());
    return g;
}

}  // namespace

MomentVector data_moments(const CompleteDataSet& batch, std::span<const std::size_t> rows) {
    require(!rows.empty(), ErrorCode::invalid_argument, "empty batch");
    MomentAccumulator acc(batch.units);
    for (auto d : rows) acc.add(batch.row(d));
    return acc.finish();
}

MomentVector data_moments(const CompleteDataSet& batch) {
    const auto rows = all_rows(batch.size());
    return data_moments(batch, rows);
}

GradientUpdate moment_difference(const MomentVector& positive, const MomentVector& negative) {
    GradientUpdate g{positive.pair - negative.pair, positive.first - negative.first};
    g.dW.diagonal().setZero();
    return g;
}

GradientUpdate cd_gradient(const BoltzmannMachine& machine, const CompleteDataSet& batch,
                           std::span<const std::size_t> rows, std::size_t k, const Streams& streams,
                           const MStepOptions& options) {
    check_batch(machine, batch, rows);
    require(k >= 1, ErrorCode::invalid_argument, "CD needs k >= 1");
    const MomentVector positive = positive_phase(batch, rows, options);
    MomentAccumulator negative(machine.units());
    std::vector<double> scratch;
    for (auto d : rows) {
        auto src = batch.row(d);
        State x(src.begin(), src.end());
        if (options.layout) {
            for (std::size_t s = 1; s <= k; ++s) {
                Rng rng = streams.rng(d, Phase::cd_chain, s);
                rbm_block_step(*options.layout, x, rng);
            }
        } else {
            FieldCache chain(machine, std::move(x));
            for (std::size_t s = 1; s <= k; ++s) {
                Rng rng = streams.rng(d, Phase::cd_chain, s);
                gibbs_sweep_all(chain, 1, rng);
            }
            x = chain.release();
        }
        add_chain_end(negative, x, options, scratch);
    }
    return finish_update(moment_difference(positive, negative.finish()), options);
}

GradientUpdate pcd_gradient(const BoltzmannMachine& machine, const CompleteDataSet& batch,
                            std::span<const std::size_t> rows, ChainState& chains, std::size_t k,
                            const Streams& streams, const MStepOptions& options) {
    check_batch(machine, batch, rows);
    require(k >= 1, ErrorCode::invalid_argument, "PCD needs k >= 1");
    require(chains.units == machine.units() && !chains.states.empty(), ErrorCode::dimension_mismatch,
            "persistent chains do not match the machine");
    const MomentVector positive = positive_phase(batch, rows, options);
    const Streams round = streams.at_round(chains.advances);
    MomentAccumulator negative(machine.units());
    std::vector<double> scratch;
    for (std::size_t c = 0; c < chains.states.size(); ++c) {
        State& x = chains.states[c];
        if (options.layout) {
            for (std::size_t s = 1; s <= k; ++s) {
                Rng rng = round.rng(c, Phase::pcd_chain, s);
                rbm_block_step(*options.layout, x, rng);
            }
        } else {
            FieldCache chain(machine, std::move(x));
            for (std::size_t s = 1; s <= k; ++s) {
                Rng rng = round.rng(c, Phase::pcd_chain, s);
                gibbs_sweep_all(chain, 1, rng);
            }
            x = chain.release();
        }
        add_chain_end(negative, x, options, scratch);
    }
    ++chains.advances;
    return finish_update(moment_difference(positive, negative.finish()), options);
}

GradientUpdate pl_gradient(const BoltzmannMachine& machine, const CompleteDataSet& batch,
                           std::span<const std::size_t> rows, const MStepOptions& options) {
    check_batch(machine, batch, rows);
    const std::size_t n = machine.units();
    // gt(j, i) accumulates (x_i - sigma_i(x)) x_j, i.e. the transpose of the
    // directed gradient, so the inner loop runs over contiguous memory.
    Matrix gt = Matrix::Zero(n, n);
    Vector db = Vector::Zero(static_cast<Eigen::Index>(n));
    std::vector<double> residual(n);
    for (auto d : rows) {
        auto src = batch.row(d);
        FieldCache fields(machine, State(src.begin(), src.end()));
        for (std::size_t i = 0; i < n; ++i) {
            residual[i] = static_cast<double>(src[i]) - fields.prob(i);
            db(static_cast<Eigen::Index>(i)) += residual[i];
        }
        for (std::size_t j = 0; j < n; ++j) {
            if (!src[j]) continue;
            double* row = gt.data() + j * n;
            for (std::size_t i = 0; i < n; ++i) row[i] += residual[i];
        }
    }
    const double count = static_cast<double>(rows.size());
    GradientUpdate g{(gt + gt.transpose()) / count, db / count};
    return finish_update(std::move(g), options);
}

double pseudo_log_likelihood(const BoltzmannMachine& machine, const CompleteDataSet& batch,
                             std::span<const std::size_t> rows) {
    check_batch(machine, batch, rows);
    double total = 0.0;
    for (auto d : rows) {
        auto x = batch.row(d);
        for (std::size_t i = 0; i < machine.units(); ++i) {
            const double a = machine.local_field(i, x);
            // log sigma(a) if x_i = 1, log sigma(-a) otherwise
            total += x[i] ? -softplus(-a) : -softplus(a);
        }
    }
    return total / static_cast<double>(rows.size());
}

namespace {

// Visible-hidden block statistics for an RBM, kept separately from the
// n x n accumulator used on the complete-data path.
struct BlockStats {
    std::size_t m, h;
    std::vector<double> v, hid, vh;  // vh is m x h
    BlockStats(std::size_t m_, std::size_t h_) : m(m_), h(h_), v(m_, 0.0), hid(h_, 0.0), vh(m_ * h_, 0.0) {}

    void add(StateView visible, std::span<const double> hidden) {
        for (std::size_t j = 0; j < h; ++j) hid[j] += hidden[j];
        for (std::size_t i = 0; i < m; ++i) {
            if (!visible[i]) continue;
            v[i] += 1.0;
            double* row = vh.data() + i * h;
            for (std::size_t j = 0; j < h; ++j) row[j] += hidden[j];
        }
    }
};

GradientUpdate block_difference(const BlockStats& pos, const BlockStats& neg, double count) {
    const std::size_t m = pos.m;
    const std::size_t h = pos.h;
    GradientUpdate g = GradientUpdate::zero(m + h);
    for (std::size_t i = 0; i < m; ++i) g.db(static_cast<Eigen::Index>(i)) = pos.v[i] / count - neg.v[i] / count;
    for (std::size_t j = 0; j < h; ++j)
        g.db(static_cast<Eigen::Index>(m + j)) = pos.hid[j] / count - neg.hid[j] / count;
    for (std::size_t i = 0; i < m; ++i)
        for (std::size_t j = 0; j < h; ++j) {
            const double d = pos.vh[i * h + j] / count - neg.vh[i * h + j] / count;
            g.dW(i, m + j) = d;
            g.dW(m + j, i) = d;
        }
    return g;
}

void draw_hidden(const RbmLayout& layout, StateView x, std::span<double> probs, std::span<std::uint8_t> hidden,
                 Rng& rng) {
    for (std::size_t j = 0; j < layout.hidden(); ++j) {
        probs[j] = sigmoid(layout.hidden_field(j, x));
        hidden[j] = rng.uniform() < probs[j] ? 1 : 0;
    }
}

void draw_visible(const RbmLayout& layout, State& x, Rng& rng) {
    for (std::size_t i = 0; i < layout.visible(); ++i)
        x[i] = rng.uniform() < sigmoid(layout.visible_field(i, x)) ? 1 : 0;
}

}  // namespace

GradientUpdate rbm_cd_gradient_hinton(const RbmLayout& layout, const BinaryDataSet& data,
                                      std::span<const std::size_t> rows, std::size_t k, const Streams& streams,
                                      HiddenStatistic hidden) {
    const std::size_t m = layout.visible();
    const std::size_t h = layout.hidden();
    require(data.dim() == m, ErrorCode::dimension_mismatch, "data dimension differs from the visible layer");
    require(k >= 1, ErrorCode::invalid_argument, "CD needs k >= 1");
    require(!rows.empty(), ErrorCode::invalid_argument, "empty batch");
    BlockStats pos(m, h);
    BlockStats neg(m, h);
    State x(m + h);
    std::vector<double> probs(h);
    std::vector<double> stat(h);
    for (auto d : rows) {
        auto v0 = data.row(d);
        std::copy(v0.begin(), v0.end(), x.begin());
        auto hid = std::span<std::uint8_t>(x).subspan(m);
        Rng up = streams.rng(d, Phase::estep, 0);
        draw_hidden(layout, x, probs, hid, up);
        for (std::size_t j = 0; j < h; ++j) stat[j] = hidden == HiddenStatistic::expected ? probs[j] : hid[j];
        pos.add(v0, stat);
        for (std::size_t s = 1; s <= k; ++s) {
            Rng rng = streams.rng(d, Phase::cd_chain, s);
            draw_visible(layout, x, rng);
            draw_hidden(layout, x, probs, hid, rng);
        }
        for (std::size_t j = 0; j < h; ++j) stat[j] = hidden == HiddenStatistic::expected ? probs[j] : hid[j];
        neg.add(StateView(x).first(m), stat);
    }
    return block_difference(pos, neg, static_cast<double>(rows.size()));
}

GradientUpdate rbm_pcd_gradient_hinton(const RbmLayout& layout, const BinaryDataSet& data,
                                       std::span<const std::size_t> rows, ChainState& chains, std::size_t k,
                                       const Streams& streams, HiddenStatistic hidden) {
    const std::size_t m = layout.visible();
    const std::size_t h = layout.hidden();
    require(data.dim() == m, ErrorCode::dimension_mismatch, "data dimension differs from the visible layer");
    require(chains.units == m + h && !chains.states.empty(), ErrorCode::dimension_mismatch,
            "persistent chains do not match the machine");
    require(!rows.empty(), ErrorCode::invalid_argument, "empty batch");
    BlockStats pos(m, h);
    std::vector<double> probs(h);
    State x(m + h);
    for (auto d : rows) {
        auto v0 = data.row(d);
        std::copy(v0.begin(), v0.end(), x.begin());
        layout.hidden_probs(x, probs);
        pos.add(v0, probs);
    }
    BlockStats neg(m, h);
    std::vector<double> stat(h);
    const Streams round = streams.at_round(chains.advances);
    for (std::size_t c = 0; c < chains.states.size(); ++c) {
        State& y = chains.states[c];
        auto hid = std::span<std::uint8_t>(y).subspan(m);
        for (std::size_t s = 1; s <= k; ++s) {
            Rng rng = round.rng(c, Phase::pcd_chain, s);
            draw_visible(layout, y, rng);
            draw_hidden(layout, y, probs, hid, rng);
        }
        for (std::size_t j = 0; j < h; ++j) stat[j] = hidden == HiddenStatistic::expected ? probs[j] : hid[j];
        neg.add(StateView(y).first(m), stat);
    }
    ++chains.advances;
    // Positive and negative phases may have different sizes here.
    const double np = static_cast<double>(rows.size());
    const double nn = static_cast<double>(chains.states.size());
    GradientUpdate g = GradientUpdate::zero(m + h);
    for (std::size_t i = 0; i < m; ++i) g.db(static_cast<Eigen::Index>(i)) = pos.v[i] / np - neg.v[i] / nn;
    for (std::size_t j = 0; j < h; ++j) g.db(static_cast<Eigen::Index>(m + j)) = pos.hid[j] / np - neg.hid[j] / nn;
    for (std::size_t i = 0; i < m; ++i)
        for (std::size_t j = 0; j < h; ++j) {
            const double d = pos.vh[i * h + j] / np - neg.vh[i * h + j] / nn;
            g.dW(i, m + j) = d;
            g.dW(m + j, i) = d;
        }
    return g;
}

}  // namespace bml
