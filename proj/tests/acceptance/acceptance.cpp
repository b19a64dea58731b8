// Acceptance suite. `acceptance` runs every criterion; `acceptance 3 5` runs
// a subset. One PASS/FAIL line per criterion; exit status 1 if any fails.

#include <algorithm>
#include <chrono>
#include <cmath>
#include <cstdio>
#include <cstdlib>
#include <functional>
#include <sstream>
#include <string>
#include <vector>

#include "data.hpp"
#include "evaluation.hpp"
#include "mstep.hpp"
#include "oracle.hpp"
#include "reference.hpp"
#include "runner.hpp"
#include "sampling.hpp"
#include "trainer.hpp"

using namespace bml;

namespace {

struct Outcome {
    bool pass = true;
    std::ostringstream detail;

    void require(bool ok, const std::string& what) {
        if (!ok) {
            pass = false;
            detail << "[failed: " << what << "] ";
        }
    }
};

struct Criterion {
    int id;
    const char* name;
    double budget_seconds;
    std::function<void(Outcome&)> run;
};

std::string mnist_images() { return std::string(BML_TEST_DATA) + "/mnist1k-images-idx3-ubyte"; }

// 1. Enumeration against a naive reimplementation.
void oracle_correctness(Outcome& out) {
    Rng pick(101);
    double worst_norm = 0.0, worst_cond = 0.0, worst_marg = 0.0;
    for (int c = 0; c < 50; ++c) {
        const std::size_t n = 2 + c % 9;
        const std::size_t m = 1 + pick.index(n);
        const auto M = ref::random_machine(n, m, 1000 + c, 1.5);
        const auto dist = exact_distribution(M);
        double total = 0.0;
        for (double p : dist.probs) total += p;
        worst_norm = std::max(worst_norm, std::abs(total - 1.0));

        const auto naive = ref::distribution(ref::params(M));
        for (std::uint64_t code = 0; code < dist.probs.size(); ++code) {
            const State x = state_from_code(code, n);
            for (std::size_t i = 0; i < n; ++i) {
                const std::uint64_t on = code | (std::uint64_t{1} << i);
                const std::uint64_t off = code & ~(std::uint64_t{1} << i);
                const double ratio = naive[on] / (naive[on] + naive[off]);
                worst_cond = std::max(worst_cond, std::abs(conditional_prob(M, x, i) - ratio));
            }
        }

        const auto marg = visible_marginal_exact(M);
        std::vector<double> sums(marg.size(), 0.0);
        for (std::uint64_t code = 0; code < dist.probs.size(); ++code) sums[code & (marg.size() - 1)] += dist.probs[code];
        double mtotal = 0.0;
        for (std::size_t v = 0; v < marg.size(); ++v) {
            worst_marg = std::max(worst_marg, std::abs(marg[v] - sums[v]));
            mtotal += marg[v];
        }
        worst_marg = std::max(worst_marg, std::abs(mtotal - 1.0));
    }
    out.require(worst_norm < 1e-12, "normalization within 1e-12");
    out.require(worst_cond < 1e-10, "conditionals within 1e-10");
    out.require(worst_marg < 1e-12, "marginal sums");
    out.detail << "50 machines; max |sum-1| " << worst_norm << ", max conditional error " << worst_cond
               << ", max marginal error " << worst_marg;
}

// 2. Exact KL gradient and pseudo-likelihood gradient against central differences.
void gradient_fidelity(Outcome& out) {
    const double h = 1e-5;
    auto relative_error = [&](BoltzmannMachine& M, const Matrix& dW, const Vector& db, auto objective) {
        double err = 0.0, norm = 0.0;
        auto bump = [&](auto set, double orig, double analytic) {
            set(orig + h);
            const double up = objective();
            set(orig - h);
            const double down = objective();
            set(orig);
            err = std::max(err, std::abs((up - down) / (2 * h) - analytic));
            norm = std::max(norm, std::abs(analytic));
        };
        const std::size_t n = M.units();
        for (std::size_t i = 0; i < n; ++i) {
            bump([&](double v) { M.set_bias(i, v); }, M.bias(i), db(i));
            for (std::size_t j = i + 1; j < n; ++j)
                bump([&](double v) { M.set_weight(i, j, v); }, M.weight(i, j), dW(i, j));
        }
        return err / norm;
    };

    double worst_kl = 0.0, worst_pl = 0.0;
    for (std::uint32_t seed = 1; seed <= 20; ++seed) {
        auto M = ref::random_machine(8, 5, seed);
        const auto target = ref::random_simplex(32, seed + 100);
        const auto g = kl_gradient_check(M, target);
        worst_kl = std::max(worst_kl, relative_error(M, g.dW, g.db, [&] {
                                const auto P = ref::params(M);
                                return ref::kl(target, ref::marginal(P, ref::distribution(P)));
                            }));

        Rng rng(seed + 500);
        CompleteDataSet batch;
        batch.units = 8;
        batch.visible = 5;
        batch.states.resize(25 * 8);
        for (auto& b : batch.states) b = rng.uniform() < 0.5;
        const auto rows = all_rows(25);
        const auto pl = pl_gradient(M, batch, rows);
        worst_pl = std::max(worst_pl, relative_error(M, pl.dW, pl.db,
                                                     [&] { return pseudo_log_likelihood(M, batch, rows); }));
    }
    out.require(worst_kl < 1e-6, "KL gradient relative error < 1e-6");
    out.require(worst_pl < 1e-6, "PL gradient relative error < 1e-6");
    out.detail << "20 machines of 8 units; worst relative error KL " << worst_kl << ", PL " << worst_pl;
}

// 3. Hinton CD and E-step + CD M-step read the same variates.
void cd_identity(Outcome& out) {
    const std::size_t m = 784, h = 20, K = 100;
    const auto all_images = load_mnist_idx(mnist_images());
    std::vector<std::uint8_t> bits;
    for (std::size_t d = 0; d < K; ++d) bits.insert(bits.end(), all_images.row(d).begin(), all_images.row(d).end());
    const BinaryDataSet mnist(m, bits);
    const auto M = init_random(m + h, m, 3, 0.1, Connectivity::bipartite);
    const RbmLayout layout(M);
    const auto rows = all_rows(K);
    const Streams streams{17, 4};

    auto complete = CompleteDataSet::from_visible(mnist, m + h);
    complete.expected_hidden.resize(K * h);
    for (std::size_t d = 0; d < K; ++d) {
        Rng rng = streams.rng(d, Phase::estep, 0);
        const State x = sample_hidden_given_visible(layout, mnist.row(d), rng);
        std::copy(x.begin(), x.end(), complete.row(d).begin());
        layout.hidden_probs(x, std::span<double>(complete.expected_hidden).subspan(d * h, h));
    }
    int compared = 0;
    for (auto stat : {HiddenStatistic::expected, HiddenStatistic::sampled})
        for (std::size_t k : {1u, 10u}) {
            MStepOptions opt;
            opt.layout = &layout;
            opt.hidden = stat;
            const auto em = cd_gradient(M, complete, rows, k, streams, opt);
            const auto hinton = rbm_cd_gradient_hinton(layout, mnist, rows, k, streams, stat);
            const bool same = em.dW == hinton.dW && em.db == hinton.db;
            out.require(same, "bitwise identity for k=" + std::to_string(k));
            ++compared;
        }
    out.detail << "784+20 RBM, one batch of " << K << " MNIST vectors; " << compared
               << " comparisons (k in {1,10}, expected and sampled hidden statistic)";
}

// 4. Rao-Blackwellized Monte Carlo moments against enumeration.
void estimator_consistency(Outcome& out) {
    const int seeds = 20;
    std::size_t within_single = 0, within_mean = 0, components = 0;
    bool monotone = true;
    std::ostringstream medians_text;
    for (std::uint32_t machine = 0; machine < 4; ++machine) {
        const std::size_t m = machine % 2 ? 6 : 10;
        const auto M = ref::random_machine(10, m, 40 + machine, 0.6);
        const auto exact = ref::moments(ref::distribution(ref::params(M)), m);
        auto truth = [&](std::size_t i, std::size_t j) { return i == j ? exact.first[i] : exact.pair[i][j]; };

        std::vector<double> medians;
        for (std::size_t per_unit : {10u, 100u, 1000u}) {
            std::vector<MomentVector> est;
            std::vector<double> err;
            for (int s = 0; s < seeds; ++s) {
                EvalConfig c;
                c.samples_per_unit = per_unit;
                est.push_back(model_moment_estimate(M, c, Streams{static_cast<std::uint64_t>(s), machine * 10 + per_unit}));
                double e = 0.0;
                std::size_t terms = 0;
                for (std::size_t i = 0; i < m; ++i)
                    for (std::size_t j = i; j < m; ++j, ++terms) e += std::abs(est.back().pair(i, j) - truth(i, j));
                err.push_back(e / terms);
            }
            std::nth_element(err.begin(), err.begin() + seeds / 2, err.end());
            medians.push_back(err[seeds / 2]);
            if (per_unit != 1000) continue;

            for (std::size_t i = 0; i < m; ++i)
                for (std::size_t j = i; j < m; ++j) {
                    double mean = 0.0, var = 0.0;
                    for (const auto& e : est) mean += e.pair(i, j) / seeds;
                    for (const auto& e : est) var += (e.pair(i, j) - mean) * (e.pair(i, j) - mean) / (seeds - 1);
                    const double se = std::sqrt(var);
                    for (const auto& e : est) within_single += std::abs(e.pair(i, j) - truth(i, j)) < 3 * se;
                    within_mean += std::abs(mean - truth(i, j)) < 3 * se / std::sqrt(double(seeds));
                    ++components;
                }
        }
        monotone = monotone && medians[1] < medians[0] && medians[2] < medians[1];
        medians_text << " [" << medians[0] << " > " << medians[1] << " > " << medians[2] << "]";
    }
    const double single = double(within_single) / (components * seeds);
    const double pooled = double(within_mean) / components;
    out.require(single >= 0.98, "98% of estimates within 3 SE");
    out.require(pooled >= 0.98, "98% of seed means within 3 SE of the mean");
    out.require(monotone, "median error decreasing in R");
    out.detail << "R = 1000n: " << 100 * single << "% of estimates and " << 100 * pooled
               << "% of 20-seed means within 3 SE; median abs error over R = 10n,100n,1000n:" << medians_text.str();
}

// 5. AIS against the exact partition function.
void ais_accuracy(Outcome& out) {
    double worst = 0.0;
    std::ostringstream each;
    for (std::uint32_t s = 0; s < 5; ++s) {
        const auto M = ref::random_machine(16, 10, 60 + s, 1.0, true);
        const double truth = ref::log_z(ref::params(M));
        EvalConfig c;
        c.ais_temperatures = 1000;
        c.ais_runs = 100;
        const auto r = ais_log_z(RbmLayout(M), c, Streams{s, 0});
        worst = std::max(worst, std::abs(r.log_z - truth));
        each << " " << r.log_z - truth;
    }
    out.require(worst < 0.5, "|AIS - exact| < 0.5 nats");
    out.detail << "5 RBMs of 10+6 units; AIS - exact:" << each.str();
}

// Fraction of consecutive evaluation intervals where both series move the same way.
double trend_agreement(const std::vector<double>& a, const std::vector<double>& b) {
    std::size_t agree = 0;
    for (std::size_t i = 1; i < a.size(); ++i) agree += (a[i] < a[i - 1]) == (b[i] < b[i - 1]);
    return a.size() > 1 ? double(agree) / (a.size() - 1) : 0.0;
}

// 6. Small-machine EM-PCD run with exact metrics.
void small_machine_trend(Outcome& out) {
    RunConfig c;
    for (const auto& [k, v] : figdata_defaults("little-kl")) c.set(k, v);
    const auto splits = load_data(c.data);
    const auto run = run_training(c, splits);
    std::vector<double> kl, err;
    for (const auto& r : run.result.trace.records) {
        kl.push_back(*r.exact_kl);
        err.push_back(*r.avg_error);
    }
    const double agreement = trend_agreement(kl, err);
    out.require(run.result.trace.records.back().epoch == 2000, "trace reaches epoch 2000");
    out.require(kl.back() < kl.front() && err.back() < err.front(), "KL and avg-error decrease");
    out.require(kl.back() < 0.5 * kl.front(), "final KL < 0.5 x initial");
    out.require(agreement >= 0.9, "trend agreement >= 90%");
    out.detail << "13+7 machine, teacher target; KL " << kl.front() << " -> " << kl.back() << ", avg-error "
               << err.front() << " -> " << err.back() << ", trend agreement " << 100 * agreement << "% over "
               << kl.size() - 1 << " intervals";
}

// 7. Method ordering on the MNIST subset.
void mnist_ordering(Outcome& out) {
    RunConfig c;
    for (const auto& [k, v] : figdata_defaults("bm-mnist")) c.set(k, v);
    c.set("train_images", mnist_images());
    c.set("eval_every", "200");
    c.set("eval_samples", "20000");
    const auto splits = load_data(c.data);
    double final_error[3] = {};
    const Method methods[3] = {Method::em_pcd, Method::em_pe, Method::em_cd};
    for (int i = 0; i < 3; ++i) {
        RunConfig mc = c;
        mc.train.method = methods[i];
        final_error[i] = *run_training(mc, splits).result.trace.records.back().avg_error;
        out.detail << to_string(methods[i]) << " " << final_error[i] << "; ";
    }
    out.require(final_error[0] < final_error[1], "EM-PCD < EM-PE");
    out.require(final_error[1] < final_error[2], "EM-PE < EM-CD");
    out.detail << "final avg-error after 200 epochs on 1000 images, 784+50 full BM";
}

// 8. Randomized invariant and reproducibility checks across trainers and estimators.
void invariant_suite(Outcome& out) {
    Rng pick(808);
    int violations = 0;
    const Method methods[5] = {Method::em_cd, Method::em_pcd, Method::em_pe, Method::cd, Method::pcd};
    for (int c = 0; c < 200; ++c) {
        const std::size_t m = 2 + pick.index(5);
        const std::size_t n = m + 1 + pick.index(4);
        const std::size_t K = 8 + pick.index(20);
        std::vector<std::uint8_t> bits(K * m);
        for (auto& b : bits) b = pick.uniform() < 0.4;
        const BinaryDataSet data(m, bits);

        TrainConfig tc;
        tc.method = methods[c % 5];
        tc.connectivity = (tc.method == Method::cd || tc.method == Method::pcd || pick.uniform() < 0.3)
                              ? Connectivity::bipartite
                              : Connectivity::full;
        tc.hidden_statistic = pick.uniform() < 0.5 ? HiddenStatistic::expected : HiddenStatistic::sampled;
        tc.k = 1 + pick.index(3);
        tc.batch_size = 1 + pick.index(K);
        tc.epochs = 2;
        tc.learning_rate = 0.05;
        tc.seed = pick.next_u64();
        const auto M = init_random(n, m, pick.next_u64(), 0.5, tc.connectivity);

        auto fail = [&](bool ok) { violations += !ok; };
        TrainObserver obs;
        obs.after_estep = [&](std::size_t, const CompleteDataSet& set) {
            for (std::size_t k = 0; k < K; ++k)
                fail(std::equal(data.row(k).begin(), data.row(k).end(), set.row(k).begin()));
        };
        obs.after_batch = [&](std::size_t, std::size_t, const BoltzmannMachine& x) {
            fail(x.weights() == x.weights().transpose());
            fail(x.weights().diagonal().cwiseAbs().maxCoeff() == 0.0);
            fail(x.weights().allFinite() && x.biases().allFinite());
            if (tc.connectivity == Connectivity::bipartite) fail(x.is_bipartite());
        };
        const auto a = train(M, data, tc, {}, obs);
        const auto b = train(M, data, tc);
        fail(a.machine == b.machine);

        // Clamped hidden sampling leaves the visible slice alone.
        Rng rng(pick.next_u64());
        const State x = sample_hidden_given_visible(a.machine, data.row(0), 3 * (n - m), rng);
        fail(std::equal(data.row(0).begin(), data.row(0).end(), x.begin()));

        EvalConfig ec;
        ec.samples = 50 * n;
        ec.burn_in = 5;
        ec.estimator = c % 2 ? MomentEstimator::naive : MomentEstimator::rao_blackwell;
        const Streams es{static_cast<std::uint64_t>(c), 1};
        const auto p = model_moment_estimate(a.machine, ec, es);
        const auto q = model_moment_estimate(a.machine, ec, es);
        fail(p.first == q.first && p.pair == q.pair);
        fail(p.pair == p.pair.transpose());
        fail(p.first.minCoeff() >= 0.0 && p.first.maxCoeff() <= 1.0);
        fail(p.pair.minCoeff() >= 0.0 && p.pair.maxCoeff() <= 1.0);
    }
    out.require(violations == 0, "no invariant violations");
    out.detail << "200 randomized cases over 5 trainers and 2 estimators; " << violations << " violations";
}

// 9. Difference statistics on hand-computed 3-unit moments.
void diff_stats_fidelity(Outcome& out) {
    auto moments = [](std::vector<double> first, double p01, double p02, double p12) {
        MomentVector mv = MomentVector::zero(3);
        for (int i = 0; i < 3; ++i) mv.first(i) = mv.pair(i, i) = first[i];
        mv.pair(0, 1) = mv.pair(1, 0) = p01;
        mv.pair(0, 2) = mv.pair(2, 0) = p02;
        mv.pair(1, 2) = mv.pair(2, 1) = p12;
        return mv;
    };
    const auto th = default_thresholds();
    const auto q = moments({0.5, 0.5, 0.5}, 0.2, 0.2, 0.2);
    const auto p = moments({0.6, 0.5, 0.52}, 0.205, 0.23, 0.8);
    // |p_ij - q_ij| = 0.005, 0.03, 0.6, each counted for (i,j) and (j,i), over m^2 = 9.
    const std::vector<double> hand{2.0 / 9, 4.0 / 9, 4.0 / 9, 4.0 / 9, 2.0 / 9, 0.0, 0.0};
    const double hand_avg = (2 * (0.005 + 0.03 + 0.6) + 0.1 + 0.0 + 0.02) / 9;
    const auto s = diff_stats(q, p, 3, th, PairCounting::printed);
    out.require(s.fractions == hand, "fractions equal hand values");
    out.require(std::abs(s.avg_abs_diff - hand_avg) < 1e-15, "avg equals hand value");

    const auto same = diff_stats(q, q, 3, th, PairCounting::printed);
    out.require(same.avg_abs_diff == 0.0, "p = q gives avg 0");
    double lowest_below = 1.0;
    for (std::size_t t = 0; t < th.size(); ++t)
        if (th[t].side == Threshold::Side::below) lowest_below = std::min(lowest_below, same.fractions[t]);
    out.require(lowest_below == 1.0, "p = q gives every '< a' fraction 1");
    const auto same_u = diff_stats(q, q, 3, th, PairCounting::unordered);
    out.detail << "hand values matched exactly; p = q: avg " << same.avg_abs_diff << ", '< a' fraction "
               << lowest_below << " with the i != j sum over m^2 (at most (m^2 - m)/m^2), " << same_u.fractions[0]
               << " with unordered pair counting";
}

}  // namespace

int main(int argc, char** argv) {
    const std::vector<Criterion> all{
        {1, "oracle correctness", 10, oracle_correctness},
        {2, "gradient fidelity", 30, gradient_fidelity},
        {3, "CD equals EM-CD", 5, cd_identity},
        {4, "estimator consistency", 120, estimator_consistency},
        {5, "AIS accuracy", 120, ais_accuracy},
        {6, "small-machine KL and avg-error trend", 600, small_machine_trend},
        {7, "MNIST method ordering", 3600, mnist_ordering},
        {8, "clamping and invariants", 60, invariant_suite},
        {9, "difference statistics", 1, diff_stats_fidelity},
    };
    std::vector<int> wanted;
    for (int i = 1; i < argc; ++i) wanted.push_back(std::atoi(argv[i]));

    bool all_pass = true;
    for (const auto& c : all) {
        if (!wanted.empty() && std::find(wanted.begin(), wanted.end(), c.id) == wanted.end()) continue;
        Outcome out;
        const auto start = std::chrono::steady_clock::now();
        try {
            c.run(out);
        } catch (const std::exception& e) {
            out.pass = false;
            out.detail << "[exception: " << e.what() << "] ";
        }
        const double seconds = std::chrono::duration<double>(std::chrono::steady_clock::now() - start).count();
        out.require(seconds < c.budget_seconds, "runtime budget " + std::to_string(int(c.budget_seconds)) + " s");
        std::printf("criterion %d: %s  %s (%.1f s) %s\n", c.id, out.pass ? "PASS" : "FAIL", c.name, seconds,
                    out.detail.str().c_str());
        std::fflush(stdout);
        all_pass = all_pass && out.pass;
    }
    return all_pass ? 0 : 1;
}
