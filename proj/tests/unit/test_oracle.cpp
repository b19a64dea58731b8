#include <algorithm>
#include <cmath>
#include <numeric>
#include <random>

#include "doctest.h"
#include "error.hpp"
#include "oracle.hpp"
#include "reference.hpp"

using namespace bml;

TEST_CASE("exact_distribution examples") {
    const auto uni = exact_distribution(BoltzmannMachine(3, 3));
    for (double p : uni.probs) CHECK(p == doctest::Approx(0.125).epsilon(1e-15));
    CHECK(uni.log_z == doctest::Approx(3 * std::log(2.0)).epsilon(1e-15));

    const double beta = 1.7;
    BoltzmannMachine one(1, 1);
    one.set_bias(0, beta);
    const auto d1 = exact_distribution(one);
    CHECK(d1.probs[0] == doctest::Approx(1 / (1 + std::exp(beta))).epsilon(1e-14));
    CHECK(d1.probs[1] == doctest::Approx(std::exp(beta) / (1 + std::exp(beta))).epsilon(1e-14));
    CHECK(d1.log_z == doctest::Approx(std::log1p(std::exp(beta))).epsilon(1e-14));

    BoltzmannMachine two(2, 2);
    two.set_weight(0, 1, 1.0);
    const auto d2 = exact_distribution(two);
    const double e = std::exp(1.0);
    CHECK(d2.probs[3] == doctest::Approx(e / (3 + e)).epsilon(1e-14));
    CHECK(d2.log_z == doctest::Approx(std::log(3 + e)).epsilon(1e-14));
}

TEST_CASE("exact_distribution refuses machines above the cap") {
    CHECK_THROWS_AS(exact_distribution(BoltzmannMachine(12, 4), 10), Error);
    try {
        exact_distribution(BoltzmannMachine(30, 4));
    } catch (const Error& e) {
        CHECK(e.code() == ErrorCode::cap_exceeded);
    }
}

TEST_CASE("exact_distribution survives extreme parameters") {
    BoltzmannMachine M(4, 4);
    M.set_bias(0, 800.0);
    M.set_weight(1, 2, -900.0);
    M.set_bias(3, -700.0);
    const auto d = exact_distribution(M);
    double s = 0;
    for (double p : d.probs) {
        CHECK(std::isfinite(p));
        s += p;
    }
    CHECK(std::abs(s - 1.0) < 1e-12);
    CHECK(std::isfinite(d.log_z));
}

TEST_CASE("Boltzmann form and conditionals agree with brute force") {
    for (std::uint32_t seed = 1; seed <= 12; ++seed) {
        const std::size_t n = 2 + seed % 9;
        const auto M = ref::random_machine(n, 1 + seed % n, seed, 1.5);
        const auto P = ref::params(M);
        const auto d = exact_distribution(M);
        const auto oracle = ref::distribution(P);
        CHECK(d.log_z == doctest::Approx(ref::log_z(P)).epsilon(1e-12));
        for (std::uint64_t c = 0; c < d.probs.size(); ++c) {
            CHECK(d.probs[c] == doctest::Approx(oracle[c]).epsilon(1e-12));
            CHECK(d.probs[c] == doctest::Approx(std::exp(ref::neg_energy(P, c) - d.log_z)).epsilon(1e-12));
        }
        for (std::uint64_t c = 0; c < d.probs.size(); ++c) {
            const State x = state_from_code(c, n);
            for (std::size_t i = 0; i < n; ++i) {
                const std::uint64_t on = c | (std::uint64_t{1} << i), off = c & ~(std::uint64_t{1} << i);
                const double ratio = oracle[on] / (oracle[on] + oracle[off]);
                CHECK(std::abs(conditional_prob(M, x, i) - ratio) < 1e-10);
            }
        }
    }
}

TEST_CASE("state codes use bit i = x_i") {
    CHECK(state_code(State{1, 0, 1}) == 5);
    CHECK(state_from_code(6, 3) == State{0, 1, 1});
    for (std::uint64_t c = 0; c < 32; ++c) CHECK(state_code(state_from_code(c, 5)) == c);
}

TEST_CASE("visible marginal examples and brute-force sums") {
    const auto M = ref::random_machine(5, 5, 3);
    CHECK(visible_marginal_exact(M) == exact_distribution(M).probs);

    for (double p : visible_marginal_exact(BoltzmannMachine(6, 3))) CHECK(p == doctest::Approx(0.125));

    BoltzmannMachine two(2, 1);
    two.set_weight(0, 1, 1.0);
    const double e = std::exp(1.0);
    CHECK(visible_marginal_exact(two)[1] == doctest::Approx((1 + e) / (3 + e)).epsilon(1e-14));

    for (std::uint32_t seed = 20; seed < 30; ++seed) {
        const auto R = ref::random_machine(9, 4, seed);
        const auto P = ref::params(R);
        const auto want = ref::marginal(P, ref::distribution(P));
        const auto got = visible_marginal_exact(R);
        double s = 0;
        for (std::size_t v = 0; v < want.size(); ++v) {
            CHECK(got[v] == doctest::Approx(want[v]).epsilon(1e-12));
            s += got[v];
        }
        CHECK(std::abs(s - 1.0) < 1e-12);
    }
}

TEST_CASE("kl_divergence examples") {
    const std::vector<double> p{0.2, 0.3, 0.5};
    CHECK(kl_divergence(p, p) == 0.0);
    CHECK(kl_divergence(std::vector<double>{1, 0}, std::vector<double>{0.5, 0.5}) ==
          doctest::Approx(std::log(2.0)).epsilon(1e-15));
    CHECK(std::isinf(kl_divergence(std::vector<double>{0.5, 0.5}, std::vector<double>{1, 0})));
    CHECK_THROWS_AS(kl_divergence(std::vector<double>{1}, std::vector<double>{0.5, 0.5}), Error);
    CHECK_THROWS_AS(kl_divergence(std::vector<double>{0.5, 0.6}, std::vector<double>{0.5, 0.5}), Error);
}

TEST_CASE("kl_divergence is non-negative and zero only at equality") {
    for (std::uint32_t seed = 1; seed <= 50; ++seed) {
        const auto q = ref::random_simplex(16, seed);
        const auto p = ref::random_simplex(16, seed + 1000);
        const double d = kl_divergence(q, p);
        CHECK(d > 0.0);
        CHECK(d == doctest::Approx(ref::kl(q, p)).epsilon(1e-12));
        CHECK(std::abs(kl_divergence(q, q)) < 1e-15);
    }
}

TEST_CASE("exact_moments examples and brute force") {
    const auto uni = exact_moments(exact_distribution(BoltzmannMachine(4, 2)), 4);
    for (Eigen::Index i = 0; i < 4; ++i) {
        CHECK(uni.first(i) == doctest::Approx(0.5));
        for (Eigen::Index j = 0; j < 4; ++j)
            if (i != j) CHECK(uni.pair(i, j) == doctest::Approx(0.25));
    }
    BoltzmannMachine two(2, 2);
    two.set_weight(0, 1, 1.0);
    const double e = std::exp(1.0);
    CHECK(exact_moments(exact_distribution(two), 2).pair(0, 1) == doctest::Approx(e / (3 + e)).epsilon(1e-14));

    BoltzmannMachine one(1, 1);
    one.set_bias(0, -0.4);
    CHECK(exact_moments(exact_distribution(one), 1).first(0) == doctest::Approx(ref::logistic(-0.4)).epsilon(1e-14));

    const auto M = ref::random_machine(8, 3, 77);
    const auto want = ref::moments(ref::distribution(ref::params(M)), 5);
    const auto got = exact_moments(exact_distribution(M), 5);
    REQUIRE(got.size() == 5);
    for (std::size_t i = 0; i < 5; ++i) {
        CHECK(got.first(i) == doctest::Approx(want.first[i]).epsilon(1e-12));
        for (std::size_t j = 0; j < 5; ++j) CHECK(got.pair(i, j) == doctest::Approx(want.pair[i][j]).epsilon(1e-12));
    }
    CHECK_THROWS_AS(exact_moments(exact_distribution(M), 9), Error);
}

TEST_CASE("distribution permutes with the units") {
    for (std::uint32_t seed = 1; seed <= 5; ++seed) {
        const std::size_t n = 7;
        const auto M = ref::random_machine(n, n, seed);
        std::vector<std::size_t> perm(n);
        std::iota(perm.begin(), perm.end(), 0);
        std::shuffle(perm.begin(), perm.end(), std::mt19937(seed));
        // Unit i of M becomes unit perm[i] of N.
        BoltzmannMachine N(n, n);
        for (std::size_t i = 0; i < n; ++i) {
            N.set_bias(perm[i], M.bias(i));
            for (std::size_t j = i + 1; j < n; ++j) N.set_weight(perm[i], perm[j], M.weight(i, j));
        }
        const auto dm = exact_distribution(M);
        const auto dn = exact_distribution(N);
        CHECK(dn.log_z == doctest::Approx(dm.log_z).epsilon(1e-13));
        for (std::uint64_t c = 0; c < dm.probs.size(); ++c) {
            std::uint64_t pc = 0;
            for (std::size_t i = 0; i < n; ++i)
                if (ref::bit(c, i)) pc |= std::uint64_t{1} << perm[i];
            CHECK(dn.probs[pc] == doctest::Approx(dm.probs[c]).epsilon(1e-12));
        }
    }
}

TEST_CASE("completion moments and augmented KL against brute force") {
    const auto M = ref::random_machine(6, 3, 5);
    const auto P = ref::params(M);
    const auto joint = ref::distribution(P);
    const auto pv = ref::marginal(P, joint);
    const auto q = ref::random_simplex(8, 9);
    std::vector<double> qbar(joint.size());
    for (std::uint64_t c = 0; c < joint.size(); ++c) qbar[c] = q[c & 7] * joint[c] / pv[c & 7];
    const auto want = ref::moments(qbar, 6);
    const auto got = completion_moments(exact_distribution(M), q);
    for (std::size_t i = 0; i < 6; ++i) {
        CHECK(got.first(i) == doctest::Approx(want.first[i]).epsilon(1e-12));
        for (std::size_t j = 0; j < 6; ++j) CHECK(got.pair(i, j) == doctest::Approx(want.pair[i][j]).epsilon(1e-12));
    }

    const auto M2 = ref::random_machine(6, 3, 6);
    const auto joint2 = ref::distribution(ref::params(M2));
    CHECK(augmented_kl(exact_distribution(M), exact_distribution(M2), q) ==
          doctest::Approx(ref::kl(qbar, joint2)).epsilon(1e-12));
    // With the same parameters the augmented KL reduces to the visible KL.
    CHECK(augmented_kl(exact_distribution(M), exact_distribution(M), q) ==
          doctest::Approx(ref::kl(q, pv)).epsilon(1e-12));
}

TEST_CASE("enumeration cap is configurable") {
    const auto saved = enumeration_cap();
    set_enumeration_cap(4);
    CHECK_THROWS_AS(exact_distribution(BoltzmannMachine(5, 2)), Error);
    set_enumeration_cap(saved);
    CHECK_NOTHROW(exact_distribution(BoltzmannMachine(5, 2)));
    CHECK_THROWS_AS(set_enumeration_cap(0), Error);
}
