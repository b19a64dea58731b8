#pragma once

#include <cstddef>
#include <span>
#include <vector>

#include "machine.hpp"
#include "moments.hpp"

namespace bml {

inline constexpr std::size_t kDefaultEnumerationCap = 25;

// Process-wide ceiling on the unit count any enumeration will accept.
std::size_t enumeration_cap();
void set_enumeration_cap(std::size_t cap);

// Index of a configuration: bit i of the index is x_i.
std::uint64_t state_code(StateView x);
State state_from_code(std::uint64_t code, std::size_t units);

struct ExactDistribution {
    std::size_t units = 0;
    std::size_t visible = 0;
    std::vector<double> probs;  // size 2^units, indexed by state_code
    double log_z = 0.0;
};

// Brute-force Boltzmann distribution. Refuses machines above `cap` units.
ExactDistribution exact_distribution(const BoltzmannMachine& machine, std::size_t cap = enumeration_cap());

// p(v) = sum_h p(v, h), indexed by the code of v.
std::vector<double> visible_marginal(const ExactDistribution& dist);
std::vector<double> visible_marginal_exact(const BoltzmannMachine& machine, std::size_t cap = enumeration_cap());

// D(q || p) = sum q ln(q/p). Returns +infinity when q puts mass where p has none.
double kl_divergence(std::span<const double> q, std::span<const double> p);

MomentVector exact_moments(const ExactDistribution& dist, std::size_t limit);

// Moments under qbar(x) = q(v) p(h | v; theta) for all units, where q is a
// distribution over the 2^m visible codes.
MomentVector completion_moments(const ExactDistribution& dist, std::span<const double> target_visible);

// D(Q_t(V,H) || P(V,H; after)) with Q_t(v,h) = q(v) p(h | v; before).
double augmented_kl(const ExactDistribution& before, const ExactDistribution& after,
                    std::span<const double> target_visible);

}  // namespace bml
