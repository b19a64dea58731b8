#pragma once

#include <cstddef>

#include "machine.hpp"

namespace bml {

// First moments E[x_i] and pairwise moments E[x_i x_j] over a prefix of the
// units. The diagonal of `pair` holds E[x_i^2] = E[x_i].
struct MomentVector {
    Vector first;
    Matrix pair;

    std::size_t size() const { return static_cast<std::size_t>(first.size()); }

    static MomentVector zero(std::size_t size) { return {Vector::Zero(size), Matrix::Zero(size, size)}; }

    // Leading `size` units only.
    MomentVector head(std::size_t size) const {
        const auto k = static_cast<Eigen::Index>(size);
        return {first.head(k), pair.topLeftCorner(k, k)};
    }
};

}  // namespace bml
