#pragma once

#include <cstddef>
#include <span>

namespace apkit {

// Pairwise (tree) summation. The tree shape depends only on the length of the
// input, so results are bit-reproducible.
double pairwise_sum(std::span<const double> values) noexcept;

}  // namespace apkit
