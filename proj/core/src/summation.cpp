#include "apkit/summation.hpp"

namespace apkit {

namespace {

constexpr std::size_t kLeafSize = 32;

double sum_range(const double* data, std::size_t n) noexcept {
  if (n <= kLeafSize) {
    double s = 0.0;
    for (std::size_t i = 0; i < n; ++i) s += data[i];
    return s;
  }
  const std::size_t half = n / 2;
  return sum_range(data, half) + sum_range(data + half, n - half);
}

}  // namespace

double pairwise_sum(std::span<const double> values) noexcept {
  return sum_range(values.data(), values.size());
}

}  // namespace apkit
