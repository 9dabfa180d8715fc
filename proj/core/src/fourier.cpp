#include "apkit/fourier.hpp"

#include <bit>
#include <cmath>
#include <numbers>

#include "apkit/errors.hpp"

namespace apkit {

namespace {

void fft_pow2(std::vector<Complex>& a, int sign) {
  const std::size_t n = a.size();
  for (std::size_t i = 1, j = 0; i < n; ++i) {
    std::size_t bit = n >> 1;
    for (; j & bit; bit >>= 1) j ^= bit;
    j ^= bit;
    if (i < j) std::swap(a[i], a[j]);
  }
  for (std::size_t len = 2; len <= n; len <<= 1) {
    const double angle = sign * 2.0 * std::numbers::pi / static_cast<double>(len);
    // Twiddles computed directly rather than by recurrence to keep the error
    // at O(eps log n).
    std::vector<Complex> w(len / 2);
    for (std::size_t k = 0; k < len / 2; ++k) {
      w[k] = std::polar(1.0, angle * static_cast<double>(k));
    }
    for (std::size_t i = 0; i < n; i += len) {
      for (std::size_t k = 0; k < len / 2; ++k) {
        const Complex u = a[i + k];
        const Complex v = a[i + k + len / 2] * w[k];
        a[i + k] = u + v;
        a[i + k + len / 2] = u - v;
      }
    }
  }
}

}  // namespace

std::vector<Complex> dft(std::vector<Complex> in, int sign) {
  const std::size_t n = in.size();
  if (n == 0) return in;
  if (std::has_single_bit(n)) {
    fft_pow2(in, sign);
    return in;
  }
  // Bluestein: x k = (x^2 + k^2 - (k - x)^2) / 2.
  const std::size_t m = std::bit_ceil(2 * n - 1);
  std::vector<Complex> chirp(n);
  for (std::size_t i = 0; i < n; ++i) {
    // i^2 mod 2n keeps the angle argument small.
    const auto sq = static_cast<std::uint64_t>(i) * i % (2 * static_cast<std::uint64_t>(n));
    chirp[i] = std::polar(1.0, sign * std::numbers::pi * static_cast<double>(sq) / static_cast<double>(n));
  }
  std::vector<Complex> a(m), b(m);
  for (std::size_t i = 0; i < n; ++i) a[i] = in[i] * chirp[i];
  b[0] = std::conj(chirp[0]);
  for (std::size_t i = 1; i < n; ++i) b[i] = b[m - i] = std::conj(chirp[i]);
  fft_pow2(a, -1);
  fft_pow2(b, -1);
  for (std::size_t i = 0; i < m; ++i) a[i] *= b[i];
  fft_pow2(a, +1);
  const double scale = 1.0 / static_cast<double>(m);
  std::vector<Complex> out(n);
  for (std::size_t k = 0; k < n; ++k) out[k] = a[k] * scale * chirp[k];
  return out;
}

std::vector<Complex> fourier_coefficients(const GridFunction& f) {
  std::vector<Complex> in(f.size());
  for (std::size_t i = 0; i < in.size(); ++i) in[i] = f[i];
  auto out = dft(std::move(in), -1);
  const double scale = 1.0 / static_cast<double>(f.size());
  for (auto& c : out) c *= scale;
  return out;
}

GridFunction fourier_synthesis(const CyclicGroup& group, std::span<const Complex> coefficients) {
  if (coefficients.size() != group.size()) throw InvalidArgument("coefficient count does not match the group");
  auto out = dft(std::vector<Complex>(coefficients.begin(), coefficients.end()), +1);
  std::vector<double> values(out.size());
  for (std::size_t i = 0; i < values.size(); ++i) values[i] = out[i].real();
  return GridFunction(group, std::move(values));
}

}  // namespace apkit
