#pragma once

#include <complex>
#include <vector>

#include "apkit/zn_core.hpp"

namespace apkit {

using Complex = std::complex<double>;

/// Unnormalized DFT of arbitrary length: out[k] = sum_x in[x] e(sign * x k / n),
/// sign = -1 forward, +1 inverse. Power-of-two lengths use radix-2
/// Cooley-Tukey, other lengths go through Bluestein's chirp-z transform.
std::vector<Complex> dft(std::vector<Complex> in, int sign);

/// f^(xi) = E_x f(x) e(-x xi / N).
std::vector<Complex> fourier_coefficients(const GridFunction& f);

/// g(x) = sum_xi c(xi) e(x xi / N), real part (coefficients must be
/// Hermitian for the result to be real).
GridFunction fourier_synthesis(const CyclicGroup& group, std::span<const Complex> coefficients);

}  // namespace apkit
