#pragma once

// Sieve tables, primality, and the W-tricked truncated-divisor-sum majorant.

#include <cstdint>
#include <optional>
#include <span>
#include <vector>

#include "apkit/zn_core.hpp"

namespace apkit {

/// Deterministic Miller-Rabin, exact for every 64-bit input.
bool is_prime_64(std::uint64_t n) noexcept;

/// Euler's totient via trial-division factorization. Throws for n = 0.
std::uint64_t euler_phi(std::uint64_t n);

/// Distinct prime factors of n >= 1, ascending.
std::vector<std::uint64_t> prime_factors(std::uint64_t n);

inline constexpr std::uint64_t kDefaultSieveMemoryBytes = std::uint64_t{2} << 30;

class SieveTables {
 public:
  std::uint64_t limit() const noexcept { return limit_; }
  /// spf(1) = 1, spf(0) = 0.
  std::uint32_t smallest_prime_factor(std::uint64_t n) const { return spf_.at(n); }
  bool is_prime(std::uint64_t n) const { return n >= 2 && spf_.at(n) == n; }
  int mobius(std::uint64_t n) const { return mobius_.at(n); }
  double von_mangoldt(std::uint64_t n) const { return von_mangoldt_.at(n); }
  const std::vector<std::uint32_t>& primes() const noexcept { return primes_; }
  std::span<const std::int8_t> mobius_table() const noexcept { return mobius_; }
  std::span<const double> von_mangoldt_table() const noexcept { return von_mangoldt_; }

 private:
  friend SieveTables build_sieve(std::uint64_t limit, std::uint64_t memory_budget_bytes);

  std::uint64_t limit_ = 0;
  std::vector<std::uint32_t> spf_;
  std::vector<std::uint32_t> primes_;
  std::vector<std::int8_t> mobius_;
  std::vector<double> von_mangoldt_;
};

/// Segmented sieve of Eratosthenes filling smallest-prime-factor, Moebius and
/// von Mangoldt tables for 0..limit. Throws InvalidArgument for limit < 2 and
/// BudgetExceeded if the tables would not fit in memory_budget_bytes.
SieveTables build_sieve(std::uint64_t limit, std::uint64_t memory_budget_bytes = kDefaultSieveMemoryBytes);

/// Parameters of the majorant nu on Z_N.
///
/// R = N^theta, eps_k = 1 / (2^k (k+4)!) by default, theta defaults to
/// 1 / (k 2^{k+4}). At desk-scale N the default theta gives R close to 1,
/// which collapses Lambda_R; experiments therefore pass theta explicitly
/// (typically 1/20 or 1/12).
struct MajorantParams {
  int k = 3;
  std::uint64_t N = 0;
  std::uint64_t w = 3;
  std::uint64_t W = 6;
  double theta = 0.0;
  double epsilon_k = 0.0;

  static MajorantParams make(int k, std::uint64_t N, std::uint64_t w = 3,
                             std::optional<double> theta = std::nullopt,
                             std::optional<double> epsilon_k = std::nullopt);

  static double default_theta(int k) noexcept;
  static double default_epsilon(int k) noexcept;

  double R() const noexcept;
  double log_R() const noexcept;
  /// phi(W) / W.
  double w_density() const noexcept;
  /// Window [ceil(eps_k N), floor(2 eps_k N)]; empty when lo > hi.
  std::uint64_t window_lo() const noexcept;
  std::uint64_t window_hi() const noexcept;
};

/// Product of the primes <= w.
std::uint64_t primorial(std::uint64_t w);

/// (phi(W)/W) log(Wn + 1) when Wn + 1 is prime, else 0. Throws RangeOverflow
/// if Wn + 1 does not fit in 64 bits.
double lambda_tilde(std::uint64_t n, const MajorantParams& params);

/// Lambda_R(n) = sum_{d | n, d <= R} mu(d) log(R / d), for 0 <= n <= limit
/// (entry 0 is 0). Computed by adding mu(d) log(R/d) to every multiple of each
/// squarefree d <= R.
std::vector<double> lambda_r_table(std::uint64_t limit, double R,
                                   std::uint64_t memory_budget_bytes = kDefaultSieveMemoryBytes);

/// nu(n) = (phi(W)/W) Lambda_R(Wn+1)^2 / log R on the window, 1 elsewhere.
GridFunction build_majorant(const MajorantParams& params);

}  // namespace apkit
