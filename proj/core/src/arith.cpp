#include "apkit/arith.hpp"

#include <algorithm>
#include <cmath>
#include <limits>
#include <string>

#include "apkit/errors.hpp"
#include "apkit/modular.hpp"
#include "apkit/parallel.hpp"

namespace apkit {

bool is_prime_64(std::uint64_t n) noexcept {
  if (n < 2) return false;
  constexpr std::uint64_t kSmall[] = {2, 3, 5, 7, 11, 13, 17, 19, 23, 29, 31, 37};
  for (auto p : kSmall) {
    if (n % p == 0) return n == p;
  }
  std::uint64_t d = n - 1;
  int s = 0;
  while ((d & 1U) == 0) {
    d >>= 1;
    ++s;
  }
  // The first twelve primes are a deterministic witness set below 3.3e24.
  for (auto a : kSmall) {
    std::uint64_t x = pow_mod(a, d, n);
    if (x == 1 || x == n - 1) continue;
    bool composite = true;
    for (int r = 1; r < s; ++r) {
      x = mul_mod(x, x, n);
      if (x == n - 1) {
        composite = false;
        break;
      }
    }
    if (composite) return false;
  }
  return true;
}

std::vector<std::uint64_t> prime_factors(std::uint64_t n) {
  if (n == 0) throw InvalidArgument("prime_factors(0) is undefined");
  std::vector<std::uint64_t> out;
  for (std::uint64_t p = 2; p <= n / p; p += (p == 2 ? 1 : 2)) {
    if (n % p == 0) {
      out.push_back(p);
      while (n % p == 0) n /= p;
    }
  }
  if (n > 1) out.push_back(n);
  return out;
}

std::uint64_t euler_phi(std::uint64_t n) {
  if (n == 0) throw InvalidArgument("euler_phi(0) is undefined");
  std::uint64_t result = n;
  for (auto p : prime_factors(n)) result = result / p * (p - 1);
  return result;
}

// ------------------------------------------------------------------ sieving

namespace {

constexpr std::uint64_t kSegment = std::uint64_t{1} << 16;

std::vector<std::uint32_t> simple_primes(std::uint64_t limit) {
  std::vector<std::uint8_t> composite(limit + 1, 0);
  std::vector<std::uint32_t> primes;
  for (std::uint64_t i = 2; i <= limit; ++i) {
    if (composite[i]) continue;
    primes.push_back(static_cast<std::uint32_t>(i));
    for (std::uint64_t j = i * i; j <= limit; j += i) composite[j] = 1;
  }
  return primes;
}

}  // namespace

SieveTables build_sieve(std::uint64_t limit, std::uint64_t memory_budget_bytes) {
  if (limit < 2) throw InvalidArgument("sieve limit must be >= 2");
  if (limit >= (std::uint64_t{1} << 32)) throw BudgetExceeded("sieve limit exceeds 32-bit table entries");
  const std::uint64_t bytes_per_entry = sizeof(std::uint32_t) + sizeof(std::int8_t) + sizeof(double);
  if ((limit + 1) > memory_budget_bytes / bytes_per_entry) {
    throw BudgetExceeded("sieve up to " + std::to_string(limit) + " needs ~" +
                         std::to_string((limit + 1) * bytes_per_entry) + " bytes (budget " +
                         std::to_string(memory_budget_bytes) + ")");
  }

  SieveTables t;
  t.limit_ = limit;
  t.spf_.assign(limit + 1, 0);
  t.mobius_.assign(limit + 1, 0);
  t.von_mangoldt_.assign(limit + 1, 0.0);
  t.spf_[1] = 1;
  t.mobius_[1] = 1;

  const auto root = static_cast<std::uint64_t>(std::sqrt(static_cast<double>(limit))) + 1;
  const auto base = simple_primes(root);
  const std::size_t segments = static_cast<std::size_t>(limit / kSegment + 1);
  std::vector<std::vector<std::uint32_t>> segment_primes(segments);

  parallel_for_chunks(segments, [&](std::size_t s) {
    const std::uint64_t lo = std::max<std::uint64_t>(2, s * kSegment);
    const std::uint64_t hi = std::min(limit, (s + 1) * kSegment - 1);
    if (lo > hi) return;
    for (auto p32 : base) {
      const std::uint64_t p = p32;
      if (p * p > hi) break;
      std::uint64_t start = std::max(p * p, (lo + p - 1) / p * p);
      for (std::uint64_t j = start; j <= hi; j += p) {
        if (t.spf_[j] == 0) t.spf_[j] = static_cast<std::uint32_t>(p);
      }
    }
    auto& primes = segment_primes[s];
    for (std::uint64_t n = lo; n <= hi; ++n) {
      if (t.spf_[n] == 0) {
        t.spf_[n] = static_cast<std::uint32_t>(n);
        primes.push_back(static_cast<std::uint32_t>(n));
      }
    }
  });

  // Second pass: every spf entry is final, so factor through the spf chain.
  parallel_for_chunks(segments, [&](std::size_t s) {
    const std::uint64_t lo = std::max<std::uint64_t>(2, s * kSegment);
    const std::uint64_t hi = std::min(limit, (s + 1) * kSegment - 1);
    for (std::uint64_t n = lo; n <= hi; ++n) {
      std::uint64_t m = n;
      int mu = 1;
      int distinct = 0;
      std::uint64_t last = 0;
      bool squarefree = true;
      while (m > 1) {
        const std::uint64_t p = t.spf_[m];
        if (p == last) {
          squarefree = false;
        } else {
          ++distinct;
          mu = -mu;
          last = p;
        }
        m /= p;
      }
      t.mobius_[n] = static_cast<std::int8_t>(squarefree ? mu : 0);
      t.von_mangoldt_[n] = distinct == 1 ? std::log(static_cast<double>(last)) : 0.0;
    }
  });

  for (auto& seg : segment_primes) t.primes_.insert(t.primes_.end(), seg.begin(), seg.end());
  return t;
}

// ----------------------------------------------------------------- majorant

std::uint64_t primorial(std::uint64_t w) {
  std::uint64_t W = 1;
  for (std::uint64_t p = 2; p <= w; ++p) {
    if (!is_prime_64(p)) continue;
    const auto next = checked_mul(W, p);
    if (!next) throw RangeOverflow("product of primes <= " + std::to_string(w) + " overflows 64 bits");
    W = *next;
  }
  return W;
}

double MajorantParams::default_theta(int k) noexcept {
  return 1.0 / (static_cast<double>(k) * std::ldexp(1.0, k + 4));
}

double MajorantParams::default_epsilon(int k) noexcept {
  double factorial = 1.0;
  for (int i = 2; i <= k + 4; ++i) factorial *= i;
  return 1.0 / (std::ldexp(1.0, k) * factorial);
}

MajorantParams MajorantParams::make(int k, std::uint64_t N, std::uint64_t w, std::optional<double> theta,
                                    std::optional<double> epsilon_k) {
  if (k < 3) throw InvalidArgument("majorant requires k >= 3");
  if (!is_prime_64(N)) throw InvalidArgument("majorant modulus N = " + std::to_string(N) + " is not prime");
  if (w < 1) throw InvalidArgument("w must be >= 1");
  MajorantParams p;
  p.k = k;
  p.N = N;
  p.w = w;
  p.W = primorial(w);
  p.theta = theta.value_or(default_theta(k));
  p.epsilon_k = epsilon_k.value_or(default_epsilon(k));
  if (!(p.theta > 0.0) || !(p.theta < 1.0)) throw InvalidArgument("R exponent theta must lie in (0, 1)");
  if (!(p.epsilon_k > 0.0) || !(p.epsilon_k < 0.5)) throw InvalidArgument("epsilon_k must lie in (0, 1/2)");
  const auto top = static_cast<std::uint64_t>(std::ceil(2.0 * p.epsilon_k * static_cast<double>(N)));
  const auto scaled = checked_mul(p.W, top);
  if (!scaled || *scaled == std::numeric_limits<std::uint64_t>::max()) {
    throw RangeOverflow("W * ceil(2 eps_k N) + 1 does not fit in 64 bits");
  }
  return p;
}

double MajorantParams::R() const noexcept { return std::pow(static_cast<double>(N), theta); }
double MajorantParams::log_R() const noexcept { return theta * std::log(static_cast<double>(N)); }

double MajorantParams::w_density() const noexcept {
  return static_cast<double>(euler_phi(W)) / static_cast<double>(W);
}

std::uint64_t MajorantParams::window_lo() const noexcept {
  return static_cast<std::uint64_t>(std::ceil(epsilon_k * static_cast<double>(N)));
}

std::uint64_t MajorantParams::window_hi() const noexcept {
  return static_cast<std::uint64_t>(std::floor(2.0 * epsilon_k * static_cast<double>(N)));
}

double lambda_tilde(std::uint64_t n, const MajorantParams& params) {
  const auto wn = checked_mul(params.W, n);
  if (!wn || *wn == std::numeric_limits<std::uint64_t>::max()) {
    throw RangeOverflow("W n + 1 overflows 64 bits for n = " + std::to_string(n));
  }
  const std::uint64_t m = *wn + 1;
  if (!is_prime_64(m)) return 0.0;
  return params.w_density() * std::log(static_cast<double>(m));
}

std::vector<double> lambda_r_table(std::uint64_t limit, double R, std::uint64_t memory_budget_bytes) {
  if (!(R >= 1.0)) throw InvalidArgument("truncation parameter R must be >= 1");
  if ((limit + 1) > memory_budget_bytes / sizeof(double)) {
    throw BudgetExceeded("Lambda_R table up to " + std::to_string(limit) + " exceeds the memory budget");
  }
  std::vector<double> table(limit + 1, 0.0);
  const double log_r = std::log(R);
  const auto d_max = static_cast<std::uint64_t>(std::floor(R));
  const std::uint64_t reach = std::min(d_max, limit);
  if (reach >= 2) {
    const auto small = build_sieve(reach, memory_budget_bytes);
    for (std::uint64_t d = 1; d <= reach; ++d) {
      const int mu = small.mobius(d);
      if (mu == 0) continue;
      const double term = mu * (log_r - std::log(static_cast<double>(d)));
      for (std::uint64_t m = d; m <= limit; m += d) table[m] += term;
    }
  } else {
    for (std::uint64_t m = 1; m <= limit; ++m) table[m] = log_r;
  }
  return table;
}

GridFunction build_majorant(const MajorantParams& params) {
  const CyclicGroup group(params.N, true);
  std::vector<double> nu(group.size(), 1.0);
  const std::uint64_t lo = params.window_lo();
  const std::uint64_t hi = std::min(params.window_hi(), params.N - 1);
  if (lo <= hi) {
    const auto top = checked_mul(params.W, hi);
    if (!top) throw RangeOverflow("W n + 1 overflows 64 bits on the majorant window");
    const auto lambda_r = lambda_r_table(*top + 1, params.R());
    const double scale = params.w_density() / params.log_R();
    for (std::uint64_t n = lo; n <= hi; ++n) {
      const double l = lambda_r[params.W * n + 1];
      nu[n] = scale * l * l;
    }
  }
  return GridFunction(group, std::move(nu));
}

}  // namespace apkit
