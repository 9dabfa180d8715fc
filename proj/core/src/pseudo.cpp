#include "apkit/pseudo.hpp"

#include <algorithm>
#include <chrono>
#include <cmath>
#include <limits>
#include <memory>
#include <numeric>
#include <set>
#include <sstream>

#include "apkit/modular.hpp"
#include "apkit/parallel.hpp"
#include "apkit/random.hpp"
#include "apkit/summation.hpp"
#include "moments.hpp"

namespace apkit {

namespace {

constexpr std::uint64_t kSampleChunk = std::uint64_t{1} << 14;
constexpr std::size_t kExactChunks = 64;

using Clock = std::chrono::steady_clock;

double elapsed_ms(Clock::time_point start) {
  return std::chrono::duration<double, std::milli>(Clock::now() - start).count();
}

// Running sum with Neumaier compensation.
struct CompensatedSum {
  double sum = 0.0;
  double carry = 0.0;

  void add(double v) noexcept {
    const double t = sum + v;
    if (std::abs(sum) >= std::abs(v)) {
      carry += (sum - t) + v;
    } else {
      carry += (v - t) + sum;
    }
    sum = t;
  }
  double value() const noexcept { return sum + carry; }
};

// Checked integer power, nullopt on overflow.
std::optional<std::uint64_t> checked_pow(std::uint64_t base, std::size_t exp) {
  std::uint64_t out = 1;
  for (std::size_t i = 0; i < exp; ++i) {
    const auto next = checked_mul(out, base);
    if (!next) return std::nullopt;
    out = *next;
  }
  return out;
}

// Splits `total` items into at most `chunks` contiguous ranges.
std::pair<std::uint64_t, std::uint64_t> chunk_range(std::uint64_t total, std::size_t chunks, std::size_t c) {
  const std::uint64_t lo = total * c / chunks;
  const std::uint64_t hi = total * (c + 1) / chunks;
  return {lo, hi};
}

// Monte Carlo driver: fixed-size chunks, chunk i on stream (seed, i), merged in order.
template <typename Draw>
detail::Moments sample_moments(std::uint64_t samples, std::uint64_t seed, Draw draw) {
  const std::uint64_t chunks = (samples + kSampleChunk - 1) / kSampleChunk;
  std::vector<detail::Moments> parts(chunks);
  parallel_for_chunks(chunks, [&](std::size_t c) {
    Rng rng(seed, c);
    const std::uint64_t begin = c * kSampleChunk;
    const std::uint64_t end = std::min(samples, begin + kSampleChunk);
    detail::Moments m;
    for (std::uint64_t s = begin; s < end; ++s) m.push(draw(rng));
    parts[c] = m;
  });
  detail::Moments total;
  for (const auto& p : parts) total.merge(p);
  return total;
}

// Sums term(index) over [0, total) in contiguous chunks; deterministic.
template <typename Term>
double exact_sum(std::uint64_t total, Term term) {
  const std::size_t chunks = static_cast<std::size_t>(std::min<std::uint64_t>(kExactChunks, std::max<std::uint64_t>(total, 1)));
  std::vector<double> parts(chunks, 0.0);
  parallel_for_chunks(chunks, [&](std::size_t c) {
    const auto [lo, hi] = chunk_range(total, chunks, c);
    CompensatedSum acc;
    term(lo, hi, acc);
    parts[c] = acc.value();
  });
  return pairwise_sum(parts);
}

void validate_rows(const std::vector<std::vector<Rational>>& rows) {
  for (std::size_t i = 0; i < rows.size(); ++i) {
    if (std::all_of(rows[i].begin(), rows[i].end(), [](const Rational& r) { return r.numerator() == 0; })) {
      throw InvalidSystem("linear form " + std::to_string(i) + " has an all-zero coefficient row", i);
    }
  }
  // Rows a and b are proportional iff every 2x2 minor a_j b_l - a_l b_j vanishes.
  for (std::size_t a = 0; a < rows.size(); ++a) {
    for (std::size_t b = a + 1; b < rows.size(); ++b) {
      bool proportional = true;
      for (std::size_t j = 0; j < rows[a].size() && proportional; ++j) {
        for (std::size_t l = j + 1; l < rows[a].size() && proportional; ++l) {
          const __int128 lhs = static_cast<__int128>(rows[a][j].numerator()) * rows[b][l].numerator() *
                               rows[a][l].denominator() * rows[b][j].denominator();
          const __int128 rhs = static_cast<__int128>(rows[a][l].numerator()) * rows[b][j].numerator() *
                               rows[a][j].denominator() * rows[b][l].denominator();
          if (lhs != rhs) proportional = false;
        }
      }
      if (proportional) {
        throw InvalidSystem("linear forms " + std::to_string(a) + " and " + std::to_string(b) +
                                " are rational multiples of each other",
                            a, b);
      }
    }
  }
}

}  // namespace

LinearFormSystem::LinearFormSystem(std::vector<std::vector<Rational>> coefficients, std::vector<std::int64_t> constants,
                                   std::int64_t coefficient_bound)
    : coefficients_(std::move(coefficients)), constants_(std::move(constants)) {
  if (coefficients_.empty()) throw InvalidArgument("linear form system needs at least one form");
  if (constants_.size() != coefficients_.size()) {
    throw InvalidArgument("linear form system: constants and coefficient rows differ in number");
  }
  variables_ = coefficients_.front().size();
  if (variables_ == 0) throw InvalidArgument("linear form system needs at least one variable");
  constexpr std::int64_t kHeightCap = std::int64_t{1} << 30;
  for (std::size_t i = 0; i < coefficients_.size(); ++i) {
    if (coefficients_[i].size() != variables_) {
      throw InvalidSystem("linear form " + std::to_string(i) + " has the wrong number of coefficients", i);
    }
    for (const auto& c : coefficients_[i]) {
      const std::int64_t h = std::max(std::abs(c.numerator()), c.denominator());
      if (h > kHeightCap || (coefficient_bound > 0 && h > coefficient_bound)) {
        throw InvalidSystem("linear form " + std::to_string(i) + " exceeds the coefficient bound", i);
      }
    }
  }
  validate_rows(coefficients_);
}

LinearFormSystem LinearFormSystem::cube(int d) {
  if (d < 1 || d > 6) throw InvalidArgument("cube system dimension must be in [1, 6]");
  std::vector<std::vector<Rational>> rows;
  const std::size_t vertices = std::size_t{1} << d;
  for (std::size_t omega = 0; omega < vertices; ++omega) {
    std::vector<Rational> row(static_cast<std::size_t>(d) + 1, Rational(0));
    row[0] = 1;
    for (int j = 0; j < d; ++j) {
      if ((omega >> j) & 1U) row[static_cast<std::size_t>(j) + 1] = 1;
    }
    rows.push_back(std::move(row));
  }
  return LinearFormSystem(std::move(rows), std::vector<std::int64_t>(vertices, 0));
}

LinearFormSystem LinearFormSystem::shifted(const std::vector<std::int64_t>& shifts) {
  if (shifts.empty()) throw InvalidArgument("shifted system needs at least one shift");
  LinearFormSystem s;
  s.variables_ = 1;
  s.coefficients_.assign(shifts.size(), std::vector<Rational>{Rational(1)});
  s.constants_ = shifts;
  s.admissible_ = shifts.size() == 1;
  return s;
}

std::int64_t LinearFormSystem::height() const noexcept {
  std::int64_t h = 0;
  for (const auto& row : coefficients_) {
    for (const auto& c : row) h = std::max({h, std::abs(c.numerator()), c.denominator()});
  }
  return h;
}

std::vector<std::vector<std::uint64_t>> LinearFormSystem::residue_coefficients(std::uint64_t N) const {
  std::vector<std::vector<std::uint64_t>> out(forms(), std::vector<std::uint64_t>(variables_));
  for (std::size_t i = 0; i < forms(); ++i) {
    for (std::size_t j = 0; j < variables_; ++j) {
      const Rational& c = coefficients_[i][j];
      const auto inv = inverse_mod(reduce_mod(c.denominator(), N), N);
      if (!inv) {
        throw InvalidSystem("linear form " + std::to_string(i) + " has a denominator not invertible mod " +
                                std::to_string(N),
                            i);
      }
      out[i][j] = mul_mod(reduce_mod(c.numerator(), N), *inv, N);
    }
  }
  return out;
}

std::vector<std::vector<std::int64_t>> LinearFormSystem::integral_coefficients() const {
  std::int64_t D = 1;
  for (const auto& row : coefficients_) {
    for (const auto& c : row) D = std::lcm(D, c.denominator());
  }
  std::vector<std::vector<std::int64_t>> out(forms(), std::vector<std::int64_t>(variables_));
  for (std::size_t i = 0; i < forms(); ++i) {
    for (std::size_t j = 0; j < variables_; ++j) {
      const Rational& c = coefficients_[i][j];
      out[i][j] = c.numerator() * (D / c.denominator());
    }
  }
  return out;
}

const char* to_string(Condition c) noexcept {
  switch (c) {
    case Condition::linear_forms:
      return "linear_forms";
    case Condition::correlation:
      return "correlation";
  }
  return "unknown";
}

bool PseudorandomnessReport::passed() const noexcept {
  if (condition == Condition::linear_forms) return deviation <= verdict_threshold;
  return estimate.value <= verdict_threshold;
}

GridFunction halfway(const GridFunction& nu) {
  std::vector<double> out(nu.size());
  for (std::size_t x = 0; x < nu.size(); ++x) out[x] = (nu[x] + 1.0) / 2.0;
  return GridFunction(nu.group(), std::move(out));
}

PseudorandomnessReport verify_linear_forms(const GridFunction& nu, const LinearFormSystem& system,
                                           const EstimatorOptions& options, double verdict_threshold) {
  const auto start = Clock::now();
  const std::uint64_t N = nu.group().modulus();
  if (!nu.group().is_prime()) throw InvalidArgument("verify_linear_forms requires a prime modulus");
  if (!system.admissible()) throw InvalidArgument("verify_linear_forms requires an admissible system");
  const auto coeffs = system.residue_coefficients(N);
  std::vector<std::uint64_t> consts(system.forms());
  for (std::size_t i = 0; i < system.forms(); ++i) consts[i] = reduce_mod(system.constant(i), N);
  const std::size_t m = system.forms();
  const std::size_t t = system.variables();

  PseudorandomnessReport report;
  report.condition = Condition::linear_forms;
  report.mode = options.mode;
  report.target = 1.0;
  report.verdict_threshold = verdict_threshold;
  report.parameters = {{"m", static_cast<double>(m)},
                       {"t", static_cast<double>(t)},
                       {"L0", static_cast<double>(system.height())},
                       {"N", static_cast<double>(N)}};

  if (options.mode == EstimateMode::exact) {
    const auto points = checked_pow(N, t);
    const auto cost = points ? checked_mul(*points, m) : std::nullopt;
    if (!cost || *cost > options.budget) {
      throw BudgetExceeded("exact linear-forms enumeration over Z_N^t exceeds the budget; use Monte Carlo");
    }
    // Odometer over x in Z_N^t with incremental form values; the index
    // range [lo, hi) is decoded once per chunk.
    const double total = exact_sum(*points, [&](std::uint64_t lo, std::uint64_t hi, CompensatedSum& acc) {
      if (lo >= hi) return;
      std::vector<std::uint64_t> x(t);
      std::uint64_t rest = lo;
      for (std::size_t j = 0; j < t; ++j) {
        x[j] = rest % N;
        rest /= N;
      }
      std::vector<std::uint64_t> psi(m);
      for (std::size_t i = 0; i < m; ++i) {
        std::uint64_t v = consts[i];
        for (std::size_t j = 0; j < t; ++j) v = (v + mul_mod(coeffs[i][j], x[j], N)) % N;
        psi[i] = v;
      }
      for (std::uint64_t idx = lo; idx < hi; ++idx) {
        double prod = 1.0;
        for (std::size_t i = 0; i < m; ++i) prod *= nu[psi[i]];
        acc.add(prod);
        for (std::size_t j = 0; j < t; ++j) {
          if (++x[j] < N) {
            for (std::size_t i = 0; i < m; ++i) psi[i] = nu.group().add(psi[i], coeffs[i][j]);
            break;
          }
          x[j] = 0;
          // Wrapping variable j back to 0 subtracts (N-1) c_ij, i.e. adds c_ij.
          for (std::size_t i = 0; i < m; ++i) psi[i] = nu.group().add(psi[i], coeffs[i][j]);
        }
      }
    });
    report.estimate = {total / static_cast<double>(*points), 0.0, *points, options.seed};
  } else if (options.mode == EstimateMode::monte_carlo) {
    if (options.samples < 2) throw InvalidArgument("Monte Carlo needs at least 2 samples");
    const auto moments = sample_moments(options.samples, options.seed, [&](Rng& rng) {
      std::uint64_t x[8];
      std::vector<std::uint64_t> xs;
      std::uint64_t* xp = x;
      if (t > 8) {
        xs.resize(t);
        xp = xs.data();
      }
      for (std::size_t j = 0; j < t; ++j) xp[j] = rng.below(N);
      double prod = 1.0;
      for (std::size_t i = 0; i < m; ++i) {
        std::uint64_t v = consts[i];
        for (std::size_t j = 0; j < t; ++j) v = (v + mul_mod(coeffs[i][j], xp[j], N)) % N;
        prod *= nu[v];
      }
      return prod;
    });
    report.estimate = {moments.mean, moments.std_error(), moments.count, options.seed};
  } else {
    throw InvalidArgument("verify_linear_forms supports exact and monte_carlo modes");
  }
  report.deviation = std::abs(report.estimate.value - report.target);
  report.details["std_error"] = report.estimate.std_error;
  report.wall_time_ms = elapsed_ms(start);
  return report;
}

double tau_weight(std::int64_t n, int m, std::uint64_t N, double C, double A) {
  if (N < 3) throw InvalidArgument("tau_weight requires N >= 3");
  const std::uint64_t magnitude = n < 0 ? static_cast<std::uint64_t>(-(n + 1)) + 1 : static_cast<std::uint64_t>(n);
  if (magnitude > N) throw InvalidArgument("tau_weight requires |n| <= N");
  if (n == 0) {
    const double logN = std::log(static_cast<double>(N));
    return std::exp(C * m * logN / std::log(logN));
  }
  double prod = C;
  for (const auto p : prime_factors(magnitude)) prod *= std::pow(1.0 + 1.0 / std::sqrt(static_cast<double>(p)), A);
  return prod;
}

PseudorandomnessReport verify_correlation(const GridFunction& nu, int m,
                                          const std::vector<std::vector<std::int64_t>>& h_tuples,
                                          const std::vector<double>& q_list, const TauParams& tau) {
  const auto start = Clock::now();
  if (m < 2) throw InvalidArgument("verify_correlation requires m >= 2");
  const CyclicGroup& G = nu.group();
  const std::uint64_t N = G.modulus();
  if (N < 3) throw InvalidArgument("verify_correlation requires N >= 3");
  const double A = tau.exponent(m);

  // tau on every centred residue, via one smallest-prime-factor sieve.
  const SieveTables sieve = build_sieve(std::max<std::uint64_t>(N / 2 + 1, 2));
  std::vector<double> tau_of(N);
  for (std::uint64_t x = 0; x < N; ++x) {
    const std::int64_t c = G.centered(x);
    if (c == 0) {
      tau_of[x] = tau_weight(0, m, N, tau.C, A);
      continue;
    }
    std::uint64_t r = static_cast<std::uint64_t>(c < 0 ? -c : c);
    double prod = tau.C;
    while (r > 1) {
      const std::uint64_t p = sieve.smallest_prime_factor(r);
      prod *= std::pow(1.0 + 1.0 / std::sqrt(static_cast<double>(p)), A);
      while (r % p == 0) r /= p;
    }
    tau_of[x] = prod;
  }

  PseudorandomnessReport report;
  report.condition = Condition::correlation;
  report.mode = EstimateMode::exact;
  report.target = 1.0;
  report.verdict_threshold = 1.0;
  report.parameters = {{"m", static_cast<double>(m)}, {"N", static_cast<double>(N)}, {"C_tau", tau.C}, {"A_tau", A}};

  double max_ratio = 0.0;
  double max_lhs = 0.0;
  std::size_t worst = 0;
  for (std::size_t idx = 0; idx < h_tuples.size(); ++idx) {
    const auto& h = h_tuples[idx];
    if (h.size() != static_cast<std::size_t>(m)) {
      throw InvalidArgument("correlation tuple " + std::to_string(idx) + " does not have m entries");
    }
    std::vector<std::uint64_t> shift(h.size());
    for (std::size_t i = 0; i < h.size(); ++i) shift[i] = G.reduce(h[i]);
    std::vector<double> terms(N);
    for (std::uint64_t x = 0; x < N; ++x) {
      double prod = 1.0;
      for (const auto s : shift) prod *= nu[G.add(x, s)];
      terms[x] = prod;
    }
    const double lhs = pairwise_sum(terms) / static_cast<double>(N);
    double bound = 0.0;
    for (std::size_t i = 0; i < shift.size(); ++i) {
      for (std::size_t j = i + 1; j < shift.size(); ++j) {
        bound += tau_of[G.reduce(static_cast<std::int64_t>(shift[i]) - static_cast<std::int64_t>(shift[j]))];
      }
    }
    const double ratio = lhs / bound;
    if (idx == 0 || ratio > max_ratio) {
      max_ratio = ratio;
      worst = idx;
    }
    max_lhs = std::max(max_lhs, lhs);
  }

  for (const double q : q_list) {
    std::vector<double> all(N);
    for (std::uint64_t x = 0; x < N; ++x) all[x] = std::pow(tau_of[x], q);
    const double with_zero = pairwise_sum(all) / static_cast<double>(N);
    const double without_zero = pairwise_sum(std::span<const double>(all).subspan(1)) / static_cast<double>(N - 1);
    std::ostringstream key;
    key << q;
    report.details["tau_moment_q" + key.str()] = with_zero;
    report.details["tau_moment_q" + key.str() + "_nonzero"] = without_zero;
  }

  report.estimate = {max_ratio, 0.0, static_cast<std::uint64_t>(h_tuples.size()), 0};
  report.deviation = std::abs(report.estimate.value - report.target);
  report.details["tuples"] = static_cast<double>(h_tuples.size());
  report.details["max_lhs"] = max_lhs;
  report.details["worst_tuple"] = static_cast<double>(worst);
  report.wall_time_ms = elapsed_ms(start);
  return report;
}

Rational local_factor_omega(const LinearFormSystem& system, std::uint64_t W, std::uint64_t p,
                            const std::vector<std::size_t>& X, std::uint64_t budget) {
  if (!is_prime_64(p)) throw InvalidArgument("local_factor_omega requires a prime p");
  if (W == 0) throw InvalidArgument("local_factor_omega requires W >= 1");
  std::set<std::size_t> seen;
  for (const auto i : X) {
    if (i >= system.forms()) throw InvalidArgument("local_factor_omega: form index out of range");
    if (!seen.insert(i).second) throw InvalidArgument("local_factor_omega: repeated form index");
  }
  if (X.empty()) return Rational(1);
  const std::size_t t = system.variables();
  const auto points = checked_pow(p, t);
  const auto cost = points ? checked_mul(*points, X.size()) : std::nullopt;
  if (!cost || *cost > budget || *points > static_cast<std::uint64_t>(std::numeric_limits<std::int64_t>::max())) {
    throw BudgetExceeded("local factor enumeration over Z_p^t exceeds the budget");
  }
  const auto ints = system.integral_coefficients();
  const std::uint64_t Wp = W % p;
  // theta_i(y) = W (sum_j c_ij y_j + b_i) + 1 mod p, split into a step per
  // variable and an offset.
  std::vector<std::vector<std::uint64_t>> step(X.size(), std::vector<std::uint64_t>(t));
  std::vector<std::uint64_t> value(X.size());
  for (std::size_t r = 0; r < X.size(); ++r) {
    for (std::size_t j = 0; j < t; ++j) step[r][j] = mul_mod(Wp, reduce_mod(ints[X[r]][j], p), p);
    value[r] = (mul_mod(Wp, reduce_mod(system.constant(X[r]), p), p) + 1) % p;
  }
  std::vector<std::uint64_t> y(t, 0);
  std::uint64_t hits = 0;
  for (std::uint64_t idx = 0; idx < *points; ++idx) {
    bool all_zero = true;
    for (const auto v : value) {
      if (v != 0) {
        all_zero = false;
        break;
      }
    }
    if (all_zero) ++hits;
    for (std::size_t j = 0; j < t; ++j) {
      for (std::size_t r = 0; r < X.size(); ++r) {
        const std::uint64_t s = value[r] + step[r][j];
        value[r] = s >= p ? s - p : s;
      }
      if (++y[j] < p) break;
      y[j] = 0;
    }
  }
  return Rational(static_cast<std::int64_t>(hits), static_cast<std::int64_t>(*points));
}

namespace {

// theta_i(x) = W psi_i(x) + 1 on an integer box, with exact range checks.
struct ThetaSystem {
  std::vector<std::vector<std::int64_t>> coeffs;  // W c_ij
  std::vector<std::int64_t> offsets;              // W b_i + 1
  std::uint64_t max_value = 0;
};

ThetaSystem make_theta(const std::vector<std::vector<std::int64_t>>& c, const std::vector<std::int64_t>& b,
                       std::uint64_t W, const std::vector<IntegerInterval>& box) {
  ThetaSystem th;
  const auto Wi = static_cast<__int128>(W);
  const __int128 cap = std::numeric_limits<std::int64_t>::max();
  th.coeffs.resize(c.size());
  for (std::size_t i = 0; i < c.size(); ++i) {
    __int128 lo = Wi * b[i] + 1;
    __int128 hi = lo;
    th.coeffs[i].resize(c[i].size());
    for (std::size_t j = 0; j < c[i].size(); ++j) {
      const __int128 a = Wi * c[i][j];
      if (a > cap || a < -cap) throw RangeOverflow("W * coefficient does not fit in 64 bits");
      th.coeffs[i][j] = static_cast<std::int64_t>(a);
      const __int128 u = a * box[j].lo;
      const __int128 v = a * box[j].hi;
      lo += std::min(u, v);
      hi += std::max(u, v);
    }
    if (hi > cap || lo < -cap) throw RangeOverflow("W psi(x) + 1 does not fit in 64 bits on the box");
    if (lo < 1) throw InvalidArgument("W psi(x) + 1 must be positive on the whole box");
    const __int128 off = Wi * b[i] + 1;
    th.offsets.push_back(static_cast<std::int64_t>(off));
    th.max_value = std::max(th.max_value, static_cast<std::uint64_t>(hi));
  }
  return th;
}

LambdaRSource default_lambda(std::uint64_t limit, double R) {
  auto table = std::make_shared<std::vector<double>>(lambda_r_table(limit, R));
  return [table](std::uint64_t n) { return (*table)[n]; };
}

// Mean of prod_i Lambda_R(theta_i(x))^2 over the box, exact or sampled.
EstimatorResult box_moment(const ThetaSystem& th, const std::vector<IntegerInterval>& box,
                           const EstimatorOptions& options, const LambdaRSource& lambda) {
  const std::size_t m = th.coeffs.size();
  const std::size_t t = box.size();
  auto integrand = [&](const std::int64_t* x) {
    double prod = 1.0;
    for (std::size_t i = 0; i < m; ++i) {
      std::int64_t v = th.offsets[i];
      for (std::size_t j = 0; j < t; ++j) v += th.coeffs[i][j] * x[j];
      const double l = lambda(static_cast<std::uint64_t>(v));
      prod *= l * l;
    }
    return prod;
  };

  std::optional<std::uint64_t> volume = 1;
  for (const auto& side : box) volume = volume ? checked_mul(*volume, side.length()) : std::nullopt;
  const auto cost = volume ? checked_mul(*volume, m) : std::nullopt;
  const bool fits = cost && *cost <= options.budget;
  const bool exact = options.mode == EstimateMode::exact || (options.mode != EstimateMode::monte_carlo && fits);

  if (exact) {
    if (!fits) throw BudgetExceeded("exact summation over the box exceeds the budget; use Monte Carlo");
    const double total = exact_sum(*volume, [&](std::uint64_t lo, std::uint64_t hi, CompensatedSum& acc) {
      std::vector<std::int64_t> x(t);
      for (std::uint64_t idx = lo; idx < hi; ++idx) {
        std::uint64_t rest = idx;
        for (std::size_t j = 0; j < t; ++j) {
          x[j] = box[j].lo + static_cast<std::int64_t>(rest % box[j].length());
          rest /= box[j].length();
        }
        acc.add(integrand(x.data()));
      }
    });
    return {total / static_cast<double>(*volume), 0.0, *volume, options.seed};
  }
  if (options.samples < 2) throw InvalidArgument("Monte Carlo needs at least 2 samples");
  const auto moments = sample_moments(options.samples, options.seed, [&](Rng& rng) {
    std::vector<std::int64_t> x(t);
    for (std::size_t j = 0; j < t; ++j) {
      x[j] = box[j].lo + static_cast<std::int64_t>(rng.below(box[j].length()));
    }
    return integrand(x.data());
  });
  return {moments.mean, moments.std_error(), moments.count, options.seed};
}

}  // namespace

GyCheckResult gy_moment_check(const MajorantParams& params, const LinearFormSystem& system,
                              const std::vector<IntegerInterval>& box, const EstimatorOptions& options,
                              const LambdaRSource& lambda_r) {
  if (box.size() != system.variables()) throw InvalidArgument("box dimension must equal the number of variables");
  for (const auto& side : box) {
    if (side.length() == 0) throw InvalidArgument("box sides must be non-empty");
  }
  const std::size_t m = system.forms();
  std::vector<std::int64_t> b(m);
  for (std::size_t i = 0; i < m; ++i) b[i] = system.constant(i);
  const ThetaSystem th = make_theta(system.integral_coefficients(), b, params.W, box);
  const LambdaRSource lambda = lambda_r ? lambda_r : default_lambda(th.max_value, params.R());

  GyCheckResult out;
  const EstimatorResult raw = box_moment(th, box, options, lambda);
  out.raw_mean = raw.value;
  out.reference = std::pow(params.log_R() / params.w_density(), static_cast<double>(m));
  out.estimate = {raw.value / out.reference, raw.std_error / out.reference, raw.samples, raw.seed};
  const double min_side = std::pow(params.R(), 10.0 * static_cast<double>(m));
  for (const auto& side : box) out.short_box = out.short_box || static_cast<double>(side.length()) < min_side;
  out.details["m"] = static_cast<double>(m);
  out.details["t"] = static_cast<double>(system.variables());
  out.details["R"] = params.R();
  out.details["max_theta"] = static_cast<double>(th.max_value);
  return out;
}

std::optional<std::uint64_t> shift_discriminant(const std::vector<std::int64_t>& h) {
  std::optional<std::uint64_t> delta = 1;
  for (std::size_t i = 0; i < h.size(); ++i) {
    for (std::size_t j = i + 1; j < h.size(); ++j) {
      if (h[i] == h[j]) throw InvalidArgument("shifts must be distinct");
      const __int128 diff = static_cast<__int128>(h[i]) - h[j];
      const __int128 mag = diff < 0 ? -diff : diff;
      if (mag > std::numeric_limits<std::uint64_t>::max()) {
        delta = std::nullopt;
        continue;
      }
      if (delta) delta = checked_mul(*delta, static_cast<std::uint64_t>(mag));
    }
  }
  return delta;
}

std::vector<std::uint64_t> discriminant_primes(const std::vector<std::int64_t>& h) {
  std::set<std::uint64_t> primes;
  for (std::size_t i = 0; i < h.size(); ++i) {
    for (std::size_t j = i + 1; j < h.size(); ++j) {
      if (h[i] == h[j]) throw InvalidArgument("shifts must be distinct");
      const __int128 diff = static_cast<__int128>(h[i]) - h[j];
      const __int128 mag = diff < 0 ? -diff : diff;
      if (mag > std::numeric_limits<std::uint64_t>::max()) throw RangeOverflow("shift difference exceeds 64 bits");
      for (const auto p : prime_factors(static_cast<std::uint64_t>(mag))) primes.insert(p);
    }
  }
  return {primes.begin(), primes.end()};
}

GyCheckResult gy2_correlation_check(const MajorantParams& params, const std::vector<std::int64_t>& h,
                                    const IntegerInterval& B, const TauParams& tau, const LambdaRSource& lambda_r) {
  if (h.empty()) throw InvalidArgument("gy2_correlation_check needs at least one shift");
  if (B.length() == 0) throw InvalidArgument("interval must be non-empty");
  const double N2 = static_cast<double>(params.N) * static_cast<double>(params.N);
  for (const auto hi : h) {
    if (std::abs(static_cast<double>(hi)) > N2) throw InvalidArgument("shifts must satisfy |h| <= N^2");
  }
  const auto primes = discriminant_primes(h);  // also rejects duplicates
  const std::size_t m = h.size();
  const ThetaSystem th = make_theta(std::vector<std::vector<std::int64_t>>(m, std::vector<std::int64_t>{1}), h, params.W,
                                    std::vector<IntegerInterval>{B});
  const LambdaRSource lambda = lambda_r ? lambda_r : default_lambda(th.max_value, params.R());

  EstimatorOptions options;
  options.mode = EstimateMode::exact;
  options.budget = std::numeric_limits<std::uint64_t>::max();
  const EstimatorResult raw = box_moment(th, {B}, options, lambda);

  const double A = tau.exponent(static_cast<int>(m));
  double delta_factor = 1.0;
  for (const auto p : primes) delta_factor *= std::pow(1.0 + 1.0 / std::sqrt(static_cast<double>(p)), A);

  GyCheckResult out;
  out.raw_mean = raw.value;
  out.reference = std::pow(params.log_R() / params.w_density(), static_cast<double>(m)) * delta_factor;
  out.estimate = {raw.value / out.reference, 0.0, raw.samples, 0};
  out.short_box = static_cast<double>(B.length()) < std::pow(params.R(), 10.0 * static_cast<double>(m));
  out.details["m"] = static_cast<double>(m);
  out.details["A_tau"] = A;
  out.details["delta_factor"] = delta_factor;
  out.details["delta_prime_count"] = static_cast<double>(primes.size());
  if (const auto delta = shift_discriminant(h)) out.details["delta"] = static_cast<double>(*delta);
  return out;
}

GridFunction bernoulli_measure(std::uint64_t N, std::uint64_t seed) {
  if (N < 3) throw InvalidArgument("bernoulli_measure requires N >= 3");
  const CyclicGroup group(N);
  const double logN = std::log(static_cast<double>(N));
  const double prob = 1.0 / logN;
  constexpr std::uint64_t kChunk = 4096;
  std::vector<double> values(N);
  parallel_for_chunks((N + kChunk - 1) / kChunk, [&](std::size_t c) {
    Rng rng(seed, c);
    const std::uint64_t end = std::min(N, (c + 1) * kChunk);
    for (std::uint64_t x = c * kChunk; x < end; ++x) values[x] = rng.uniform() < prob ? logN : 0.0;
  });
  return GridFunction(group, std::move(values));
}

std::vector<std::pair<std::uint64_t, double>> majorant_uniformity_trend(int k, std::uint64_t w, double theta,
                                                                       const std::vector<std::uint64_t>& moduli) {
  std::vector<std::pair<std::uint64_t, double>> out;
  for (const auto N : moduli) {
    const GridFunction nu = build_majorant(MajorantParams::make(k, N, w, theta));
    const GridFunction centred = nu - GridFunction::constant(nu.group(), 1.0);
    out.emplace_back(N, gowers_norm_u2_fourier(centred).norm_value);
  }
  return out;
}

PolynomialProbe polynomial_correlation_probe(const GridFunction& nu, int k, int K, int degree, std::size_t trials,
                                             std::uint64_t seed) {
  if (k < 3) throw InvalidArgument("polynomial_correlation_probe requires k >= 3");
  if (K < 1 || degree < 0) throw InvalidArgument("polynomial_correlation_probe requires K >= 1 and degree >= 0");
  const std::size_t N = nu.size();
  const int d = k - 1;
  // Exponent tuples of total degree <= degree in K variables.
  std::vector<std::vector<int>> monomials;
  std::vector<int> e(static_cast<std::size_t>(K), 0);
  for (;;) {
    if (std::accumulate(e.begin(), e.end(), 0) <= degree) monomials.push_back(e);
    std::size_t j = 0;
    while (j < e.size() && ++e[j] > degree) e[j++] = 0;
    if (j == e.size()) break;
  }
  const GridFunction centred = nu - GridFunction::constant(nu.group(), 1.0);

  PolynomialProbe probe;
  std::vector<double> magnitudes;
  for (std::size_t trial = 0; trial < trials; ++trial) {
    Rng rng(seed, trial);
    std::vector<GridFunction> duals;
    for (int j = 0; j < K; ++j) {
      std::vector<double> vals(N);
      for (std::size_t x = 0; x < N; ++x) vals[x] = (2.0 * rng.uniform() - 1.0) * (nu[x] + 1.0);
      DualOptions opts;
      opts.mode = d == 2 ? DualMode::fourier : DualMode::exact;
      duals.push_back(dual_function(GridFunction(nu.group(), std::move(vals)), d, opts));
    }
    std::vector<double> coeff(monomials.size());
    for (auto& c : coeff) c = 2.0 * rng.uniform() - 1.0;
    std::vector<double> phi(N, 0.0);
    for (std::size_t x = 0; x < N; ++x) {
      double acc = 0.0;
      for (std::size_t mi = 0; mi < monomials.size(); ++mi) {
        double term = coeff[mi];
        for (int j = 0; j < K; ++j) term *= std::pow(duals[static_cast<std::size_t>(j)][x], monomials[mi][static_cast<std::size_t>(j)]);
        acc += term;
      }
      phi[x] = acc;
    }
    const double corr = std::abs(inner_product(centred, GridFunction(nu.group(), std::move(phi))));
    magnitudes.push_back(corr);
    probe.max_abs_correlation = std::max(probe.max_abs_correlation, corr);
  }
  probe.trials = trials;
  probe.mean_abs_correlation = trials == 0 ? 0.0 : pairwise_sum(magnitudes) / static_cast<double>(trials);
  return probe;
}

}  // namespace apkit
