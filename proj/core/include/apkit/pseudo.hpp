#pragma once

// Checks of the linear-forms and correlation conditions, local factors, the
// weight tau, and direct-summation oracles for truncated divisor sums.

#include <cstdint>
#include <functional>
#include <map>
#include <optional>
#include <string>
#include <vector>

#include <boost/rational.hpp>

#include "apkit/arith.hpp"
#include "apkit/errors.hpp"
#include "apkit/gowers.hpp"
#include "apkit/zn_core.hpp"

namespace apkit {

using Rational = boost::rational<std::int64_t>;

/// Rejection of a linear form system; rows are 0-based, row_b is set for
/// pairwise violations.
class InvalidSystem : public InvalidArgument {
 public:
  InvalidSystem(const std::string& what, std::size_t row_a, std::optional<std::size_t> row_b = std::nullopt)
      : InvalidArgument(what), row_a_(row_a), row_b_(row_b) {}
  std::size_t row_a() const noexcept { return row_a_; }
  std::optional<std::size_t> row_b() const noexcept { return row_b_; }

 private:
  std::size_t row_a_;
  std::optional<std::size_t> row_b_;
};

/// psi_i(x) = sum_j L_ij x_j + b_i, i < m, j < t.
class LinearFormSystem {
 public:
  /// Validates: rows non-zero, pairwise non-proportional, and (when
  /// coefficient_bound > 0) numerators/denominators bounded by it.
  LinearFormSystem(std::vector<std::vector<Rational>> coefficients, std::vector<std::int64_t> constants,
                   std::int64_t coefficient_bound = 0);

  /// x, x+h1, x+h2, x+h1+h2 over (x, h1, h2); the general case is the
  /// 2^d vertices of a d-cube in t = d+1 variables.
  static LinearFormSystem cube(int d);

  /// Forms x + h_i in one variable. These are pairwise proportional, so the
  /// system is marked inadmissible and only usable for local factors.
  static LinearFormSystem shifted(const std::vector<std::int64_t>& shifts);

  std::size_t forms() const noexcept { return coefficients_.size(); }
  std::size_t variables() const noexcept { return variables_; }
  const Rational& coefficient(std::size_t i, std::size_t j) const { return coefficients_.at(i).at(j); }
  std::int64_t constant(std::size_t i) const { return constants_.at(i); }
  bool admissible() const noexcept { return admissible_; }
  /// Largest |numerator| or denominator among the coefficients.
  std::int64_t height() const noexcept;

  /// Coefficients as residues mod a prime N (denominators inverted). Throws
  /// InvalidSystem if a denominator is divisible by N.
  std::vector<std::vector<std::uint64_t>> residue_coefficients(std::uint64_t N) const;

  /// Integer coefficients after substituting x_j -> D y_j, where D is the lcm
  /// of all denominators; constants are unchanged.
  std::vector<std::vector<std::int64_t>> integral_coefficients() const;

 private:
  LinearFormSystem() = default;

  std::size_t variables_ = 0;
  std::vector<std::vector<Rational>> coefficients_;
  std::vector<std::int64_t> constants_;
  bool admissible_ = true;
};

struct EstimatorOptions {
  EstimateMode mode = EstimateMode::exact;
  std::uint64_t samples = 1'000'000;
  std::uint64_t seed = 0;
  std::uint64_t budget = kDefaultExactBudget;
};

enum class Condition { linear_forms, correlation };

const char* to_string(Condition c) noexcept;

struct PseudorandomnessReport {
  Condition condition = Condition::linear_forms;
  EstimateMode mode = EstimateMode::exact;
  EstimatorResult estimate;
  double target = 1.0;
  double deviation = 0.0;  // |estimate.value - target|
  std::map<std::string, double> parameters;
  double verdict_threshold = 0.0;
  std::map<std::string, double> details;
  double wall_time_ms = 0.0;

  /// Linear forms: deviation <= threshold. Correlation: the largest
  /// LHS / bound ratio is <= threshold.
  bool passed() const noexcept;
};

/// (nu + 1) / 2.
GridFunction halfway(const GridFunction& nu);

/// E(prod_i nu(psi_i(x)) | x in Z_N^t); exact enumeration needs N^t * m
/// within options.budget.
PseudorandomnessReport verify_linear_forms(const GridFunction& nu, const LinearFormSystem& system,
                                           const EstimatorOptions& options = {},
                                           double verdict_threshold = 0.25);

/// Constants of the weight tau. A <= 0 selects the default exponent 2m.
struct TauParams {
  double C = 4.0;
  double A = 0.0;

  double exponent(int m) const noexcept { return A > 0.0 ? A : 2.0 * m; }
};

/// tau(n) = C prod_{p | n} (1 + p^{-1/2})^A for n != 0, and
/// exp(C m log N / log log N) for n = 0.
double tau_weight(std::int64_t n, int m, std::uint64_t N, double C, double A);

/// For each tuple: exact LHS E_x prod nu(x + h_i) against sum_{i<j}
/// tau(h_i - h_j) (differences centred in (-N/2, N/2]). Reports the largest
/// ratio and moments E(tau^q) over Z_N.
PseudorandomnessReport verify_correlation(const GridFunction& nu, int m,
                                          const std::vector<std::vector<std::int64_t>>& h_tuples,
                                          const std::vector<double>& q_list, const TauParams& tau = {});

/// omega_X(p): density in Z_p^t of common zeros of theta_i = W psi_i + 1,
/// i in X, computed by enumeration of Z_p^t on the denominator-cleared system.
Rational local_factor_omega(const LinearFormSystem& system, std::uint64_t W, std::uint64_t p,
                            const std::vector<std::size_t>& X, std::uint64_t budget = kDefaultExactBudget);

struct IntegerInterval {
  std::int64_t lo = 0;
  std::int64_t hi = 0;  // inclusive
  std::uint64_t length() const noexcept { return hi >= lo ? static_cast<std::uint64_t>(hi - lo + 1) : 0; }
};

/// Source of Lambda_R values; the default builds a sieved table.
using LambdaRSource = std::function<double(std::uint64_t)>;

struct GyCheckResult {
  EstimatorResult estimate;   // ratio LHS / reference
  double raw_mean = 0.0;      // LHS
  double reference = 0.0;     // (W log R / phi(W))^m, times the Delta factor for correlations
  bool short_box = false;     // some side shorter than R^{10m}
  std::map<std::string, double> details;
};

/// E(prod_i Lambda_R(theta_i(x))^2 | x in box) / (W log R / phi(W))^m, with
/// theta_i = W psi_i + 1 on the integral system. Exact for boxes within
/// budget (or mode = exact), sampled otherwise.
GyCheckResult gy_moment_check(const MajorantParams& params, const LinearFormSystem& system,
                              const std::vector<IntegerInterval>& box, const EstimatorOptions& options = {},
                              const LambdaRSource& lambda_r = {});

/// prod_{i<j} |h_i - h_j| if it fits in 64 bits. Throws for repeated shifts.
std::optional<std::uint64_t> shift_discriminant(const std::vector<std::int64_t>& h);

/// Distinct primes dividing prod_{i<j} |h_i - h_j|.
std::vector<std::uint64_t> discriminant_primes(const std::vector<std::int64_t>& h);

/// E(prod_i Lambda_R(W(x + h_i) + 1)^2 | x in B) divided by
/// (W log R / phi(W))^m prod_{p | Delta} (1 + p^{-1/2})^A.
GyCheckResult gy2_correlation_check(const MajorantParams& params, const std::vector<std::int64_t>& h,
                                    const IntegerInterval& B, const TauParams& tau = {},
                                    const LambdaRSource& lambda_r = {});

/// nu(x) = log N with probability 1/log N, else 0, independently; chunk c of
/// 4096 residues draws from stream (seed, c).
GridFunction bernoulli_measure(std::uint64_t N, std::uint64_t seed);

/// ||nu - 1||_{U^2} of the majorant for each N (all prime), Fourier-exact.
std::vector<std::pair<std::uint64_t, double>> majorant_uniformity_trend(int k, std::uint64_t w, double theta,
                                                                       const std::vector<std::uint64_t>& moduli);

struct PolynomialProbe {
  double max_abs_correlation = 0.0;
  double mean_abs_correlation = 0.0;
  std::size_t trials = 0;
};

/// |<nu - 1, Phi(DF_1, ..., DF_K)>| for random F_j with |F_j| <= nu + 1 and
/// random real polynomials Phi of total degree <= degree (coefficients in
/// [-1, 1]). Dual functions use the d = 2 Fourier formula for k = 3 and exact
/// enumeration otherwise.
PolynomialProbe polynomial_correlation_probe(const GridFunction& nu, int k, int K, int degree,
                                             std::size_t trials, std::uint64_t seed);

}  // namespace apkit
