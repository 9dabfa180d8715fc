#pragma once

// Gowers inner products, uniformity norms and dual functions on Z_N.

#include <cstdint>
#include <vector>

#include "apkit/fourier.hpp"
#include "apkit/zn_core.hpp"

namespace apkit {

/// Default cap on multiply-accumulate operations for exact enumeration.
inline constexpr std::uint64_t kDefaultExactBudget = 1'000'000'000;

/// (f_omega) indexed by omega in {0,1}^d, stored with bit (j-1) of the index
/// holding omega_j.
class CubeFamily {
 public:
  CubeFamily(int dimension, std::vector<GridFunction> functions);

  static CubeFamily constant(const GridFunction& f, int dimension);

  int dimension() const noexcept { return dimension_; }
  const CyclicGroup& group() const noexcept { return functions_.front().group(); }
  const GridFunction& at(std::size_t omega) const { return functions_.at(omega); }
  const std::vector<GridFunction>& functions() const noexcept { return functions_; }

 private:
  int dimension_;
  std::vector<GridFunction> functions_;
};

enum class EstimateMode { exact, fourier, monte_carlo };

const char* to_string(EstimateMode mode) noexcept;

struct GowersEstimate {
  double norm_value = 0.0;   // max(raised_value, 0)^(1/2^d)
  double raised_value = 0.0; // the 2^d-th power, i.e. the inner product
  EstimateMode mode = EstimateMode::exact;
  double std_error = 0.0;
  int dimension = 0;
  std::uint64_t samples = 0;

  static GowersEstimate from_raised(double raised, int d, EstimateMode mode, double std_error = 0.0,
                                    std::uint64_t samples = 0);
};

/// Number of multiply-accumulates the exact evaluators spend on a family of
/// dimension d over Z_N.
std::uint64_t exact_inner_cost(std::uint64_t n, int d);
std::uint64_t exact_dual_cost(std::uint64_t n, int d);

/// Exact <(f_omega)>_{U^d}. Throws BudgetExceeded when the enumeration would
/// exceed `budget` operations (use gowers_norm_mc instead).
double gowers_inner(const CubeFamily& family, std::uint64_t budget = kDefaultExactBudget);

/// Exact ||f||_{U^d}; for d = 1 this is |E f|.
GowersEstimate gowers_norm(const GridFunction& f, int d, std::uint64_t budget = kDefaultExactBudget);

/// ||f||_{U^2} = (sum_xi |f^(xi)|^4)^(1/4), O(N log N).
GowersEstimate gowers_norm_u2_fourier(const GridFunction& f);

/// Unbiased Monte Carlo estimate over uniformly sampled (x, h). Samples are
/// split into fixed chunks, chunk i drawing from stream (seed, i).
GowersEstimate gowers_norm_mc(const GridFunction& f, int d, std::uint64_t samples, std::uint64_t seed);

enum class DualMode { exact, monte_carlo, fourier };

struct DualOptions {
  DualMode mode = DualMode::exact;
  std::uint64_t samples = 10'000;  // per point, Monte Carlo only
  std::uint64_t seed = 0;
  std::uint64_t budget = kDefaultExactBudget;
};

/// DF(x) = E_h prod_{omega != 0} F(x + omega.h), h in Z_N^d. Fourier mode
/// requires d = 2.
GridFunction dual_function(const GridFunction& F, int d, const DualOptions& options = {});

/// DF(x) = sum_xi |F^(xi)|^2 F^(xi) e(x xi / N)  (the d = 2 closed form).
GridFunction dual_function_u2_fourier(const GridFunction& F);

/// (sum_xi |g^(xi)|^{4/3})^{3/4}.
double dual_norm_u2_fourier(const GridFunction& g);

/// ||DF||_{(U^d)*} through the identity ||DF||_* = ||F||_{U^d}^{2^d - 1}.
double dual_norm_of_dual_function(const GridFunction& F, int d, std::uint64_t budget = kDefaultExactBudget);

}  // namespace apkit
