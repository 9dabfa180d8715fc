#pragma once

// Progression averages, the generalised von Neumann check, level-set
// sigma-algebras, exceptional sets and the energy-increment decomposition.

#include <cstdint>
#include <optional>
#include <string>
#include <vector>

#include "apkit/gowers.hpp"
#include "apkit/zn_core.hpp"

namespace apkit {

/// E(prod_j f_j(x + c_j r) | x, r in Z_N), r = 0 included. N^2 k products.
double ap_expectation(const std::vector<GridFunction>& fs, const std::vector<std::int64_t>& cs);

struct GvnCase {
  std::string kind;            // "signed", "one_dominant" or "scaled"
  double abs_expectation = 0.0;
  double min_norm = 0.0;       // min_j ||f_j||_{U^{k-1}}
};

struct GvnReport {
  int k = 0;
  std::vector<GvnCase> cases;
  double slope = 0.0;          // least squares through the origin of |E| on min_norm
  double max_residual = 0.0;   // max(|E| - slope * min_norm, 0)
  double max_abs_expectation = 0.0;
};

/// Random tuples (f_0..f_{k-1}) with |f_j| <= nu + 1, progression steps
/// c_j = j. Trial i draws from stream (seed, i); kinds rotate through random
/// signs times nu, one slot fixed to nu + 1, and uniform scalings of nu + 1.
GvnReport gvn_check(const GridFunction& nu, int k, std::size_t trials, std::uint64_t seed);

/// Number of k-term progressions p, p + d, ..., p + (k-1) d of primes with
/// d >= 1 and last term <= limit. k = 2 counts pairs of primes.
std::uint64_t count_prime_aps(int k, std::uint64_t limit);

struct LevelSigma {
  SigmaAlgebra sigma;
  double alpha = 0.0;
  std::vector<double> boundary_masses;  // one per grid candidate
  double chosen_mass = 0.0;
};

/// Atoms {x : floor(G(x)/eps - alpha) = n}, with alpha chosen from
/// {0, 1/g, ..., (g-1)/g} to minimise sum_n E((nu + 1) 1{|G/eps - alpha - n| <= eta}).
/// Throws if some |G(x)| exceeds bound.
LevelSigma build_level_sigma(const GridFunction& G, double epsilon, double eta, const GridFunction& nu,
                             std::size_t alpha_grid, double bound);

/// Half-width 2^{2^{k-1}} of the interval that contains dual functions of
/// admissible F.
double level_interval_bound(int k);

/// Union of the atoms A with E((nu + 1) 1_A) <= eta^{1/2}.
ResidueSet exceptional_set(const SigmaAlgebra& sigma, const GridFunction& nu, double eta);

/// ||(1 - 1_Omega) E(f | sigma)||_{L^2}^2.
double energy(const GridFunction& f, const SigmaAlgebra& sigma, const ResidueSet& omega);

/// Smallest integer greater than 2^{2^k} / eps + 1.
std::uint64_t k0(int k, double epsilon);

struct DecompositionConfig {
  int k = 3;
  double epsilon = 0.05;
  double eta = 0.0;  // <= 0 selects epsilon / 10
  /// exact (Fourier for k = 3, enumeration for k >= 4 within budget, else
  /// sampled) or monte_carlo.
  EstimateMode uniformity_mode = EstimateMode::exact;
  std::uint64_t samples = 1'000'000;
  std::uint64_t seed = 0;
  std::optional<std::uint64_t> max_iterations_override;
  std::size_t alpha_grid = 0;  // 0 selects ceil(1 / eta)
  std::uint64_t budget = kDefaultExactBudget;

  double effective_eta() const noexcept { return eta > 0.0 ? eta : epsilon / 10.0; }
};

struct DecompositionStep {
  std::uint64_t K = 0;
  double energy = 0.0;
  double uniformity = 0.0;
  double uniformity_std_error = 0.0;
  EstimateMode uniformity_mode = EstimateMode::exact;
  std::size_t atom_count = 0;
  double omega_mass = 0.0;    // E((nu + 1) 1_Omega)
  double chosen_alpha = 0.0;  // alpha of the level algebra that produced B_K (0 for K = 0)
  double dual_sup = 0.0;      // ||DF_K||_inf of the dual that produced B_K
};

struct DecompositionResult {
  SigmaAlgebra sigma;
  ResidueSet omega;
  GridFunction f_uniform;
  GridFunction f_antiuniform;
  std::vector<double> energy_trace;
  std::uint64_t iterations = 0;
  GowersEstimate final_uniformity;
  bool terminated_successfully = false;
  std::vector<DecompositionStep> trace;
  double threshold = 0.0;                    // eps^{1/2^k}
  std::uint64_t iteration_cap = 0;
  double max_conditional_outside_omega = 0.0;
};

/// Energy-increment decomposition (1 - 1_Omega) f = f_uniform + f_antiuniform.
/// Requires 0 <= f <= nu pointwise; the first violation is reported.
DecompositionResult kvn_decompose(const GridFunction& f, const GridFunction& nu, const DecompositionConfig& config);

}  // namespace apkit
