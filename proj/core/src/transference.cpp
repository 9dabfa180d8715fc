#include "apkit/transference.hpp"

#include <algorithm>
#include <cmath>
#include <limits>
#include <set>
#include <sstream>

#include "apkit/arith.hpp"
#include "apkit/errors.hpp"
#include "apkit/parallel.hpp"
#include "apkit/random.hpp"
#include "apkit/summation.hpp"

namespace apkit {

namespace {

constexpr std::size_t kChunks = 64;

void require_common_group(const std::vector<GridFunction>& fs) {
  for (const auto& f : fs) {
    if (!(f.group() == fs.front().group())) throw InvalidArgument("functions live on different groups");
  }
}

GowersEstimate uniformity_norm(const GridFunction& F, int d, EstimateMode mode, std::uint64_t samples,
                               std::uint64_t seed, std::uint64_t budget) {
  if (mode != EstimateMode::monte_carlo) {
    if (d == 2) return gowers_norm_u2_fourier(F);
    if (exact_inner_cost(F.size(), d) <= budget) return gowers_norm(F, d, budget);
  }
  return gowers_norm_mc(F, d, samples, seed);
}

}  // namespace

double ap_expectation(const std::vector<GridFunction>& fs, const std::vector<std::int64_t>& cs) {
  if (fs.empty() || fs.size() != cs.size()) throw InvalidArgument("ap_expectation needs k functions and k steps");
  require_common_group(fs);
  const CyclicGroup& G = fs.front().group();
  if (!G.is_prime()) throw InvalidArgument("ap_expectation requires a prime modulus");
  if (std::set<std::int64_t>(cs.begin(), cs.end()).size() != cs.size()) {
    throw InvalidArgument("ap_expectation requires distinct steps");
  }
  const std::uint64_t N = G.modulus();
  std::vector<std::uint64_t> steps(cs.size());
  for (std::size_t j = 0; j < cs.size(); ++j) steps[j] = G.reduce(cs[j]);

  const std::size_t chunks = static_cast<std::size_t>(std::min<std::uint64_t>(kChunks, N));
  std::vector<double> parts(chunks, 0.0);
  parallel_for_chunks(chunks, [&](std::size_t c) {
    const std::uint64_t lo = N * c / chunks;
    const std::uint64_t hi = N * (c + 1) / chunks;
    std::vector<double> row(N);
    std::vector<double> rows;
    std::vector<std::uint64_t> pos(steps.size());
    for (std::uint64_t r = lo; r < hi; ++r) {
      std::vector<std::uint64_t> stride(steps.size());
      for (std::size_t j = 0; j < steps.size(); ++j) {
        stride[j] = static_cast<std::uint64_t>(static_cast<unsigned __int128>(steps[j]) * r % N);
        pos[j] = stride[j];
      }
      for (std::uint64_t x = 0; x < N; ++x) {
        double prod = 1.0;
        for (std::size_t j = 0; j < steps.size(); ++j) {
          prod *= fs[j][pos[j]];
          pos[j] = G.add(pos[j], 1);
        }
        row[x] = prod;
      }
      rows.push_back(pairwise_sum(row));
    }
    parts[c] = pairwise_sum(rows);
  });
  return pairwise_sum(parts) / (static_cast<double>(N) * static_cast<double>(N));
}

GvnReport gvn_check(const GridFunction& nu, int k, std::size_t trials, std::uint64_t seed) {
  if (k < 3) throw InvalidArgument("gvn_check requires k >= 3");
  for (std::size_t x = 0; x < nu.size(); ++x) {
    if (nu[x] < 0.0) throw InvalidArgument("gvn_check requires a nonnegative measure");
  }
  const std::size_t N = nu.size();
  const int d = k - 1;
  static const char* const kKinds[] = {"signed", "one_dominant", "scaled"};
  std::vector<std::int64_t> cs(static_cast<std::size_t>(k));
  for (int j = 0; j < k; ++j) cs[static_cast<std::size_t>(j)] = j;

  GvnReport report;
  report.k = k;
  for (std::size_t trial = 0; trial < trials; ++trial) {
    Rng rng(seed, trial);
    const std::size_t kind = trial % 3;
    std::vector<GridFunction> fs;
    for (int j = 0; j < k; ++j) {
      std::vector<double> vals(N);
      for (std::size_t x = 0; x < N; ++x) {
        switch (kind) {
          case 0:  // random signs times nu
            vals[x] = (rng() >> 63) != 0U ? nu[x] : -nu[x];
            break;
          case 1:  // slot 0 is nu + 1, others random signs times nu + 1
            vals[x] = j == 0 ? nu[x] + 1.0 : ((rng() >> 63) != 0U ? nu[x] + 1.0 : -(nu[x] + 1.0));
            break;
          default:
            vals[x] = (2.0 * rng.uniform() - 1.0) * (nu[x] + 1.0);
            break;
        }
      }
      fs.emplace_back(nu.group(), std::move(vals));
    }
    GvnCase c;
    c.kind = kKinds[kind];
    c.abs_expectation = std::abs(ap_expectation(fs, cs));
    c.min_norm = std::numeric_limits<double>::infinity();
    for (const auto& f : fs) {
      c.min_norm = std::min(c.min_norm, uniformity_norm(f, d, EstimateMode::exact, 0, 0, kDefaultExactBudget).norm_value);
    }
    report.max_abs_expectation = std::max(report.max_abs_expectation, c.abs_expectation);
    report.cases.push_back(std::move(c));
  }
  double sxy = 0.0;
  double sxx = 0.0;
  for (const auto& c : report.cases) {
    sxy += c.abs_expectation * c.min_norm;
    sxx += c.min_norm * c.min_norm;
  }
  report.slope = sxx > 0.0 ? sxy / sxx : 0.0;
  for (const auto& c : report.cases) {
    report.max_residual = std::max(report.max_residual, c.abs_expectation - report.slope * c.min_norm);
  }
  return report;
}

std::uint64_t count_prime_aps(int k, std::uint64_t limit) {
  if (k < 2) throw InvalidArgument("count_prime_aps requires k >= 2");
  if (limit < 2) return 0;
  const SieveTables sieve = build_sieve(limit);
  const auto& primes = sieve.primes();
  if (k == 2) {
    const std::uint64_t n = primes.size();
    return n * (n - 1) / 2;
  }
  std::vector<std::uint8_t> prime(limit + 1, 0);
  for (const auto p : primes) prime[p] = 1;
  const auto km1 = static_cast<std::uint64_t>(k - 1);
  const std::size_t chunks = std::min<std::size_t>(kChunks, primes.size());
  std::vector<std::uint64_t> parts(chunks, 0);
  // Interleaved assignment balances the triangular workload.
  parallel_for_chunks(chunks, [&](std::size_t c) {
    std::uint64_t count = 0;
    for (std::size_t i = c; i < primes.size(); i += chunks) {
      const std::uint64_t p = primes[i];
      if (p + km1 > limit) break;
      const std::uint64_t max_d = (limit - p) / km1;
      for (std::size_t j = i + 1; j < primes.size(); ++j) {
        const std::uint64_t d = primes[j] - p;
        if (d > max_d) break;
        bool ok = true;
        for (std::uint64_t t = 2; t <= km1; ++t) {
          if (prime[p + t * d] == 0) {
            ok = false;
            break;
          }
        }
        if (ok) ++count;
      }
    }
    parts[c] = count;
  });
  std::uint64_t total = 0;
  for (const auto v : parts) total += v;
  return total;
}

double level_interval_bound(int k) {
  if (k < 2 || k > 7) throw InvalidArgument("level_interval_bound requires 2 <= k <= 7");
  return std::ldexp(1.0, 1 << (k - 1));
}

LevelSigma build_level_sigma(const GridFunction& G, double epsilon, double eta, const GridFunction& nu,
                             std::size_t alpha_grid, double bound) {
  if (!(epsilon > 0.0)) throw InvalidArgument("build_level_sigma requires epsilon > 0");
  if (!(eta > 0.0 && eta < 0.5)) throw InvalidArgument("build_level_sigma requires eta in (0, 1/2)");
  if (alpha_grid == 0) throw InvalidArgument("build_level_sigma requires a non-empty alpha grid");
  if (!(G.group() == nu.group())) throw InvalidArgument("G and nu live on different groups");
  const std::size_t N = G.size();
  for (std::size_t x = 0; x < N; ++x) {
    if (std::abs(G[x]) > bound) {
      std::ostringstream msg;
      msg << "G(" << x << ") = " << G[x] << " lies outside [-" << bound << ", " << bound << "]";
      throw InvalidArgument(msg.str());
    }
  }
  std::vector<double> scaled(N);
  for (std::size_t x = 0; x < N; ++x) scaled[x] = G[x] / epsilon;

  LevelSigma out{SigmaAlgebra::trivial(G.group()), 0.0, {}, 0.0};
  out.boundary_masses.resize(alpha_grid);
  std::vector<double> terms(N);
  for (std::size_t a = 0; a < alpha_grid; ++a) {
    const double alpha = static_cast<double>(a) / static_cast<double>(alpha_grid);
    for (std::size_t x = 0; x < N; ++x) {
      const double s = scaled[x] - alpha;
      const double dist = std::abs(s - std::round(s));
      terms[x] = dist <= eta ? nu[x] + 1.0 : 0.0;
    }
    out.boundary_masses[a] = pairwise_sum(terms) / static_cast<double>(N);
  }
  const auto best = std::min_element(out.boundary_masses.begin(), out.boundary_masses.end());
  const auto best_index = static_cast<std::size_t>(best - out.boundary_masses.begin());
  out.alpha = static_cast<double>(best_index) / static_cast<double>(alpha_grid);
  out.chosen_mass = *best;

  std::vector<std::int64_t> labels(N);
  for (std::size_t x = 0; x < N; ++x) labels[x] = static_cast<std::int64_t>(std::floor(scaled[x] - out.alpha));
  out.sigma = SigmaAlgebra::from_labels(G.group(), labels);
  return out;
}

ResidueSet exceptional_set(const SigmaAlgebra& sigma, const GridFunction& nu, double eta) {
  if (!(eta > 0.0)) throw InvalidArgument("exceptional_set requires eta > 0");
  if (!(sigma.group() == nu.group())) throw InvalidArgument("sigma and nu live on different groups");
  const GridFunction weight = nu + GridFunction::constant(nu.group(), 1.0);
  const std::vector<double> masses = atom_masses(weight, sigma);
  const double cutoff = std::sqrt(eta);
  ResidueSet omega(sigma.group());
  for (std::size_t x = 0; x < nu.size(); ++x) {
    if (masses[sigma.atom_of(x)] <= cutoff) omega.insert(x);
  }
  return omega;
}

double energy(const GridFunction& f, const SigmaAlgebra& sigma, const ResidueSet& omega) {
  const GridFunction g = omega.complement_indicator() * conditional_expectation(f, sigma);
  return inner_product(g, g);
}

std::uint64_t k0(int k, double epsilon) {
  if (k < 1 || k > 5) throw InvalidArgument("k0 requires 1 <= k <= 5");
  if (!(epsilon > 0.0)) throw InvalidArgument("k0 requires epsilon > 0");
  const double x = std::ldexp(1.0, 1 << k) / epsilon + 1.0;
  if (x >= 1.8e19) return std::numeric_limits<std::uint64_t>::max();
  return static_cast<std::uint64_t>(std::floor(x)) + 1;
}

DecompositionResult kvn_decompose(const GridFunction& f, const GridFunction& nu, const DecompositionConfig& config) {
  const int k = config.k;
  const double eps = config.epsilon;
  const double eta = config.effective_eta();
  if (k < 3) throw InvalidArgument("kvn_decompose requires k >= 3");
  if (!(eps > 0.0 && eps < 1.0)) throw InvalidArgument("kvn_decompose requires epsilon in (0, 1)");
  if (!(eta > 0.0 && eta < 0.5 && eta < eps)) throw InvalidArgument("kvn_decompose requires 0 < eta < min(epsilon, 1/2)");
  if (!(f.group() == nu.group())) throw InvalidArgument("f and nu live on different groups");
  const CyclicGroup& G = f.group();
  const std::size_t N = f.size();
  {
    double worst = 0.0;
    std::size_t where = 0;
    for (std::size_t x = 0; x < N; ++x) {
      const double excess = std::max(-f[x], f[x] - nu[x]);
      if (excess > worst) {
        worst = excess;
        where = x;
      }
    }
    if (worst > 0.0) {
      std::ostringstream msg;
      msg << "kvn_decompose requires 0 <= f <= nu; worst residue " << worst << " at x = " << where
          << " (f = " << f[where] << ", nu = " << nu[where] << ")";
      throw InvalidArgument(msg.str());
    }
  }

  const int d = k - 1;
  const double threshold = std::pow(eps, 1.0 / std::ldexp(1.0, k));
  const std::uint64_t cap = config.max_iterations_override.value_or(k0(k, eps));
  const std::size_t grid = config.alpha_grid != 0 ? config.alpha_grid : static_cast<std::size_t>(std::ceil(1.0 / eta));
  const double declared_bound = level_interval_bound(k);
  const GridFunction weight = nu + GridFunction::constant(G, 1.0);

  SigmaAlgebra B = SigmaAlgebra::trivial(G);
  ResidueSet omega(G);
  std::vector<double> energies;
  std::vector<DecompositionStep> trace;
  double last_alpha = 0.0;
  double last_sup = 0.0;
  std::uint64_t K = 0;
  bool success = false;
  GowersEstimate uniformity;
  std::optional<GridFunction> F;
  std::optional<GridFunction> cond;

  for (;;) {
    cond = conditional_expectation(f, B);
    const GridFunction outside = omega.complement_indicator();
    F = outside * (f - *cond);
    uniformity = uniformity_norm(*F, d, config.uniformity_mode, config.samples, splitmix64(config.seed + K),
                                 config.budget);

    DecompositionStep step;
    step.K = K;
    const GridFunction anti = outside * *cond;
    step.energy = inner_product(anti, anti);
    step.uniformity = uniformity.norm_value;
    step.uniformity_std_error = uniformity.std_error;
    step.uniformity_mode = uniformity.mode;
    step.atom_count = B.atom_count();
    step.omega_mass = inner_product(weight, omega.indicator());
    step.chosen_alpha = last_alpha;
    step.dual_sup = last_sup;
    energies.push_back(step.energy);
    trace.push_back(step);

    if (uniformity.norm_value + 2.0 * uniformity.std_error <= threshold) {
      success = true;
      break;
    }
    if (K >= cap) break;

    GridFunction DF = [&] {
      if (d == 2 && config.uniformity_mode != EstimateMode::monte_carlo) return dual_function_u2_fourier(*F);
      DualOptions opts;
      opts.seed = splitmix64(config.seed ^ (K + 0x5bd1e995ULL));
      opts.budget = config.budget;
      opts.mode = config.uniformity_mode != EstimateMode::monte_carlo && exact_dual_cost(N, d) <= config.budget
                      ? DualMode::exact
                      : DualMode::monte_carlo;
      return dual_function(*F, d, opts);
    }();
    last_sup = lq_norm(DF, std::numeric_limits<double>::infinity());
    // Measures that are not pseudorandom at this scale can push DF past the
    // declared interval; the interval is widened so the run can continue and
    // dual_sup records it.
    const double bound = std::max(declared_bound, last_sup);
    const LevelSigma level = build_level_sigma(DF, eps, eta, nu, grid, bound);
    last_alpha = level.alpha;
    B = join_sigma(B, level.sigma);
    omega |= exceptional_set(B, nu, eta);
    ++K;
  }

  const GridFunction outside = omega.complement_indicator();
  GridFunction anti = outside * *cond;
  double max_outside = -std::numeric_limits<double>::infinity();
  for (std::size_t x = 0; x < N; ++x) {
    if (!omega.contains(x)) max_outside = std::max(max_outside, (*cond)[x]);
  }
  if (omega.count() == N) max_outside = 0.0;

  return DecompositionResult{B,
                             omega,
                             *F,
                             std::move(anti),
                             std::move(energies),
                             K,
                             uniformity,
                             success,
                             std::move(trace),
                             threshold,
                             cap,
                             max_outside};
}

}  // namespace apkit
