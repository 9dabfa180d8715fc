#include "apkit/gowers.hpp"

#include <algorithm>
#include <bit>
#include <cmath>
#include <limits>
#include <string>

#include "apkit/errors.hpp"
#include "moments.hpp"
#include "apkit/parallel.hpp"
#include "apkit/random.hpp"
#include "apkit/summation.hpp"

namespace apkit {

namespace {

constexpr std::uint64_t kSaturated = std::numeric_limits<std::uint64_t>::max();

std::uint64_t sat_mul(std::uint64_t a, std::uint64_t b) {
  std::uint64_t out = 0;
  return __builtin_mul_overflow(a, b, &out) ? kSaturated : out;
}

std::uint64_t sat_add(std::uint64_t a, std::uint64_t b) {
  std::uint64_t out = 0;
  return __builtin_add_overflow(a, b, &out) ? kSaturated : out;
}

void require_dimension(int d, int min_d) {
  if (d < min_d || d > 16) {
    throw InvalidArgument("cube dimension " + std::to_string(d) + " out of range");
  }
}

constexpr std::uint64_t kSampleChunk = std::uint64_t{1} << 14;

// Exact cube averages over raw arrays. The innermost level uses
// <f0, f1>_{U^1} = E(f0) E(f1).
class InnerEvaluator {
 public:
  InnerEvaluator(std::size_t n, int d) : n_(n), scratch_(static_cast<std::size_t>(d) + 1) {
    for (int level = 0; level <= d; ++level) {
      const std::size_t half = level == 0 ? 0 : (std::size_t{1} << (level - 1));
      scratch_[level].per_h.resize(n);
      scratch_[level].buffers.assign(half, std::vector<double>(n));
    }
  }

  double evaluate(const std::vector<const double*>& fs, int d) {
    if (d == 0) return mean(fs[0]);
    if (d == 1) return mean(fs[0]) * mean(fs[1]);
    auto& s = scratch_[d];
    for (std::size_t h = 0; h < n_; ++h) s.per_h[h] = slice(fs, d, h);
    return pairwise_sum(s.per_h) / static_cast<double>(n_);
  }

  // Value of the d-1 inner product obtained by fixing h_d = h.
  double slice(const std::vector<const double*>& fs, int d, std::size_t h) {
    auto& s = scratch_[d];
    const std::size_t half = std::size_t{1} << (d - 1);
    std::vector<const double*> next(half);
    for (std::size_t w = 0; w < half; ++w) {
      const double* f0 = fs[w];
      const double* f1 = fs[w | half];
      double* g = s.buffers[w].data();
      const std::size_t split = n_ - h;
      for (std::size_t y = 0; y < split; ++y) g[y] = f0[y] * f1[y + h];
      for (std::size_t y = split; y < n_; ++y) g[y] = f0[y] * f1[y + h - n_];
      next[w] = g;
    }
    return evaluate(next, d - 1);
  }

 private:
  double mean(const double* f) const {
    return pairwise_sum(std::span<const double>(f, n_)) / static_cast<double>(n_);
  }

  struct Level {
    std::vector<double> per_h;
    std::vector<std::vector<double>> buffers;
  };
  std::size_t n_;
  std::vector<Level> scratch_;
};

// Exact dual function: DF_d[F](x) = E_h F(x+h) DF_{d-1}[F * F(.+h)](x).
class DualEvaluator {
 public:
  explicit DualEvaluator(std::size_t n) : n_(n) {}

  // Accumulates sum_{h in [h_begin, h_end)} F(x+h) DF_{d-1}[G_h](x) into acc
  // (compensated), unnormalized.
  void accumulate(const std::vector<double>& f, int d, std::size_t h_begin, std::size_t h_end,
                  std::vector<double>& acc, std::vector<double>& comp) const {
    std::vector<double> g(n_);
    for (std::size_t h = h_begin; h < h_end; ++h) {
      const std::size_t split = n_ - h;
      for (std::size_t y = 0; y < split; ++y) g[y] = f[y] * f[y + h];
      for (std::size_t y = split; y < n_; ++y) g[y] = f[y] * f[y + h - n_];
      const std::vector<double> inner = dual(g, d - 1);
      for (std::size_t x = 0; x < n_; ++x) {
        const std::size_t xh = x < split ? x + h : x + h - n_;
        neumaier_add(acc[x], comp[x], f[xh] * inner[x]);
      }
    }
  }

  std::vector<double> dual(const std::vector<double>& f, int d) const {
    if (d == 1) {
      return std::vector<double>(n_, pairwise_sum(f) / static_cast<double>(n_));
    }
    std::vector<double> acc(n_, 0.0), comp(n_, 0.0);
    accumulate(f, d, 0, n_, acc, comp);
    for (std::size_t x = 0; x < n_; ++x) acc[x] = (acc[x] + comp[x]) / static_cast<double>(n_);
    return acc;
  }

  static void neumaier_add(double& sum, double& comp, double v) noexcept {
    const double t = sum + v;
    if (std::abs(sum) >= std::abs(v)) {
      comp += (sum - t) + v;
    } else {
      comp += (v - t) + sum;
    }
    sum = t;
  }

 private:
  std::size_t n_;
};

constexpr std::size_t kParallelChunks = 64;

}  // namespace

const char* to_string(EstimateMode mode) noexcept {
  switch (mode) {
    case EstimateMode::exact: return "exact";
    case EstimateMode::fourier: return "fourier";
    case EstimateMode::monte_carlo: return "monte_carlo";
  }
  return "unknown";
}

GowersEstimate GowersEstimate::from_raised(double raised, int d, EstimateMode mode, double std_error,
                                           std::uint64_t samples) {
  GowersEstimate e;
  e.raised_value = raised;
  e.dimension = d;
  e.mode = mode;
  e.std_error = mode == EstimateMode::monte_carlo ? std_error : 0.0;
  e.samples = samples;
  const double power = std::ldexp(1.0, -d);
  e.norm_value = raised > 0.0 ? std::pow(raised, power) : 0.0;
  return e;
}

CubeFamily::CubeFamily(int dimension, std::vector<GridFunction> functions)
    : dimension_(dimension), functions_(std::move(functions)) {
  require_dimension(dimension, 0);
  if (functions_.size() != (std::size_t{1} << dimension)) {
    throw InvalidArgument("cube family of dimension " + std::to_string(dimension) + " needs " +
                          std::to_string(std::size_t{1} << dimension) + " functions");
  }
  for (const auto& f : functions_) {
    if (!(f.group() == functions_.front().group())) {
      throw InvalidArgument("cube family functions live on different groups");
    }
  }
}

CubeFamily CubeFamily::constant(const GridFunction& f, int dimension) {
  require_dimension(dimension, 0);
  return CubeFamily(dimension, std::vector<GridFunction>(std::size_t{1} << dimension, f));
}

std::uint64_t exact_inner_cost(std::uint64_t n, int d) {
  if (d <= 1) return sat_mul(2, n);
  const std::uint64_t half = std::uint64_t{1} << (d - 1);
  return sat_mul(n, sat_add(sat_mul(half, n), exact_inner_cost(n, d - 1)));
}

std::uint64_t exact_dual_cost(std::uint64_t n, int d) {
  if (d <= 1) return n;
  return sat_mul(n, sat_add(sat_mul(2, n), exact_dual_cost(n, d - 1)));
}

double gowers_inner(const CubeFamily& family, std::uint64_t budget) {
  const int d = family.dimension();
  const std::size_t n = family.group().size();
  const std::uint64_t cost = exact_inner_cost(n, d);
  if (cost > budget) {
    throw BudgetExceeded("exact U^" + std::to_string(d) + " enumeration on Z_" + std::to_string(n) +
                         " needs ~" + std::to_string(cost) + " operations (budget " +
                         std::to_string(budget) + "); use gowers_norm_mc");
  }
  std::vector<const double*> fs;
  fs.reserve(family.functions().size());
  for (const auto& f : family.functions()) fs.push_back(f.values().data());
  if (d <= 1) return InnerEvaluator(n, d).evaluate(fs, d);

  std::vector<double> per_h(n);
  const std::size_t chunks = std::min(n, kParallelChunks);
  parallel_for_chunks(chunks, [&](std::size_t c) {
    InnerEvaluator ev(n, d);
    const std::size_t begin = c * n / chunks;
    const std::size_t end = (c + 1) * n / chunks;
    for (std::size_t h = begin; h < end; ++h) per_h[h] = ev.slice(fs, d, h);
  });
  return pairwise_sum(per_h) / static_cast<double>(n);
}

GowersEstimate gowers_norm(const GridFunction& f, int d, std::uint64_t budget) {
  require_dimension(d, 1);
  if (d == 1) {
    const double m = expectation(f);
    return GowersEstimate::from_raised(m * m, 1, EstimateMode::exact);
  }
  return GowersEstimate::from_raised(gowers_inner(CubeFamily::constant(f, d), budget), d,
                                     EstimateMode::exact);
}

GowersEstimate gowers_norm_u2_fourier(const GridFunction& f) {
  const auto coeffs = fourier_coefficients(f);
  std::vector<double> fourth(coeffs.size());
  for (std::size_t i = 0; i < coeffs.size(); ++i) {
    const double a = std::norm(coeffs[i]);
    fourth[i] = a * a;
  }
  return GowersEstimate::from_raised(pairwise_sum(fourth), 2, EstimateMode::fourier);
}

GowersEstimate gowers_norm_mc(const GridFunction& f, int d, std::uint64_t samples, std::uint64_t seed) {
  require_dimension(d, 1);
  if (samples < 100) throw InvalidArgument("Monte Carlo Gowers norm needs at least 100 samples");
  const std::uint64_t n = f.group().modulus();
  const std::size_t vertices = std::size_t{1} << d;
  const auto values = f.values();
  const std::size_t chunks = static_cast<std::size_t>((samples + kSampleChunk - 1) / kSampleChunk);
  std::vector<detail::Moments> partial(chunks);
  parallel_for_chunks(chunks, [&](std::size_t c) {
    Rng rng(seed, c);
    const std::uint64_t begin = c * kSampleChunk;
    const std::uint64_t end = std::min(samples, begin + kSampleChunk);
    std::vector<std::uint64_t> h(static_cast<std::size_t>(d));
    std::vector<std::uint64_t> point(vertices);
    detail::Moments m;
    for (std::uint64_t s = begin; s < end; ++s) {
      const std::uint64_t x = rng.below(n);
      for (auto& hj : h) hj = rng.below(n);
      point[0] = x;
      double prod = values[x];
      for (std::size_t w = 1; w < vertices; ++w) {
        // point[w] = point[w without its lowest set bit] + h_{lowest bit}
        const int low = std::countr_zero(w);
        std::uint64_t p = point[w & (w - 1)] + h[static_cast<std::size_t>(low)];
        if (p >= n) p -= n;
        point[w] = p;
        prod *= values[p];
      }
      m.push(prod);
    }
    partial[c] = m;
  });
  detail::Moments total;
  for (const auto& m : partial) total.merge(m);
  return GowersEstimate::from_raised(total.mean, d, EstimateMode::monte_carlo, total.std_error(), samples);
}

GridFunction dual_function(const GridFunction& F, int d, const DualOptions& options) {
  require_dimension(d, 1);
  const std::size_t n = F.size();
  std::vector<double> f(F.values().begin(), F.values().end());
  switch (options.mode) {
    case DualMode::fourier: {
      if (d != 2) throw InvalidArgument("the Fourier dual-function formula is only available for d = 2");
      return dual_function_u2_fourier(F);
    }
    case DualMode::exact: {
      const std::uint64_t cost = exact_dual_cost(n, d);
      if (cost > options.budget) {
        throw BudgetExceeded("exact dual function of dimension " + std::to_string(d) + " on Z_" +
                             std::to_string(n) + " needs ~" + std::to_string(cost) +
                             " operations (budget " + std::to_string(options.budget) + ")");
      }
      DualEvaluator ev(n);
      if (d == 1) return GridFunction(F.group(), ev.dual(f, 1));
      const std::size_t chunks = std::min(n, kParallelChunks);
      std::vector<std::vector<double>> acc(chunks, std::vector<double>(n, 0.0));
      std::vector<std::vector<double>> comp(chunks, std::vector<double>(n, 0.0));
      parallel_for_chunks(chunks, [&](std::size_t c) {
        ev.accumulate(f, d, c * n / chunks, (c + 1) * n / chunks, acc[c], comp[c]);
      });
      std::vector<double> out(n);
      for (std::size_t x = 0; x < n; ++x) {
        double sum = 0.0;
        double cs = 0.0;
        for (std::size_t c = 0; c < chunks; ++c) {
          DualEvaluator::neumaier_add(sum, cs, acc[c][x]);
          DualEvaluator::neumaier_add(sum, cs, comp[c][x]);
        }
        out[x] = (sum + cs) / static_cast<double>(n);
      }
      return GridFunction(F.group(), std::move(out));
    }
    case DualMode::monte_carlo: {
      if (options.samples == 0) throw InvalidArgument("Monte Carlo dual function needs samples > 0");
      const std::size_t vertices = std::size_t{1} << d;
      std::vector<double> out(n);
      parallel_for_chunks(n, [&](std::size_t x) {
        Rng rng(options.seed, x);
        std::vector<std::uint64_t> h(static_cast<std::size_t>(d));
        std::vector<std::uint64_t> point(vertices);
        detail::Moments m;
        for (std::uint64_t s = 0; s < options.samples; ++s) {
          for (auto& hj : h) hj = rng.below(n);
          point[0] = x;
          double prod = 1.0;
          for (std::size_t w = 1; w < vertices; ++w) {
            const int low = std::countr_zero(w);
            std::uint64_t p = point[w & (w - 1)] + h[static_cast<std::size_t>(low)];
            if (p >= n) p -= n;
            point[w] = p;
            prod *= f[p];
          }
          m.push(prod);
        }
        out[x] = m.mean;
      });
      return GridFunction(F.group(), std::move(out));
    }
  }
  throw InvalidArgument("unknown dual-function mode");
}

GridFunction dual_function_u2_fourier(const GridFunction& F) {
  auto coeffs = fourier_coefficients(F);
  for (auto& c : coeffs) c *= std::norm(c);
  return fourier_synthesis(F.group(), coeffs);
}

double dual_norm_u2_fourier(const GridFunction& g) {
  const auto coeffs = fourier_coefficients(g);
  std::vector<double> powered(coeffs.size());
  for (std::size_t i = 0; i < coeffs.size(); ++i) powered[i] = std::pow(std::abs(coeffs[i]), 4.0 / 3.0);
  return std::pow(pairwise_sum(powered), 0.75);
}

double dual_norm_of_dual_function(const GridFunction& F, int d, std::uint64_t budget) {
  const auto norm = gowers_norm(F, d, budget).norm_value;
  return std::pow(norm, std::ldexp(1.0, d) - 1.0);
}

}  // namespace apkit
