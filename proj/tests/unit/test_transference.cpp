#include <gtest/gtest.h>

#include <cmath>
#include <random>

#include "apkit/arith.hpp"
#include "apkit/errors.hpp"
#include "apkit/pseudo.hpp"
#include "apkit/random.hpp"
#include "apkit/transference.hpp"
#include "oracles.hpp"

using namespace apkit;

namespace {

double naive_ap(const std::vector<std::vector<double>>& fs, const std::vector<std::int64_t>& cs) {
  const std::uint64_t N = fs.front().size();
  long double total = 0;
  for (std::uint64_t x = 0; x < N; ++x) {
    for (std::uint64_t r = 0; r < N; ++r) {
      long double prod = 1;
      for (std::size_t j = 0; j < fs.size(); ++j) {
        prod *= fs[j][oracle::mod(static_cast<std::int64_t>(x) + cs[j] * static_cast<std::int64_t>(r), N)];
      }
      total += prod;
    }
  }
  return static_cast<double>(total / (N * N));
}

void expect_decomposition_invariants(const GridFunction& f, const GridFunction& nu, const DecompositionConfig& cfg,
                                     const DecompositionResult& r) {
  const std::size_t N = f.size();
  for (std::size_t x = 0; x < N; ++x) {
    const double omega = r.omega.contains(x) ? 1.0 : 0.0;
    ASSERT_NEAR(r.f_uniform[x] + r.f_antiuniform[x] + omega * f[x], f[x], 1e-12);
  }
  ASSERT_EQ(r.energy_trace.size(), r.iterations + 1);
  EXPECT_LE(r.iterations, r.iteration_cap);
  const double gain = std::ldexp(cfg.epsilon, -(1 << cfg.k) + 1);
  for (std::size_t i = 1; i < r.energy_trace.size(); ++i) {
    EXPECT_GE(r.energy_trace[i], r.energy_trace[i - 1] + gain - 10 * 1e-9) << "step " << i;
    EXPECT_GE(r.trace[i].omega_mass, r.trace[i - 1].omega_mass);
    EXPECT_GE(r.trace[i].atom_count, r.trace[i - 1].atom_count);
  }
  EXPECT_LE(r.max_conditional_outside_omega, 2.0);
  const auto cond = conditional_expectation(f, r.sigma);
  for (std::size_t x = 0; x < N; ++x) {
    if (!r.omega.contains(x)) {
      EXPECT_NEAR(r.f_antiuniform[x], cond[x], 1e-15);
    }
  }
  (void)nu;
}

}  // namespace

TEST(ApExpectation, Examples) {
  const CyclicGroup g(31);
  const auto one = GridFunction::constant(g, 1.0);
  EXPECT_DOUBLE_EQ(ap_expectation({one, one, one}, {0, 1, 2}), 1.0);
  const auto delta = GridFunction::indicator(g, {0});
  EXPECT_DOUBLE_EQ(ap_expectation({delta, delta, delta}, {0, 1, 2}), 1.0 / (31.0 * 31.0));
  std::mt19937_64 rng(1);
  std::vector<GridFunction> fs;
  std::vector<std::vector<double>> raw;
  for (int j = 0; j < 4; ++j) {
    raw.push_back(oracle::random_vector(31, -1, 2, rng));
    fs.emplace_back(g, raw.back());
  }
  const std::vector<std::int64_t> cs{0, 1, 3, -2};
  const double e = ap_expectation(fs, cs);
  EXPECT_TRUE(oracle::close_rel(e, naive_ap(raw, cs), 1e-12));
  auto doubled = fs;
  doubled[0] = 2.0 * doubled[0];
  EXPECT_NEAR(ap_expectation(doubled, cs), 2 * e, 1e-12);
  EXPECT_THROW(ap_expectation({one, GridFunction::constant(CyclicGroup(37), 1.0)}, {0, 1}), InvalidArgument);
  EXPECT_THROW(ap_expectation({one, one}, {1, 1}), InvalidArgument);
}

TEST(CountPrimeAps, SmallLimitsAgainstBruteForce) {
  EXPECT_EQ(count_prime_aps(3, 15), 2U);
  EXPECT_EQ(count_prime_aps(3, 15), oracle::prime_3aps(15));
  for (const std::uint64_t limit : {2ULL, 10ULL, 100ULL, 500ULL, 1500ULL}) {
    EXPECT_EQ(count_prime_aps(3, limit), oracle::prime_3aps(limit)) << limit;
    EXPECT_EQ(count_prime_aps(4, limit), oracle::prime_aps(4, limit)) << limit;
    EXPECT_EQ(count_prime_aps(5, limit), oracle::prime_aps(5, limit)) << limit;
  }
  EXPECT_EQ(count_prime_aps(2, 5), 3U);
  EXPECT_EQ(count_prime_aps(2, 5), oracle::prime_aps(2, 5));
  EXPECT_THROW(count_prime_aps(1, 100), InvalidArgument);
}

TEST(CountPrimeAps, CrossCheckWithApExpectation) {
  const std::uint64_t L = 150;
  const std::uint64_t N = 457;  // prime, > 3 L
  std::vector<std::uint64_t> primes;
  for (std::uint64_t n = 2; n <= L; ++n) {
    if (oracle::is_prime(n)) primes.push_back(n);
  }
  const auto ind = GridFunction::indicator(CyclicGroup(N), primes);
  const double e = ap_expectation({ind, ind, ind}, {0, 1, 2});
  const auto scaled = static_cast<std::uint64_t>(std::llround(e * N * N));
  EXPECT_EQ(scaled, primes.size() + 2 * count_prime_aps(3, L));
}

TEST(LevelSigma, ConstantAndAtomBound) {
  const CyclicGroup g(101);
  const auto nu = GridFunction::constant(g, 1.0);
  const auto c = build_level_sigma(GridFunction::constant(g, 0.37), 0.05, 0.01, nu, 100, 16.0);
  EXPECT_EQ(c.sigma.atom_count(), 1U);
  std::mt19937_64 rng(2);
  const GridFunction G(g, oracle::random_vector(101, -16, 16, rng));
  for (const double eps : {0.5, 2.0, 8.0}) {
    const auto s = build_level_sigma(G, eps, 0.05, nu, 20, 16.0);
    EXPECT_LE(s.sigma.atom_count(), static_cast<std::size_t>(std::ceil(32.0 / eps)) + 1);
    double avg = 0;
    for (const double m : s.boundary_masses) avg += m;
    avg /= static_cast<double>(s.boundary_masses.size());
    EXPECT_LE(s.chosen_mass, avg + 1e-15);
    // Each atom is a level interval of width eps.
    for (std::uint64_t x = 0; x < 101; ++x) {
      for (std::uint64_t y = 0; y < 101; ++y) {
        const bool same = std::floor(G[x] / eps - s.alpha) == std::floor(G[y] / eps - s.alpha);
        ASSERT_EQ(same, s.sigma.atom_of(x) == s.sigma.atom_of(y));
      }
    }
  }
  EXPECT_THROW(build_level_sigma(GridFunction::constant(g, 17.0), 0.1, 0.01, nu, 10, 16.0), InvalidArgument);
  EXPECT_THROW(build_level_sigma(G, 0.1, 0.6, nu, 10, 16.0), InvalidArgument);
  EXPECT_EQ(level_interval_bound(3), 16.0);
  EXPECT_EQ(level_interval_bound(4), 256.0);
}

TEST(ExceptionalSet, Examples) {
  const CyclicGroup g(10);
  const auto nu = GridFunction::constant(g, 1.0);
  EXPECT_TRUE(exceptional_set(SigmaAlgebra::trivial(g), nu, 0.49).empty());
  const std::vector<std::int64_t> labels{0, 1, 1, 1, 1, 1, 2, 2, 2, 2};
  EXPECT_TRUE(exceptional_set(SigmaAlgebra::from_labels(g, labels), nu, 0.01).empty());
  const auto small = exceptional_set(SigmaAlgebra::from_labels(g, labels), nu, 0.25);
  EXPECT_EQ(small.members(), std::vector<std::uint64_t>{0});
}

TEST(Energy, Examples) {
  std::mt19937_64 rng(3);
  const CyclicGroup g(53);
  const auto v = oracle::random_vector(53, 0, 1, rng);
  const GridFunction f(g, v);
  EXPECT_NEAR(energy(f, SigmaAlgebra::trivial(g), ResidueSet(g)), std::pow(oracle::mean(v), 2), 1e-14);
  EXPECT_NEAR(energy(f, SigmaAlgebra::discrete(g), ResidueSet(g)), inner_product(f, f), 1e-14);
  EXPECT_EQ(energy(f, SigmaAlgebra::discrete(g), ResidueSet::full(g)), 0.0);
}

TEST(K0, SmallestIntegerAboveBound) {
  EXPECT_EQ(k0(3, 0.05), 5122U);
  EXPECT_EQ(k0(3, 0.01), 25602U);
  EXPECT_EQ(k0(3, 0.3), 855U);  // 256 / 0.3 + 1 = 854.33
  EXPECT_THROW(k0(3, 0.0), InvalidArgument);
}

TEST(Decompose, ConstantFunctionStopsImmediately) {
  const CyclicGroup g(101);
  const auto nu = GridFunction::constant(g, 1.0);
  const auto f = GridFunction::constant(g, 0.4);
  DecompositionConfig cfg;
  const auto r = kvn_decompose(f, nu, cfg);
  EXPECT_TRUE(r.terminated_successfully);
  EXPECT_EQ(r.iterations, 0U);
  for (std::size_t x = 0; x < 101; ++x) {
    EXPECT_NEAR(r.f_antiuniform[x], 0.4, 1e-15);
    EXPECT_NEAR(r.f_uniform[x], 0.0, 1e-15);
  }
}

TEST(Decompose, RandomDenseSetBoundedCase) {
  std::mt19937_64 rng(4);
  const CyclicGroup g(101);
  std::vector<double> v(101);
  for (auto& x : v) x = (rng() >> 63) ? 1.0 : 0.0;
  const GridFunction f(g, v);
  const auto nu = GridFunction::constant(g, 1.0);
  DecompositionConfig cfg;
  cfg.epsilon = 0.05;
  const auto r = kvn_decompose(f, nu, cfg);
  EXPECT_TRUE(r.terminated_successfully);
  EXPECT_LE(r.final_uniformity.norm_value, std::pow(0.05, 1.0 / 8));
  expect_decomposition_invariants(f, nu, cfg, r);
}

TEST(Decompose, IteratesOnStructuredSetAndGainsEnergy) {
  const CyclicGroup g(101);
  std::vector<std::uint64_t> half;
  for (std::uint64_t x = 0; x < 50; ++x) half.push_back(x);
  const auto f = GridFunction::indicator(g, half);
  const auto nu = GridFunction::constant(g, 1.0);
  DecompositionConfig cfg;
  cfg.epsilon = 1e-4;
  cfg.eta = 5e-5;
  const auto r = kvn_decompose(f, nu, cfg);
  EXPECT_GE(r.iterations, 1U);
  EXPECT_TRUE(r.terminated_successfully);
  expect_decomposition_invariants(f, nu, cfg, r);
  // The same run with the k = 4 exact pipeline.
  DecompositionConfig cfg4 = cfg;
  cfg4.k = 4;
  cfg4.epsilon = 1e-8;
  cfg4.eta = 1e-9;
  cfg4.alpha_grid = 64;
  const auto r4 = kvn_decompose(f, nu, cfg4);
  EXPECT_TRUE(r4.terminated_successfully);
  expect_decomposition_invariants(f, nu, cfg4, r4);
}

TEST(Decompose, BernoulliMeasure) {
  const std::uint64_t N = 10007;
  const auto nu = bernoulli_measure(N, 5);
  Rng rng(77);
  std::vector<double> v(N);
  for (std::size_t x = 0; x < N; ++x) v[x] = (rng() >> 63) ? nu[x] : 0.0;
  const GridFunction f(nu.group(), v);
  DecompositionConfig cfg;
  cfg.epsilon = 0.01;
  const auto r = kvn_decompose(f, nu, cfg);
  EXPECT_TRUE(r.terminated_successfully);
  expect_decomposition_invariants(f, nu, cfg, r);
}

TEST(Decompose, RejectsFAboveNu) {
  const CyclicGroup g(11);
  auto v = std::vector<double>(11, 0.5);
  v[7] = 1.5;
  try {
    (void)kvn_decompose(GridFunction(g, v), GridFunction::constant(g, 1.0), {});
    FAIL();
  } catch (const InvalidArgument& e) {
    EXPECT_NE(std::string(e.what()).find("x = 7"), std::string::npos);
  }
  DecompositionConfig bad;
  bad.eta = 0.1;
  bad.epsilon = 0.05;
  EXPECT_THROW(kvn_decompose(GridFunction::constant(g, 0.5), GridFunction::constant(g, 1.0), bad), InvalidArgument);
}

TEST(Gvn, BoundedCaseRespectsClassicalInequality) {
  const auto nu = GridFunction::constant(CyclicGroup(31), 1.0);
  const auto r = gvn_check(nu, 3, 12, 8);
  ASSERT_EQ(r.cases.size(), 12U);
  for (const auto& c : r.cases) EXPECT_LE(c.abs_expectation, 4.0 * c.min_norm + 1e-12) << c.kind;
  EXPECT_GE(r.max_residual, 0.0);
  const auto b = gvn_check(bernoulli_measure(31, 1), 4, 3, 8);
  EXPECT_EQ(b.k, 4);
  EXPECT_EQ(b.cases.size(), 3U);
}
