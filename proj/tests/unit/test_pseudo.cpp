#include <gtest/gtest.h>

#include <cmath>
#include <cstdio>
#include <string>
#include <random>

#include "apkit/errors.hpp"
#include "apkit/modular.hpp"
#include "apkit/pseudo.hpp"
#include "oracles.hpp"

using namespace apkit;

namespace {

IntegerInterval window(const MajorantParams& p) {
  return {static_cast<std::int64_t>(p.window_lo()), static_cast<std::int64_t>(p.window_hi())};
}

LinearFormSystem system_from(const std::vector<std::vector<std::int64_t>>& rows, std::vector<std::int64_t> b) {
  std::vector<std::vector<Rational>> r;
  for (const auto& row : rows) {
    std::vector<Rational> q;
    for (const auto v : row) q.emplace_back(v);
    r.push_back(std::move(q));
  }
  return LinearFormSystem(std::move(r), std::move(b));
}

// E prod nu(psi_i(x)) over Z_N^t by nested loops over integer coefficients.
double naive_linear_forms(const std::vector<double>& nu, const std::vector<std::vector<std::int64_t>>& rows,
                          const std::vector<std::int64_t>& b) {
  const std::uint64_t N = nu.size();
  const std::size_t t = rows.front().size();
  std::vector<std::uint64_t> x(t, 0);
  long double total = 0;
  std::uint64_t count = 0;
  for (;;) {
    long double prod = 1;
    for (std::size_t i = 0; i < rows.size(); ++i) {
      std::int64_t v = b[i];
      for (std::size_t j = 0; j < t; ++j) v += rows[i][j] * static_cast<std::int64_t>(x[j]);
      prod *= nu[oracle::mod(v, N)];
    }
    total += prod;
    ++count;
    std::size_t j = 0;
    while (j < t && ++x[j] == N) x[j++] = 0;
    if (j == t) break;
  }
  return static_cast<double>(total / count);
}

}  // namespace

TEST(Halfway, Examples) {
  const CyclicGroup g(4);
  const GridFunction nu(g, {0.0, 2.0, 0.0, 2.0});
  const auto h = halfway(nu);
  EXPECT_EQ(h[0], 0.5);
  EXPECT_EQ(h[1], 1.5);
  EXPECT_EQ(halfway(GridFunction::constant(g, 1.0)), GridFunction::constant(g, 1.0));
  std::mt19937_64 rng(1);
  const GridFunction r(CyclicGroup(101), oracle::random_vector(101, 0, 5, rng));
  EXPECT_NEAR(expectation(halfway(r)), (expectation(r) + 1) / 2, 1e-12);
}

TEST(LinearFormSystem, RejectsProportionalRowsWithIndices) {
  try {
    system_from({{1, 0}, {1, 2}, {2, 4}}, {0, 0, 0});
    FAIL();
  } catch (const InvalidSystem& e) {
    EXPECT_EQ(e.row_a(), 1U);
    EXPECT_EQ(e.row_b(), std::optional<std::size_t>(2));
  }
  EXPECT_THROW(system_from({{0, 0}, {1, 2}}, {0, 0}), InvalidSystem);
  EXPECT_THROW(system_from({{1, 1}, {-3, -3}}, {0, 5}), InvalidSystem);
  // Rational multiples are detected through the cross-ratio.
  EXPECT_THROW(LinearFormSystem({{Rational(1, 2), Rational(1)}, {Rational(1), Rational(2)}}, {0, 0}), InvalidSystem);
  EXPECT_NO_THROW(LinearFormSystem::cube(3));
  EXPECT_THROW(LinearFormSystem({{Rational(5)}}, {0}, 3), InvalidSystem);
}

TEST(LinearFormSystem, ResidueAndIntegralCoefficients) {
  const LinearFormSystem s({{Rational(1, 2), Rational(1, 3)}, {Rational(1), Rational(-1, 6)}}, {0, 1});
  const auto res = s.residue_coefficients(7);
  EXPECT_EQ(mul_mod(res[0][0], 2, 7), 1U);
  EXPECT_EQ(mul_mod(res[1][1], 6, 7), 6U);  // -1/6 * 6 = -1
  EXPECT_THROW(s.residue_coefficients(3), InvalidSystem);
  const auto ints = s.integral_coefficients();
  EXPECT_EQ(ints, (std::vector<std::vector<std::int64_t>>{{3, 2}, {6, -1}}));
  EXPECT_EQ(s.height(), 6);
}

TEST(VerifyLinearForms, ConstantMeasureIsExactlyOne) {
  const auto nu = GridFunction::constant(CyclicGroup(31), 1.0);
  for (const auto& sys : {LinearFormSystem::cube(2), LinearFormSystem::cube(1),
                          system_from({{1, 2, 3}, {2, 1, 0}, {0, 1, 5}}, {1, 2, 3})}) {
    const auto r = verify_linear_forms(nu, sys);
    EXPECT_EQ(r.estimate.value, 1.0);
    EXPECT_EQ(r.deviation, 0.0);
    EXPECT_TRUE(r.passed());
  }
}

TEST(VerifyLinearForms, ExactMatchesNaiveEnumeration) {
  std::mt19937_64 rng(2);
  const std::vector<std::vector<std::int64_t>> rows{{1, 0, 0}, {1, 1, 0}, {1, 0, 1}, {1, 1, 1}, {2, -1, 3}};
  const std::vector<std::int64_t> b{0, 0, 0, 0, 4};
  for (const std::uint64_t N : {11ULL, 17ULL}) {
    const auto v = oracle::random_vector(N, 0, 3, rng);
    const auto r = verify_linear_forms(GridFunction(CyclicGroup(N), v), system_from(rows, b));
    EXPECT_TRUE(oracle::close_rel(r.estimate.value, naive_linear_forms(v, rows, b), 1e-12));
    EXPECT_TRUE(r.estimate.exact());
  }
}

TEST(VerifyLinearForms, MonteCarloWithinFourSigma) {
  const auto sys = LinearFormSystem::cube(2);
  for (const auto& nu : {GridFunction::constant(CyclicGroup(101), 1.0), bernoulli_measure(101, 3)}) {
    const auto exact = verify_linear_forms(nu, sys);
    EstimatorOptions opts;
    opts.mode = EstimateMode::monte_carlo;
    opts.samples = 300'000;
    opts.seed = 9;
    const auto mc = verify_linear_forms(nu, sys, opts);
    EXPECT_LE(std::abs(mc.estimate.value - exact.estimate.value), 4 * mc.estimate.std_error + 1e-15);
    EXPECT_EQ(mc.estimate.value, verify_linear_forms(nu, sys, opts).estimate.value);
  }
}

TEST(VerifyLinearForms, BudgetAndPrecondition) {
  EstimatorOptions opts;
  opts.budget = 1000;
  EXPECT_THROW(verify_linear_forms(GridFunction::constant(CyclicGroup(101), 1.0), LinearFormSystem::cube(2), opts),
               BudgetExceeded);
  EXPECT_THROW(verify_linear_forms(GridFunction::constant(CyclicGroup(100), 1.0), LinearFormSystem::cube(2)),
               InvalidArgument);
  EXPECT_THROW(verify_linear_forms(GridFunction::constant(CyclicGroup(11), 1.0), LinearFormSystem::shifted({0, 1})),
               InvalidArgument);
}

TEST(TauWeight, Examples) {
  EXPECT_DOUBLE_EQ(tau_weight(1, 2, 10007, 4.0, 4.0), 4.0);
  EXPECT_DOUBLE_EQ(tau_weight(-1, 2, 10007, 4.0, 4.0), 4.0);
  EXPECT_NEAR(tau_weight(6, 2, 10007, 1.0, 1.0), (1 + 1 / std::sqrt(2.0)) * (1 + 1 / std::sqrt(3.0)), 1e-15);
  EXPECT_NEAR(tau_weight(-12, 2, 10007, 1.0, 1.0), (1 + 1 / std::sqrt(2.0)) * (1 + 1 / std::sqrt(3.0)), 1e-15);
  const double logN = std::log(10007.0);
  EXPECT_NEAR(tau_weight(0, 2, 10007, 4.0, 4.0), std::exp(4.0 * 2 * logN / std::log(logN)), 1e-6);
  EXPECT_THROW(tau_weight(20000, 2, 10007, 1, 1), InvalidArgument);
}

TEST(VerifyCorrelation, ConstantMeasureAndMoments) {
  const auto nu = GridFunction::constant(CyclicGroup(101), 1.0);
  const auto r = verify_correlation(nu, 2, {{0, 1}, {3, 50}}, {1, 2, 4});
  EXPECT_EQ(r.details.at("max_lhs"), 1.0);
  EXPECT_TRUE(r.passed());
  for (const char* q : {"1", "2", "4"}) {
    EXPECT_TRUE(std::isfinite(r.details.at(std::string("tau_moment_q") + q)));
    EXPECT_GT(r.details.at(std::string("tau_moment_q") + q + "_nonzero"), 0.0);
  }
  EXPECT_THROW(verify_correlation(nu, 1, {{0}}, {}), InvalidArgument);
  EXPECT_THROW(verify_correlation(nu, 2, {{0, 1, 2}}, {}), InvalidArgument);
}

TEST(LocalFactor, KnownValues) {
  const auto sys = system_from({{1, 2}, {3, 1}, {1, -1}}, {0, 4, 2});
  EXPECT_EQ(local_factor_omega(sys, 6, 7, {}), Rational(1));
  EXPECT_EQ(local_factor_omega(sys, 6, 2, {0}), Rational(0));
  EXPECT_EQ(local_factor_omega(sys, 6, 3, {0, 1}), Rational(0));
  for (const std::uint64_t p : {7ULL, 11ULL, 13ULL}) {
    for (std::size_t i = 0; i < 3; ++i) EXPECT_EQ(local_factor_omega(sys, 6, p, {i}), Rational(1, static_cast<std::int64_t>(p)));
    EXPECT_LE(local_factor_omega(sys, 6, p, {0, 1}), Rational(1, static_cast<std::int64_t>(p * p)));
  }
  EXPECT_THROW(local_factor_omega(sys, 6, 9, {0}), InvalidArgument);
  EXPECT_THROW(local_factor_omega(sys, 6, 7, {0, 0}), InvalidArgument);
  EXPECT_THROW(local_factor_omega(sys, 6, 1009, {0}, 1000), BudgetExceeded);
}

TEST(LocalFactor, MatchesGaussianEliminationCount) {
  std::mt19937_64 rng(4);
  std::uniform_int_distribution<std::int64_t> coef(-5, 5);
  for (int trial = 0; trial < 40; ++trial) {
    const std::size_t t = 1 + static_cast<std::size_t>(trial % 3);
    std::vector<std::vector<std::int64_t>> rows;
    std::vector<std::int64_t> b;
    while (rows.size() < 3) {
      std::vector<std::int64_t> row(t);
      for (auto& c : row) c = coef(rng);
      rows.push_back(row);
      b.push_back(coef(rng));
      try {
        system_from(rows, b);
      } catch (const InvalidSystem&) {
        rows.pop_back();
        b.pop_back();
      }
      if (t == 1 && rows.size() == 1) break;
    }
    const auto sys = system_from(rows, b);
    for (const std::uint64_t p : {5ULL, 7ULL, 11ULL}) {
      const auto Winv = *inverse_mod(6 % p, p);
      std::vector<std::size_t> X;
      for (std::size_t i = 0; i < rows.size(); ++i) X.push_back(i);
      std::vector<std::int64_t> rhs;
      for (std::size_t i = 0; i < rows.size(); ++i) rhs.push_back(-static_cast<std::int64_t>(Winv) - b[i]);
      const auto [count, total] = oracle::solution_count(rows, rhs, p);
      EXPECT_EQ(local_factor_omega(sys, 6, p, X),
                Rational(static_cast<std::int64_t>(count), static_cast<std::int64_t>(total)));
    }
  }
}

TEST(LocalFactor, ShiftedSystemVanishesUnlessPDividesDelta) {
  const std::vector<std::int64_t> h{0, 7, 22};
  const auto sys = LinearFormSystem::shifted(h);
  EXPECT_FALSE(sys.admissible());
  for (const std::uint64_t p : {5ULL, 7ULL, 11ULL, 13ULL}) {
    const bool divides = (7 % p == 0) || (22 % p == 0) || (15 % p == 0);
    const auto w01 = local_factor_omega(sys, 6, p, {0, 1});
    EXPECT_LE(w01, Rational(1, static_cast<std::int64_t>(p)));
    if (!divides) EXPECT_EQ(local_factor_omega(sys, 6, p, {0, 1, 2}), Rational(0));
  }
  EXPECT_EQ(local_factor_omega(sys, 6, 7, {0, 1}), Rational(1, 7));
  EXPECT_EQ(local_factor_omega(sys, 6, 5, {1, 2}), Rational(1, 5));
  EXPECT_EQ(local_factor_omega(sys, 6, 11, {0, 1}), Rational(0));
}

TEST(Discriminant, Definition) {
  EXPECT_EQ(shift_discriminant({1, 4, 6}), std::optional<std::uint64_t>(30));
  EXPECT_EQ(discriminant_primes({1, 4, 6}), (std::vector<std::uint64_t>{2, 3, 5}));
  EXPECT_EQ(shift_discriminant({5}), std::optional<std::uint64_t>(1));
  EXPECT_THROW(shift_discriminant({1, 4, 1}), InvalidArgument);
  EXPECT_FALSE(shift_discriminant({0, 1LL << 40, 1LL << 41}).has_value());
}

TEST(GyMomentCheck, SyntheticConstantLambda) {
  const auto params = MajorantParams::make(3, 999983, 2, 1.0 / 20);
  const double logR = params.log_R();
  const LambdaRSource constant = [logR](std::uint64_t) { return logR; };
  const auto sys = system_from({{1}}, {0});
  const auto r = gy_moment_check(params, sys, {window(params)}, {}, constant);
  EXPECT_NEAR(r.estimate.value, logR * params.w_density(), 1e-12);
  const auto sys2 = system_from({{1, 0}, {1, 1}}, {0, 0});
  const auto r2 = gy_moment_check(params, sys2, {{1, 30}, {0, 20}}, {}, constant);
  EXPECT_NEAR(r2.estimate.value, std::pow(logR * params.w_density(), 2), 1e-12);
  EXPECT_TRUE(r.short_box == (25.0 < std::pow(params.R(), 10)));
}

TEST(GyMomentCheck, ExactMatchesDirectSumAndMonteCarloReplays) {
  const auto params = MajorantParams::make(3, 999983, 2, 1.0 / 5);
  const auto sys = system_from({{1, 0}, {1, 2}}, {0, 1});
  const std::vector<IntegerInterval> box{{1, 40}, {3, 30}};
  const auto exact = gy_moment_check(params, sys, box);
  double total = 0;
  for (std::int64_t a = 1; a <= 40; ++a) {
    for (std::int64_t c = 3; c <= 30; ++c) {
      const double l1 = oracle::lambda_r(static_cast<std::uint64_t>(2 * a + 1), params.R());
      const double l2 = oracle::lambda_r(static_cast<std::uint64_t>(2 * (a + 2 * c + 1) + 1), params.R());
      total += l1 * l1 * l2 * l2;
    }
  }
  EXPECT_TRUE(oracle::close_rel(exact.raw_mean, total / (40 * 28), 1e-12));
  EstimatorOptions opts;
  opts.mode = EstimateMode::monte_carlo;
  opts.samples = 100'000;
  opts.seed = 17;
  const auto mc = gy_moment_check(params, sys, box, opts);
  const auto again = gy_moment_check(params, sys, box, opts);
  EXPECT_EQ(mc.estimate.value, again.estimate.value);
  EXPECT_LE(std::abs(mc.estimate.value - exact.estimate.value), 4 * mc.estimate.std_error);
}

TEST(GyMomentCheck, RangeErrors) {
  const auto params = MajorantParams::make(3, 10007, 2, 1.0 / 5);
  const auto sys = system_from({{1}}, {0});
  EXPECT_THROW(gy_moment_check(params, sys, {{-5, 5}}), InvalidArgument);
  EXPECT_THROW(gy_moment_check(params, sys, {{1, std::numeric_limits<std::int64_t>::max()}}), RangeOverflow);
}

TEST(Gy2Correlation, SingleShiftReducesToMomentCheck) {
  const auto params = MajorantParams::make(3, 999983, 2, 1.0 / 6);
  const IntegerInterval B = window(params);
  const auto one = gy2_correlation_check(params, {0}, B);
  const auto ref = gy_moment_check(params, system_from({{1}}, {0}), {B});
  EXPECT_DOUBLE_EQ(one.estimate.value, ref.estimate.value);
  EXPECT_THROW(gy2_correlation_check(params, {3, 3}, B), InvalidArgument);
  const auto two = gy2_correlation_check(params, {1, 4, 6}, B);
  EXPECT_EQ(two.details.at("delta"), 30.0);
  EXPECT_NEAR(two.details.at("delta_factor"),
              std::pow((1 + 1 / std::sqrt(2.0)) * (1 + 1 / std::sqrt(3.0)) * (1 + 1 / std::sqrt(5.0)), 6), 1e-9);
}

TEST(BernoulliMeasure, ValuesReproducibilityConcentration) {
  const std::uint64_t N = 10'000;
  const double logN = std::log(static_cast<double>(N));
  for (std::uint64_t seed = 0; seed < 20; ++seed) {
    const auto nu = bernoulli_measure(N, seed);
    for (std::size_t x = 0; x < N; ++x) ASSERT_TRUE(nu[x] == 0.0 || nu[x] == logN);
    EXPECT_LE(std::abs(expectation(nu) - 1.0), 5 * std::sqrt(logN / N));
    if (seed < 3) EXPECT_EQ(nu, bernoulli_measure(N, seed));
  }
  EXPECT_NE(bernoulli_measure(N, 1), bernoulli_measure(N, 2));
  EXPECT_THROW(bernoulli_measure(2, 0), InvalidArgument);
}

TEST(PolynomialProbe, ConstantMeasureGivesZero) {
  const auto nu = GridFunction::constant(CyclicGroup(31), 1.0);
  const auto probe = polynomial_correlation_probe(nu, 3, 2, 3, 5, 1);
  EXPECT_EQ(probe.trials, 5U);
  EXPECT_EQ(probe.max_abs_correlation, 0.0);
  const auto b = polynomial_correlation_probe(bernoulli_measure(31, 2), 4, 1, 2, 2, 1);
  EXPECT_GE(b.max_abs_correlation, b.mean_abs_correlation);
}

namespace {

// ||nu - 1||_{U^2} should shrink as N grows with w and theta held fixed.
TEST(MajorantTrend, UniformityDecreasesWithN) {
  const auto trend = majorant_uniformity_trend(3, 2, 1.0 / 20, {10'007, 100'003, 999'983});
  ASSERT_EQ(trend.size(), 3U);
  for (const auto& [N, u] : trend) {
    RecordProperty("u2_at_" + std::to_string(N), std::to_string(u));
    std::printf("N = %llu  ||nu - 1||_U2 = %.6e\n", static_cast<unsigned long long>(N), u);
  }
  for (std::size_t i = 1; i < trend.size(); ++i) {
    EXPECT_LT(trend[i].second, trend[i - 1].second) << "at N = " << trend[i].first;
  }
}

// No rate is asserted; the probe is reported and sanity-bounded.
TEST(MajorantTrend, PolynomialCorrelationReport) {
  const auto nu = build_majorant(MajorantParams::make(3, 100'003, 2, 1.0 / 20));
  const auto probe = polynomial_correlation_probe(nu, 3, 2, 3, 4, 11);
  std::printf("polynomial probe: max %.6e  mean %.6e over %zu trials\n", probe.max_abs_correlation,
              probe.mean_abs_correlation, probe.trials);
  EXPECT_EQ(probe.trials, 4U);
  EXPECT_TRUE(std::isfinite(probe.max_abs_correlation));
  EXPECT_GE(probe.max_abs_correlation, probe.mean_abs_correlation);
}

}  // namespace
