#include <gtest/gtest.h>

#include <cmath>
#include <random>

#include "apkit/errors.hpp"
#include "apkit/fourier.hpp"
#include "apkit/gowers.hpp"
#include "oracles.hpp"

using namespace apkit;

namespace {

std::vector<GridFunction> random_family(const CyclicGroup& g, int d, std::mt19937_64& rng) {
  std::vector<GridFunction> fs;
  for (std::size_t i = 0; i < (std::size_t{1} << d); ++i) fs.emplace_back(g, oracle::random_vector(g.size(), -1, 1, rng));
  return fs;
}

std::vector<oracle::Vec> raw(const std::vector<GridFunction>& fs) {
  std::vector<oracle::Vec> out;
  for (const auto& f : fs) out.emplace_back(f.values().begin(), f.values().end());
  return out;
}

}  // namespace

TEST(Fourier, MatchesNaiveDftForPrimeAndPowerOfTwoLengths) {
  std::mt19937_64 rng(11);
  for (const std::uint64_t n : {2ULL, 8ULL, 13ULL, 64ULL, 101ULL, 210ULL}) {
    const auto v = oracle::random_vector(n, -2, 2, rng);
    const auto expected = oracle::dft(v);
    const auto got = fourier_coefficients(GridFunction(CyclicGroup(n), v));
    for (std::size_t xi = 0; xi < n; ++xi) EXPECT_LT(std::abs(got[xi] - expected[xi]), 1e-12) << n << " " << xi;
  }
}

TEST(Fourier, SynthesisInvertsAnalysis) {
  std::mt19937_64 rng(12);
  const CyclicGroup g(97);
  const auto v = oracle::random_vector(97, -2, 2, rng);
  const auto back = fourier_synthesis(g, fourier_coefficients(GridFunction(g, v)));
  for (std::size_t x = 0; x < 97; ++x) EXPECT_NEAR(back[x], v[x], 1e-12);
}

TEST(GowersInner, MatchesEnumerationOracle) {
  std::mt19937_64 rng(21);
  for (const auto [n, d] : std::vector<std::pair<std::uint64_t, int>>{{11, 1}, {13, 2}, {17, 2}, {7, 3}, {11, 3}, {5, 4}}) {
    const CyclicGroup g(n);
    const auto fs = random_family(g, d, rng);
    EXPECT_TRUE(oracle::close_rel(gowers_inner(CubeFamily(d, fs)), oracle::gowers_inner(raw(fs), d), 1e-11, 1e-12))
        << "n=" << n << " d=" << d;
  }
}

TEST(GowersNorm, ConstantAndU1) {
  const CyclicGroup g(31);
  for (int d = 1; d <= 4; ++d) EXPECT_NEAR(gowers_norm(GridFunction::constant(g, 2.5), d).norm_value, 2.5, 1e-12);
  const GridFunction f(g, std::vector<double>(31, -1.0));
  EXPECT_DOUBLE_EQ(gowers_norm(f, 1).norm_value, 1.0);
}

TEST(GowersNorm, BudgetExceededPointsAtMonteCarlo) {
  const auto f = GridFunction::constant(CyclicGroup(1009), 1.0);
  try {
    (void)gowers_norm(f, 4, 1000);
    FAIL() << "expected BudgetExceeded";
  } catch (const BudgetExceeded& e) {
    EXPECT_NE(std::string(e.what()).find("gowers_norm_mc"), std::string::npos);
  }
}

TEST(GowersNorm, FourierAgreesWithExactU2) {
  std::mt19937_64 rng(22);
  for (const std::uint64_t n : {31ULL, 64ULL, 101ULL}) {
    const GridFunction f(CyclicGroup(n), oracle::random_vector(n, -1, 1, rng));
    EXPECT_TRUE(oracle::close_rel(gowers_norm(f, 2).raised_value, gowers_norm_u2_fourier(f).raised_value, 1e-10));
  }
}

TEST(GowersNorm, MonteCarloWithinFourSigmaAndReproducible) {
  std::mt19937_64 rng(23);
  const CyclicGroup g(61);
  const GridFunction f(g, oracle::random_vector(61, 0, 2, rng));
  for (int d = 2; d <= 3; ++d) {
    const auto exact = gowers_norm(f, d);
    const auto mc = gowers_norm_mc(f, d, 200'000, 99);
    EXPECT_GT(mc.std_error, 0.0);
    EXPECT_LE(std::abs(mc.raised_value - exact.raised_value), 4 * mc.std_error);
    const auto again = gowers_norm_mc(f, d, 200'000, 99);
    EXPECT_EQ(mc.raised_value, again.raised_value);
    EXPECT_EQ(mc.std_error, again.std_error);
  }
  EXPECT_THROW(gowers_norm_mc(f, 2, 10, 0), InvalidArgument);
}

TEST(DualFunction, ExactMatchesOracle) {
  std::mt19937_64 rng(31);
  for (const auto [n, d] : std::vector<std::pair<std::uint64_t, int>>{{13, 1}, {17, 2}, {11, 3}}) {
    const auto v = oracle::random_vector(n, -1, 1, rng);
    const auto expected = oracle::dual_function(v, d);
    const auto got = dual_function(GridFunction(CyclicGroup(n), v), d);
    for (std::size_t x = 0; x < n; ++x) EXPECT_NEAR(got[x], expected[x], 1e-12);
  }
}

TEST(DualFunction, FourierMatchesExactAtD2) {
  std::mt19937_64 rng(32);
  const GridFunction F(CyclicGroup(101), oracle::random_vector(101, -2, 2, rng));
  const auto exact = dual_function(F, 2);
  DualOptions opts;
  opts.mode = DualMode::fourier;
  const auto fourier = dual_function(F, 2, opts);
  for (std::size_t x = 0; x < 101; ++x) EXPECT_NEAR(fourier[x], exact[x], 1e-10);
  EXPECT_THROW(dual_function(F, 3, opts), InvalidArgument);
}

TEST(DualFunction, MonteCarloPointwiseWithinTolerance) {
  std::mt19937_64 rng(33);
  const GridFunction F(CyclicGroup(23), oracle::random_vector(23, -1, 1, rng));
  const auto exact = dual_function(F, 2);
  DualOptions opts;
  opts.mode = DualMode::monte_carlo;
  opts.samples = 40'000;
  opts.seed = 5;
  const auto mc = dual_function(F, 2, opts);
  // |prod| <= 1, so each point has standard error <= 1/200.
  for (std::size_t x = 0; x < 23; ++x) EXPECT_NEAR(mc[x], exact[x], 4.0 / 200.0);
  EXPECT_EQ(mc, dual_function(F, 2, opts));
}

TEST(DualFunction, InnerProductIdentityAndDualNorm) {
  std::mt19937_64 rng(34);
  for (int d = 2; d <= 3; ++d) {
    const GridFunction F(CyclicGroup(31), oracle::random_vector(31, -1, 1, rng));
    const double lhs = inner_product(F, dual_function(F, d));
    const double rhs = gowers_norm(F, d).raised_value;
    EXPECT_TRUE(oracle::close_rel(lhs, rhs, 1e-10));
  }
  const GridFunction F(CyclicGroup(101), oracle::random_vector(101, -1, 1, rng));
  const double u2 = gowers_norm_u2_fourier(F).norm_value;
  EXPECT_TRUE(oracle::close_rel(dual_norm_u2_fourier(dual_function_u2_fourier(F)), std::pow(u2, 3), 1e-10));
  EXPECT_TRUE(oracle::close_rel(dual_norm_of_dual_function(F, 2), std::pow(u2, 3), 1e-10));
}

TEST(DualFunction, BoundedByTwoPowerWithArtifactSlack) {
  std::mt19937_64 rng(35);
  for (int d = 2; d <= 3; ++d) {
    const GridFunction F(CyclicGroup(29), oracle::random_vector(29, -2, 2, rng));
    const auto DF = dual_function(F, d);
    EXPECT_LE(lq_norm(DF, INFINITY), std::ldexp(1.0, (1 << d) - 1) + 0.1);
  }
}

TEST(CubeFamily, ValidatesShape) {
  const auto f = GridFunction::constant(CyclicGroup(5), 1.0);
  EXPECT_THROW(CubeFamily(2, {f, f, f}), InvalidArgument);
  const auto h = GridFunction::constant(CyclicGroup(7), 1.0);
  EXPECT_THROW(CubeFamily(1, {f, h}), InvalidArgument);
  EXPECT_EQ(CubeFamily::constant(f, 3).functions().size(), 8U);
}
