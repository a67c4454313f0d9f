#include <gtest/gtest.h>

#include <cmath>

#include "bilens/solver.hpp"
#include "bilens/stochastic.hpp"

namespace bilens {
namespace {

using Mat = Eigen::MatrixXd;
using Vec = Eigen::VectorXd;
using Word4 = std::array<std::uint32_t, 4>;

Mat s(double v) { return Mat::Constant(1, 1, v); }
Vec sv(double v) { return Vec::Constant(1, v); }

BilinearProblem scalar_bilinear(double g = 0.0) {
  return BilinearProblem(s(-1.25), s(2.0), {s(-2.0)}, sv(g), sv(0.0), sv(0.5), 10.0, s(5.0));
}

VectorTrajectory sine_control(const TimeGrid& grid) {
  std::vector<Vec> u;
  for (double t : grid.nodes()) u.push_back(sv(0.3 + 0.2 * std::sin(t)));
  return VectorTrajectory(grid, u);
}

TEST(ExpectedReduction, DriftTerm) {
  const BilinearProblem p = scalar_bilinear();
  const NoiseSpec poisson{NoiseKind::kPoisson, s(0.15), sv(2.0)};
  EXPECT_NEAR(expected_reduction(p, poisson).g()(0), 0.3, 1e-15);
  const NoiseSpec wiener{NoiseKind::kWiener, s(0.15), Vec()};
  EXPECT_EQ(expected_reduction(p, wiener).g()(0), 0.0);
  const NoiseSpec rare{NoiseKind::kPoisson, s(0.15), sv(1e-12)};
  EXPECT_LT(expected_reduction(p, rare).g()(0), 1e-12);
  const NoiseSpec bad{NoiseKind::kPoisson, s(0.15), sv(-1.0)};
  EXPECT_THROW(expected_reduction(p, bad), InvalidArgument);
}

TEST(StackNoise, BlockDiagonalAndRepeatedRates) {
  const NoiseSpec m{NoiseKind::kPoisson, Eigen::Vector2d(0.1, 0.2), sv(3.0)};
  const NoiseSpec st = stack_noise(m, 3);
  EXPECT_EQ(st.G.rows(), 6);
  EXPECT_EQ(st.G.cols(), 3);
  EXPECT_EQ(st.G(3, 1), 0.2);
  EXPECT_EQ(st.G(3, 0), 0.0);
  EXPECT_EQ(st.lambda, Vec::Constant(3, 3.0));
}

TEST(Philox, KnownAnswerVectors) {
  EXPECT_EQ(Philox4x32::bijection({0, 0, 0, 0}, {0, 0}),
            (Word4{0x6627e8d5u, 0xe169c58du, 0xbc57ac4cu, 0x9b00dbd8u}));
  EXPECT_EQ(Philox4x32::bijection({0xffffffffu, 0xffffffffu, 0xffffffffu, 0xffffffffu}, {0xffffffffu, 0xffffffffu}),
            (Word4{0x408f276du, 0x41c83b0eu, 0xa20bc7c6u, 0x6d5451fdu}));
  EXPECT_EQ(Philox4x32::bijection({0x243f6a88u, 0x85a308d3u, 0x13198a2eu, 0x03707344u}, {0xa4093822u, 0x299f31d0u}),
            (Word4{0xd16cfe09u, 0x94fdccebu, 0x5001e420u, 0x24126ea1u}));
}

TEST(Philox, StreamsAndMoments) {
  Philox4x32 a(42, 0, 0), b(42, 0, 0), c(42, 0, 1);
  for (int i = 0; i < 10; ++i) EXPECT_EQ(a.next_u32(), b.next_u32());
  EXPECT_NE(a.next_u32(), c.next_u32());

  Philox4x32 r(7, 3, 9);
  double mu = 0.0, mn = 0.0, m2 = 0.0, ex = 0.0;
  const int n = 200000;
  for (int i = 0; i < n; ++i) {
    const double u = r.uniform();
    ASSERT_GT(u, 0.0);
    ASSERT_LT(u, 1.0);
    mu += u;
    const double z = r.normal();
    mn += z;
    m2 += z * z;
    ex += r.exponential(2.0);
  }
  EXPECT_NEAR(mu / n, 0.5, 5e-3);
  EXPECT_NEAR(mn / n, 0.0, 1e-2);
  EXPECT_NEAR(m2 / n, 1.0, 1e-2);
  EXPECT_NEAR(ex / n, 0.5, 5e-3);
}

TEST(PoissonPaths, NoJumpsFollowsDeterministicFlow) {
  const BilinearProblem p = scalar_bilinear();
  const TimeGrid grid(0.0, 10.0, 500);
  const auto u = sine_control(grid);
  const NoiseSpec rare{NoiseKind::kPoisson, s(0.15), sv(1e-9)};
  const auto batch = simulate_poisson_paths(p, rare, u, {.paths = 3, .seed = 5, .keep_paths = true});
  const auto det = resimulate_bilinear(p, u);
  for (long j : batch.jump_counts) EXPECT_EQ(j, 0);
  for (const auto& path : batch.samples) {
    for (std::size_t i = 0; i < grid.size(); ++i) EXPECT_NEAR(path[i](0), det[i](0), 1e-8);
  }
}

TEST(PoissonPaths, ZeroAmplitudeGivesIdenticalPaths) {
  const BilinearProblem p = scalar_bilinear();
  const TimeGrid grid(0.0, 10.0, 400);
  const auto u = sine_control(grid);
  const NoiseSpec zero{NoiseKind::kPoisson, s(0.0), sv(2.0)};
  const auto batch = simulate_poisson_paths(p, zero, u, {.paths = 4, .seed = 1, .keep_paths = true});
  const auto det = resimulate_bilinear(p, u);
  for (const auto& path : batch.samples) EXPECT_NEAR(path.back()(0), det.back()(0), 1e-8);
}

TEST(PoissonPaths, JumpCountMean) {
  const BilinearProblem p = scalar_bilinear();
  const TimeGrid grid(0.0, 10.0, 50);
  const NoiseSpec noise{NoiseKind::kPoisson, s(0.15), sv(2.0)};
  const auto batch = simulate_poisson_paths(p, noise, sine_control(grid), {.paths = 10000, .seed = 3});
  double mean = 0.0;
  for (long j : batch.jump_counts) mean += static_cast<double>(j);
  mean /= 10000.0;
  EXPECT_GE(mean, 19.0);
  EXPECT_LE(mean, 21.0);
}

TEST(PoissonPaths, MeanMatchesReducedProblem) {
  const BilinearProblem p = scalar_bilinear();
  const TimeGrid grid(0.0, 10.0, 200);
  const auto u = sine_control(grid);
  const NoiseSpec noise{NoiseKind::kPoisson, s(0.15), sv(2.0)};
  const auto batch = simulate_poisson_paths(p, noise, u, {.paths = 4000, .seed = 11});
  const auto ref = resimulate_bilinear(expected_reduction(p, noise), u);
  EXPECT_LT(mc_mean_compare(batch, ref).max_standardized, 4.0);
  // The uncorrected drift is far outside the band.
  EXPECT_GT(mc_mean_compare(batch, resimulate_bilinear(p, u)).max_standardized, 10.0);
}

TEST(PoissonPaths, SeededReproducibility) {
  const BilinearProblem p = scalar_bilinear();
  const TimeGrid grid(0.0, 10.0, 100);
  const auto u = sine_control(grid);
  const NoiseSpec noise{NoiseKind::kPoisson, s(0.15), sv(2.0)};
  const auto a = simulate_poisson_paths(p, noise, u, {.paths = 50, .seed = 9, .stream = 2});
  const auto b = simulate_poisson_paths(p, noise, u, {.paths = 50, .seed = 9, .stream = 2});
  const auto c = simulate_poisson_paths(p, noise, u, {.paths = 50, .seed = 10, .stream = 2});
  for (std::size_t i = 0; i < grid.size(); ++i) {
    EXPECT_EQ(a.mean[i], b.mean[i]);
    EXPECT_EQ(a.std_error[i], b.std_error[i]);
  }
  EXPECT_NE(a.mean.back(), c.mean.back());
}

TEST(WienerPaths, ZeroAmplitudeIsDeterministic) {
  const BilinearProblem p = scalar_bilinear();
  const TimeGrid grid(0.0, 10.0, 400);
  const auto u = sine_control(grid);
  const NoiseSpec zero{NoiseKind::kWiener, s(0.0), Vec()};
  const auto batch = simulate_wiener_paths(p, zero, u, {.paths = 3, .seed = 2});
  EXPECT_NEAR(batch.mean.back()(0), resimulate_bilinear(p, u).back()(0), 1e-12);
}

TEST(WienerPaths, VarianceGrowsLinearly) {
  const BilinearProblem p(Mat::Zero(2, 2), Mat::Zero(2, 1), {Mat::Zero(2, 2)}, Vec::Zero(2), Vec::Zero(2),
                          Vec::Zero(2), 1.0, s(1.0));
  const TimeGrid grid(0.0, 1.0, 10);
  Mat G(2, 2);
  G << 0.5, 0.2, 0.0, 0.3;
  const NoiseSpec noise{NoiseKind::kWiener, G, Vec()};
  const int M = 100000;
  const auto batch = simulate_wiener_paths(p, noise, VectorTrajectory::constant(grid, sv(0.0)),
                                           {.paths = M, .seed = 4});
  const Vec expect = (G * G.transpose()).diagonal();
  for (int c = 0; c < 2; ++c) {
    double var = 0.0;
    for (const auto& x : batch.terminal) var += x(c) * x(c);
    var /= M;
    EXPECT_NEAR(var / expect(c), 1.0, 0.05);
    // std_error^2 * M is the sample variance.
    EXPECT_NEAR(std::pow(batch.std_error.back()(c), 2) * M / expect(c), 1.0, 0.05);
  }
}

TEST(WienerPaths, MeanMatchesDeterministicFlow) {
  const BilinearProblem p = scalar_bilinear(0.2);
  const TimeGrid grid(0.0, 10.0, 200);
  const auto u = sine_control(grid);
  const NoiseSpec noise{NoiseKind::kWiener, s(0.3), Vec()};
  const auto batch = simulate_wiener_paths(p, noise, u, {.paths = 4000, .seed = 12});
  EXPECT_LT(mc_mean_compare(batch, resimulate_bilinear(expected_reduction(p, noise), u)).max_standardized, 4.0);
}

TEST(MeanCompare, IdenticalAndShifted) {
  const BilinearProblem p = scalar_bilinear();
  const TimeGrid grid(0.0, 10.0, 100);
  const auto u = sine_control(grid);
  const NoiseSpec zero{NoiseKind::kWiener, s(0.0), Vec()};
  const auto same = simulate_wiener_paths(p, zero, u, {.paths = 5, .seed = 1});
  EXPECT_EQ(mc_mean_compare(same, same.mean).max_standardized, 0.0);

  const NoiseSpec noise{NoiseKind::kPoisson, s(0.15), sv(2.0)};
  const auto batch = simulate_poisson_paths(p, noise, u, {.paths = 500, .seed = 2});
  std::vector<Vec> shifted;
  for (std::size_t i = 0; i < grid.size(); ++i) shifted.push_back(batch.mean[i] + 10.0 * batch.std_error[i]);
  const auto cmp = mc_mean_compare(batch, VectorTrajectory(grid, shifted));
  EXPECT_GT(cmp.max_standardized, 4.0);
  EXPECT_NEAR(cmp.max_standardized, 10.0, 1e-9);
}

}  // namespace
}  // namespace bilens
