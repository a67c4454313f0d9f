#include <gtest/gtest.h>

#include "bilens/model.hpp"
#include "support/properties.hpp"

namespace bilens {
namespace {

using Mat = Eigen::MatrixXd;
using Vec = Eigen::VectorXd;

Mat s(double v) { return Mat::Constant(1, 1, v); }
Vec sv(double v) { return Vec::Constant(1, v); }

// Scalar integrate-and-fire member: A = -alpha, B = gamma E, B1 = -gamma.
BilinearProblem iaf(double alpha = 1.25, double R = 5.0) {
  return BilinearProblem(s(-alpha), s(2.0), {s(-2.0)}, sv(0.0), sv(0.0), sv(0.5), 10.0, s(R));
}

TEST(BilinearProblem, RejectsBadShapesAndR) {
  EXPECT_THROW(BilinearProblem(Mat::Zero(2, 3), Mat::Zero(2, 1), {Mat::Zero(2, 2)}, Vec::Zero(2),
                               Vec::Zero(2), Vec::Zero(2), 1.0, s(1.0)),
               InvalidArgument);
  EXPECT_THROW(BilinearProblem(s(0), s(1), {}, sv(0), sv(0), sv(0), 1.0, s(1.0)), InvalidArgument);
  EXPECT_THROW(BilinearProblem(s(0), s(1), {s(0)}, sv(0), sv(0), sv(0), 1.0, s(-1.0)), InvalidArgument);
  Mat asym(2, 2);
  asym << 1, 0.5, 0, 1;
  EXPECT_THROW(BilinearProblem(s(0), Mat::Zero(1, 2), {s(0), s(0)}, sv(0), sv(0), sv(0), 1.0, asym),
               InvalidArgument);
  EXPECT_THROW(BilinearProblem(s(0), s(1), {s(0)}, sv(0), sv(0), sv(0), 0.0, s(1.0)), InvalidArgument);
}

TEST(BilinearProblem, LinearFlag) {
  EXPECT_FALSE(iaf().is_linear());
  EXPECT_TRUE(BilinearProblem(s(0), s(1), {s(0)}, sv(0), sv(0), sv(0), 1.0, s(1)).is_linear());
}

TEST(AssembleN, ColumnsOfBi) {
  Mat B1(2, 2);
  B1 << 0, 1, 0, 0;
  const NFamily N = assemble_N({B1});
  ASSERT_EQ(N.N.size(), 2u);
  EXPECT_EQ(N.N[0], Mat::Zero(2, 1));
  EXPECT_EQ(N.N[1], (Mat(2, 1) << 1, 0).finished());
  for (const auto& Nj : assemble_N({Mat::Zero(3, 3), Mat::Zero(3, 3)}).N) EXPECT_TRUE(Nj.isZero(0.0));
}

TEST(AssembleN, RejectsMixedShapes) {
  EXPECT_THROW(assemble_N({Mat::Zero(2, 2), Mat::Zero(3, 3)}), InvalidArgument);
}

TEST(AssembleN, IdentityOnRandomInstances) {
  EXPECT_LT(testing::assemble_n_identity_residual(100, 11), 1e-12);
}

TEST(Lambda, HandValues) {
  const BilinearProblem p = iaf();
  const NFamily N = assemble_N(p.bilinear());
  EXPECT_DOUBLE_EQ(lambda_of(p, N, sv(0.0))(0, 0), 2.0);
  EXPECT_DOUBLE_EQ(lambda_of(p, N, sv(0.5))(0, 0), 1.0);
}

TEST(ATilde, HandValueAndDegenerations) {
  const BilinearProblem p = iaf();
  const NFamily N = assemble_N(p.bilinear());
  EXPECT_NEAR(a_tilde(p, N, sv(0.0), sv(1.0))(0, 0), 0.35, 1e-15);
  EXPECT_EQ(a_tilde(p, N, sv(0.3), sv(0.0)), p.A());

  Mat A(2, 2);
  A << 0.1, 2, -1, 0.3;
  const BilinearProblem lin(A, Mat::Ones(2, 1), {Mat::Zero(2, 2)}, Vec::Zero(2), Vec::Zero(2), Vec::Zero(2),
                            1.0, s(2.0));
  EXPECT_EQ(a_tilde(lin, assemble_N(lin.bilinear()), Vec::Ones(2), Vec::Constant(2, 3.0)), A);
}

TEST(ATilde, MatchesBruteForceEntrywise) {
  Mat A(2, 2), B(2, 2), B1(2, 2), B2(2, 2), R(2, 2);
  A << 0.3, -1, 0.7, 0.2;
  B << 1, 0.5, -0.2, 2;
  B1 << 0.4, -0.3, 1.1, 0;
  B2 << -1, 0.2, 0.6, 0.9;
  R << 2, 0.3, 0.3, 1;
  const BilinearProblem p(A, B, {B1, B2}, Vec::Zero(2), Vec::Zero(2), Vec::Zero(2), 1.0, R);
  const NFamily N = assemble_N(p.bilinear());
  const Vec x = Eigen::Vector2d(0.8, -1.3), pp = Eigen::Vector2d(-0.4, 0.9);
  const Mat L = lambda_of(p, N, x), Ri = R.inverse();
  const Mat got = a_tilde(p, N, x, pp);
  for (int i = 0; i < 2; ++i) {
    for (int j = 0; j < 2; ++j) {
      const Vec col = (N.N[j] * Ri * L.transpose() + L * Ri * N.N[j].transpose()) * pp;
      EXPECT_NEAR(got(i, j), A(i, j) - col(i), 1e-14);
    }
  }
}

TEST(OTilde, HandValueSymmetryAndDegenerations) {
  const BilinearProblem p = iaf();
  const NFamily N = assemble_N(p.bilinear());
  EXPECT_NEAR(o_tilde(p, N, sv(0.5))(0, 0), 0.6, 1e-15);
  EXPECT_NEAR(o_tilde(p, N, sv(0.0))(0, 0), 0.8, 1e-15);

  Mat B1(3, 3), B2(3, 3);
  B1 << 0, 0, 1, 0, 0, 0, -1, 0, 0;
  B2 << 0, 0, 0, 0, 0, -1, 0, 1, 0;
  const BilinearProblem bloch(Mat::Zero(3, 3), Mat::Zero(3, 2), {B1, B2}, Vec::Zero(3), Vec::Zero(3),
                              Vec::Zero(3), 1.0, Mat::Identity(2, 2));
  const Mat O = o_tilde(bloch, assemble_N(bloch.bilinear()), Eigen::Vector3d(0.3, -0.2, 0.9));
  EXPECT_LT((O - O.transpose()).cwiseAbs().maxCoeff(), 1e-14);
  // No linear input: Õ is negative semidefinite.
  EXPECT_LE(Eigen::SelfAdjointEigenSolver<Mat>(O).eigenvalues().maxCoeff(), 1e-14);
}

TEST(Consistency, VanishesAtTrivialPoints) {
  const BilinearProblem p = iaf();
  const NFamily N = assemble_N(p.bilinear());
  EXPECT_LT(consistency_identity_check(p, N, sv(0.0), sv(0.7)), 1e-15);
  EXPECT_LT(consistency_identity_check(p, N, sv(0.4), sv(0.0)), 1e-15);
}

TEST(Consistency, IdentityOnRandomInstances) {
  EXPECT_LT(testing::consistency_identity_residual(100, 29), 1e-10);
}

TEST(BilinearRhs, MatchesDefinition) {
  const BilinearProblem p = iaf();
  EXPECT_NEAR(bilinear_rhs(p, sv(0.5), sv(0.3))(0), -1.25 * 0.5 + 2.0 * 0.3 - 2.0 * 0.3 * 0.5, 1e-15);
}

}  // namespace
}  // namespace bilens
