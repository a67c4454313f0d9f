#include "bilens/model.hpp"

#include <Eigen/Cholesky>
#include <cmath>
#include <string>

namespace bilens {

namespace {

void require(bool ok, const std::string& what) {
  if (!ok) throw InvalidArgument(what);
}

}  // namespace

BilinearProblem::BilinearProblem(Eigen::MatrixXd A, Eigen::MatrixXd B,
                                 std::vector<Eigen::MatrixXd> bilinear, Eigen::VectorXd g,
                                 Eigen::VectorXd x0, Eigen::VectorXd xd, double tf,
                                 Eigen::MatrixXd R, double terminal_weight)
    : A_(std::move(A)),
      B_(std::move(B)),
      bilinear_(std::move(bilinear)),
      g_(std::move(g)),
      x0_(std::move(x0)),
      xd_(std::move(xd)),
      tf_(tf),
      R_(std::move(R)),
      terminal_weight_(terminal_weight) {
  const Eigen::Index n = A_.rows();
  require(n > 0 && A_.cols() == n, "A must be a non-empty square matrix");
  require(B_.rows() == n, "B must have n rows");
  const Eigen::Index m = B_.cols();
  require(m > 0, "control dimension m must be positive");
  require(static_cast<Eigen::Index>(bilinear_.size()) == m,
          "expected one bilinear matrix per control channel (m=" + std::to_string(m) + ")");
  for (std::size_t i = 0; i < bilinear_.size(); ++i) {
    require(bilinear_[i].rows() == n && bilinear_[i].cols() == n,
            "bilinear matrix " + std::to_string(i + 1) + " must be n x n");
  }
  require(g_.size() == n, "g must have length n");
  require(x0_.size() == n, "x0 must have length n");
  require(xd_.size() == n, "xd must have length n");
  require(std::isfinite(tf_) && tf_ > 0.0, "tf must be positive");
  require(std::isfinite(terminal_weight_) && terminal_weight_ > 0.0,
          "terminal weight must be positive");
  require(R_.rows() == m && R_.cols() == m, "R must be m x m");
  require(A_.allFinite() && B_.allFinite() && g_.allFinite() && x0_.allFinite() &&
              xd_.allFinite() && R_.allFinite(),
          "problem data must be finite");
  const double scale = std::max(1.0, R_.cwiseAbs().maxCoeff());
  require((R_ - R_.transpose()).cwiseAbs().maxCoeff() <= 1e-12 * scale, "R must be symmetric");
  Eigen::LLT<Eigen::MatrixXd> llt(R_);
  require(llt.info() == Eigen::Success, "R must be positive definite");
  R_inv_ = llt.solve(Eigen::MatrixXd::Identity(m, m));
  R_inv_ = 0.5 * (R_inv_ + R_inv_.transpose()).eval();
  BRBt_ = B_ * R_inv_ * B_.transpose();
  BRBt_ = 0.5 * (BRBt_ + BRBt_.transpose()).eval();
}

bool BilinearProblem::is_linear() const {
  for (const auto& b : bilinear_) {
    if (!b.isZero(0.0)) return false;
  }
  return true;
}

BilinearProblem BilinearProblem::with_g(Eigen::VectorXd g) const {
  return BilinearProblem(A_, B_, bilinear_, std::move(g), x0_, xd_, tf_, R_, terminal_weight_);
}

BilinearProblem BilinearProblem::with_R(Eigen::MatrixXd R) const {
  return BilinearProblem(A_, B_, bilinear_, g_, x0_, xd_, tf_, std::move(R), terminal_weight_);
}

Eigen::MatrixXd NFamily::contract(const Eigen::Ref<const Eigen::VectorXd>& x) const {
  if (static_cast<Eigen::Index>(N.size()) != x.size()) {
    throw InvalidArgument("state length does not match the N family");
  }
  Eigen::MatrixXd out = Eigen::MatrixXd::Zero(N.front().rows(), N.front().cols());
  for (std::size_t j = 0; j < N.size(); ++j) {
    if (x[j] != 0.0) out.noalias() += x[j] * N[j];
  }
  return out;
}

NFamily assemble_N(const std::vector<Eigen::MatrixXd>& bilinear) {
  if (bilinear.empty()) throw InvalidArgument("need at least one bilinear matrix");
  const Eigen::Index n = bilinear.front().rows();
  const auto m = static_cast<Eigen::Index>(bilinear.size());
  for (const auto& b : bilinear) {
    if (b.rows() != n || b.cols() != n) {
      throw InvalidArgument("bilinear matrices must all be n x n");
    }
  }
  NFamily fam;
  fam.N.assign(static_cast<std::size_t>(n), Eigen::MatrixXd::Zero(n, m));
  for (Eigen::Index j = 0; j < n; ++j) {
    for (Eigen::Index i = 0; i < m; ++i) {
      fam.N[static_cast<std::size_t>(j)].col(i) = bilinear[static_cast<std::size_t>(i)].col(j);
    }
  }
  return fam;
}

Eigen::MatrixXd lambda_of(const BilinearProblem& prob, const NFamily& N,
                          const Eigen::Ref<const Eigen::VectorXd>& x) {
  return prob.B() + N.contract(x);
}

Eigen::MatrixXd a_tilde(const BilinearProblem& prob, const NFamily& N,
                        const Eigen::Ref<const Eigen::VectorXd>& x,
                        const Eigen::Ref<const Eigen::VectorXd>& p) {
  const Eigen::Index n = prob.n();
  if (x.size() != n || p.size() != n) throw InvalidArgument("a_tilde: x and p must have length n");
  Eigen::MatrixXd out = prob.A();
  if (p.isZero(0.0)) return out;
  const Eigen::MatrixXd lambda = lambda_of(prob, N, x);
  const Eigen::VectorXd v = prob.R_inv() * (lambda.transpose() * p);
  // Column j of the correction is N_j R^{-1} Λ^T p + Λ R^{-1} N_j^T p.
  const Eigen::MatrixXd lambda_rinv = lambda * prob.R_inv();
  for (Eigen::Index j = 0; j < n; ++j) {
    const auto& nj = N.N[static_cast<std::size_t>(j)];
    out.col(j).noalias() -= nj * v;
    out.col(j).noalias() -= lambda_rinv * (nj.transpose() * p);
  }
  return out;
}

Eigen::MatrixXd o_tilde(const BilinearProblem& prob, const NFamily& N,
                        const Eigen::Ref<const Eigen::VectorXd>& x) {
  if (x.size() != prob.n()) throw InvalidArgument("o_tilde: x must have length n");
  const Eigen::MatrixXd nx = N.contract(x);
  Eigen::MatrixXd out = prob.input_gramian();
  out.noalias() -= nx * prob.R_inv() * nx.transpose();
  return 0.5 * (out + out.transpose());
}

double consistency_identity_check(const BilinearProblem& prob, const NFamily& N,
                                  const Eigen::Ref<const Eigen::VectorXd>& x,
                                  const Eigen::Ref<const Eigen::VectorXd>& p) {
  const Eigen::MatrixXd lambda = lambda_of(prob, N, x);
  const Eigen::VectorXd lhs = a_tilde(prob, N, x, p) * x - o_tilde(prob, N, x) * p;
  const Eigen::VectorXd rhs = prob.A() * x - lambda * (prob.R_inv() * (lambda.transpose() * p));
  return (lhs - rhs).lpNorm<1>();
}

Eigen::VectorXd bilinear_rhs(const BilinearProblem& prob,
                             const Eigen::Ref<const Eigen::VectorXd>& x,
                             const Eigen::Ref<const Eigen::VectorXd>& u) {
  Eigen::VectorXd dx = prob.A() * x + prob.B() * u + prob.g();
  for (std::size_t i = 0; i < prob.bilinear().size(); ++i) {
    if (u[static_cast<Eigen::Index>(i)] != 0.0) {
      dx.noalias() += u[static_cast<Eigen::Index>(i)] * (prob.bilinear()[i] * x);
    }
  }
  return dx;
}

}  // namespace bilens
