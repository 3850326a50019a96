#include "lrll/factorized.hpp"

#include <Eigen/Eigenvalues>
#include <cmath>
#include <string>

#include "lrll/errors.hpp"

namespace lrll {
namespace {

Mat sym(const Mat& A) { return 0.5 * (A + A.transpose()); }

Vec flatten(const FactorPair& F) {
  const Index nu = F.U().size();
  const Index nv = F.is_symmetric() ? 0 : F.V().size();
  Vec out(nu + nv);
  out.head(nu) = Eigen::Map<const Vec>(F.U().data(), nu);
  if (nv > 0) out.tail(nv) = Eigen::Map<const Vec>(F.V().data(), nv);
  return out;
}

FactorPair unflatten(const Vec& x, const FactorPair& like) {
  const Index n = like.U().rows();
  const Index r = like.rank();
  Mat U = Eigen::Map<const Mat>(x.data(), n, r);
  if (like.is_symmetric()) return FactorPair::symmetric(std::move(U));
  const Index m = like.V().rows();
  Mat V = Eigen::Map<const Mat>(x.data() + n * r, m, r);
  return FactorPair::asymmetric(std::move(U), std::move(V));
}

}  // namespace

void FactoredProblem::check_point(const FactorPair& F) const {
  const Objective& obj = objective();
  if (F.is_symmetric() != symmetric()) {
    throw InputError(symmetric() ? "expected a symmetric factor"
                                 : "expected an asymmetric factor pair");
  }
  if (F.rank() < 1) throw InputError("factor rank must be >= 1");
  if (F.U().rows() != obj.rows() || F.V().rows() != obj.cols()) {
    throw InputError("factor rows do not match the objective (" +
                     std::to_string(obj.rows()) + "x" +
                     std::to_string(obj.cols()) + ")");
  }
  require_finite(F.U(), "factor U");
  if (!F.is_symmetric()) require_finite(F.V(), "factor V");
}

Index FactoredProblem::dimension(Index r) const {
  const Objective& obj = objective();
  return symmetric() ? obj.rows() * r : (obj.rows() + obj.cols()) * r;
}

// ---------------------------------------------------------------------------
// Asymmetric, regularized

RegularizedProblem::RegularizedProblem(ObjectivePtr obj, double mu)
    : obj_(std::move(obj)), mu_(mu) {
  if (!obj_) throw InputError("RegularizedProblem: null objective");
  if (!(mu_ >= 0.0) || !std::isfinite(mu_)) {
    throw DomainError("RegularizedProblem: mu must be finite and >= 0");
  }
}

double RegularizedProblem::value(const FactorPair& F) const {
  check_point(F);
  const Mat D = F.U().transpose() * F.U() - F.V().transpose() * F.V();
  return obj_->value(F.product()) + 0.25 * mu_ * D.squaredNorm();
}

FactorPair RegularizedProblem::gradient(const FactorPair& F) const {
  check_point(F);
  const Mat& U = F.U();
  const Mat& V = F.V();
  const Mat G = obj_->gradient(F.product());
  const Mat D = U.transpose() * U - V.transpose() * V;
  return FactorPair::asymmetric(G * V + mu_ * U * D,
                                G.transpose() * U - mu_ * V * D);
}

FactorPair RegularizedProblem::hess_apply(const FactorPair& F,
                                          const FactorPair& Dir) const {
  check_point(F);
  const Mat& U = F.U();
  const Mat& V = F.V();
  const Mat& dU = Dir.U();
  const Mat& dV = Dir.V();
  const Mat M = F.product();
  const Mat G = obj_->gradient(M);
  const Mat HdM = obj_->hess_apply(M, U * dV.transpose() + dU * V.transpose());
  const Mat D = U.transpose() * U - V.transpose() * V;
  const Mat dD = U.transpose() * dU + dU.transpose() * U -
                 V.transpose() * dV - dV.transpose() * V;
  Mat HU = G * dV + HdM * V + mu_ * (dU * D + U * dD);
  Mat HV = G.transpose() * dU + HdM.transpose() * U - mu_ * (dV * D + V * dD);
  return FactorPair::asymmetric(std::move(HU), std::move(HV));
}

double RegularizedProblem::hess_qform(const FactorPair& F,
                                      const FactorPair& Dir) const {
  return rho_hess_qform(*this, F, Dir.U(), Dir.V());
}

double rho_value(const RegularizedProblem& P, const FactorPair& F) {
  return P.value(F);
}

FactorPair rho_grad(const RegularizedProblem& P, const FactorPair& F) {
  return P.gradient(F);
}

double rho_hess_qform(const RegularizedProblem& P, const FactorPair& F,
                      const Mat& dU, const Mat& dV) {
  P.check_point(F);
  const Mat& U = F.U();
  const Mat& V = F.V();
  if (dU.rows() != U.rows() || dU.cols() != U.cols() ||
      dV.rows() != V.rows() || dV.cols() != V.cols()) {
    throw InputError("rho_hess_qform: direction shape mismatch");
  }
  const Objective& f = P.objective();
  const Mat M = F.product();
  const Mat dM = U * dV.transpose() + dU * V.transpose();
  const Mat D = U.transpose() * U - V.transpose() * V;
  const Mat dD = U.transpose() * dU + dU.transpose() * U -
                 V.transpose() * dV - dV.transpose() * V;
  const double mu = P.mu();
  return 2.0 * inner(f.gradient(M), dU * dV.transpose()) +
         f.hess_qform(M, dM) + 0.5 * mu * dD.squaredNorm() +
         mu * inner(D, dU.transpose() * dU - dV.transpose() * dV);
}

// ---------------------------------------------------------------------------
// Symmetric

SymmetricProblem::SymmetricProblem(ObjectivePtr obj) : obj_(std::move(obj)) {
  if (!obj_) throw InputError("SymmetricProblem: null objective");
  if (obj_->rows() != obj_->cols()) {
    throw InputError("SymmetricProblem: objective must be square");
  }
}

double SymmetricProblem::value(const FactorPair& F) const {
  check_point(F);
  return hs_value(*obj_, F.U());
}

FactorPair SymmetricProblem::gradient(const FactorPair& F) const {
  check_point(F);
  return FactorPair::symmetric(hs_grad(*obj_, F.U()));
}

FactorPair SymmetricProblem::hess_apply(const FactorPair& F,
                                        const FactorPair& Dir) const {
  check_point(F);
  const Mat& U = F.U();
  const Mat& dU = Dir.U();
  const Mat M = U * U.transpose();
  const Mat G = sym(obj_->gradient(M));
  const Mat HdM =
      sym(obj_->hess_apply(M, U * dU.transpose() + dU * U.transpose()));
  return FactorPair::symmetric(2.0 * G * dU + 2.0 * HdM * U);
}

double SymmetricProblem::hess_qform(const FactorPair& F,
                                    const FactorPair& Dir) const {
  check_point(F);
  return hs_hess_qform(*obj_, F.U(), Dir.U());
}

double hs_value(const Objective& obj, const Mat& U) {
  return obj.value(U * U.transpose());
}

Mat hs_grad(const Objective& obj, const Mat& U) {
  return 2.0 * sym(obj.gradient(U * U.transpose())) * U;
}

double hs_hess_qform(const Objective& obj, const Mat& U, const Mat& D) {
  if (D.rows() != U.rows() || D.cols() != U.cols()) {
    throw InputError("hs_hess_qform: direction shape mismatch");
  }
  const Mat M = U * U.transpose();
  const Mat dM = U * D.transpose() + D * U.transpose();
  return 2.0 * inner(sym(obj.gradient(M)), D * D.transpose()) +
         obj.hess_qform(M, dM);
}

double gradient_norm(const FactorPair& G) {
  if (G.is_symmetric()) return G.U().norm();
  return std::sqrt(G.U().squaredNorm() + G.V().squaredNorm());
}

// ---------------------------------------------------------------------------
// Second-order information

Mat assemble_hessian(const FactoredProblem& P, const FactorPair& F) {
  P.check_point(F);
  const Index dim = P.dimension(F.rank());
  if (dim > kHessianAssemblyLimit) {
    throw CapacityError("assemble_hessian: dimension " + std::to_string(dim) +
                        " exceeds " + std::to_string(kHessianAssemblyLimit));
  }
  Mat H(dim, dim);
  Vec e = Vec::Zero(dim);
  for (Index k = 0; k < dim; ++k) {
    e(k) = 1.0;
    H.col(k) = flatten(P.hess_apply(F, unflatten(e, F)));
    e(k) = 0.0;
  }
  return sym(H);
}

double hessian_lambda_min(const FactoredProblem& P, const FactorPair& F) {
  P.check_point(F);
  const Index dim = P.dimension(F.rank());
  if (dim <= kHessianAssemblyLimit) {
    Eigen::SelfAdjointEigenSolver<Mat> eig(assemble_hessian(P, F),
                                           Eigen::EigenvaluesOnly);
    return eig.eigenvalues()(0);
  }
  const auto result = lanczos_lambda_min(dim, [&](const Vec& x) -> Vec {
    return flatten(P.hess_apply(F, unflatten(x, F)));
  });
  if (!result.converged) {
    throw NumericalError("hessian_lambda_min: Lanczos did not converge");
  }
  return result.value;
}

// ---------------------------------------------------------------------------
// Lifts

SymmetricLift::SymmetricLift(ObjectivePtr base, double delta)
    : base_(std::move(base)), delta_(delta) {
  if (!base_) throw InputError("SymmetricLift: null objective");
  if (!(delta >= 0.0 && delta < 1.0)) {
    throw DomainError("SymmetricLift: delta must lie in [0, 1)");
  }
  n_ = base_->rows();
  m_ = base_->cols();
  mu_ = 0.5 * (1.0 - delta);
  scale_ = 2.0 / (1.0 + delta);
}

double SymmetricLift::lifted_loss(const Mat& N) const {
  check_shape(N, "symmetric lift");
  return base_->value(N.topRightCorner(n_, m_)) +
         base_->value(N.bottomLeftCorner(m_, n_).transpose());
}

double SymmetricLift::lifted_balance(const Mat& N) const {
  check_shape(N, "symmetric lift");
  return N.topLeftCorner(n_, n_).squaredNorm() +
         N.bottomRightCorner(m_, m_).squaredNorm() -
         N.topRightCorner(n_, m_).squaredNorm() -
         N.bottomLeftCorner(m_, n_).squaredNorm();
}

double SymmetricLift::value(const Mat& N) const {
  return scale_ * (lifted_loss(N) + 0.5 * mu_ * lifted_balance(N));
}

Mat SymmetricLift::gradient(const Mat& N) const {
  check_shape(N, "symmetric lift");
  Mat G = mu_ * N;
  G.topRightCorner(n_, m_) *= -1.0;
  G.bottomLeftCorner(m_, n_) *= -1.0;
  G.topRightCorner(n_, m_) += base_->gradient(N.topRightCorner(n_, m_));
  G.bottomLeftCorner(m_, n_) +=
      base_->gradient(N.bottomLeftCorner(m_, n_).transpose()).transpose();
  return scale_ * G;
}

Mat SymmetricLift::hess_apply(const Mat& N, const Mat& K) const {
  check_shape(N, "symmetric lift");
  check_shape(K, "symmetric lift direction");
  Mat H = mu_ * K;
  H.topRightCorner(n_, m_) *= -1.0;
  H.bottomLeftCorner(m_, n_) *= -1.0;
  H.topRightCorner(n_, m_) += base_->hess_apply(N.topRightCorner(n_, m_),
                                                K.topRightCorner(n_, m_));
  H.bottomLeftCorner(m_, n_) +=
      base_
          ->hess_apply(N.bottomLeftCorner(m_, n_).transpose(),
                       K.bottomLeftCorner(m_, n_).transpose())
          .transpose();
  return scale_ * H;
}

std::optional<double> SymmetricLift::lower_bound() const {
  // Valid on the PSD cone, where the factorized problem lives:
  // F(W W^T) = 4/(1+delta) rho(U, V) >= 4/(1+delta) inf f.
  const auto lb = base_->lower_bound();
  if (!lb) return std::nullopt;
  return 2.0 * scale_ * *lb;
}

std::shared_ptr<const SymmetricLift> lift_to_symmetric(ObjectivePtr obj,
                                                       double delta) {
  return std::make_shared<const SymmetricLift>(std::move(obj), delta);
}

AsymmetricLift::AsymmetricLift(ObjectivePtr base) : base_(std::move(base)) {
  if (!base_) throw InputError("AsymmetricLift: null objective");
  if (base_->rows() != base_->cols()) {
    throw InputError("AsymmetricLift: objective must be square");
  }
}

double AsymmetricLift::value(const Mat& M) const {
  check_shape(M, "asymmetric lift");
  return base_->value(sym(M));
}

Mat AsymmetricLift::gradient(const Mat& M) const {
  check_shape(M, "asymmetric lift");
  return sym(base_->gradient(sym(M)));
}

Mat AsymmetricLift::hess_apply(const Mat& M, const Mat& K) const {
  check_shape(M, "asymmetric lift");
  check_shape(K, "asymmetric lift direction");
  return sym(base_->hess_apply(sym(M), sym(K)));
}

std::shared_ptr<const AsymmetricLift> lift_to_asymmetric(ObjectivePtr obj) {
  return std::make_shared<const AsymmetricLift>(std::move(obj));
}

}  // namespace lrll
