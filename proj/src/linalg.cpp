#include "lrll/linalg.hpp"

#include <algorithm>
#include <cmath>
#include <string>

#include <Eigen/Eigenvalues>
#include <Eigen/SVD>

#include "lrll/errors.hpp"
#include "lrll/rng.hpp"

namespace lrll {
namespace {

constexpr double kAsymmetryGate = 1e-12;
constexpr double kRankTolerance = 1e-10;
constexpr Index kDenseEigenLimit = 2000;

Mat symmetrized(const Mat& S, std::string_view what) {
  if (S.rows() != S.cols()) {
    throw InputError(std::string(what) + ": matrix is not square");
  }
  require_finite(S, what);
  const double asym = (S - S.transpose()).norm();
  if (asym > kAsymmetryGate * std::max(1.0, S.norm())) {
    throw InputError(std::string(what) + ": matrix is not symmetric");
  }
  return 0.5 * (S + S.transpose());
}

void normalize_column_signs(Mat& U, Mat& V) {
  for (Index j = 0; j < U.cols(); ++j) {
    Index arg = 0;
    U.col(j).cwiseAbs().maxCoeff(&arg);
    if (U(arg, j) < 0.0) {
      U.col(j) *= -1.0;
      V.col(j) *= -1.0;
    }
  }
}

}  // namespace

FactorPair FactorPair::asymmetric(Mat U, Mat V) {
  if (U.cols() != V.cols()) {
    throw InputError("FactorPair: U and V must share the column count");
  }
  FactorPair out;
  out.U_ = std::move(U);
  out.V_ = std::move(V);
  return out;
}

FactorPair FactorPair::symmetric(Mat U) {
  FactorPair out;
  out.U_ = std::move(U);
  out.symmetric_ = true;
  return out;
}

Mat FactorPair::product() const { return U() * V().transpose(); }

double FactorPair::balance_residual() const {
  if (symmetric_) return 0.0;
  return (U_.transpose() * U_ - V_.transpose() * V_).norm();
}

Mat FactorPair::stacked() const {
  if (symmetric_) return U_;
  Mat W(U_.rows() + V_.rows(), U_.cols());
  W << U_, V_;
  return W;
}

FactorPair FactorPair::from_stacked(const Mat& W, Index n, bool symmetric) {
  if (symmetric) return FactorPair::symmetric(W);
  return FactorPair::asymmetric(W.topRows(n), W.bottomRows(W.rows() - n));
}

void require_finite(const Mat& M, std::string_view what) {
  if (M.size() == 0) {
    throw InputError(std::string(what) + ": empty matrix");
  }
  if (!M.allFinite()) {
    throw InputError(std::string(what) + ": non-finite entry");
  }
}

Mat truncated_svd_project(const Mat& M, Index r) {
  if (r < 1) throw InputError("truncated_svd_project: r must be >= 1");
  require_finite(M, "truncated_svd_project");
  const Index k = std::min(M.rows(), M.cols());
  if (r >= k) return M;
  Eigen::JacobiSVD<Mat> svd(M, Eigen::ComputeThinU | Eigen::ComputeThinV);
  return svd.matrixU().leftCols(r) *
         svd.singularValues().head(r).asDiagonal() *
         svd.matrixV().leftCols(r).transpose();
}

Mat psd_truncated_project(const Mat& S, Index r) {
  if (r < 1) throw InputError("psd_truncated_project: r must be >= 1");
  const Mat sym = symmetrized(S, "psd_truncated_project");
  Eigen::SelfAdjointEigenSolver<Mat> eig(sym);
  const Index n = sym.rows();
  Mat out = Mat::Zero(n, n);
  // Eigenvalues ascend; walk from the top.
  for (Index k = 0; k < std::min(r, n); ++k) {
    const Index idx = n - 1 - k;
    const double lambda = eig.eigenvalues()(idx);
    if (lambda <= 0.0) break;
    out.noalias() += lambda * eig.eigenvectors().col(idx) *
                     eig.eigenvectors().col(idx).transpose();
  }
  return 0.5 * (out + out.transpose());
}

FactorPair balanced_factorize(const Mat& M, Index r) {
  if (r < 1) throw InputError("balanced_factorize: r must be >= 1");
  require_finite(M, "balanced_factorize");
  Eigen::JacobiSVD<Mat> svd(M, Eigen::ComputeFullU | Eigen::ComputeFullV);
  const Vec& s = svd.singularValues();
  const Index k = s.size();
  if (r < k && s(r) > kRankTolerance * s(0)) {
    throw RankError("balanced_factorize: effective rank exceeds r (sigma_" +
                    std::to_string(r + 1) + " = " + std::to_string(s(r)) +
                    ")");
  }
  Mat U = Mat::Zero(M.rows(), r);
  Mat V = Mat::Zero(M.cols(), r);
  for (Index j = 0; j < std::min(r, k); ++j) {
    if (s(j) <= kRankTolerance * s(0)) break;  // roundoff-level, leave zero
    const double root = std::sqrt(s(j));
    U.col(j) = root * svd.matrixU().col(j);
    V.col(j) = root * svd.matrixV().col(j);
  }
  normalize_column_signs(U, V);
  return FactorPair::asymmetric(std::move(U), std::move(V));
}

Mat psd_factorize(const Mat& M, Index r) {
  if (r < 1) throw InputError("psd_factorize: r must be >= 1");
  const Mat sym = symmetrized(M, "psd_factorize");
  Eigen::SelfAdjointEigenSolver<Mat> eig(sym);
  const Index n = sym.rows();
  const double top = std::max(eig.eigenvalues().cwiseAbs().maxCoeff(), 0.0);
  if (eig.eigenvalues()(0) < -kRankTolerance * top) {
    throw InputError("psd_factorize: matrix is not positive semidefinite");
  }
  if (r < n && eig.eigenvalues()(n - 1 - r) > kRankTolerance * top) {
    throw RankError("psd_factorize: effective rank exceeds r");
  }
  Mat U = Mat::Zero(n, r);
  for (Index j = 0; j < std::min(r, n); ++j) {
    const double lambda = eig.eigenvalues()(n - 1 - j);
    if (lambda <= kRankTolerance * top) break;
    U.col(j) = std::sqrt(lambda) * eig.eigenvectors().col(n - 1 - j);
  }
  Mat unused = U;
  normalize_column_signs(U, unused);
  return U;
}

double sigma_r(const Mat& M, Index r) {
  require_finite(M, "sigma_r");
  const Index k = std::min(M.rows(), M.cols());
  if (r < 1 || r > k) throw InputError("sigma_r: r out of range");
  Eigen::JacobiSVD<Mat> svd(M);
  return svd.singularValues()(r - 1);
}

double lambda_min_sym(const Mat& S) {
  const Mat sym = symmetrized(S, "lambda_min_sym");
  if (sym.rows() <= kDenseEigenLimit) {
    Eigen::SelfAdjointEigenSolver<Mat> eig(sym, Eigen::EigenvaluesOnly);
    return eig.eigenvalues()(0);
  }
  const auto result = lanczos_lambda_min(
      sym.rows(), [&sym](const Vec& x) -> Vec { return sym * x; }, 1e-8);
  return result.value;
}

LanczosResult lanczos_lambda_min(Index dim, const LinearOperator& apply,
                                 double tol, int max_restarts,
                                 int krylov_dim) {
  LanczosResult result;
  if (dim <= 0) throw InputError("lanczos_lambda_min: empty operator");
  const Index m = std::min<Index>(krylov_dim, dim);
  RandomStream rng(0x4c616e637a6f73ull);  // fixed start for determinism
  Vec start(dim);
  for (Index i = 0; i < dim; ++i) start(i) = rng.normal();
  start.normalize();

  for (int restart = 0; restart <= max_restarts; ++restart) {
    Mat Q(dim, m);
    Vec alpha(m), beta(m);
    Q.col(0) = start;
    Index steps = 0;
    for (Index j = 0; j < m; ++j) {
      Vec w = apply(Q.col(j));
      alpha(j) = Q.col(j).dot(w);
      // Full reorthogonalization (twice is enough).
      for (int pass = 0; pass < 2; ++pass) {
        w -= Q.leftCols(j + 1) * (Q.leftCols(j + 1).transpose() * w);
      }
      steps = j + 1;
      beta(j) = w.norm();
      if (j + 1 == m) break;
      if (beta(j) < 1e-14) break;  // invariant subspace found
      Q.col(j + 1) = w / beta(j);
    }
    Mat T = Mat::Zero(steps, steps);
    for (Index j = 0; j < steps; ++j) {
      T(j, j) = alpha(j);
      if (j + 1 < steps) T(j, j + 1) = T(j + 1, j) = beta(j);
    }
    Eigen::SelfAdjointEigenSolver<Mat> eig(T);
    const double theta = eig.eigenvalues()(0);
    Vec y = Q.leftCols(steps) * eig.eigenvectors().col(0);
    y.normalize();
    const double residual = (apply(y) - theta * y).norm();
    result.value = theta;
    result.vector = y;
    result.residual = residual;
    result.iterations += static_cast<int>(steps);
    if (residual <= tol * std::max(1.0, std::abs(theta))) {
      result.converged = true;
      return result;
    }
    start = y;
  }
  return result;
}

Mat procrustes_rotation(const Mat& W, const Mat& Wstar) {
  if (W.rows() != Wstar.rows() || W.cols() != Wstar.cols()) {
    throw InputError("procrustes: shape mismatch");
  }
  require_finite(W, "procrustes W");
  require_finite(Wstar, "procrustes Wstar");
  Eigen::JacobiSVD<Mat> svd(Wstar.transpose() * W,
                            Eigen::ComputeFullU | Eigen::ComputeFullV);
  return svd.matrixU() * svd.matrixV().transpose();
}

double procrustes_distance(const Mat& W, const Mat& Wstar) {
  const Mat R = procrustes_rotation(W, Wstar);
  return (W - Wstar * R).norm();
}

}  // namespace lrll
