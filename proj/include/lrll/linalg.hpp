#pragma once

#include <functional>
#include <string_view>

#include <Eigen/Core>

namespace lrll {

/// Dense real matrix. Every public operation rejects non-finite entries.
using Mat = Eigen::MatrixXd;
using Vec = Eigen::VectorXd;
using Index = Eigen::Index;

/// Factor variables of the Burer-Monteiro parameterization. In the symmetric
/// case only U is meaningful and V() returns U.
class FactorPair {
 public:
  FactorPair() = default;
  static FactorPair asymmetric(Mat U, Mat V);
  static FactorPair symmetric(Mat U);

  const Mat& U() const { return U_; }
  const Mat& V() const { return symmetric_ ? U_ : V_; }
  Mat& U() { return U_; }
  Mat& V() { return symmetric_ ? U_ : V_; }
  bool is_symmetric() const { return symmetric_; }
  Index rank() const { return U_.cols(); }

  /// U V^T (or U U^T).
  Mat product() const;
  /// ||U^T U - V^T V||_F; zero in the symmetric case.
  double balance_residual() const;
  /// Stacked W = [U; V] (just U when symmetric).
  Mat stacked() const;
  static FactorPair from_stacked(const Mat& W, Index n, bool symmetric);

 private:
  Mat U_;
  Mat V_;
  bool symmetric_ = false;
};

void require_finite(const Mat& M, std::string_view what);

inline double inner(const Mat& A, const Mat& B) {
  return A.cwiseProduct(B).sum();
}

/// Nearest (Frobenius) matrix of rank <= r. Singular triples are kept in
/// descending order of singular value as returned by the decomposition.
Mat truncated_svd_project(const Mat& M, Index r);

/// Nearest symmetric PSD matrix of rank <= r: keeps the r largest eigenvalues
/// and drops negative ones. Inputs are symmetrized as (S + S^T)/2; asymmetry
/// above 1e-12 relative is rejected.
Mat psd_truncated_project(const Mat& S, Index r);

/// U = U_s Sigma^{1/2}, V = V_s Sigma^{1/2}, so U V^T = M and U^T U = V^T V.
/// Column signs are normalized so that each column of U has its largest
/// magnitude entry positive. Throws RankError if sigma_{r+1} > 1e-10 sigma_1;
/// columns for singular values below that threshold are zero.
FactorPair balanced_factorize(const Mat& M, Index r);

/// Symmetric PSD counterpart: U = Q Lambda^{1/2} with U U^T = M.
Mat psd_factorize(const Mat& M, Index r);

/// r-th largest singular value (1-based).
double sigma_r(const Mat& M, Index r);

/// Smallest eigenvalue of (S + S^T)/2. Dense for dimension <= 2000, Lanczos
/// otherwise.
double lambda_min_sym(const Mat& S);

/// Extreme-eigenvalue estimate for an implicit symmetric operator. Restarted
/// Lanczos with full reorthogonalization; stops when the Ritz residual drops
/// below tol * max(1, |theta|).
struct LanczosResult {
  double value = 0.0;
  Vec vector;
  double residual = 0.0;
  int iterations = 0;
  bool converged = false;
};
using LinearOperator = std::function<Vec(const Vec&)>;
LanczosResult lanczos_lambda_min(Index dim, const LinearOperator& apply,
                                 double tol = 1e-8, int max_restarts = 50,
                                 int krylov_dim = 120);

/// Orthogonal R minimizing ||W - Wstar R||_F (from the SVD of Wstar^T W).
Mat procrustes_rotation(const Mat& W, const Mat& Wstar);
/// min over orthogonal R of ||W - Wstar R||_F.
double procrustes_distance(const Mat& W, const Mat& Wstar);

}  // namespace lrll
