#pragma once

#include <memory>

#include "lrll/linalg.hpp"
#include "lrll/objective.hpp"

namespace lrll {

/// Common surface of the factorized landscapes h_s(U) = f(U U^T) and
/// rho(U, V) = f(U V^T) + (mu/4) ||U^T U - V^T V||_F^2. Gradients and Hessian
/// products are returned as FactorPairs of the same shape as the point.
class FactoredProblem {
 public:
  virtual ~FactoredProblem() = default;

  virtual bool symmetric() const = 0;
  virtual const Objective& objective() const = 0;
  virtual double value(const FactorPair& F) const = 0;
  virtual FactorPair gradient(const FactorPair& F) const = 0;
  /// Hessian-vector product along the direction D.
  virtual FactorPair hess_apply(const FactorPair& F,
                                const FactorPair& D) const = 0;
  virtual double hess_qform(const FactorPair& F, const FactorPair& D) const = 0;

  /// Shape-compatible factor pair for this problem.
  void check_point(const FactorPair& F) const;
  /// Number of scalar variables: (n + m) r, or n r when symmetric.
  Index dimension(Index r) const;
};

/// rho(U, V) = f_a(U V^T) + (mu/4) g(U, V) with g = ||U^T U - V^T V||_F^2.
/// mu = 0 gives the unregularized h_a.
class RegularizedProblem final : public FactoredProblem {
 public:
  RegularizedProblem(ObjectivePtr obj, double mu);

  bool symmetric() const override { return false; }
  const Objective& objective() const override { return *obj_; }
  ObjectivePtr objective_ptr() const { return obj_; }
  double mu() const { return mu_; }

  double value(const FactorPair& F) const override;
  FactorPair gradient(const FactorPair& F) const override;
  FactorPair hess_apply(const FactorPair& F,
                        const FactorPair& D) const override;
  double hess_qform(const FactorPair& F, const FactorPair& D) const override;

 private:
  ObjectivePtr obj_;
  double mu_;
};

/// h_s(U) = f_s(U U^T). The gradient uses the symmetric part of grad f_s,
/// which is exact for any f_s since <G, dM> = <sym(G), dM> for symmetric dM.
class SymmetricProblem final : public FactoredProblem {
 public:
  explicit SymmetricProblem(ObjectivePtr obj);

  bool symmetric() const override { return true; }
  const Objective& objective() const override { return *obj_; }
  ObjectivePtr objective_ptr() const { return obj_; }

  double value(const FactorPair& F) const override;
  FactorPair gradient(const FactorPair& F) const override;
  FactorPair hess_apply(const FactorPair& F,
                        const FactorPair& D) const override;
  double hess_qform(const FactorPair& F, const FactorPair& D) const override;

 private:
  ObjectivePtr obj_;
};

// Free-function views of the two landscapes.
double rho_value(const RegularizedProblem& P, const FactorPair& F);
FactorPair rho_grad(const RegularizedProblem& P, const FactorPair& F);
/// Second directional derivative of rho along (dU, dV). At balanced points
/// this is 2<grad f, dU dV^T> + [grad^2 f](dM, dM) + (mu/2)||dD||^2 with
/// dM = U dV^T + dU V^T and dD = U^T dU + dU^T U - V^T dV - dV^T V; away from
/// balance the term mu <U^T U - V^T V, dU^T dU - dV^T dV> is added.
double rho_hess_qform(const RegularizedProblem& P, const FactorPair& F,
                      const Mat& dU, const Mat& dV);

double hs_value(const Objective& obj, const Mat& U);
Mat hs_grad(const Objective& obj, const Mat& U);
double hs_hess_qform(const Objective& obj, const Mat& U, const Mat& D);

/// Euclidean norm of a gradient pair (||[G_U; G_V]||_F, or ||G_U||_F).
double gradient_norm(const FactorPair& G);

/// Dense Hessian of the factorized problem in the coordinates
/// [vec(dU); vec(dV)] (column-major vec). Columns come from Hessian-vector
/// products on basis directions; the result is symmetrized.
inline constexpr Index kHessianAssemblyLimit = 4000;
Mat assemble_hessian(const FactoredProblem& P, const FactorPair& F);

/// Smallest Hessian eigenvalue: dense below the assembly limit, Lanczos on
/// Hessian-vector products above it.
double hessian_lambda_min(const FactoredProblem& P, const FactorPair& F);

/// Symmetric lift of an asymmetric objective on (n+m) x (n+m) matrices:
///   F(N) = 2/(1+delta) * [ f~(N) + (mu/2) g~(N) ],  mu = (1 - delta)/2,
///   f~(N) = f(N12) + f(N21^T),
///   g~(N) = ||N11||^2 + ||N22||^2 - ||N12||^2 - ||N21||^2.
/// With W = [U; V], f~(W W^T) = 2 h_a(U, V) and g~(W W^T) = g(U, V).
class SymmetricLift final : public Objective {
 public:
  SymmetricLift(ObjectivePtr base, double delta);

  Index rows() const override { return n_ + m_; }
  Index cols() const override { return n_ + m_; }
  bool symmetric() const override { return true; }
  double value(const Mat& N) const override;
  Mat gradient(const Mat& N) const override;
  Mat hess_apply(const Mat& N, const Mat& K) const override;
  std::optional<double> lower_bound() const override;

  double lifted_loss(const Mat& N) const;
  double lifted_balance(const Mat& N) const;
  double delta() const { return delta_; }
  double mu() const { return mu_; }
  double scale() const { return scale_; }

 private:
  ObjectivePtr base_;
  Index n_;
  Index m_;
  double delta_;
  double mu_;
  double scale_;
};

std::shared_ptr<const SymmetricLift> lift_to_symmetric(ObjectivePtr obj,
                                                       double delta);

/// Asymmetric reading of a symmetric objective: M -> f_s((M + M^T)/2).
class AsymmetricLift final : public Objective {
 public:
  explicit AsymmetricLift(ObjectivePtr base);

  Index rows() const override { return base_->rows(); }
  Index cols() const override { return base_->cols(); }
  double value(const Mat& M) const override;
  Mat gradient(const Mat& M) const override;
  Mat hess_apply(const Mat& M, const Mat& K) const override;
  std::optional<double> lower_bound() const override {
    return base_->lower_bound();
  }

 private:
  ObjectivePtr base_;
};

std::shared_ptr<const AsymmetricLift> lift_to_asymmetric(ObjectivePtr obj);

}  // namespace lrll
