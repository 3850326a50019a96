#pragma once

// Property checkers shared by the unit tests and the acceptance binary.

#include <Eigen/SVD>
#include <algorithm>
#include <cmath>
#include <functional>
#include <string>
#include <vector>

#include "lrll/certify.hpp"
#include "lrll/counterexamples.hpp"
#include "lrll/factorized.hpp"
#include "lrll/linalg.hpp"
#include "lrll/objective.hpp"
#include "lrll/rng.hpp"

namespace lrll::check {

struct FdErrors {
  double gradient = 0.0;  // ||g - g_fd|| / max(1, ||g||)
  double hessian = 0.0;   // |q - q_fd| / max(1, |q|)
};

/// Central differences on a function of one matrix argument. The gradient
/// uses step 1e-5 (1 + ||X||) per entry; the curvature along K uses a
/// second difference with step 1e-4 (1 + ||X||) / ||K||.
inline FdErrors finite_difference_errors(
    const std::function<double(const Mat&)>& f,
    const std::function<Mat(const Mat&)>& grad,
    const std::function<double(const Mat&, const Mat&)>& qform, const Mat& X,
    const Mat& K) {
  FdErrors e;
  const Mat g = grad(X);
  const double h = 1e-5 * (1.0 + X.norm());
  Mat fd(X.rows(), X.cols());
  Mat Y = X;
  for (Index k = 0; k < X.size(); ++k) {
    Y.data()[k] = X.data()[k] + h;
    const double up = f(Y);
    Y.data()[k] = X.data()[k] - h;
    const double down = f(Y);
    Y.data()[k] = X.data()[k];
    fd.data()[k] = (up - down) / (2 * h);
  }
  e.gradient = (g - fd).norm() / std::max(1.0, g.norm());
  const double t = 1e-4 * (1.0 + X.norm()) / K.norm();
  const double q_fd = (f(X + t * K) - 2 * f(X) + f(X - t * K)) / (t * t);
  const double q = qform(X, K);
  e.hessian = std::abs(q - q_fd) / std::max(1.0, std::abs(q));
  return e;
}

inline FdErrors finite_difference_errors(const Objective& obj, const Mat& M,
                                         const Mat& K) {
  return finite_difference_errors(
      [&](const Mat& X) { return obj.value(X); },
      [&](const Mat& X) { return obj.gradient(X); },
      [&](const Mat& X, const Mat& D) { return obj.hess_qform(X, D); }, M, K);
}

/// Same check on a factorized problem, in the stacked coordinates [U; V].
inline FdErrors finite_difference_errors(const FactoredProblem& P,
                                         const FactorPair& F,
                                         const FactorPair& D) {
  const Index n = F.U().rows();
  const bool sym = F.is_symmetric();
  auto unstack = [&](const Mat& W) { return FactorPair::from_stacked(W, n, sym); };
  return finite_difference_errors(
      [&](const Mat& W) { return P.value(unstack(W)); },
      [&](const Mat& W) { return P.gradient(unstack(W)).stacked(); },
      [&](const Mat& W, const Mat& E) { return P.hess_qform(unstack(W), unstack(E)); },
      F.stacked(), D.stacked());
}

/// Violation counts for the technical identities relating matrix and factor
/// distances:
///   (a) 4||M - M*||^2 >= ||W W^T - W* W*^T||^2 - ||U^T U - V^T V||^2,
///   (b) ||W* W*^T||^2 = 4 ||M*||^2 for balanced W*,
///   (c) ||W W^T - W* W*^T||^2 >= 2(sqrt2 - 1) sigma_r(W*)^2 ||W - W*||^2,
///   (d) the same for U, U* in the symmetric case,
/// where W* (U*) is the Procrustes-aligned point of the solution orbit.
struct IdentityCounts {
  int trials = 0;
  int a = 0;
  int b = 0;
  int c = 0;
  int d = 0;
  int total() const { return a + b + c + d; }
};

inline IdentityCounts technical_identity_trials(int trials, std::uint64_t seed) {
  const double kappa = 2 * (std::sqrt(2.0) - 1);
  const RandomStream root(seed, 0x6c656d);
  IdentityCounts out;
  for (int t = 0; t < trials; ++t) {
    RandomStream rng = root.split(static_cast<std::uint64_t>(t));
    const Index n = 2 + static_cast<Index>(rng.uniform() * 5);
    const Index m = 2 + static_cast<Index>(rng.uniform() * 5);
    const Index r = 1 + static_cast<Index>(rng.uniform() * std::min<double>(3, std::min(n, m)));
    const Mat Mstar = rng.normal_matrix(n, r) * rng.normal_matrix(r, m);
    const FactorPair Fs = balanced_factorize(Mstar, r);
    const Mat Ws = Fs.stacked();
    // Mix far and near points.
    const double scale = std::pow(10.0, -3.0 + 4.0 * rng.uniform());
    const Mat W = (t % 2 == 0) ? Mat(rng.normal_matrix(n + m, r))
                               : Mat(Ws + scale * rng.normal_matrix(n + m, r));
    const FactorPair F = FactorPair::from_stacked(W, n, false);
    const Mat M = F.product();
    const double tol = 1e-9 * std::max(1.0, (W * W.transpose()).squaredNorm() +
                                                (Ws * Ws.transpose()).squaredNorm());
    const Mat Ws_al = Ws * procrustes_rotation(W, Ws);
    const double lhs_a = 4 * (M - Mstar).squaredNorm();
    const double rhs_a = (W * W.transpose() - Ws_al * Ws_al.transpose()).squaredNorm() -
                         std::pow(F.balance_residual(), 2);
    if (lhs_a < rhs_a - tol) ++out.a;
    const double lhs_b = (Ws * Ws.transpose()).squaredNorm();
    if (std::abs(lhs_b - 4 * Mstar.squaredNorm()) > 1e-12 * std::max(1.0, lhs_b)) ++out.b;
    const double sr = Eigen::JacobiSVD<Mat>(Ws).singularValues()(r - 1);
    const double lhs_c = (W * W.transpose() - Ws_al * Ws_al.transpose()).squaredNorm();
    if (lhs_c < kappa * sr * sr * (W - Ws_al).squaredNorm() - tol) ++out.c;
    // Symmetric counterpart on the U block with a PSD ground truth.
    const Mat Us = rng.normal_matrix(n, r);
    const Mat U = (t % 2 == 0) ? Mat(rng.normal_matrix(n, r))
                               : Mat(Us + scale * rng.normal_matrix(n, r));
    const Mat Us_al = Us * procrustes_rotation(U, Us);
    const double su = Eigen::JacobiSVD<Mat>(Us).singularValues()(r - 1);
    const double lhs_d = (U * U.transpose() - Us_al * Us_al.transpose()).squaredNorm();
    const double tol_d = 1e-9 * std::max(1.0, (U * U.transpose()).squaredNorm() +
                                                  (Us * Us.transpose()).squaredNorm());
    if (lhs_d < kappa * su * su * (U - Us_al).squaredNorm() - tol_d) ++out.d;
    ++out.trials;
  }
  return out;
}

struct Family {
  std::string name;
  ObjectivePtr obj;
  Index rank;
};

/// One small instance of every objective family, lifts included.
inline std::vector<Family> objective_families() {
  const Mat Ms = sensing_ground_truth(4, 3, 1, 2);
  const auto sensing = linear_objective(gaussian_sensing_ensemble(4, 3, 1, 60, Ms, 2));
  const WitnessConstruction w =
      witness_construct_objective(theorem_witness_example(2), 4, 5);
  return {
      {"sensing", sensing, 1},
      {"rank1", rank1_example(3), 1},
      {"rank1-sym", rank1_example(3, true), 1},
      {"rankr", rankr_linear_example(2), 2},
      {"dialed", dialed_delta_family(*rank1_example(2), 0.6), 1},
      {"witness", w.objective, 2},
      {"lift", lift_to_symmetric(sensing, 0.2), 1},
      {"asym-lift", lift_to_asymmetric(rank1_example(3, true)), 1},
  };
}

}  // namespace lrll::check
