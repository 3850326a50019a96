#pragma once

#include <cstdint>
#include <memory>
#include <optional>
#include <string>
#include <vector>

#include "lrll/factorized.hpp"
#include "lrll/linalg.hpp"
#include "lrll/objective.hpp"
#include "lrll/solvers.hpp"

namespace lrll {

// ---------------------------------------------------------------------------
// Criticality

enum class Classification {
  NearGlobal,
  StrictSaddle,
  SpuriousSospCandidate,
  Unclassified
};
const char* to_string(Classification c);

struct CriticalityReport {
  bool symmetric = false;
  double f = 0.0;
  double f_star = 0.0;
  double gap = 0.0;                // f(M) - f(M*)
  double residual_u = 0.0;         // ||grad f(M)^T U||_F
  double residual_v = 0.0;         // ||grad f(M) V||_F
  double balance = 0.0;            // ||U^T U - V^T V||_F
  double grad_norm = 0.0;          // gradient norm of the factorized problem
  double sigma_r = 0.0;            // sigma_r(M)
  double grad_spectral = 0.0;      // ||grad f||_2, or -lambda_min(grad f) (sym)
  double hessian_lambda_min = 0.0; // factorized Hessian
  double distance = 0.0;           // Procrustes distance to the global orbit
  double correlation = 0.0;        // <M, M*> / (||M|| ||M*||)
  double tol_grad = 0.0;
  double tol_eig = 0.0;
  Classification classification = Classification::Unclassified;
};

/// First- and second-order diagnostics at F. The order of the classification
/// rules is: NearGlobal when f - f(M*) <= tol_grad; SpuriousSospCandidate when
/// the residuals and the factorized gradient are <= tol_grad and the Hessian
/// lambda_min >= -tol_eig; StrictSaddle when lambda_min < -tol_eig;
/// Unclassified otherwise. Distance and correlation are NaN when M* cannot be
/// factorized at rank r or is zero.
CriticalityReport criticality_report(const FactoredProblem& P,
                                     const FactorPair& F, const Mat& Mstar,
                                     double tol_grad, double tol_eig);

struct FixedPointReport {
  bool fixed_point = false;
  double residual_cols = 0.0;  // ||P_col(M) grad f||_F
  double residual_rows = 0.0;  // ||grad f P_row(M)||_F
  double spectral = 0.0;       // ||grad f||_2, or -lambda_min(grad f) (sym)
  double sigma_r = 0.0;        // sigma_r(Mtilde)
  double margin = 0.0;         // (1 + delta) sigma_r - spectral
};

/// Whether Mtilde is a fixed point of SVP with step 1/(1+delta): the gradient
/// must be orthogonal to the column and row spaces of Mtilde (residuals
/// <= 1e-8) and its spectral size at most (1 + delta) sigma_r(Mtilde) (margin
/// >= -1e-10). The symmetric mode uses the same sigma_r(Mtilde).
FixedPointReport svp_fixed_point_check(const Objective& obj, const Mat& Mtilde,
                                       Index r, double delta, Manifold mode);

// ---------------------------------------------------------------------------
// Witness conditions

enum class WitnessVariant { Asymmetric, Symmetric };

/// (delta, alpha, Sigma, Lambda, A, B, C, D). Sigma and Lambda are diagonal
/// and stored as vectors. In the symmetric variant B and D are ignored and
/// A, C are used in their place.
struct SpuriousWitness {
  double delta = 0.0;
  double alpha = 0.0;
  Vec sigma;   // r
  Vec lambda;  // l - r
  Mat A;       // r x r
  Mat B;       // r x r
  Mat C;       // (l - r) x r
  Mat D;       // (l - r) x r
  WitnessVariant variant = WitnessVariant::Asymmetric;
  std::optional<Index> n;  // ambient dimensions, checked against l
  std::optional<Index> m;

  Index rank() const { return sigma.size(); }
  const Mat& B_eff() const { return variant == WitnessVariant::Symmetric ? A : B; }
  const Mat& D_eff() const { return variant == WitnessVariant::Symmetric ? C : D; }
};

struct WitnessCondition {
  std::string name;
  bool passed = false;
  double lhs = 0.0;
  double rhs = 0.0;
  double slack = 0.0;  // positive when satisfied with room to spare
};

struct WitnessReport {
  bool alpha_interval = false;
  bool feasible = false;
  std::vector<WitnessCondition> conditions;
  /// Asymmetric: C B^T = 0 and A D^T = 0. Symmetric: A C^T = 0 (stored in
  /// both flags).
  bool cb_zero = false;
  bool ad_zero = false;
  bool sufficient = false;  // feasible and the flags hold
  double inner_lambda_cd = 0.0;  // <Lambda, C D^T>
  double equality_rhs = 0.0;     // alpha [tr(Sigma^2) - 2<Sigma, A B^T> + ...]
  double third_rhs = 0.0;        // alpha^-1 (2 alpha - 1 + delta^2) <Lambda, C D^T>
  std::string first_failure;     // empty when feasible
};

/// Evaluates the witness conditions. Shape inconsistencies throw InputError.
WitnessReport witness_check(const SpuriousWitness& W);

struct WitnessConstruction {
  std::shared_ptr<const TensorObjective> objective;
  Mat Mtilde;
  Mat Mstar;
  Mat G;        // gradient at Mtilde
  FactorPair point;  // balanced factors of Mtilde
  double lambda1 = 0.0;
  double lambda2 = 0.0;
  Mat G1;
  Mat G2;
};

/// Builds the quadratic objective whose Hessian is
/// (1+delta) I + sum_{i=1,2} (lambda_i - (1+delta)) G_i (x) G_i, with Mtilde,
/// Mstar and G embedded through standard basis columns. Requires a witness
/// that passes witness_check with the sufficiency flags and n, m >= 2r.
WitnessConstruction witness_construct_objective(const SpuriousWitness& W,
                                                Index n, Index m);

/// min{1/3, min over a 1024-point alpha grid of eta / sqrt(1 + eta^2)}.
double correlation_bound(double delta);

/// <Mtilde, Mstar> / (||Mtilde||_F ||Mstar||_F).
double correlation_measure(const Mat& Mtilde, const Mat& Mstar);

// ---------------------------------------------------------------------------
// Strict-saddle scan

struct ScanOptions {
  double alpha = 0.1;
  double beta = 1e-3;
  double gamma = 1e-3;
  int n_points = 500;        // total points, ball samples plus harvested
  double ball_radius = 0.0;  // 0 means 2 ||W*||_F
  int n_trajectories = 5;    // GD runs used for harvesting
  int harvest_fraction_pct = 40;  // share of points taken from GD traces
  GdOptions gd;
  std::uint64_t seed = 0;
  int threads = 1;
  double stationary_tol = 1e-6;  // gradient level for obstructions
  double curvature_tol = 1e-8;   // lambda_min >= -curvature_tol
  std::vector<FactorPair> extra_points;
};

struct ScanPoint {
  int index = 0;
  std::string source;  // "ball", "gd", "extra"
  double distance = 0.0;
  double grad_norm = 0.0;
  double lambda_min = 0.0;
  bool near = false;
  bool large_gradient = false;
  bool negative_curvature = false;
  bool violates() const { return !near && !large_gradient && !negative_curvature; }
};

struct FrontierPoint {
  double alpha = 0.0;
  double beta = 0.0;
  double gamma = 0.0;
};

struct ScanReport {
  std::vector<ScanPoint> points;
  int violations = 0;
  std::vector<FrontierPoint> frontier;
  /// Stationary points without negative curvature away from the orbit; any
  /// valid alpha must exceed their distance.
  std::vector<int> obstructions;
  double obstruction_distance = 0.0;
  double wstar_norm = 0.0;
};

ScanReport strict_saddle_scan(const FactoredProblem& P, const Mat& Mstar,
                              Index r, const ScanOptions& opts);

int count_violations(const std::vector<ScanPoint>& points, double alpha,
                     double beta, double gamma);

/// Non-dominated (alpha, beta, gamma) triples with zero violations over the
/// given points, for each alpha in alphas.
std::vector<FrontierPoint> scan_frontier(const std::vector<ScanPoint>& points,
                                         const std::vector<double>& alphas);

}  // namespace lrll
