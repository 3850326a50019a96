#pragma once

#include <cstdint>
#include <functional>
#include <iosfwd>
#include <optional>
#include <string>
#include <vector>

#include "lrll/factorized.hpp"
#include "lrll/linalg.hpp"
#include "lrll/objective.hpp"

namespace lrll {

enum class SolverStatus { Converged, MaxIters, Diverged, Stuck };
const char* to_string(SolverStatus s);

struct TraceRecord {
  int iter = 0;
  double f = 0.0;
  double grad_norm = 0.0;
  double sigma_r = 0.0;
  double wall_seconds = 0.0;  // not serialized; keeps CSV output reproducible
  std::string event;
};

/// Per-iteration history of one solver run. Records are written before each
/// update, so records[t] describes iterate t.
struct SolverTrace {
  std::vector<TraceRecord> records;
  SolverStatus status = SolverStatus::MaxIters;
  int iterations = 0;  // number of accepted updates
  std::optional<double> f_lb;
  Mat final_matrix;
  FactorPair final_factors;  // empty for SVP runs

  double final_value() const;
  /// [f(x_{t+1}) - f_lb] / [f(x_t) - f_lb] over consecutive records with a
  /// positive gap. Empty when f_lb is unknown.
  std::vector<double> contraction_factors() const;
  int count_events(const std::string& event) const;
  /// Columns iter,f,grad_norm,sigma_r,event with a header row.
  void write_csv(std::ostream& out) const;
};

enum class Manifold { Symmetric, Asymmetric };
const char* to_string(Manifold m);

struct SvpOptions {
  double eta = 1.0;
  int max_iters = 1000;
  double tol = 1e-8;
};

/// Projected gradient descent M <- P_r(M - eta grad f(M)) onto rank-<=r
/// matrices (Asymmetric) or rank-<=r PSD matrices (Symmetric). Stops when
/// f - f_lb <= tol, using the objective's lower bound; without one it stops
/// when a step decreases f by at most tol. When the current iterate is itself
/// a nearest point of M - eta grad f(M), it is kept.
SolverTrace svp(const Objective& obj, Manifold manifold, Index r,
                const Mat& M0, const SvpOptions& opts);

/// ceil( log(gap/eps) / log((1-delta)/(2 delta)) ), 0 when gap <= eps.
long long svp_iteration_bound(double delta, double initial_gap, double eps);

struct GdOptions {
  double step = 1e-2;
  int max_iters = 10000;
  double tol = 1e-8;  // gradient norm
  /// Optional early exit once f - f_lb <= f_stop (needs a known lower bound).
  std::optional<double> f_stop;
  /// Called with (iteration, iterate) before every update.
  std::function<void(int, const FactorPair&)> observer;
};

/// Gradient descent on a factorized problem. The step is halved (and the
/// event recorded) whenever a step would increase the objective.
SolverTrace gd_factorized(const FactoredProblem& P, const FactorPair& F0,
                          const GdOptions& opts);

struct PgdOptions {
  double step = 1e-2;
  double radius = 1e-3;
  double g_thres = 1e-4;
  int t_thres = 100;
  double f_thres = 1e-8;
  int max_iters = 20000;
  double tol = 1e-8;
  std::uint64_t seed = 0;
  std::optional<double> f_stop;
};

/// Perturbed gradient descent. When the gradient norm is at most g_thres and
/// no perturbation happened in the last t_thres steps, a point drawn
/// uniformly from the ball of the given radius (in factor space) is added.
/// If the objective has not dropped by f_thres below the pre-perturbation
/// value t_thres steps later, the run returns to that point, polishes it with
/// plain GD and stops: Stuck when f - f_lb > f_thres, Converged otherwise.
SolverTrace perturbed_gd(const FactoredProblem& P, const FactorPair& F0,
                         const PgdOptions& opts);

/// sigma_r of U V^T computed through thin QR factors.
double factor_sigma_r(const FactorPair& F);

}  // namespace lrll
