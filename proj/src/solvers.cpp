#include "lrll/solvers.hpp"

#include <Eigen/Eigenvalues>
#include <Eigen/QR>
#include <Eigen/SVD>
#include <algorithm>
#include <chrono>
#include <cmath>
#include <limits>
#include <ostream>

#include "lrll/errors.hpp"
#include "lrll/format.hpp"
#include "lrll/rng.hpp"

namespace lrll {
namespace {

constexpr double kDivergenceLevel = 1e12;
constexpr double kManifoldTolerance = 1e-10;

using Clock = std::chrono::steady_clock;

double seconds_since(Clock::time_point start) {
  return std::chrono::duration<double>(Clock::now() - start).count();
}

bool diverged(double f) { return !std::isfinite(f) || f > kDivergenceLevel; }

double matrix_sigma_r(const Mat& M, Index r) {
  const Index k = std::min({r, M.rows(), M.cols()});
  if (k < 1) return 0.0;
  return Eigen::JacobiSVD<Mat>(M).singularValues()(k - 1);
}

void require_on_manifold(const Mat& M, Manifold manifold, Index r,
                         const Objective& obj) {
  obj.check_shape(M, "svp initial point");
  require_finite(M, "svp initial point");
  const double scale = std::max(1.0, M.norm());
  if (manifold == Manifold::Asymmetric) {
    const Vec s = Eigen::JacobiSVD<Mat>(M).singularValues();
    if (r < s.size() && s(r) > kManifoldTolerance * scale) {
      throw InputError("svp: initial point has rank above r");
    }
    return;
  }
  if (M.rows() != M.cols() || (M - M.transpose()).norm() > 1e-12 * scale) {
    throw InputError("svp: initial point is not symmetric");
  }
  const Vec ev = Eigen::SelfAdjointEigenSolver<Mat>(
                     0.5 * (M + M.transpose()), Eigen::EigenvaluesOnly)
                     .eigenvalues();
  const Index n = ev.size();
  if (ev(0) < -kManifoldTolerance * scale) {
    throw InputError("svp: initial point is not positive semidefinite");
  }
  if (r < n && ev(n - 1 - r) > kManifoldTolerance * scale) {
    throw InputError("svp: initial point has rank above r");
  }
}

FactorPair axpy(const FactorPair& F, double a, const FactorPair& G) {
  if (F.is_symmetric()) return FactorPair::symmetric(F.U() + a * G.U());
  return FactorPair::asymmetric(F.U() + a * G.U(), F.V() + a * G.V());
}

/// Uniform sample from the ball of the given radius in factor space.
FactorPair ball_sample(RandomStream& rng, const FactorPair& like,
                       double radius) {
  const Index nu = like.U().size();
  const Index nv = like.is_symmetric() ? 0 : like.V().size();
  const Index d = nu + nv;
  Vec z(d);
  for (Index i = 0; i < d; ++i) z(i) = rng.normal();
  const double scale =
      radius * std::pow(rng.uniform(), 1.0 / static_cast<double>(d)) / z.norm();
  z *= scale;
  Mat dU = Eigen::Map<const Mat>(z.data(), like.U().rows(), like.rank());
  if (like.is_symmetric()) return FactorPair::symmetric(std::move(dU));
  Mat dV = Eigen::Map<const Mat>(z.data() + nu, like.V().rows(), like.rank());
  return FactorPair::asymmetric(std::move(dU), std::move(dV));
}

bool below_lb_gap(const std::optional<double>& lb,
                  const std::optional<double>& level, double f) {
  return lb && level && f - *lb <= *level;
}

/// One descent step with step halving. Returns false when the step
/// underflows without finding a decrease.
struct StepResult {
  FactorPair x;
  double f;
  int halvings = 0;
  bool ok = true;
};

StepResult descent_step(const FactoredProblem& P, const FactorPair& x,
                        double f, const FactorPair& g, double& step) {
  StepResult out{x, f};
  const double slack = 1e-12 * std::max(1.0, std::abs(f));
  while (step > 1e-20) {
    FactorPair trial = axpy(x, -step, g);
    const double ft = P.value(trial);
    if (std::isfinite(ft) && ft <= f + slack) {
      out.x = std::move(trial);
      out.f = ft;
      return out;
    }
    step *= 0.5;
    ++out.halvings;
  }
  out.ok = false;
  return out;
}

}  // namespace

const char* to_string(SolverStatus s) {
  switch (s) {
    case SolverStatus::Converged: return "converged";
    case SolverStatus::MaxIters: return "max-iters";
    case SolverStatus::Diverged: return "diverged";
    case SolverStatus::Stuck: return "stuck";
  }
  return "unknown";
}

const char* to_string(Manifold m) {
  return m == Manifold::Symmetric ? "sym" : "asym";
}

double SolverTrace::final_value() const {
  return records.empty() ? std::numeric_limits<double>::quiet_NaN()
                         : records.back().f;
}

std::vector<double> SolverTrace::contraction_factors() const {
  std::vector<double> out;
  if (!f_lb) return out;
  for (size_t t = 0; t + 1 < records.size(); ++t) {
    const double gap = records[t].f - *f_lb;
    if (gap > 0.0) out.push_back((records[t + 1].f - *f_lb) / gap);
  }
  return out;
}

int SolverTrace::count_events(const std::string& event) const {
  return static_cast<int>(std::count_if(
      records.begin(), records.end(),
      [&](const TraceRecord& r) { return r.event == event; }));
}

void SolverTrace::write_csv(std::ostream& out) const {
  out << "iter,f,grad_norm,sigma_r,event\n";
  for (const TraceRecord& r : records) {
    out << r.iter << ',' << format_double(r.f) << ','
        << format_double(r.grad_norm) << ',' << format_double(r.sigma_r) << ','
        << r.event << '\n';
  }
}

// ---------------------------------------------------------------------------
// SVP

SolverTrace svp(const Objective& obj, Manifold manifold, Index r,
                const Mat& M0, const SvpOptions& opts) {
  if (r < 1) throw InputError("svp: r must be >= 1");
  if (!(opts.eta > 0.0) || !std::isfinite(opts.eta)) {
    throw InputError("svp: step size must be positive");
  }
  if (opts.max_iters < 0) throw InputError("svp: negative iteration budget");
  if (manifold == Manifold::Symmetric && obj.rows() != obj.cols()) {
    throw InputError("svp: symmetric mode needs a square objective");
  }
  require_on_manifold(M0, manifold, r, obj);

  const auto start = Clock::now();
  SolverTrace trace;
  trace.f_lb = obj.lower_bound();
  Mat M = M0;
  double f = obj.value(M);
  double prev_f = std::numeric_limits<double>::infinity();
  std::string event = "start";
  for (int t = 0;; ++t) {
    const Mat G = obj.gradient(M);
    trace.records.push_back(
        {t, f, G.norm(), matrix_sigma_r(M, r), seconds_since(start), event});
    if (diverged(f)) {
      trace.status = SolverStatus::Diverged;
      break;
    }
    const bool done = trace.f_lb ? f - *trace.f_lb <= opts.tol
                                 : prev_f - f <= opts.tol;
    if (done) {
      trace.status = SolverStatus::Converged;
      break;
    }
    if (t == opts.max_iters) {
      trace.status = SolverStatus::MaxIters;
      break;
    }
    const Mat step = M - opts.eta * G;
    Mat next = manifold == Manifold::Symmetric ? psd_truncated_project(
                                                     0.5 * (step + step.transpose()), r)
                                               : truncated_svd_project(step, r);
    event.clear();
    // The projection is set-valued when sigma_r = sigma_{r+1}; prefer the
    // current iterate whenever it is one of the nearest points.
    const double slack = 1e-12 * std::max(1.0, step.norm());
    if ((step - M).norm() <= (step - next).norm() + slack) {
      next = M;
      event = "fixed-point";
    }
    M = std::move(next);
    prev_f = f;
    f = obj.value(M);
    trace.iterations = t + 1;
  }
  trace.final_matrix = M;
  return trace;
}

long long svp_iteration_bound(double delta, double initial_gap, double eps) {
  if (!(delta > 0.0 && delta < 1.0 / 3.0)) {
    throw DomainError("svp_iteration_bound: delta must lie in (0, 1/3)");
  }
  if (!(initial_gap > 0.0) || !(eps > 0.0)) {
    throw DomainError("svp_iteration_bound: gap and eps must be positive");
  }
  if (initial_gap <= eps) return 0;
  const double rate = std::log((1.0 - delta) / (2.0 * delta));
  return static_cast<long long>(std::ceil(std::log(initial_gap / eps) / rate));
}

// ---------------------------------------------------------------------------
// Gradient descent

double factor_sigma_r(const FactorPair& F) {
  const Index r = F.rank();
  Eigen::HouseholderQR<Mat> qu(F.U());
  const Mat Ru = qu.matrixQR().topRows(std::min(r, F.U().rows()))
                     .triangularView<Eigen::Upper>();
  Mat Rv;
  if (F.is_symmetric()) {
    Rv = Ru;
  } else {
    Eigen::HouseholderQR<Mat> qv(F.V());
    Rv = qv.matrixQR().topRows(std::min(r, F.V().rows()))
             .triangularView<Eigen::Upper>();
  }
  return matrix_sigma_r(Ru * Rv.transpose(), r);
}

SolverTrace gd_factorized(const FactoredProblem& P, const FactorPair& F0,
                          const GdOptions& opts) {
  if (!(opts.step > 0.0)) throw InputError("gd: step must be positive");
  if (opts.max_iters < 0) throw InputError("gd: negative iteration budget");
  P.check_point(F0);
  const auto start = Clock::now();
  SolverTrace trace;
  trace.f_lb = P.objective().lower_bound();
  FactorPair x = F0;
  double f = P.value(x);
  double step = opts.step;
  std::string event = "start";
  for (int t = 0;; ++t) {
    const FactorPair g = P.gradient(x);
    const double gn = gradient_norm(g);
    trace.records.push_back(
        {t, f, gn, factor_sigma_r(x), seconds_since(start), event});
    event.clear();
    if (diverged(f) || !std::isfinite(gn)) {
      trace.status = SolverStatus::Diverged;
      break;
    }
    if (gn <= opts.tol || below_lb_gap(trace.f_lb, opts.f_stop, f)) {
      trace.status = SolverStatus::Converged;
      break;
    }
    if (t == opts.max_iters) {
      trace.status = SolverStatus::MaxIters;
      break;
    }
    if (opts.observer) opts.observer(t, x);
    StepResult res = descent_step(P, x, f, g, step);
    if (!res.ok) {
      trace.records.back().event = "step-underflow";
      trace.status = SolverStatus::Stuck;
      break;
    }
    if (res.halvings > 0) event = "step-halved";
    x = std::move(res.x);
    f = res.f;
    trace.iterations = t + 1;
  }
  trace.final_matrix = x.product();
  trace.final_factors = std::move(x);
  return trace;
}

SolverTrace perturbed_gd(const FactoredProblem& P, const FactorPair& F0,
                         const PgdOptions& opts) {
  if (!(opts.step > 0.0) || !(opts.radius > 0.0) || !(opts.g_thres > 0.0) ||
      opts.t_thres < 1 || !(opts.f_thres > 0.0) || opts.max_iters < 0) {
    throw InputError("pgd: parameters must be positive");
  }
  P.check_point(F0);
  const auto start = Clock::now();
  SolverTrace trace;
  trace.f_lb = P.objective().lower_bound();
  RandomStream rng(opts.seed, 0x706764ull);

  FactorPair x = F0;
  double f = P.value(x);
  double step = opts.step;
  int t_noise = -1;  // iteration of the last perturbation, -1 if none
  FactorPair x_noise;
  double f_noise = 0.0;
  std::string event = "start";
  bool polishing = false;

  auto finish_stuck_check = [&]() {
    const bool at_floor = !trace.f_lb || f - *trace.f_lb <= opts.f_thres;
    trace.status = at_floor ? SolverStatus::Converged : SolverStatus::Stuck;
  };

  for (int t = 0;; ++t) {
    const FactorPair g = P.gradient(x);
    const double gn = gradient_norm(g);
    trace.records.push_back(
        {t, f, gn, factor_sigma_r(x), seconds_since(start), event});
    event.clear();
    if (diverged(f) || !std::isfinite(gn)) {
      trace.status = SolverStatus::Diverged;
      break;
    }
    if (below_lb_gap(trace.f_lb, opts.f_stop, f)) {
      trace.status = SolverStatus::Converged;
      break;
    }
    if (polishing && gn <= opts.tol) {
      finish_stuck_check();
      break;
    }
    if (t == opts.max_iters) {
      trace.status = SolverStatus::MaxIters;
      if (polishing) finish_stuck_check();
      break;
    }
    if (!polishing && t_noise >= 0 && t - t_noise >= opts.t_thres) {
      if (f_noise - f < opts.f_thres) {
        // The perturbation did not lead anywhere lower: go back and settle.
        x = x_noise;
        f = f_noise;
        polishing = true;
        event = "escape-failed";
        trace.iterations = t + 1;
        continue;
      }
      t_noise = -1;
    }
    if (!polishing && t_noise < 0 && gn <= opts.g_thres) {
      if (gn <= opts.tol && trace.f_lb && f - *trace.f_lb <= opts.f_thres) {
        trace.status = SolverStatus::Converged;
        break;
      }
      x_noise = x;
      f_noise = f;
      t_noise = t;
      x = axpy(x, 1.0, ball_sample(rng, x, opts.radius));
      f = P.value(x);
      step = opts.step;
      event = "perturb";
      trace.iterations = t + 1;
      continue;
    }
    StepResult res = descent_step(P, x, f, g, step);
    if (!res.ok) {
      trace.records.back().event = "step-underflow";
      finish_stuck_check();
      break;
    }
    if (res.halvings > 0) event = "step-halved";
    x = std::move(res.x);
    f = res.f;
    trace.iterations = t + 1;
  }
  trace.final_matrix = x.product();
  trace.final_factors = std::move(x);
  return trace;
}

}  // namespace lrll
