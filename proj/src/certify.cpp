#include "lrll/certify.hpp"

#include <Eigen/Eigenvalues>
#include <Eigen/SVD>
#include <algorithm>
#include <atomic>
#include <cmath>
#include <exception>
#include <limits>
#include <thread>

#include "lrll/errors.hpp"
#include "lrll/rng.hpp"

namespace lrll {
namespace {

constexpr double kNaN = std::numeric_limits<double>::quiet_NaN();
constexpr double kInf = std::numeric_limits<double>::infinity();

Mat sym(const Mat& A) { return 0.5 * (A + A.transpose()); }

double spectral_norm(const Mat& A) {
  return Eigen::JacobiSVD<Mat>(A).singularValues()(0);
}

/// Stacked global factor: [U*; V*] (balanced) or U* (PSD).
Mat global_factor(const Mat& Mstar, Index r, bool symmetric) {
  if (symmetric) return psd_factorize(Mstar, r);
  return balanced_factorize(Mstar, r).stacked();
}

double safe_correlation(const Mat& A, const Mat& B) {
  const double na = A.norm(), nb = B.norm();
  if (!(na > 0.0) || !(nb > 0.0)) return kNaN;
  return inner(A, B) / (na * nb);
}

FactorPair ball_point(RandomStream& rng, Index n, Index m, Index r,
                      bool symmetric, double radius) {
  const Index d = symmetric ? n * r : (n + m) * r;
  Vec z(d);
  for (Index i = 0; i < d; ++i) z(i) = rng.normal();
  z *= radius * std::pow(rng.uniform(), 1.0 / static_cast<double>(d)) / z.norm();
  Mat U = Eigen::Map<const Mat>(z.data(), n, r);
  if (symmetric) return FactorPair::symmetric(std::move(U));
  Mat V = Eigen::Map<const Mat>(z.data() + n * r, m, r);
  return FactorPair::asymmetric(std::move(U), std::move(V));
}

}  // namespace

const char* to_string(Classification c) {
  switch (c) {
    case Classification::NearGlobal: return "near-global";
    case Classification::StrictSaddle: return "strict-saddle";
    case Classification::SpuriousSospCandidate: return "spurious-SOSP-candidate";
    case Classification::Unclassified: return "unclassified";
  }
  return "unknown";
}

// ---------------------------------------------------------------------------
// Criticality

CriticalityReport criticality_report(const FactoredProblem& P,
                                     const FactorPair& F, const Mat& Mstar,
                                     double tol_grad, double tol_eig) {
  P.check_point(F);
  const Objective& obj = P.objective();
  obj.check_shape(Mstar, "criticality_report ground truth");
  if (!(tol_grad >= 0.0) || !(tol_eig >= 0.0)) {
    throw InputError("criticality_report: tolerances must be non-negative");
  }
  CriticalityReport rep;
  rep.symmetric = P.symmetric();
  rep.tol_grad = tol_grad;
  rep.tol_eig = tol_eig;
  const Mat M = F.product();
  Mat G = obj.gradient(M);
  if (rep.symmetric) G = sym(G);
  rep.f = obj.value(M);
  rep.f_star = obj.value(Mstar);
  rep.gap = rep.f - rep.f_star;
  rep.residual_u = (G.transpose() * F.U()).norm();
  rep.residual_v = (G * F.V()).norm();
  rep.balance = F.balance_residual();
  rep.grad_norm = gradient_norm(P.gradient(F));
  rep.sigma_r = factor_sigma_r(F);
  rep.grad_spectral = rep.symmetric ? -lambda_min_sym(G) : spectral_norm(G);
  rep.hessian_lambda_min = hessian_lambda_min(P, F);
  try {
    const Mat Wstar = global_factor(Mstar, F.rank(), rep.symmetric);
    rep.distance = procrustes_distance(F.stacked(), Wstar);
  } catch (const InputError&) {
    rep.distance = kNaN;
  }
  rep.correlation = safe_correlation(M, Mstar);

  const bool critical = rep.residual_u <= tol_grad &&
                        rep.residual_v <= tol_grad && rep.grad_norm <= tol_grad;
  if (rep.gap <= tol_grad) {
    rep.classification = Classification::NearGlobal;
  } else if (critical && rep.hessian_lambda_min >= -tol_eig) {
    rep.classification = Classification::SpuriousSospCandidate;
  } else if (rep.hessian_lambda_min < -tol_eig) {
    rep.classification = Classification::StrictSaddle;
  } else {
    rep.classification = Classification::Unclassified;
  }
  return rep;
}

FixedPointReport svp_fixed_point_check(const Objective& obj, const Mat& Mtilde,
                                       Index r, double delta, Manifold mode) {
  obj.check_shape(Mtilde, "svp_fixed_point_check");
  require_finite(Mtilde, "svp_fixed_point_check");
  if (!(delta >= 0.0 && delta < 1.0)) {
    throw DomainError("svp_fixed_point_check: delta must lie in [0, 1)");
  }
  const Index kmax = std::min(Mtilde.rows(), Mtilde.cols());
  if (r < 1 || r > kmax) throw InputError("svp_fixed_point_check: bad rank");
  Eigen::JacobiSVD<Mat> svd(Mtilde, Eigen::ComputeThinU | Eigen::ComputeThinV);
  const Vec& s = svd.singularValues();
  if (r < kmax && s(r) > 1e-10 * std::max(s(0), 1e-300)) {
    throw RankError("svp_fixed_point_check: rank(Mtilde) exceeds r");
  }
  Index k = 0;
  while (k < r && s(k) > 1e-12 * std::max(1.0, s(0))) ++k;

  Mat G = obj.gradient(Mtilde);
  if (mode == Manifold::Symmetric) G = sym(G);
  FixedPointReport rep;
  rep.residual_cols = (svd.matrixU().leftCols(k).transpose() * G).norm();
  rep.residual_rows = (G * svd.matrixV().leftCols(k)).norm();
  rep.spectral =
      mode == Manifold::Symmetric ? -lambda_min_sym(G) : spectral_norm(G);
  rep.sigma_r = s(r - 1);
  rep.margin = (1.0 + delta) * rep.sigma_r - rep.spectral;
  rep.fixed_point = rep.residual_cols <= 1e-8 && rep.residual_rows <= 1e-8 &&
                    rep.margin >= -1e-10;
  return rep;
}

// ---------------------------------------------------------------------------
// Witness conditions

WitnessReport witness_check(const SpuriousWitness& W) {
  const Index r = W.rank();
  const Index k = W.lambda.size();
  const bool symmetric = W.variant == WitnessVariant::Symmetric;
  if (r < 1) throw InputError("witness: Sigma must be non-empty");
  auto need = [](const Mat& X, Index rows, Index cols, const char* name) {
    if (X.rows() != rows || X.cols() != cols) {
      throw InputError(std::string("witness: ") + name + " has wrong shape");
    }
  };
  need(W.A, r, r, "A");
  need(W.C, k, r, "C");
  if (!symmetric) {
    need(W.B, r, r, "B");
    need(W.D, k, r, "D");
  }
  if (!std::isfinite(W.delta) || !std::isfinite(W.alpha) ||
      !W.sigma.allFinite() || !W.lambda.allFinite() || !W.A.allFinite() ||
      !W.C.allFinite() || (!symmetric && (!W.B.allFinite() || !W.D.allFinite()))) {
    throw InputError("witness: non-finite entry");
  }
  if (!(W.delta >= 0.0 && W.delta < 1.0)) {
    throw DomainError("witness: delta must lie in [0, 1)");
  }
  if (W.n || W.m) {
    const Index n = W.n.value_or(W.m.value_or(0));
    const Index m = symmetric ? n : W.m.value_or(n);
    const Index ell = std::min({n, m, 2 * r});
    if (ell != r + k) {
      throw InputError("witness: Lambda size does not match min(n, m, 2r) - r");
    }
  }

  const Mat& B = W.B_eff();
  const Mat& D = W.D_eff();
  const double delta = W.delta, alpha = W.alpha;
  const Mat AB = W.A * B.transpose();
  const Mat AD = W.A * D.transpose();
  const Mat CB = W.C * B.transpose();
  const Mat CD = W.C * D.transpose();

  WitnessReport rep;
  auto add = [&rep](std::string name, bool ok, double lhs, double rhs,
                    double slack) {
    rep.conditions.push_back({std::move(name), ok, lhs, rhs, slack});
    if (!ok && rep.first_failure.empty()) rep.first_failure = rep.conditions.back().name;
  };

  const double lo = 1.0 - delta, hi = 0.5 * (1.0 + delta);
  rep.alpha_interval = alpha > lo && alpha <= hi;
  add("alpha_interval", rep.alpha_interval, alpha, hi,
      std::min(alpha - lo, hi - alpha));

  const double min_sigma = W.sigma.minCoeff();
  const double max_lambda = k > 0 ? W.lambda.maxCoeff() : 0.0;
  const double lhs1 = (1.0 + delta) * min_sigma;
  add("spectral_bound", lhs1 >= max_lambda - 1e-12 * std::max(1.0, std::abs(max_lambda)),
      lhs1, max_lambda, lhs1 - max_lambda);
  add("sigma_positive", min_sigma > 0.0, min_sigma, 0.0, min_sigma);
  if (!symmetric) {
    const double min_lambda = k > 0 ? W.lambda.minCoeff() : 0.0;
    add("lambda_nonnegative", min_lambda >= 0.0, min_lambda, 0.0, min_lambda);
  }

  double inner_lcd = 0.0;
  for (Index i = 0; i < k; ++i) inner_lcd += W.lambda(i) * CD(i, i);
  const double sigma_sq = W.sigma.squaredNorm();
  double sigma_ab = 0.0;
  for (Index i = 0; i < r; ++i) sigma_ab += W.sigma(i) * AB(i, i);
  const double bracket = sigma_sq - 2.0 * sigma_ab + AB.squaredNorm() +
                         AD.squaredNorm() + CB.squaredNorm() + CD.squaredNorm();
  rep.inner_lambda_cd = inner_lcd;
  rep.equality_rhs = alpha * bracket;
  add("equality", std::abs(inner_lcd - rep.equality_rhs) <= 1e-9, inner_lcd,
      rep.equality_rhs, -std::abs(inner_lcd - rep.equality_rhs));

  const double tr_lambda_sq = W.lambda.squaredNorm();
  rep.third_rhs = alpha > 0.0
                      ? (2.0 * alpha - 1.0 + delta * delta) / alpha * inner_lcd
                      : kNaN;
  add("third_line",
      tr_lambda_sq <= rep.third_rhs + 1e-12 * std::max(1.0, std::abs(rep.third_rhs)),
      tr_lambda_sq, rep.third_rhs, rep.third_rhs - tr_lambda_sq);
  add("nonzero_inner", std::abs(inner_lcd) > 1e-12, inner_lcd, 0.0,
      std::abs(inner_lcd));

  rep.feasible = std::all_of(rep.conditions.begin(), rep.conditions.end(),
                             [](const WitnessCondition& c) { return c.passed; });
  const double scale = std::max(1.0, std::max(W.A.norm(), W.C.norm()) *
                                         std::max(B.norm(), D.norm()));
  if (symmetric) {
    rep.cb_zero = rep.ad_zero = (W.A * W.C.transpose()).norm() <= 1e-12 * scale;
  } else {
    rep.cb_zero = CB.norm() <= 1e-12 * scale;
    rep.ad_zero = AD.norm() <= 1e-12 * scale;
  }
  rep.sufficient = rep.feasible && rep.cb_zero && rep.ad_zero;
  return rep;
}

WitnessConstruction witness_construct_objective(const SpuriousWitness& W,
                                                Index n, Index m) {
  const WitnessReport check = witness_check(W);
  if (!check.feasible) {
    throw DomainError("witness_construct_objective: witness is infeasible (" +
                      check.first_failure + ")");
  }
  if (!check.sufficient) {
    throw DomainError(
        "witness_construct_objective: sufficiency conditions do not hold");
  }
  const bool symmetric = W.variant == WitnessVariant::Symmetric;
  const Index r = W.rank();
  if (W.lambda.size() != r) {
    throw InputError("witness_construct_objective: needs Lambda of size r");
  }
  if (symmetric && n != m) {
    throw InputError("witness_construct_objective: symmetric needs n = m");
  }
  if (n < 2 * r || m < 2 * r) {
    throw InputError("witness_construct_objective: needs n, m >= 2r");
  }
  const double delta = W.delta, alpha = W.alpha;

  Mat left(2 * r, r), right(2 * r, r);
  left << W.A, W.C;
  right << W.B_eff(), W.D_eff();

  WitnessConstruction out;
  out.Mtilde = Mat::Zero(n, m);
  out.Mstar = Mat::Zero(n, m);
  out.G = Mat::Zero(n, m);
  out.Mtilde.topLeftCorner(r, r).diagonal() = W.sigma;
  out.Mstar.topLeftCorner(2 * r, 2 * r) = left * right.transpose();
  out.G.block(r, r, r, r).diagonal() = -W.lambda;

  const Mat D0 = out.Mtilde - out.Mstar;
  const Mat Gt = out.G - alpha * D0;
  const double nD = D0.norm();
  const double nG = Gt.norm();
  if (!(nG > 1e-12 * std::max(1.0, out.G.norm()))) {
    throw ConstructionError("witness_construct_objective: G~ vanishes");
  }
  // G_1 restricted to span{D0, G~} in the orthonormal basis {D0/|D0|, G~/|G~|}.
  Eigen::Matrix2d T;
  T << alpha, nG / nD, nG / nD, 2.0 - alpha;
  Eigen::SelfAdjointEigenSolver<Eigen::Matrix2d> eig(T);
  const Mat E1 = D0 / nD, E2 = Gt / nG;
  out.lambda1 = eig.eigenvalues()(0);
  out.lambda2 = eig.eigenvalues()(1);
  out.G1 = eig.eigenvectors()(0, 0) * E1 + eig.eigenvectors()(1, 0) * E2;
  out.G2 = eig.eigenvectors()(0, 1) * E1 + eig.eigenvectors()(1, 1) * E2;

  OuterTensor H(n, m, 1.0 + delta);
  H.add_term(out.lambda1 - (1.0 + delta), out.G1, out.G1);
  H.add_term(out.lambda2 - (1.0 + delta), out.G2, out.G2);
  out.objective = std::make_shared<const TensorObjective>(H, out.Mstar, symmetric);

  Mat Ubar = Mat::Zero(n, r);
  Ubar.topRows(r).diagonal() = W.sigma.cwiseSqrt();
  if (symmetric) {
    out.point = FactorPair::symmetric(Ubar);
  } else {
    Mat Vbar = Mat::Zero(m, r);
    Vbar.topRows(r).diagonal() = W.sigma.cwiseSqrt();
    out.point = FactorPair::asymmetric(Ubar, Vbar);
  }
  return out;
}

double correlation_bound(double delta) {
  if (!(delta > 0.0 && delta < 0.5)) {
    throw DomainError("correlation_bound: delta must lie in (0, 1/2)");
  }
  constexpr int kGrid = 1024;
  const double a = 1.0 - delta, b = 0.5 * (1.0 + delta);
  double best = kInf;
  for (int i = 0; i < kGrid; ++i) {
    const double alpha = a + (b - a) * static_cast<double>(i) / (kGrid - 1);
    const double c1 = std::max(
        0.0, (delta * delta - (1.0 - alpha) * (1.0 - alpha)) / (alpha * alpha));
    const double c2 = (1.0 + delta) * (1.0 + delta) / (alpha * alpha);
    const double eta = (1.0 + c1 - std::sqrt(c1 * c2)) / std::sqrt(c2);
    best = std::min(best, eta / std::sqrt(1.0 + eta * eta));
  }
  return std::min(1.0 / 3.0, best);
}

double correlation_measure(const Mat& Mtilde, const Mat& Mstar) {
  if (Mtilde.rows() != Mstar.rows() || Mtilde.cols() != Mstar.cols()) {
    throw InputError("correlation_measure: shape mismatch");
  }
  require_finite(Mtilde, "correlation_measure");
  require_finite(Mstar, "correlation_measure");
  const double na = Mtilde.norm(), nb = Mstar.norm();
  if (!(na > 0.0) || !(nb > 0.0)) {
    throw DomainError("correlation_measure: zero matrix");
  }
  return std::clamp(inner(Mtilde, Mstar) / (na * nb), -1.0, 1.0);
}

// ---------------------------------------------------------------------------
// Strict-saddle scan

int count_violations(const std::vector<ScanPoint>& points, double alpha,
                     double beta, double gamma) {
  int count = 0;
  for (const ScanPoint& p : points) {
    if (!(p.distance <= alpha || p.grad_norm >= beta || p.lambda_min <= -gamma)) {
      ++count;
    }
  }
  return count;
}

std::vector<FrontierPoint> scan_frontier(const std::vector<ScanPoint>& points,
                                         const std::vector<double>& alphas) {
  std::vector<FrontierPoint> out;
  for (const double alpha : alphas) {
    std::vector<const ScanPoint*> far;
    for (const ScanPoint& p : points) {
      if (p.distance > alpha) far.push_back(&p);
    }
    if (far.empty()) {
      out.push_back({alpha, kInf, kInf});
      continue;
    }
    std::sort(far.begin(), far.end(), [](const ScanPoint* a, const ScanPoint* b) {
      return a->grad_norm < b->grad_norm;
    });
    // beta = grad_norm of far[k]: far[0..k) must be covered by curvature.
    std::vector<FrontierPoint> stairs;
    double gamma = kInf;
    for (size_t k = 0; k <= far.size(); ++k) {
      const bool distinct = k == 0 || k == far.size() ||
                            far[k]->grad_norm > far[k - 1]->grad_norm;
      if (distinct) {
        const double beta = k < far.size() ? far[k]->grad_norm : kInf;
        if (beta > 0.0 && gamma > 0.0) stairs.push_back({alpha, beta, gamma});
      }
      if (k < far.size()) gamma = std::min(gamma, -far[k]->lambda_min);
      if (!(gamma > 0.0)) break;
    }
    for (size_t i = 0; i < stairs.size(); ++i) {
      bool dominated = false;
      for (size_t j = 0; j < stairs.size() && !dominated; ++j) {
        dominated = j != i && stairs[j].beta >= stairs[i].beta &&
                    stairs[j].gamma >= stairs[i].gamma &&
                    (stairs[j].beta > stairs[i].beta ||
                     stairs[j].gamma > stairs[i].gamma);
      }
      if (!dominated) out.push_back(stairs[i]);
    }
  }
  return out;
}

ScanReport strict_saddle_scan(const FactoredProblem& P, const Mat& Mstar,
                              Index r, const ScanOptions& opts) {
  if (!(opts.alpha > 0.0) || !(opts.beta > 0.0) || !(opts.gamma > 0.0)) {
    throw InputError("strict_saddle_scan: alpha, beta, gamma must be positive");
  }
  if (opts.n_points < 0 || r < 1) {
    throw InputError("strict_saddle_scan: bad point count or rank");
  }
  const Objective& obj = P.objective();
  obj.check_shape(Mstar, "strict_saddle_scan ground truth");
  const bool symmetric = P.symmetric();
  const Index n = obj.rows(), m = obj.cols();
  const Mat Wstar = global_factor(Mstar, r, symmetric);

  ScanReport rep;
  rep.wstar_norm = Wstar.norm();
  const double radius = opts.ball_radius > 0.0
                            ? opts.ball_radius
                            : 2.0 * std::max(rep.wstar_norm, 0.5);

  const RandomStream root(opts.seed, 0x7363616eull);
  const int n_harvest =
      opts.n_trajectories > 0
          ? opts.n_points * std::clamp(opts.harvest_fraction_pct, 0, 100) / 100
          : 0;
  const int n_ball = opts.n_points - n_harvest;

  std::vector<std::pair<std::string, FactorPair>> pts;
  pts.reserve(static_cast<size_t>(opts.n_points) + opts.extra_points.size());
  for (int i = 0; i < n_ball; ++i) {
    RandomStream rng = root.split(static_cast<std::uint64_t>(i));
    pts.emplace_back("ball", ball_point(rng, n, m, r, symmetric, radius));
  }
  for (int j = 0; j < opts.n_trajectories && n_harvest > 0; ++j) {
    const int quota = n_harvest / opts.n_trajectories +
                      (j < n_harvest % opts.n_trajectories ? 1 : 0);
    if (quota == 0) continue;
    RandomStream rng = root.split(1000000ull + static_cast<std::uint64_t>(j));
    const FactorPair start = ball_point(rng, n, m, r, symmetric, radius);
    std::vector<FactorPair> path;
    GdOptions gd = opts.gd;
    gd.observer = [&path](int, const FactorPair& x) { path.push_back(x); };
    SolverTrace tr = gd_factorized(P, start, gd);
    path.push_back(tr.final_factors);
    const size_t L = path.size();
    for (int q = 0; q < quota; ++q) {
      const size_t idx =
          quota == 1 ? L - 1
                     : static_cast<size_t>(static_cast<double>(q) * (L - 1) /
                                           (quota - 1));
      pts.emplace_back("gd", path[idx]);
    }
  }
  for (const FactorPair& x : opts.extra_points) pts.emplace_back("extra", x);

  rep.points.resize(pts.size());
  std::atomic<size_t> next{0};
  std::vector<std::exception_ptr> errors(pts.size());
  auto worker = [&]() {
    for (size_t i = next++; i < pts.size(); i = next++) {
      try {
      const FactorPair& x = pts[i].second;
      ScanPoint sp;
      sp.index = static_cast<int>(i);
      sp.source = pts[i].first;
      sp.distance = procrustes_distance(x.stacked(), Wstar);
      sp.grad_norm = gradient_norm(P.gradient(x));
      sp.lambda_min = hessian_lambda_min(P, x);
      sp.near = sp.distance <= opts.alpha;
      sp.large_gradient = sp.grad_norm >= opts.beta;
      sp.negative_curvature = sp.lambda_min <= -opts.gamma;
      rep.points[i] = std::move(sp);
      } catch (...) {
        errors[i] = std::current_exception();
      }
    }
  };
  const int threads = std::max(1, opts.threads);
  if (threads == 1) {
    worker();
  } else {
    std::vector<std::thread> pool;
    for (int t = 0; t < threads; ++t) pool.emplace_back(worker);
    for (auto& th : pool) th.join();
  }
  for (const auto& e : errors) {
    if (e) std::rethrow_exception(e);
  }

  rep.violations = count_violations(rep.points, opts.alpha, opts.beta, opts.gamma);
  const double far_level = 1e-6 * std::max(1.0, rep.wstar_norm);
  for (const ScanPoint& p : rep.points) {
    if (p.grad_norm <= opts.stationary_tol && p.lambda_min >= -opts.curvature_tol &&
        p.distance > far_level) {
      rep.obstructions.push_back(p.index);
      rep.obstruction_distance = std::max(rep.obstruction_distance, p.distance);
    }
  }
  std::vector<double> alphas = {opts.alpha};
  for (const double q : {0.01, 0.02, 0.05, 0.1, 0.2, 0.3, 0.5, 0.75, 1.0}) {
    alphas.push_back(q * std::max(rep.wstar_norm, 1e-12));
  }
  std::sort(alphas.begin(), alphas.end());
  alphas.erase(std::unique(alphas.begin(), alphas.end()), alphas.end());
  rep.frontier = scan_frontier(rep.points, alphas);
  return rep;
}

}  // namespace lrll
