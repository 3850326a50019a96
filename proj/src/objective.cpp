#include "lrll/objective.hpp"

#include <algorithm>
#include <cmath>
#include <string>

#include "lrll/errors.hpp"
#include "lrll/rng.hpp"

namespace lrll {
namespace {

Eigen::Map<const Vec> as_vec(const Mat& M) {
  return Eigen::Map<const Vec>(M.data(), M.size());
}

}  // namespace

double Objective::hess_bform(const Mat& M, const Mat& K, const Mat& L) const {
  return inner(hess_apply(M, K), L);
}

void Objective::check_shape(const Mat& M, const char* what) const {
  if (M.rows() != rows() || M.cols() != cols()) {
    throw InputError(std::string(what) + ": expected " +
                     std::to_string(rows()) + "x" + std::to_string(cols()) +
                     " matrix, got " + std::to_string(M.rows()) + "x" +
                     std::to_string(M.cols()));
  }
}

// ---------------------------------------------------------------------------
// Sensing

void SensingEnsemble::validate() const {
  if (n < 1 || m < 1) throw InputError("sensing: empty dimensions");
  if (A.empty()) throw InputError("sensing: no measurements");
  if (b.size() != measurements()) {
    throw InputError("sensing: observation count differs from measurements");
  }
  for (const Mat& Ai : A) {
    if (Ai.rows() != n || Ai.cols() != m) {
      throw InputError("sensing: measurement matrix has wrong shape");
    }
    require_finite(Ai, "sensing matrix");
  }
  if (!b.allFinite()) throw InputError("sensing: non-finite observation");
  if (Mstar) {
    if (Mstar->rows() != n || Mstar->cols() != m) {
      throw InputError("sensing: ground truth has wrong shape");
    }
    for (Index i = 0; i < measurements(); ++i) {
      const double predicted = inner(A[static_cast<size_t>(i)], *Mstar);
      if (std::abs(predicted - b(i)) > 1e-12 * std::max(1.0, std::abs(b(i)))) {
        throw InputError("sensing: observations inconsistent with ground truth");
      }
    }
  }
}

LinearSensingObjective::LinearSensingObjective(SensingEnsemble ensemble)
    : ensemble_(std::move(ensemble)) {
  ensemble_.validate();
  const Index p = ensemble_.measurements();
  design_.resize(p, ensemble_.n * ensemble_.m);
  for (Index i = 0; i < p; ++i) {
    design_.row(i) = as_vec(ensemble_.A[static_cast<size_t>(i)]).transpose();
  }
}

Vec LinearSensingObjective::measure(const Mat& M) const {
  check_shape(M, "sensing objective");
  return design_ * as_vec(M);
}

double LinearSensingObjective::value(const Mat& M) const {
  return 0.5 * (measure(M) - ensemble_.b).squaredNorm();
}

Mat LinearSensingObjective::gradient(const Mat& M) const {
  const Vec residual = measure(M) - ensemble_.b;
  const Vec g = design_.transpose() * residual;
  return Eigen::Map<const Mat>(g.data(), ensemble_.n, ensemble_.m);
}

Mat LinearSensingObjective::hess_apply(const Mat& M, const Mat& K) const {
  check_shape(M, "sensing objective");
  const Vec g = design_.transpose() * measure(K);
  return Eigen::Map<const Mat>(g.data(), ensemble_.n, ensemble_.m);
}

double LinearSensingObjective::hess_bform(const Mat& M, const Mat& K,
                                          const Mat& L) const {
  check_shape(M, "sensing objective");
  return measure(K).dot(measure(L));
}

std::optional<double> LinearSensingObjective::lower_bound() const {
  if (ensemble_.Mstar) return 0.0;
  return std::nullopt;
}

SensingEnsemble gaussian_sensing_ensemble(Index n, Index m, Index r, Index p,
                                          const Mat& Mstar,
                                          std::uint64_t seed) {
  if (p < 1) throw InputError("gaussian_sensing: p must be >= 1");
  if (Mstar.rows() != n || Mstar.cols() != m) {
    throw InputError("gaussian_sensing: ground truth has wrong shape");
  }
  require_finite(Mstar, "gaussian_sensing ground truth");
  if (r < std::min(n, m) && sigma_r(Mstar, r + 1) > 1e-10 * sigma_r(Mstar, 1)) {
    throw RankError("gaussian_sensing: ground truth rank exceeds r");
  }
  SensingEnsemble ens;
  ens.n = n;
  ens.m = m;
  ens.seed = seed;
  ens.scale = 1.0 / std::sqrt(static_cast<double>(p));
  ens.Mstar = Mstar;
  ens.A.reserve(static_cast<size_t>(p));
  ens.b.resize(p);
  RandomStream rng(seed, 0);
  for (Index i = 0; i < p; ++i) {
    Mat Ai = rng.normal_matrix(n, m) * ens.scale;
    ens.b(i) = inner(Ai, Mstar);
    ens.A.push_back(std::move(Ai));
  }
  return ens;
}

std::shared_ptr<const LinearSensingObjective> linear_objective(
    SensingEnsemble ensemble) {
  return std::make_shared<const LinearSensingObjective>(std::move(ensemble));
}

// ---------------------------------------------------------------------------
// Tensor objectives

OuterTensor::OuterTensor(Index n, Index m, double identity_coeff)
    : n_(n), m_(m), c0_(identity_coeff) {
  if (n < 1 || m < 1) throw InputError("OuterTensor: empty dimensions");
  if (!std::isfinite(identity_coeff)) {
    throw InputError("OuterTensor: non-finite identity coefficient");
  }
}

void OuterTensor::add_term(double coeff, Mat L, Mat R) {
  if (L.rows() != n_ || L.cols() != m_ || R.rows() != n_ || R.cols() != m_) {
    throw InputError("OuterTensor: term has wrong shape");
  }
  if (!std::isfinite(coeff)) throw InputError("OuterTensor: non-finite coeff");
  require_finite(L, "OuterTensor term");
  require_finite(R, "OuterTensor term");
  terms_.push_back({coeff, std::move(L), std::move(R)});
}

Mat OuterTensor::apply(const Mat& K) const {
  if (K.rows() != n_ || K.cols() != m_) {
    throw InputError("OuterTensor::apply: dimension mismatch");
  }
  Mat out = c0_ * K;
  for (const OuterTerm& t : terms_) {
    const double half = 0.5 * t.coeff;
    out += (half * inner(t.R, K)) * t.L;
    out += (half * inner(t.L, K)) * t.R;
  }
  return out;
}

double OuterTensor::bform(const Mat& K, const Mat& L) const {
  if (K.rows() != n_ || K.cols() != m_ || L.rows() != n_ || L.cols() != m_) {
    throw InputError("OuterTensor::bform: dimension mismatch");
  }
  double acc = c0_ * inner(K, L);
  for (const OuterTerm& t : terms_) {
    acc += 0.5 * t.coeff *
           (inner(t.L, K) * inner(t.R, L) + inner(t.R, K) * inner(t.L, L));
  }
  return acc;
}

double OuterTensor::qform(const Mat& K) const { return bform(K, K); }

TensorObjective::TensorObjective(OuterTensor H, Mat Mstar, bool symmetric)
    : H_(std::move(H)), Mstar_(std::move(Mstar)), symmetric_(symmetric) {
  if (Mstar_.rows() != H_.rows() || Mstar_.cols() != H_.cols()) {
    throw InputError("TensorObjective: ground truth does not match tensor");
  }
  require_finite(Mstar_, "TensorObjective ground truth");
  if (symmetric_ && H_.rows() != H_.cols()) {
    throw InputError("TensorObjective: symmetric objective must be square");
  }
}

double TensorObjective::value(const Mat& M) const {
  check_shape(M, "tensor objective");
  return 0.5 * H_.qform(M - Mstar_);
}

Mat TensorObjective::gradient(const Mat& M) const {
  check_shape(M, "tensor objective");
  return H_.apply(M - Mstar_);
}

Mat TensorObjective::hess_apply(const Mat& M, const Mat& K) const {
  check_shape(M, "tensor objective");
  return H_.apply(K);
}

double TensorObjective::hess_bform(const Mat& M, const Mat& K,
                                   const Mat& L) const {
  check_shape(M, "tensor objective");
  return H_.bform(K, L);
}

// ---------------------------------------------------------------------------
// Empirical constants

Mat sensing_ground_truth(Index n, Index m, Index r, std::uint64_t seed,
                         bool psd) {
  if (n < 1 || m < 1 || r < 1) throw InputError("ground truth: bad dimensions");
  if (psd && n != m) throw InputError("ground truth: psd needs n == m");
  RandomStream g(seed, 1);
  const Mat L = g.normal_matrix(n, r);
  Mat M = psd ? Mat(L * L.transpose()) : Mat(L * g.normal_matrix(r, m));
  return M / M.norm();
}

Mat random_low_rank(RandomStream& rng, Index n, Index m, Index rank) {
  const Index k = std::min({rank, n, m});
  Mat out = rng.normal_matrix(n, k) * rng.normal_matrix(k, m);
  const double norm = out.norm();
  return norm > 0.0 ? Mat(out / norm) : out;
}

namespace {

Mat random_base_point(const Objective& obj, RandomStream& rng, Index rank) {
  if (obj.symmetric()) {
    const Index k = std::min(rank, obj.rows());
    Mat U = rng.normal_matrix(obj.rows(), k);
    Mat M = U * U.transpose();
    return M / M.norm();
  }
  return random_low_rank(rng, obj.rows(), obj.cols(), rank);
}

double refine_deviation(const Objective& obj, const Mat& M, Mat K,
                        Index rank, int n_refine, double step, double sign) {
  K /= K.norm();
  double best = 0.0;
  for (int it = 0;; ++it) {
    const Mat HK = obj.hess_apply(M, K);
    // Rayleigh quotient with the same reduction in numerator and
    // denominator, so an exact isometry gives exactly zero deviation.
    const double q = inner(HK, K) / inner(K, K);
    best = std::max(best, std::abs(q - 1.0));
    if (it == n_refine) break;
    Mat next = truncated_svd_project(K + sign * step * (HK - q * K), rank);
    const double norm = next.norm();
    if (!(norm > 0.0)) break;
    K = next / norm;
  }
  return best;
}

}  // namespace

double rip_estimate(const Objective& obj, Index rank, const RipOptions& opts) {
  if (rank < 1) throw InputError("rip_estimate: rank must be >= 1");
  if (opts.n_samples < 0 || opts.n_refine < 0) {
    throw InputError("rip_estimate: negative sample or refinement count");
  }
  const RandomStream root(opts.seed, 0x726970ull);
  double best = 0.0;
  for (int i = 0; i < opts.n_samples; ++i) {
    RandomStream rng = root.split(static_cast<std::uint64_t>(i));
    const Mat M = random_base_point(obj, rng, rank);
    const Mat K = random_low_rank(rng, obj.rows(), obj.cols(), rank);
    for (const double sign : {1.0, -1.0}) {
      best = std::max(best, refine_deviation(obj, M, K, rank, opts.n_refine,
                                             opts.step, sign));
    }
  }
  return best;
}

double bdp_estimate(const Objective& obj, Index rank, int n_samples,
                    std::uint64_t seed) {
  if (rank < 1) throw InputError("bdp_estimate: rank must be >= 1");
  const RandomStream root(seed, 0x626470ull);
  double best = 0.0;
  for (int i = 0; i < n_samples; ++i) {
    RandomStream rng = root.split(static_cast<std::uint64_t>(i));
    const Mat M = random_base_point(obj, rng, rank);
    const Mat Mp = random_base_point(obj, rng, rank);
    const Mat K = random_low_rank(rng, obj.rows(), obj.cols(), rank);
    const Mat L = random_low_rank(rng, obj.rows(), obj.cols(), rank);
    const double diff = obj.hess_bform(M, K, L) - obj.hess_bform(Mp, K, L);
    best = std::max(best, std::abs(diff) / (K.norm() * L.norm()));
  }
  return best;
}

}  // namespace lrll
