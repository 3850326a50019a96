#pragma once

#include <cstdint>
#include <memory>
#include <optional>
#include <vector>

#include "lrll/linalg.hpp"
#include "lrll/rng.hpp"

namespace lrll {

/// A twice differentiable f : R^{n x m} -> R with Hessian access.
///
/// hess_apply(M, K) returns the matrix H such that <H, L> = [grad^2 f(M)](K, L)
/// for every L. The bilinear and quadratic forms are derived from it unless an
/// implementation overrides them.
class Objective {
 public:
  virtual ~Objective() = default;

  virtual Index rows() const = 0;
  virtual Index cols() const = 0;
  /// True when f is defined on symmetric matrices and its gradient is
  /// symmetric at symmetric points.
  virtual bool symmetric() const { return false; }

  virtual double value(const Mat& M) const = 0;
  virtual Mat gradient(const Mat& M) const = 0;
  virtual Mat hess_apply(const Mat& M, const Mat& K) const = 0;
  virtual double hess_bform(const Mat& M, const Mat& K, const Mat& L) const;
  double hess_qform(const Mat& M, const Mat& K) const {
    return hess_bform(M, K, K);
  }

  /// Known global lower bound of f (0 for noiseless sensing and the tensor
  /// objectives). nullopt when unknown.
  virtual std::optional<double> lower_bound() const { return std::nullopt; }

  void check_shape(const Mat& M, const char* what) const;
};

using ObjectivePtr = std::shared_ptr<const Objective>;

/// Linear measurements A_i with observations b_i = <A_i, Mstar>.
struct SensingEnsemble {
  Index n = 0;
  Index m = 0;
  std::vector<Mat> A;
  Vec b;
  std::optional<Mat> Mstar;
  std::uint64_t seed = 0;
  double scale = 1.0;  // entries of A_i are scale * N(0, 1)

  Index measurements() const { return static_cast<Index>(A.size()); }
  /// Throws InputError when the invariants do not hold.
  void validate() const;
};

/// f(M) = 1/2 ||A(M) - b||^2. Measurement matrices are flattened into a
/// p x nm design matrix (column-major vec), so every evaluation is a fixed
/// sequence of dense products and bit-reproducible.
class LinearSensingObjective final : public Objective {
 public:
  explicit LinearSensingObjective(SensingEnsemble ensemble);

  Index rows() const override { return ensemble_.n; }
  Index cols() const override { return ensemble_.m; }
  double value(const Mat& M) const override;
  Mat gradient(const Mat& M) const override;
  Mat hess_apply(const Mat& M, const Mat& K) const override;
  double hess_bform(const Mat& M, const Mat& K, const Mat& L) const override;
  std::optional<double> lower_bound() const override;

  const SensingEnsemble& ensemble() const { return ensemble_; }
  /// A(M) as a length-p vector.
  Vec measure(const Mat& M) const;

 private:
  SensingEnsemble ensemble_;
  Mat design_;  // p x (n m)
};

/// Gaussian sensing: A_i entries i.i.d. N(0, 1/p), b = A(Mstar). Entries are
/// drawn from the Philox stream (seed, 0) in order i, row, column.
SensingEnsemble gaussian_sensing_ensemble(Index n, Index m, Index r, Index p,
                                          const Mat& Mstar,
                                          std::uint64_t seed);
std::shared_ptr<const LinearSensingObjective> linear_objective(
    SensingEnsemble ensemble);

/// Fourth-order tensor c0 * I + sum_t coeff_t * (L_t (x) R_t), acting
/// symmetrically: every term (c, L, R) is paired with (c, R, L) and halved.
struct OuterTerm {
  double coeff = 0.0;
  Mat L;
  Mat R;
};

class OuterTensor {
 public:
  OuterTensor() = default;
  OuterTensor(Index n, Index m, double identity_coeff);

  Index rows() const { return n_; }
  Index cols() const { return m_; }
  double identity_coeff() const { return c0_; }
  const std::vector<OuterTerm>& terms() const { return terms_; }

  void add_term(double coeff, Mat L, Mat R);

  /// H : K (a matrix).
  Mat apply(const Mat& K) const;
  /// K : H : L.
  double bform(const Mat& K, const Mat& L) const;
  double qform(const Mat& K) const;

 private:
  Index n_ = 0;
  Index m_ = 0;
  double c0_ = 0.0;
  std::vector<OuterTerm> terms_;
};

/// f(M) = 1/2 (M - Mstar) : H : (M - Mstar); the Hessian is H everywhere.
class TensorObjective final : public Objective {
 public:
  TensorObjective(OuterTensor H, Mat Mstar, bool symmetric = false);

  Index rows() const override { return H_.rows(); }
  Index cols() const override { return H_.cols(); }
  bool symmetric() const override { return symmetric_; }
  double value(const Mat& M) const override;
  Mat gradient(const Mat& M) const override;
  Mat hess_apply(const Mat& M, const Mat& K) const override;
  double hess_bform(const Mat& M, const Mat& K, const Mat& L) const override;
  std::optional<double> lower_bound() const override { return 0.0; }

  const OuterTensor& tensor() const { return H_; }
  const Mat& Mstar() const { return Mstar_; }

 private:
  OuterTensor H_;
  Mat Mstar_;
  bool symmetric_;
};

/// Empirical lower bound on the RIP constant: the largest
/// |[grad^2 f(M)](K, K)/||K||^2 - 1| over n_samples random rank-<=rank pairs
/// (M, K). Each K is refined by n_refine projected gradient steps on the
/// Rayleigh deviation, once upward and once downward. Sample i draws from the
/// child stream (seed, i), so the estimate is non-decreasing in n_samples.
struct RipOptions {
  int n_samples = 20;
  int n_refine = 100;
  double step = 0.5;
  std::uint64_t seed = 0;
};
double rip_estimate(const Objective& obj, Index rank, const RipOptions& opts);
inline double rip_estimate(const Objective& obj, Index rank, int n_samples,
                           int n_refine, std::uint64_t seed) {
  return rip_estimate(obj, rank, RipOptions{n_samples, n_refine, 0.5, seed});
}

/// Empirical lower bound on the BDP constant:
/// max |[grad^2 f(M) - grad^2 f(M')](K, L)| / (||K|| ||L||) over sampled
/// rank-<=rank quadruples.
double bdp_estimate(const Objective& obj, Index rank, int n_samples,
                    std::uint64_t seed);

/// Ground truth for sensing experiments: L R^T (or L L^T when psd) with
/// N(0, 1) factors drawn from the stream (seed, 1), scaled to unit norm.
Mat sensing_ground_truth(Index n, Index m, Index r, std::uint64_t seed,
                         bool psd = false);

/// Random matrix of rank <= rank with unit Frobenius norm.
Mat random_low_rank(RandomStream& rng, Index n, Index m, Index rank);

}  // namespace lrll
