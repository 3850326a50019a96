#include "lrll/counterexamples.hpp"

#include <cmath>
#include <string>

#include "lrll/errors.hpp"

namespace lrll {
namespace {

Mat unit(Index n, Index i, Index j) {
  Mat E = Mat::Zero(n, n);
  E(i, j) = 1.0;
  return E;
}

}  // namespace

std::shared_ptr<const TensorObjective> rank1_example(Index n, bool symmetric) {
  if (n < 2) throw InputError("rank1_example: n must be >= 2");
  const Mat E11 = unit(n, 0, 0), E22 = unit(n, 1, 1);
  const Mat E12 = unit(n, 0, 1), E21 = unit(n, 1, 0);
  OuterTensor H(n, n, 1.0);
  H.add_term(0.5, E11, E22);
  H.add_term(0.5, E22, E11);
  H.add_term(0.25, E12, E12);
  H.add_term(0.25, E21, E21);
  H.add_term(0.25, E12, E21);
  H.add_term(0.25, E21, E12);
  return std::make_shared<const TensorObjective>(H, E11, symmetric);
}

Mat rank1_spurious_factor(Index n) {
  if (n < 2) throw InputError("rank1_spurious_factor: n must be >= 2");
  Mat U = Mat::Zero(n, 1);
  U(1, 0) = 1.0 / std::sqrt(2.0);
  return U;
}

std::shared_ptr<const TensorObjective> rankr_linear_example(Index r, Index n,
                                                            bool symmetric) {
  if (r < 1) throw InputError("rankr_linear_example: r must be >= 1");
  if (n == 0) n = 2 * r;
  if (n < 2 * r) throw InputError("rankr_linear_example: n must be >= 2r");
  OuterTensor H(n, n, 1.5);
  Mat Mstar = Mat::Zero(n, n);
  for (Index i = 0; i < r; ++i) {
    const Index a = 2 * i, b = 2 * i + 1;
    const Mat Eaa = unit(n, a, a), Ebb = unit(n, b, b);
    const Mat Eab = unit(n, a, b), Eba = unit(n, b, a);
    H.add_term(-0.5, Eaa, Eaa);
    H.add_term(-0.5, Ebb, Ebb);
    H.add_term(0.5, Eaa, Ebb);
    H.add_term(0.5, Ebb, Eaa);
    H.add_term(-0.25, Eab, Eab);
    H.add_term(-0.25, Eba, Eba);
    H.add_term(0.25, Eab, Eba);
    H.add_term(0.25, Eba, Eab);
    Mstar(a, a) = 1.0;
  }
  return std::make_shared<const TensorObjective>(H, Mstar, symmetric);
}

Mat rankr_spurious_factor(Index r, Index n) {
  if (r < 1) throw InputError("rankr_spurious_factor: r must be >= 1");
  if (n == 0) n = 2 * r;
  if (n < 2 * r) throw InputError("rankr_spurious_factor: n must be >= 2r");
  Mat U = Mat::Zero(n, r);
  for (Index i = 0; i < r; ++i) U(2 * i + 1, i) = 1.0 / std::sqrt(2.0);
  return U;
}

SpuriousWitness theorem_witness_example(Index r) {
  if (r < 1) throw InputError("theorem_witness_example: r must be >= 1");
  SpuriousWitness W;
  W.delta = 0.5;
  W.alpha = 0.6;
  W.sigma = Vec::Constant(r, 0.5);
  W.lambda = Vec::Constant(r, 0.75);
  W.A = Mat::Zero(r, r);
  W.B = Mat::Zero(r, r);
  W.C = Mat::Identity(r, r);
  W.D = Mat::Identity(r, r);
  return W;
}

std::shared_ptr<const TensorObjective> dialed_delta_family(
    const TensorObjective& base, double theta) {
  if (!(theta >= 0.0 && theta <= 1.0)) {
    throw DomainError("dialed_delta_family: theta must lie in [0, 1]");
  }
  const OuterTensor& Hb = base.tensor();
  OuterTensor H(Hb.rows(), Hb.cols(),
                1.0 + theta * (Hb.identity_coeff() - 1.0));
  for (const OuterTerm& t : Hb.terms()) H.add_term(theta * t.coeff, t.L, t.R);
  return std::make_shared<const TensorObjective>(H, base.Mstar(),
                                                 base.symmetric());
}

}  // namespace lrll
