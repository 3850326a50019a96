#pragma once

#include <memory>

#include "lrll/certify.hpp"
#include "lrll/linalg.hpp"
#include "lrll/objective.hpp"

namespace lrll {

/// n x n quadratic with c0 = 1 and the six rank-one corrections
///   1/2 E11 (x) E22, 1/2 E22 (x) E11, 1/4 E12 (x) E12, 1/4 E21 (x) E21,
///   1/4 E12 (x) E21, 1/4 E21 (x) E12,
/// and M* = e1 e1^T. Its RIP_{2,2} constant is 1/2.
std::shared_ptr<const TensorObjective> rank1_example(Index n,
                                                     bool symmetric = false);
/// The spurious point e2 / sqrt(2) as an n x 1 factor.
Mat rank1_spurious_factor(Index n);

/// c0 = 3/2 with eight corrections per 2x2 diagonal block (a, b) = (2i-1, 2i)
/// and M* = sum_i e_a e_a^T.
std::shared_ptr<const TensorObjective> rankr_linear_example(
    Index r, Index n = 0, bool symmetric = false);
/// (1/sqrt 2) [e2, e4, ..., e2r] as an n x r factor.
Mat rankr_spurious_factor(Index r, Index n = 0);

/// delta = 1/2, alpha = 3/5, Sigma = I/2, Lambda = 3I/4, A = B = 0, C = D = I.
SpuriousWitness theorem_witness_example(Index r);

/// H(theta) = I + theta (H_base - I): c0 -> 1 + theta (c0 - 1) and every
/// correction scaled by theta. Ground truth and symmetry flag are kept.
std::shared_ptr<const TensorObjective> dialed_delta_family(
    const TensorObjective& base, double theta);

}  // namespace lrll
