#include <gtest/gtest.h>

#include <Eigen/QR>
#include <cmath>

#include "lrll/certify.hpp"
#include "lrll/counterexamples.hpp"
#include "lrll/errors.hpp"

using namespace lrll;

TEST(Criticality, Rank1SpuriousPointBothProblems) {
  for (Index n = 2; n <= 5; ++n) {
    const auto f = rank1_example(n);
    const Mat U = rank1_spurious_factor(n);
    for (const double mu : {0.0, 0.1, 0.5}) {
      const RegularizedProblem P(f, mu);
      const auto rep = criticality_report(P, FactorPair::asymmetric(U, U),
                                          f->Mstar(), 1e-10, 1e-10);
      EXPECT_EQ(rep.classification, Classification::SpuriousSospCandidate);
      EXPECT_LE(rep.residual_u, 1e-10);
      EXPECT_LE(rep.residual_v, 1e-10);
      EXPECT_GE(rep.hessian_lambda_min, -1e-10);
      EXPECT_NEAR(rep.gap, 0.375, 1e-12);
      EXPECT_NEAR(rep.correlation, 0.0, 1e-15);
    }
    const SymmetricProblem S(f);
    const auto rep = criticality_report(S, FactorPair::symmetric(U), f->Mstar(),
                                        1e-10, 1e-10);
    EXPECT_EQ(rep.classification, Classification::SpuriousSospCandidate);
    EXPECT_NEAR(rep.grad_spectral, 0.75, 1e-15);
  }
}

TEST(Criticality, ClosedFormHessianAtRank1Sosp) {
  const Index n = 4;
  const auto f = rank1_example(n);
  const RegularizedProblem P(f, 0.0);
  const Mat U = rank1_spurious_factor(n);
  const FactorPair F = FactorPair::asymmetric(U, U);
  RandomStream rng(3);
  for (int t = 0; t < 10; ++t) {
    const Mat dU = rng.normal_matrix(n, 1), dV = rng.normal_matrix(n, 1);
    double expected = 0.625 * std::pow(dU(0) - dV(0), 2) +
                      0.5 * std::pow(dU(1) + dV(1), 2);
    for (Index i = 2; i < n; ++i) expected += 0.5 * (dU(i) * dU(i) + dV(i) * dV(i));
    EXPECT_NEAR(rho_hess_qform(P, F, dU, dV), expected, 1e-12);
  }
  EXPECT_EQ(rho_hess_qform(P, F, Mat::Zero(n, 1), Mat::Zero(n, 1)), 0.0);
}

TEST(Criticality, GlobalFactorIsNearGlobal) {
  const auto f = rank1_example(3);
  const RegularizedProblem P(f, 0.5);
  const FactorPair F = balanced_factorize(f->Mstar(), 1);
  const auto rep = criticality_report(P, F, f->Mstar(), 1e-10, 1e-10);
  EXPECT_EQ(rep.classification, Classification::NearGlobal);
  EXPECT_EQ(rep.residual_u, 0.0);
  EXPECT_NEAR(rep.distance, 0.0, 1e-12);
  EXPECT_NEAR(rep.correlation, 1.0, 1e-15);
}

TEST(Criticality, RandomPointAndRotationInvariance) {
  const auto f = rankr_linear_example(2);
  const RegularizedProblem P(f, 0.3);
  RandomStream rng(4);
  const Mat U = rng.normal_matrix(4, 2), V = rng.normal_matrix(4, 2);
  const auto rep = criticality_report(P, FactorPair::asymmetric(U, V),
                                      f->Mstar(), 1e-8, 1e-8);
  EXPECT_NE(rep.classification, Classification::SpuriousSospCandidate);
  EXPECT_NE(rep.classification, Classification::NearGlobal);
  Eigen::HouseholderQR<Mat> qr(rng.normal_matrix(2, 2));
  const Mat R = qr.householderQ() * Mat::Identity(2, 2);
  const auto rot = criticality_report(P, FactorPair::asymmetric(U * R, V * R),
                                      f->Mstar(), 1e-8, 1e-8);
  EXPECT_EQ(rot.classification, rep.classification);
  EXPECT_NEAR(rot.hessian_lambda_min, rep.hessian_lambda_min, 1e-10);
  EXPECT_NEAR(rot.distance, rep.distance, 1e-10);
  EXPECT_NEAR(rot.grad_norm, rep.grad_norm, 1e-10);
}

TEST(FixedPoint, SymmetricRank1Example) {
  const auto f = rank1_example(2, true);
  const Mat U = rank1_spurious_factor(2);
  const Mat Mt = U * U.transpose();
  const auto yes = svp_fixed_point_check(*f, Mt, 1, 0.5, Manifold::Symmetric);
  EXPECT_TRUE(yes.fixed_point);
  EXPECT_NEAR(yes.spectral, 0.75, 1e-15);
  EXPECT_NEAR(yes.margin, 0.0, 1e-15);
  const auto no = svp_fixed_point_check(*f, Mt, 1, 0.05, Manifold::Symmetric);
  EXPECT_FALSE(no.fixed_point);
  EXPECT_LT(no.margin, 0.0);
  const auto asym = svp_fixed_point_check(*f, Mt, 1, 0.5, Manifold::Asymmetric);
  EXPECT_TRUE(asym.fixed_point);
  const auto global = svp_fixed_point_check(*f, f->Mstar(), 1, 0.1, Manifold::Asymmetric);
  EXPECT_TRUE(global.fixed_point);
  EXPECT_EQ(global.spectral, 0.0);
}

TEST(Witness, BuiltInExampleIsFeasibleAndTight) {
  for (Index r = 1; r <= 4; ++r) {
    const SpuriousWitness W = theorem_witness_example(r);
    const WitnessReport rep = witness_check(W);
    EXPECT_TRUE(rep.feasible) << rep.first_failure;
    EXPECT_TRUE(rep.cb_zero);
    EXPECT_TRUE(rep.ad_zero);
    EXPECT_TRUE(rep.sufficient);
    const double rd = static_cast<double>(r);
    EXPECT_NEAR(rep.inner_lambda_cd, 0.75 * rd, 1e-12);
    EXPECT_NEAR(rep.equality_rhs, 0.6 * (rd / 4 + rd), 1e-12);
    EXPECT_NEAR(rep.third_rhs, 9.0 / 16.0 * rd, 1e-12);
    EXPECT_NEAR(W.lambda.squaredNorm(), rep.third_rhs, 1e-12);
  }
}

TEST(Witness, SmallDeltaAlwaysInfeasible) {
  SpuriousWitness W = theorem_witness_example(2);
  for (int i = 0; i <= 20; ++i) {
    W.delta = (1.0 / 3.0) * i / 20.0;
    for (int j = 0; j <= 40; ++j) {
      W.alpha = 0.4 + 0.02 * j;
      const WitnessReport rep = witness_check(W);
      EXPECT_FALSE(rep.alpha_interval);
      EXPECT_FALSE(rep.feasible);
    }
  }
  W.delta = 1.0 / 3.0;
  W.alpha = 2.0 / 3.0;
  EXPECT_EQ(witness_check(W).first_failure, "alpha_interval");
}

TEST(Witness, ScaledLambdaBreaksThirdLine) {
  SpuriousWitness W = theorem_witness_example(2);
  W.lambda = Vec::Constant(2, 1.5);
  const WitnessReport rep = witness_check(W);
  EXPECT_FALSE(rep.feasible);
  bool third_failed = false;
  for (const auto& c : rep.conditions) {
    if (c.name == "third_line") third_failed = !c.passed;
  }
  EXPECT_TRUE(third_failed);
}

TEST(Witness, ShapeChecks) {
  SpuriousWitness W = theorem_witness_example(2);
  W.C = Mat::Identity(3, 2);
  EXPECT_THROW(witness_check(W), InputError);
  W = theorem_witness_example(2);
  W.n = 3;
  W.m = 3;
  EXPECT_THROW(witness_check(W), InputError);  // l = 3 but Lambda has 2 entries
  W.n = 8;
  W.m = 5;
  EXPECT_NO_THROW(witness_check(W));
}

TEST(Witness, SymmetricVariant) {
  SpuriousWitness W = theorem_witness_example(2);
  W.variant = WitnessVariant::Symmetric;
  W.B = Mat();
  W.D = Mat();
  const WitnessReport rep = witness_check(W);
  EXPECT_TRUE(rep.feasible) << rep.first_failure;
  EXPECT_TRUE(rep.sufficient);
  const auto c = witness_construct_objective(W, 4, 4);
  const SymmetricProblem P(c.objective);
  const auto cr = criticality_report(P, c.point, c.Mstar, 1e-10, 1e-9);
  EXPECT_EQ(cr.classification, Classification::SpuriousSospCandidate);
}

TEST(WitnessConstruction, Example4Objective) {
  const SpuriousWitness W = theorem_witness_example(2);
  const auto c = witness_construct_objective(W, 4, 4);
  EXPECT_GE(c.lambda1, 0.5 - 1e-12);
  EXPECT_LE(c.lambda1, 1.5 + 1e-12);
  EXPECT_GE(c.lambda2, 0.5 - 1e-12);
  EXPECT_LE(c.lambda2, 1.5 + 1e-12);
  const Mat grad = c.objective->gradient(c.Mtilde);
  EXPECT_LT((grad - c.G).norm(), 1e-12);
  EXPECT_LT((grad.transpose() * c.point.U()).norm(), 1e-10);
  EXPECT_LT((grad * c.point.V()).norm(), 1e-10);
  EXPECT_EQ(inner(c.Mtilde, c.Mstar), 0.0);
  EXPECT_GT(c.objective->value(c.Mtilde), c.objective->value(c.Mstar));
  for (const double mu : {0.0, 0.25}) {
    const RegularizedProblem P(c.objective, mu);
    const auto rep = criticality_report(P, c.point, c.Mstar, 1e-10, 1e-9);
    EXPECT_EQ(rep.classification, Classification::SpuriousSospCandidate);
  }
  EXPECT_LE(rip_estimate(*c.objective, 4, 20, 100, 0), 0.5 + 0.01);
  // Larger ambient space.
  const auto big = witness_construct_objective(W, 6, 5);
  const RegularizedProblem P(big.objective, 0.0);
  EXPECT_EQ(criticality_report(P, big.point, big.Mstar, 1e-10, 1e-9).classification,
            Classification::SpuriousSospCandidate);
}

TEST(WitnessConstruction, Refusals) {
  SpuriousWitness W = theorem_witness_example(2);
  EXPECT_THROW(witness_construct_objective(W, 3, 4), InputError);
  W.delta = 0.3;
  EXPECT_THROW(witness_construct_objective(W, 4, 4), DomainError);
  W = theorem_witness_example(1);
  W.A = Mat::Constant(1, 1, 0.1);
  W.D = Mat::Constant(1, 1, 1.0);  // A D^T != 0: sufficiency fails
  EXPECT_THROW(witness_construct_objective(W, 2, 2), DomainError);
}

TEST(CorrelationBound, Values) {
  // Frozen from an independent grid evaluation of the same formula.
  EXPECT_NEAR(correlation_bound(0.4), 0.18916696361961252, 1e-12);
  EXPECT_NEAR(correlation_bound(0.45), 0.09738571051823738, 1e-12);
  EXPECT_GT(correlation_bound(0.49), 0.0);
  for (int i = 1; i < 50; ++i) EXPECT_LE(correlation_bound(0.01 * i), 1.0 / 3.0);
  EXPECT_THROW(correlation_bound(0.0), DomainError);
  EXPECT_THROW(correlation_bound(0.5), DomainError);
}

TEST(CorrelationMeasure, Values) {
  RandomStream rng(5);
  const Mat M = rng.normal_matrix(3, 4);
  EXPECT_NEAR(correlation_measure(M, M), 1.0, 1e-15);
  EXPECT_NEAR(correlation_measure(-M, M), -1.0, 1e-15);
  const Mat Ut = rankr_spurious_factor(2);
  EXPECT_EQ(correlation_measure(Ut * Ut.transpose(), rankr_linear_example(2)->Mstar()), 0.0);
  EXPECT_THROW(correlation_measure(Mat::Zero(3, 4), M), DomainError);
}

TEST(Frontier, Staircase) {
  std::vector<ScanPoint> pts(3);
  pts[0] = {0, "x", 0.05, 0.0, 0.1};   // near the orbit
  pts[1] = {1, "x", 1.0, 0.5, -0.2};
  pts[2] = {2, "x", 2.0, 0.1, -0.4};
  const auto fr = scan_frontier(pts, {0.1});
  // beta <= 0.1 needs no curvature; beta in (0.1, 0.5] needs gamma <= 0.4;
  // beta = inf needs gamma <= 0.2.
  ASSERT_EQ(fr.size(), 3u);
  for (const auto& p : fr) EXPECT_EQ(count_violations(pts, p.alpha, p.beta, p.gamma), 0);
  EXPECT_EQ(count_violations(pts, 0.01, 1e-3, 1e-3), 1);
  const auto none = scan_frontier(pts, {5.0});
  ASSERT_EQ(none.size(), 1u);
  EXPECT_TRUE(std::isinf(none[0].beta));
}

TEST(StrictSaddleScan, IdentityObjectiveHasNoViolations) {
  RandomStream g(6);
  const Mat L = g.normal_matrix(4, 2);
  const Mat Ms = L * g.normal_matrix(2, 4);
  auto f = std::make_shared<const TensorObjective>(OuterTensor(4, 4, 1.0), Ms);
  const RegularizedProblem P(f, 0.5);
  const Mat Wstar = balanced_factorize(Ms, 2).stacked();
  ScanOptions opts;
  opts.alpha = 0.1 * sigma_r(Wstar, 2);
  opts.beta = 1e-3;
  opts.gamma = 1e-3;
  opts.n_points = 500;
  opts.gd.step = 0.05;
  opts.gd.max_iters = 3000;
  opts.threads = 4;
  const ScanReport rep = strict_saddle_scan(P, Ms, 2, opts);
  EXPECT_EQ(rep.points.size(), 500u);
  EXPECT_EQ(rep.violations, 0);
  EXPECT_TRUE(rep.obstructions.empty());
  // Same result single-threaded.
  opts.threads = 1;
  const ScanReport again = strict_saddle_scan(P, Ms, 2, opts);
  for (size_t i = 0; i < rep.points.size(); ++i) {
    EXPECT_EQ(rep.points[i].lambda_min, again.points[i].lambda_min);
  }
}

TEST(StrictSaddleScan, FlagsSpuriousSosp) {
  const auto f = rank1_example(2);
  const RegularizedProblem P(f, 0.5);
  const Mat U = rank1_spurious_factor(2);
  ScanOptions opts;
  opts.n_points = 100;
  opts.gd.step = 0.1;
  opts.gd.max_iters = 2000;
  opts.extra_points.push_back(FactorPair::asymmetric(U, U));
  const ScanReport rep = strict_saddle_scan(P, f->Mstar(), 1, opts);
  const int sosp = static_cast<int>(rep.points.size()) - 1;
  EXPECT_NE(std::find(rep.obstructions.begin(), rep.obstructions.end(), sosp),
            rep.obstructions.end());
  const double d = rep.points[static_cast<size_t>(sosp)].distance;
  EXPECT_GT(d, 0.5);
  EXPECT_GE(rep.obstruction_distance, d);
  EXPECT_GE(count_violations(rep.points, 0.9 * d, 1e-12, 1e-12), 1);
  for (const auto& p : rep.frontier) EXPECT_TRUE(p.alpha >= d || std::isinf(p.beta) == false);
}
