#include <gtest/gtest.h>

#include <Eigen/Eigenvalues>
#include <Eigen/QR>
#include <Eigen/SVD>
#include <cmath>
#include <string>
#include <vector>

#include "invariants.hpp"
#include "lrll/solvers.hpp"

using namespace lrll;

using check::Family;

TEST(TechnicalIdentities, ThousandRandomTrials) {
  const check::IdentityCounts c = check::technical_identity_trials(1000, 0);
  EXPECT_EQ(c.trials, 1000);
  EXPECT_EQ(c.a, 0);
  EXPECT_EQ(c.b, 0);
  EXPECT_EQ(c.c, 0);
  EXPECT_EQ(c.d, 0);
}

TEST(FiniteDifferences, EveryObjectiveFamily) {
  for (const Family& fam : check::objective_families()) {
    RandomStream rng(21);
    for (int t = 0; t < 20; ++t) {
      Mat M = rng.normal_matrix(fam.obj->rows(), fam.obj->cols());
      Mat K = rng.normal_matrix(fam.obj->rows(), fam.obj->cols());
      if (fam.obj->symmetric()) {
        M = 0.5 * (M + M.transpose()).eval();
        K = 0.5 * (K + K.transpose()).eval();
      }
      const auto e = check::finite_difference_errors(*fam.obj, M, K);
      EXPECT_LE(e.gradient, 1e-6) << fam.name;
      EXPECT_LE(e.hessian, 1e-4) << fam.name;
    }
  }
}

TEST(FiniteDifferences, FactorizedProblems) {
  for (const Family& fam : check::objective_families()) {
    RandomStream rng(22);
    std::vector<std::unique_ptr<FactoredProblem>> problems;
    if (fam.obj->symmetric()) {
      problems.push_back(std::make_unique<SymmetricProblem>(fam.obj));
    }
    problems.push_back(std::make_unique<RegularizedProblem>(fam.obj, 0.3));
    for (const auto& P : problems) {
      for (int t = 0; t < 5; ++t) {
        const Index n = fam.obj->rows(), m = fam.obj->cols(), r = fam.rank;
        FactorPair F, D;
        if (P->symmetric()) {
          F = FactorPair::symmetric(rng.normal_matrix(n, r));
          D = FactorPair::symmetric(rng.normal_matrix(n, r));
        } else {
          F = FactorPair::asymmetric(rng.normal_matrix(n, r), rng.normal_matrix(m, r));
          D = FactorPair::asymmetric(rng.normal_matrix(n, r), rng.normal_matrix(m, r));
        }
        const auto e = check::finite_difference_errors(*P, F, D);
        EXPECT_LE(e.gradient, 1e-6) << fam.name;
        EXPECT_LE(e.hessian, 1e-4) << fam.name;
      }
    }
  }
}

TEST(ProjectionOptimality, NoRandomCompetitorIsCloser) {
  RandomStream rng(23);
  for (int t = 0; t < 200; ++t) {
    const Mat M = rng.normal_matrix(5, 4);
    const Mat P = truncated_svd_project(M, 2);
    const Vec s = Eigen::JacobiSVD<Mat>(M).singularValues();
    EXPECT_NEAR((M - P).norm(), s.tail(2).norm(), 1e-10);
    const Mat X = P + 0.1 * random_low_rank(rng, 5, 4, 2);
    EXPECT_LE((M - P).norm(), (M - truncated_svd_project(X, 2)).norm() + 1e-12);
    EXPECT_LE((M - P).norm(), (M - random_low_rank(rng, 5, 4, 2)).norm() + 1e-12);

    Mat S = rng.normal_matrix(5, 5);
    S = 0.5 * (S + S.transpose()).eval();
    const Mat Q = psd_truncated_project(S, 2);
    const Mat L = rng.normal_matrix(5, 2);
    EXPECT_LE((S - Q).norm(), (S - L * L.transpose()).norm() + 1e-12);
    const Mat Lq = psd_factorize(Q, 2);
    const Mat near = (Lq + 0.05 * rng.normal_matrix(5, 2));
    EXPECT_LE((S - Q).norm(), (S - near * near.transpose()).norm() + 1e-12);
  }
}

TEST(Procrustes, AlignedDistanceIsMinimal) {
  RandomStream rng(24);
  for (int t = 0; t < 100; ++t) {
    const Mat Ws = rng.normal_matrix(6, 3);
    const Mat W = rng.normal_matrix(6, 3);
    const double d = procrustes_distance(W, Ws);
    const Mat R = procrustes_rotation(W, Ws);
    EXPECT_LT((R.transpose() * R - Mat::Identity(3, 3)).norm(), 1e-12);
    EXPECT_NEAR(d, (W - Ws * R).norm(), 1e-12);
    Eigen::HouseholderQR<Mat> qr(rng.normal_matrix(3, 3));
    const Mat Q = qr.householderQ() * Mat::Identity(3, 3);
    EXPECT_LE(d, (W - Ws * Q).norm() + 1e-12);
    EXPECT_NEAR(procrustes_distance(Ws * Q, Ws), 0.0, 1e-12);
    EXPECT_NEAR(procrustes_distance(W * Q, Ws), d, 1e-10);
  }
}

TEST(BalanceAtCriticalPoints, ConvergedRegularizedRuns) {
  const Mat Ms = sensing_ground_truth(5, 4, 2, 3);
  const auto f = linear_objective(gaussian_sensing_ensemble(5, 4, 2, 600, Ms, 3));
  for (const double mu : {0.2, 0.5}) {
    const RegularizedProblem P(f, mu);
    for (std::uint64_t s = 0; s < 5; ++s) {
      RandomStream rng(s, 7);
      GdOptions opts;
      opts.step = 0.1;
      opts.tol = 1e-9;
      opts.max_iters = 100000;
      const SolverTrace tr = gd_factorized(
          P, FactorPair::asymmetric(rng.normal_matrix(5, 2), rng.normal_matrix(4, 2)), opts);
      ASSERT_EQ(tr.status, SolverStatus::Converged);
      const Mat W = tr.final_factors.stacked();
      EXPECT_LE(tr.final_factors.balance_residual(), 1e-6 * (W * W.transpose()).norm());
    }
  }
}
