#include <cmath>
#include <random>
#include <vector>

#include <gtest/gtest.h>

#include "sfclass/pump_opt.hpp"

using namespace sfclass;

namespace {

OptimizationSpec default_spec(double theta) {
  OptimizationSpec s;
  s.theta_x = theta;
  return s;
}

}  // namespace

TEST(OverlapVector, MatchesDirectOverlaps) {
  const auto spec = default_spec(5.0);
  const auto kappa = overlap_vector(spec);
  const auto basis = spec.basis();
  ASSERT_EQ(kappa.size(), 20u);
  const auto& g = spec.geometry;
  const double ref = reference_amplitude(g.sigma_p, g.sigma_s, g.sigma_f);
  for (std::size_t j = 0; j < kappa.size(); ++j) {
    const auto v =
        overlap2d(hg_field(g.sigma_p, basis.indices()[j]), psf_field({g.sigma_s, 5.0, 0.0}), gaussian_field(g.sigma_f));
    EXPECT_NEAR(kappa[j], v.real() / ref, 1e-14);
  }
}

TEST(OverlapVector, OddMOverlapsVanish) {
  // The sources sit on the x axis, so odd-m modes integrate to zero in y.
  const auto spec = default_spec(3.0);
  const auto kappa = overlap_vector(spec);
  const auto basis = spec.basis();
  for (std::size_t j = 0; j < kappa.size(); ++j) {
    if (basis.indices()[j].m % 2) EXPECT_LT(std::abs(kappa[j]), 1e-15);
  }
}

TEST(Eigen, ObjectiveEqualsSquaredOverlapNorm) {
  // M is rank one, so its top eigenvalue is ||kappa||^2.
  for (double theta : {3.0, 5.0, 10.0}) {
    const auto spec = default_spec(theta);
    const auto kappa = overlap_vector(spec);
    double n2 = 0.0;
    for (double v : kappa) n2 += v * v;
    const auto r = optimize_eigen(spec);
    EXPECT_NEAR(r.objective, n2, 1e-14);
    EXPECT_NEAR(r.pump.norm(), 1.0, 1e-12);
    EXPECT_EQ(r.pump.coeffs().size(), 20u);
    EXPECT_TRUE(r.pump.optimized());
  }
}

TEST(Eigen, ObjectiveMatchesEtaRelOnPair) {
  const auto spec = default_spec(5.0);
  const auto r = optimize_eigen(spec);
  const CountModel m{spec.geometry.sigma_f};
  EXPECT_NEAR(eta_rel(r.pump, SignalState::symmetric_pair(20.5, 5.0), m), r.objective, 1e-14);
}

TEST(Eigen, BeatsRandomPumps) {
  const auto spec = default_spec(5.0);
  const auto kappa = overlap_vector(spec);
  const double best = optimize_eigen(spec).objective;
  std::mt19937_64 gen(17);
  std::normal_distribution<double> d;
  for (int trial = 0; trial < 200; ++trial) {
    std::vector<complex> c(20);
    for (auto& v : c) v = {d(gen), d(gen)};
    EXPECT_LE(detail::ideal_objective(kappa, c), best * (1 + 1e-12));
  }
}

TEST(Eigen, PhaseCanonicalized) {
  const auto r = optimize_eigen(default_spec(10.0));
  for (const auto& v : r.pump.coeffs()) {
    if (std::abs(v) > 1e-12) {
      EXPECT_GT(v.real(), 0.0);
      EXPECT_NEAR(v.imag(), 0.0, 1e-15);
      break;
    }
  }
}

TEST(Eigen, ObjectiveIncreasesWithSeparation) {
  double prev = 0.0;
  for (double theta : {1.0, 3.0, 5.0, 10.0, 15.0}) {
    const double obj = optimize_eigen(default_spec(theta)).objective;
    EXPECT_GT(obj, prev);
    prev = obj;
  }
}

TEST(Eigen, ZeroSeparationIsDegenerate) {
  EXPECT_THROW(optimize_eigen(default_spec(0.0)), DegenerateInput);
}

TEST(Spec, RejectsEvenL) {
  auto s = default_spec(5.0);
  s.l_list = {1, 2};
  EXPECT_THROW(optimize_eigen(s), InvalidArgument);
  s = default_spec(-1.0);
  EXPECT_THROW(optimize_eigen(s), InvalidArgument);
}

TEST(Feedback, NoiselessReachesEigenObjective) {
  auto spec = default_spec(5.0);
  spec.method = OptimizerMethod::feedback;
  spec.feedback.shots.reset();
  spec.feedback.iterations = 2000;
  const auto eig = optimize_eigen(spec).objective;
  const auto fb = optimize(spec);
  EXPECT_GE(fb.objective, 0.999 * eig);
  EXPECT_LE(fb.objective, eig * (1 + 1e-12));
}

TEST(Feedback, DeterministicForSeed) {
  auto spec = default_spec(3.0);
  spec.feedback.iterations = 100;
  spec.feedback.seed = 42;
  const auto a = optimize_feedback(spec, {});
  const auto b = optimize_feedback(spec, {});
  EXPECT_EQ(a.objective, b.objective);
  EXPECT_EQ(a.trace, b.trace);
  spec.feedback.seed = 43;
  EXPECT_NE(optimize_feedback(spec, {}).trace, a.trace);
}

TEST(Feedback, TraceLengthMatchesIterations) {
  auto spec = default_spec(10.0);
  spec.feedback.iterations = 37;
  spec.feedback.tolerance = 0.0;
  const auto r = optimize_feedback(spec, {});
  EXPECT_EQ(r.iterations, 37);
  EXPECT_EQ(r.trace.size(), 37u);
  EXPECT_FALSE(r.converged);
}

TEST(Feedback, UnitNormRealCoefficients) {
  auto spec = default_spec(5.0);
  spec.feedback.iterations = 50;
  const auto r = optimize_feedback(spec, {});
  EXPECT_NEAR(r.pump.norm(), 1.0, 1e-12);
  for (const auto& v : r.pump.coeffs()) EXPECT_EQ(v.imag(), 0.0);
}

TEST(Feedback, ZeroIterationsReturnsStartingPump) {
  auto spec = default_spec(5.0);
  spec.feedback.iterations = 0;
  const auto r = optimize_feedback(spec, {});
  for (const auto& v : r.pump.coeffs()) EXPECT_NEAR(v.real(), 1.0 / std::sqrt(20.0), 1e-15);
}

TEST(Feedback, ZeroSeparationIsDegenerate) {
  auto spec = default_spec(0.0);
  EXPECT_THROW(optimize_feedback(spec, {}), DegenerateInput);
}
