#include <cmath>
#include <numbers>

#include <gtest/gtest.h>

#include "sfclass/baseline.hpp"

using namespace sfclass;

namespace {

// ∫ [I''(x)]^2 / I(x) dx by composite trapezoid on ±L; the integrand is
// written in the cancelled form I * (x^2/σ^4 - 1/σ^2)^2 to avoid 0/0 in the tails.
double curvature_trapezoid(double sigma, int n, double extent) {
  const double L = extent * sigma;
  const double h = 2 * L / (n - 1);
  auto f = [sigma](double x) {
    const double s2 = sigma * sigma;
    const double q = x * x / (s2 * s2) - 1.0 / s2;
    return intensity(sigma, x) * q * q;
  };
  double sum = 0.5 * (f(-L) + f(L));
  for (int i = 1; i < n - 1; ++i) sum += f(-L + h * i);
  return sum * h;
}

}  // namespace

TEST(Curvature, QuadratureMatchesClosedForm) {
  for (double sigma : {1.0, 2.5, 7.0, 20.0, 50.0}) {
    const double closed = 2.0 / std::pow(sigma, 4);
    EXPECT_NEAR(curvature_integral(sigma), closed, 1e-8 * closed) << sigma;
  }
}

TEST(Curvature, TrapezoidOracleAgrees) {
  for (double sigma : {1.0, 20.0}) {
    const double closed = 2.0 / std::pow(sigma, 4);
    EXPECT_NEAR(curvature_trapezoid(sigma, 20001, 16.0), closed, 1e-10 * closed);
    EXPECT_NEAR(curvature_integral(sigma), curvature_trapezoid(sigma, 20001, 16.0), 1e-10 * closed);
  }
}

TEST(Intensity, SecondDerivativeByFiniteDifference) {
  const double sigma = 3.0, h = 1e-3;
  for (double x : {-4.0, -1.0, 0.0, 2.0, 7.5}) {
    const double fd = (intensity(sigma, x + h) - 2 * intensity(sigma, x) + intensity(sigma, x - h)) / (h * h);
    EXPECT_NEAR(intensity_second_derivative(sigma, x), fd, 1e-8);
  }
}

TEST(Fisher, UnitExample) {
  const DirectDetectionSpec s{1.0, 1.0};
  EXPECT_NEAR(fisher_info(s, 8.0), 1.0, 1e-15);
  EXPECT_NEAR(fisher_info_numeric(s, 8.0), 1.0, 1e-12);
}

TEST(Fisher, ZeroSeparationAndLinearity) {
  EXPECT_EQ(fisher_info({20.0, 0.0}, 100.0), 0.0);
  EXPECT_EQ(fisher_info_numeric({20.0, 0.0}, 100.0), 0.0);
  const DirectDetectionSpec s{20.0, 5.0};
  EXPECT_NEAR(fisher_info(s, 200.0), 2 * fisher_info(s, 100.0), 1e-15);
}

TEST(Fisher, NumericMatchesClosedFormAcrossDomain) {
  for (double sigma : {1.0, 5.0, 20.0, 50.0}) {
    for (double frac : {0.01, 0.2, 0.5, 0.99}) {
      const DirectDetectionSpec s{sigma, frac * sigma};
      const double closed = fisher_info(s, 1000.0);
      EXPECT_NEAR(fisher_info_numeric(s, 1000.0), closed, 1e-8 * closed);
    }
  }
}

TEST(Crlb, WorkedExampleAndScaling) {
  const DirectDetectionSpec s{20.0, 10.0};
  EXPECT_NEAR(crlb_variance(s, 100.0), 128.0, 1e-12);
  EXPECT_NEAR(crlb_variance(s, 200.0), 64.0, 1e-12);
  EXPECT_NEAR(crlb_variance({40.0, 10.0}, 100.0), 16 * 128.0, 1e-9);
  EXPECT_NEAR(crlb_variance(s, 100.0), 1.0 / fisher_info(s, 100.0), 1e-12);
  EXPECT_THROW(crlb_variance({20.0, 0.0}, 100.0), InvalidArgument);
}

TEST(RequiredPhotons, WorkedExamples) {
  EXPECT_NEAR(required_photons({20.0, 10.0, FidelityTarget::f68()}), 26.7, 0.1);
  EXPECT_NEAR(required_photons({20.0, 3.0, FidelityTarget::f68()}), 3292.0, 1.0);
  EXPECT_NEAR(required_photons({20.0, 10.0, FidelityTarget::f68()}), 8.0 * 160000 / (4.8 * 1e4), 1e-12);
  EXPECT_NEAR(required_photons({20.0, 10.0, FidelityTarget::f95()}), 8.0 * 160000 / (0.4 * 1e4), 1e-10);
}

TEST(RequiredPhotons, InverseFourthPowerLaw) {
  for (double theta : {1.0, 3.0, 5.0, 10.0}) {
    const double n = required_photons({20.0, theta});
    const double half = required_photons({20.0, theta / 2});
    EXPECT_NEAR(half / n, 16.0, 16.0 * 1e-10);
  }
}

TEST(RequiredPhotons, Monotonicity) {
  double prev = INFINITY;
  for (double theta = 0.5; theta < 20.0; theta += 0.5) {
    const double n = required_photons({20.0, theta});
    EXPECT_LT(n, prev);
    prev = n;
  }
  prev = 0.0;
  for (double sigma = 5.0; sigma < 50.0; sigma += 5.0) {
    const double n = required_photons({sigma, 3.0});
    EXPECT_GT(n, prev);
    prev = n;
  }
}

TEST(RequiredPhotons, VarianceTargetIsMet) {
  const DirectDetectionSpec s{20.0, 5.0, FidelityTarget::custom(0.8, 2.0)};
  const double n = required_photons(s);
  EXPECT_NEAR(crlb_variance(s, n), 2.0 * 25.0, 1e-10);
  EXPECT_THROW(FidelityTarget::custom(0.8, 0.0), InvalidArgument);
}

TEST(EfficiencyGain, Quotient) {
  const DirectDetectionSpec s{20.0, 3.0};
  EXPECT_NEAR(efficiency_gain(534.0, s), required_photons(s) / 534.0, 1e-12);
  EXPECT_NEAR(efficiency_gain(534.0, s), 6.165, 1e-3);
  EXPECT_NEAR(efficiency_gain(required_photons(s), s), 1.0, 1e-15);
  EXPECT_THROW(efficiency_gain(0.0, s), InvalidArgument);
}

TEST(Spec, ValidityDomain) {
  EXPECT_TRUE((DirectDetectionSpec{20.0, 10.0}.within_validity()));
  EXPECT_FALSE((DirectDetectionSpec{20.0, 25.0}.within_validity()));
  EXPECT_FALSE((DirectDetectionSpec{20.0, 0.0}.within_validity()));
  // Outside the domain the formulas still evaluate.
  EXPECT_GT(required_photons({20.0, 25.0}), 0.0);
  EXPECT_THROW((DirectDetectionSpec{-1.0, 1.0}.validate()), InvalidArgument);
}
