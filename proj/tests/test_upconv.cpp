#include <cmath>
#include <random>
#include <vector>

#include <gtest/gtest.h>

#include "sfclass/upconv.hpp"

using namespace sfclass;

namespace {

const ModeBasis kDefaultBasis =
    ModeBasis::from_lists(22.5, std::vector<int>{1, 3, 5, 7}, std::vector<int>{0, 1, 2, 3, 4});

PumpProfile random_pump(std::mt19937_64& gen, const ModeBasis& basis) {
  std::normal_distribution<double> d;
  std::vector<complex> c(basis.size());
  for (auto& v : c) v = {d(gen), d(gen)};
  return PumpProfile::normalized(basis, c, true);
}

// Closed form for three centered/shifted Gaussians in x (y integrates the
// same way without the shift): the reference configuration.
double gaussian_triple_overlap(double sp, double ss, double sf, double shift) {
  const double a = 1.0 / (4 * sp * sp) + 1.0 / (4 * ss * ss) + 1.0 / (4 * sf * sf);
  const double pref = 1.0 / (std::pow(2 * std::numbers::pi, 1.5) * sp * ss * sf);
  const double b = shift / (2 * ss * ss);
  const double c = shift * shift / (4 * ss * ss);
  return pref * (std::numbers::pi / a) * std::exp(b * b / (4 * a) - c);
}

}  // namespace

TEST(Reference, MatchesClosedForm) {
  const double sf = matched_collection_width(22.5, 20.5);
  EXPECT_NEAR(reference_amplitude(22.5, 20.5, sf), gaussian_triple_overlap(22.5, 20.5, sf, 0.0), 1e-15);
}

TEST(Reference, MatchedCollectionWidth) {
  EXPECT_NEAR(matched_collection_width(22.5, 20.5), 22.5 * 20.5 / std::sqrt(22.5 * 22.5 + 20.5 * 20.5), 1e-15);
  EXPECT_NEAR(matched_collection_width(3.0, 4.0), 2.4, 1e-15);
}

TEST(EtaRel, GaussianPumpOnCenteredSourceIsOne) {
  const CountModel m;
  EXPECT_NEAR(eta_rel(PumpProfile::gaussian(22.5), SignalState::single(20.5), m), 1.0, 1e-12);
}

TEST(EtaRel, GaussianPumpOnDisplacedSourceMatchesClosedForm) {
  const CountModel m;
  for (double theta : {3.0, 5.0, 10.0}) {
    const double ratio = gaussian_triple_overlap(22.5, 20.5, m.sigma_f, theta) /
                         gaussian_triple_overlap(22.5, 20.5, m.sigma_f, 0.0);
    EXPECT_NEAR(eta_rel(PumpProfile::gaussian(22.5), SignalState::symmetric_pair(20.5, theta), m), ratio * ratio,
                1e-12);
  }
}

TEST(EtaRel, OddPumpRejectsCenteredSource) {
  std::mt19937_64 gen(11);
  const CountModel m;
  for (int trial = 0; trial < 20; ++trial) {
    EXPECT_LT(eta_rel(random_pump(gen, kDefaultBasis), SignalState::single(20.5), m), 1e-12);
  }
}

TEST(EtaRel, PairAndOneSidedAgreeForOddPump) {
  std::mt19937_64 gen(3);
  const CountModel m;
  for (int trial = 0; trial < 5; ++trial) {
    const auto pump = random_pump(gen, kDefaultBasis);
    EXPECT_NEAR(eta_rel(pump, SignalState::symmetric_pair(20.5, 5.0), m),
                eta_rel(pump, SignalState::one_sided(20.5, 5.0), m), 1e-14);
  }
}

TEST(EtaRel, BoundedByCauchySchwarz) {
  // |<pump, psi * f>|^2 <= ||psi * f||^2 for a unit pump.
  std::mt19937_64 gen(5);
  const CountModel m;
  const double ref = reference_amplitude(22.5, 20.5, m.sigma_f);
  const GaussianPSF psf{20.5, 5.0, 0.0};
  const Field pf = psf_field(psf);
  const Field coll = gaussian_field(m.sigma_f);
  const Field prod{[&](double x, double y) { return pf.eval(x, y) * coll.eval(x, y); },
                   {5.0 * (1 / (20.5 * 20.5)) / (1 / (20.5 * 20.5) + 1 / (m.sigma_f * m.sigma_f)), 0.0,
                    1.0 / std::sqrt(1 / (20.5 * 20.5) + 1 / (m.sigma_f * m.sigma_f))},
                   0,
                   0};
  const double bound = overlap2d(prod, prod, constant_field()).real() / (ref * ref);
  for (int trial = 0; trial < 10; ++trial) {
    EXPECT_LE(eta_rel(random_pump(gen, kDefaultBasis), SignalState::single(20.5, 5.0), m), bound * (1 + 1e-12));
  }
}

TEST(EtaRel, GlobalPhaseInvariance) {
  std::mt19937_64 gen(9);
  const CountModel m;
  const auto pump = random_pump(gen, kDefaultBasis);
  auto c = pump.coeffs();
  for (auto& v : c) v *= std::polar(1.0, 0.7);
  const PumpProfile rotated(kDefaultBasis, c, true);
  const auto state = SignalState::symmetric_pair(20.5, 5.0);
  EXPECT_NEAR(eta_rel(pump, state, m), eta_rel(rotated, state, m), 1e-15);
}

TEST(EtaRel, MisalignmentBreaksParity) {
  CountModel m;
  m.misalign_x = 1.0;
  const PumpProfile pump(kDefaultBasis, [] {
    std::vector<complex> c(20, 0.0);
    c[0] = 1.0;
    return c;
  }());
  EXPECT_GT(eta_rel(pump, SignalState::single(20.5), m), 1e-4);
}

TEST(EtaRel, LeakRaisesCenteredResponse) {
  std::mt19937_64 gen(1);
  const auto pump = random_pump(gen, kDefaultBasis);
  CountModel m;
  double prev = eta_rel(pump, SignalState::single(20.5), m);
  for (double leak : {0.01, 0.05, 0.2}) {
    m.leak_even = leak;
    const double e = eta_rel(pump, SignalState::single(20.5), m);
    EXPECT_GT(e, prev);
    prev = e;
  }
}

TEST(LinearResponse, MatchesDirectEvaluation) {
  std::mt19937_64 gen(21);
  CountModel m;
  m.leak_even = 0.08;
  m.misalign_x = 0.4;
  for (const auto& state : {SignalState::single(20.5), SignalState::symmetric_pair(20.5, 3.0)}) {
    const LinearResponse resp(kDefaultBasis, state, m);
    for (int trial = 0; trial < 3; ++trial) {
      const auto pump = random_pump(gen, kDefaultBasis);
      EXPECT_NEAR(resp.eta(pump.coeffs()), eta_rel(pump, state, m), 1e-13);
    }
  }
}

TEST(LinearResponse, LeakOverrideMatchesModel) {
  std::mt19937_64 gen(22);
  const auto pump = random_pump(gen, kDefaultBasis);
  CountModel m;
  const LinearResponse resp(kDefaultBasis, SignalState::single(20.5), m);
  m.leak_even = 0.3;
  EXPECT_NEAR(resp.eta(pump.coeffs(), 0.3), eta_rel(pump, SignalState::single(20.5), m), 1e-13);
}

TEST(Rates, DarkCountsAndGain) {
  CountModel m;
  m.gain_opt = 2.0;
  const auto r = rate_from_eta(0.5, true, m);
  EXPECT_DOUBLE_EQ(r.rate_signal, m.eta0 * 2.0 * 0.5);
  EXPECT_DOUBLE_EQ(r.rate_total, r.rate_signal + m.dark_per_pulse);
  EXPECT_DOUBLE_EQ(rate_from_eta(0.5, false, m).rate_signal, m.eta0 * 0.5);
}

TEST(Rates, BalancedGainEqualizesCaseB) {
  std::mt19937_64 gen(2);
  CountModel m;
  const auto pump = random_pump(gen, kDefaultBasis);
  const auto state_b = SignalState::symmetric_pair(20.5, 5.0);
  m.gain_opt = balanced_gain(pump, state_b, m);
  EXPECT_NEAR(expected_rate(pump, state_b, m).rate_total,
              expected_rate(PumpProfile::gaussian(22.5), state_b, m).rate_total, 1e-18);
}

TEST(Selectivity, IdealOddPumpIsDarkLimited) {
  std::mt19937_64 gen(4);
  const CountModel m;
  const auto pump = random_pump(gen, kDefaultBasis);
  const double s = selectivity(pump, m, 5.0, 20.5);
  const double ob = expected_rate(pump, SignalState::symmetric_pair(20.5, 5.0), m).rate_total;
  EXPECT_NEAR(s, m.dark_per_pulse / ob, 1e-9 * s);
  EXPECT_THROW(selectivity(pump, m, 0.0, 20.5), InvalidArgument);
}

TEST(Selectivity, ZeroRateIsDegenerate) {
  CountModel m;
  m.dark_per_pulse = 0.0;
  m.eta0 = 0.0;
  EXPECT_THROW(selectivity(PumpProfile::gaussian(22.5), m, 5.0, 20.5), DegenerateInput);
}

TEST(PumpProfile, Validation) {
  EXPECT_THROW(PumpProfile(kDefaultBasis, std::vector<complex>(20, 0.0)), InvalidArgument);
  EXPECT_THROW(PumpProfile(kDefaultBasis, std::vector<complex>(3, 1.0)), InvalidArgument);
  EXPECT_THROW(PumpProfile::normalized(kDefaultBasis, std::vector<complex>(20, 0.0)), DegenerateInput);
  EXPECT_NEAR(PumpProfile::normalized(kDefaultBasis, std::vector<complex>(20, 3.0)).norm(), 1.0, 1e-15);
}

TEST(CountModel, Validation) {
  CountModel m;
  m.sigma_f = -1;
  EXPECT_THROW(m.validate(), InvalidArgument);
  m = {};
  m.gain_opt = 0.0;
  EXPECT_THROW(m.validate(), InvalidArgument);
}
