#include <gtest/gtest.h>

#include <cmath>
#include <numbers>
#include <random>

#include "oracles.hpp"
#include "rqhj/hj_verifier.hpp"

using namespace rqhj;

namespace {

constexpr double kPi = std::numbers::pi;

const PhysicsSetup<double> kUnitK = make_setup(1.0, 1.0, 1.0, std::sqrt(2.0));
const PotentialSpec<double> kFree = ConstantPotential<double>{0.0};
const PotentialSpec<double> kRamp = LinearPotential<double>{0.25};
const PhysicsSetup<double> kRampSetup = make_setup(1.0, 1.0, 1.0, 3.0);

ReducedAction<double> action_for(const PhysicsSetup<double>& setup, const PotentialSpec<double>& spec,
                                 const Grid<double>& grid, Channel ch, MixingConstants<double> mix = {}) {
  return build_reduced_action(solve_pair(setup, spec, grid, ch), mix, setup, spec);
}

ReducedAction<double> synthetic(const std::vector<double>& xs, auto derivs) {
  ReducedAction<double> act;
  const auto n = static_cast<Index>(xs.size());
  act.xs = Series<double>::Map(xs.data(), n);
  act.value = Series<double>::Zero(n);
  act.d1.resize(n);
  act.d2.resize(n);
  act.d3.resize(n);
  for (Index i = 0; i < n; ++i) {
    const auto d = derivs(xs[static_cast<std::size_t>(i)]);
    act.d1[i] = d.d1;
    act.d2[i] = d.d2;
    act.d3[i] = d.d3;
  }
  return act;
}

PotentialSpec<double> tabulated(const oracle::Cubic& cubic, double x0, double x1, int n) {
  std::vector<double> xs, vs;
  for (int i = 0; i < n; ++i) {
    xs.push_back(x0 + (x1 - x0) * i / (n - 1));
    vs.push_back(cubic.v(xs.back()));
  }
  return TabulatedPotential<double>{CubicSpline<double>(xs, vs)};
}

}  // namespace

TEST(SchwarzianTest, LinearFunctionIsZero) {
  const auto act = synthetic({0.0, 0.5, 1.0}, [](double) { return oracle::TanDerivatives{3.0, 0.0, 0.0}; });
  EXPECT_TRUE((schwarzian(act) == 0.0).all());
}

TEST(SchwarzianTest, TangentIsMinusTwo) {
  std::vector<double> xs;
  for (double x = -1.2; x < 1.2; x += 0.05) {
    xs.push_back(x);
  }
  const auto act = synthetic(xs, oracle::tan_derivatives);
  const auto sch = schwarzian(act);
  EXPECT_LE((sch + 2.0).abs().maxCoeff(), 1e-12);
}

TEST(SchwarzianTest, InvariantUnderAffineMaps) {
  const auto grid = make_grid(0.0, 4.0, 256);
  const auto s0 = action_for(kRampSetup, kRamp, grid, Channel::theta, {.a = 1.0, .b = 0.4});
  auto mapped = shifted(s0, 7.0);
  mapped.d1 *= -2.5;
  mapped.d2 *= -2.5;
  mapped.d3 *= -2.5;
  EXPECT_LE((schwarzian(mapped) - schwarzian(s0)).abs().maxCoeff(), 1e-10 * schwarzian(s0).abs().maxCoeff());
}

TEST(SchwarzianTest, StationaryPointRejected) {
  const auto act = synthetic({0.0, 1.0}, [](double x) { return oracle::TanDerivatives{x, 1.0, 0.0}; });
  EXPECT_THROW(schwarzian(act), VanishingFirstDerivative);
}

TEST(SpinTermTest, VanishesForConstantPotential) {
  const auto terms = spin_terms(kUnitK, PotentialSpec<double>{ConstantPotential<double>{0.1}}, make_grid(0.0, 1.0, 16));
  EXPECT_TRUE((terms.term_plus == 0.0).all());
  EXPECT_TRUE((terms.term_minus == 0.0).all());
}

TEST(SpinTermTest, LinearPotentialClosedForm) {
  const double hbar = 0.7, m0 = 1.3, lambda = 0.25;
  const auto setup = make_setup(hbar, 1.0, m0, 5.0);
  const auto grid = make_grid(0.0, 4.0, 64);
  const auto terms = spin_terms(setup, kRamp, grid);
  for (Index i = 0; i < grid.n_points; ++i) {
    const double x = terms.xs[i];
    const double up = 5.0 - lambda * x + m0;
    const double um = 5.0 - lambda * x - m0;
    const double lead = hbar * hbar / (2 * m0) * 0.75 * lambda * lambda;
    EXPECT_NEAR(terms.term_plus[i], lead / (up * up), 1e-15);
    EXPECT_NEAR(terms.term_minus[i], lead / (um * um), 1e-15);
  }
}

TEST(SpinTermTest, AgreesWithFiniteDifferenceUnderRefinement) {
  const PotentialSpec<double> spec = HarmonicPotential<double>{0.8, 0.5};
  const auto setup = make_setup(1.0, 1.0, 1.0, 6.0);
  const auto grid = make_grid(-1.0, 1.0, 41);
  const auto exact = spin_terms(setup, spec, grid);
  std::vector<double> hs, errs;
  for (double h : {0.04, 0.02, 0.01}) {
    const auto fd = spin_term_finite_difference(setup, spec, exact.xs, Channel::phi, h);
    hs.push_back(h);
    errs.push_back((fd - exact.term_minus).abs().maxCoeff());
  }
  EXPECT_LE(errs.back(), 1e-8);
  EXPECT_NEAR(oracle::loglog_slope(hs, errs), 4.0, 0.5);
}

TEST(SpinTermTest, UndefinedWhereChannelFunctionNotPositive) {
  const auto setup = make_setup(1.0, 1.0, 1.0, 0.5);
  const auto terms = spin_terms(setup, kFree, make_grid(0.0, 1.0, 16));
  EXPECT_TRUE(terms.plus_defined.all());
  EXPECT_FALSE(terms.minus_defined.any());
  EXPECT_TRUE(terms.term_minus.isNaN().all());
}

TEST(HalfResidualTest, ConstantPotentialBothProjections) {
  const auto grid = make_grid(0.0, 2 * kPi, 2048);
  const auto s0 = action_for(kUnitK, kFree, grid, Channel::theta);
  const auto z0 = action_for(kUnitK, kFree, grid, Channel::phi);
  const auto plus = residual_rqshje_half(s0, kUnitK, kFree, SpinProjection::plus);
  const auto minus = residual_rqshje_half(z0, kUnitK, kFree, SpinProjection::minus);
  EXPECT_LE(plus.linf, 1e-9);
  EXPECT_LE(minus.linf, 1e-9);
  EXPECT_TRUE(plus.pass);
  EXPECT_EQ(plus.equation_id, EquationId::RQSHJE_half_plus);
  EXPECT_EQ(minus.equation_id, EquationId::RQSHJE_half_minus);
  EXPECT_EQ(plus.defined_samples, grid.n_points);
}

TEST(HalfResidualTest, LinearPotentialBothProjections) {
  const auto grid = make_grid(0.0, 4.0, 1024);
  const MixingConstants<double> mix{.a = 0.7, .b = -1.3, .d = 1.1, .e = 0.4};
  const auto s0 = action_for(kRampSetup, kRamp, grid, Channel::theta, mix);
  const auto z0 = action_for(kRampSetup, kRamp, grid, Channel::phi, mix);
  EXPECT_LE(residual_rqshje_half(s0, kRampSetup, kRamp, SpinProjection::plus).linf, 1e-6);
  EXPECT_LE(residual_rqshje_half(z0, kRampSetup, kRamp, SpinProjection::minus).linf, 1e-6);
}

TEST(HalfResidualTest, CorruptedActionFails) {
  const auto grid = make_grid(0.0, 4.0, 1024);
  const auto s0 = action_for(kRampSetup, kRamp, grid, Channel::theta);
  const auto clean = residual_rqshje_half(s0, kRampSetup, kRamp, SpinProjection::plus);
  // S0 + 1e-3 hbar sin x, derivatives included
  auto bad = s0;
  const double eps = 1e-3 * s0.hbar;
  bad.value += eps * s0.xs.sin();
  bad.d1 += eps * s0.xs.cos();
  bad.d2 -= eps * s0.xs.sin();
  bad.d3 -= eps * s0.xs.cos();
  const auto corrupted = residual_rqshje_half(bad, kRampSetup, kRamp, SpinProjection::plus);
  EXPECT_TRUE(clean.pass);
  EXPECT_FALSE(corrupted.pass);
  EXPECT_GE(corrupted.linf, 1e3 * clean.linf);
}

TEST(HalfResidualTest, DiffersFromSpinlessByTheSpinTerm) {
  const auto grid = make_grid(0.0, 4.0, 512);
  for (auto projection : {SpinProjection::plus, SpinProjection::minus}) {
    const auto ch = channel_of(projection);
    const auto act = action_for(kRampSetup, kRamp, grid, ch);
    const auto half = residual_rqshje_half(act, kRampSetup, kRamp, projection);
    const auto spinless = residual_rqshje_spinless(act, kRampSetup, kRamp);
    const auto terms = spin_terms(kRampSetup, kRamp, grid);
    const Series<double>& spin = ch == Channel::theta ? terms.term_plus : terms.term_minus;
    EXPECT_LE((half.residual - spinless.residual - spin).abs().maxCoeff(), 1e-12);
    ASSERT_TRUE(half.terms.has_value());
    EXPECT_TRUE((half.terms->spin == spin).all());
    EXPECT_TRUE((spinless.terms->spin == 0.0).all());
    // with a nonzero spin term the spinless equation is violated by exactly that amount
    EXPECT_GT(spinless.linf, 0.5 * spin.abs().maxCoeff());
  }
}

TEST(HalfResidualTest, ProjectionMustMatchChannel) {
  const auto s0 = action_for(kUnitK, kFree, make_grid(0.0, 1.0, 32), Channel::theta);
  EXPECT_THROW(residual_rqshje_half(s0, kUnitK, kFree, SpinProjection::minus), ChannelMismatch);
}

TEST(HalfResidualTest, HbarRescaling) {
  const auto grid = make_grid(0.0, 4.0, 1024);
  for (double hbar : {0.3, 2.0}) {
    const auto setup = make_setup(hbar, 1.0, 1.0, 3.0);
    const auto s0 = action_for(setup, kRamp, grid, Channel::theta);
    const auto report = residual_rqshje_half(s0, setup, kRamp, SpinProjection::plus);
    EXPECT_LE(report.linf, 1e-6) << hbar;
    EXPECT_TRUE(report.pass);
  }
}

TEST(HalfResidualTest, RandomTabulatedCubics) {
  std::mt19937 rng(20261016);
  std::uniform_real_distribution<double> coef(-0.3, 0.3);
  for (int trial = 0; trial < 10; ++trial) {
    const oracle::Cubic cubic{{coef(rng), coef(rng), coef(rng), coef(rng)}};
    const auto spec = tabulated(cubic, 0.0, 2.0, 41);
    const auto setup = make_setup(1.0, 1.0, 1.0, 4.0);
    const auto grid = make_grid(0.0, 2.0, 512);
    for (auto projection : {SpinProjection::plus, SpinProjection::minus}) {
      const auto act = action_for(setup, spec, grid, channel_of(projection), {.a = 1.0, .b = 0.2, .d = 1.0, .e = -0.3});
      const auto report = residual_rqshje_half(act, setup, spec, projection);
      EXPECT_LE(report.linf / setup.rest_energy(), 1e-6) << "trial " << trial;
    }
  }
}

TEST(AmplitudeEquationsTest, ConstantPotential) {
  const auto grid = make_grid(0.0, 2 * kPi, 1024);
  const MixingConstants<double> mix;
  for (auto ch : {Channel::theta, Channel::phi}) {
    const auto act = action_for(kUnitK, kFree, grid, ch, mix);
    const auto amp = build_amplitude(act, mix, kUnitK, kFree);
    for (const auto& r : residual_amplitude_equations(act, amp, kUnitK, kFree)) {
      EXPECT_LE(r.linf, 1e-9) << to_string(r.equation_id);
    }
  }
}

TEST(AmplitudeEquationsTest, LinearPotential) {
  const auto grid = make_grid(0.0, 4.0, 1024);
  const MixingConstants<double> mix{.a = 0.7, .b = -1.3, .d = 1.0, .e = 0.5, .k1 = 2.0};
  const auto s0 = action_for(kRampSetup, kRamp, grid, Channel::theta, mix);
  const auto reports = residual_amplitude_equations(s0, build_amplitude(s0, mix, kRampSetup, kRamp), kRampSetup, kRamp);
  ASSERT_EQ(reports.size(), 2u);
  EXPECT_EQ(reports[0].equation_id, EquationId::amp_eq_16);
  EXPECT_EQ(reports[1].equation_id, EquationId::phase_eq_18);
  for (const auto& r : reports) {
    EXPECT_LE(r.linf, 1e-6) << to_string(r.equation_id);
  }
  const auto z0 = action_for(kRampSetup, kRamp, grid, Channel::phi, mix);
  const auto lower = residual_amplitude_equations(z0, build_amplitude(z0, mix, kRampSetup, kRamp), kRampSetup, kRamp);
  EXPECT_EQ(lower[0].equation_id, EquationId::amp_eq_17);
  EXPECT_EQ(lower[1].equation_id, EquationId::phase_eq_19);
  for (const auto& r : lower) {
    EXPECT_LE(r.linf, 1e-6) << to_string(r.equation_id);
  }
}

TEST(AmplitudeEquationsTest, PerturbedAmplitudeFails) {
  const auto grid = make_grid(0.0, 4.0, 1024);
  const MixingConstants<double> mix;
  const auto s0 = action_for(kRampSetup, kRamp, grid, Channel::theta, mix);
  auto amp = build_amplitude(s0, mix, kRampSetup, kRamp);
  // A (1 + 0.01 x)
  const Series<double> f = 1 + 0.01 * amp.xs;
  const Series<double> a = amp.value, a1 = amp.d1, a2 = amp.d2;
  amp.value = a * f;
  amp.d1 = a1 * f + 0.01 * a;
  amp.d2 = a2 * f + 0.02 * a1;
  const auto reports = residual_amplitude_equations(s0, amp, kRampSetup, kRamp);
  EXPECT_GT(reports[1].linf, 1e-4);
  EXPECT_FALSE(reports[1].pass);
}

TEST(NonrelativisticTest, ConstantPotentialResidualIsRelativisticCorrection) {
  // for constant V the limit equation is off by exactly T^2 / 2 m0 c^2 with T = E' - V,
  // pointwise and whatever the mixing
  const double e_prime = 2.0, v0 = 0.5;
  const PotentialSpec<double> spec = ConstantPotential<double>{v0};
  const auto study = nonrelativistic_limit_study(spec, make_grid(0.0, 4.0, 1024), e_prime, {10.0, 30.0, 100.0});
  for (const auto& pt : study.points) {
    const double expected = std::pow(e_prime - v0, 2) / (2 * pt.c * pt.c);
    EXPECT_LE((pt.eq34.residual - expected).abs().maxCoeff(), 1e-6) << pt.c;
    EXPECT_LE((pt.eq35.residual - expected).abs().maxCoeff(), 1e-6) << pt.c;
    EXPECT_LE(pt.extra_term_rel_diff, 1e-9);
  }
  EXPECT_NEAR(study.decay_exponent_34, 2.0, 1e-3);
  EXPECT_TRUE(study.monotone_34);
}

TEST(NonrelativisticTest, LinearPotentialConvergesAtSecondOrder) {
  const auto study = nonrelativistic_limit_study(PotentialSpec<double>{LinearPotential<double>{0.1}},
                                                 make_grid(0.0, 10.0, 2048), 2.0, {10.0, 30.0, 100.0});
  ASSERT_EQ(study.points.size(), 3u);
  EXPECT_TRUE(study.monotone_34);
  EXPECT_TRUE(study.monotone_35);
  EXPECT_NEAR(study.decay_exponent_34, 2.0, 0.5);
  EXPECT_NEAR(study.decay_exponent_35, 2.0, 0.5);
  for (const auto& pt : study.points) {
    EXPECT_LE(pt.extra_term_rel_diff, 1e-9);
    EXPECT_EQ(pt.eq34.equation_id, EquationId::nonrel_34);
    EXPECT_EQ(pt.eq35.equation_id, EquationId::nonrel_35);
  }
  // input order is preserved
  EXPECT_EQ(study.points[0].c, 10.0);
  EXPECT_EQ(study.points[2].c, 100.0);
}

TEST(NonrelativisticTest, RejectsNonPositiveSpeed) {
  EXPECT_THROW(nonrelativistic_limit_study(kFree, make_grid(0.0, 1.0, 32), 1.0, {1.0, -2.0}), DomainError);
}

TEST(FitPowerLawTest, RecoversExponent) {
  EXPECT_NEAR(fit_power_law<double>({1, 2, 4, 8}, {3, 0.75, 0.1875, 0.046875}), -2.0, 1e-12);
}
