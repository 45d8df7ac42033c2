#include <gtest/gtest.h>

#include <cmath>

#include "obsv/errors.hpp"
#include "obsv/observability_core.hpp"
#include "obsv/trajectory_lab.hpp"

using namespace obsv;

namespace {

PmsmParams ipmsm() { return {0.01, 0.02, 0.1, 0.5, 4, 1e-3, 0.0}; }
PmsmParams spmsm() { return {0.01, 0.01, 0.1, 0.5, 4, 1e-3, 0.0}; }

double phase(double i_d, double i_q, const PmsmParams& p) {
  return observability_vector(i_d, i_q, p).theta;
}

}  // namespace

TEST(CubicSegments, InterpolatesKnots) {
  const CubicSegments c({0.0, 1.0, 3.0}, {1.0, -2.0, 4.0}, CubicSegments::Slopes::finite_difference);
  EXPECT_DOUBLE_EQ(c.value(0.0), 1.0);
  EXPECT_DOUBLE_EQ(c.value(1.0), -2.0);
  EXPECT_DOUBLE_EQ(c.value(3.0), 4.0);
  EXPECT_DOUBLE_EQ(c.value(5.0), 4.0);
  EXPECT_DOUBLE_EQ(c.derivative(5.0), 0.0);
  EXPECT_DOUBLE_EQ(c.value(-1.0), 1.0);
}

TEST(CubicSegments, DerivativeMatchesFiniteDifference) {
  for (auto slopes : {CubicSegments::Slopes::finite_difference, CubicSegments::Slopes::hold}) {
    const CubicSegments c({0.0, 0.4, 1.0, 1.5}, {0.0, 2.0, -1.0, 0.5}, slopes);
    for (double t = 0.01; t < 1.5; t += 0.0373) {
      const double h = 1e-6;
      const double fd = (c.value(t + h) - c.value(t - h)) / (2 * h);
      EXPECT_NEAR(c.derivative(t), fd, 1e-6 * std::max(1.0, std::abs(fd))) << t;
    }
  }
}

TEST(CubicSegments, HoldHasZeroKnotSlopes) {
  const CubicSegments c({0.0, 1.0, 2.0}, {0.0, 1.0, 3.0}, CubicSegments::Slopes::hold);
  for (double t : {0.0, 1.0, 2.0}) EXPECT_DOUBLE_EQ(c.derivative(t), 0.0);
}

TEST(CubicSegments, RangeIsExact) {
  const CubicSegments c({0.0, 1.0, 2.0}, {0.0, 1.0, 0.0}, CubicSegments::Slopes::finite_difference);
  const auto [lo, hi] = c.range();
  double dense_lo = 1e9, dense_hi = -1e9;
  for (int k = 0; k <= 200000; ++k) {
    const double v = c.value(2.0 * k / 200000.0);
    dense_lo = std::min(dense_lo, v);
    dense_hi = std::max(dense_hi, v);
  }
  EXPECT_NEAR(lo, dense_lo, 1e-9);
  EXPECT_NEAR(hi, dense_hi, 1e-9);
  EXPECT_GE(hi, 1.0);
}

TEST(CubicSegments, RejectsBadKnots) {
  using S = CubicSegments::Slopes;
  EXPECT_THROW(CubicSegments({}, {}, S::hold), ValidationError);
  EXPECT_THROW(CubicSegments({0.0, 1.0}, {1.0}, S::hold), ValidationError);
  EXPECT_THROW(CubicSegments({0.0, 0.0}, {1.0, 2.0}, S::hold), ValidationError);
  EXPECT_THROW(CubicSegments({1.0, 0.5}, {1.0, 2.0}, S::hold), ValidationError);
}

TEST(ConstantThetaO, ZeroPhaseKeepsIqZero) {
  const PmsmParams p = ipmsm();
  const CurrentProfile prof = constant_theta_O_profile(p, 0.0, {{0.0, 1.0}, {0.01, -5.0}, {0.02, 3.0}});
  for (double t = 0.0; t <= 0.02; t += 1e-4) {
    const CurrentPoint c = prof.at(t);
    EXPECT_EQ(c.i_q, 0.0);
    EXPECT_EQ(c.di_q, 0.0);
  }
}

TEST(ConstantThetaO, PhaseConstantAlongRamp) {
  const PmsmParams p = ipmsm();
  const double theta_O = 0.3;
  // dL < 0, so the locus needs dL i_d + K_e > 0, i.e. i_d < 10.
  const CurrentProfile prof = constant_theta_O_profile(p, theta_O, {{0.0, -8.0}, {0.02, 6.0}});
  EXPECT_DOUBLE_EQ(prof.theta_O(), theta_O);
  for (double t = 0.0; t <= 0.02; t += 2.5e-4) {
    const CurrentPoint c = prof.at(t);
    EXPECT_NEAR(phase(c.i_d, c.i_q, p), theta_O, 1e-10) << t;
    EXPECT_NEAR(theta_O_rate(c, p), 0.0, 1e-9) << t;
  }
}

TEST(ConstantThetaO, MagnitudeAndDirectionVary) {
  const PmsmParams p = ipmsm();
  const CurrentProfile prof =
      constant_theta_O_profile(p, -0.3, {{0.0, 1.0}, {0.025, -8.0}, {0.05, 1.0}});
  double mag_lo = 1e9, mag_hi = 0.0, arg_lo = 1e9, arg_hi = -1e9;
  for (double t = 0.0; t <= 0.05; t += 1e-4) {
    const CurrentPoint c = prof.at(t);
    const double m = std::hypot(c.i_d, c.i_q);
    const double a = std::atan2(c.i_q, c.i_d);
    mag_lo = std::min(mag_lo, m);
    mag_hi = std::max(mag_hi, m);
    arg_lo = std::min(arg_lo, a);
    arg_hi = std::max(arg_hi, a);
  }
  EXPECT_GE(mag_hi / mag_lo, 2.0);
  EXPECT_GE(arg_hi - arg_lo, 0.5);
}

TEST(ConstantThetaO, ParametrizedByIq) {
  const PmsmParams p = ipmsm();
  const CurrentProfile prof =
      CurrentProfile::constant_theta_O(p, -2.0, {{0.0, 1.0}, {0.01, 4.0}}, LocusParameter::i_q);
  for (double t = 0.0; t <= 0.01; t += 1e-4) {
    const CurrentPoint c = prof.at(t);
    EXPECT_NEAR(phase(c.i_d, c.i_q, p), -2.0, 1e-10);
  }
}

TEST(ConstantThetaO, Rejections) {
  EXPECT_THROW(constant_theta_O_profile(spmsm(), 0.3, {{0.0, 1.0}, {0.01, 2.0}}), ValidationError);
  // Crossing dL i_d + K_e = 0 would flip the phase by pi.
  EXPECT_THROW(constant_theta_O_profile(ipmsm(), 0.3, {{0.0, 1.0}, {0.01, 12.0}}), ValidationError);
  EXPECT_THROW(constant_theta_O_profile(ipmsm(), 2.0, {{0.0, 1.0}, {0.01, 2.0}}), ValidationError);
  EXPECT_THROW(constant_theta_O_profile(ipmsm(), 0.3, {{0.001, 1.0}, {0.01, 2.0}}), ValidationError);
  EXPECT_THROW(constant_theta_O_profile(ipmsm(), 0.3, {{0.0, 1.0}}), ValidationError);
}

TEST(LocusPair, PairProperties) {
  const PmsmParams p = ipmsm();
  const LocusPair pair = locus_pair(p, -0.3);
  EXPECT_LT(pair.first.i_d, 0.0);
  EXPECT_GT(pair.first.i_q, 0.0);
  EXPECT_GT(pair.second.i_d, 0.0);
  EXPECT_GT(pair.second.i_q, 0.0);
  EXPECT_NEAR(phase(pair.first.i_d, pair.first.i_q, p), -0.3, 1e-12);
  EXPECT_NEAR(phase(pair.second.i_d, pair.second.i_q, p), -0.3, 1e-12);
  EXPECT_NE(std::hypot(pair.first.i_d, pair.first.i_q), std::hypot(pair.second.i_d, pair.second.i_q));
  EXPECT_GT(std::abs(std::atan2(pair.first.i_q, pair.first.i_d) -
                     std::atan2(pair.second.i_q, pair.second.i_d)),
            0.1);

  // Moving along the locus at standstill leaves D at zero.
  const CurrentPair tan = locus_tangent(p, -0.3);
  EXPECT_NEAR(std::hypot(tan.i_d, tan.i_q), 1.0, 1e-12);
  for (const CurrentPair& c : {pair.first, pair.second}) {
    const CurrentPoint cp{c.i_d, c.i_q, 300.0 * tan.i_d, 300.0 * tan.i_q};
    EXPECT_NEAR(pmsm_determinant(cp, 0.0, p), 0.0,
                1e-12 * pmsm_determinant_scale(cp, 0.0, p) + 1e-12);
  }
}

TEST(LocusPair, Rejections) {
  EXPECT_THROW(locus_pair(spmsm(), -0.3), ValidationError);
  EXPECT_THROW(locus_pair(ipmsm(), 0.3), ValidationError);  // i_q would be negative
  EXPECT_THROW(locus_pair(ipmsm(), -2.0), ValidationError);
  PmsmParams no_magnet = ipmsm();
  no_magnet.K_e = 0.0;
  EXPECT_THROW(locus_pair(no_magnet, -0.3), ValidationError);
}

TEST(RotatingVector, Basics) {
  const CurrentProfile zero_rate = CurrentProfile::rotating_vector(5.0, 0.0, 0.01);
  const CurrentPoint a = zero_rate.at(0.007);
  EXPECT_DOUBLE_EQ(a.i_d, 5.0);
  EXPECT_DOUBLE_EQ(a.di_d, 0.0);
  EXPECT_DOUBLE_EQ(a.di_q, 0.0);

  const CurrentProfile zero_mag = CurrentProfile::rotating_vector(0.0, 100.0, 0.01);
  const CurrentPoint b = zero_mag.at(0.003);
  EXPECT_EQ(b.i_d, 0.0);
  EXPECT_EQ(b.i_q, 0.0);

  const CurrentProfile rot = CurrentProfile::rotating_vector(2.0, 50.0, 0.1, 0.2);
  const CurrentPoint c = rot.at(0.01);
  EXPECT_NEAR(std::hypot(c.i_d, c.i_q), 2.0, 1e-12);
  EXPECT_NEAR(c.di_d, -50.0 * c.i_q, 1e-12);
  EXPECT_NEAR(c.di_q, 50.0 * c.i_d, 1e-12);

  EXPECT_THROW(CurrentProfile::rotating_vector(-1.0, 1.0, 1.0), ValidationError);
  EXPECT_THROW(CurrentProfile::rotating_vector(1.0, 1.0, 0.0), ValidationError);
}

TEST(RotatingVector, MostlyObservableAtStandstill) {
  const PmsmParams p = ipmsm();
  const CurrentProfile prof = rotating_vector_profile(5.0, 2 * M_PI * 10, 0.1);
  int unobservable = 0, total = 0;
  for (double t = 0.0; t <= 0.1; t += 1e-5, ++total) {
    if (!pmsm_condition(prof.at(t), 0.0, p).observable) ++unobservable;
  }
  EXPECT_LT(unobservable, total / 100);
}

TEST(Realize, ZeroProfileGivesZeroVoltage) {
  const PmsmParams p = ipmsm();
  const Excitation e = realize_voltages(CurrentProfile::rotating_vector(0.0, 0.0, 0.01), p,
                                        MechanicalMode::locked_rotor);
  const auto v = e.rotor_voltage(0.004);
  EXPECT_EQ(v[0], 0.0);
  EXPECT_EQ(v[1], 0.0);
}

TEST(Realize, ConstantCurrentNeedsOhmicVoltage) {
  const PmsmParams p = ipmsm();
  const Excitation e = realize_voltages(CurrentProfile::piecewise_hold({{0.0, 1.0, 0.0}, {0.01, 1.0, 0.0}}),
                                        p, MechanicalMode::locked_rotor);
  const auto v = e.rotor_voltage(0.005);
  EXPECT_DOUBLE_EQ(v[0], p.R_s);
  EXPECT_DOUBLE_EQ(v[1], 0.0);
}

TEST(Realize, Rejections) {
  const CurrentProfile prof = CurrentProfile::rotating_vector(1.0, 1.0, 0.01);
  EXPECT_THROW(realize_voltages(prof, ipmsm(), MechanicalMode::free), ValidationError);
  EXPECT_THROW(realize_voltages(prof, ipmsm(), MechanicalMode::locked_rotor, 5.0), ValidationError);
}

namespace {

// Drives the model with the realized voltages and returns the worst current
// error relative to the profile's peak magnitude.
double tracking_error(const CurrentProfile& prof, const PmsmParams& p, MechanicalMode mode,
                      double omega_e, double dt) {
  const Excitation e = realize_voltages(prof, p, mode, omega_e);
  const PmsmModel model(p, mode, InputFrame::rotor);
  const InputFunction<PmsmModel> in = [&](double t) { return e.rotor_voltage(t); };
  PmsmState x0 = e.initial_state();
  const auto n = static_cast<std::size_t>(std::llround(prof.duration() / dt));
  const auto traj = integrate(model, PmsmModel::to_vector(x0), in, dt, n);
  double err = 0.0, peak = 0.0;
  for (const auto& s : traj.samples) {
    const CurrentPoint c = prof.at(s.t);
    err = std::max(err, std::hypot(s.state[0] - c.i_d, s.state[1] - c.i_q));
    peak = std::max(peak, std::hypot(c.i_d, c.i_q));
  }
  return err / peak;
}

}  // namespace

TEST(Realize, ModelFollowsProfiles) {
  const PmsmParams p = ipmsm();
  EXPECT_LT(tracking_error(constant_theta_O_profile(p, -0.3, {{0.0, 1.0}, {0.025, -8.0}, {0.05, 1.0}}),
                           p, MechanicalMode::locked_rotor, 0.0, 1e-5),
            1e-3);
  EXPECT_LT(tracking_error(rotating_vector_profile(5.0, 62.83185307179586, 0.05), p,
                           MechanicalMode::locked_rotor, 0.0, 1e-5),
            1e-3);
  EXPECT_LT(tracking_error(rotating_vector_profile(5.0, 200.0, 0.02), spmsm(),
                           MechanicalMode::constant_speed, 100.0, 1e-5),
            1e-3);
  EXPECT_LT(tracking_error(CurrentProfile::custom_samples(
                               {{0.0, 0.0, 1.0}, {0.005, 2.0, 2.0}, {0.01, -1.0, 3.0}}),
                           p, MechanicalMode::constant_speed, 50.0, 1e-5),
            1e-3);
}

TEST(Realize, LocusClosure) {
  // Simulated currents stay on the constant-phase locus.
  const PmsmParams p = ipmsm();
  const CurrentProfile prof =
      constant_theta_O_profile(p, -0.3, {{0.0, 1.0}, {0.025, -8.0}, {0.05, 1.0}});
  const Excitation e = realize_voltages(prof, p, MechanicalMode::locked_rotor);
  const PmsmModel model(p, MechanicalMode::locked_rotor, InputFrame::rotor);
  const InputFunction<PmsmModel> in = [&](double t) { return e.rotor_voltage(t); };
  const auto traj = integrate(model, PmsmModel::to_vector(e.initial_state()), in, 1e-5, 5000);
  const double dL = p.delta_L();
  for (const auto& s : traj.samples) {
    const double residual = dL * s.state[1] - std::tan(-0.3) * (dL * s.state[0] + p.K_e);
    EXPECT_LT(std::abs(residual), 1e-9) << s.t;
  }
}

TEST(ImVoltage, SweepFrequency) {
  const ImVoltageProfile v{100.0, 5.0, 30.0, 0.2};
  EXPECT_NEAR(v.at(0.0).norm(), 100.0, 1e-12);
  EXPECT_NEAR(v.at(0.13).norm(), 100.0, 1e-12);
  EXPECT_NEAR(v.at(0.0)[0], 100.0, 1e-12);
}
