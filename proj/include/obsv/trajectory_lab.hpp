#pragma once

// Current trajectories for the observability experiments: constant
// observability-vector phase loci (the standstill counterexample), the
// two-vector example on one locus, rotating baselines, held and sampled
// profiles, and the rotor-frame voltages that realize them exactly.

#include <string>
#include <utility>
#include <vector>

#include <Eigen/Core>

#include "obsv/machine_models.hpp"
#include "obsv/observability_core.hpp"

namespace obsv {

/// C1 piecewise cubic Hermite interpolant. Slopes are either three-point
/// finite differences (one-sided at the ends) or zero at every knot
/// ("hold"). Outside the knot range the end value is held with zero slope.
class CubicSegments {
 public:
  enum class Slopes { finite_difference, hold };

  CubicSegments() = default;
  CubicSegments(std::vector<double> knots, std::vector<double> values, Slopes slopes);

  double value(double t) const;
  double derivative(double t) const;
  /// Exact minimum and maximum over the knot range.
  std::pair<double, double> range() const;

  const std::vector<double>& knots() const { return t_; }
  const std::vector<double>& values() const { return v_; }

 private:
  std::size_t segment(double t) const;

  std::vector<double> t_;
  std::vector<double> v_;
  std::vector<double> m_;
};

enum class ProfileKind { constant_theta_O, rotating_vector, piecewise_hold, custom_samples };

std::string to_string(ProfileKind kind);
ProfileKind profile_kind_from_string(const std::string& s);

/// Time-tagged breakpoint of a scalar profile.
struct Breakpoint {
  double t = 0.0;
  double value = 0.0;
};

/// Time-tagged breakpoint of both current components.
struct CurrentBreakpoint {
  double t = 0.0;
  double i_d = 0.0;
  double i_q = 0.0;
};

/// Which current component parametrizes a constant-phase locus.
enum class LocusParameter { i_d, i_q };

class CurrentProfile {
 public:
  ProfileKind kind() const { return kind_; }
  double duration() const { return duration_; }

  /// Currents and their time derivatives at t.
  CurrentPoint at(double t) const;

  double theta_O() const { return theta_O_; }

  static CurrentProfile constant_theta_O(const PmsmParams& params, double theta_O,
                                         std::vector<Breakpoint> profile,
                                         LocusParameter parameter = LocusParameter::i_d);
  static CurrentProfile rotating_vector(double magnitude, double rate, double duration,
                                        double phase = 0.0);
  static CurrentProfile piecewise_hold(std::vector<CurrentBreakpoint> breakpoints);
  static CurrentProfile custom_samples(std::vector<CurrentBreakpoint> samples);

 private:
  ProfileKind kind_ = ProfileKind::rotating_vector;
  double duration_ = 0.0;
  // constant_theta_O: i_q = slope_ * i_d + offset_ (or the i_q-parametrized
  // mirror), driven by one scalar interpolant.
  LocusParameter parameter_ = LocusParameter::i_d;
  double theta_O_ = 0.0;
  double slope_ = 0.0;
  double offset_ = 0.0;
  CubicSegments driver_;
  CubicSegments second_;
  double magnitude_ = 0.0;
  double rate_ = 0.0;
  double phase_ = 0.0;
};

/// Locus dL i_q = tan(theta_O) (dL i_d + K_e), driven by an i_d profile
/// (|theta_O| < pi/2). Throws ValidationError for dL = 0 or if the profile
/// leaves the half-plane where the observability vector has phase theta_O.
CurrentProfile constant_theta_O_profile(const PmsmParams& params, double theta_O,
                                        std::vector<Breakpoint> i_d_profile);

CurrentProfile rotating_vector_profile(double magnitude, double rate, double duration);

struct LocusPair {
  CurrentPair first;   // i_d < 0, i_q > 0
  CurrentPair second;  // i_d > 0, i_q > 0
};

/// Two current vectors on the same constant-theta_O locus that differ in
/// magnitude and direction, with the sign patterns above. Throws
/// ValidationError explaining why no such pair exists otherwise.
LocusPair locus_pair(const PmsmParams& params, double theta_O);

/// Unit tangent of the constant-theta_O locus in the (i_d, i_q) plane.
CurrentPair locus_tangent(const PmsmParams& params, double theta_O);

struct ExcitationSample {
  double t = 0.0;
  CurrentPoint currents;
  double u_d = 0.0;
  double u_q = 0.0;
};

/// Prescribed currents plus the rotor-frame voltages that make the model
/// follow them, for a locked rotor or a rotor at constant speed.
class Excitation {
 public:
  Excitation(CurrentProfile profile, PmsmParams params, MechanicalMode mode,
             double omega_e = 0.0, double theta0 = 0.0);

  ExcitationSample at(double t) const;
  Eigen::Vector2d rotor_voltage(double t) const;
  /// Rotor voltage rotated by the nominal angle theta0 + omega_e t.
  Eigen::Vector2d stationary_voltage(double t) const;
  double nominal_angle(double t) const { return theta0_ + omega_ * t; }

  PmsmState initial_state() const;
  std::vector<ExcitationSample> sample(double dt, std::size_t n_steps) const;

  const CurrentProfile& profile() const { return profile_; }
  const PmsmParams& params() const { return params_; }
  MechanicalMode mode() const { return mode_; }
  double omega_e() const { return omega_; }

 private:
  CurrentProfile profile_;
  PmsmParams params_;
  MechanicalMode mode_;
  double omega_;
  double theta0_;
};

/// Inverts the electrical equations: u_d = L_d di_d + R_s i_d - w L_q i_q,
/// u_q = L_q di_q + R_s i_q + w (L_d i_d + K_e). Free mechanics is rejected;
/// a load that balances the torque is the constant-speed case.
Excitation realize_voltages(const CurrentProfile& profile, const PmsmParams& params,
                            MechanicalMode mode, double omega_e = 0.0, double theta0 = 0.0);

/// Balanced stationary-frame voltage with a linear frequency sweep.
struct ImVoltageProfile {
  double amplitude = 0.0;        // V
  double frequency_start = 0.0;  // Hz
  double frequency_end = 0.0;    // Hz
  double duration = 0.0;         // s

  Eigen::Vector2d at(double t) const;
};

}  // namespace obsv
