#pragma once

// Continuous-time dq-frame PMSM and stationary-frame six-state induction
// machine models, plus a fixed-step RK4 integrator that records the state,
// model derivative and input at every grid point.

#include <cmath>
#include <cstddef>
#include <functional>
#include <vector>

#include <Eigen/Core>

#include "obsv/errors.hpp"
#include "obsv/frames.hpp"

namespace obsv {

struct PmsmParams {
  double L_d = 0.0;  // H
  double L_q = 0.0;  // H
  double K_e = 0.0;  // Wb
  double R_s = 0.0;  // Ohm
  int p = 1;         // pole pairs
  double J = 0.0;    // kg m^2
  double T_L = 0.0;  // constant load torque, N m

  /// Saliency L_d - L_q. Zero identifies a surface-mounted machine.
  double delta_L() const { return L_d - L_q; }
  bool surface_mounted() const { return delta_L() == 0.0; }

  /// Throws ValidationError naming the first violated field.
  void validate() const;
};

struct ImParams {
  double R_s = 0.0;  // Ohm
  double R_r = 0.0;  // Ohm
  double L_s = 0.0;  // H
  double L_r = 0.0;  // H
  double L_m = 0.0;  // H
  double J = 0.0;    // kg m^2, rotor plus load
  int p = 1;

  /// Inverse rotor time constant R_r / L_r, always derived so it cannot drift
  /// out of sync with the resistances and inductances.
  double xi2() const { return R_r / L_r; }
  /// Leakage coefficient 1 - L_m^2 / (L_s L_r).
  double sigma() const { return 1.0 - L_m * L_m / (L_s * L_r); }

  void validate() const;
};

struct PmsmState {
  double i_d = 0.0;
  double i_q = 0.0;
  double theta_e = 0.0;
  double omega_e = 0.0;
};

struct ImState {
  double i_sa = 0.0;
  double i_sb = 0.0;
  double psi_ra = 0.0;
  double psi_rb = 0.0;
  double omega_e = 0.0;
  double T_L = 0.0;
};

/// How the rotor is constrained.
///  - locked_rotor: omega_e is held at zero, d(theta_e)/dt = d(omega_e)/dt = 0.
///  - constant_speed: d(theta_e)/dt = omega_e, d(omega_e)/dt = 0.
///  - free: full mechanical equation with the constant load torque.
enum class MechanicalMode { locked_rotor, constant_speed, free };

/// Frame of the PMSM voltage input when driven through PmsmModel.
enum class InputFrame { rotor, stationary };

/// Electromagnetic torque (3p/2)(K_e + dL i_d) i_q.
double pmsm_torque(double i_d, double i_q, const PmsmParams& params);

/// Magnetic plus kinetic energy, conserved when R_s = 0, T_L = 0 and u = 0.
double pmsm_energy(const PmsmState& state, const PmsmParams& params);

/// Returns (di_d/dt, di_q/dt, dtheta_e/dt, domega_e/dt) for rotor-frame
/// voltages. Non-finite state or input is rejected with ValidationError.
PmsmState pmsm_derivative(const PmsmState& state, double u_d, double u_q,
                          const PmsmParams& params,
                          MechanicalMode mode = MechanicalMode::free);

/// Stationary-frame flux/current equations, dT_L/dt = 0.
ImState im_derivative(const ImState& state, double u_sa, double u_sb, const ImParams& params,
                      MechanicalMode mode = MechanicalMode::free);

double im_torque(const ImState& state, const ImParams& params);

class PmsmModel {
 public:
  static constexpr int kDim = 4;
  using State = Eigen::Matrix<double, kDim, 1>;
  using Input = Eigen::Vector2d;

  explicit PmsmModel(PmsmParams params, MechanicalMode mode = MechanicalMode::free,
                     InputFrame frame = InputFrame::rotor);

  State derivative(const State& x, const Input& u) const;
  State normalize(State x) const;

  const PmsmParams& params() const { return params_; }
  MechanicalMode mode() const { return mode_; }
  InputFrame frame() const { return frame_; }

  static State to_vector(const PmsmState& s) { return {s.i_d, s.i_q, s.theta_e, s.omega_e}; }
  static PmsmState from_vector(const State& x) { return {x[0], x[1], x[2], x[3]}; }

 private:
  PmsmParams params_;
  MechanicalMode mode_;
  InputFrame frame_;
};

class ImModel {
 public:
  static constexpr int kDim = 6;
  using State = Eigen::Matrix<double, kDim, 1>;
  using Input = Eigen::Vector2d;

  explicit ImModel(ImParams params, MechanicalMode mode = MechanicalMode::free);

  State derivative(const State& x, const Input& u) const;
  State normalize(State x) const { return x; }

  const ImParams& params() const { return params_; }
  MechanicalMode mode() const { return mode_; }

  static State to_vector(const ImState& s) {
    State x;
    x << s.i_sa, s.i_sb, s.psi_ra, s.psi_rb, s.omega_e, s.T_L;
    return x;
  }
  static ImState from_vector(const State& x) { return {x[0], x[1], x[2], x[3], x[4], x[5]}; }

 private:
  ImParams params_;
  MechanicalMode mode_;
};

template <typename Model>
using InputFunction = std::function<typename Model::Input(double)>;

template <typename Model>
struct Sample {
  double t = 0.0;
  typename Model::State state;
  typename Model::State derivative;
  typename Model::Input input;
};

/// Uniform-grid record of an integration run. `samples[k].derivative` is the
/// model derivative at `samples[k].state` and `samples[k].input`.
template <typename Model>
struct Trajectory {
  double dt = 0.0;
  std::vector<Sample<Model>> samples;

  std::size_t size() const { return samples.size(); }
};

/// One classical fourth-order Runge-Kutta step.
template <typename Model>
typename Model::State rk4_step(const Model& model, const typename Model::State& x,
                               const InputFunction<Model>& input, double t, double dt) {
  const auto u0 = input(t);
  const auto um = input(t + 0.5 * dt);
  const auto u1 = input(t + dt);
  const auto k1 = model.derivative(x, u0);
  const auto k2 = model.derivative(x + 0.5 * dt * k1, um);
  const auto k3 = model.derivative(x + 0.5 * dt * k2, um);
  const auto k4 = model.derivative(x + dt * k3, u1);
  return x + (dt / 6.0) * (k1 + 2.0 * k2 + 2.0 * k3 + k4);
}

/// Fixed-step RK4 over n_steps steps, returning n_steps + 1 samples starting
/// at t0. Throws DivergenceError naming the step that produced a non-finite
/// state.
template <typename Model>
Trajectory<Model> integrate(const Model& model, const typename Model::State& x0,
                            const InputFunction<Model>& input, double dt, std::size_t n_steps,
                            double t0 = 0.0) {
  if (!(dt > 0.0) || !std::isfinite(dt)) throw ValidationError("dt", "must be positive");
  if (n_steps < 1) throw ValidationError("n_steps", "must be at least 1");
  if (!x0.allFinite()) throw ValidationError("initial_state", "must be finite");

  Trajectory<Model> traj;
  traj.dt = dt;
  traj.samples.reserve(n_steps + 1);

  typename Model::State x = model.normalize(x0);
  for (std::size_t k = 0;; ++k) {
    const double t = t0 + static_cast<double>(k) * dt;
    Sample<Model> s;
    s.t = t;
    s.state = x;
    s.input = input(t);
    s.derivative = model.derivative(x, s.input);
    traj.samples.push_back(s);
    if (k == n_steps) break;

    // Step to the next grid time exactly so the last stage sees the same
    // input as the next recorded sample.
    const double t_next = t0 + static_cast<double>(k + 1) * dt;
    typename Model::State next = rk4_step(model, x, input, t, t_next - t);
    if (!next.allFinite()) throw DivergenceError(k + 1, "non-finite state");
    x = model.normalize(next);
  }
  return traj;
}

}  // namespace obsv
