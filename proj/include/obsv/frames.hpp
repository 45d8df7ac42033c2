#pragma once

#include <cmath>

namespace obsv {

struct Abc {
  double a = 0.0;
  double b = 0.0;
  double c = 0.0;
};

struct AlphaBeta {
  double alpha = 0.0;
  double beta = 0.0;
};

struct Dq {
  double d = 0.0;
  double q = 0.0;
};

// Amplitude-invariant Clarke transform.
inline AlphaBeta clarke(const Abc& x) {
  return {(2.0 / 3.0) * (x.a - 0.5 * x.b - 0.5 * x.c), (x.b - x.c) / std::sqrt(3.0)};
}

// Zero-sequence component is assumed to be zero.
inline Abc inverse_clarke(const AlphaBeta& x) {
  const double h = std::sqrt(3.0) / 2.0;
  return {x.alpha, -0.5 * x.alpha + h * x.beta, -0.5 * x.alpha - h * x.beta};
}

/// Stationary to rotor frame: rotation by -theta_e.
inline Dq park(const AlphaBeta& x, double theta_e) {
  const double c = std::cos(theta_e);
  const double s = std::sin(theta_e);
  return {c * x.alpha + s * x.beta, -s * x.alpha + c * x.beta};
}

inline AlphaBeta inverse_park(const Dq& x, double theta_e) {
  const double c = std::cos(theta_e);
  const double s = std::sin(theta_e);
  return {c * x.d - s * x.q, s * x.d + c * x.q};
}

/// Wraps an angle into [-pi, pi).
inline double wrap_angle(double a) {
  if (a >= -M_PI && a < M_PI) return a;  // keep in-range angles bit-exact
  constexpr double kTwoPi = 2.0 * M_PI;
  double w = std::fmod(a + M_PI, kTwoPi);
  if (w < 0.0) w += kTwoPi;
  return w - M_PI;
}

}  // namespace obsv
