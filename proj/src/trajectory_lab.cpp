#include "obsv/trajectory_lab.hpp"

#include <algorithm>
#include <cmath>

namespace obsv {

CubicSegments::CubicSegments(std::vector<double> knots, std::vector<double> values, Slopes slopes)
    : t_(std::move(knots)), v_(std::move(values)) {
  if (t_.empty() || t_.size() != v_.size()) {
    throw ValidationError("breakpoints", "need matching, non-empty knots and values");
  }
  for (std::size_t i = 1; i < t_.size(); ++i) {
    if (!(t_[i] > t_[i - 1])) throw ValidationError("breakpoints", "times must strictly increase");
  }
  const std::size_t n = t_.size();
  m_.assign(n, 0.0);
  if (slopes == Slopes::hold || n == 1) return;
  if (n == 2) {
    m_[0] = m_[1] = (v_[1] - v_[0]) / (t_[1] - t_[0]);
    return;
  }
  for (std::size_t i = 1; i + 1 < n; ++i) {
    const double h0 = t_[i] - t_[i - 1];
    const double h1 = t_[i + 1] - t_[i];
    const double s0 = (v_[i] - v_[i - 1]) / h0;
    const double s1 = (v_[i + 1] - v_[i]) / h1;
    m_[i] = (s0 * h1 + s1 * h0) / (h0 + h1);
  }
  m_[0] = (v_[1] - v_[0]) / (t_[1] - t_[0]);
  m_[n - 1] = (v_[n - 1] - v_[n - 2]) / (t_[n - 1] - t_[n - 2]);
}

std::size_t CubicSegments::segment(double t) const {
  const auto it = std::upper_bound(t_.begin(), t_.end(), t);
  const auto idx = static_cast<std::size_t>(std::distance(t_.begin(), it));
  return std::clamp<std::size_t>(idx == 0 ? 0 : idx - 1, 0, t_.size() - 2);
}

double CubicSegments::value(double t) const {
  if (t_.size() == 1 || t <= t_.front()) return v_.front();
  if (t >= t_.back()) return v_.back();
  const std::size_t i = segment(t);
  const double h = t_[i + 1] - t_[i];
  const double s = (t - t_[i]) / h;
  const double s2 = s * s, s3 = s2 * s;
  return (2 * s3 - 3 * s2 + 1) * v_[i] + (s3 - 2 * s2 + s) * h * m_[i] + (-2 * s3 + 3 * s2) * v_[i + 1] +
         (s3 - s2) * h * m_[i + 1];
}

double CubicSegments::derivative(double t) const {
  if (t_.size() == 1) return 0.0;
  if (t < t_.front() || t > t_.back()) return 0.0;
  const std::size_t i = segment(t);
  const double h = t_[i + 1] - t_[i];
  const double s = (t - t_[i]) / h;
  const double s2 = s * s;
  return ((6 * s2 - 6 * s) * v_[i] + (3 * s2 - 4 * s + 1) * h * m_[i] + (-6 * s2 + 6 * s) * v_[i + 1] +
          (3 * s2 - 2 * s) * h * m_[i + 1]) /
         h;
}

std::pair<double, double> CubicSegments::range() const {
  double lo = *std::min_element(v_.begin(), v_.end());
  double hi = *std::max_element(v_.begin(), v_.end());
  for (std::size_t i = 0; i + 1 < t_.size(); ++i) {
    const double h = t_[i + 1] - t_[i];
    // d/ds of the segment cubic: a s^2 + b s + c.
    const double a = 6 * v_[i] + 3 * h * m_[i] - 6 * v_[i + 1] + 3 * h * m_[i + 1];
    const double b = -6 * v_[i] - 4 * h * m_[i] + 6 * v_[i + 1] - 2 * h * m_[i + 1];
    const double c = h * m_[i];
    std::vector<double> roots;
    if (std::abs(a) < 1e-300) {
      if (b != 0.0) roots.push_back(-c / b);
    } else {
      const double disc = b * b - 4 * a * c;
      if (disc >= 0.0) {
        const double sq = std::sqrt(disc);
        roots.push_back((-b + sq) / (2 * a));
        roots.push_back((-b - sq) / (2 * a));
      }
    }
    for (double s : roots) {
      if (s > 0.0 && s < 1.0) {
        const double v = value(t_[i] + s * h);
        lo = std::min(lo, v);
        hi = std::max(hi, v);
      }
    }
  }
  return {lo, hi};
}

std::string to_string(ProfileKind kind) {
  switch (kind) {
    case ProfileKind::constant_theta_O: return "constant-theta-O";
    case ProfileKind::rotating_vector: return "rotating-vector";
    case ProfileKind::piecewise_hold: return "piecewise-hold";
    case ProfileKind::custom_samples: return "custom-samples";
  }
  return "unknown";
}

ProfileKind profile_kind_from_string(const std::string& s) {
  for (ProfileKind k : {ProfileKind::constant_theta_O, ProfileKind::rotating_vector,
                        ProfileKind::piecewise_hold, ProfileKind::custom_samples}) {
    if (to_string(k) == s) return k;
  }
  throw ValidationError("excitation.kind", "unknown profile kind '" + s + "'");
}

namespace {

void split(const std::vector<Breakpoint>& bps, std::vector<double>& t, std::vector<double>& v) {
  for (const Breakpoint& b : bps) {
    t.push_back(b.t);
    v.push_back(b.value);
  }
}

void require_profile_times(const std::vector<double>& t) {
  if (t.size() < 2) throw ValidationError("breakpoints", "need at least two breakpoints");
  if (t.front() != 0.0) throw ValidationError("breakpoints", "first breakpoint must be at t = 0");
}

}  // namespace

CurrentProfile CurrentProfile::constant_theta_O(const PmsmParams& params, double theta_O,
                                                std::vector<Breakpoint> profile,
                                                LocusParameter parameter) {
  const double dL = params.delta_L();
  if (dL == 0.0) {
    throw ValidationError("L_d", "constant-theta_O locus is undefined for L_d = L_q");
  }
  if (!std::isfinite(theta_O)) throw ValidationError("theta_O", "must be finite");
  std::vector<double> t, v;
  split(profile, t, v);
  require_profile_times(t);

  CurrentProfile p;
  p.kind_ = ProfileKind::constant_theta_O;
  p.parameter_ = parameter;
  p.theta_O_ = theta_O;
  p.driver_ = CubicSegments(t, v, CubicSegments::Slopes::finite_difference);
  p.duration_ = t.back();
  const auto [lo, hi] = p.driver_.range();

  if (parameter == LocusParameter::i_d) {
    if (!(std::abs(theta_O) < M_PI / 2)) {
      throw ValidationError("theta_O", "i_d parametrization needs |theta_O| < pi/2; use i_q");
    }
    p.slope_ = std::tan(theta_O);
    p.offset_ = std::tan(theta_O) * params.K_e / dL;
    // The active flux must stay positive or the phase flips by pi.
    if (std::min(dL * lo, dL * hi) + params.K_e <= kDegenerateFlux) {
      throw ValidationError("breakpoints",
                            "i_d profile crosses i_d = -K_e/dL where the phase is undefined");
    }
  } else {
    const double s = std::sin(theta_O);
    if (std::abs(s) < 1e-12) {
      throw ValidationError("theta_O", "i_q parametrization needs sin(theta_O) != 0; use i_d");
    }
    p.slope_ = std::cos(theta_O) / s;
    p.offset_ = -params.K_e / dL;
    if (std::min(dL * lo * s, dL * hi * s) <= 0.0) {
      throw ValidationError("breakpoints",
                            "i_q profile leaves the half-plane where the phase equals theta_O");
    }
  }
  return p;
}

CurrentProfile CurrentProfile::rotating_vector(double magnitude, double rate, double duration,
                                               double phase) {
  if (!(magnitude >= 0.0)) throw ValidationError("magnitude", "must be non-negative");
  if (!(duration > 0.0)) throw ValidationError("duration", "must be positive");
  if (!std::isfinite(rate) || !std::isfinite(phase)) throw ValidationError("rate", "must be finite");
  CurrentProfile p;
  p.kind_ = ProfileKind::rotating_vector;
  p.magnitude_ = magnitude;
  p.rate_ = rate;
  p.phase_ = phase;
  p.duration_ = duration;
  return p;
}

namespace {

void two_channel(const std::vector<CurrentBreakpoint>& bps, CubicSegments::Slopes slopes,
                 CubicSegments& d, CubicSegments& q, double& duration) {
  std::vector<double> t, vd, vq;
  for (const CurrentBreakpoint& b : bps) {
    t.push_back(b.t);
    vd.push_back(b.i_d);
    vq.push_back(b.i_q);
  }
  require_profile_times(t);
  d = CubicSegments(t, vd, slopes);
  q = CubicSegments(t, vq, slopes);
  duration = t.back();
}

}  // namespace

CurrentProfile CurrentProfile::piecewise_hold(std::vector<CurrentBreakpoint> breakpoints) {
  CurrentProfile p;
  two_channel(breakpoints, CubicSegments::Slopes::hold, p.driver_,
              p.second_, p.duration_);
  p.kind_ = ProfileKind::piecewise_hold;
  return p;
}

CurrentProfile CurrentProfile::custom_samples(std::vector<CurrentBreakpoint> samples) {
  CurrentProfile p;
  two_channel(samples, CubicSegments::Slopes::finite_difference,
              p.driver_, p.second_, p.duration_);
  p.kind_ = ProfileKind::custom_samples;
  return p;
}

CurrentPoint CurrentProfile::at(double t) const {
  switch (kind_) {
    case ProfileKind::constant_theta_O: {
      const double x = driver_.value(t);
      const double dx = driver_.derivative(t);
      const double y = slope_ * x + offset_;
      const double dy = slope_ * dx;
      if (parameter_ == LocusParameter::i_d) return {x, y, dx, dy};
      return {y, x, dy, dx};
    }
    case ProfileKind::rotating_vector: {
      const double a = rate_ * t + phase_;
      const double c = std::cos(a), s = std::sin(a);
      return {magnitude_ * c, magnitude_ * s, -magnitude_ * rate_ * s, magnitude_ * rate_ * c};
    }
    case ProfileKind::piecewise_hold:
    case ProfileKind::custom_samples:
      return {driver_.value(t), second_.value(t), driver_.derivative(t), second_.derivative(t)};
  }
  return {};
}

CurrentProfile constant_theta_O_profile(const PmsmParams& params, double theta_O,
                                        std::vector<Breakpoint> i_d_profile) {
  return CurrentProfile::constant_theta_O(params, theta_O, std::move(i_d_profile));
}

CurrentProfile rotating_vector_profile(double magnitude, double rate, double duration) {
  return CurrentProfile::rotating_vector(magnitude, rate, duration);
}

CurrentPair locus_tangent(const PmsmParams& params, double theta_O) {
  const double sign = params.delta_L() > 0.0 ? 1.0 : -1.0;
  return {sign * std::cos(theta_O), sign * std::sin(theta_O)};
}

LocusPair locus_pair(const PmsmParams& params, double theta_O) {
  const double dL = params.delta_L();
  if (dL == 0.0) throw ValidationError("L_d", "no constant-theta_O locus for L_d = L_q");
  if (!(params.K_e > 0.0)) {
    throw ValidationError("K_e", "with K_e = 0 every locus passes through the origin; i_d keeps one sign");
  }
  const double c = std::cos(theta_O);
  const double s = std::sin(theta_O);
  if (!(c > 0.0)) {
    throw ValidationError("theta_O",
                          "cos(theta_O) must be positive for i_d to change sign along the locus");
  }
  if (!(s / dL > 0.0)) {
    throw ValidationError("theta_O",
                          "i_q = rho sin(theta_O)/dL is positive only when sin(theta_O) and dL "
                          "share a sign");
  }
  // i_d crosses zero at |psi_O| = K_e / cos(theta_O).
  const double rho_cross = params.K_e / c;
  auto point = [&](double rho) -> CurrentPair { return {(rho * c - params.K_e) / dL, rho * s / dL}; };
  CurrentPair a = point(0.5 * rho_cross);
  CurrentPair b = point(2.0 * rho_cross);
  if (a.i_d > 0.0) std::swap(a, b);
  const double mag_a = std::hypot(a.i_d, a.i_q), mag_b = std::hypot(b.i_d, b.i_q);
  const double arg_a = std::atan2(a.i_q, a.i_d), arg_b = std::atan2(b.i_q, b.i_d);
  if (!(a.i_d < 0.0 && a.i_q > 0.0 && b.i_d > 0.0 && b.i_q > 0.0) || mag_a == mag_b ||
      arg_a == arg_b) {
    throw ValidationError("theta_O", "no pair with the required sign pattern on this locus");
  }
  return {a, b};
}

Excitation::Excitation(CurrentProfile profile, PmsmParams params, MechanicalMode mode,
                       double omega_e, double theta0)
    : profile_(std::move(profile)), params_(params), mode_(mode), omega_(omega_e), theta0_(theta0) {
  params_.validate();
  if (mode_ == MechanicalMode::free) {
    throw ValidationError("mechanical_mode",
                          "free mechanics cannot hold prescribed currents; use constant-speed "
                          "(torque-balancing load) or locked-rotor");
  }
  if (mode_ == MechanicalMode::locked_rotor && omega_ != 0.0) {
    throw ValidationError("omega_e", "must be zero for a locked rotor");
  }
  if (!std::isfinite(omega_) || !std::isfinite(theta0_)) {
    throw ValidationError("omega_e", "must be finite");
  }
}

ExcitationSample Excitation::at(double t) const {
  const CurrentPoint c = profile_.at(t);
  const PmsmParams& P = params_;
  const double w = mode_ == MechanicalMode::locked_rotor ? 0.0 : omega_;
  ExcitationSample s;
  s.t = t;
  s.currents = c;
  s.u_d = P.L_d * c.di_d + P.R_s * c.i_d - w * P.L_q * c.i_q;
  s.u_q = P.L_q * c.di_q + P.R_s * c.i_q + w * (P.L_d * c.i_d + P.K_e);
  return s;
}

Eigen::Vector2d Excitation::rotor_voltage(double t) const {
  const ExcitationSample s = at(t);
  return {s.u_d, s.u_q};
}

Eigen::Vector2d Excitation::stationary_voltage(double t) const {
  const ExcitationSample s = at(t);
  const AlphaBeta ab = inverse_park({s.u_d, s.u_q}, nominal_angle(t));
  return {ab.alpha, ab.beta};
}

PmsmState Excitation::initial_state() const {
  const CurrentPoint c = profile_.at(0.0);
  return {c.i_d, c.i_q, wrap_angle(theta0_), mode_ == MechanicalMode::locked_rotor ? 0.0 : omega_};
}

std::vector<ExcitationSample> Excitation::sample(double dt, std::size_t n_steps) const {
  std::vector<ExcitationSample> out;
  out.reserve(n_steps + 1);
  for (std::size_t k = 0; k <= n_steps; ++k) out.push_back(at(static_cast<double>(k) * dt));
  return out;
}

Excitation realize_voltages(const CurrentProfile& profile, const PmsmParams& params,
                            MechanicalMode mode, double omega_e, double theta0) {
  return Excitation(profile, params, mode, omega_e, theta0);
}

Eigen::Vector2d ImVoltageProfile::at(double t) const {
  const double sweep = duration > 0.0 ? (frequency_end - frequency_start) / duration : 0.0;
  const double phase = 2.0 * M_PI * (frequency_start * t + 0.5 * sweep * t * t);
  return {amplitude * std::cos(phase), amplitude * std::sin(phase)};
}

}  // namespace obsv
