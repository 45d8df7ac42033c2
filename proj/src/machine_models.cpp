#include "obsv/machine_models.hpp"

#include <cmath>

namespace obsv {
namespace {

void require(bool ok, const char* field, const char* what) {
  if (!ok) throw ValidationError(field, what);
}

bool finite(double v) { return std::isfinite(v); }

// Shared by the checked struct API and the unchecked vector API used inside
// the integrator, where non-finite values are caught as divergence instead.
void pmsm_rhs(const PmsmParams& P, MechanicalMode mode, double i_d, double i_q, double omega,
              double u_d, double u_q, double out[4]) {
  const double w = mode == MechanicalMode::locked_rotor ? 0.0 : omega;
  out[0] = (u_d - P.R_s * i_d + w * P.L_q * i_q) / P.L_d;
  out[1] = (u_q - P.R_s * i_q - w * (P.L_d * i_d + P.K_e)) / P.L_q;
  switch (mode) {
    case MechanicalMode::locked_rotor:
      out[2] = 0.0;
      out[3] = 0.0;
      break;
    case MechanicalMode::constant_speed:
      out[2] = omega;
      out[3] = 0.0;
      break;
    case MechanicalMode::free:
      out[2] = omega;
      out[3] = P.p * (pmsm_torque(i_d, i_q, P) - P.T_L) / P.J;
      break;
  }
}

void im_rhs(const ImParams& P, MechanicalMode mode, const double x[6], double u_a, double u_b,
            double out[6]) {
  const double sigma = P.sigma();
  const double xi2 = P.xi2();
  const double beta = P.L_m / (sigma * P.L_s * P.L_r);
  const double gamma = P.R_s / (sigma * P.L_s) + P.R_r * P.L_m * P.L_m / (sigma * P.L_s * P.L_r * P.L_r);
  const double i_a = x[0], i_b = x[1], psi_a = x[2], psi_b = x[3], w = x[4], T_L = x[5];
  const double w_eff = mode == MechanicalMode::locked_rotor ? 0.0 : w;

  out[0] = -gamma * i_a + beta * (xi2 * psi_a + w_eff * psi_b) + u_a / (sigma * P.L_s);
  out[1] = -gamma * i_b + beta * (xi2 * psi_b - w_eff * psi_a) + u_b / (sigma * P.L_s);
  out[2] = -xi2 * psi_a - w_eff * psi_b + xi2 * P.L_m * i_a;
  out[3] = -xi2 * psi_b + w_eff * psi_a + xi2 * P.L_m * i_b;
  if (mode == MechanicalMode::free) {
    const double T_em = 1.5 * P.p * (P.L_m / P.L_r) * (psi_a * i_b - psi_b * i_a);
    out[4] = P.p * (T_em - T_L) / P.J;
  } else {
    out[4] = 0.0;
  }
  out[5] = 0.0;
}

}  // namespace

void PmsmParams::validate() const {
  require(finite(L_d) && L_d > 0.0, "L_d", "must be positive");
  require(finite(L_q) && L_q > 0.0, "L_q", "must be positive");
  require(finite(K_e) && K_e >= 0.0, "K_e", "must be non-negative");
  require(finite(R_s) && R_s >= 0.0, "R_s", "must be non-negative");
  require(p >= 1, "p", "must be at least 1");
  require(finite(J) && J > 0.0, "J", "must be positive");
  require(finite(T_L), "T_L", "must be finite");
}

void ImParams::validate() const {
  require(finite(R_s) && R_s >= 0.0, "R_s", "must be non-negative");
  require(finite(R_r) && R_r >= 0.0, "R_r", "must be non-negative");
  require(finite(L_s) && L_s > 0.0, "L_s", "must be positive");
  require(finite(L_r) && L_r > 0.0, "L_r", "must be positive");
  require(finite(L_m) && L_m > 0.0, "L_m", "must be positive");
  require(L_m * L_m < L_s * L_r, "L_m", "must satisfy L_m^2 < L_s L_r");
  require(finite(J) && J > 0.0, "J", "must be positive");
  require(p >= 1, "p", "must be at least 1");
}

double pmsm_torque(double i_d, double i_q, const PmsmParams& params) {
  return 1.5 * params.p * (params.K_e + params.delta_L() * i_d) * i_q;
}

double pmsm_energy(const PmsmState& s, const PmsmParams& P) {
  const double omega_m = s.omega_e / P.p;
  return 0.75 * (P.L_d * s.i_d * s.i_d + P.L_q * s.i_q * s.i_q) + 0.5 * P.J * omega_m * omega_m;
}

PmsmState pmsm_derivative(const PmsmState& s, double u_d, double u_q, const PmsmParams& params,
                          MechanicalMode mode) {
  require(finite(s.i_d) && finite(s.i_q) && finite(s.theta_e) && finite(s.omega_e), "state",
          "must be finite");
  require(finite(u_d) && finite(u_q), "input", "must be finite");
  double out[4] = {};
  pmsm_rhs(params, mode, s.i_d, s.i_q, s.omega_e, u_d, u_q, out);
  return {out[0], out[1], out[2], out[3]};
}

ImState im_derivative(const ImState& s, double u_sa, double u_sb, const ImParams& params,
                      MechanicalMode mode) {
  const double x[6] = {s.i_sa, s.i_sb, s.psi_ra, s.psi_rb, s.omega_e, s.T_L};
  for (double v : x) require(finite(v), "state", "must be finite");
  require(finite(u_sa) && finite(u_sb), "input", "must be finite");
  double out[6];
  im_rhs(params, mode, x, u_sa, u_sb, out);
  return {out[0], out[1], out[2], out[3], out[4], out[5]};
}

double im_torque(const ImState& s, const ImParams& P) {
  return 1.5 * P.p * (P.L_m / P.L_r) * (s.psi_ra * s.i_sb - s.psi_rb * s.i_sa);
}

PmsmModel::PmsmModel(PmsmParams params, MechanicalMode mode, InputFrame frame)
    : params_(params), mode_(mode), frame_(frame) {
  params_.validate();
}

PmsmModel::State PmsmModel::derivative(const State& x, const Input& u) const {
  double u_d = u[0];
  double u_q = u[1];
  if (frame_ == InputFrame::stationary) {
    const Dq v = park({u[0], u[1]}, x[2]);
    u_d = v.d;
    u_q = v.q;
  }
  State out;
  pmsm_rhs(params_, mode_, x[0], x[1], x[3], u_d, u_q, out.data());
  return out;
}

PmsmModel::State PmsmModel::normalize(State x) const {
  x[2] = wrap_angle(x[2]);
  if (mode_ == MechanicalMode::locked_rotor) x[3] = 0.0;
  return x;
}

ImModel::ImModel(ImParams params, MechanicalMode mode) : params_(params), mode_(mode) {
  params_.validate();
}

ImModel::State ImModel::derivative(const State& x, const Input& u) const {
  State out;
  im_rhs(params_, mode_, x.data(), u[0], u[1], out.data());
  return out;
}

}  // namespace obsv
