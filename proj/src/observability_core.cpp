#include "obsv/observability_core.hpp"

#include <algorithm>
#include <cmath>
#include <complex>

namespace obsv {

ObservabilityVector observability_vector(double i_d, double i_q, const PmsmParams& params) {
  const double dL = params.delta_L();
  ObservabilityVector v;
  v.psi_d = dL * i_d + params.K_e;
  v.psi_q = dL * i_q;
  v.magnitude = std::hypot(v.psi_d, v.psi_q);
  v.theta = std::atan2(v.psi_q, v.psi_d);
  if (v.theta == -M_PI) v.theta = M_PI;
  return v;
}

double theta_O_rate(const CurrentPoint& c, const PmsmParams& params) {
  const ObservabilityVector v = observability_vector(c.i_d, c.i_q, params);
  if (v.degenerate()) throw DegenerateError("observability vector is zero; phase undefined");
  const double dL = params.delta_L();
  const double dpsi_d = dL * c.di_d;
  const double dpsi_q = dL * c.di_q;
  return (v.psi_d * dpsi_q - v.psi_q * dpsi_d) / (v.magnitude * v.magnitude);
}

double theta_O_rate_arctan(const CurrentPoint& c, const PmsmParams& params) {
  const double dL = params.delta_L();
  const double active = dL * c.i_d + params.K_e;
  if (std::abs(active) <= kDegenerateFlux) {
    throw DegenerateError("active flux is zero; arctan form undefined");
  }
  constexpr double kStep = 1e-20;
  using cplx = std::complex<double>;
  const cplx t(0.0, kStep);
  const cplx num = dL * (c.i_q + t * c.di_q);
  const cplx den = dL * (c.i_d + t * c.di_d) + params.K_e;
  return std::atan(num / den).imag() / kStep;
}

double pmsm_determinant(const CurrentPoint& c, double omega_e, const PmsmParams& P) {
  const double dL = P.delta_L();
  const double active = dL * c.i_d + P.K_e;
  const double LdLq = P.L_d * P.L_q;
  return (active * active + dL * dL * c.i_q * c.i_q) * omega_e / LdLq +
         dL / LdLq * (dL * c.di_d * c.i_q - active * c.di_q);
}

double pmsm_determinant_scale(const CurrentPoint& c, double omega_e, const PmsmParams& P) {
  const double dL = P.delta_L();
  const double active = dL * c.i_d + P.K_e;
  const double LdLq = P.L_d * P.L_q;
  return ((active * active + dL * dL * c.i_q * c.i_q) * std::abs(omega_e) +
          std::abs(dL) * (std::abs(dL * c.di_d * c.i_q) + std::abs(active * c.di_q))) /
         LdLq;
}

double pmsm_speed_threshold(const CurrentPoint& c, const PmsmParams& P) {
  const double dL = P.delta_L();
  const double active = dL * c.i_d + P.K_e;
  const double den = active * active + dL * dL * c.i_q * c.i_q;
  if (std::sqrt(den) <= kDegenerateFlux) throw DegenerateError("observability vector is zero");
  return (active * dL * c.di_q - dL * c.di_d * dL * c.i_q) / den;
}

ObservabilityVerdict pmsm_condition(const CurrentPoint& c, double omega_e, const PmsmParams& params,
                                    double epsilon) {
  const ObservabilityVector v = observability_vector(c.i_d, c.i_q, params);
  if (v.degenerate()) return ObservabilityVerdict::make(0.0, epsilon, true);
  return ObservabilityVerdict::make(omega_e - theta_O_rate(c, params), epsilon);
}

ObservabilityVerdict legacy_standstill_check(double i_d, double i_q, double C,
                                             const PmsmParams& params, double epsilon) {
  const double dL = params.delta_L();
  if (dL == 0.0) throw ValidationError("L_d", "legacy standstill condition needs L_d != L_q");
  if (!std::isfinite(C)) throw ValidationError("C", "must be finite");
  const double value = std::abs(i_d + params.K_e / dL) * std::abs(C) - std::abs(i_q);
  return ObservabilityVerdict::make(value, epsilon);
}

CExtraction extract_C(std::span<const CurrentPair> currents, const PmsmParams& params) {
  const double dL = params.delta_L();
  if (dL == 0.0) throw ValidationError("L_d", "constant C needs L_d != L_q");
  CExtraction out;
  out.ratios.reserve(currents.size());
  double sum = 0.0;
  std::size_t n = 0;
  for (const CurrentPair& c : currents) {
    const double shifted = std::abs(c.i_d + params.K_e / dL);
    if (shifted == 0.0) {
      out.ratios.emplace_back(std::nullopt);
      ++out.degenerate_count;
      continue;
    }
    const double r = std::abs(c.i_q) / shifted;
    out.ratios.emplace_back(r);
    sum += r;
    ++n;
  }
  if (n == 0) return out;
  out.mean = sum / static_cast<double>(n);
  for (const auto& r : out.ratios) {
    if (r) out.max_deviation = std::max(out.max_deviation, std::abs(*r - out.mean));
  }
  return out;
}

double im_acceleration_term(const Planar& psi_r, double omega_e, double domega_e,
                            const ImParams& params) {
  const double xi2 = params.xi2();
  const double den = omega_e * omega_e + xi2 * xi2;
  if (den == 0.0) throw DegenerateError("omega_e^2 + xi2^2 is zero");
  return xi2 / den * domega_e * dot(psi_r, psi_r);
}

ObservabilityVerdict im_condition_6d(const Planar& psi_r, const Planar& dpsi_r, double omega_e,
                                     double domega_e, const ImParams& params, double epsilon) {
  const double value =
      im_acceleration_term(psi_r, omega_e, domega_e, params) - cross(dpsi_r, psi_r);
  return ObservabilityVerdict::make(value, epsilon);
}

ObservabilityVerdict im_condition_5d(const Planar& psi_r, const Planar& dpsi_r, double epsilon) {
  return ObservabilityVerdict::make(cross(dpsi_r, psi_r), epsilon);
}

}  // namespace obsv
