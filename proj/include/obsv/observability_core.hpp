#pragma once

// Closed-form local observability conditions for the PMSM (determinant of
// the first-order observability matrix and its observability-vector form),
// the legacy standstill inequality with its constant C, and the 6- and
// 5-state induction machine conditions.

#include <cmath>
#include <cstddef>
#include <optional>
#include <span>
#include <vector>

#include "obsv/machine_models.hpp"

namespace obsv {

/// Below this magnitude (Wb) the observability vector is treated as zero and
/// its phase as undefined.
inline constexpr double kDegenerateFlux = 1e-12;

inline constexpr double kDefaultEpsilon = 1e-6;

/// Observability vector in the rotor frame: d-part is the active flux
/// K_e + dL i_d, q-part is dL i_q.
struct ObservabilityVector {
  double psi_d = 0.0;
  double psi_q = 0.0;
  double magnitude = 0.0;
  double theta = 0.0;  // (-pi, pi]

  bool degenerate() const { return magnitude <= kDegenerateFlux; }
};

/// Decision on one condition residual. `observable` is |value| > threshold
/// unless the point is degenerate, in which case it is always false.
struct ObservabilityVerdict {
  double value = 0.0;
  double threshold = 0.0;
  bool observable = false;
  bool degenerate = false;

  static ObservabilityVerdict make(double value, double threshold, bool degenerate = false) {
    return {value, threshold, !degenerate && std::abs(value) > threshold, degenerate};
  }
};

/// Currents and their time derivatives in the rotor frame.
struct CurrentPoint {
  double i_d = 0.0;
  double i_q = 0.0;
  double di_d = 0.0;
  double di_q = 0.0;
};

ObservabilityVector observability_vector(double i_d, double i_q, const PmsmParams& params);

/// Phase rate of the observability vector,
/// (psi_d dpsi_q - psi_q dpsi_d) / |psi|^2. Throws DegenerateError at psi = 0.
double theta_O_rate(const CurrentPoint& c, const PmsmParams& params);

/// Same rate from the arctan form d/dt atan(dL i_q / (dL i_d + K_e)),
/// differentiated by complex step along the current motion. Undefined where
/// the active flux is zero (DegenerateError).
double theta_O_rate_arctan(const CurrentPoint& c, const PmsmParams& params);

/// Determinant D of the first-order observability matrix:
///   D = [(dL i_d + K_e)^2 + dL^2 i_q^2] w / (L_d L_q)
///     + dL / (L_d L_q) [dL di_d i_q - (dL i_d + K_e) di_q].
double pmsm_determinant(const CurrentPoint& c, double omega_e, const PmsmParams& params);

/// Sum of the absolute values of the terms of D; the scale used to decide
/// whether D is zero relative to its own magnitude.
double pmsm_determinant_scale(const CurrentPoint& c, double omega_e, const PmsmParams& params);

/// Speed threshold the determinant vanishes at, in its rational form:
/// [(dL i_d + K_e) dL di_q - dL di_d dL i_q] / [(dL i_d + K_e)^2 + dL^2 i_q^2].
double pmsm_speed_threshold(const CurrentPoint& c, const PmsmParams& params);

/// Residual w_e - dtheta_O/dt against epsilon (rad/s). Degenerate where the
/// observability vector vanishes.
ObservabilityVerdict pmsm_condition(const CurrentPoint& c, double omega_e,
                                    const PmsmParams& params, double epsilon = kDefaultEpsilon);

/// |i_d + K_e/dL| |C| - |i_q| against epsilon. Throws ValidationError when dL = 0.
ObservabilityVerdict legacy_standstill_check(double i_d, double i_q, double C,
                                             const PmsmParams& params,
                                             double epsilon = kDefaultEpsilon);

struct CExtraction {
  std::vector<std::optional<double>> ratios;  // nullopt where |i_d + K_e/dL| = 0
  double mean = 0.0;
  double max_deviation = 0.0;
  std::size_t degenerate_count = 0;
};

struct CurrentPair {
  double i_d = 0.0;
  double i_q = 0.0;
};

/// Per-sample ratio |i_q| / |i_d + K_e/dL|, its mean and max deviation from
/// the mean. Constant (= |tan theta_O|) along a constant-phase locus.
CExtraction extract_C(std::span<const CurrentPair> currents, const PmsmParams& params);

struct Planar {
  double x = 0.0;
  double y = 0.0;
};

inline double cross(const Planar& a, const Planar& b) { return a.x * b.y - a.y * b.x; }
inline double dot(const Planar& a, const Planar& b) { return a.x * b.x + a.y * b.y; }

/// Acceleration term xi2/(w^2 + xi2^2) dw/dt |psi_r|^2 of the 6-state condition.
double im_acceleration_term(const Planar& psi_r, double omega_e, double domega_e,
                            const ImParams& params);

/// 6-state condition value: acceleration term - (dpsi_r/dt x psi_r).
/// Throws DegenerateError when w^2 + xi2^2 = 0.
ObservabilityVerdict im_condition_6d(const Planar& psi_r, const Planar& dpsi_r, double omega_e,
                                     double domega_e, const ImParams& params,
                                     double epsilon = kDefaultEpsilon);

/// 5-state condition value: dpsi_r/dt x psi_r.
ObservabilityVerdict im_condition_5d(const Planar& psi_r, const Planar& dpsi_r,
                                     double epsilon = kDefaultEpsilon);

}  // namespace obsv
