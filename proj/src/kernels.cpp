#include "obsv/kernels.hpp"

#include <limits>

namespace obsv {

PmsmEvaluation evaluate_pmsm_point(const PmsmSampleInput& in, const PmsmParams& params,
                                   double epsilon) {
  PmsmEvaluation out;
  out.psi = observability_vector(in.currents.i_d, in.currents.i_q, params);
  out.determinant = pmsm_determinant(in.currents, in.omega_e, params);
  out.determinant_scale = pmsm_determinant_scale(in.currents, in.omega_e, params);
  out.verdict = pmsm_condition(in.currents, in.omega_e, params, epsilon);
  out.theta_rate = out.psi.degenerate() ? std::numeric_limits<double>::quiet_NaN()
                                        : theta_O_rate(in.currents, params);
  return out;
}

std::vector<PmsmEvaluation> evaluate_pmsm_serial(std::span<const PmsmSampleInput> in,
                                                 const PmsmParams& params, double epsilon) {
  std::vector<PmsmEvaluation> out;
  out.reserve(in.size());
  for (const PmsmSampleInput& s : in) out.push_back(evaluate_pmsm_point(s, params, epsilon));
  return out;
}

std::vector<PmsmEvaluation> evaluate_pmsm_parallel(std::span<const PmsmSampleInput> in,
                                                   const PmsmParams& params, double epsilon) {
  std::vector<PmsmEvaluation> out(in.size());
  const auto n = static_cast<long>(in.size());
#pragma omp parallel for schedule(static)
  for (long i = 0; i < n; ++i) out[i] = evaluate_pmsm_point(in[i], params, epsilon);
  return out;
}

ImEvaluation evaluate_im_point(const ImSampleInput& in, const ImParams& params, double epsilon) {
  ImEvaluation out;
  out.five_state = im_condition_5d(in.psi_r, in.dpsi_r, epsilon);
  const double xi2 = params.xi2();
  if (in.omega_e * in.omega_e + xi2 * xi2 == 0.0) {
    out.degenerate = true;
    out.six_state = ObservabilityVerdict::make(0.0, epsilon, true);
    return out;
  }
  out.acceleration_term = im_acceleration_term(in.psi_r, in.omega_e, in.domega_e, params);
  out.six_state = im_condition_6d(in.psi_r, in.dpsi_r, in.omega_e, in.domega_e, params, epsilon);
  return out;
}

std::vector<ImEvaluation> evaluate_im_serial(std::span<const ImSampleInput> in,
                                             const ImParams& params, double epsilon) {
  std::vector<ImEvaluation> out;
  out.reserve(in.size());
  for (const ImSampleInput& s : in) out.push_back(evaluate_im_point(s, params, epsilon));
  return out;
}

std::vector<ImEvaluation> evaluate_im_parallel(std::span<const ImSampleInput> in,
                                               const ImParams& params, double epsilon) {
  std::vector<ImEvaluation> out(in.size());
  const auto n = static_cast<long>(in.size());
#pragma omp parallel for schedule(static)
  for (long i = 0; i < n; ++i) out[i] = evaluate_im_point(in[i], params, epsilon);
  return out;
}

std::vector<OracleComparison> compare_oracle_serial(std::span<const OracleSample> points,
                                                    const OracleTolerances& tol,
                                                    const LieOptions& lie) {
  std::vector<OracleComparison> out;
  out.reserve(points.size());
  for (const OracleSample& p : points) out.push_back(compare_oracle_point(p.point, p.params, tol, lie));
  return out;
}

std::vector<OracleComparison> compare_oracle_parallel(std::span<const OracleSample> points,
                                                      const OracleTolerances& tol,
                                                      const LieOptions& lie) {
  std::vector<OracleComparison> out(points.size());
  const auto n = static_cast<long>(points.size());
#pragma omp parallel for schedule(dynamic, 8)
  for (long i = 0; i < n; ++i) out[i] = compare_oracle_point(points[i].point, points[i].params, tol, lie);
  return out;
}

}  // namespace obsv
