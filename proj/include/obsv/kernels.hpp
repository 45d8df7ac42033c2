#pragma once

// Batch kernels over trajectory samples and oracle points. Every kernel has
// a serial reference and an OpenMP version; the two must return identical
// results element by element (each element is computed independently, no
// cross-thread reductions).

#include <span>
#include <vector>

#include "obsv/numeric_oracle.hpp"
#include "obsv/observability_core.hpp"

namespace obsv {

struct PmsmSampleInput {
  CurrentPoint currents;
  double omega_e = 0.0;
};

struct PmsmEvaluation {
  ObservabilityVector psi;
  double theta_rate = 0.0;  // NaN when degenerate
  double determinant = 0.0;
  double determinant_scale = 0.0;
  ObservabilityVerdict verdict;
};

PmsmEvaluation evaluate_pmsm_point(const PmsmSampleInput& in, const PmsmParams& params,
                                   double epsilon);

std::vector<PmsmEvaluation> evaluate_pmsm_serial(std::span<const PmsmSampleInput> in,
                                                 const PmsmParams& params, double epsilon);
std::vector<PmsmEvaluation> evaluate_pmsm_parallel(std::span<const PmsmSampleInput> in,
                                                   const PmsmParams& params, double epsilon);

struct ImSampleInput {
  Planar psi_r;
  Planar dpsi_r;
  double omega_e = 0.0;
  double domega_e = 0.0;
};

struct ImEvaluation {
  double acceleration_term = 0.0;
  ObservabilityVerdict six_state;
  ObservabilityVerdict five_state;
  bool degenerate = false;  // omega^2 + xi2^2 = 0
};

ImEvaluation evaluate_im_point(const ImSampleInput& in, const ImParams& params, double epsilon);

std::vector<ImEvaluation> evaluate_im_serial(std::span<const ImSampleInput> in,
                                             const ImParams& params, double epsilon);
std::vector<ImEvaluation> evaluate_im_parallel(std::span<const ImSampleInput> in,
                                               const ImParams& params, double epsilon);

std::vector<OracleComparison> compare_oracle_serial(std::span<const OracleSample> points,
                                                    const OracleTolerances& tol = {},
                                                    const LieOptions& lie = {});
std::vector<OracleComparison> compare_oracle_parallel(std::span<const OracleSample> points,
                                                      const OracleTolerances& tol = {},
                                                      const LieOptions& lie = {});

}  // namespace obsv
