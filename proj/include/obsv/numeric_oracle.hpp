#pragma once

// Independent numerical check of the closed-form conditions. The
// observability matrix is rebuilt from Lie derivatives obtained by finite
// differencing short simulated flows, and empirical Gramians are built from
// perturbed re-simulations. Nothing here calls the closed forms.

#include <cmath>
#include <cstdint>
#include <functional>
#include <optional>
#include <span>
#include <string>
#include <vector>

#include <Eigen/Dense>

#include "obsv/machine_models.hpp"
#include "obsv/observability_core.hpp"

namespace obsv {

using DynVector = Eigen::VectorXd;
using VectorField = std::function<DynVector(const DynVector&)>;
using OutputMap = std::function<DynVector(const DynVector&)>;

struct ObservabilityMatrix {
  Eigen::MatrixXd entries;  // rows: (y_1..y_m, L_f y_1..L_f y_m, ...)
  int state_dim = 0;
  int orders = 0;
};

struct LieOptions {
  /// Gradient step h_i = relative_step * max(1, |x_i|).
  double relative_step = 1e-5;
  /// Flow time step for the Lie derivatives; 0 picks 0.2 / (scaled Jacobian norm).
  double flow_step = 0.0;
};

/// Stacks the gradients of y, L_f y, ..., L_f^{n_orders-1} y at x. The result
/// must be square. Throws std::invalid_argument on shape problems and
/// NonFiniteError naming the entry when a gradient is not finite.
ObservabilityMatrix build_observability_matrix(const VectorField& field, const OutputMap& output,
                                               const DynVector& x, int n_orders,
                                               const LieOptions& options = {});

template <typename Model>
ObservabilityMatrix build_observability_matrix(const Model& model, const OutputMap& output,
                                               const typename Model::State& x,
                                               const typename Model::Input& u, int n_orders,
                                               const LieOptions& options = {}) {
  VectorField field = [&model, u](const DynVector& z) -> DynVector {
    typename Model::State s = z;
    return model.derivative(s, u);
  };
  return build_observability_matrix(field, output, DynVector(x), n_orders, options);
}

class NonFiniteError : public std::runtime_error {
 public:
  using std::runtime_error::runtime_error;
};

struct DeterminantRank {
  double determinant = 0.0;
  int rank = 0;
  Eigen::VectorXd singular_values;  // descending
};

/// Determinant by fully pivoted elimination; rank counts singular values
/// above tolerance * largest.
DeterminantRank determinant_and_rank(const Eigen::MatrixXd& m, double tolerance);

/// Scales rows and columns to unit 2-norm so the rank decision does not
/// depend on the mixed units of the entries.
Eigen::MatrixXd equilibrate(const Eigen::MatrixXd& m);

// ---------------------------------------------------------------------------
// PMSM specifics.

/// One operating point for the oracle: rotor-frame currents and their rates,
/// speed and rotor angle. The stationary-frame voltage that produces the
/// rates is derived from the model.
struct PmsmOperatingPoint {
  CurrentPoint currents;
  double omega_e = 0.0;
  double theta_e = 0.0;
};

Eigen::Vector2d pmsm_stationary_voltage(const PmsmOperatingPoint& op, const PmsmParams& params);

/// Stationary-frame currents (i_alpha, i_beta) of a state (i_d, i_q, theta_e, omega_e).
DynVector pmsm_stationary_currents(const DynVector& x);

/// 4x4 matrix over (i_d, i_q, theta_e, omega_e), rows (y_a, y_b, L_f y_a, L_f y_b),
/// with stationary-frame voltage held constant and constant-speed mechanics.
ObservabilityMatrix pmsm_observability_matrix(const PmsmOperatingPoint& op,
                                              const PmsmParams& params,
                                              const LieOptions& options = {});

/// Thresholds used to call a point rank deficient on either route.
struct OracleTolerances {
  /// |D| below this fraction of the sum of its absolute terms counts as zero.
  double determinant_relative = 1e-7;
  /// |D| below this (A^2/s) counts as zero whatever its terms: at standstill
  /// with frozen currents every term vanishes together.
  double determinant_absolute = 1e-9;
  /// Equilibrated singular-value ratio below this counts as rank deficient.
  double rank_relative = 5e-6;
  /// Points with |D| / scale above this take part in the ratio check.
  double ratio_region = 1e-3;
};

struct OracleComparison {
  double closed_form_det = 0.0;
  double closed_form_scale = 0.0;
  double numeric_det = 0.0;
  double sigma_ratio = 0.0;
  int rank = 0;
  bool closed_form_zero = false;
  bool numeric_deficient = false;
  bool failed = false;  // the numeric route threw

  bool agree() const { return !failed && closed_form_zero == numeric_deficient; }
};

OracleComparison compare_oracle_point(const PmsmOperatingPoint& op, const PmsmParams& params,
                                      const OracleTolerances& tol = {},
                                      const LieOptions& lie = {});

struct OracleSample {
  PmsmParams params;
  PmsmOperatingPoint point;
};

/// Randomized operating points: parameters log-uniform over laboratory to
/// industrial ranges, currents, rates and speeds uniform. A share of the
/// points is placed on the zero set (speed equal to the observability
/// vector's phase rate, or a surface-mounted machine at standstill) so both
/// classes are exercised.
std::vector<OracleSample> random_oracle_points(std::size_t n, std::uint64_t seed);

struct AgreementSummary {
  std::size_t points = 0;
  std::size_t agreeing = 0;
  std::size_t zero_set = 0;         // closed-form zero
  std::size_t ratio_points = 0;
  double ratio_median = 0.0;
  double ratio_max_relative_deviation = 0.0;

  double agreement() const {
    return points == 0 ? 1.0 : static_cast<double>(agreeing) / static_cast<double>(points);
  }
};

AgreementSummary summarize_agreement(std::span<const OracleComparison> comparisons,
                                     const OracleTolerances& tol = {});

// ---------------------------------------------------------------------------
// Empirical observability Gramian.

struct GramianOptions {
  double delta = 1e-4;   // relative to each state scale
  double window = 1e-4;  // s
  double dt = 1e-5;      // s
  /// Per-state scales; empty means max(1, |x_i|).
  std::vector<double> scales;
  bool parallel = true;
};

struct GramianSummary {
  double window = 0.0;
  Eigen::MatrixXd gramian;
  Eigen::VectorXd singular_values;  // descending
  double min_singular_value = 0.0;
  double max_singular_value = 0.0;
  double condition_number = 0.0;  // inf when the smallest is zero
  double ratio = 0.0;             // min / max, 0 when max is zero
  Eigen::VectorXd unobservable_direction;
};

/// Singular values of a symmetric positive semidefinite Gramian (descending)
/// and its least observable direction.
GramianSummary summarize_gramian(const Eigen::MatrixXd& gramian, double window);

/// Perturbs each state of x0 by +-delta*scale_i, re-simulates over the window
/// with the same input and integrates outer products of the output
/// differences (trapezoid rule). The 2n simulations are independent and run
/// in parallel when options.parallel is set.
template <typename Model>
GramianSummary empirical_gramian(const Model& model, const InputFunction<Model>& input,
                                 const OutputMap& output, const typename Model::State& x0,
                                 double t0, const GramianOptions& options) {
  if (!(options.delta > 0.0)) throw ValidationError("gramian.delta", "must be positive");
  if (!(options.window > 0.0)) throw ValidationError("gramian.window", "must be positive");
  if (!(options.dt > 0.0)) throw ValidationError("gramian.dt", "must be positive");
  constexpr int n = Model::kDim;
  const auto steps =
      static_cast<std::size_t>(std::max(1.0, std::round(options.window / options.dt)));

  std::vector<double> scale(n);
  for (int i = 0; i < n; ++i) {
    scale[i] = options.scales.empty() ? std::max(1.0, std::abs(x0[i])) : options.scales.at(i);
  }

  // responses[i] holds (y+ - y-) / (2 delta scale_i) stacked over time.
  std::vector<Eigen::MatrixXd> responses(n);
  std::vector<std::string> errors(n);
#pragma omp parallel for schedule(dynamic) if (options.parallel)
  for (int i = 0; i < n; ++i) {
    try {
      const double h = options.delta * scale[i];
      typename Model::State xp = x0, xm = x0;
      xp[i] += h;
      xm[i] -= h;
      const auto tp = integrate(model, xp, input, options.dt, steps, t0);
      const auto tm = integrate(model, xm, input, options.dt, steps, t0);
      Eigen::MatrixXd r;
      for (std::size_t k = 0; k < tp.size(); ++k) {
        const DynVector d = (output(DynVector(tp.samples[k].state)) -
                             output(DynVector(tm.samples[k].state))) /
                            (2.0 * h);
        if (k == 0) r.resize(d.size(), static_cast<Eigen::Index>(tp.size()));
        r.col(static_cast<Eigen::Index>(k)) = d;
      }
      responses[i] = std::move(r);
    } catch (const std::exception& e) {
      errors[i] = e.what();
    }
  }
  for (int i = 0; i < n; ++i) {
    if (!errors[i].empty()) throw DivergenceError(0, "gramian perturbation: " + errors[i]);
  }

  Eigen::MatrixXd W = Eigen::MatrixXd::Zero(n, n);
  const auto cols = responses[0].cols();
  for (Eigen::Index k = 0; k < cols; ++k) {
    const double w = (k == 0 || k == cols - 1) ? 0.5 * options.dt : options.dt;
    for (int i = 0; i < n; ++i) {
      for (int j = i; j < n; ++j) {
        W(i, j) += w * responses[i].col(k).dot(responses[j].col(k));
      }
    }
  }
  W.template triangularView<Eigen::StrictlyLower>() = W.transpose();
  return summarize_gramian(W, static_cast<double>(steps) * options.dt);
}

/// Gramian over a window starting at sample `start` of a recorded trajectory.
template <typename Model>
GramianSummary empirical_gramian(const Model& model, const InputFunction<Model>& input,
                                 const OutputMap& output, const Trajectory<Model>& trajectory,
                                 std::size_t start, GramianOptions options) {
  if (start >= trajectory.size()) throw ValidationError("gramian.start", "outside trajectory");
  options.dt = trajectory.dt;
  const double t0 = trajectory.samples[start].t;
  const double t_end = trajectory.samples.back().t;
  if (t0 + options.window > t_end + 0.5 * trajectory.dt) {
    throw ValidationError("gramian.window", "extends past the end of the trajectory");
  }
  return empirical_gramian(model, input, output, trajectory.samples[start].state, t0, options);
}

}  // namespace obsv
