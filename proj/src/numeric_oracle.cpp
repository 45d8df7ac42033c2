#include "obsv/numeric_oracle.hpp"

#include <algorithm>
#include <limits>
#include <random>
#include <sstream>
#include <stdexcept>

namespace obsv {
namespace {

DynVector rk4_flow(const VectorField& f, const DynVector& x, double s) {
  const DynVector k1 = f(x);
  const DynVector k2 = f(x + 0.5 * s * k1);
  const DynVector k3 = f(x + 0.5 * s * k2);
  const DynVector k4 = f(x + s * k3);
  return x + (s / 6.0) * (k1 + 2.0 * k2 + 2.0 * k3 + k4);
}

// L_f^order h at x. Each level is a sixth-order central difference in time
// of the previous level along the simulated flow.
DynVector lie_derivative(int order, const VectorField& f, const OutputMap& h, const DynVector& x,
                         double step) {
  if (order == 0) return h(x);
  auto along = [&](double s) { return lie_derivative(order - 1, f, h, rk4_flow(f, x, s), step); };
  const DynVector d1 = along(step) - along(-step);
  const DynVector d2 = along(2.0 * step) - along(-2.0 * step);
  const DynVector d3 = along(3.0 * step) - along(-3.0 * step);
  return (45.0 * d1 - 9.0 * d2 + d3) / (60.0 * step);
}

constexpr double kFlowStepFactor = 0.2;

double component_step(double relative, double xi) { return relative * std::max(1.0, std::abs(xi)); }

double auto_flow_step(const VectorField& f, const DynVector& x, double relative) {
  const Eigen::Index n = x.size();
  double norm = 0.0;
  Eigen::MatrixXd J(n, n);
  for (Eigen::Index j = 0; j < n; ++j) {
    const double h = component_step(relative, x[j]);
    DynVector xp = x, xm = x;
    xp[j] += h;
    xm[j] -= h;
    J.col(j) = (f(xp) - f(xm)) / (2.0 * h);
  }
  for (Eigen::Index i = 0; i < n; ++i) {
    double row = 0.0;
    for (Eigen::Index j = 0; j < n; ++j) {
      row += std::abs(J(i, j)) * std::max(1.0, std::abs(x[j])) / std::max(1.0, std::abs(x[i]));
    }
    norm = std::max(norm, row);
  }
  if (!std::isfinite(norm)) throw NonFiniteError("non-finite Jacobian while sizing the flow step");
  return kFlowStepFactor / std::max(norm, 1e-3);
}

}  // namespace

ObservabilityMatrix build_observability_matrix(const VectorField& field, const OutputMap& output,
                                               const DynVector& x, int n_orders,
                                               const LieOptions& options) {
  if (n_orders < 1) throw std::invalid_argument("n_orders must be at least 1");
  const Eigen::Index n = x.size();
  const Eigen::Index m = output(x).size();
  if (m * n_orders != n) {
    std::ostringstream msg;
    msg << "outputs (" << m << ") x orders (" << n_orders << ") must equal state dimension ("
        << n << ")";
    throw std::invalid_argument(msg.str());
  }
  const double step =
      options.flow_step > 0.0 ? options.flow_step : auto_flow_step(field, x, options.relative_step);

  ObservabilityMatrix out;
  out.state_dim = static_cast<int>(n);
  out.orders = n_orders;
  out.entries.resize(n, n);
  for (Eigen::Index j = 0; j < n; ++j) {
    const double h = component_step(options.relative_step, x[j]);
    DynVector xp = x, xm = x;
    xp[j] += h;
    xm[j] -= h;
    for (int k = 0; k < n_orders; ++k) {
      const DynVector g =
          (lie_derivative(k, field, output, xp, step) - lie_derivative(k, field, output, xm, step)) /
          (2.0 * h);
      for (Eigen::Index r = 0; r < m; ++r) {
        const Eigen::Index row = k * m + r;
        if (!std::isfinite(g[r])) {
          std::ostringstream msg;
          msg << "non-finite gradient at entry (" << row << ", " << j << ")";
          throw NonFiniteError(msg.str());
        }
        out.entries(row, j) = g[r];
      }
    }
  }
  return out;
}

DeterminantRank determinant_and_rank(const Eigen::MatrixXd& m, double tolerance) {
  if (m.rows() != m.cols()) throw std::invalid_argument("determinant needs a square matrix");
  DeterminantRank out;
  out.determinant = m.fullPivLu().determinant();
  Eigen::JacobiSVD<Eigen::MatrixXd> svd(m);
  out.singular_values = svd.singularValues();
  const double largest = out.singular_values.size() ? out.singular_values[0] : 0.0;
  for (Eigen::Index i = 0; i < out.singular_values.size(); ++i) {
    if (largest > 0.0 && out.singular_values[i] > tolerance * largest) ++out.rank;
  }
  return out;
}

Eigen::MatrixXd equilibrate(const Eigen::MatrixXd& m) {
  Eigen::MatrixXd e = m;
  for (Eigen::Index j = 0; j < e.cols(); ++j) {
    const double c = e.col(j).norm();
    if (c > 0.0) e.col(j) /= c;
  }
  for (Eigen::Index i = 0; i < e.rows(); ++i) {
    const double r = e.row(i).norm();
    if (r > 0.0) e.row(i) /= r;
  }
  return e;
}

Eigen::Vector2d pmsm_stationary_voltage(const PmsmOperatingPoint& op, const PmsmParams& P) {
  const CurrentPoint& c = op.currents;
  const double w = op.omega_e;
  const Dq u{P.L_d * c.di_d + P.R_s * c.i_d - w * P.L_q * c.i_q,
             P.L_q * c.di_q + P.R_s * c.i_q + w * (P.L_d * c.i_d + P.K_e)};
  const AlphaBeta ab = inverse_park(u, op.theta_e);
  return {ab.alpha, ab.beta};
}

DynVector pmsm_stationary_currents(const DynVector& x) {
  const AlphaBeta ab = inverse_park({x[0], x[1]}, x[2]);
  DynVector y(2);
  y << ab.alpha, ab.beta;
  return y;
}

ObservabilityMatrix pmsm_observability_matrix(const PmsmOperatingPoint& op,
                                              const PmsmParams& params,
                                              const LieOptions& options) {
  const PmsmModel model(params, MechanicalMode::constant_speed, InputFrame::stationary);
  const PmsmModel::State x{op.currents.i_d, op.currents.i_q, op.theta_e, op.omega_e};
  return build_observability_matrix(model, OutputMap(pmsm_stationary_currents), x,
                                    pmsm_stationary_voltage(op, params), 2, options);
}

OracleComparison compare_oracle_point(const PmsmOperatingPoint& op, const PmsmParams& params,
                                      const OracleTolerances& tol, const LieOptions& lie) {
  OracleComparison out;
  out.closed_form_det = pmsm_determinant(op.currents, op.omega_e, params);
  out.closed_form_scale = pmsm_determinant_scale(op.currents, op.omega_e, params);
  out.closed_form_zero =
      std::abs(out.closed_form_det) <= tol.determinant_relative * out.closed_form_scale ||
      std::abs(out.closed_form_det) < tol.determinant_absolute;
  try {
    const ObservabilityMatrix m = pmsm_observability_matrix(op, params, lie);
    const DeterminantRank raw = determinant_and_rank(m.entries, tol.rank_relative);
    const DeterminantRank eq = determinant_and_rank(equilibrate(m.entries), tol.rank_relative);
    out.numeric_det = raw.determinant;
    out.rank = eq.rank;
    const auto& sv = eq.singular_values;
    out.sigma_ratio = sv[0] > 0.0 ? sv[sv.size() - 1] / sv[0] : 0.0;
    out.numeric_deficient = eq.rank < m.state_dim;
  } catch (const std::exception&) {
    out.failed = true;
  }
  return out;
}

std::vector<OracleSample> random_oracle_points(std::size_t n, std::uint64_t seed) {
  std::mt19937_64 rng(seed);
  auto uniform = [&rng](double a, double b) { return std::uniform_real_distribution<double>(a, b)(rng); };
  auto log_uniform = [&](double a, double b) { return std::exp(uniform(std::log(a), std::log(b))); };

  std::vector<OracleSample> out;
  out.reserve(n);
  while (out.size() < n) {
    const std::size_t kind = out.size() % 10;
    OracleSample s;
    PmsmParams& P = s.params;
    P.L_d = log_uniform(1e-3, 5e-2);
    P.L_q = log_uniform(1e-3, 8e-2);
    P.K_e = log_uniform(1e-2, 0.5);
    P.R_s = log_uniform(5e-2, 5.0);
    P.p = std::uniform_int_distribution<int>(1, 6)(rng);
    P.J = log_uniform(1e-4, 1e-1);

    CurrentPoint& c = s.point.currents;
    c.i_d = uniform(-20.0, 20.0);
    c.i_q = uniform(-20.0, 20.0);
    c.di_d = uniform(-2000.0, 2000.0);
    c.di_q = uniform(-2000.0, 2000.0);
    s.point.omega_e = uniform(-1000.0, 1000.0);
    s.point.theta_e = uniform(-M_PI, M_PI);

    const double dL = P.delta_L();
    const double psi_d = dL * c.i_d + P.K_e;
    const double psi_q = dL * c.i_q;
    const double psi2 = psi_d * psi_d + psi_q * psi_q;
    if (std::sqrt(psi2) < 1e-3) continue;

    if (kind == 6 || kind == 7) {
      // Speed equal to the phase rate of (dL i_d + K_e, dL i_q).
      const double rate = (psi_d * dL * c.di_q - psi_q * dL * c.di_d) / psi2;
      if (std::abs(rate) > 5000.0) continue;
      s.point.omega_e = rate;
    } else if (kind == 8) {
      P.L_q = P.L_d;
      s.point.omega_e = 0.0;
    } else if (kind == 9) {
      // Standstill with the currents sliding along their own phase ray.
      const double speed = uniform(-2000.0, 2000.0);
      const double rho = std::sqrt(psi2);
      c.di_d = speed * psi_d / rho;
      c.di_q = speed * psi_q / rho;
      s.point.omega_e = 0.0;
    }
    out.push_back(s);
  }
  return out;
}

AgreementSummary summarize_agreement(std::span<const OracleComparison> comparisons,
                                     const OracleTolerances& tol) {
  AgreementSummary out;
  std::vector<double> ratios;
  for (const OracleComparison& c : comparisons) {
    ++out.points;
    if (c.agree()) ++out.agreeing;
    if (c.closed_form_zero) ++out.zero_set;
    if (!c.failed && !c.closed_form_zero &&
        std::abs(c.closed_form_det) > tol.ratio_region * c.closed_form_scale) {
      ratios.push_back(c.numeric_det / c.closed_form_det);
    }
  }
  out.ratio_points = ratios.size();
  if (ratios.empty()) return out;
  std::vector<double> sorted = ratios;
  std::nth_element(sorted.begin(), sorted.begin() + static_cast<long>(sorted.size() / 2), sorted.end());
  out.ratio_median = sorted[sorted.size() / 2];
  for (double r : ratios) {
    out.ratio_max_relative_deviation =
        std::max(out.ratio_max_relative_deviation, std::abs(r / out.ratio_median - 1.0));
  }
  return out;
}

GramianSummary summarize_gramian(const Eigen::MatrixXd& gramian, double window) {
  GramianSummary out;
  out.window = window;
  out.gramian = gramian;
  const Eigen::Index n = gramian.rows();
  Eigen::SelfAdjointEigenSolver<Eigen::MatrixXd> eig(gramian);
  std::vector<std::pair<double, Eigen::Index>> order;
  for (Eigen::Index i = 0; i < n; ++i) order.emplace_back(std::abs(eig.eigenvalues()[i]), i);
  std::stable_sort(order.begin(), order.end(),
                   [](const auto& a, const auto& b) { return a.first > b.first; });
  out.singular_values.resize(n);
  for (Eigen::Index i = 0; i < n; ++i) out.singular_values[i] = order[static_cast<std::size_t>(i)].first;
  out.max_singular_value = out.singular_values[0];
  out.min_singular_value = out.singular_values[n - 1];
  out.ratio = out.max_singular_value > 0.0 ? out.min_singular_value / out.max_singular_value : 0.0;
  out.condition_number = out.min_singular_value > 0.0
                             ? out.max_singular_value / out.min_singular_value
                             : std::numeric_limits<double>::infinity();
  Eigen::VectorXd v = eig.eigenvectors().col(order.back().second);
  v.normalize();
  Eigen::Index big = 0;
  v.cwiseAbs().maxCoeff(&big);
  if (v[big] < 0.0) v = -v;
  out.unobservable_direction = v;
  return out;
}

}  // namespace obsv
