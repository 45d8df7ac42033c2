#include <gtest/gtest.h>

#include <cmath>
#include <random>

#include "obsv/numeric_oracle.hpp"
#include "obsv/trajectory_lab.hpp"

using namespace obsv;

namespace {

PmsmParams ipmsm() { return {0.01, 0.02, 0.1, 0.5, 4, 1e-3, 0.0}; }
PmsmParams spmsm() { return {0.01, 0.01, 0.1, 0.5, 4, 1e-3, 0.0}; }

// Laplace expansion along the first row; independent of any factorization.
double cofactor_det(const Eigen::MatrixXd& m) {
  const Eigen::Index n = m.rows();
  if (n == 1) return m(0, 0);
  double det = 0.0;
  for (Eigen::Index j = 0; j < n; ++j) {
    Eigen::MatrixXd minor(n - 1, n - 1);
    for (Eigen::Index r = 1; r < n; ++r) {
      for (Eigen::Index c = 0, cc = 0; c < n; ++c) {
        if (c == j) continue;
        minor(r - 1, cc++) = m(r, c);
      }
    }
    det += ((j % 2) ? -1.0 : 1.0) * m(0, j) * cofactor_det(minor);
  }
  return det;
}

struct Linear {
  static constexpr int kDim = 2;
  using State = Eigen::Vector2d;
  using Input = Eigen::Matrix<double, 1, 1>;
  Eigen::Matrix2d A;
  State derivative(const State& x, const Input&) const { return A * x; }
  State normalize(State x) const { return x; }
};

// x' = x^2 reaches infinity at t = 1 from x = 1.
struct Blow {
  static constexpr int kDim = 1;
  using State = Eigen::Matrix<double, 1, 1>;
  using Input = Eigen::Matrix<double, 1, 1>;
  State derivative(const State& x, const Input&) const { return x.cwiseProduct(x); }
  State normalize(State x) const { return x; }
};

}  // namespace

TEST(ObservabilityMatrix, LinearSystemRows) {
  Eigen::Matrix4d A;
  A << 0, 1, 0, 0,  //
      -2, -0.3, 1, 0,  //
      0, 0, 0, 1,  //
      0.5, 0, -4, -0.1;
  Eigen::Matrix<double, 2, 4> C;
  C << 1, 0.5, 0, 0,  //
      0, 0, 1, -0.2;
  const VectorField f = [&](const DynVector& x) -> DynVector { return A * x; };
  const OutputMap y = [&](const DynVector& x) -> DynVector { return C * x; };
  const DynVector x = (DynVector(4) << 0.3, -1.2, 2.0, 0.7).finished();
  const ObservabilityMatrix m = build_observability_matrix(f, y, x, 2);
  ASSERT_EQ(m.entries.rows(), 4);
  EXPECT_EQ(m.state_dim, 4);
  EXPECT_EQ(m.orders, 2);
  Eigen::Matrix4d expected;
  expected << C, C * A;
  EXPECT_LT((m.entries - expected).cwiseAbs().maxCoeff(), 1e-8);
}

TEST(ObservabilityMatrix, ModelOverload) {
  Linear lin;
  lin.A << 0, 1, -3, -0.5;
  const OutputMap y = [](const DynVector& x) -> DynVector { return x.head(1); };
  const ObservabilityMatrix m =
      build_observability_matrix(lin, y, Linear::State{1.0, 2.0}, Linear::Input::Zero(), 2);
  EXPECT_NEAR(m.entries(0, 0), 1.0, 1e-8);
  EXPECT_NEAR(m.entries(0, 1), 0.0, 1e-8);
  EXPECT_NEAR(m.entries(1, 0), 0.0, 1e-8);
  EXPECT_NEAR(m.entries(1, 1), 1.0, 1e-8);
}

TEST(ObservabilityMatrix, ShapeMismatch) {
  const VectorField f = [](const DynVector& x) -> DynVector { return -x; };
  const OutputMap y = [](const DynVector& x) -> DynVector { return x.head(1); };
  EXPECT_THROW(build_observability_matrix(f, y, DynVector::Zero(3), 2), std::invalid_argument);
  EXPECT_THROW(build_observability_matrix(f, y, DynVector::Zero(1), 0), std::invalid_argument);
}

TEST(ObservabilityMatrix, NonFiniteNamesEntry) {
  const VectorField f = [](const DynVector& x) -> DynVector { return -x; };
  const OutputMap y = [](const DynVector& x) -> DynVector {
    DynVector out(2);
    out << x[0], std::sqrt(x[1]);  // undefined for x_1 < 0
    return out;
  };
  const DynVector x = (DynVector(2) << 1.0, 0.0).finished();
  try {
    build_observability_matrix(f, y, x, 1);
    FAIL() << "expected NonFiniteError";
  } catch (const NonFiniteError& e) {
    EXPECT_NE(std::string(e.what()).find("(1, 1)"), std::string::npos) << e.what();
  }
}

TEST(DeterminantRank, Identity) {
  const DeterminantRank r = determinant_and_rank(Eigen::MatrixXd::Identity(4, 4), 1e-12);
  EXPECT_DOUBLE_EQ(r.determinant, 1.0);
  EXPECT_EQ(r.rank, 4);
}

TEST(DeterminantRank, DuplicatedRow) {
  Eigen::MatrixXd m = Eigen::MatrixXd::Random(4, 4);
  m.row(3) = m.row(1);
  const DeterminantRank r = determinant_and_rank(m, 1e-12);
  EXPECT_NEAR(r.determinant, 0.0, 1e-14);
  EXPECT_EQ(r.rank, 3);
}

TEST(DeterminantRank, MatchesCofactorExpansion) {
  std::mt19937_64 rng(41);
  std::uniform_real_distribution<double> u(-3, 3);
  for (int i = 0; i < 500; ++i) {
    Eigen::MatrixXd m(4, 4);
    for (Eigen::Index k = 0; k < m.size(); ++k) m.data()[k] = u(rng);
    const double ref = cofactor_det(m);
    const DeterminantRank r = determinant_and_rank(m, 1e-12);
    EXPECT_NEAR(r.determinant, ref, 1e-10 * std::abs(ref));
    EXPECT_EQ(r.rank, 4);
  }
}

TEST(DeterminantRank, NonSquareRejected) {
  EXPECT_THROW(determinant_and_rank(Eigen::MatrixXd::Zero(3, 4), 1e-12), std::invalid_argument);
}

TEST(DeterminantRank, SingularValuesDescending) {
  Eigen::MatrixXd m = Eigen::MatrixXd::Random(5, 5);
  const DeterminantRank r = determinant_and_rank(m, 1e-12);
  for (Eigen::Index i = 1; i < r.singular_values.size(); ++i) {
    EXPECT_GE(r.singular_values[i - 1], r.singular_values[i]);
  }
}

TEST(PmsmMatrix, SurfaceMountedStandstillIsRankDeficient) {
  const PmsmOperatingPoint op{{1.0, 2.0, 100.0, -50.0}, 0.0, 0.4};
  const OracleComparison c = compare_oracle_point(op, spmsm());
  EXPECT_TRUE(c.closed_form_zero);
  EXPECT_TRUE(c.numeric_deficient);
  EXPECT_LE(c.rank, 3);
}

TEST(PmsmMatrix, SurfaceMountedRunningIsFullRank) {
  const PmsmOperatingPoint op{{1.0, 2.0, 100.0, -50.0}, 100.0, 0.4};
  const OracleComparison c = compare_oracle_point(op, spmsm());
  EXPECT_FALSE(c.closed_form_zero);
  EXPECT_FALSE(c.numeric_deficient);
  EXPECT_EQ(c.rank, 4);
}

TEST(PmsmMatrix, DeterminantIsMinusClosedForm) {
  std::mt19937_64 rng(43);
  std::uniform_real_distribution<double> u(-1, 1);
  for (int i = 0; i < 100; ++i) {
    PmsmParams p = ipmsm();
    p.L_d = 0.005 + 0.02 * std::abs(u(rng));
    const PmsmOperatingPoint op{{10 * u(rng), 10 * u(rng), 1000 * u(rng), 1000 * u(rng)},
                                500 * u(rng), M_PI * u(rng)};
    const OracleComparison c = compare_oracle_point(op, p);
    if (std::abs(c.closed_form_det) < 1e-3 * c.closed_form_scale) continue;
    EXPECT_NEAR(c.numeric_det / c.closed_form_det, -1.0, 1e-4);
  }
}

TEST(PmsmMatrix, PhaseRateSpeedIsRankDeficient) {
  const PmsmParams p = ipmsm();
  const CurrentPoint cur{2.0, -3.0, 400.0, 250.0};
  const PmsmOperatingPoint op{cur, theta_O_rate(cur, p), 1.1};
  const OracleComparison c = compare_oracle_point(op, p);
  EXPECT_TRUE(c.closed_form_zero);
  EXPECT_TRUE(c.numeric_deficient);
}

TEST(PmsmMatrix, StationaryVoltageReproducesRates) {
  const PmsmParams p = ipmsm();
  const PmsmOperatingPoint op{{2.0, -3.0, 400.0, 250.0}, 80.0, 0.7};
  const Eigen::Vector2d u = pmsm_stationary_voltage(op, p);
  const PmsmModel model(p, MechanicalMode::constant_speed, InputFrame::stationary);
  const PmsmModel::State d = model.derivative(PmsmModel::State{2.0, -3.0, 0.7, 80.0}, u);
  EXPECT_NEAR(d[0], 400.0, 1e-9);
  EXPECT_NEAR(d[1], 250.0, 1e-9);
}

TEST(OracleAgreement, RandomPoints) {
  const auto pts = random_oracle_points(300, 1234);
  ASSERT_EQ(pts.size(), 300u);
  std::vector<OracleComparison> cmp;
  for (const OracleSample& s : pts) cmp.push_back(compare_oracle_point(s.point, s.params));
  const AgreementSummary s = summarize_agreement(cmp);
  EXPECT_EQ(s.agreeing, s.points);
  EXPECT_GT(s.zero_set, 60u);
  EXPECT_GT(s.ratio_points, 100u);
  EXPECT_NEAR(s.ratio_median, -1.0, 1e-4);
  EXPECT_LT(s.ratio_max_relative_deviation, 0.01);
}

TEST(OracleAgreement, RandomPointsDeterministic) {
  const auto a = random_oracle_points(50, 9);
  const auto b = random_oracle_points(50, 9);
  for (std::size_t i = 0; i < a.size(); ++i) {
    EXPECT_EQ(a[i].params.L_d, b[i].params.L_d);
    EXPECT_EQ(a[i].point.omega_e, b[i].point.omega_e);
    EXPECT_EQ(a[i].point.currents.di_q, b[i].point.currents.di_q);
  }
}

TEST(OracleAgreement, StepRobustness) {
  // Zero-set classification must not change when the gradient step moves by x10 either way.
  const auto pts = random_oracle_points(200, 77);
  for (double h : {1e-4, 1e-6}) {
    LieOptions lie;
    lie.relative_step = h;
    for (const OracleSample& s : pts) {
      const OracleComparison ref = compare_oracle_point(s.point, s.params);
      const OracleComparison alt = compare_oracle_point(s.point, s.params, {}, lie);
      EXPECT_EQ(ref.numeric_deficient, alt.numeric_deficient) << "h = " << h;
      EXPECT_TRUE(alt.agree()) << "h = " << h;
    }
  }
}

TEST(OracleAgreement, SummaryCountsFailures) {
  OracleComparison ok;
  ok.closed_form_zero = ok.numeric_deficient = true;
  OracleComparison bad;
  bad.closed_form_zero = true;
  OracleComparison failed;
  failed.failed = true;
  const std::vector<OracleComparison> v{ok, bad, failed};
  const AgreementSummary s = summarize_agreement(v);
  EXPECT_EQ(s.points, 3u);
  EXPECT_EQ(s.agreeing, 1u);
}

TEST(Gramian, ZeroOutput) {
  Linear lin;
  lin.A << 0, 1, -1, 0;
  const InputFunction<Linear> in = [](double) { return Linear::Input::Zero(); };
  const OutputMap y = [](const DynVector&) -> DynVector { return DynVector::Zero(1); };
  const GramianSummary g = empirical_gramian(lin, in, y, Linear::State{1, 0}, 0.0, {});
  EXPECT_EQ(g.max_singular_value, 0.0);
  EXPECT_EQ(g.min_singular_value, 0.0);
  EXPECT_EQ(g.ratio, 0.0);
  EXPECT_TRUE(std::isinf(g.condition_number));
}

TEST(Gramian, LinearOscillatorMatchesAnalytic) {
  // y = x_1 of a unit-frequency oscillator: W(T) = int [cos^2, cos sin; cos sin, sin^2].
  Linear lin;
  lin.A << 0, 1, -1, 0;
  const InputFunction<Linear> in = [](double) { return Linear::Input::Zero(); };
  const OutputMap y = [](const DynVector& x) -> DynVector { return x.head(1); };
  GramianOptions opts;
  opts.window = M_PI;
  opts.dt = M_PI / 2000;
  opts.scales = {1.0, 1.0};
  const GramianSummary g = empirical_gramian(lin, in, y, Linear::State{0.3, 0.1}, 0.0, opts);
  EXPECT_NEAR(g.gramian(0, 0), M_PI / 2, 1e-5);
  EXPECT_NEAR(g.gramian(1, 1), M_PI / 2, 1e-5);
  EXPECT_NEAR(g.gramian(0, 1), 0.0, 1e-5);
  EXPECT_NEAR(g.gramian(0, 1), g.gramian(1, 0), 0.0);
}

TEST(Gramian, SummaryInvariants) {
  Eigen::MatrixXd W(3, 3);
  W << 4, 1, 0, 1, 3, 0.5, 0, 0.5, 1e-9;
  const GramianSummary g = summarize_gramian(W, 0.1);
  for (Eigen::Index i = 0; i < 3; ++i) EXPECT_GE(g.singular_values[i], 0.0);
  EXPECT_GE(g.singular_values[0], g.singular_values[1]);
  EXPECT_GE(g.singular_values[1], g.singular_values[2]);
  EXPECT_NEAR(g.unobservable_direction.norm(), 1.0, 1e-10);
  EXPECT_NEAR(g.condition_number * g.ratio, 1.0, 1e-9);
  EXPECT_DOUBLE_EQ(g.window, 0.1);
}

TEST(Gramian, SurfaceMountedStandstillLosesPosition) {
  const PmsmModel model(spmsm(), MechanicalMode::constant_speed, InputFrame::stationary);
  const InputFunction<PmsmModel> in = [](double) { return PmsmModel::Input::Zero(); };
  GramianOptions opts;
  opts.window = 0.05;
  const GramianSummary g = empirical_gramian(model, in, OutputMap(pmsm_stationary_currents),
                                             PmsmModel::State{0.0, 0.0, 0.5, 0.0}, 0.0, opts);
  EXPECT_LT(g.ratio, 1e-6);
  Eigen::Index dominant = 0;
  g.unobservable_direction.cwiseAbs().maxCoeff(&dominant);
  EXPECT_EQ(dominant, 2);  // theta_e
}

TEST(Gramian, SurfaceMountedSpeedRestoresPosition) {
  // Same rotating currents with the rotor turning and at standstill.
  const PmsmParams p = spmsm();
  auto ratio = [&](double omega_e) {
    const Excitation exc =
        realize_voltages(CurrentProfile::rotating_vector(5.0, 2 * M_PI * 10, 0.05), p,
                         MechanicalMode::constant_speed, omega_e, 0.0);
    const PmsmModel model(p, MechanicalMode::constant_speed, InputFrame::stationary);
    const InputFunction<PmsmModel> in = [&](double t) { return exc.stationary_voltage(t); };
    GramianOptions opts;
    opts.window = 0.05;
    return empirical_gramian(model, in, OutputMap(pmsm_stationary_currents),
                             PmsmModel::to_vector(exc.initial_state()), 0.0, opts)
        .ratio;
  };
  const double running = ratio(100.0);
  const double standstill = ratio(0.0);
  EXPECT_GT(running, 1e-5);
  EXPECT_GT(running, 1e3 * standstill);
}

TEST(Gramian, SerialEqualsParallel) {
  const PmsmParams p = ipmsm();
  const Excitation exc = realize_voltages(CurrentProfile::rotating_vector(5.0, 60.0, 0.01), p,
                                          MechanicalMode::locked_rotor);
  const PmsmModel model(p, MechanicalMode::constant_speed, InputFrame::stationary);
  const InputFunction<PmsmModel> in = [&](double t) { return exc.stationary_voltage(t); };
  GramianOptions a, b;
  a.window = b.window = 1e-3;
  b.parallel = false;
  const auto x0 = PmsmModel::to_vector(exc.initial_state());
  const GramianSummary ga =
      empirical_gramian(model, in, OutputMap(pmsm_stationary_currents), x0, 0.0, a);
  const GramianSummary gb =
      empirical_gramian(model, in, OutputMap(pmsm_stationary_currents), x0, 0.0, b);
  EXPECT_EQ(ga.gramian, gb.gramian);
}

TEST(Gramian, TrajectoryWindowChecked) {
  Linear lin;
  lin.A << 0, 1, -1, 0;
  const InputFunction<Linear> in = [](double) { return Linear::Input::Zero(); };
  const OutputMap y = [](const DynVector& x) -> DynVector { return x.head(1); };
  const auto traj = integrate(lin, Linear::State{1, 0}, in, 1e-3, 100);
  GramianOptions opts;
  opts.window = 0.05;
  EXPECT_NO_THROW(empirical_gramian(lin, in, y, traj, 50, opts));
  EXPECT_THROW(empirical_gramian(lin, in, y, traj, 80, opts), ValidationError);
  EXPECT_THROW(empirical_gramian(lin, in, y, traj, 500, opts), ValidationError);
  opts.delta = 0.0;
  EXPECT_THROW(empirical_gramian(lin, in, y, traj, 0, opts), ValidationError);
}

TEST(Gramian, DivergenceReported) {
  const InputFunction<Blow> in = [](double) { return Blow::Input::Zero(); };
  const OutputMap y = [](const DynVector& x) -> DynVector { return x; };
  GramianOptions opts;
  opts.window = 5.0;
  opts.dt = 0.05;
  EXPECT_THROW(empirical_gramian(Blow{}, in, y, Blow::State::Constant(1.0), 0.0, opts),
               DivergenceError);
}
