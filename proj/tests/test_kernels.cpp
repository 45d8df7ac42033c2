#include <gtest/gtest.h>

#include <cstring>
#include <random>

#include "obsv/kernels.hpp"

using namespace obsv;

namespace {

// Bitwise comparison, so NaN fields compare equal to themselves.
bool same_bits(double a, double b) { return std::memcmp(&a, &b, sizeof a) == 0; }

}  // namespace

TEST(Kernels, PmsmSerialEqualsParallel) {
  const PmsmParams p{0.01, 0.02, 0.1, 0.5, 4, 1e-3, 0.0};
  std::mt19937_64 rng(5);
  std::uniform_real_distribution<double> u(-20, 20);
  std::vector<PmsmSampleInput> in(20000);
  for (auto& x : in) x = {{u(rng), u(rng), 50 * u(rng), 50 * u(rng)}, 10 * u(rng)};
  in[7] = {{10.0, 0.0, 1.0, 1.0}, 0.0};  // degenerate: dL i_d + K_e = 0, i_q = 0
  const auto a = evaluate_pmsm_serial(in, p, 1e-6);
  const auto b = evaluate_pmsm_parallel(in, p, 1e-6);
  ASSERT_EQ(a.size(), b.size());
  EXPECT_TRUE(a[7].verdict.degenerate);
  for (std::size_t i = 0; i < a.size(); ++i) {
    ASSERT_TRUE(same_bits(a[i].theta_rate, b[i].theta_rate)) << i;
    ASSERT_TRUE(same_bits(a[i].determinant, b[i].determinant)) << i;
    ASSERT_TRUE(same_bits(a[i].verdict.value, b[i].verdict.value)) << i;
    ASSERT_EQ(a[i].verdict.observable, b[i].verdict.observable) << i;
  }
}

TEST(Kernels, PmsmPointMatchesCore) {
  const PmsmParams p{0.01, 0.02, 0.1, 0.5, 4, 1e-3, 0.0};
  const PmsmSampleInput in{{2.0, -1.0, 30.0, 40.0}, 25.0};
  const PmsmEvaluation e = evaluate_pmsm_point(in, p, 1e-6);
  EXPECT_EQ(e.determinant, pmsm_determinant(in.currents, in.omega_e, p));
  EXPECT_EQ(e.verdict.value, pmsm_condition(in.currents, in.omega_e, p).value);
}

TEST(Kernels, ImSerialEqualsParallel) {
  const ImParams p{1.2, 1.0, 0.16, 0.16, 0.15, 0.02, 2};
  std::mt19937_64 rng(6);
  std::uniform_real_distribution<double> u(-1, 1);
  std::vector<ImSampleInput> in(20000);
  for (auto& x : in) x = {{u(rng), u(rng)}, {100 * u(rng), 100 * u(rng)}, 300 * u(rng), 1000 * u(rng)};
  const auto a = evaluate_im_serial(in, p, 1e-6);
  const auto b = evaluate_im_parallel(in, p, 1e-6);
  ASSERT_EQ(a.size(), b.size());
  for (std::size_t i = 0; i < a.size(); ++i) {
    ASSERT_TRUE(same_bits(a[i].six_state.value, b[i].six_state.value)) << i;
    ASSERT_TRUE(same_bits(a[i].five_state.value, b[i].five_state.value)) << i;
    ASSERT_TRUE(same_bits(a[i].acceleration_term, b[i].acceleration_term)) << i;
  }
}

TEST(Kernels, OracleSerialEqualsParallel) {
  const auto pts = random_oracle_points(300, 8);
  const auto a = compare_oracle_serial(pts);
  const auto b = compare_oracle_parallel(pts);
  ASSERT_EQ(a.size(), b.size());
  for (std::size_t i = 0; i < a.size(); ++i) {
    EXPECT_TRUE(same_bits(a[i].numeric_det, b[i].numeric_det)) << i;
    EXPECT_TRUE(same_bits(a[i].sigma_ratio, b[i].sigma_ratio)) << i;
    EXPECT_EQ(a[i].agree(), b[i].agree()) << i;
  }
}

TEST(Kernels, EmptyInput) {
  const PmsmParams p{0.01, 0.02, 0.1, 0.5, 4, 1e-3, 0.0};
  EXPECT_TRUE(evaluate_pmsm_parallel({}, p, 1e-6).empty());
  EXPECT_TRUE(compare_oracle_parallel({}).empty());
}
