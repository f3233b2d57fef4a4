#include <cmath>
#include <numbers>

#include <gtest/gtest.h>

#include "s2cubic/verify.hpp"

using namespace s2cubic;
using namespace s2cubic::verify;

namespace {

bool all_pass(const std::vector<CheckResult>& rs) {
  for (const auto& r : rs) {
    if (!r.pass) return false;
  }
  return !rs.empty();
}

}  // namespace

TEST(RandomStates, DeterministicAndInRange) {
  const auto a = random_states(500, 17);
  const auto b = random_states(500, 17);
  const auto c = random_states(500, 18);
  ASSERT_EQ(a.size(), 500u);
  bool differs = false;
  for (std::size_t i = 0; i < a.size(); ++i) {
    EXPECT_EQ(a[i].phi, b[i].phi);
    EXPECT_EQ(a[i].p_y, b[i].p_y);
    differs = differs || a[i].phi != c[i].phi;
    EXPECT_GE(a[i].phi, 0.0);
    EXPECT_LT(a[i].phi, 2.0 * std::numbers::pi);
    for (double v : {a[i].y, a[i].p_phi, a[i].p_y}) {
      EXPECT_GE(v, -1.0);
      EXPECT_LE(v, 1.0);
    }
  }
  EXPECT_TRUE(differs);
}

TEST(MakeResult, NonFiniteFails) {
  EXPECT_FALSE(make_result("x", 1, std::nan(""), 1.0).pass);
  EXPECT_FALSE(make_result("x", 1, 2.0, 1.0).pass);
  EXPECT_TRUE(make_result("x", 1, 1.0, 1.0).pass);
}

TEST(Checks, AllPassInsideWindow) {
  for (double tau : {0.1, 0.3, 0.5}) {
    const Tau t = Tau::checked(tau);
    EXPECT_TRUE(all_pass(check_bracket(t, 100, 1))) << tau;
    EXPECT_TRUE(all_pass(check_conservation(t))) << tau;
    EXPECT_TRUE(all_pass(check_curvature(t))) << tau;
    EXPECT_TRUE(all_pass(check_consistency(t))) << tau;
    EXPECT_TRUE(all_pass(check_poles(t))) << tau;
  }
}

TEST(Checks, RoundSphere) {
  const Tau t = Tau::checked(0.0);
  EXPECT_TRUE(all_pass(check_bracket(t, 50, 3)));
  EXPECT_TRUE(all_pass(check_conservation(t)));
  const auto curv = check_curvature(t);
  ASSERT_EQ(curv.size(), 1u);
  EXPECT_EQ(curv[0].check, "curvature_round_sphere");
  EXPECT_TRUE(curv[0].pass);
}

TEST(Checks, NegativeTauConsistency) {
  for (double tau : {-0.1, -0.3, -0.5}) {
    EXPECT_TRUE(all_pass(check_consistency(Tau::checked(tau)))) << tau;
  }
}

TEST(Checks, CorruptedJetIsDetected) {
  Faults f;
  f.jet_d2_offset = 1e-3;
  const auto rs = check_bracket(Tau::checked(0.3), 20, 5, {}, {}, f);
  EXPECT_FALSE(rs[0].pass);
  EXPECT_FALSE(rs[2].pass);
  EXPECT_TRUE(rs[1].pass);
}

TEST(Checks, ReportSampleCounts) {
  const auto rs = check_bracket(Tau::checked(0.1), 37, 2);
  ASSERT_EQ(rs.size(), 4u);
  for (const auto& r : rs) EXPECT_EQ(r.n_samples, 37u);
}
