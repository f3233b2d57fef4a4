#include <cmath>

#include <gtest/gtest.h>

#include "oracles.hpp"
#include "s2cubic/threshold.hpp"

using namespace s2cubic;

TEST(FindT, DefaultRunNearKnownValue) {
  const ThresholdResult r = find_T();
  EXPECT_NEAR(r.t_estimate, oracle::kThreshold, 5e-4);
  EXPECT_LE(r.bracket.high - r.bracket.low, 1e-4);
  EXPECT_EQ(classify_orbit(r.bracket.low).verdict, Verdict::EscapesToSaddleSide);
  EXPECT_EQ(classify_orbit(r.bracket.high).verdict, Verdict::ConvergesToNode);
  EXPECT_EQ(r.undetermined_count, 0);
  EXPECT_GT(r.evaluations, 10);
}

TEST(FindT, StableUnderTolerances) {
  IntegratorConfig loose;
  loose.rel_tol = loose.abs_tol = 1e-9;
  IntegratorConfig tight;
  tight.rel_tol = tight.abs_tol = 1e-11;
  const double a = find_T(1e-5, {}, loose).t_estimate;
  const double b = find_T(1e-5, {}, tight).t_estimate;
  EXPECT_NEAR(a, b, 2e-5);
  EXPECT_NEAR(b, oracle::kInvSqrt3, 2e-5);
}

TEST(FindT, InsensitiveToDecisionParameters) {
  ThresholdOptions o;
  o.classify.t_budget *= 2.0;
  o.classify.delta_trap *= 0.5;
  EXPECT_NEAR(find_T(1e-5, {}, {}, o).t_estimate, find_T(1e-5).t_estimate, 2e-5);
}

TEST(FindT, NarrowBracket) {
  const ThresholdResult r = find_T(1e-6, {-0.6, -0.55});
  EXPECT_NEAR(r.t_estimate, oracle::kInvSqrt3, 1e-5);
}

TEST(FindT, BadBracketReported) {
  try {
    find_T(1e-4, {-0.3, 0.0});
    FAIL();
  } catch (const Error& e) {
    EXPECT_EQ(e.kind(), ErrorKind::BadBracket);
  }
  EXPECT_THROW(find_T(1e-4, {-1.0, -0.9}), Error);
}

TEST(FindT, InvalidArguments) {
  for (double tol : {0.0, -1.0, std::nan("")}) {
    try {
      find_T(tol);
      FAIL();
    } catch (const Error& e) {
      EXPECT_EQ(e.kind(), ErrorKind::InvalidArgument);
    }
  }
  EXPECT_THROW(find_T(1e-4, {0.0, -1.0}), Error);
  EXPECT_THROW(find_T(1e-4, {-1.0, 0.5}), Error);
}

TEST(FindT, UndecidableOrbitsExhaustBudget) {
  ThresholdOptions o;
  o.classify.t_budget = 1e-6;
  o.budget_doublings = 0;
  o.max_undetermined = 0;
  try {
    find_T(1e-4, {}, {}, o);
    FAIL();
  } catch (const Error& e) {
    EXPECT_EQ(e.kind(), ErrorKind::BudgetExhausted);
  }
}

TEST(Window, BuiltFromResult) {
  ThresholdResult r;
  r.t_estimate = 0.5773;
  const TauWindow w = window_from(r, 1e-3);
  EXPECT_EQ(w.threshold, 0.5773);
  EXPECT_NO_THROW(Tau::checked(0.57, w));
  EXPECT_THROW(Tau::checked(0.577, w), Error);
}
