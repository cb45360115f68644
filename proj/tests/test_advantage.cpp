#include <gtest/gtest.h>

#include <cmath>
#include <random>

#include "dualmem/advantage.hpp"
#include "oracles.hpp"

using namespace dualmem;

namespace {

double abs_sum(const std::vector<double>& v) {
  double s = 0;
  for (double x : v) s += std::fabs(x);
  return s;
}

double plain_sum(const std::vector<double>& v) {
  double s = 0;
  for (double x : v) s += x;
  return s;
}

}  // namespace

TEST(Advantage, CentersOnGroupMean) {
  std::vector<double> r = {1, 2, 3, 6};
  auto a = center_rewards(r);
  EXPECT_EQ(a, (std::vector<double>{-2, -1, 0, 3}));
}

TEST(Advantage, RejectsBadGroups) {
  std::vector<double> one = {1.0};
  EXPECT_THROW(center_rewards(one), AdvantageError);
  std::vector<double> nan = {1.0, std::nan("")};
  EXPECT_THROW(center_rewards(nan), AdvantageError);
  std::vector<double> r = {1, 2, 3};
  std::vector<std::size_t> seg = {2};
  EXPECT_THROW(step_group_advantages(r, seg), AdvantageError);
}

TEST(Advantage, CompensatedSumBeatsNaiveOnCancellation) {
  std::vector<double> v = {1e16, 1.0, -1e16, 1.0};
  EXPECT_EQ(compensated_sum(v), 2.0);
}

TEST(Advantage, PerRoundCenteringDiffersFromTrajectoryCentering) {
  std::vector<RolloutGroup> groups = {{1, {0, 2}}, {2, {10, 30}}};
  auto by_round = advantages_by_round(groups);
  ASSERT_EQ(by_round.size(), 2u);
  EXPECT_EQ(by_round[1], (std::vector<double>{-1, 1}));
  EXPECT_EQ(by_round[2], (std::vector<double>{-10, 10}));
  // Trajectory-level: mean of {0,2,10,30} is 10.5.
  auto flat = oracle::naive_centered({0, 2, 10, 30});
  EXPECT_EQ(flat, (std::vector<double>{-10.5, -8.5, -0.5, 19.5}));
  EXPECT_NE(flat[0], by_round[1][0]);
}

TEST(Advantage, SameRoundGroupsConcatenate) {
  std::vector<RolloutGroup> groups = {{3, {1, 3}}, {3, {0, 10}}};
  auto by_round = advantages_by_round(groups);
  EXPECT_EQ(by_round[3], (std::vector<double>{-1, 1, -5, 5}));
}

TEST(Advantage, StepSegments) {
  std::vector<double> r = {1, 3, 10, 20, 30};
  std::vector<std::size_t> seg = {2, 3};
  EXPECT_EQ(step_group_advantages(r, seg), (std::vector<double>{-1, 1, -10, 0, 10}));
}

TEST(Advantage, StdNormalizationUsesSampleStd) {
  std::vector<double> r = {0, 2};
  AdvantageOptions o;
  o.normalize_std = true;
  auto a = center_rewards(r, o);
  // sample std of {-1, 1} is sqrt(2)
  EXPECT_NEAR(a[1], 1.0 / (std::sqrt(2.0) + 1e-6), 1e-15);
  std::vector<double> flat = {4, 4, 4};
  for (double x : center_rewards(flat, o)) EXPECT_EQ(x, 0.0);
}

TEST(AdvantageProperty, ZeroSumShiftScaleAndOracle) {
  std::mt19937_64 rng(99);
  std::uniform_real_distribution<double> val(-50, 50);
  std::uniform_int_distribution<int> size(2, 16);
  for (int i = 0; i < 5000; ++i) {
    std::vector<double> r(size(rng));
    for (double& x : r) x = val(rng);
    auto a = center_rewards(r);
    ASSERT_LE(std::fabs(plain_sum(a)), 1e-9 * std::max(1.0, abs_sum(r)));

    auto ref = oracle::naive_centered(r);
    for (std::size_t k = 0; k < r.size(); ++k) ASSERT_NEAR(a[k], ref[k], 1e-9);

    // Integer-valued shift keeps every value exactly representable.
    std::vector<double> ri(r.size()), shifted(r.size()), scaled(r.size());
    for (std::size_t k = 0; k < r.size(); ++k) {
      ri[k] = std::round(r[k]);
      shifted[k] = ri[k] + 64.0;
      scaled[k] = ri[k] * 4.0;
    }
    auto ai = center_rewards(ri), as = center_rewards(shifted), ac = center_rewards(scaled);
    for (std::size_t k = 0; k < r.size(); ++k) {
      ASSERT_NEAR(as[k], ai[k], 1e-12);
      ASSERT_NEAR(ac[k], 4.0 * ai[k], 1e-12);
    }
  }
}

TEST(Objective, HandTable) {
  // rho x A -> min(rho A, clip(rho, 0.72, 1.28) A), worked out by hand.
  struct Row {
    double rho, a, expected;
  };
  const Row table[] = {
      {0.5, -1, -0.72}, {0.5, 0, 0}, {0.5, 1, 0.5},
      {0.72, -1, -0.72}, {0.72, 0, 0}, {0.72, 1, 0.72},
      {1.0, -1, -1.0},  {1.0, 0, 0}, {1.0, 1, 1.0},
      {1.28, -1, -1.28}, {1.28, 0, 0}, {1.28, 1, 1.28},
      {2.0, -1, -2.0},  {2.0, 0, 0}, {2.0, 1, 1.28},
  };
  for (const Row& row : table) {
    ObjectiveInputs in;
    in.ratios = {row.rho};
    in.advantages = {row.a};
    EXPECT_NEAR(clipped_objective(in), row.expected, 1e-12) << row.rho << " " << row.a;
  }
}

TEST(Objective, RatioOneIsMeanAdvantage) {
  ObjectiveInputs in;
  in.ratios = {1, 1, 1, 1};
  in.advantages = {-3, 0.5, 2, 4};
  EXPECT_EQ(clipped_objective(in), 0.875);
}

TEST(Objective, KlPenaltySubtracts) {
  ObjectiveInputs in;
  in.ratios = {1, 1};
  in.advantages = {1, 3};
  in.kl = {0.5, 1.5};
  in.kl_coef = 0.1;
  EXPECT_NEAR(clipped_objective(in), 2.0 - 0.1, 1e-15);
}

TEST(Objective, InsideClipBandMatchesUnclipped) {
  std::mt19937_64 rng(5);
  std::uniform_real_distribution<double> rho(0.75, 1.25), adv(-3, 3);
  for (int i = 0; i < 500; ++i) {
    ObjectiveInputs in;
    double expect = 0;
    for (int k = 0; k < 6; ++k) {
      in.ratios.push_back(rho(rng));
      in.advantages.push_back(adv(rng));
      expect += in.ratios.back() * in.advantages.back();
    }
    ASSERT_NEAR(clipped_objective(in), expect / 6.0, 1e-12);
  }
}

TEST(Objective, RejectsBadInputs) {
  ObjectiveInputs in;
  EXPECT_THROW(clipped_objective(in), AdvantageError);
  in.ratios = {1};
  in.advantages = {1, 2};
  EXPECT_THROW(clipped_objective(in), AdvantageError);
  in.advantages = {1};
  in.clip_epsilon = 1.0;
  EXPECT_THROW(clipped_objective(in), AdvantageError);
  in.clip_epsilon = 0.2;
  in.ratios = {0.0};
  EXPECT_THROW(clipped_objective(in), AdvantageError);
  in.ratios = {1};
  in.kl_coef = -1;
  EXPECT_THROW(clipped_objective(in), AdvantageError);
}
