// Scheduler arbitration over randomized request schedules.

#include <gtest/gtest.h>

#include "laws.hpp"

using namespace hls::testing;

TEST(SchedulerProperties, RandomizedRequestSchedules) {
  SchedulerTrials trials;
  std::mt19937_64 g(20261016);
  LawStats st;
  for (int i = 0; i < 10000; ++i) ASSERT_EQ(trials.run(i, g, st), "");
  // both regimes are exercised
  EXPECT_GT(st.contended, 1000);
  EXPECT_GT(st.uncontended, 1000);
}

TEST(SchedulerProperties, SameCycleRequestersUnderStaticPolicy) { EXPECT_EQ(same_cycle_static_order(), ""); }

TEST(SchedulerProperties, StaticPriorityCanStarveFifoCannot) { EXPECT_EQ(static_starvation(), ""); }
