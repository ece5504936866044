// Copyright 2026 The DPGAN Authors.
//
// Licensed under the Apache License, Version 2.0 (the "License");
// you may not use this file except in compliance with the License.
// You may obtain a copy of the License at
//
//      http://www.apache.org/licenses/LICENSE-2.0
//
// Unless required by applicable law or agreed to in writing, software
// distributed under the License is distributed on an "AS IS" BASIS,
// WITHOUT WARRANTIES OR CONDITIONS OF ANY KIND, either express or implied.
// See the License for the specific language governing permissions and
// limitations under the License.

#include <gtest/gtest.h>

#include <cmath>
#include <vector>

#include "dpgan/error.hpp"
#include "dpgan/schedule.hpp"

namespace dpgan {
namespace {

// 1-based update indices at which the rung advanced.
std::vector<int> advances(ScheduleState& s, const std::vector<double>& trace) {
  std::vector<int> out;
  for (std::size_t i = 0; i < trace.size(); ++i) {
    const int before = s.rung_index;
    adaptive_update(s, trace[i]);
    if (s.rung_index != before) out.push_back(static_cast<int>(i + 1));
  }
  return out;
}

TEST(Ladder, DefaultValues) {
  const std::vector<int> expected = {1, 2, 5, 10, 20, 50, 100, 200, 500, 1000};
  EXPECT_EQ(default_ladder(1000), expected);
  EXPECT_EQ(default_ladder().back(), 1000000);
}

TEST(Ladder, GracePeriod) {
  EXPECT_EQ(grace_period(0.99), 200);
  EXPECT_EQ(grace_period(0.9), 20);
  EXPECT_EQ(grace_period(0.95), 40);
  EXPECT_EQ(grace_period(0.97), 67);
}

TEST(Schedule, HighAccuracyNeverAdvances) {
  ScheduleState s = ScheduleState::make(0.99, 0.6);
  EXPECT_TRUE(advances(s, std::vector<double>(10000, 0.9)).empty());
  EXPECT_EQ(s.current(), 1);
}

TEST(Schedule, ConstantHalfAdvancesEveryGracePeriod) {
  ScheduleState s = ScheduleState::make(0.99, 0.6);
  const auto got = advances(s, std::vector<double>(1000, 0.5));
  const std::vector<int> expected = {200, 400, 600, 800, 1000};
  EXPECT_EQ(got, expected);
  EXPECT_EQ(s.current(), 50);
}

TEST(Schedule, FirstObservationInitializesEma) {
  ScheduleState s = ScheduleState::make(0.99, 0.6);
  adaptive_update(s, 0.37);
  ASSERT_TRUE(s.ema.has_value());
  EXPECT_EQ(*s.ema, 0.37);
  adaptive_update(s, 1.0);
  EXPECT_DOUBLE_EQ(*s.ema, 0.99 * 0.37 + 0.01);
}

TEST(Schedule, StepTraceMatchesIndependentReplay) {
  std::vector<double> trace(300, 0.8);
  trace.resize(1000, 0.55);

  // Replay: a running EMA and a counter since the last change.
  std::vector<int> expected;
  double ema = trace[0];
  int since = 0;
  for (std::size_t i = 0; i < trace.size(); ++i) {
    if (i > 0) ema = 0.99 * ema + 0.01 * trace[i];
    ++since;
    if (ema < 0.6 && since >= 200) {
      expected.push_back(static_cast<int>(i + 1));
      since = 0;
    }
  }
  ASSERT_FALSE(expected.empty());
  EXPECT_EQ(expected.front(), 461);

  ScheduleState s = ScheduleState::make(0.99, 0.6);
  EXPECT_EQ(advances(s, trace), expected);
}

TEST(Schedule, RungNeverDecreases) {
  ScheduleState s = ScheduleState::make(0.9, 0.6);
  int prev = s.rung_index;
  for (int i = 0; i < 600; ++i) {
    adaptive_update(s, (i / 100) % 2 == 0 ? 0.1 : 0.99);
    ASSERT_GE(s.rung_index, prev);
    prev = s.rung_index;
    ASSERT_GE(*s.ema, 0.0);
    ASSERT_LE(*s.ema, 1.0);
  }
}

TEST(Schedule, ExhaustedLadderWarnsOnce) {
  ScheduleState s = ScheduleState::make(0.5, 0.6, {1, 2});
  ::testing::internal::CaptureStderr();
  for (int i = 0; i < 100; ++i) adaptive_update(s, 0.0);
  const std::string err = ::testing::internal::GetCapturedStderr();
  EXPECT_EQ(s.current(), 2);
  EXPECT_TRUE(s.exhausted_warned);
  std::size_t count = 0;
  for (std::size_t p = err.find("exhausted"); p != std::string::npos;
       p = err.find("exhausted", p + 1)) {
    ++count;
  }
  EXPECT_EQ(count, 1u);
}

TEST(Schedule, InvalidInputs) {
  ScheduleState s = ScheduleState::make(0.99, 0.6);
  EXPECT_THROW(adaptive_update(s, 1.5), ConfigError);
  EXPECT_THROW(adaptive_update(s, std::nan("")), ConfigError);
  EXPECT_THROW(ScheduleState::make(1.0, 0.6), ConfigError);
  EXPECT_THROW(ScheduleState::make(0.9, 0.0), ConfigError);
  EXPECT_THROW(ScheduleState::make(0.9, 0.6, {1, 1}), ConfigError);
}

}  // namespace
}  // namespace dpgan
