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

// Adaptive discriminator step frequency.
//
// Before every generator step the controller receives the discriminator's
// accuracy on the fresh fake batch and folds it into an exponential moving
// average. When the average is below the floor `d` and at least `grace`
// generator steps have passed since the last change, the number of
// discriminator steps per generator step moves one rung up the ladder
// 1, 2, 5, 10, 20, 50, ... It never moves down.

#pragma once

#include <cmath>
#include <cstdint>
#include <iostream>
#include <optional>
#include <vector>

#include "dpgan/error.hpp"

namespace dpgan {

// {1, 2, 5} x 10^k, ascending, up to and including `max_value`.
inline std::vector<int> default_ladder(int max_value = 1'000'000) {
  std::vector<int> ladder;
  for (long long scale = 1; scale <= max_value; scale *= 10) {
    for (int m : {1, 2, 5}) {
      if (m * scale <= max_value) ladder.push_back(static_cast<int>(m * scale));
    }
  }
  return ladder;
}

// ceil(2 / (1 - beta)), tolerant of the rounding in 1 - beta.
inline int grace_period(double beta) {
  return static_cast<int>(std::ceil(2.0 / (1.0 - beta) - 1e-9));
}

struct ScheduleState {
  double beta = 0.99;
  double floor = 0.6;
  std::vector<int> ladder = default_ladder();
  int rung_index = 0;
  std::optional<double> ema;
  int steps_since_change = 0;
  int grace = grace_period(0.99);
  bool exhausted_warned = false;

  static ScheduleState make(double beta, double floor,
                            std::vector<int> ladder = default_ladder()) {
    ScheduleState s;
    s.beta = beta;
    s.floor = floor;
    s.ladder = std::move(ladder);
    s.grace = grace_period(beta);
    s.validate();
    return s;
  }

  int current() const { return ladder[rung_index]; }

  void validate() const {
    if (!(beta > 0.0 && beta < 1.0)) throw ConfigError("beta must be in (0,1)");
    if (!(floor > 0.0 && floor < 1.0)) {
      throw ConfigError("accuracy floor must be in (0,1)");
    }
    if (ladder.empty()) throw ConfigError("empty step-frequency ladder");
    for (std::size_t i = 0; i < ladder.size(); ++i) {
      if (ladder[i] < 1 || (i > 0 && ladder[i] <= ladder[i - 1])) {
        throw ConfigError("ladder must be strictly increasing and positive");
      }
    }
    if (rung_index < 0 || rung_index >= static_cast<int>(ladder.size())) {
      throw ConfigError("rung index out of range");
    }
  }

  friend bool operator==(const ScheduleState&, const ScheduleState&) = default;
};

// Folds one fake-batch accuracy observation into the schedule and returns
// the discriminator step count to use until the next generator step.
inline int adaptive_update(ScheduleState& s, double fake_accuracy) {
  if (!(fake_accuracy >= 0.0 && fake_accuracy <= 1.0)) {
    throw ConfigError("fake accuracy must lie in [0, 1]");
  }
  s.ema = s.ema ? s.beta * *s.ema + (1.0 - s.beta) * fake_accuracy
                : fake_accuracy;
  s.steps_since_change += 1;
  if (*s.ema < s.floor && s.steps_since_change >= s.grace) {
    if (s.rung_index + 1 < static_cast<int>(s.ladder.size())) {
      s.rung_index += 1;
      s.steps_since_change = 0;
    } else if (!s.exhausted_warned) {
      std::cerr << "warning: step-frequency ladder exhausted at n_D="
                << s.current() << "\n";
      s.exhausted_warned = true;
    }
  }
  return s.current();
}

}  // namespace dpgan
