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

#include <filesystem>
#include <fstream>

#include "dpgan/checkpoint.hpp"
#include "dpgan/data.hpp"
#include "test_util.hpp"

namespace dpgan {
namespace {

TrainerState trained_state(bool adaptive, bool labels) {
  Dataset data = make_ring_dataset(4, 0.8, 0.05, 1000, 3);
  if (!labels) data = data.without_labels();
  TrainConfig c;
  c.total_d_steps = 40;
  c.batch = 16;
  c.eval_every = 10;
  c.seed = 17;
  c.adaptive = adaptive;
  c.model.d_hidden = {8};
  c.model.g_hidden = {8};
  Trainer tr(c, data);
  tr.run();
  return tr.state();
}

TEST(Checkpoint, RoundTripFixed) {
  const TrainerState s = trained_state(false, true);
  const TrainerState r = deserialize_checkpoint(serialize_checkpoint(s));
  EXPECT_TRUE(same_state(s, r));
  EXPECT_FALSE(r.schedule.has_value());
}

TEST(Checkpoint, RoundTripAdaptive) {
  const TrainerState s = trained_state(true, false);
  ASSERT_TRUE(s.schedule.has_value());
  const TrainerState r = deserialize_checkpoint(serialize_checkpoint(s));
  EXPECT_TRUE(same_state(s, r));
  EXPECT_EQ(*r.schedule, *s.schedule);
  EXPECT_TRUE(r.rng == s.rng);
}

TEST(Checkpoint, FreshStateRoundTrips) {
  Dataset data = make_ring_dataset(4, 0.8, 0.05, 100, 3);
  TrainConfig c;
  c.model.d_hidden = {4};
  c.model.g_hidden = {4};
  const TrainerState s = init_trainer(c, data);
  EXPECT_TRUE(same_state(s, deserialize_checkpoint(serialize_checkpoint(s))));
}

TEST(Checkpoint, FileRoundTripLeavesNoTemporary) {
  const auto dir = testing::temp_dir("ckpt_file");
  const std::string path = dir + "/a.ckpt";
  const TrainerState s = trained_state(true, true);
  save_checkpoint(s, path);
  EXPECT_FALSE(std::filesystem::exists(path + ".tmp"));
  EXPECT_TRUE(same_state(s, load_checkpoint(path)));
}

TEST(Checkpoint, DetectsBadMagic) {
  auto bytes = serialize_checkpoint(trained_state(false, false));
  bytes[0] = 'X';
  try {
    deserialize_checkpoint(bytes);
    FAIL();
  } catch (const IoError& e) {
    EXPECT_EQ(e.offset(), 0);
  }
}

TEST(Checkpoint, DetectsVersionMismatch) {
  auto bytes = serialize_checkpoint(trained_state(false, false));
  bytes[8] = 99;
  try {
    deserialize_checkpoint(bytes);
    FAIL();
  } catch (const IoError& e) {
    EXPECT_EQ(e.offset(), 8);
  }
}

TEST(Checkpoint, DetectsTruncation) {
  const auto bytes = serialize_checkpoint(trained_state(false, false));
  for (std::size_t keep : {std::size_t{0}, std::size_t{5}, std::size_t{12},
                           bytes.size() / 2, bytes.size() - 1}) {
    std::vector<unsigned char> cut(bytes.begin(), bytes.begin() + keep);
    try {
      deserialize_checkpoint(cut);
      FAIL() << keep;
    } catch (const IoError& e) {
      EXPECT_GE(e.offset(), 0);
      EXPECT_LE(e.offset(), static_cast<std::int64_t>(keep));
    }
  }
}

TEST(Checkpoint, DetectsCorruption) {
  auto bytes = serialize_checkpoint(trained_state(false, false));
  bytes[bytes.size() / 2] ^= 0x40;
  EXPECT_THROW(deserialize_checkpoint(bytes), IoError);
}

TEST(Checkpoint, MissingFile) {
  EXPECT_THROW(load_checkpoint("/nonexistent/dir/x.ckpt"), IoError);
}

}  // namespace
}  // namespace dpgan
