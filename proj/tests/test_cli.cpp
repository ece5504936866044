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
#include <sys/wait.h>

#include <cstdio>
#include <fstream>
#include <string>

#include "test_util.hpp"

namespace {

struct Output {
  int code = -1;
  std::string out;
};

Output cli(const std::string& args) {
  const std::string cmd = std::string(DPGAN_CLI_PATH) + " " + args + " 2>/dev/null";
  Output o;
  FILE* p = ::popen(cmd.c_str(), "r");
  if (p == nullptr) return o;
  char buf[512];
  while (std::fgets(buf, sizeof buf, p) != nullptr) o.out += buf;
  const int status = ::pclose(p);
  o.code = WIFEXITED(status) ? WEXITSTATUS(status) : -1;
  return o;
}

TEST(Cli, BudgetEpsilon) {
  const Output o = cli("budget --q 0.0021333333333333334 --sigma 1 --T 450000");
  EXPECT_EQ(o.code, 0);
  EXPECT_EQ(o.out.rfind("epsilon=9.96964", 0), 0u) << o.out;
  EXPECT_NE(o.out.find("order=3.4"), std::string::npos) << o.out;
}

TEST(Cli, BudgetStepLimit) {
  const Output o = cli("budget --q 0.0021333333333333334 --sigma 0.4 --epsilon 10");
  EXPECT_EQ(o.code, 0);
  EXPECT_EQ(o.out, "T_max=369\n");
}

TEST(Cli, UsageErrorsExitWithConfigCode) {
  EXPECT_EQ(cli("").code, 2);
  EXPECT_EQ(cli("frobnicate").code, 2);
  EXPECT_EQ(cli("budget --sigma 1 --T 10").code, 2);
  EXPECT_EQ(cli("budget --q 2 --sigma 1 --T 10").code, 2);
}

TEST(Cli, MissingFilesExitWithIoCode) {
  EXPECT_EQ(cli("run /nonexistent/config.conf").code, 4);
  EXPECT_EQ(cli("eval /nonexistent/a.ckpt /nonexistent/b.csv").code, 4);
}

TEST(Cli, RunAndEvaluate) {
  const auto dir = dpgan::testing::temp_dir("cli_run");
  std::ofstream(dir + "/c.conf")
      << "dataset.n = 1000\n"
         "dataset.with_labels = true\n"
         "train.total_d_steps = 40\n"
         "train.log_every = 20\n"
         "train.batch = 16\n"
         "model.d_hidden = 8\n"
         "model.g_hidden = 8\n"
         "eval.every = 40\n"
         "eval.samples = 100\n"
         "eval.classifier_epochs = 1\n"
         "output.dir = "
      << dir << "/out\n";
  const Output run = cli("run " + dir + "/c.conf");
  ASSERT_EQ(run.code, 0) << run.out;
  EXPECT_NE(run.out.find("epsilon="), std::string::npos);
  std::ofstream(dir + "/d.csv") << "x0,x1,label\n0.8,0,0\n0,0.8,2\n-0.8,0,4\n"
                                   "0,-0.8,6\n0.5,0.5,1\n";
  const Output ev = cli("eval " + dir + "/out/checkpoint.ckpt " + dir +
                        "/d.csv --samples 50 --no-rescale");
  EXPECT_EQ(ev.code, 0);
  EXPECT_EQ(ev.out.rfind("frechet,probe_acc,downstream_acc\n", 0), 0u) << ev.out;
}

}  // namespace
