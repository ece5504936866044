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

#include "dpgan/data.hpp"
#include "dpgan/gan.hpp"

namespace dpgan {
namespace {

Dataset small_ring(bool labels = false) {
  Dataset d = make_ring_dataset(4, 0.8, 0.05, 2000, 9);
  return labels ? d : d.without_labels();
}

TrainConfig small_config(std::int64_t T, int n_d) {
  TrainConfig c;
  c.total_d_steps = T;
  c.n_d = n_d;
  c.batch = 32;
  c.eval_every = 10;
  c.seed = 5;
  c.model.d_hidden = {16, 16};
  c.model.g_hidden = {16, 16};
  c.latent_dim = 4;
  return c;
}

TEST(Trainer, GeneratorStepsAtMultiplesOfND) {
  const Dataset data = small_ring();
  Trainer tr(small_config(10, 3), data);
  std::vector<std::int64_t> at;
  TrainHooks hooks;
  hooks.before_generator_step = [&](const TrainerState& s) { at.push_back(s.t); };
  tr.run(hooks);
  EXPECT_EQ(at, (std::vector<std::int64_t>{3, 6, 9}));
  EXPECT_EQ(tr.state().k, 3);
  EXPECT_EQ(tr.state().t, 10);
}

TEST(Trainer, CounterLaw) {
  const Dataset data = small_ring();
  for (int nd : {1, 2, 7}) {
    Trainer tr(small_config(60, nd), data);
    TrainHooks hooks;
    hooks.on_log = [&](const TrainerState& s, const LogRow& r) {
      EXPECT_EQ(s.k, s.t / nd);
      EXPECT_EQ(r.k, r.t / nd);
    };
    tr.run(hooks);
    EXPECT_EQ(tr.log().rows.size(), 6u);
  }
}

TEST(Trainer, Deterministic) {
  const Dataset data = small_ring(true);
  Trainer a(small_config(200, 2), data);
  Trainer b(small_config(200, 2), data);
  a.run();
  b.run();
  EXPECT_EQ(a.log().rows, b.log().rows);
  EXPECT_TRUE(a.state().g.params == b.state().g.params);
  EXPECT_TRUE(a.state().d.params == b.state().d.params);
}

TEST(Trainer, EpsilonIndependentOfND) {
  const Dataset data = small_ring();
  Trainer a(small_config(300, 1), data);
  Trainer b(small_config(300, 50), data);
  a.run();
  b.run();
  EXPECT_EQ(a.log().final_epsilon, b.log().final_epsilon);
  const double q = 32.0 / data.size();
  EXPECT_EQ(a.log().final_epsilon, epsilon_after({300, q, 1.0, 1e-5}).epsilon);
  EXPECT_GT(a.log().final_epsilon, 0.0);
}

TEST(Trainer, NonPrivateReportsInfiniteEpsilon) {
  const Dataset data = small_ring();
  TrainConfig c = small_config(20, 1);
  c.private_mode = false;
  c.sigma = 0.0;
  Trainer tr(c, data);
  tr.run();
  EXPECT_TRUE(std::isinf(tr.log().final_epsilon));
  EXPECT_EQ(tr.state().accountant_T, 0);
}

// Without clipping or noise the step is plain Adam on the mean loss over the
// combined real and fake batch.
TEST(DiscriminatorStep, NonPrivateMatchesPlainStep) {
  const Dataset data = small_ring(true);
  TrainConfig c = small_config(10, 1);
  c.private_mode = false;
  c.sigma = 0.0;
  const PrivacySpec p = c.privacy(data.size());
  TrainerState s = init_trainer(c, data);
  for (int rep = 0; rep < 3; ++rep) {
    TrainerState ref = s;
    const auto rows = poisson_sample(data.size(), p.sampling_rate, ref.rng);
    const Batch real = data.gather(rows);
    const Batch fake = generate(
        ref.g, sample_noise(p.expected_batch, c.latent_dim, 4, ref.rng));
    Eigen::VectorXd g = batch_gradient(ref.d, real, LossKind::kReal) +
                        batch_gradient(ref.d, fake, LossKind::kFake);
    g /= 2.0 * p.expected_batch;
    adam_step(ref.d_opt, ref.d.params, g);

    discriminator_step(s, data, p);
    ASSERT_LT((s.d.params - ref.d.params).lpNorm<Eigen::Infinity>(), 1e-10);
    EXPECT_TRUE(s.rng == ref.rng);
  }
}

TEST(DiscriminatorStep, PrivateStepRepeatable) {
  const Dataset data = small_ring();
  const TrainConfig c = small_config(10, 1);
  TrainerState a = init_trainer(c, data);
  TrainerState b = a;
  const auto ra = discriminator_step(a, data, c.privacy(data.size()));
  const auto rb = discriminator_step(b, data, c.privacy(data.size()));
  EXPECT_TRUE(a.d.params == b.d.params);
  EXPECT_EQ(ra.real_batch_size, rb.real_batch_size);
  EXPECT_EQ(a.accountant_T, 1);
  EXPECT_LE(ra.clipped_fraction, 1.0);
  EXPECT_GE(ra.max_grad_norm, ra.mean_grad_norm);
}

TEST(DiscriminatorStep, EmptyRealBatchStillSteps) {
  const Dataset data = small_ring();
  const TrainConfig c = small_config(10, 1);
  PrivacySpec p = c.privacy(data.size());
  p.sampling_rate = 1e-12;
  TrainerState s = init_trainer(c, data);
  const Eigen::VectorXd before = s.d.params;
  const auto r = discriminator_step(s, data, p);
  EXPECT_EQ(r.real_batch_size, 0);
  EXPECT_FALSE(s.d.params == before);
  EXPECT_TRUE(s.d.params.allFinite());
  EXPECT_EQ(s.accountant_T, 1);
}

TEST(GeneratorStep, ConstantHalfDiscriminatorCountsNoFakes) {
  const Dataset data = small_ring();
  TrainerState s = init_trainer(small_config(10, 1), data);
  s.d.params.setZero();
  EXPECT_EQ(generator_step(s, 64), 0.0);
}

TEST(GeneratorStep, CostsNoPrivacy) {
  const Dataset data = small_ring();
  Trainer tr(small_config(50, 1), data);
  tr.run();
  const double eps = tr.epsilon().epsilon;
  TrainerState s = tr.state();
  for (int i = 0; i < 100; ++i) {
    const double acc = generator_step(s, 32);
    ASSERT_GE(acc, 0.0);
    ASSERT_LE(acc, 1.0);
  }
  EXPECT_EQ(s.accountant_T, tr.state().accountant_T);
  EXPECT_EQ(epsilon_from_curve(rdp_curve(tr.privacy().sampling_rate, 1.0),
                               s.accountant_T, 1e-5)
                .epsilon,
            eps);
}

// The trainer's adaptive loop, replayed by hand with the free functions.
TEST(Adaptive, MatchesManualReplay) {
  const Dataset data = small_ring();
  TrainConfig c = small_config(600, 1);
  c.adaptive = true;
  c.schedule_beta = 0.9;
  c.schedule_floor = 0.9;
  Trainer tr(c, data);
  std::vector<int> rungs;
  TrainHooks hooks;
  hooks.after_generator_step = [&](const TrainerState& s) {
    rungs.push_back(s.schedule->rung_index);
  };
  tr.run(hooks);

  TrainerState s = init_trainer(c, data);
  const PrivacySpec p = c.privacy(data.size());
  ScheduleState sched = ScheduleState::make(0.9, 0.9);
  int since = 0;
  int nd = 1;
  for (int t = 0; t < 600; ++t) {
    discriminator_step(s, data, p);
    if (++since >= nd) {
      nd = adaptive_update(sched, generator_step(s, c.batch));
      since = 0;
    }
  }
  ASSERT_TRUE(tr.state().schedule.has_value());
  EXPECT_NEAR(*tr.state().schedule->ema, *sched.ema, 1e-12);
  EXPECT_EQ(tr.state().schedule->rung_index, sched.rung_index);
  EXPECT_EQ(tr.state().k, s.k);
  EXPECT_TRUE(tr.state().g.params == s.g.params);
  for (std::size_t i = 1; i < rungs.size(); ++i) EXPECT_GE(rungs[i], rungs[i - 1]);
}

TEST(Resume, TailIdenticalToUninterruptedRun) {
  const Dataset data = small_ring();
  TrainConfig c = small_config(1000, 3);
  c.eval_every = 50;
  Trainer full(c, data);
  full.run();

  Trainer first(c, data);
  first.run_until(500);
  Trainer second(c, data, first.state());
  second.run();
  std::vector<LogRow> tail;
  for (const auto& r : full.log().rows) {
    if (r.t > 500) tail.push_back(r);
  }
  EXPECT_EQ(second.log().rows, tail);
  EXPECT_TRUE(second.state().g.params == full.state().g.params);
  EXPECT_EQ(second.log().final_epsilon, full.log().final_epsilon);
}

TEST(Resume, NonPrivateToPrivateStartsAccounting) {
  const Dataset data = small_ring();
  TrainConfig np = small_config(100, 2);
  np.private_mode = false;
  np.sigma = 0.0;
  Trainer base(np, data);
  base.run();
  EXPECT_EQ(base.state().accountant_T, 0);

  TrainConfig priv = small_config(101, 2);
  Trainer resumed(priv, data, base.state());
  EXPECT_EQ(resumed.epsilon().epsilon, 0.0);
  resumed.run();
  EXPECT_EQ(resumed.state().accountant_T, 1);
  EXPECT_GT(resumed.epsilon().epsilon, 0.0);
}

TEST(Trainer, RejectsBadConfig) {
  const Dataset data = small_ring();
  TrainConfig c = small_config(10, 0);
  EXPECT_THROW(Trainer(c, data), ConfigError);
  c = small_config(10, 1);
  c.sigma = 0.0;
  EXPECT_THROW(Trainer(c, data), ConfigError);
  EXPECT_THROW(Trainer(small_config(10, 1), Dataset{}), ConfigError);
}

}  // namespace
}  // namespace dpgan
