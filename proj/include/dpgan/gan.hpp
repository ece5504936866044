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

// Differentially private GAN training.
//
// Each discriminator step Poisson-samples a real batch (rate q = B / n),
// draws B fakes from the current generator, clips every per-example
// gradient of the combined batch to norm C, adds N(0, C^2 sigma^2) noise to
// the sum and divides by 2B before an Adam update. Every discriminator step
// is one invocation of the subsampled Gaussian mechanism. Generator steps
// only read the discriminator's parameters and therefore cost no privacy.
//
// After every n_D discriminator steps the generator takes one step on the
// non-saturating loss. In adaptive mode n_D comes from a ScheduleState that
// watches the discriminator's accuracy on the generator's own fakes.

#pragma once

#include <Eigen/Dense>

#include <cmath>
#include <cstdint>
#include <functional>
#include <limits>
#include <optional>
#include <ostream>
#include <string>
#include <vector>

#include "dpgan/accountant.hpp"
#include "dpgan/data.hpp"
#include "dpgan/dp.hpp"
#include "dpgan/error.hpp"
#include "dpgan/format.hpp"
#include "dpgan/nn.hpp"
#include "dpgan/rng.hpp"
#include "dpgan/sampling.hpp"
#include "dpgan/schedule.hpp"

namespace dpgan {

struct ModelConfig {
  std::vector<int> d_hidden = {64, 64, 64};
  std::vector<int> g_hidden = {64, 64, 64};
  int label_embed_dim = 4;
  double leaky_slope = 0.2;

  friend bool operator==(const ModelConfig&, const ModelConfig&) = default;
};

struct TrainConfig {
  int n_d = 1;
  bool adaptive = false;
  double schedule_beta = 0.99;  // also the decay of the logged accuracy EMA
  double schedule_floor = 0.6;
  std::int64_t total_d_steps = 1000;
  int batch = 128;
  bool private_mode = true;
  double sigma = 1.0;
  double clip = 1.0;
  double delta = 1e-5;
  std::uint64_t seed = 0;
  int eval_every = 1000;
  int latent_dim = 8;
  ModelConfig model;
  AdamParams d_adam;
  AdamParams g_adam;

  void validate() const {
    if (!adaptive && n_d < 1) throw ConfigError("n_D must be >= 1");
    if (total_d_steps < 1) throw ConfigError("T must be >= 1");
    if (batch < 1) throw ConfigError("batch size must be >= 1");
    if (eval_every < 1) throw ConfigError("eval_every must be >= 1");
    if (latent_dim < 1) throw ConfigError("latent_dim must be >= 1");
    if (adaptive) ScheduleState::make(schedule_beta, schedule_floor);
    privacy(1000).validate();
  }

  // Privacy parameters for a training set of `dataset_size` examples.
  PrivacySpec privacy(int dataset_size) const {
    const double q = std::min(1.0, double(batch) / double(dataset_size));
    if (!private_mode) return PrivacySpec::non_private(batch, q);
    return {clip, sigma, batch, delta, q, true};
  }
};

inline NetworkSpec discriminator_spec(const ModelConfig& m, int data_dim,
                                      int num_classes) {
  NetworkSpec s;
  const int embed = num_classes > 0 ? m.label_embed_dim : 0;
  s.layer_sizes.push_back(data_dim + embed);
  for (int h : m.d_hidden) s.layer_sizes.push_back(h);
  s.layer_sizes.push_back(1);
  s.activation = Activation::kLeakyRelu;
  s.leaky_slope = m.leaky_slope;
  s.num_classes = num_classes;
  s.label_embed_dim = embed;
  s.output_activation = Activation::kSigmoid;
  return s;
}

inline NetworkSpec generator_spec(const ModelConfig& m, int latent_dim,
                                  int data_dim, int num_classes) {
  NetworkSpec s;
  const int embed = num_classes > 0 ? m.label_embed_dim : 0;
  s.layer_sizes.push_back(latent_dim + embed);
  for (int h : m.g_hidden) s.layer_sizes.push_back(h);
  s.layer_sizes.push_back(data_dim);
  s.activation = Activation::kRelu;
  s.num_classes = num_classes;
  s.label_embed_dim = embed;
  s.output_activation = Activation::kTanh;
  return s;
}

// Everything needed to continue a run exactly where it stopped.
struct TrainerState {
  ModelState d;
  ModelState g;
  AdamState d_opt;
  AdamState g_opt;
  std::optional<ScheduleState> schedule;  // adaptive mode only
  std::optional<double> fake_acc_ema;
  Rng rng;
  std::int64_t t = 0;  // discriminator steps taken
  std::int64_t k = 0;  // generator steps taken
  // Mechanism invocations charged to `accounted_privacy` since it took
  // effect.
  std::int64_t accountant_T = 0;
  PrivacySpec accounted_privacy;
  int n_d_current = 1;
  int d_steps_since_g = 0;
  double last_d_loss = std::numeric_limits<double>::quiet_NaN();
  double last_g_loss = std::numeric_limits<double>::quiet_NaN();
};

struct DiscriminatorStepReport {
  int real_batch_size = 0;
  double mean_grad_norm = 0.0;  // pre-clip, over the combined batch
  double max_grad_norm = 0.0;
  double clipped_fraction = 0.0;
  double loss = 0.0;  // mean over the combined batch
};

struct LogRow {
  std::int64_t t = 0;
  std::int64_t k = 0;
  double epsilon = 0.0;
  double d_loss = 0.0;
  double g_loss = 0.0;
  double fake_acc_ema = 0.0;
  int n_d_current = 1;

  friend bool operator==(const LogRow&, const LogRow&) = default;
};

inline constexpr const char* kTrainLogHeader =
    "t,k,epsilon,d_loss,g_loss,fake_acc_ema,n_d_current";

inline std::string to_csv(const LogRow& r) {
  return std::to_string(r.t) + "," + std::to_string(r.k) + "," +
         format_double(r.epsilon) + "," + format_double(r.d_loss) + "," +
         format_double(r.g_loss) + "," + format_double(r.fake_acc_ema) + "," +
         std::to_string(r.n_d_current);
}

struct TrainLog {
  std::vector<LogRow> rows;
  double final_epsilon = 0.0;
  double final_order = std::numeric_limits<double>::quiet_NaN();
};

// Callbacks invoked by the training loop. None may mutate training state.
struct TrainHooks {
  // Immediately before each generator step.
  std::function<void(const TrainerState&)> before_generator_step;
  // After each generator step and its schedule update.
  std::function<void(const TrainerState&)> after_generator_step;
  // After each TrainLog row is recorded.
  std::function<void(const TrainerState&, const LogRow&)> on_log;
};

inline TrainerState init_trainer(const TrainConfig& config,
                                 const Dataset& train) {
  config.validate();
  if (train.size() == 0) throw ConfigError("empty training set");
  TrainerState s;
  const NetworkSpec ds =
      discriminator_spec(config.model, train.dim(), train.num_classes);
  const NetworkSpec gs = generator_spec(config.model, config.latent_dim,
                                        train.dim(), train.num_classes);
  s.d = init_network(ds, Rng::derive(config.seed, 1).next_u64());
  s.g = init_network(gs, Rng::derive(config.seed, 2).next_u64());
  s.d_opt = AdamState::zeros(s.d.param_count(), config.d_adam);
  s.g_opt = AdamState::zeros(s.g.param_count(), config.g_adam);
  s.rng = Rng::derive(config.seed, 3);
  s.accounted_privacy = config.privacy(train.size());
  if (config.adaptive) {
    s.schedule = ScheduleState::make(config.schedule_beta, config.schedule_floor);
    s.n_d_current = s.schedule->current();
  } else {
    s.n_d_current = config.n_d;
  }
  return s;
}

// One DPSGD step on the discriminator.
inline DiscriminatorStepReport discriminator_step(TrainerState& s,
                                                  const Dataset& train,
                                                  const PrivacySpec& privacy) {
  const int num_classes = s.d.spec.num_classes;
  const std::vector<int> rows =
      poisson_sample(train.size(), privacy.sampling_rate, s.rng);
  const Batch real = train.gather(rows);
  const Batch fake = generate(
      s.g, sample_noise(privacy.expected_batch, s.g.spec.data_dim(),
                        num_classes, s.rng));
  const ClippedGradient cg =
      clipped_gradient_sum(s.d, real, fake, privacy.clip_norm);
  const Eigen::VectorXd grad = noise_and_scale(cg.sum, privacy, s.rng);
  adam_step(s.d_opt, s.d.params, grad);
  if (privacy.private_mode) s.accountant_T += 1;
  s.t += 1;

  DiscriminatorStepReport r;
  r.real_batch_size = static_cast<int>(rows.size());
  const Eigen::Index n = cg.norms.size();
  if (n > 0) {
    r.mean_grad_norm = cg.norms.mean();
    r.max_grad_norm = cg.norms.maxCoeff();
    r.clipped_fraction =
        (cg.norms.array() > privacy.clip_norm).cast<double>().mean();
    r.loss = (cg.real_loss + cg.fake_loss) / double(n);
  }
  s.last_d_loss = r.loss;
  return r;
}

// One generator step. Returns the discriminator's accuracy on the fresh fake
// batch (fraction with D < 0.5), measured before the update.
inline double generator_step(TrainerState& s, int batch) {
  const Batch noise = sample_noise(batch, s.g.spec.data_dim(),
                                   s.d.spec.num_classes, s.rng);
  const Batch fake = generate(s.g, noise);
  const Eigen::VectorXd dout = forward(s.d, fake).col(0);
  const double fake_accuracy =
      batch > 0 ? (dout.array() < 0.5).cast<double>().mean() : 0.0;
  double loss = 0.0;
  const Eigen::VectorXd grad = backward_mean(s.g, s.d, noise, &loss);
  adam_step(s.g_opt, s.g.params, grad);
  s.k += 1;
  s.last_g_loss = loss;
  return fake_accuracy;
}

class Trainer {
 public:
  Trainer(TrainConfig config, const Dataset& train)
      : config_(std::move(config)),
        train_(train),
        privacy_(config_.privacy(train.size())),
        state_(init_trainer(config_, train)) {
    refresh_curve();
  }

  // Continues from a saved state. If the privacy settings differ from those
  // the state was accounted under, accounting restarts for this segment.
  Trainer(TrainConfig config, const Dataset& train, TrainerState state)
      : config_(std::move(config)),
        train_(train),
        privacy_(config_.privacy(train.size())),
        state_(std::move(state)) {
    config_.validate();
    if (!(state_.accounted_privacy == privacy_)) {
      state_.accountant_T = 0;
      state_.accounted_privacy = privacy_;
    }
    if (config_.adaptive) {
      if (!state_.schedule) {
        state_.schedule =
            ScheduleState::make(config_.schedule_beta, config_.schedule_floor);
        state_.schedule->ema = state_.fake_acc_ema;
      }
      state_.n_d_current = state_.schedule->current();
    } else {
      state_.schedule.reset();
      state_.n_d_current = config_.n_d;
    }
    if (state_.d_steps_since_g >= state_.n_d_current) {
      state_.d_steps_since_g = 0;
    }
    refresh_curve();
  }

  const TrainerState& state() const { return state_; }
  const TrainConfig& config() const { return config_; }
  const PrivacySpec& privacy() const { return privacy_; }
  const TrainLog& log() const { return log_; }

  EpsilonResult epsilon() const {
    if (!privacy_.private_mode) {
      return {std::numeric_limits<double>::infinity(),
              std::numeric_limits<double>::quiet_NaN()};
    }
    return epsilon_from_curve(curve_, state_.accountant_T, privacy_.delta);
  }

  // Runs until `stop_at` discriminator steps (or the configured total,
  // whichever comes first).
  void run_until(std::int64_t stop_at, const TrainHooks& hooks = {}) {
    stop_at = std::min(stop_at, config_.total_d_steps);
    while (state_.t < stop_at) {
      try {
        step(hooks);
      } catch (const NumericError& e) {
        throw e.at_step(state_.t);
      }
    }
    if (state_.t == config_.total_d_steps) {
      const EpsilonResult e = epsilon();
      log_.final_epsilon = e.epsilon;
      log_.final_order = e.order;
    }
  }

  void run(const TrainHooks& hooks = {}) {
    run_until(config_.total_d_steps, hooks);
  }

 private:
  void refresh_curve() {
    if (privacy_.private_mode) {
      curve_ = rdp_curve(privacy_.sampling_rate, privacy_.noise_multiplier);
    }
  }

  void step(const TrainHooks& hooks) {
    discriminator_step(state_, train_, privacy_);
    state_.d_steps_since_g += 1;
    if (state_.d_steps_since_g >= state_.n_d_current) {
      if (hooks.before_generator_step) hooks.before_generator_step(state_);
      const double acc = generator_step(state_, config_.batch);
      state_.d_steps_since_g = 0;
      if (state_.schedule) {
        state_.n_d_current = adaptive_update(*state_.schedule, acc);
        state_.fake_acc_ema = state_.schedule->ema;
      } else {
        const double b = config_.schedule_beta;
        state_.fake_acc_ema = state_.fake_acc_ema
                                  ? b * *state_.fake_acc_ema + (1.0 - b) * acc
                                  : acc;
      }
      if (hooks.after_generator_step) hooks.after_generator_step(state_);
    }
    if (state_.t % config_.eval_every == 0 ||
        state_.t == config_.total_d_steps) {
      LogRow row;
      row.t = state_.t;
      row.k = state_.k;
      row.epsilon = epsilon().epsilon;
      row.d_loss = state_.last_d_loss;
      row.g_loss = state_.last_g_loss;
      row.fake_acc_ema = state_.fake_acc_ema.value_or(
          std::numeric_limits<double>::quiet_NaN());
      row.n_d_current = state_.n_d_current;
      log_.rows.push_back(row);
      if (hooks.on_log) hooks.on_log(state_, row);
    }
  }

  TrainConfig config_;
  const Dataset& train_;
  PrivacySpec privacy_;
  TrainerState state_;
  RdpCurve curve_;
  TrainLog log_;
};

// Full run from fresh initialization. Returns the trained generator and
// the log; the log's final epsilon equals epsilon_after(T) for private runs.
inline std::pair<ModelState, TrainLog> train(const Dataset& dataset,
                                             const TrainConfig& config,
                                             const TrainHooks& hooks = {}) {
  Trainer trainer(config, dataset);
  trainer.run(hooks);
  return {trainer.state().g, trainer.log()};
}

}  // namespace dpgan
