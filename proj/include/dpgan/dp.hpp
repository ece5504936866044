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

// DPSGD building blocks: Poisson subsampling, per-example clipping, Gaussian
// noising of the clipped sum, and Adam.

#pragma once

#include <Eigen/Dense>

#include <cmath>
#include <cstdint>
#include <limits>
#include <vector>

#include "dpgan/error.hpp"
#include "dpgan/nn.hpp"
#include "dpgan/rng.hpp"

namespace dpgan {

struct PrivacySpec {
  double clip_norm = 1.0;
  double noise_multiplier = 1.0;
  int expected_batch = 128;
  double delta = 1e-5;
  double sampling_rate = 1.0;
  bool private_mode = true;

  // sigma = 0 and no clipping; Poisson sampling is kept.
  static PrivacySpec non_private(int expected_batch, double sampling_rate) {
    PrivacySpec s;
    s.clip_norm = std::numeric_limits<double>::infinity();
    s.noise_multiplier = 0.0;
    s.expected_batch = expected_batch;
    s.sampling_rate = sampling_rate;
    s.private_mode = false;
    return s;
  }

  void validate() const {
    if (expected_batch < 1) throw ConfigError("expected batch must be >= 1");
    if (!(sampling_rate > 0.0 && sampling_rate <= 1.0)) {
      throw ConfigError("sampling rate must lie in (0, 1]");
    }
    if (!(clip_norm > 0.0)) throw ConfigError("clip norm must be positive");
    if (private_mode) {
      if (!(noise_multiplier > 0.0) || !std::isfinite(noise_multiplier)) {
        throw ConfigError("private mode needs a positive noise multiplier");
      }
      if (!std::isfinite(clip_norm)) {
        throw ConfigError("private mode needs a finite clip norm");
      }
      if (!(delta > 0.0 && delta < 1.0)) {
        throw ConfigError("delta must lie in (0, 1)");
      }
    } else if (noise_multiplier != 0.0) {
      throw ConfigError("non-private mode uses sigma = 0");
    }
  }

  friend bool operator==(const PrivacySpec&, const PrivacySpec&) = default;
};

// Includes each of `dataset_size` indices independently with probability q.
// Gaps between included indices are geometric, so the cost is proportional to
// the sample size rather than the dataset size.
inline std::vector<int> poisson_sample(int dataset_size, double q, Rng& rng) {
  if (!(q > 0.0 && q <= 1.0)) throw ConfigError("q must lie in (0, 1]");
  std::vector<int> out;
  if (q == 1.0) {
    out.resize(dataset_size);
    for (int i = 0; i < dataset_size; ++i) out[i] = i;
    return out;
  }
  out.reserve(static_cast<std::size_t>(dataset_size * q * 1.5) + 8);
  const double log_miss = std::log1p(-q);
  double pos = -1.0;
  while (true) {
    // floor(log U / log(1-q)) failures before the next success.
    pos += 1.0 + std::floor(std::log(rng.uniform_open()) / log_miss);
    if (pos >= dataset_size) break;
    out.push_back(static_cast<int>(pos));
  }
  return out;
}

// Scales row i by min(1, C / ||row_i||). Rows already inside the ball, up to
// a relative tolerance of kClipTolerance, are left untouched. The tolerance
// absorbs the rounding of a previous clip so that clipping is idempotent.

inline PerExampleGradMatrix clip_per_example(const PerExampleGradMatrix& g,
                                             double clip) {
  if (!(clip > 0.0)) throw ConfigError("clip norm must be positive");
  PerExampleGradMatrix out = g;
  for (Eigen::Index i = 0; i < g.batch_size(); ++i) {
    const double norm = g.grads.row(i).norm();
    if (!std::isfinite(norm)) {
      throw NumericError("non-finite gradient row", i);
    }
    if (norm > clip * (1.0 + kClipTolerance)) {
      out.grads.row(i) *= clip / norm;
      out.per_example_norms[i] = out.grads.row(i).norm();
    } else {
      out.per_example_norms[i] = norm;
    }
  }
  return out;
}

// (sum + z) / (2B) with z ~ N(0, C^2 sigma^2 I), drawn coordinate by
// coordinate from `rng`. B is the expected batch size from the spec.
inline Eigen::VectorXd noise_and_scale(Eigen::VectorXd sum,
                                       const PrivacySpec& spec, Rng& rng) {
  if (spec.private_mode) {
    if (!(spec.noise_multiplier > 0.0)) {
      throw ConfigError("sigma = 0 is only allowed in non-private mode");
    }
    const double stddev = spec.clip_norm * spec.noise_multiplier;
    for (Eigen::Index j = 0; j < sum.size(); ++j) {
      sum[j] += stddev * rng.normal();
    }
  } else if (spec.noise_multiplier != 0.0) {
    throw ConfigError("non-private mode uses sigma = 0");
  }
  return sum / (2.0 * spec.expected_batch);
}

inline Eigen::VectorXd aggregate_and_noise(const PerExampleGradMatrix& clipped,
                                           const PrivacySpec& spec, Rng& rng) {
  const double slack = 1e-9 * (1.0 + spec.clip_norm);
  for (Eigen::Index i = 0; i < clipped.batch_size(); ++i) {
    if (clipped.grads.row(i).norm() > spec.clip_norm + slack) {
      throw ConfigError("row " + std::to_string(i) +
                        " exceeds the clip norm; clip before aggregating");
    }
  }
  Eigen::VectorXd sum = clipped.batch_size() > 0
                            ? Eigen::VectorXd(clipped.grads.colwise().sum())
                            : Eigen::VectorXd::Zero(clipped.grads.cols());
  return noise_and_scale(std::move(sum), spec, rng);
}

struct AdamParams {
  double alpha = 0.0002;
  double beta1 = 0.5;
  double beta2 = 0.999;
  double eps_hat = 1e-8;

  friend bool operator==(const AdamParams&, const AdamParams&) = default;
};

struct AdamState {
  std::int64_t step_count = 0;
  Eigen::VectorXd first_moment;
  Eigen::VectorXd second_moment;
  AdamParams hp;

  static AdamState zeros(Eigen::Index n, AdamParams hp = {}) {
    return {0, Eigen::VectorXd::Zero(n), Eigen::VectorXd::Zero(n), hp};
  }

  friend bool operator==(const AdamState& a, const AdamState& b) {
    return a.step_count == b.step_count && a.hp == b.hp &&
           a.first_moment.size() == b.first_moment.size() &&
           a.first_moment == b.first_moment &&
           a.second_moment.size() == b.second_moment.size() &&
           a.second_moment == b.second_moment;
  }
};

// Bias-corrected Adam. Updates `state` and `params` in place.
inline void adam_step(AdamState& state, Eigen::VectorXd& params,
                      const Eigen::VectorXd& grad) {
  if (params.size() != grad.size() ||
      state.first_moment.size() != params.size() ||
      state.second_moment.size() != params.size()) {
    throw ShapeError("Adam state, parameter and gradient lengths differ");
  }
  for (Eigen::Index j = 0; j < grad.size(); ++j) {
    if (!std::isfinite(grad[j])) {
      throw NumericError("non-finite gradient coordinate", j);
    }
  }
  const AdamParams& hp = state.hp;
  state.step_count += 1;
  const double t = static_cast<double>(state.step_count);
  state.first_moment = hp.beta1 * state.first_moment + (1.0 - hp.beta1) * grad;
  state.second_moment = hp.beta2 * state.second_moment +
                        (1.0 - hp.beta2) * grad.cwiseProduct(grad);
  const double c1 = 1.0 - std::pow(hp.beta1, t);
  const double c2 = 1.0 - std::pow(hp.beta2, t);
  params.array() -= hp.alpha * (state.first_moment.array() / c1) /
                    ((state.second_moment.array() / c2).sqrt() + hp.eps_hat);
}

}  // namespace dpgan
