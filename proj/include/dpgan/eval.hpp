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

// Sample-quality and utility metrics for trained generators.

#pragma once

#include <Eigen/Dense>

#include <algorithm>
#include <cmath>
#include <cstdint>
#include <functional>
#include <limits>
#include <numeric>
#include <vector>

#include "dpgan/data.hpp"
#include "dpgan/dp.hpp"
#include "dpgan/error.hpp"
#include "dpgan/nn.hpp"
#include "dpgan/rng.hpp"
#include "dpgan/sampling.hpp"

namespace dpgan {

struct GaussianSummary {
  Eigen::VectorXd mean;
  Eigen::MatrixXd covariance;
  std::int64_t n_samples = 0;
};

// Maps a [n x d] sample matrix to [n x k] features.
using FeatureMap = std::function<Eigen::MatrixXd(const Eigen::MatrixXd&)>;

// Sample mean and unbiased covariance of the (optionally mapped) rows.
inline GaussianSummary fit_gaussian(const Eigen::MatrixXd& samples,
                                    const FeatureMap& feature_map = nullptr) {
  const Eigen::MatrixXd x = feature_map ? feature_map(samples) : samples;
  if (x.rows() < x.cols() + 1) {
    throw ConfigError("need at least dim + 1 samples to fit a Gaussian");
  }
  GaussianSummary g;
  g.n_samples = x.rows();
  g.mean = x.colwise().mean().transpose();
  const Eigen::MatrixXd centered = x.rowwise() - g.mean.transpose();
  g.covariance = (centered.transpose() * centered) / double(x.rows() - 1);
  g.covariance = 0.5 * (g.covariance + g.covariance.transpose()).eval();
  return g;
}

inline constexpr double kCovarianceRidge = 1e-10;

// Squared Frechet distance between two Gaussians,
//   |mu_a - mu_b|^2 + tr(S_a) + tr(S_b) - 2 tr((S_a^1/2 S_b S_a^1/2)^1/2),
// evaluated with symmetric eigendecompositions.
inline double frechet_distance(const GaussianSummary& a,
                               const GaussianSummary& b) {
  const Eigen::Index d = a.mean.size();
  if (b.mean.size() != d || a.covariance.rows() != d ||
      b.covariance.rows() != d) {
    throw ShapeError("Frechet distance between different dimensions");
  }
  const Eigen::MatrixXd ridge = kCovarianceRidge * Eigen::MatrixXd::Identity(d, d);
  const Eigen::MatrixXd sa = a.covariance + ridge;
  const Eigen::MatrixXd sb = b.covariance + ridge;
  auto check_psd = [](const Eigen::VectorXd& ev, double scale) {
    if (ev.size() > 0 && ev.minCoeff() < -1e-10 * std::max(1.0, scale)) {
      throw NumericError("covariance is not positive semi-definite");
    }
  };
  Eigen::SelfAdjointEigenSolver<Eigen::MatrixXd> ea(sa);
  check_psd(ea.eigenvalues(), ea.eigenvalues().cwiseAbs().maxCoeff());
  check_psd(Eigen::SelfAdjointEigenSolver<Eigen::MatrixXd>(
                sb, Eigen::EigenvaluesOnly)
                .eigenvalues(),
            sb.diagonal().cwiseAbs().maxCoeff());
  const Eigen::VectorXd root =
      ea.eigenvalues().cwiseMax(0.0).cwiseSqrt();
  const Eigen::MatrixXd sqrt_a =
      ea.eigenvectors() * root.asDiagonal() * ea.eigenvectors().transpose();
  Eigen::MatrixXd m = sqrt_a * sb * sqrt_a;
  m = 0.5 * (m + m.transpose()).eval();
  const Eigen::VectorXd em =
      Eigen::SelfAdjointEigenSolver<Eigen::MatrixXd>(m, Eigen::EigenvaluesOnly)
          .eigenvalues();
  const double tr_sqrt = em.cwiseMax(0.0).cwiseSqrt().sum();
  const double d2 = (a.mean - b.mean).squaredNorm() + a.covariance.trace() +
                    b.covariance.trace() - 2.0 * tr_sqrt;
  if (!std::isfinite(d2)) throw NumericError("non-finite Frechet distance");
  return std::max(d2, 0.0);
}

struct ModeSpec {
  std::vector<Eigen::VectorXd> centers;
  double capture_radius = 0.1;
};

struct CoverageReport {
  int covered = 0;
  double high_quality_fraction = 0.0;
  std::vector<int> per_mode_counts;
};

// A sample is high quality when it lies within the capture radius of its
// nearest center; a mode is covered when it captures at least
// (high-quality count) / (5 * modes) samples.
inline CoverageReport mode_coverage(const Eigen::MatrixXd& samples,
                                    const ModeSpec& modes) {
  CoverageReport r;
  const int k = static_cast<int>(modes.centers.size());
  r.per_mode_counts.assign(k, 0);
  if (samples.rows() == 0 || k == 0) return r;
  int hq = 0;
  for (Eigen::Index i = 0; i < samples.rows(); ++i) {
    int best = -1;
    double best_d = std::numeric_limits<double>::infinity();
    for (int m = 0; m < k; ++m) {
      const double dist = (samples.row(i).transpose() - modes.centers[m]).norm();
      if (dist < best_d) {
        best_d = dist;
        best = m;
      }
    }
    if (best_d <= modes.capture_radius) {
      ++hq;
      ++r.per_mode_counts[best];
    }
  }
  r.high_quality_fraction = double(hq) / double(samples.rows());
  const double threshold = double(hq) / (5.0 * k);
  for (int c : r.per_mode_counts) {
    if (c > 0 && c >= threshold) ++r.covered;
  }
  return r;
}

inline constexpr int kDefaultProbeSize = 512;

// Balanced discriminator accuracy on held-out real data (D >= 0.5 counts as
// correct) and freshly generated fakes (D < 0.5 counts as correct). This
// touches real data without a privacy mechanism: diagnostic only.
inline double disc_accuracy_probe(const ModelState& discriminator,
                                  const Batch& held_out_real,
                                  const ModelState& generator, int probe_size,
                                  Rng& rng) {
  if (held_out_real.size() == 0 || probe_size < 1) {
    throw ConfigError("probe needs non-empty real and fake sets");
  }
  Batch real = held_out_real;
  if (held_out_real.size() > probe_size) {
    std::vector<int> rows(probe_size);
    for (int& r : rows) r = rng.uniform_int(static_cast<int>(held_out_real.size()));
    real.inputs.resize(probe_size, held_out_real.width());
    real.labels.clear();
    for (int i = 0; i < probe_size; ++i) {
      real.inputs.row(i) = held_out_real.inputs.row(rows[i]);
      if (held_out_real.labelled()) {
        real.labels.push_back(held_out_real.labels[rows[i]]);
      }
    }
  }
  const Batch fake = generate(generator, probe_size,
                              discriminator.spec.num_classes, rng);
  const Eigen::VectorXd dr = forward(discriminator, real).col(0);
  const Eigen::VectorXd df = forward(discriminator, fake).col(0);
  const double real_acc = (dr.array() >= 0.5).cast<double>().mean();
  const double fake_acc = (df.array() < 0.5).cast<double>().mean();
  return 0.5 * real_acc + 0.5 * fake_acc;
}

struct ClassifierOptions {
  std::vector<int> hidden = {64, 64};
  int epochs = 20;
  int batch = 128;
  AdamParams adam{1e-3, 0.9, 0.999, 1e-8};
};

inline double classifier_accuracy(const ModelState& clf, const Dataset& test) {
  if (test.size() == 0) throw ConfigError("empty test set");
  const Eigen::MatrixXd logits = forward(clf, Batch{test.features, {}});
  int correct = 0;
  for (int i = 0; i < test.size(); ++i) {
    Eigen::Index arg;
    logits.row(i).maxCoeff(&arg);
    if (arg == test.labels[i]) ++correct;
  }
  return double(correct) / test.size();
}

// Trains a fresh dense classifier on `train` with minibatch Adam on softmax
// cross-entropy.
inline ModelState train_classifier(const Dataset& train, int num_classes,
                                   std::uint64_t seed,
                                   const ClassifierOptions& opts = {}) {
  if (train.size() == 0) throw ConfigError("empty classifier training set");
  NetworkSpec spec;
  spec.layer_sizes.push_back(train.dim());
  for (int h : opts.hidden) spec.layer_sizes.push_back(h);
  spec.layer_sizes.push_back(num_classes);
  spec.activation = Activation::kRelu;
  spec.output_activation = Activation::kIdentity;
  ModelState clf = init_network(spec, seed);
  AdamState opt = AdamState::zeros(clf.param_count(), opts.adam);
  Rng rng = Rng::derive(seed, 0xc1a55);
  std::vector<int> order(train.size());
  std::iota(order.begin(), order.end(), 0);
  for (int epoch = 0; epoch < opts.epochs; ++epoch) {
    for (int i = train.size() - 1; i > 0; --i) {
      std::swap(order[i], order[rng.uniform_int(i + 1)]);
    }
    for (int start = 0; start < train.size(); start += opts.batch) {
      const int end = std::min(train.size(), start + opts.batch);
      std::vector<int> rows(order.begin() + start, order.begin() + end);
      Batch b = train.gather(rows);
      Eigen::VectorXd g = batch_gradient(clf, b, LossKind::kCrossEntropy);
      g /= double(end - start);
      adam_step(opt, clf.params, g);
    }
  }
  return clf;
}

// Accuracy on real test data of a classifier trained only on generated data.
inline double downstream_accuracy(const Dataset& generated,
                                  const Dataset& real_test,
                                  std::uint64_t classifier_seed,
                                  const ClassifierOptions& opts = {}) {
  if (generated.size() == 0 || real_test.size() == 0) {
    throw ConfigError("downstream accuracy needs non-empty inputs");
  }
  const int classes = std::max(generated.num_classes, real_test.num_classes);
  const ModelState clf =
      train_classifier(generated, classes, classifier_seed, opts);
  return classifier_accuracy(clf, real_test);
}

}  // namespace dpgan
