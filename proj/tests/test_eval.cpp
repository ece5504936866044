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

#include "dpgan/data.hpp"
#include "dpgan/eval.hpp"
#include "dpgan/gan.hpp"

namespace dpgan {
namespace {

GaussianSummary gaussian(Eigen::VectorXd mean, Eigen::MatrixXd cov) {
  return {std::move(mean), std::move(cov), 100};
}

Eigen::MatrixXd random_spd(int d, Rng& rng) {
  Eigen::MatrixXd a(d, d);
  for (Eigen::Index i = 0; i < a.size(); ++i) a.data()[i] = rng.normal();
  return a * a.transpose() + 0.1 * Eigen::MatrixXd::Identity(d, d);
}

Eigen::VectorXd random_vec(int d, Rng& rng) {
  Eigen::VectorXd v(d);
  for (int i = 0; i < d; ++i) v[i] = rng.normal();
  return v;
}

TEST(Frechet, IdenticalIsZero) {
  Rng rng(1);
  for (int d : {1, 3, 8}) {
    const auto g = gaussian(random_vec(d, rng), random_spd(d, rng));
    EXPECT_NEAR(frechet_distance(g, g), 0.0, 1e-9);
  }
}

TEST(Frechet, OneDimensionalClosedForm) {
  const auto a = gaussian(Eigen::VectorXd::Constant(1, 0.0),
                          Eigen::MatrixXd::Constant(1, 1, 1.0));
  const auto b = gaussian(Eigen::VectorXd::Constant(1, 3.0),
                          Eigen::MatrixXd::Constant(1, 1, 4.0));
  // 3^2 + 1 + 4 - 2 * 1 * 2
  EXPECT_NEAR(frechet_distance(a, b), 10.0, 1e-9);
}

TEST(Frechet, DiagonalClosedForm) {
  Eigen::VectorXd ma(2), mb(2), va(2), vb(2);
  ma << 1, 0;
  mb << 0, 1;
  va << 1, 9;
  vb << 4, 1;
  // 2 + (1 - 2)^2 + (3 - 1)^2
  const double got = frechet_distance(gaussian(ma, va.asDiagonal()),
                                      gaussian(mb, vb.asDiagonal()));
  EXPECT_NEAR(got, 7.0, 1e-9);
  Eigen::VectorXd z = Eigen::VectorXd::Zero(3), v1(3), v2(3);
  v1 << 1, 4, 0.25;
  v2 << 4, 1, 1;
  // (1 - 2)^2 + (2 - 1)^2 + (0.5 - 1)^2 + |0 - 1.5|^2 ... with mean shift
  Eigen::VectorXd shift(3);
  shift << 1.5, 0, 0;
  EXPECT_NEAR(frechet_distance(gaussian(z, v1.asDiagonal()),
                               gaussian(shift, v2.asDiagonal())),
              2.25 + 1 + 1 + 0.25, 1e-9);
}

TEST(Frechet, Symmetric) {
  Rng rng(2);
  for (int trial = 0; trial < 50; ++trial) {
    const int d = 1 + rng.uniform_int(6);
    const auto a = gaussian(random_vec(d, rng), random_spd(d, rng));
    const auto b = gaussian(random_vec(d, rng), random_spd(d, rng));
    EXPECT_NEAR(frechet_distance(a, b), frechet_distance(b, a), 1e-9);
  }
}

TEST(Frechet, TranslatingBothOnlyMovesMeanTerm) {
  Rng rng(3);
  const int d = 4;
  auto a = gaussian(random_vec(d, rng), random_spd(d, rng));
  auto b = gaussian(random_vec(d, rng), random_spd(d, rng));
  const double before = frechet_distance(a, b);
  const Eigen::VectorXd v = 10.0 * random_vec(d, rng);
  a.mean += v;
  b.mean += v;
  EXPECT_NEAR(frechet_distance(a, b), before, 1e-9);
}

TEST(Frechet, RejectsMismatchAndIndefinite) {
  const auto a = gaussian(Eigen::VectorXd::Zero(2), Eigen::MatrixXd::Identity(2, 2));
  const auto b = gaussian(Eigen::VectorXd::Zero(3), Eigen::MatrixXd::Identity(3, 3));
  EXPECT_THROW(frechet_distance(a, b), ShapeError);
  Eigen::MatrixXd bad(2, 2);
  bad << 1, 0, 0, -1;
  EXPECT_THROW(frechet_distance(a, gaussian(Eigen::VectorXd::Zero(2), bad)),
               NumericError);
}

TEST(FitGaussian, DegenerateInputHasZeroCovariance) {
  const Eigen::MatrixXd x = Eigen::MatrixXd::Constant(10, 3, 2.5);
  const auto g = fit_gaussian(x);
  EXPECT_TRUE(g.covariance.isZero(0.0));
  EXPECT_TRUE(g.mean.isApprox(Eigen::VectorXd::Constant(3, 2.5)));
}

TEST(FitGaussian, RecoversKnownParameters) {
  Rng rng(4);
  const int n = 100000;
  Eigen::MatrixXd x(n, 2);
  for (int i = 0; i < n; ++i) {
    const double u = rng.normal(), w = rng.normal();
    x(i, 0) = 1.0 + 2.0 * u;
    x(i, 1) = -1.0 + 0.5 * u + 0.5 * w;
  }
  const auto g = fit_gaussian(x);
  const double se = 1.0 / std::sqrt(double(n));
  EXPECT_NEAR(g.mean[0], 1.0, 3 * 2.0 * se);
  EXPECT_NEAR(g.mean[1], -1.0, 3 * std::sqrt(0.5) * se);
  EXPECT_NEAR(g.covariance(0, 0), 4.0, 3 * 4.0 * std::sqrt(2.0) * se);
  EXPECT_NEAR(g.covariance(0, 1), 1.0, 3 * std::sqrt(4.0 * 0.5 + 1.0) * se);
  EXPECT_NEAR(g.covariance(1, 1), 0.5, 3 * 0.5 * std::sqrt(2.0) * se);
}

TEST(FitGaussian, AffineEquivariance) {
  Rng rng(5);
  Eigen::MatrixXd x(200, 3);
  for (Eigen::Index i = 0; i < x.size(); ++i) x.data()[i] = rng.normal();
  Eigen::MatrixXd a = random_spd(3, rng);
  Eigen::RowVectorXd shift = random_vec(3, rng).transpose();
  const Eigen::MatrixXd y = (x * a.transpose()).rowwise() + shift;
  const auto gx = fit_gaussian(x);
  const auto gy = fit_gaussian(y);
  EXPECT_LT((gy.mean - (a * gx.mean + shift.transpose())).norm(), 1e-10);
  EXPECT_LT((gy.covariance - a * gx.covariance * a.transpose()).norm(), 1e-10);
}

TEST(FitGaussian, FeatureMapApplied) {
  Eigen::MatrixXd x(3, 1);
  x << 1, 2, 3;
  const auto g = fit_gaussian(x, [](const Eigen::MatrixXd& m) {
    return Eigen::MatrixXd(2.0 * m);
  });
  EXPECT_DOUBLE_EQ(g.mean[0], 4.0);
}

TEST(FitGaussian, TooFewSamples) {
  EXPECT_THROW(fit_gaussian(Eigen::MatrixXd::Zero(3, 3)), ConfigError);
}

ModeSpec ring_modes() { return {ring_centers(8, 0.8), 0.15}; }

TEST(Coverage, RealRingCoversEveryMode) {
  const Dataset d = make_ring_dataset(8, 0.8, 0.05, 4000, 6);
  const auto r = mode_coverage(d.features, ring_modes());
  EXPECT_EQ(r.covered, 8);
  EXPECT_GT(r.high_quality_fraction, 0.98);
}

TEST(Coverage, CollapsedSamplesCoverOne) {
  Eigen::MatrixXd x(500, 2);
  x.col(0).setConstant(0.8);
  x.col(1).setZero();
  const auto r = mode_coverage(x, ring_modes());
  EXPECT_EQ(r.covered, 1);
  EXPECT_DOUBLE_EQ(r.high_quality_fraction, 1.0);
}

TEST(Coverage, FarNoiseCoversNothing) {
  const Eigen::MatrixXd x = Eigen::MatrixXd::Constant(100, 2, 5.0);
  const auto r = mode_coverage(x, ring_modes());
  EXPECT_EQ(r.covered, 0);
  EXPECT_EQ(r.high_quality_fraction, 0.0);
}

TEST(Coverage, MoreModesMoreCoverage) {
  const Dataset d = make_ring_dataset(8, 0.8, 0.02, 8000, 7);
  int prev = 0;
  for (int keep = 1; keep <= 8; ++keep) {
    std::vector<int> rows;
    for (int i = 0; i < d.size(); ++i) {
      if (d.labels[i] < keep) rows.push_back(i);
    }
    const auto r = mode_coverage(d.gather(rows).inputs, ring_modes());
    EXPECT_EQ(r.covered, keep);
    EXPECT_GE(r.covered, prev);
    prev = r.covered;
  }
}

struct ProbeFixture : ::testing::Test {
  Dataset real = make_ring_dataset(8, 0.8, 0.05, 1000, 8).without_labels();
  ModelConfig model{{8}, {8}, 4, 0.2};
  ModelState d = init_network(discriminator_spec(model, 2, 0), 1);
  ModelState g = init_network(generator_spec(model, 4, 2, 0), 2);
};

TEST_F(ProbeFixture, ConstantHalfIsChance) {
  d.params.setZero();
  Rng rng(9);
  // D = 0.5 everywhere: every real counts, no fake does.
  EXPECT_DOUBLE_EQ(disc_accuracy_probe(d, real.as_batch(), g, 256, rng), 0.5);
}

TEST_F(ProbeFixture, PerfectDiscriminatorScoresOne) {
  // Output bias pushes every real point up; the generator is pinned far away
  // and a first-layer weight on x separates it.
  d.params.setZero();
  g.params.setZero();
  const int last = d.spec.num_layers() - 1;
  g.bias(g.spec.num_layers() - 1).setConstant(-20.0);  // tanh -> -1
  d.weights(0)(0, 0) = 1.0;
  d.bias(0)[0] = 1.0;  // leaky(x + 1): ~0 for fakes, >= 0.5 for the ring
  d.weights(last)(0, 0) = 100.0;
  d.bias(last)[0] = -5.0;
  Rng rng(10);
  EXPECT_DOUBLE_EQ(disc_accuracy_probe(d, real.as_batch(), g, 256, rng), 1.0);
}

TEST_F(ProbeFixture, WithinUnitInterval) {
  Rng rng(11);
  for (int rep = 0; rep < 5; ++rep) {
    const double a = disc_accuracy_probe(d, real.as_batch(), g, 128, rng);
    EXPECT_GE(a, 0.0);
    EXPECT_LE(a, 1.0);
  }
}

TEST_F(ProbeFixture, RejectsEmptyInputs) {
  Rng rng(12);
  EXPECT_THROW(disc_accuracy_probe(d, Batch{}, g, 128, rng), ConfigError);
  EXPECT_THROW(disc_accuracy_probe(d, real.as_batch(), g, 0, rng), ConfigError);
}

ClassifierOptions fast_classifier() {
  ClassifierOptions o;
  o.epochs = 10;
  return o;
}

TEST(Downstream, RealDataClassifiesWell) {
  const Dataset train = make_ring_dataset(8, 0.8, 0.05, 4000, 13);
  const Dataset test = make_ring_dataset(8, 0.8, 0.05, 2000, 14);
  EXPECT_GE(downstream_accuracy(train, test, 1, fast_classifier()), 0.95);
}

TEST(Downstream, ShuffledLabelsAreChance) {
  Dataset train = make_ring_dataset(8, 0.8, 0.05, 4000, 15);
  const Dataset test = make_ring_dataset(8, 0.8, 0.05, 4000, 16);
  Rng rng(17);
  for (int i = train.size() - 1; i > 0; --i) {
    std::swap(train.labels[i], train.labels[rng.uniform_int(i + 1)]);
  }
  EXPECT_NEAR(downstream_accuracy(train, test, 2, fast_classifier()), 0.125, 0.05);
}

TEST(Downstream, Deterministic) {
  const Dataset train = make_ring_dataset(8, 0.8, 0.05, 1000, 18);
  const Dataset test = make_ring_dataset(8, 0.8, 0.05, 500, 19);
  EXPECT_EQ(downstream_accuracy(train, test, 3, fast_classifier()),
            downstream_accuracy(train, test, 3, fast_classifier()));
  EXPECT_THROW(downstream_accuracy(Dataset{}, test, 3), ConfigError);
}

}  // namespace
}  // namespace dpgan
