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

// Minimal dense-network engine for conditional GANs.
//
// A network is a stack of affine layers with a shared hidden activation and a
// separate output activation. Conditional networks look up a learned label
// embedding and concatenate it to the data input. All parameters live in one
// flat vector:
//
//   [ embedding table (num_classes x embed_dim, row per class) |
//     W_0 (in_0 x out_0, column-major) | b_0 | W_1 | b_1 | ... ]
//
// Besides the usual batch gradient, the engine exposes per-example gradients
// (materialized, for inspection and testing) and a fused clipped-sum path that
// exploits the rank-one structure of single-example dense-layer gradients so
// that the per-example matrix never has to be formed during training.

#pragma once

#include <Eigen/Dense>

#include <algorithm>
#include <cmath>
#include <cstdint>
#include <limits>
#include <string>
#include <vector>

#include "dpgan/error.hpp"
#include "dpgan/rng.hpp"

namespace dpgan {

using RowMatrix =
    Eigen::Matrix<double, Eigen::Dynamic, Eigen::Dynamic, Eigen::RowMajor>;

enum class Activation { kRelu, kLeakyRelu, kTanh, kSigmoid, kIdentity };

// Discriminator outputs are clamped to this band before taking logs.
inline constexpr double kProbClamp = 1e-7;

struct NetworkSpec {
  std::vector<int> layer_sizes;
  Activation activation = Activation::kRelu;
  double leaky_slope = 0.2;
  int num_classes = 0;  // 0 = unconditional
  int label_embed_dim = 0;
  Activation output_activation = Activation::kIdentity;

  int num_layers() const { return static_cast<int>(layer_sizes.size()) - 1; }
  bool conditional() const { return num_classes > 0; }
  int input_width() const { return layer_sizes.front(); }
  int data_dim() const {
    return input_width() - (conditional() ? label_embed_dim : 0);
  }
  int output_dim() const { return layer_sizes.back(); }

  std::int64_t embedding_size() const {
    return conditional() ? std::int64_t{num_classes} * label_embed_dim : 0;
  }

  std::int64_t weight_offset(int layer) const {
    std::int64_t off = embedding_size();
    for (int l = 0; l < layer; ++l) {
      off += std::int64_t{layer_sizes[l]} * layer_sizes[l + 1] +
             layer_sizes[l + 1];
    }
    return off;
  }
  std::int64_t bias_offset(int layer) const {
    return weight_offset(layer) +
           std::int64_t{layer_sizes[layer]} * layer_sizes[layer + 1];
  }
  std::int64_t param_count() const { return weight_offset(num_layers()); }

  void validate() const {
    if (layer_sizes.size() < 2) {
      throw ConfigError("network needs at least an input and output width");
    }
    for (int w : layer_sizes) {
      if (w < 1) throw ConfigError("layer widths must be positive");
    }
    if (num_classes < 0 || label_embed_dim < 0) {
      throw ConfigError("negative class count or embedding width");
    }
    if (conditional()) {
      if (label_embed_dim == 0) {
        throw ConfigError("conditional network needs label_embed_dim > 0");
      }
      if (input_width() <= label_embed_dim) {
        throw ConfigError(
            "first layer width must equal data_dim + label_embed_dim with "
            "data_dim >= 1");
      }
    }
    if (output_activation != Activation::kSigmoid &&
        output_activation != Activation::kTanh &&
        output_activation != Activation::kIdentity) {
      throw ConfigError("output activation must be sigmoid, tanh or identity");
    }
  }
};

struct ModelState {
  NetworkSpec spec;
  Eigen::VectorXd params;

  std::int64_t param_count() const { return params.size(); }

  Eigen::Map<Eigen::MatrixXd> weights(int layer) {
    return {params.data() + spec.weight_offset(layer), spec.layer_sizes[layer],
            spec.layer_sizes[layer + 1]};
  }
  Eigen::Map<const Eigen::MatrixXd> weights(int layer) const {
    return {params.data() + spec.weight_offset(layer), spec.layer_sizes[layer],
            spec.layer_sizes[layer + 1]};
  }
  Eigen::Map<Eigen::VectorXd> bias(int layer) {
    return {params.data() + spec.bias_offset(layer),
            spec.layer_sizes[layer + 1]};
  }
  Eigen::Map<const Eigen::VectorXd> bias(int layer) const {
    return {params.data() + spec.bias_offset(layer),
            spec.layer_sizes[layer + 1]};
  }
  // Row c holds the embedding of class c.
  Eigen::Map<RowMatrix> embedding() {
    return {params.data(), spec.num_classes, spec.label_embed_dim};
  }
  Eigen::Map<const RowMatrix> embedding() const {
    return {params.data(), spec.num_classes, spec.label_embed_dim};
  }

  friend bool operator==(const ModelState& a, const ModelState& b) {
    return a.spec.layer_sizes == b.spec.layer_sizes &&
           a.spec.activation == b.spec.activation &&
           a.spec.leaky_slope == b.spec.leaky_slope &&
           a.spec.num_classes == b.spec.num_classes &&
           a.spec.label_embed_dim == b.spec.label_embed_dim &&
           a.spec.output_activation == b.spec.output_activation &&
           a.params.size() == b.params.size() && a.params == b.params;
  }
};

// Rows are examples. `labels` is empty for unconditional data; otherwise it
// has one entry per row.
struct Batch {
  Eigen::MatrixXd inputs;
  std::vector<int> labels;

  Eigen::Index size() const { return inputs.rows(); }
  Eigen::Index width() const { return inputs.cols(); }
  bool labelled() const { return !labels.empty(); }
};

inline Batch concat(const Batch& a, const Batch& b) {
  if (a.size() == 0) return b;
  if (b.size() == 0) return a;
  if (a.width() != b.width() || a.labelled() != b.labelled()) {
    throw ShapeError("cannot stack batches of different shape");
  }
  Batch out;
  out.inputs.resize(a.size() + b.size(), a.width());
  out.inputs.topRows(a.size()) = a.inputs;
  out.inputs.bottomRows(b.size()) = b.inputs;
  out.labels = a.labels;
  out.labels.insert(out.labels.end(), b.labels.begin(), b.labels.end());
  return out;
}

struct PerExampleGradMatrix {
  RowMatrix grads;
  Eigen::VectorXd per_example_norms;

  static PerExampleGradMatrix from_rows(RowMatrix g) {
    PerExampleGradMatrix m;
    m.per_example_norms = g.rowwise().norm();
    m.grads = std::move(g);
    return m;
  }
  Eigen::Index batch_size() const { return grads.rows(); }
};

enum class LossKind {
  kReal,          // -log D(x)
  kFake,          // -log(1 - D(x))
  kCrossEntropy,  // softmax cross-entropy against batch labels
};

inline ModelState init_network(const NetworkSpec& spec, std::uint64_t seed) {
  spec.validate();
  ModelState m{spec, Eigen::VectorXd::Zero(spec.param_count())};
  Rng rng(seed);
  if (spec.conditional()) {
    const double scale = 1.0 / std::sqrt(double(spec.label_embed_dim));
    for (std::int64_t i = 0; i < spec.embedding_size(); ++i) {
      m.params[i] = rng.uniform(-1.0, 1.0) * scale;
    }
  }
  for (int l = 0; l < spec.num_layers(); ++l) {
    const double bound = 1.0 / std::sqrt(double(spec.layer_sizes[l]));
    auto w = m.weights(l);
    for (Eigen::Index i = 0; i < w.size(); ++i) {
      w.data()[i] = rng.uniform(-bound, bound);
    }
    auto b = m.bias(l);
    for (Eigen::Index i = 0; i < b.size(); ++i) b[i] = rng.uniform(-bound, bound);
  }
  return m;
}

namespace internal {

inline void apply_activation(Activation a, double slope, Eigen::MatrixXd& z) {
  switch (a) {
    case Activation::kRelu:
      z = z.cwiseMax(0.0);
      break;
    case Activation::kLeakyRelu:
      z = z.unaryExpr([slope](double v) { return v > 0.0 ? v : slope * v; });
      break;
    case Activation::kTanh:
      z = z.array().tanh().matrix();
      break;
    case Activation::kSigmoid:
      z = z.unaryExpr([](double v) { return 1.0 / (1.0 + std::exp(-v)); });
      break;
    case Activation::kIdentity:
      break;
  }
}

// Multiplies `delta` in place by the activation derivative, given the
// pre-activation and post-activation values.
inline void scale_by_derivative(Activation a, double slope,
                                const Eigen::MatrixXd& pre,
                                const Eigen::MatrixXd& post,
                                Eigen::MatrixXd& delta) {
  switch (a) {
    case Activation::kRelu:
      delta = (pre.array() > 0.0).select(delta, 0.0);
      break;
    case Activation::kLeakyRelu:
      delta = (pre.array() > 0.0).select(delta, slope * delta);
      break;
    case Activation::kTanh:
      delta.array() *= 1.0 - post.array().square();
      break;
    case Activation::kSigmoid:
      delta.array() *= post.array() * (1.0 - post.array());
      break;
    case Activation::kIdentity:
      break;
  }
}

// Layer inputs and pre-activations of one forward pass.
struct Trace {
  std::vector<Eigen::MatrixXd> inputs;  // inputs[l] feeds layer l
  std::vector<Eigen::MatrixXd> pre;     // pre[l] is layer l before activation
  Eigen::MatrixXd output;

  Eigen::Index batch_size() const { return output.rows(); }
};

inline void check_batch(const NetworkSpec& spec, const Batch& batch) {
  if (batch.width() != spec.data_dim() && batch.size() > 0) {
    throw ShapeError("batch width " + std::to_string(batch.width()) +
                     " does not match network data width " +
                     std::to_string(spec.data_dim()));
  }
  if (spec.conditional()) {
    if (static_cast<Eigen::Index>(batch.labels.size()) != batch.size()) {
      throw ShapeError("conditional network needs one label per example");
    }
    for (int y : batch.labels) {
      if (y < 0 || y >= spec.num_classes) {
        throw ShapeError("label " + std::to_string(y) + " out of range");
      }
    }
  }
}

inline Trace forward_trace(const ModelState& m, const Batch& batch) {
  const NetworkSpec& spec = m.spec;
  check_batch(spec, batch);
  const Eigen::Index n = batch.size();
  Trace t;
  t.inputs.reserve(spec.num_layers());
  t.pre.reserve(spec.num_layers());

  Eigen::MatrixXd x(n, spec.input_width());
  x.leftCols(spec.data_dim()) = batch.inputs;
  if (spec.conditional()) {
    const auto emb = m.embedding();
    for (Eigen::Index i = 0; i < n; ++i) {
      x.row(i).tail(spec.label_embed_dim) = emb.row(batch.labels[i]);
    }
  }
  for (int l = 0; l < spec.num_layers(); ++l) {
    Eigen::MatrixXd z = x * m.weights(l);
    z.rowwise() += m.bias(l).transpose();
    t.inputs.push_back(std::move(x));
    x = z;
    const bool last = l + 1 == spec.num_layers();
    apply_activation(last ? spec.output_activation : spec.activation,
                     spec.leaky_slope, x);
    t.pre.push_back(std::move(z));
  }
  t.output = std::move(x);
  return t;
}

// Per-example deltas (dLoss/dpre) for every layer plus the gradient with
// respect to the network input, row i belonging to example i.
struct Deltas {
  std::vector<Eigen::MatrixXd> layer;
  Eigen::MatrixXd input;
};

inline Deltas backprop(const ModelState& m, const Trace& t,
                       Eigen::MatrixXd top) {
  const NetworkSpec& spec = m.spec;
  const int layers = spec.num_layers();
  Deltas d;
  d.layer.resize(layers);
  for (int l = layers - 1; l >= 0; --l) {
    Eigen::MatrixXd below = top * m.weights(l).transpose();
    d.layer[l] = std::move(top);
    if (l > 0) {
      scale_by_derivative(spec.activation, spec.leaky_slope, t.pre[l - 1],
                          t.inputs[l], below);
    }
    top = std::move(below);
  }
  d.input = std::move(top);
  return d;
}

// Gradient of the summed loss: sum over examples of the per-example rows,
// accumulated layer by layer.
inline Eigen::VectorXd aggregate(const ModelState& m, const Trace& t,
                                 const Deltas& d,
                                 const std::vector<int>& labels) {
  const NetworkSpec& spec = m.spec;
  Eigen::VectorXd g = Eigen::VectorXd::Zero(spec.param_count());
  for (int l = 0; l < spec.num_layers(); ++l) {
    Eigen::Map<Eigen::MatrixXd>(g.data() + spec.weight_offset(l),
                                spec.layer_sizes[l], spec.layer_sizes[l + 1])
        .noalias() = t.inputs[l].transpose() * d.layer[l];
    Eigen::Map<Eigen::VectorXd>(g.data() + spec.bias_offset(l),
                                spec.layer_sizes[l + 1]) =
        d.layer[l].colwise().sum().transpose();
  }
  if (spec.conditional()) {
    Eigen::Map<RowMatrix> emb(g.data(), spec.num_classes,
                              spec.label_embed_dim);
    for (std::size_t i = 0; i < labels.size(); ++i) {
      emb.row(labels[i]) +=
          d.input.row(i).tail(spec.label_embed_dim);
    }
  }
  return g;
}

// dLoss/dlogit for the loss heads. For the sigmoid heads the analytic
// logit gradient (D - 1 or D) is used; clamping only affects loss values.
inline Eigen::MatrixXd head_delta(const NetworkSpec& spec, const Trace& t,
                                  LossKind loss, const std::vector<int>& labels,
                                  Eigen::Index begin, Eigen::Index end) {
  const Eigen::Index n = end - begin;
  switch (loss) {
    case LossKind::kReal:
    case LossKind::kFake: {
      if (spec.output_activation != Activation::kSigmoid ||
          spec.output_dim() != 1) {
        throw ConfigError("log losses need a single sigmoid output");
      }
      Eigen::MatrixXd d = t.output.middleRows(begin, n);
      if (loss == LossKind::kReal) d.array() -= 1.0;
      return d;
    }
    case LossKind::kCrossEntropy: {
      if (spec.output_activation != Activation::kIdentity) {
        throw ConfigError("cross-entropy needs an identity (logit) output");
      }
      if (static_cast<Eigen::Index>(labels.size()) < end) {
        throw ShapeError("cross-entropy needs target labels");
      }
      Eigen::MatrixXd logits = t.output.middleRows(begin, n);
      for (Eigen::Index i = 0; i < n; ++i) {
        const double mx = logits.row(i).maxCoeff();
        logits.row(i) = (logits.row(i).array() - mx).exp().matrix();
        logits.row(i) /= logits.row(i).sum();
        const int y = labels[begin + i];
        if (y < 0 || y >= spec.output_dim()) {
          throw ShapeError("target label out of range");
        }
        logits(i, y) -= 1.0;
      }
      return logits;
    }
  }
  return {};
}

inline double clamp_prob(double p) {
  return std::clamp(p, kProbClamp, 1.0 - kProbClamp);
}

inline Eigen::VectorXd losses(const Trace& t, LossKind loss,
                              const std::vector<int>& labels) {
  const Eigen::Index n = t.batch_size();
  Eigen::VectorXd out(n);
  for (Eigen::Index i = 0; i < n; ++i) {
    switch (loss) {
      case LossKind::kReal:
        out[i] = -std::log(clamp_prob(t.output(i, 0)));
        break;
      case LossKind::kFake:
        out[i] = -std::log(1.0 - clamp_prob(t.output(i, 0)));
        break;
      case LossKind::kCrossEntropy: {
        const auto row = t.output.row(i);
        const double mx = row.maxCoeff();
        const double lse = mx + std::log((row.array() - mx).exp().sum());
        out[i] = lse - row(labels[i]);
        break;
      }
    }
  }
  return out;
}

}  // namespace internal

inline Eigen::MatrixXd forward(const ModelState& model, const Batch& batch) {
  return internal::forward_trace(model, batch).output;
}

// Per-example loss values.
inline Eigen::VectorXd loss_values(const ModelState& model, const Batch& batch,
                                   LossKind loss) {
  const auto t = internal::forward_trace(model, batch);
  return internal::losses(t, loss, batch.labels);
}

// Gradient of the summed loss over the batch via ordinary batched backprop.
inline Eigen::VectorXd batch_gradient(const ModelState& model,
                                      const Batch& batch, LossKind loss) {
  const auto t = internal::forward_trace(model, batch);
  auto d = internal::backprop(
      model, t,
      internal::head_delta(model.spec, t, loss, batch.labels, 0, batch.size()));
  return internal::aggregate(model, t, d, batch.labels);
}

// Row i is the gradient of the loss on example i alone.
inline PerExampleGradMatrix backward_per_example(const ModelState& model,
                                                 const Batch& batch,
                                                 LossKind loss) {
  const NetworkSpec& spec = model.spec;
  const auto t = internal::forward_trace(model, batch);
  const auto d = internal::backprop(
      model, t,
      internal::head_delta(spec, t, loss, batch.labels, 0, batch.size()));
  const Eigen::Index n = batch.size();
  RowMatrix g = RowMatrix::Zero(n, spec.param_count());
  for (Eigen::Index i = 0; i < n; ++i) {
    double* row = g.row(i).data();
    for (int l = 0; l < spec.num_layers(); ++l) {
      const int in = spec.layer_sizes[l];
      const int out = spec.layer_sizes[l + 1];
      Eigen::Map<Eigen::MatrixXd>(row + spec.weight_offset(l), in, out)
          .noalias() = t.inputs[l].row(i).transpose() * d.layer[l].row(i);
      Eigen::Map<Eigen::RowVectorXd>(row + spec.bias_offset(l), out) =
          d.layer[l].row(i);
    }
    if (spec.conditional()) {
      const int e = spec.label_embed_dim;
      Eigen::Map<Eigen::RowVectorXd>(row + std::int64_t{batch.labels[i]} * e,
                                     e) = d.input.row(i).tail(e);
    }
  }
  auto m = PerExampleGradMatrix::from_rows(std::move(g));
  for (Eigen::Index i = 0; i < n; ++i) {
    if (!std::isfinite(m.per_example_norms[i])) {
      throw NumericError("non-finite per-example gradient", i);
    }
  }
  return m;
}

// Mean non-saturating generator gradient:
//   (1/B) sum_i grad_theta [ -log D(G(z_i, y_i), y_i) ].
// The noise batch carries latent vectors as inputs and the conditioning
// labels; the same labels condition the discriminator.
inline Eigen::VectorXd backward_mean(const ModelState& generator,
                                     const ModelState& discriminator,
                                     const Batch& noise_batch,
                                     double* mean_loss = nullptr) {
  if (generator.spec.output_dim() != discriminator.spec.data_dim()) {
    throw ShapeError("generator output width differs from discriminator input");
  }
  const Eigen::Index n = noise_batch.size();
  if (n == 0) {
    if (mean_loss) *mean_loss = 0.0;
    return Eigen::VectorXd::Zero(generator.param_count());
  }
  const auto tg = internal::forward_trace(generator, noise_batch);
  const Batch fake{tg.output, noise_batch.labels};
  const auto td = internal::forward_trace(discriminator, fake);
  Eigen::MatrixXd top = internal::head_delta(
      discriminator.spec, td, LossKind::kReal, fake.labels, 0, n);
  top /= double(n);
  const auto dd = internal::backprop(discriminator, td, std::move(top));

  Eigen::MatrixXd dx = dd.input.leftCols(discriminator.spec.data_dim());
  const NetworkSpec& gs = generator.spec;
  internal::scale_by_derivative(gs.output_activation, gs.leaky_slope,
                                tg.pre.back(), tg.output, dx);
  const auto dg = internal::backprop(generator, tg, std::move(dx));
  Eigen::VectorXd grad =
      internal::aggregate(generator, tg, dg, noise_batch.labels);
  for (Eigen::Index i = 0; i < n; ++i) {
    if (!dg.input.row(i).allFinite()) {
      throw NumericError("non-finite generator gradient", i);
    }
  }
  if (mean_loss) {
    *mean_loss = internal::losses(td, LossKind::kReal, fake.labels).mean();
  }
  return grad;
}

// Rows whose norm exceeds the clip norm by less than this relative amount
// count as already clipped.
inline constexpr double kClipTolerance = 1e-12;

// Sum of per-example gradients, each clipped to L2 norm `clip`, over the
// stacked real (loss -log D) and fake (loss -log(1 - D)) rows. Equivalent to
// clipping and summing the rows of backward_per_example, without forming the
// per-example matrix: a single-example dense-layer gradient is the outer
// product of the layer input and the layer delta, so its norm factorizes.
struct ClippedGradient {
  Eigen::VectorXd sum;
  Eigen::VectorXd norms;  // pre-clip norms, real rows first
  double real_loss = 0.0;
  double fake_loss = 0.0;
};

inline ClippedGradient clipped_gradient_sum(const ModelState& model,
                                            const Batch& real,
                                            const Batch& fake, double clip) {
  const NetworkSpec& spec = model.spec;
  const Batch all = concat(real, fake);
  const Eigen::Index nr = real.size();
  const Eigen::Index n = all.size();
  ClippedGradient out;
  if (n == 0) {
    out.sum = Eigen::VectorXd::Zero(spec.param_count());
    return out;
  }
  const auto t = internal::forward_trace(model, all);
  Eigen::MatrixXd top(n, 1);
  if (nr > 0) {
    top.topRows(nr) =
        internal::head_delta(spec, t, LossKind::kReal, all.labels, 0, nr);
  }
  if (n > nr) {
    top.bottomRows(n - nr) =
        internal::head_delta(spec, t, LossKind::kFake, all.labels, nr, n);
  }
  auto d = internal::backprop(model, t, std::move(top));

  Eigen::VectorXd sq = Eigen::VectorXd::Zero(n);
  for (int l = 0; l < spec.num_layers(); ++l) {
    sq.array() += (t.inputs[l].rowwise().squaredNorm().array() + 1.0) *
                  d.layer[l].rowwise().squaredNorm().array();
  }
  if (spec.conditional()) {
    sq += d.input.rightCols(spec.label_embed_dim).rowwise().squaredNorm();
  }
  out.norms = sq.cwiseSqrt();
  Eigen::VectorXd scale = Eigen::VectorXd::Ones(n);
  for (Eigen::Index i = 0; i < n; ++i) {
    const double norm = out.norms[i];
    if (!std::isfinite(norm)) {
      throw NumericError("non-finite per-example gradient", i);
    }
    if (norm > clip * (1.0 + kClipTolerance)) scale[i] = clip / norm;
  }
  for (auto& layer : d.layer) layer = scale.asDiagonal() * layer;
  d.input = scale.asDiagonal() * d.input;
  out.sum = internal::aggregate(model, t, d, all.labels);

  for (Eigen::Index i = 0; i < n; ++i) {
    const double p = internal::clamp_prob(t.output(i, 0));
    if (i < nr) {
      out.real_loss -= std::log(p);
    } else {
      out.fake_loss -= std::log(1.0 - p);
    }
  }
  return out;
}

}  // namespace dpgan
