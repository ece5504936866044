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

#pragma once

#include <vector>

#include "dpgan/nn.hpp"
#include "dpgan/rng.hpp"

namespace dpgan {

// Latent batch for the generator: per row, the class label (uniform over
// `num_classes`, omitted when unconditional) followed by a standard normal
// latent vector.
inline Batch sample_noise(int n, int latent_dim, int num_classes, Rng& rng) {
  Batch b;
  b.inputs.resize(n, latent_dim);
  if (num_classes > 0) b.labels.resize(n);
  for (int i = 0; i < n; ++i) {
    if (num_classes > 0) b.labels[i] = rng.uniform_int(num_classes);
    for (int j = 0; j < latent_dim; ++j) b.inputs(i, j) = rng.normal();
  }
  return b;
}

// Latent batch with caller-chosen labels.
inline Batch sample_noise(const std::vector<int>& labels, int latent_dim,
                          Rng& rng) {
  Batch b;
  const int n = static_cast<int>(labels.size());
  b.inputs.resize(n, latent_dim);
  b.labels = labels;
  for (int i = 0; i < n; ++i) {
    for (int j = 0; j < latent_dim; ++j) b.inputs(i, j) = rng.normal();
  }
  return b;
}

// Generated examples with the labels they were conditioned on.
inline Batch generate(const ModelState& generator, const Batch& noise) {
  return {forward(generator, noise), noise.labels};
}

inline Batch generate(const ModelState& generator, int n, int num_classes,
                      Rng& rng) {
  const int latent = generator.spec.data_dim();
  return generate(generator, sample_noise(n, latent, num_classes, rng));
}

}  // namespace dpgan
