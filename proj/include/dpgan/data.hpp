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

// Labelled datasets: synthetic mixtures, CSV and IDX ingestion, splitting.

#pragma once

#include <Eigen/Dense>

#include <algorithm>
#include <cmath>
#include <cstdint>
#include <fstream>
#include <numbers>
#include <numeric>
#include <sstream>
#include <string>
#include <vector>

#include "dpgan/error.hpp"
#include "dpgan/format.hpp"
#include "dpgan/nn.hpp"
#include "dpgan/rng.hpp"

namespace dpgan {

struct Dataset {
  Eigen::MatrixXd features;  // one row per example
  std::vector<int> labels;
  int num_classes = 0;

  int size() const { return static_cast<int>(features.rows()); }
  int dim() const { return static_cast<int>(features.cols()); }

  Batch gather(const std::vector<int>& rows) const {
    Batch b;
    b.inputs.resize(static_cast<Eigen::Index>(rows.size()), dim());
    if (labelled()) b.labels.resize(rows.size());
    for (std::size_t i = 0; i < rows.size(); ++i) {
      b.inputs.row(i) = features.row(rows[i]);
      if (labelled()) b.labels[i] = labels[rows[i]];
    }
    return b;
  }

  bool labelled() const { return !labels.empty(); }

  // Same features with the labels dropped (unconditional training).
  Dataset without_labels() const { return {features, {}, 0}; }

  Batch as_batch() const { return {features, labels}; }
};

// Mode centers used by the coverage metric.
inline std::vector<Eigen::VectorXd> ring_centers(int modes, double radius) {
  std::vector<Eigen::VectorXd> c;
  for (int m = 0; m < modes; ++m) {
    const double a = 2.0 * std::numbers::pi * m / modes;
    Eigen::VectorXd v(2);
    v << radius * std::cos(a), radius * std::sin(a);
    c.push_back(v);
  }
  return c;
}

// 5 x 5 grid spanning [-0.8, 0.8]^2, row-major from the bottom-left corner.
inline std::vector<Eigen::VectorXd> grid_centers() {
  std::vector<Eigen::VectorXd> c;
  for (int i = 0; i < 5; ++i) {
    for (int j = 0; j < 5; ++j) {
      Eigen::VectorXd v(2);
      v << -0.8 + 0.4 * j, -0.8 + 0.4 * i;
      c.push_back(v);
    }
  }
  return c;
}

// Example i belongs to mode i mod K and sits at that center plus isotropic
// Gaussian noise; labels are mode indices.
inline Dataset make_mixture_dataset(const std::vector<Eigen::VectorXd>& centers,
                                    double stddev, int n, std::uint64_t seed) {
  const int k = static_cast<int>(centers.size());
  if (k < 2) throw ConfigError("mixture needs at least 2 modes");
  if (n < k) throw ConfigError("need at least one example per mode");
  if (!(stddev >= 0.0)) throw ConfigError("negative noise level");
  const int dim = static_cast<int>(centers.front().size());
  Rng rng(seed);
  Dataset d;
  d.features.resize(n, dim);
  d.labels.resize(n);
  d.num_classes = k;
  for (int i = 0; i < n; ++i) {
    const int c = i % k;
    d.labels[i] = c;
    for (int j = 0; j < dim; ++j) {
      d.features(i, j) = centers[c][j] + stddev * rng.normal();
    }
  }
  return d;
}

inline Dataset make_ring_dataset(int modes, double radius, double stddev, int n,
                                 std::uint64_t seed) {
  if (modes < 2) throw ConfigError("ring needs K >= 2");
  return make_mixture_dataset(ring_centers(modes, radius), stddev, n, seed);
}

inline Dataset make_grid_dataset(double stddev, int n, std::uint64_t seed) {
  return make_mixture_dataset(grid_centers(), stddev, n, seed);
}

struct DataSplit {
  Dataset train;
  Dataset held_out;
  std::vector<int> train_rows;  // row indices into the source dataset
  std::vector<int> held_rows;
};

// Deterministic shuffled split; held_out gets round(fraction * n) rows.
inline DataSplit split_dataset(const Dataset& d, double held_fraction,
                               std::uint64_t seed) {
  if (!(held_fraction > 0.0 && held_fraction < 1.0)) {
    throw ConfigError("held-out fraction must be in (0, 1)");
  }
  std::vector<int> perm(d.size());
  std::iota(perm.begin(), perm.end(), 0);
  Rng rng(seed);
  for (int i = d.size() - 1; i > 0; --i) {
    std::swap(perm[i], perm[rng.uniform_int(i + 1)]);
  }
  const int held = static_cast<int>(std::lround(held_fraction * d.size()));
  if (held < 1 || held >= d.size()) {
    throw ConfigError("dataset too small to split");
  }
  DataSplit s;
  s.held_rows.assign(perm.begin(), perm.begin() + held);
  s.train_rows.assign(perm.begin() + held, perm.end());
  std::sort(s.held_rows.begin(), s.held_rows.end());
  std::sort(s.train_rows.begin(), s.train_rows.end());
  auto take = [&](const std::vector<int>& rows) {
    Batch b = d.gather(rows);
    return Dataset{std::move(b.inputs), std::move(b.labels), d.num_classes};
  };
  s.train = take(s.train_rows);
  s.held_out = take(s.held_rows);
  return s;
}

inline void export_csv(const Dataset& d, const std::string& path) {
  if (!d.labelled()) throw ConfigError("CSV export needs labels");
  std::ofstream out(path, std::ios::binary);
  if (!out) throw IoError("cannot open " + path + " for writing");
  for (int j = 0; j < d.dim(); ++j) out << "x" << j << ",";
  out << "label\n";
  for (int i = 0; i < d.size(); ++i) {
    for (int j = 0; j < d.dim(); ++j) out << format_double(d.features(i, j)) << ",";
    out << d.labels[i] << "\n";
  }
  if (!out) throw IoError("write failed for " + path);
}

// Maps all features affinely so the global minimum becomes -1 and the global
// maximum +1. A constant dataset maps to 0.
inline void rescale_to_unit_box(Eigen::MatrixXd& x) {
  if (x.size() == 0) return;
  const double lo = x.minCoeff();
  const double hi = x.maxCoeff();
  if (hi == lo) {
    x.setZero();
    return;
  }
  x = ((x.array() - lo) * (2.0 / (hi - lo)) - 1.0).matrix();
}

struct IngestOptions {
  bool rescale = true;
};

// Header row required; the column named `label` holds integer classes and
// every other column is a numeric feature.
inline Dataset ingest_csv(const std::string& path, IngestOptions opts = {}) {
  std::ifstream in(path, std::ios::binary);
  if (!in) throw IoError("cannot open " + path);
  std::string line;
  std::int64_t offset = 0;
  if (!std::getline(in, line)) throw IoError("missing CSV header in " + path, 0);
  if (!line.empty() && line.back() == '\r') line.pop_back();
  std::vector<std::string> header = split_csv_line(line);
  const auto label_it = std::find(header.begin(), header.end(), "label");
  if (label_it == header.end()) {
    throw IoError("CSV header has no `label` column", 0);
  }
  const std::size_t label_col = label_it - header.begin();
  const std::size_t width = header.size();
  if (width < 2) throw IoError("CSV needs at least one feature column", 0);
  offset += static_cast<std::int64_t>(line.size()) + 1;

  std::vector<double> values;
  std::vector<int> labels;
  while (std::getline(in, line)) {
    const std::int64_t row_offset = offset;
    offset += static_cast<std::int64_t>(line.size()) + 1;
    if (!line.empty() && line.back() == '\r') line.pop_back();
    if (line.empty()) continue;
    const auto cells = split_csv_line(line);
    if (cells.size() != width) {
      throw IoError("CSV row has " + std::to_string(cells.size()) +
                        " fields, header has " + std::to_string(width),
                    row_offset);
    }
    for (std::size_t c = 0; c < width; ++c) {
      if (c == label_col) {
        int y;
        if (!parse_int(cells[c], y) || y < 0) {
          throw IoError("bad label `" + cells[c] + "`", row_offset);
        }
        labels.push_back(y);
      } else {
        double v;
        if (!parse_double(cells[c], v) || !std::isfinite(v)) {
          throw IoError("bad numeric field `" + cells[c] + "`", row_offset);
        }
        values.push_back(v);
      }
    }
  }
  Dataset d;
  const Eigen::Index n = static_cast<Eigen::Index>(labels.size());
  const Eigen::Index dim = static_cast<Eigen::Index>(width - 1);
  d.features = Eigen::Map<const RowMatrix>(values.data(), n, dim);
  d.labels = std::move(labels);
  d.num_classes =
      d.labels.empty() ? 0 : *std::max_element(d.labels.begin(), d.labels.end()) + 1;
  if (opts.rescale) rescale_to_unit_box(d.features);
  return d;
}

namespace idx_internal {

inline std::vector<unsigned char> read_all(const std::string& path) {
  std::ifstream in(path, std::ios::binary);
  if (!in) throw IoError("cannot open " + path);
  return {std::istreambuf_iterator<char>(in), std::istreambuf_iterator<char>()};
}

inline std::uint32_t be32(const std::vector<unsigned char>& b,
                          std::size_t off) {
  if (off + 4 > b.size()) {
    throw IoError("truncated IDX header", static_cast<std::int64_t>(off));
  }
  return (std::uint32_t{b[off]} << 24) | (std::uint32_t{b[off + 1]} << 16) |
         (std::uint32_t{b[off + 2]} << 8) | std::uint32_t{b[off + 3]};
}

}  // namespace idx_internal

inline constexpr std::uint32_t kIdxImageMagic = 0x00000803;
inline constexpr std::uint32_t kIdxLabelMagic = 0x00000801;

// Unsigned-byte IDX image and label files. Pixels 0..255 map linearly onto
// [-1, 1].
inline Dataset ingest_idx(const std::string& image_path,
                          const std::string& label_path) {
  using idx_internal::be32;
  const auto img = idx_internal::read_all(image_path);
  const auto lab = idx_internal::read_all(label_path);
  if (be32(img, 0) != kIdxImageMagic) {
    throw IoError("bad IDX image magic in " + image_path, 0);
  }
  if (be32(lab, 0) != kIdxLabelMagic) {
    throw IoError("bad IDX label magic in " + label_path, 0);
  }
  const std::uint32_t n = be32(img, 4);
  const std::uint32_t rows = be32(img, 8);
  const std::uint32_t cols = be32(img, 12);
  const std::uint32_t nl = be32(lab, 4);
  if (nl != n) {
    throw IoError("label count " + std::to_string(nl) +
                      " differs from image count " + std::to_string(n),
                  4);
  }
  const std::size_t pixels = std::size_t{rows} * cols;
  if (img.size() < 16 + std::size_t{n} * pixels) {
    throw IoError("truncated IDX image data",
                  static_cast<std::int64_t>(img.size()));
  }
  if (lab.size() < 8 + std::size_t{n}) {
    throw IoError("truncated IDX label data",
                  static_cast<std::int64_t>(lab.size()));
  }
  Dataset d;
  d.features.resize(n, static_cast<Eigen::Index>(pixels));
  d.labels.resize(n);
  for (std::uint32_t i = 0; i < n; ++i) {
    for (std::size_t p = 0; p < pixels; ++p) {
      d.features(i, static_cast<Eigen::Index>(p)) =
          img[16 + i * pixels + p] / 127.5 - 1.0;
    }
    d.labels[i] = lab[8 + i];
  }
  d.num_classes =
      n == 0 ? 0 : *std::max_element(d.labels.begin(), d.labels.end()) + 1;
  return d;
}

}  // namespace dpgan
