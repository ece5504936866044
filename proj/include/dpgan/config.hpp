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

// Experiment configuration in a flat `section.key = value` text format.
// Lines starting with '#' are comments. Unknown or repeated keys are errors.
// Keys under `derived.` are written into run snapshots for provenance and
// ignored on load, since they are always recomputed from the data.

#pragma once

#include <cmath>
#include <cstdint>
#include <cstdlib>
#include <fstream>
#include <functional>
#include <limits>
#include <map>
#include <sstream>
#include <string>
#include <string_view>
#include <vector>

#include "dpgan/error.hpp"
#include "dpgan/eval.hpp"
#include "dpgan/format.hpp"
#include "dpgan/gan.hpp"

namespace dpgan {

enum class DatasetKind { kRing, kGrid, kCsv, kIdx };

struct DatasetConfig {
  DatasetKind kind = DatasetKind::kRing;
  int modes = 8;
  double radius = 0.8;
  double std = 0.05;
  int n = 75000;  // before the held-out split
  bool with_labels = false;
  std::uint64_t seed = 1234;
  double held_fraction = 0.2;
  std::string path;
  std::string image_path;
  std::string label_path;
};

struct EvalConfig {
  std::int64_t every = 3000;  // discriminator steps between eval rows
  int samples = 4000;
  double capture_radius = 0.0;  // <= 0 means 3 * dataset.std
  int probe_every = 10;         // generator steps between probe rows
  std::int64_t probe_until = 0;  // last probed generator step, 0 = no limit
  int probe_size = kDefaultProbeSize;
  bool downstream = true;
  int classifier_epochs = 20;
};

struct ExperimentConfig {
  DatasetConfig dataset;
  TrainConfig train;
  EvalConfig eval;
  std::string output_dir = "runs/default";
  std::vector<std::uint64_t> repeat_seeds;

  void validate() const {
    train.validate();
    const DatasetConfig& d = dataset;
    if (d.kind == DatasetKind::kRing && (d.modes < 2 || d.n < d.modes)) {
      throw ConfigError("ring dataset needs modes >= 2 and n >= modes");
    }
    if (!(d.std >= 0.0)) throw ConfigError("dataset.std must be >= 0");
    if (!(d.held_fraction > 0.0 && d.held_fraction < 1.0)) {
      throw ConfigError("dataset.held_fraction must be in (0, 1)");
    }
    if (d.kind == DatasetKind::kCsv && d.path.empty()) {
      throw ConfigError("dataset.path is required for csv datasets");
    }
    if (d.kind == DatasetKind::kIdx &&
        (d.image_path.empty() || d.label_path.empty())) {
      throw ConfigError("dataset.image_path and dataset.label_path are required");
    }
    if (eval.every < 1 || eval.probe_every < 1 || eval.probe_size < 1 ||
        eval.probe_until < 0 || eval.classifier_epochs < 1) {
      throw ConfigError("eval cadences and sizes must be positive");
    }
    if (eval.every % train.eval_every != 0) {
      throw ConfigError("eval.every must be a multiple of train.log_every");
    }
    if (eval.samples < 3) throw ConfigError("eval.samples must be >= 3");
    if (output_dir.empty()) throw ConfigError("output.dir must not be empty");
  }

  double capture_radius() const {
    if (eval.capture_radius > 0.0) return eval.capture_radius;
    return dataset.std > 0.0 ? 3.0 * dataset.std : 0.05;
  }
};

namespace config_internal {

inline std::string kind_name(DatasetKind k) {
  switch (k) {
    case DatasetKind::kRing: return "ring";
    case DatasetKind::kGrid: return "grid";
    case DatasetKind::kCsv: return "csv";
    case DatasetKind::kIdx: return "idx";
  }
  return "ring";
}

inline std::string join_ints(const std::vector<int>& v) {
  std::string s;
  for (std::size_t i = 0; i < v.size(); ++i) {
    if (i) s += ",";
    s += std::to_string(v[i]);
  }
  return s;
}

inline std::string join_u64(const std::vector<std::uint64_t>& v) {
  std::string s;
  for (std::size_t i = 0; i < v.size(); ++i) {
    if (i) s += ",";
    s += std::to_string(v[i]);
  }
  return s;
}

inline std::string bool_text(bool b) { return b ? "true" : "false"; }

class ValueParser {
 public:
  ValueParser(std::string key, std::string value, int line)
      : key_(std::move(key)), value_(std::move(value)), line_(line) {}

  [[noreturn]] void bad(const std::string& expected) const {
    throw ConfigError("line " + std::to_string(line_) + ": " + key_ +
                      " expects " + expected + ", got '" + value_ + "'");
  }
  double number() const {
    double v;
    if (!parse_double(value_, v)) bad("a number");
    return v;
  }
  template <typename Int>
  Int integer() const {
    Int v;
    if (!parse_int(value_, v)) bad("an integer");
    return v;
  }
  bool boolean() const {
    if (value_ == "true" || value_ == "1") return true;
    if (value_ == "false" || value_ == "0") return false;
    bad("true or false");
  }
  template <typename Int>
  std::vector<Int> integers() const {
    std::vector<Int> out;
    if (trim(value_).empty()) return out;
    for (const std::string& part : split_csv_line(value_)) {
      Int v;
      if (!parse_int(part, v)) bad("a comma-separated list of integers");
      out.push_back(v);
    }
    return out;
  }
  const std::string& text() const { return value_; }

 private:
  std::string key_;
  std::string value_;
  int line_;
};

using Setter = std::function<void(ExperimentConfig&, const ValueParser&)>;

inline const std::map<std::string, Setter>& setters() {
  static const std::map<std::string, Setter> table = [] {
    std::map<std::string, Setter> m;
    using C = ExperimentConfig;
    using P = ValueParser;
    m["dataset.kind"] = [](C& c, const P& p) {
      const std::string& v = p.text();
      if (v == "ring") c.dataset.kind = DatasetKind::kRing;
      else if (v == "grid") c.dataset.kind = DatasetKind::kGrid;
      else if (v == "csv") c.dataset.kind = DatasetKind::kCsv;
      else if (v == "idx") c.dataset.kind = DatasetKind::kIdx;
      else p.bad("one of ring, grid, csv, idx");
    };
    m["dataset.modes"] = [](C& c, const P& p) { c.dataset.modes = p.integer<int>(); };
    m["dataset.radius"] = [](C& c, const P& p) { c.dataset.radius = p.number(); };
    m["dataset.std"] = [](C& c, const P& p) { c.dataset.std = p.number(); };
    m["dataset.n"] = [](C& c, const P& p) { c.dataset.n = p.integer<int>(); };
    m["dataset.with_labels"] = [](C& c, const P& p) { c.dataset.with_labels = p.boolean(); };
    m["dataset.seed"] = [](C& c, const P& p) { c.dataset.seed = p.integer<std::uint64_t>(); };
    m["dataset.held_fraction"] = [](C& c, const P& p) { c.dataset.held_fraction = p.number(); };
    m["dataset.path"] = [](C& c, const P& p) { c.dataset.path = p.text(); };
    m["dataset.image_path"] = [](C& c, const P& p) { c.dataset.image_path = p.text(); };
    m["dataset.label_path"] = [](C& c, const P& p) { c.dataset.label_path = p.text(); };

    m["train.n_d"] = [](C& c, const P& p) { c.train.n_d = p.integer<int>(); };
    m["train.adaptive"] = [](C& c, const P& p) { c.train.adaptive = p.boolean(); };
    m["train.schedule_beta"] = [](C& c, const P& p) { c.train.schedule_beta = p.number(); };
    m["train.schedule_floor"] = [](C& c, const P& p) { c.train.schedule_floor = p.number(); };
    m["train.total_d_steps"] = [](C& c, const P& p) { c.train.total_d_steps = p.integer<std::int64_t>(); };
    m["train.batch"] = [](C& c, const P& p) { c.train.batch = p.integer<int>(); };
    m["train.private"] = [](C& c, const P& p) { c.train.private_mode = p.boolean(); };
    m["train.sigma"] = [](C& c, const P& p) { c.train.sigma = p.number(); };
    m["train.clip"] = [](C& c, const P& p) { c.train.clip = p.number(); };
    m["train.delta"] = [](C& c, const P& p) { c.train.delta = p.number(); };
    m["train.seed"] = [](C& c, const P& p) { c.train.seed = p.integer<std::uint64_t>(); };
    m["train.log_every"] = [](C& c, const P& p) { c.train.eval_every = p.integer<int>(); };
    m["train.latent_dim"] = [](C& c, const P& p) { c.train.latent_dim = p.integer<int>(); };

    m["model.d_hidden"] = [](C& c, const P& p) { c.train.model.d_hidden = p.integers<int>(); };
    m["model.g_hidden"] = [](C& c, const P& p) { c.train.model.g_hidden = p.integers<int>(); };
    m["model.label_embed_dim"] = [](C& c, const P& p) { c.train.model.label_embed_dim = p.integer<int>(); };
    m["model.leaky_slope"] = [](C& c, const P& p) { c.train.model.leaky_slope = p.number(); };

    m["optim.d_lr"] = [](C& c, const P& p) { c.train.d_adam.alpha = p.number(); };
    m["optim.d_beta1"] = [](C& c, const P& p) { c.train.d_adam.beta1 = p.number(); };
    m["optim.d_beta2"] = [](C& c, const P& p) { c.train.d_adam.beta2 = p.number(); };
    m["optim.d_eps"] = [](C& c, const P& p) { c.train.d_adam.eps_hat = p.number(); };
    m["optim.g_lr"] = [](C& c, const P& p) { c.train.g_adam.alpha = p.number(); };
    m["optim.g_beta1"] = [](C& c, const P& p) { c.train.g_adam.beta1 = p.number(); };
    m["optim.g_beta2"] = [](C& c, const P& p) { c.train.g_adam.beta2 = p.number(); };
    m["optim.g_eps"] = [](C& c, const P& p) { c.train.g_adam.eps_hat = p.number(); };

    m["eval.every"] = [](C& c, const P& p) { c.eval.every = p.integer<std::int64_t>(); };
    m["eval.samples"] = [](C& c, const P& p) { c.eval.samples = p.integer<int>(); };
    m["eval.capture_radius"] = [](C& c, const P& p) { c.eval.capture_radius = p.number(); };
    m["eval.probe_every"] = [](C& c, const P& p) { c.eval.probe_every = p.integer<int>(); };
    m["eval.probe_until"] = [](C& c, const P& p) { c.eval.probe_until = p.integer<std::int64_t>(); };
    m["eval.probe_size"] = [](C& c, const P& p) { c.eval.probe_size = p.integer<int>(); };
    m["eval.downstream"] = [](C& c, const P& p) { c.eval.downstream = p.boolean(); };
    m["eval.classifier_epochs"] = [](C& c, const P& p) { c.eval.classifier_epochs = p.integer<int>(); };

    m["output.dir"] = [](C& c, const P& p) { c.output_dir = p.text(); };
    m["run.repeat_seeds"] = [](C& c, const P& p) { c.repeat_seeds = p.integers<std::uint64_t>(); };
    return m;
  }();
  return table;
}

// Splits `key = value` text into ordered pairs, rejecting malformed lines.
inline std::vector<std::pair<std::string, std::string>> parse_pairs(
    std::string_view text, std::vector<int>* lines = nullptr) {
  std::vector<std::pair<std::string, std::string>> out;
  std::istringstream in{std::string(text)};
  std::string raw;
  int line = 0;
  while (std::getline(in, raw)) {
    ++line;
    const std::string_view s = trim(raw);
    if (s.empty() || s.front() == '#') continue;
    const auto eq = s.find('=');
    if (eq == std::string_view::npos) {
      throw ConfigError("line " + std::to_string(line) + ": expected key = value");
    }
    const std::string key(trim(s.substr(0, eq)));
    if (key.empty()) {
      throw ConfigError("line " + std::to_string(line) + ": empty key");
    }
    out.emplace_back(key, std::string(trim(s.substr(eq + 1))));
    if (lines) lines->push_back(line);
  }
  return out;
}

}  // namespace config_internal

// Parses configuration text on top of the defaults. Does not validate.
inline ExperimentConfig parse_config(std::string_view text) {
  using namespace config_internal;
  ExperimentConfig c;
  std::vector<int> lines;
  const auto pairs = parse_pairs(text, &lines);
  std::map<std::string, int> seen;
  for (std::size_t i = 0; i < pairs.size(); ++i) {
    const auto& [key, value] = pairs[i];
    if (!seen.emplace(key, lines[i]).second) {
      throw ConfigError("line " + std::to_string(lines[i]) + ": duplicate key " +
                        key + " (first set on line " +
                        std::to_string(seen[key]) + ")");
    }
    if (key.rfind("derived.", 0) == 0) continue;
    const auto it = setters().find(key);
    if (it == setters().end()) {
      throw ConfigError("line " + std::to_string(lines[i]) + ": unknown key " + key);
    }
    it->second(c, ValueParser(key, value, lines[i]));
  }
  return c;
}

inline std::string read_text_file(const std::string& path) {
  std::ifstream in(path, std::ios::binary);
  if (!in) throw IoError("cannot open " + path);
  std::ostringstream ss;
  ss << in.rdbuf();
  return ss.str();
}

// Applies the DPGAN_SEED environment override: it replaces the training seed
// and collapses any repeat list to that single seed.
inline void apply_env_overrides(ExperimentConfig& c) {
  const char* env = std::getenv("DPGAN_SEED");
  if (env == nullptr) return;
  std::uint64_t seed;
  if (!parse_int(std::string_view(env), seed)) {
    throw ConfigError(std::string("DPGAN_SEED is not an integer: ") + env);
  }
  c.train.seed = seed;
  c.repeat_seeds.clear();
}

inline ExperimentConfig load_config(const std::string& path) {
  ExperimentConfig c = parse_config(read_text_file(path));
  apply_env_overrides(c);
  c.validate();
  return c;
}

// Canonical text form; parse_config(to_config_text(c)) reproduces `c`.
inline std::string to_config_text(const ExperimentConfig& c) {
  using namespace config_internal;
  const TrainConfig& t = c.train;
  std::ostringstream o;
  o << "dataset.kind = " << kind_name(c.dataset.kind) << "\n"
    << "dataset.modes = " << c.dataset.modes << "\n"
    << "dataset.radius = " << format_double(c.dataset.radius) << "\n"
    << "dataset.std = " << format_double(c.dataset.std) << "\n"
    << "dataset.n = " << c.dataset.n << "\n"
    << "dataset.with_labels = " << bool_text(c.dataset.with_labels) << "\n"
    << "dataset.seed = " << c.dataset.seed << "\n"
    << "dataset.held_fraction = " << format_double(c.dataset.held_fraction) << "\n"
    << "dataset.path = " << c.dataset.path << "\n"
    << "dataset.image_path = " << c.dataset.image_path << "\n"
    << "dataset.label_path = " << c.dataset.label_path << "\n"
    << "train.n_d = " << t.n_d << "\n"
    << "train.adaptive = " << bool_text(t.adaptive) << "\n"
    << "train.schedule_beta = " << format_double(t.schedule_beta) << "\n"
    << "train.schedule_floor = " << format_double(t.schedule_floor) << "\n"
    << "train.total_d_steps = " << t.total_d_steps << "\n"
    << "train.batch = " << t.batch << "\n"
    << "train.private = " << bool_text(t.private_mode) << "\n"
    << "train.sigma = " << format_double(t.sigma) << "\n"
    << "train.clip = " << format_double(t.clip) << "\n"
    << "train.delta = " << format_double(t.delta) << "\n"
    << "train.seed = " << t.seed << "\n"
    << "train.log_every = " << t.eval_every << "\n"
    << "train.latent_dim = " << t.latent_dim << "\n"
    << "model.d_hidden = " << join_ints(t.model.d_hidden) << "\n"
    << "model.g_hidden = " << join_ints(t.model.g_hidden) << "\n"
    << "model.label_embed_dim = " << t.model.label_embed_dim << "\n"
    << "model.leaky_slope = " << format_double(t.model.leaky_slope) << "\n"
    << "optim.d_lr = " << format_double(t.d_adam.alpha) << "\n"
    << "optim.d_beta1 = " << format_double(t.d_adam.beta1) << "\n"
    << "optim.d_beta2 = " << format_double(t.d_adam.beta2) << "\n"
    << "optim.d_eps = " << format_double(t.d_adam.eps_hat) << "\n"
    << "optim.g_lr = " << format_double(t.g_adam.alpha) << "\n"
    << "optim.g_beta1 = " << format_double(t.g_adam.beta1) << "\n"
    << "optim.g_beta2 = " << format_double(t.g_adam.beta2) << "\n"
    << "optim.g_eps = " << format_double(t.g_adam.eps_hat) << "\n"
    << "eval.every = " << c.eval.every << "\n"
    << "eval.samples = " << c.eval.samples << "\n"
    << "eval.capture_radius = " << format_double(c.eval.capture_radius) << "\n"
    << "eval.probe_every = " << c.eval.probe_every << "\n"
    << "eval.probe_until = " << c.eval.probe_until << "\n"
    << "eval.probe_size = " << c.eval.probe_size << "\n"
    << "eval.downstream = " << bool_text(c.eval.downstream) << "\n"
    << "eval.classifier_epochs = " << c.eval.classifier_epochs << "\n"
    << "output.dir = " << c.output_dir << "\n"
    << "run.repeat_seeds = " << join_u64(c.repeat_seeds) << "\n";
  return o.str();
}

}  // namespace dpgan
