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

// Experiment orchestration: data preparation, single runs with their output
// directories, sweeps and restart experiments.
//
// A run directory holds
//   config.txt       resolved configuration plus derived.* provenance keys
//   train_log.csv    one row per log point
//   eval_report.csv  sample-quality metrics at the eval cadence
//   probe_log.csv    discriminator accuracy probe at the probe cadence
//   checkpoint.ckpt  trainer state at the end of the run
//   summary.txt      "epsilon=<v> order=<a>" followed by status lines
//
// All evaluation randomness is derived from (seed, purpose, step) so that
// measuring a run never perturbs its training stream.

#pragma once

#include <algorithm>
#include <cmath>
#include <cstdint>
#include <filesystem>
#include <fstream>
#include <iostream>
#include <limits>
#include <optional>
#include <set>
#include <sstream>
#include <string>
#include <vector>

#include "dpgan/accountant.hpp"
#include "dpgan/checkpoint.hpp"
#include "dpgan/config.hpp"
#include "dpgan/data.hpp"
#include "dpgan/error.hpp"
#include "dpgan/eval.hpp"
#include "dpgan/format.hpp"
#include "dpgan/gan.hpp"

namespace dpgan {

inline constexpr double kNaN = std::numeric_limits<double>::quiet_NaN();

// ---------------------------------------------------------------- data

struct PreparedData {
  Dataset train;           // labels dropped for unconditional training
  Dataset held_out;        // keeps source labels for downstream testing
  Batch probe_real;        // held-out rows shaped like the training input
  std::optional<ModeSpec> modes;
  std::vector<int> train_rows;
  std::vector<int> held_rows;
};

inline void check_disjoint(const std::vector<int>& a, const std::vector<int>& b) {
  std::vector<int> sa = a, sb = b, both;
  std::sort(sa.begin(), sa.end());
  std::sort(sb.begin(), sb.end());
  std::set_intersection(sa.begin(), sa.end(), sb.begin(), sb.end(),
                        std::back_inserter(both));
  if (!both.empty()) {
    throw ConfigError("held-out split overlaps the training split at row " +
                      std::to_string(both.front()));
  }
}

inline Dataset load_source(const DatasetConfig& d) {
  switch (d.kind) {
    case DatasetKind::kRing:
      return make_ring_dataset(d.modes, d.radius, d.std, d.n, d.seed);
    case DatasetKind::kGrid:
      return make_grid_dataset(d.std, d.n, d.seed);
    case DatasetKind::kCsv:
      return ingest_csv(d.path);
    case DatasetKind::kIdx:
      return ingest_idx(d.image_path, d.label_path);
  }
  throw ConfigError("unknown dataset kind");
}

inline PreparedData prepare_data(const ExperimentConfig& c) {
  const Dataset all = load_source(c.dataset);
  DataSplit split = split_dataset(all, c.dataset.held_fraction,
                                  Rng::derive(c.dataset.seed, 0x5e1).next_u64());
  check_disjoint(split.train_rows, split.held_rows);
  PreparedData p;
  p.train = c.dataset.with_labels ? std::move(split.train)
                                  : split.train.without_labels();
  p.held_out = std::move(split.held_out);
  p.probe_real = c.dataset.with_labels ? p.held_out.as_batch()
                                       : Batch{p.held_out.features, {}};
  p.train_rows = std::move(split.train_rows);
  p.held_rows = std::move(split.held_rows);
  if (c.dataset.kind == DatasetKind::kRing) {
    p.modes = ModeSpec{ring_centers(c.dataset.modes, c.dataset.radius),
                       c.capture_radius()};
  } else if (c.dataset.kind == DatasetKind::kGrid) {
    p.modes = ModeSpec{grid_centers(), c.capture_radius()};
  }
  return p;
}

// ---------------------------------------------------------------- metrics

struct EvalRow {
  std::int64_t t = 0;
  double frechet = kNaN;
  double covered_modes = kNaN;
  double hq_fraction = kNaN;
  double probe_acc = kNaN;
  double downstream_acc = kNaN;
};

inline constexpr const char* kEvalReportHeader =
    "t,frechet,covered_modes,hq_fraction,probe_acc,downstream_acc";

inline std::string to_csv(const EvalRow& r) {
  return std::to_string(r.t) + "," + format_double(r.frechet) + "," +
         format_double(r.covered_modes) + "," + format_double(r.hq_fraction) +
         "," + format_double(r.probe_acc) + "," +
         format_double(r.downstream_acc);
}

struct ProbeRow {
  std::int64_t k = 0;
  std::int64_t t = 0;
  double probe_acc = kNaN;
};

inline constexpr const char* kProbeLogHeader = "k,t,probe_acc";

inline std::string to_csv(const ProbeRow& r) {
  return std::to_string(r.k) + "," + std::to_string(r.t) + "," +
         format_double(r.probe_acc);
}

// Stream tags for evaluation randomness.
enum EvalStream : std::uint64_t {
  kSampleStream = 11,
  kEvalProbeStream = 12,
  kProbeLogStream = 13,
  kClassifierStream = 14,
};

inline int nearest_center(const Eigen::VectorXd& x,
                          const std::vector<Eigen::VectorXd>& centers) {
  int best = 0;
  double best_d = std::numeric_limits<double>::infinity();
  for (std::size_t m = 0; m < centers.size(); ++m) {
    const double d = (x - centers[m]).squaredNorm();
    if (d < best_d) {
      best_d = d;
      best = static_cast<int>(m);
    }
  }
  return best;
}

class Evaluator {
 public:
  Evaluator(const PreparedData& data, EvalConfig config, std::uint64_t seed)
      : data_(data),
        config_(std::move(config)),
        seed_(seed),
        real_(fit_gaussian(data.held_out.features)) {}

  EvalRow evaluate(const TrainerState& s) const {
    EvalRow r;
    r.t = s.t;
    Rng rng = Rng::derive(seed_, kSampleStream, static_cast<std::uint64_t>(s.t));
    const Batch fake = generate(s.g, config_.samples, s.g.spec.num_classes, rng);
    r.frechet = frechet_distance(fit_gaussian(fake.inputs), real_);
    if (data_.modes) {
      const CoverageReport cov = mode_coverage(fake.inputs, *data_.modes);
      r.covered_modes = cov.covered;
      r.hq_fraction = cov.high_quality_fraction;
    }
    Rng prng = Rng::derive(seed_, kEvalProbeStream, static_cast<std::uint64_t>(s.t));
    r.probe_acc = disc_accuracy_probe(s.d, data_.probe_real, s.g,
                                      config_.probe_size, prng);
    if (config_.downstream) r.downstream_acc = downstream(s, fake);
    return r;
  }

  double probe(const TrainerState& s) const {
    Rng rng = Rng::derive(seed_, kProbeLogStream, static_cast<std::uint64_t>(s.t));
    return disc_accuracy_probe(s.d, data_.probe_real, s.g, config_.probe_size,
                               rng);
  }

 private:
  // Trains a classifier on labelled fakes and scores it on held-out real
  // data. Unconditional fakes are labelled by their nearest mode center.
  double downstream(const TrainerState& s, const Batch& fake) const {
    if (!data_.held_out.labelled()) return kNaN;
    Dataset gen;
    gen.features = fake.inputs;
    gen.num_classes = data_.held_out.num_classes;
    if (fake.labelled()) {
      gen.labels = fake.labels;
    } else if (data_.modes) {
      gen.labels.resize(fake.size());
      for (int i = 0; i < fake.size(); ++i) {
        gen.labels[i] = nearest_center(fake.inputs.row(i).transpose(),
                                       data_.modes->centers);
      }
    } else {
      return kNaN;
    }
    ClassifierOptions opts;
    opts.epochs = config_.classifier_epochs;
    const std::uint64_t cseed =
        Rng::derive(seed_, kClassifierStream, static_cast<std::uint64_t>(s.t))
            .next_u64();
    return downstream_accuracy(gen, data_.held_out, cseed, opts);
  }

  const PreparedData& data_;
  EvalConfig config_;
  std::uint64_t seed_;
  GaussianSummary real_;
};

// ---------------------------------------------------------------- output

class CsvWriter {
 public:
  CsvWriter() = default;
  CsvWriter(const std::string& path, const char* header, bool append) {
    const bool fresh = !append || !std::filesystem::exists(path);
    out_.open(path, std::ios::binary | (fresh ? std::ios::trunc : std::ios::app));
    if (!out_) throw IoError("cannot open " + path + " for writing");
    if (fresh) out_ << header << "\n";
    out_.flush();
  }
  void row(const std::string& line) {
    if (!out_.is_open()) return;
    out_ << line << "\n";
    out_.flush();
    if (!out_) throw IoError("write failed");
  }

 private:
  std::ofstream out_;
};

inline void write_text(const std::string& path, const std::string& text) {
  std::ofstream out(path, std::ios::binary | std::ios::trunc);
  if (!out) throw IoError("cannot open " + path + " for writing");
  out << text;
  if (!out) throw IoError("write failed for " + path);
}

inline std::string resolved_config_text(const ExperimentConfig& c,
                                        const PreparedData& data) {
  const PrivacySpec p = c.train.privacy(data.train.size());
  std::string orders;
  for (double a : default_orders()) {
    if (!orders.empty()) orders += ",";
    orders += format_double(a);
  }
  std::ostringstream o;
  o << to_config_text(c)
    << "derived.train_size = " << data.train.size() << "\n"
    << "derived.held_size = " << data.held_out.size() << "\n"
    << "derived.q = " << format_double(p.sampling_rate) << "\n"
    << "derived.capture_radius = "
    << format_double(data.modes ? data.modes->capture_radius : kNaN) << "\n"
    << "derived.orders = " << orders << "\n";
  return o.str();
}

// ---------------------------------------------------------------- run

struct RunOptions {
  std::string dir;                       // empty: keep everything in memory
  std::int64_t stop_at = -1;             // interrupt after this many D steps
  std::optional<TrainerState> resume;    // continue from this state
  bool append = false;                   // append to existing CSVs in `dir`
};

struct RunResult {
  std::string dir;
  TrainLog log;
  std::vector<EvalRow> eval;
  std::vector<ProbeRow> probes;
  EpsilonResult epsilon;
  TrainerState final_state;
};

inline std::string summary_text(const EpsilonResult& e, const TrainerState& s,
                                const std::string& status) {
  return "epsilon=" + format_double(e.epsilon) + " order=" +
         format_double(e.order) + "\n" + "t=" + std::to_string(s.t) + "\n" +
         "k=" + std::to_string(s.k) + "\n" + "status=" + status + "\n" +
         // Probe rows read held-out data with no privacy mechanism.
         "probe=diagnostic_not_dp_releasable\n";
}

// Trains one configuration with seed `config.train.seed`.
inline RunResult execute_run(const ExperimentConfig& config,
                             const PreparedData& data,
                             const RunOptions& opts = {}) {
  config.validate();
  const bool files = !opts.dir.empty();
  RunResult result;
  result.dir = opts.dir;
  CsvWriter train_csv, eval_csv, probe_csv;
  if (files) {
    std::error_code ec;
    std::filesystem::create_directories(opts.dir, ec);
    if (ec) throw IoError("cannot create " + opts.dir + ": " + ec.message());
    write_text(opts.dir + "/config.txt", resolved_config_text(config, data));
    train_csv = CsvWriter(opts.dir + "/train_log.csv", kTrainLogHeader, opts.append);
    eval_csv = CsvWriter(opts.dir + "/eval_report.csv", kEvalReportHeader, opts.append);
    probe_csv = CsvWriter(opts.dir + "/probe_log.csv", kProbeLogHeader, opts.append);
  }

  Trainer trainer = opts.resume ? Trainer(config.train, data.train, *opts.resume)
                                : Trainer(config.train, data.train);
  const Evaluator evaluator(data, config.eval, config.train.seed);
  const std::int64_t total = config.train.total_d_steps;

  TrainHooks hooks;
  hooks.on_log = [&](const TrainerState& s, const LogRow& row) {
    train_csv.row(to_csv(row));
    if (s.t % config.eval.every == 0 || s.t == total) {
      result.eval.push_back(evaluator.evaluate(s));
      eval_csv.row(to_csv(result.eval.back()));
    }
  };
  hooks.after_generator_step = [&](const TrainerState& s) {
    if (s.k % config.eval.probe_every != 0) return;
    if (config.eval.probe_until > 0 && s.k > config.eval.probe_until) return;
    result.probes.push_back({s.k, s.t, evaluator.probe(s)});
    probe_csv.row(to_csv(result.probes.back()));
  };

  auto finish = [&](const std::string& status) {
    result.final_state = trainer.state();
    result.log = trainer.log();
    result.epsilon = trainer.epsilon();
    if (files) {
      save_checkpoint(result.final_state, opts.dir + "/checkpoint.ckpt");
      write_text(opts.dir + "/summary.txt",
                 summary_text(result.epsilon, result.final_state, status));
    }
  };
  try {
    trainer.run_until(opts.stop_at >= 0 ? opts.stop_at : total, hooks);
  } catch (const Error& e) {
    if (files) {
      write_text(opts.dir + "/summary.txt",
                 summary_text(trainer.epsilon(), trainer.state(),
                              std::string("failed: ") + e.what()));
    }
    throw;
  }
  finish(trainer.state().t == total ? "complete" : "interrupted");
  return result;
}

inline std::vector<std::uint64_t> run_seeds(const ExperimentConfig& c) {
  if (c.repeat_seeds.empty()) return {c.train.seed};
  return c.repeat_seeds;
}

// Runs every configured seed. With several seeds each gets a subdirectory
// `seed_<s>` of the output directory.
inline std::vector<RunResult> run_experiment(const ExperimentConfig& c) {
  c.validate();
  const PreparedData data = prepare_data(c);
  const auto seeds = run_seeds(c);
  std::vector<RunResult> out;
  for (std::uint64_t s : seeds) {
    ExperimentConfig one = c;
    one.train.seed = s;
    one.repeat_seeds.clear();
    RunOptions opts;
    opts.dir = seeds.size() == 1 && c.repeat_seeds.empty()
                   ? c.output_dir
                   : c.output_dir + "/seed_" + std::to_string(s);
    out.push_back(execute_run(one, data, opts));
  }
  return out;
}

// ---------------------------------------------------------------- sweep

enum class SweepAxis { kNd, kSigma, kBatch };
enum class BudgetMode { kFixedT, kFixedEpsilon };

struct SweepSpec {
  SweepAxis axis = SweepAxis::kNd;
  std::vector<double> values;
  BudgetMode budget_mode = BudgetMode::kFixedT;
  double epsilon_target = 10.0;
  // Batch sweeps: noise levels tuned at `base_batch`, rescaled per batch.
  std::vector<double> base_sigmas;
  int base_batch = 128;
};

inline SweepSpec parse_sweep_spec(std::string_view text) {
  SweepSpec s;
  bool have_axis = false, have_values = false;
  for (const auto& [key, value] : config_internal::parse_pairs(text)) {
    auto numbers = [&, &value = value, &key = key] {
      std::vector<double> out;
      if (trim(value).empty()) return out;
      for (const std::string& part : split_csv_line(value)) {
        double v;
        if (!parse_double(part, v)) {
          throw ConfigError(key + " expects numbers, got '" + part + "'");
        }
        out.push_back(v);
      }
      return out;
    };
    if (key == "sweep.axis") {
      have_axis = true;
      if (value == "n_d") s.axis = SweepAxis::kNd;
      else if (value == "sigma") s.axis = SweepAxis::kSigma;
      else if (value == "batch") s.axis = SweepAxis::kBatch;
      else throw ConfigError("sweep.axis must be n_d, sigma or batch");
    } else if (key == "sweep.values") {
      have_values = true;
      s.values = numbers();
    } else if (key == "sweep.budget_mode") {
      if (value == "fixed_T") s.budget_mode = BudgetMode::kFixedT;
      else if (value == "fixed_epsilon") s.budget_mode = BudgetMode::kFixedEpsilon;
      else throw ConfigError("sweep.budget_mode must be fixed_T or fixed_epsilon");
    } else if (key == "sweep.epsilon") {
      if (!parse_double(value, s.epsilon_target)) {
        throw ConfigError("sweep.epsilon expects a number");
      }
    } else if (key == "sweep.base_sigmas") {
      s.base_sigmas = numbers();
    } else if (key == "sweep.base_batch") {
      if (!parse_int(value, s.base_batch)) {
        throw ConfigError("sweep.base_batch expects an integer");
      }
    } else {
      throw ConfigError("unknown sweep key " + key);
    }
  }
  if (!have_axis || !have_values) {
    throw ConfigError("sweep spec needs sweep.axis and sweep.values");
  }
  return s;
}

// Noise levels for batch size `batch`: each base level scaled by
// sqrt(batch / base_batch), and by a further 5 for budgets of epsilon <= 1.
inline std::vector<double> batch_sigma_candidates(
    const std::vector<double>& base_sigmas, int base_batch, int batch,
    double epsilon_target) {
  const double scale = std::sqrt(double(batch) / double(base_batch)) *
                       (epsilon_target <= 1.0 ? 5.0 : 1.0);
  std::vector<double> out;
  for (double s : base_sigmas) out.push_back(s * scale);
  return out;
}

struct SweepPoint {
  double value = 0.0;
  int n_d = 1;
  double sigma = 1.0;
  int batch = 128;
  std::int64_t total_d_steps = 0;
};

inline std::vector<SweepPoint> plan_sweep(const SweepSpec& spec,
                                          const TrainConfig& base,
                                          int dataset_size) {
  if (spec.values.empty()) throw ConfigError("sweep has no values");
  if (spec.budget_mode == BudgetMode::kFixedEpsilon && !base.private_mode) {
    throw ConfigError("fixed_epsilon sweeps need a private base config");
  }
  std::vector<SweepPoint> points;
  for (double v : spec.values) {
    std::vector<SweepPoint> here;
    SweepPoint p{v, base.n_d, base.sigma, base.batch, base.total_d_steps};
    switch (spec.axis) {
      case SweepAxis::kNd:
        if (v < 1 || v != std::floor(v)) throw ConfigError("n_D values must be positive integers");
        p.n_d = static_cast<int>(v);
        here.push_back(p);
        break;
      case SweepAxis::kSigma:
        if (!(v > 0.0)) throw ConfigError("sigma values must be positive");
        p.sigma = v;
        here.push_back(p);
        break;
      case SweepAxis::kBatch: {
        if (v < 1 || v != std::floor(v)) throw ConfigError("batch values must be positive integers");
        p.batch = static_cast<int>(v);
        const std::vector<double> base_sigmas =
            spec.base_sigmas.empty() ? std::vector<double>{base.sigma}
                                     : spec.base_sigmas;
        for (double s : batch_sigma_candidates(base_sigmas, spec.base_batch,
                                               p.batch, spec.epsilon_target)) {
          p.sigma = s;
          here.push_back(p);
        }
        break;
      }
    }
    for (SweepPoint& h : here) {
      if (spec.budget_mode == BudgetMode::kFixedEpsilon) {
        const double q = std::min(1.0, double(h.batch) / dataset_size);
        h.total_d_steps = max_steps(q, h.sigma, base.delta, spec.epsilon_target);
      }
      points.push_back(h);
    }
  }
  return points;
}

struct SweepRow {
  SweepPoint point;
  std::uint64_t seed = 0;
  std::string status = "ok";
  double epsilon = kNaN;
  double order = kNaN;
  EvalRow final_eval;
  double best_frechet = kNaN;
  double best_covered = kNaN;
  double best_downstream = kNaN;
};

inline constexpr const char* kSweepHeader =
    "value,n_d,sigma,batch,T,seed,status,epsilon,order,final_frechet,"
    "final_covered_modes,final_hq_fraction,final_probe_acc,"
    "final_downstream_acc,best_frechet,best_covered_modes,best_downstream_acc";

inline std::string to_csv(const SweepRow& r) {
  const SweepPoint& p = r.point;
  const EvalRow& e = r.final_eval;
  return format_double(p.value) + "," + std::to_string(p.n_d) + "," +
         format_double(p.sigma) + "," + std::to_string(p.batch) + "," +
         std::to_string(p.total_d_steps) + "," + std::to_string(r.seed) + "," +
         r.status + "," + format_double(r.epsilon) + "," +
         format_double(r.order) + "," + format_double(e.frechet) + "," +
         format_double(e.covered_modes) + "," + format_double(e.hq_fraction) +
         "," + format_double(e.probe_acc) + "," +
         format_double(e.downstream_acc) + "," + format_double(r.best_frechet) +
         "," + format_double(r.best_covered) + "," +
         format_double(r.best_downstream);
}

// NaN-ignoring extremum.
inline double nan_min(double a, double b) { return std::isnan(a) ? b : std::isnan(b) ? a : std::min(a, b); }
inline double nan_max(double a, double b) { return std::isnan(a) ? b : std::isnan(b) ? a : std::max(a, b); }

// One run per (point, seed). Failed runs are recorded and the sweep moves on.
// Writes <output_dir>/sweep.csv.
inline std::vector<SweepRow> sweep(const SweepSpec& spec,
                                   const ExperimentConfig& base) {
  base.validate();
  const PreparedData data = prepare_data(base);
  const std::vector<SweepPoint> points =
      plan_sweep(spec, base.train, data.train.size());
  std::error_code ec;
  std::filesystem::create_directories(base.output_dir, ec);
  if (ec) throw IoError("cannot create " + base.output_dir + ": " + ec.message());
  CsvWriter csv(base.output_dir + "/sweep.csv", kSweepHeader, false);
  std::vector<SweepRow> rows;
  for (std::size_t i = 0; i < points.size(); ++i) {
    const SweepPoint& p = points[i];
    for (std::uint64_t seed : run_seeds(base)) {
      ExperimentConfig c = base;
      c.repeat_seeds.clear();
      c.train.seed = seed;
      c.train.n_d = p.n_d;
      c.train.sigma = p.sigma;
      c.train.batch = p.batch;
      c.train.total_d_steps = p.total_d_steps;
      SweepRow row;
      row.point = p;
      row.seed = seed;
      try {
        RunOptions opts;
        opts.dir = base.output_dir + "/point_" + std::to_string(i) + "/seed_" +
                   std::to_string(seed);
        const RunResult r = execute_run(c, data, opts);
        row.epsilon = r.epsilon.epsilon;
        row.order = r.epsilon.order;
        if (!r.eval.empty()) row.final_eval = r.eval.back();
        for (const EvalRow& e : r.eval) {
          row.best_frechet = nan_min(row.best_frechet, e.frechet);
          row.best_covered = nan_max(row.best_covered, e.covered_modes);
          row.best_downstream = nan_max(row.best_downstream, e.downstream_acc);
        }
      } catch (const Error& e) {
        row.status = "error" + std::to_string(static_cast<int>(e.exit_code()));
        std::cerr << "sweep point " << i << " seed " << seed
                  << " failed: " << e.what() << "\n";
      }
      csv.row(to_csv(row));
      rows.push_back(row);
    }
  }
  return rows;
}

// ---------------------------------------------------------------- restart

struct RestartVariant {
  std::string name;
  int n_d = 1;
  bool private_mode = false;
  double sigma = 1.0;
  double clip = 1.0;
  std::int64_t g_steps = 1000;
};

// CSV with header `name,n_d,private,sigma,clip,g_steps`.
inline std::vector<RestartVariant> parse_variants(std::string_view text) {
  std::istringstream in{std::string(text)};
  std::string line;
  if (!std::getline(in, line) ||
      split_csv_line(line) != std::vector<std::string>{"name", "n_d", "private",
                                                       "sigma", "clip", "g_steps"}) {
    throw ConfigError("variants file needs header name,n_d,private,sigma,clip,g_steps");
  }
  std::vector<RestartVariant> out;
  int lineno = 1;
  while (std::getline(in, line)) {
    ++lineno;
    if (trim(line).empty()) continue;
    const auto f = split_csv_line(line);
    RestartVariant v;
    bool ok = f.size() == 6 && !f[0].empty();
    if (ok) {
      v.name = f[0];
      ok = parse_int(f[1], v.n_d) && (f[2] == "true" || f[2] == "false" ||
                                      f[2] == "1" || f[2] == "0") &&
           parse_double(f[3], v.sigma) && parse_double(f[4], v.clip) &&
           parse_int(f[5], v.g_steps);
      v.private_mode = f[2] == "true" || f[2] == "1";
    }
    if (!ok || v.n_d < 1 || v.g_steps < 1) {
      throw ConfigError("variants line " + std::to_string(lineno) + " is malformed");
    }
    out.push_back(v);
  }
  if (out.empty()) throw ConfigError("variants file lists no variants");
  return out;
}

struct RestartRow {
  std::int64_t checkpoint = 0;  // generator step of the checkpoint
  std::string variant;
  std::int64_t step = 0;        // generator steps since the checkpoint
  std::int64_t t = 0;
  double epsilon = kNaN;
  double probe_acc = kNaN;
  double frechet = kNaN;
  double downstream_acc = kNaN;
};

inline constexpr const char* kRestartHeader =
    "checkpoint,variant,step,t,epsilon,probe_acc,frechet,downstream_acc";

inline std::string to_csv(const RestartRow& r) {
  return std::to_string(r.checkpoint) + "," + r.variant + "," +
         std::to_string(r.step) + "," + std::to_string(r.t) + "," +
         format_double(r.epsilon) + "," + format_double(r.probe_acc) + "," +
         format_double(r.frechet) + "," + format_double(r.downstream_acc);
}

struct RestartResult {
  std::vector<RestartRow> rows;
  std::vector<RestartRow> base_trace;  // the base run at the same cadence
};

// Trains a non-private base run, checkpointing at the listed generator
// steps, then resumes every checkpoint under every variant. Rows are logged
// every `eval.probe_every` generator steps of each resumed segment. Writes
// restart.csv and base_trace.csv under the output directory unless
// `write_files` is false.
inline RestartResult restart_experiment(const ExperimentConfig& base,
                                        std::vector<std::int64_t> checkpoints,
                                        const std::vector<RestartVariant>& variants,
                                        bool write_files = true) {
  base.validate();
  if (base.train.private_mode) {
    throw ConfigError("restart experiments start from a non-private base run");
  }
  if (base.train.adaptive) {
    throw ConfigError("restart base run must use a fixed n_D");
  }
  if (checkpoints.empty() || variants.empty()) {
    throw ConfigError("restart needs checkpoints and variants");
  }
  std::sort(checkpoints.begin(), checkpoints.end());
  checkpoints.erase(std::unique(checkpoints.begin(), checkpoints.end()),
                    checkpoints.end());
  if (checkpoints.front() < 1) throw ConfigError("checkpoint steps must be >= 1");

  const PreparedData data = prepare_data(base);
  const Evaluator evaluator(data, base.eval, base.train.seed);
  const int cadence = base.eval.probe_every;
  const std::string dir = base.output_dir;
  if (write_files) {
    std::error_code ec;
    std::filesystem::create_directories(dir + "/checkpoints", ec);
    if (ec) throw IoError("cannot create " + dir + ": " + ec.message());
  }

  auto measure = [&](const TrainerState& s, double eps) {
    RestartRow r;
    r.t = s.t;
    r.epsilon = eps;
    const EvalRow e = evaluator.evaluate(s);
    r.probe_acc = evaluator.probe(s);
    r.frechet = e.frechet;
    r.downstream_acc = e.downstream_acc;
    return r;
  };

  RestartResult result;
  std::vector<TrainerState> saved;
  {
    TrainConfig tc = base.train;
    tc.total_d_steps = checkpoints.back() * tc.n_d;
    tc.eval_every = static_cast<int>(std::min<std::int64_t>(tc.total_d_steps, 1 << 30));
    Trainer trainer(tc, data.train);
    TrainHooks hooks;
    std::size_t next = 0;
    hooks.after_generator_step = [&](const TrainerState& s) {
      if (s.k % cadence == 0) {
        RestartRow r = measure(s, trainer.epsilon().epsilon);
        r.variant = "base";
        r.step = s.k;
        result.base_trace.push_back(r);
      }
      if (next < checkpoints.size() && s.k == checkpoints[next]) {
        saved.push_back(s);
        if (write_files) {
          save_checkpoint(s, dir + "/checkpoints/k" + std::to_string(s.k) + ".ckpt");
        }
        ++next;
      }
    };
    trainer.run(hooks);
  }

  for (std::size_t c = 0; c < checkpoints.size(); ++c) {
    for (const RestartVariant& v : variants) {
      TrainConfig tc = base.train;
      tc.n_d = v.n_d;
      tc.private_mode = v.private_mode;
      tc.sigma = v.sigma;
      tc.clip = v.clip;
      tc.total_d_steps = saved[c].t + v.g_steps * v.n_d;
      tc.eval_every = static_cast<int>(std::min<std::int64_t>(tc.total_d_steps, 1 << 30));
      Trainer trainer(tc, data.train, saved[c]);
      const std::int64_t k0 = saved[c].k;
      TrainHooks hooks;
      hooks.after_generator_step = [&](const TrainerState& s) {
        if ((s.k - k0) % cadence != 0) return;
        RestartRow r = measure(s, trainer.epsilon().epsilon);
        r.checkpoint = checkpoints[c];
        r.variant = v.name;
        r.step = s.k - k0;
        result.rows.push_back(r);
      };
      trainer.run(hooks);
    }
  }

  if (write_files) {
    CsvWriter out(dir + "/restart.csv", kRestartHeader, false);
    for (const RestartRow& r : result.rows) out.row(to_csv(r));
    CsvWriter trace(dir + "/base_trace.csv", kRestartHeader, false);
    for (const RestartRow& r : result.base_trace) trace.row(to_csv(r));
    write_text(dir + "/config.txt", resolved_config_text(base, data));
  }
  return result;
}

// ---------------------------------------------------------------- eval

struct CheckpointEval {
  double frechet = kNaN;
  double probe_acc = kNaN;
  double downstream_acc = kNaN;
};

// Scores a checkpoint against an external dataset.
inline CheckpointEval evaluate_checkpoint(const TrainerState& s,
                                          const Dataset& data, int samples,
                                          std::uint64_t seed) {
  if (data.dim() != s.g.spec.output_dim()) {
    throw ShapeError("dataset dimension does not match the generator output");
  }
  CheckpointEval r;
  Rng rng = Rng::derive(seed, kSampleStream);
  const int classes = s.g.spec.num_classes;
  const Batch fake = generate(s.g, samples, classes, rng);
  r.frechet = frechet_distance(fit_gaussian(fake.inputs), fit_gaussian(data.features));
  if (s.d.spec.conditional() == data.labelled() || !s.d.spec.conditional()) {
    const Batch real = s.d.spec.conditional() ? data.as_batch()
                                              : Batch{data.features, {}};
    Rng prng = Rng::derive(seed, kEvalProbeStream);
    r.probe_acc = disc_accuracy_probe(s.d, real, s.g, kDefaultProbeSize, prng);
  }
  if (fake.labelled() && data.labelled()) {
    Dataset gen{fake.inputs, fake.labels, classes};
    r.downstream_acc = downstream_accuracy(
        gen, data, Rng::derive(seed, kClassifierStream).next_u64());
  }
  return r;
}

}  // namespace dpgan
