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

// Command-line front end. Exit codes: 0 success, 2 configuration error,
// 3 numeric failure, 4 I/O error.

#include <CLI11.hpp>

#include <cstdint>
#include <iostream>
#include <optional>
#include <string>
#include <vector>

#include "dpgan/accountant.hpp"
#include "dpgan/checkpoint.hpp"
#include "dpgan/config.hpp"
#include "dpgan/error.hpp"
#include "dpgan/format.hpp"
#include "dpgan/harness.hpp"

namespace {

using namespace dpgan;

int cmd_run(const std::string& config_path, std::int64_t stop_at,
            const std::string& resume) {
  ExperimentConfig c = load_config(config_path);
  if (!resume.empty()) {
    // Continue a single run in place, appending to its CSVs.
    const PreparedData data = prepare_data(c);
    RunOptions opts;
    opts.dir = c.output_dir;
    opts.resume = load_checkpoint(resume);
    opts.append = true;
    opts.stop_at = stop_at;
    const RunResult r = execute_run(c, data, opts);
    std::cout << "epsilon=" << format_double(r.epsilon.epsilon)
              << " order=" << format_double(r.epsilon.order) << "\n";
    return 0;
  }
  if (stop_at >= 0) {
    const PreparedData data = prepare_data(c);
    RunOptions opts;
    opts.dir = c.output_dir;
    opts.stop_at = stop_at;
    const RunResult r = execute_run(c, data, opts);
    std::cout << "epsilon=" << format_double(r.epsilon.epsilon)
              << " order=" << format_double(r.epsilon.order) << "\n";
    return 0;
  }
  for (const RunResult& r : run_experiment(c)) {
    std::cout << r.dir << ": epsilon=" << format_double(r.epsilon.epsilon)
              << " order=" << format_double(r.epsilon.order) << "\n";
  }
  return 0;
}

int cmd_sweep(const std::string& spec_path, const std::string& config_path) {
  const SweepSpec spec = parse_sweep_spec(read_text_file(spec_path));
  const ExperimentConfig c = load_config(config_path);
  const auto rows = sweep(spec, c);
  int failed = 0;
  for (const SweepRow& r : rows) failed += r.status != "ok";
  std::cout << c.output_dir << "/sweep.csv: " << rows.size() << " runs, "
            << failed << " failed\n";
  return 0;
}

int cmd_restart(const std::string& config_path,
                const std::vector<std::int64_t>& checkpoints,
                const std::string& variants_path) {
  const ExperimentConfig c = load_config(config_path);
  const auto variants = parse_variants(read_text_file(variants_path));
  const RestartResult r = restart_experiment(c, checkpoints, variants);
  std::cout << c.output_dir << "/restart.csv: " << r.rows.size() << " rows\n";
  return 0;
}

int cmd_budget(double q, double sigma, double delta, std::optional<std::int64_t> t,
               std::optional<double> epsilon) {
  if (t.has_value() == epsilon.has_value()) {
    throw ConfigError("budget needs exactly one of --T and --epsilon");
  }
  if (t) {
    const EpsilonResult e = epsilon_after({*t, q, sigma, delta});
    std::cout << "epsilon=" << format_double(e.epsilon)
              << " order=" << format_double(e.order) << "\n";
  } else {
    std::cout << "T_max=" << max_steps(q, sigma, delta, *epsilon) << "\n";
  }
  return 0;
}

int cmd_eval(const std::string& checkpoint, const std::string& dataset,
             int samples, std::uint64_t seed, bool rescale) {
  const TrainerState s = load_checkpoint(checkpoint);
  IngestOptions opts;
  opts.rescale = rescale;
  const Dataset d = ingest_csv(dataset, opts);
  const CheckpointEval e = evaluate_checkpoint(s, d, samples, seed);
  std::cout << "frechet,probe_acc,downstream_acc\n"
            << format_double(e.frechet) << "," << format_double(e.probe_acc)
            << "," << format_double(e.downstream_acc) << "\n";
  return 0;
}

}  // namespace

int main(int argc, char** argv) {
  CLI::App app{"Differentially private GAN training and evaluation"};
  app.require_subcommand(1);

  std::string config_path, spec_path, variants_path, checkpoint, dataset, resume;
  std::int64_t stop_at = -1;

  auto* run = app.add_subcommand("run", "Train one configuration (all repeat seeds)");
  run->add_option("config", config_path, "Config file")->required();
  run->add_option("--stop-at", stop_at, "Stop after this many discriminator steps");
  run->add_option("--resume", resume, "Continue from a checkpoint, appending to its run directory");

  auto* sw = app.add_subcommand("sweep", "Sweep n_D, sigma or batch size");
  sw->add_option("spec", spec_path, "Sweep spec file")->required();
  sw->add_option("config", config_path, "Base config file")->required();

  std::vector<std::int64_t> checkpoints;
  auto* rs = app.add_subcommand("restart", "Resume checkpoints of a non-private run under variants");
  rs->add_option("config", config_path, "Base config file")->required();
  rs->add_option("--checkpoints", checkpoints, "Generator steps to checkpoint at")
      ->delimiter(',')
      ->required();
  rs->add_option("--variants", variants_path, "Variants CSV")->required();

  double q = 0.0, sigma = 0.0, delta = 1e-5;
  std::optional<std::int64_t> t;
  std::optional<double> epsilon;
  auto* bg = app.add_subcommand("budget", "Privacy budget arithmetic");
  bg->add_option("--q", q, "Sampling rate")->required();
  bg->add_option("--sigma", sigma, "Noise multiplier")->required();
  bg->add_option("--delta", delta, "Target delta");
  bg->add_option("--T", t, "Discriminator steps: report epsilon");
  bg->add_option("--epsilon", epsilon, "Target epsilon: report the step limit");

  int samples = 4000;
  std::uint64_t seed = 0;
  bool no_rescale = false;
  auto* ev = app.add_subcommand("eval", "Score a checkpoint against a CSV dataset");
  ev->add_option("checkpoint", checkpoint, "Checkpoint file")->required();
  ev->add_option("dataset", dataset, "CSV dataset")->required();
  ev->add_option("--samples", samples, "Generated samples");
  ev->add_option("--seed", seed, "Evaluation seed");
  ev->add_flag("--no-rescale", no_rescale, "Use features as stored");

  try {
    app.parse(argc, argv);
  } catch (const CLI::ParseError& e) {
    const int code = app.exit(e);
    return code == 0 ? 0 : static_cast<int>(ExitCode::kConfig);
  }

  try {
    if (*run) return cmd_run(config_path, stop_at, resume);
    if (*sw) return cmd_sweep(spec_path, config_path);
    if (*rs) return cmd_restart(config_path, checkpoints, variants_path);
    if (*bg) return cmd_budget(q, sigma, delta, t, epsilon);
    if (*ev) return cmd_eval(checkpoint, dataset, samples, seed, !no_rescale);
  } catch (const Error& e) {
    std::cerr << "error: " << e.what() << "\n";
    return static_cast<int>(e.exit_code());
  } catch (const std::bad_alloc&) {
    std::cerr << "error: out of memory\n";
    return static_cast<int>(ExitCode::kNumeric);
  }
  return 0;
}
