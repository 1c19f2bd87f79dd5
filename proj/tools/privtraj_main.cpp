// Copyright 2026 The privtraj Authors
//
// Licensed under the Apache License, Version 2.0 (the "License");
// you may not use this file except in compliance with the License.
// You may obtain a copy of the License at
//
//     https://www.apache.org/licenses/LICENSE-2.0
//
// Unless required by applicable law or agreed to in writing, software
// distributed under the License is distributed on an "AS IS" BASIS,
// WITHOUT WARRANTIES OR CONDITIONS OF ANY KIND, either express or implied.
// See the License for the specific language governing permissions and
// limitations under the License.

// Command-line front end: calibrate, synthesize, evaluate, and run.

#include <cstdio>
#include <exception>
#include <fstream>
#include <iostream>
#include <optional>
#include <string>

#include "CLI11.hpp"
#include "privtraj/privtraj.hpp"

namespace {

using namespace privtraj;

// Shared flag bundle mirroring the RunConfig keys. Flags override whatever a
// --config file set.
struct ConfigFlags {
  std::optional<std::string> config_path;
  std::optional<std::string> input;
  std::optional<std::string> format;
  std::optional<std::string> bbox;
  std::optional<std::string> grid;
  std::optional<int> order;
  std::optional<double> epsilon;
  std::optional<double> g;
  std::optional<double> delta_alloc;
  std::optional<std::uint64_t> l_max;
  std::optional<std::uint64_t> seed;
  std::optional<std::uint64_t> repeats;
  std::optional<std::string> eval_grid;
  std::optional<double> sanity_fraction;
  std::optional<std::uint64_t> top_n;
  std::optional<std::uint64_t> top_k;
  std::optional<std::uint64_t> pattern_len_min;
  std::optional<std::uint64_t> pattern_len_max;
  std::optional<std::uint64_t> length_buckets;
  std::optional<std::string> output_dir;
  bool zero_noise = false;
  bool not_private_ack = false;
  bool jitter = false;
  bool abort_on_oob = false;
};

void add_config_flags(CLI::App& cmd, ConfigFlags& f, bool with_eval, bool with_run) {
  cmd.add_option("--config", f.config_path, "flat key = value configuration file");
  cmd.add_option("--input", f.input, "trajectory file to read");
  cmd.add_option("--format", f.format, "input format: canonical or porto");
  cmd.add_option("--bbox", f.bbox, "domain as min_lon,min_lat,max_lon,max_lat");
  cmd.add_option("--grid", f.grid, "synthesis grid, e.g. 20x20");
  cmd.add_option("-m,--order", f.order, "Markov order m");
  cmd.add_option("--epsilon", f.epsilon, "total privacy budget");
  cmd.add_option("--g", f.g, "tree share of the budget, in (0,1)");
  cmd.add_option("--delta-alloc", f.delta_alloc, "level-decay parameter");
  cmd.add_option("--l-max", f.l_max, "maximum trajectory length in symbols");
  cmd.add_option("--seed", f.seed, "root seed (omit to draw from entropy)");
  cmd.add_flag("--zero-noise", f.zero_noise, "disable noise (test mode, not private)");
  cmd.add_flag("--i-know-this-is-not-private", f.not_private_ack,
               "required acknowledgment for --zero-noise");
  cmd.add_flag("--jitter", f.jitter, "emit uniform in-cell points instead of centroids");
  cmd.add_flag("--abort-on-out-of-bbox", f.abort_on_oob,
               "fail on the first trajectory leaving the bbox instead of skipping");
  if (with_run) {
    cmd.add_option("--repeats", f.repeats, "number of repeated runs");
    cmd.add_option("--output-dir", f.output_dir, "directory for run outputs");
  }
  if (with_eval) {
    cmd.add_option("--eval-grid", f.eval_grid, "evaluation grid, e.g. 20x20");
    cmd.add_option("--sanity-fraction", f.sanity_fraction,
                   "relative-error floor as a fraction of |D|");
    cmd.add_option("--top-n", f.top_n, "top visited cells to report");
    cmd.add_option("--top-k", f.top_k, "top patterns to compare");
    cmd.add_option("--pattern-len-min", f.pattern_len_min, "minimum pattern length");
    cmd.add_option("--pattern-len-max", f.pattern_len_max, "maximum pattern length");
    cmd.add_option("--length-buckets", f.length_buckets, "trip length histogram buckets");
  }
}

RunConfig resolve_config(const ConfigFlags& f) {
  RunConfig cfg = f.config_path ? load_run_config(*f.config_path) : RunConfig{};
  if (f.input) cfg.input_path = *f.input;
  if (f.format) cfg.format = parse_format(*f.format);
  if (f.bbox) apply_config_entry(cfg, "bbox", *f.bbox);
  if (f.grid) apply_config_entry(cfg, "grid", *f.grid);
  if (f.order) cfg.order = *f.order;
  if (f.epsilon) cfg.budget.epsilon = *f.epsilon;
  if (f.g) cfg.budget.g = *f.g;
  if (f.delta_alloc) cfg.budget.delta_alloc = *f.delta_alloc;
  if (f.l_max) cfg.max_length = *f.l_max;
  if (f.seed) {
    cfg.seed = *f.seed;
    cfg.seed_set = true;
  }
  if (f.repeats) cfg.repeats = *f.repeats;
  if (f.eval_grid) apply_config_entry(cfg, "eval_grid", *f.eval_grid);
  if (f.sanity_fraction) cfg.sanity_fraction = *f.sanity_fraction;
  if (f.top_n) cfg.top_n = *f.top_n;
  if (f.top_k) cfg.top_k = *f.top_k;
  if (f.pattern_len_min) cfg.pattern_len_min = *f.pattern_len_min;
  if (f.pattern_len_max) cfg.pattern_len_max = *f.pattern_len_max;
  if (f.length_buckets) cfg.length_buckets = *f.length_buckets;
  if (f.output_dir) cfg.output_dir = *f.output_dir;
  if (f.zero_noise) cfg.zero_noise = true;
  if (f.jitter) cfg.jitter = true;
  if (f.abort_on_oob) cfg.abort_on_out_of_bbox = true;
  if (cfg.zero_noise && !f.not_private_ack) {
    throw std::invalid_argument(
        "--zero-noise produces non-private output; pass "
        "--i-know-this-is-not-private to confirm");
  }
  return cfg;
}

int cmd_calibrate(const ConfigFlags& flags, const std::string& output) {
  RunConfig cfg = resolve_config(flags);
  if (cfg.input_path.empty() || !cfg.bbox_set) {
    throw std::invalid_argument("calibrate needs --input and --bbox");
  }
  const GridSpec grid = synthesis_grid(cfg);
  LoadStats stats;
  const RawDataset raw = load_dataset(cfg.input_path, cfg.format, cfg.bbox, &stats,
                                      cfg.abort_on_out_of_bbox);
  CalibratedDataset data;
  data.reserve(raw.size());
  for (const RawTrajectory& t : raw) data.push_back(calibrate(t, grid));
  write_calibrated(data, output);
  std::cout << "calibrated " << data.size() << " trajectories to " << output
            << " (rejected " << stats.rejected_out_of_bbox << ", malformed "
            << stats.skipped_malformed << ")\n";
  return 0;
}

int cmd_synthesize(const ConfigFlags& flags, const std::string& output,
                   const std::string& dump_tree, const std::string& dump_fm,
                   const std::string& dump_q) {
  RunConfig cfg = resolve_config(flags);
  if (cfg.input_path.empty() || !cfg.bbox_set) {
    throw std::invalid_argument("synthesize needs --input and --bbox");
  }
  validate(cfg);
  const GridSpec grid = synthesis_grid(cfg);
  LoadStats stats;
  const RawDataset raw = load_dataset(cfg.input_path, cfg.format, cfg.bbox, &stats,
                                      cfg.abort_on_out_of_bbox);
  CalibratedDataset data;
  data.reserve(raw.size());
  for (const RawTrajectory& t : raw) data.push_back(calibrate(t, grid));

  const std::uint64_t root_seed =
      cfg.seed_set ? cfg.seed : NoiseSource::from_entropy().seed();
  const NoiseSource root = cfg.zero_noise ? NoiseSource::zero_noise(root_seed)
                                          : NoiseSource::seeded(root_seed);
  NoiseSource tree_src = root.child(1);
  NoiseSource markov_src = root.child(2);
  NoiseSource generate_src = root.child(3);

  const BudgetSplit split = split_budget(cfg.budget);
  if (!dump_fm.empty() || !dump_q.empty()) {
    // Rebuild the Markov side explicitly so the intermediate noisy matrix is
    // available for dumping; synthesis below reuses the same stream.
    NoiseSource fm_src = root.child(2);
    const FrequencyMatrix noisy = perturb(build_frequency_matrix(data, grid, cfg.order),
                                          split.markov_epsilon, fm_src);
    if (!dump_fm.empty()) {
      auto os = detail::open_output(dump_fm);
      dump(noisy, os);
    }
    if (!dump_q.empty()) {
      auto os = detail::open_output(dump_q);
      const TransitionMatrix q = normalize(noisy);
      dump(q, os);
    }
  }
  Synopsis synopsis =
      build_synopsis(data, grid, cfg.order, cfg.budget, tree_src, markov_src);
  if (!dump_tree.empty()) {
    auto os = detail::open_output(dump_tree);
    synopsis.tree.dump(os);
  }
  const SyntheticDataset synthetic =
      generate(synopsis.tree, synopsis.transitions,
               SynthesisConfig{effective_max_length(cfg), cfg.jitter}, generate_src);
  write_canonical(synthetic.raw, output);
  std::cout << "synthesized " << synthetic.raw.size() << " trajectories to " << output
            << " (seed " << root_seed << ")\n";
  return 0;
}

int cmd_evaluate(const ConfigFlags& flags, const std::string& real_path,
                 const std::string& synthetic_path, const std::string& synthetic_format,
                 const std::string& report_path, const std::string& top_cells_path) {
  RunConfig cfg = resolve_config(flags);
  if (real_path.empty() || synthetic_path.empty() || !cfg.bbox_set) {
    throw std::invalid_argument("evaluate needs --real, --synthetic, and --bbox");
  }
  const EvalConfig ecfg = eval_config(cfg);
  const RawDataset real = load_dataset(real_path, cfg.format, cfg.bbox);
  const RawDataset synthetic =
      load_dataset(synthetic_path, parse_format(synthetic_format), cfg.bbox);
  const MetricsReport report = evaluate(real, synthetic, ecfg);
  write_report(report, report_path);
  if (!top_cells_path.empty()) write_top_cells(report, top_cells_path);
  write_report(report, std::cout);
  return 0;
}

int cmd_run(const ConfigFlags& flags) {
  const RunConfig cfg = resolve_config(flags);
  const RunRecord record = run(cfg);
  std::cout << "loaded " << record.load.loaded << " trajectories (rejected "
            << record.load.rejected_out_of_bbox << ", malformed "
            << record.load.skipped_malformed << ")\n"
            << "root seed " << record.root_seed << ", " << record.repeats.size()
            << " repeats -> " << cfg.output_dir << "\n"
            << "mean location_avre = " << record.mean.location_avre
            << ", mean location_kt = " << record.mean.location_kt << "\n";
  return 0;
}

}  // namespace

int main(int argc, char** argv) {
  CLI::App app{"Differentially private trajectory synthesis and utility evaluation"};
  app.require_subcommand(1);

  ConfigFlags calibrate_flags;
  std::string calibrate_output = "calibrated.txt";
  CLI::App* calibrate_cmd =
      app.add_subcommand("calibrate", "discretize a raw dataset onto the grid");
  add_config_flags(*calibrate_cmd, calibrate_flags, false, false);
  calibrate_cmd->add_option("--output", calibrate_output, "calibrated output file");

  ConfigFlags synthesize_flags;
  std::string synthesize_output = "synthetic.csv";
  std::string dump_tree_path;
  std::string dump_fm_path;
  std::string dump_q_path;
  CLI::App* synthesize_cmd =
      app.add_subcommand("synthesize", "generate one synthetic dataset");
  add_config_flags(*synthesize_cmd, synthesize_flags, false, false);
  synthesize_cmd->add_option("--output", synthesize_output, "synthetic output file");
  synthesize_cmd->add_option("--dump-tree", dump_tree_path,
                             "write the noisy prefix tree as indented text");
  synthesize_cmd->add_option("--dump-fm", dump_fm_path,
                             "write the noisy frequency matrix as TSV");
  synthesize_cmd->add_option("--dump-q", dump_q_path,
                             "write the transition matrix as TSV");

  ConfigFlags evaluate_flags;
  std::string real_path;
  std::string synthetic_path;
  std::string synthetic_format = "canonical";
  std::string report_path = "report.txt";
  std::string top_cells_path;
  CLI::App* evaluate_cmd =
      app.add_subcommand("evaluate", "compare a synthetic dataset against the real one");
  add_config_flags(*evaluate_cmd, evaluate_flags, true, false);
  evaluate_cmd->add_option("--real", real_path, "real dataset file");
  evaluate_cmd->add_option("--synthetic", synthetic_path, "synthetic dataset file");
  evaluate_cmd->add_option("--synthetic-format", synthetic_format,
                           "synthetic dataset format");
  evaluate_cmd->add_option("--report", report_path, "metrics report output");
  evaluate_cmd->add_option("--top-cells", top_cells_path, "top-cell proportion table");

  ConfigFlags run_flags;
  CLI::App* run_cmd =
      app.add_subcommand("run", "full pipeline with repeats and aggregation");
  add_config_flags(*run_cmd, run_flags, true, true);

  CLI11_PARSE(app, argc, argv);

  try {
    if (calibrate_cmd->parsed()) return cmd_calibrate(calibrate_flags, calibrate_output);
    if (synthesize_cmd->parsed()) {
      return cmd_synthesize(synthesize_flags, synthesize_output, dump_tree_path,
                            dump_fm_path, dump_q_path);
    }
    if (evaluate_cmd->parsed()) {
      return cmd_evaluate(evaluate_flags, real_path, synthetic_path, synthetic_format,
                          report_path, top_cells_path);
    }
    if (run_cmd->parsed()) return cmd_run(run_flags);
  } catch (const std::exception& e) {
    std::cerr << "error: " << e.what() << '\n';
    return 1;
  }
  return 0;
}
