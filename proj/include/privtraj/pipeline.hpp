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

// End-to-end orchestration: ingest, calibrate, build the private synopsis,
// synthesize, evaluate, and aggregate repeated runs.

#pragma once

#include <algorithm>
#include <chrono>
#include <filesystem>
#include <fstream>
#include <optional>
#include <stdexcept>
#include <string>
#include <string_view>
#include <vector>

#include "privtraj/geo.hpp"
#include "privtraj/io.hpp"
#include "privtraj/markov.hpp"
#include "privtraj/metrics.hpp"
#include "privtraj/prefix_tree.hpp"
#include "privtraj/privacy.hpp"
#include "privtraj/synthesis.hpp"

namespace privtraj {

struct RunConfig {
  std::string input_path;
  DatasetFormat format = DatasetFormat::canonical;
  BoundingBox bbox{};
  bool bbox_set = false;
  std::uint32_t grid_rows = 20;
  std::uint32_t grid_cols = 20;
  int order = 3;  // Markov order m
  PrivacyBudget budget{};
  std::size_t max_length = 0;  // 0: grid_rows * grid_cols
  std::uint64_t seed = 0;
  bool seed_set = false;
  std::size_t repeats = 5;
  bool zero_noise = false;  // test stub; the CLI gates it behind an explicit flag
  bool jitter = false;
  bool abort_on_out_of_bbox = false;

  // Evaluation settings; 0 grid dimensions fall back to the synthesis grid.
  std::uint32_t eval_rows = 0;
  std::uint32_t eval_cols = 0;
  double sanity_fraction = 0.001;
  std::size_t top_n = 20;
  std::size_t top_k = 200;
  std::size_t pattern_len_min = 2;
  std::size_t pattern_len_max = 8;
  std::size_t length_buckets = 20;

  std::string output_dir = "privtraj_out";
};

inline GridSpec synthesis_grid(const RunConfig& cfg) {
  return GridSpec(cfg.grid_rows, cfg.grid_cols, cfg.bbox);
}

inline GridSpec evaluation_grid(const RunConfig& cfg) {
  return GridSpec(cfg.eval_rows ? cfg.eval_rows : cfg.grid_rows,
                  cfg.eval_cols ? cfg.eval_cols : cfg.grid_cols, cfg.bbox);
}

inline std::size_t effective_max_length(const RunConfig& cfg) {
  return cfg.max_length ? cfg.max_length
                        : static_cast<std::size_t>(cfg.grid_rows) * cfg.grid_cols;
}

inline EvalConfig eval_config(const RunConfig& cfg) {
  return EvalConfig{evaluation_grid(cfg), cfg.sanity_fraction, cfg.top_n,
                    cfg.top_k,            cfg.pattern_len_min, cfg.pattern_len_max,
                    cfg.length_buckets};
}

inline void validate(const RunConfig& cfg) {
  if (cfg.input_path.empty()) {
    throw std::invalid_argument("config: input path is required");
  }
  if (!cfg.bbox_set) {
    throw std::invalid_argument("config: bbox is required");
  }
  validate_bbox(cfg.bbox);
  if (cfg.order < 1) {
    throw std::invalid_argument("config: m must be at least 1");
  }
  validate(cfg.budget);
  if (cfg.repeats < 1) {
    throw std::invalid_argument("config: repeats must be at least 1");
  }
  if (effective_max_length(cfg) < static_cast<std::size_t>(cfg.order) + 2) {
    throw std::invalid_argument("config: l_max must be at least m + 2");
  }
  validate(eval_config(cfg));
}

namespace detail {

inline bool parse_bool(std::string_view v, std::string_view key) {
  if (v == "true" || v == "1" || v == "yes") return true;
  if (v == "false" || v == "0" || v == "no") return false;
  throw std::invalid_argument("config: " + std::string(key) + " expects true/false");
}

inline std::uint64_t parse_u64(std::string_view v, std::string_view key) {
  std::uint64_t out = 0;
  const auto [ptr, ec] = std::from_chars(v.data(), v.data() + v.size(), out);
  if (ec != std::errc{} || ptr != v.data() + v.size()) {
    throw std::invalid_argument("config: " + std::string(key) +
                                " expects a nonnegative integer");
  }
  return out;
}

// "20x20" or a single number for a square grid.
inline std::pair<std::uint32_t, std::uint32_t> parse_grid_size(std::string_view v,
                                                               std::string_view key) {
  const std::size_t x = v.find('x');
  if (x == std::string_view::npos) {
    const auto n = static_cast<std::uint32_t>(parse_u64(v, key));
    return {n, n};
  }
  return {static_cast<std::uint32_t>(parse_u64(v.substr(0, x), key)),
          static_cast<std::uint32_t>(parse_u64(v.substr(x + 1), key))};
}

// "min_lon,min_lat,max_lon,max_lat"
inline BoundingBox parse_bbox(std::string_view v, std::string_view key) {
  std::vector<double> parts;
  std::size_t start = 0;
  while (start <= v.size()) {
    const std::size_t comma = v.find(',', start);
    const std::string_view piece =
        v.substr(start, comma == std::string_view::npos ? v.size() - start
                                                        : comma - start);
    parts.push_back(parse_double(piece, "config " + std::string(key)));
    if (comma == std::string_view::npos) break;
    start = comma + 1;
  }
  if (parts.size() != 4) {
    throw std::invalid_argument("config: " + std::string(key) +
                                " expects min_lon,min_lat,max_lon,max_lat");
  }
  return BoundingBox{{parts[0], parts[1]}, {parts[2], parts[3]}};
}

}  // namespace detail

inline void apply_config_entry(RunConfig& cfg, std::string_view key,
                               std::string_view value) {
  using detail::parse_bbox;
  using detail::parse_bool;
  using detail::parse_grid_size;
  using detail::parse_u64;
  const std::string where = "config " + std::string(key);

  if (key == "input") {
    cfg.input_path = std::string(value);
  } else if (key == "format") {
    cfg.format = parse_format(value);
  } else if (key == "bbox") {
    cfg.bbox = parse_bbox(value, key);
    cfg.bbox_set = true;
  } else if (key == "grid") {
    std::tie(cfg.grid_rows, cfg.grid_cols) = parse_grid_size(value, key);
  } else if (key == "grid_rows") {
    cfg.grid_rows = static_cast<std::uint32_t>(parse_u64(value, key));
  } else if (key == "grid_cols") {
    cfg.grid_cols = static_cast<std::uint32_t>(parse_u64(value, key));
  } else if (key == "m") {
    cfg.order = static_cast<int>(parse_u64(value, key));
  } else if (key == "epsilon") {
    cfg.budget.epsilon = detail::parse_double(value, where);
  } else if (key == "g") {
    cfg.budget.g = detail::parse_double(value, where);
  } else if (key == "delta_alloc") {
    cfg.budget.delta_alloc = detail::parse_double(value, where);
  } else if (key == "l_max") {
    cfg.max_length = parse_u64(value, key);
  } else if (key == "seed") {
    cfg.seed = parse_u64(value, key);
    cfg.seed_set = true;
  } else if (key == "repeats") {
    cfg.repeats = parse_u64(value, key);
  } else if (key == "zero_noise") {
    cfg.zero_noise = parse_bool(value, key);
  } else if (key == "jitter") {
    cfg.jitter = parse_bool(value, key);
  } else if (key == "abort_on_out_of_bbox") {
    cfg.abort_on_out_of_bbox = parse_bool(value, key);
  } else if (key == "eval_grid") {
    std::tie(cfg.eval_rows, cfg.eval_cols) = parse_grid_size(value, key);
  } else if (key == "sanity_fraction") {
    cfg.sanity_fraction = detail::parse_double(value, where);
  } else if (key == "top_n") {
    cfg.top_n = parse_u64(value, key);
  } else if (key == "top_k") {
    cfg.top_k = parse_u64(value, key);
  } else if (key == "pattern_len_min") {
    cfg.pattern_len_min = parse_u64(value, key);
  } else if (key == "pattern_len_max") {
    cfg.pattern_len_max = parse_u64(value, key);
  } else if (key == "length_buckets") {
    cfg.length_buckets = parse_u64(value, key);
  } else if (key == "output_dir") {
    cfg.output_dir = std::string(value);
  } else {
    throw std::invalid_argument("config: unknown key '" + std::string(key) + "'");
  }
}

// Flat key = value file; blank lines and # comments allowed. Every key has a
// default, so a config with only input, bbox, and epsilon works.
inline RunConfig load_run_config(const std::string& path) {
  std::ifstream in(path);
  if (!in) {
    throw std::runtime_error("cannot open config " + path);
  }
  RunConfig cfg;
  std::string line;
  std::size_t line_no = 0;
  while (std::getline(in, line)) {
    ++line_no;
    const std::string_view trimmed = detail::trim(line);
    if (trimmed.empty() || trimmed.front() == '#') continue;
    const std::size_t eq = trimmed.find('=');
    if (eq == std::string_view::npos) {
      throw std::runtime_error(path + ":" + std::to_string(line_no) +
                               ": expected key = value");
    }
    apply_config_entry(cfg, detail::trim(trimmed.substr(0, eq)),
                       detail::trim(trimmed.substr(eq + 1)));
  }
  return cfg;
}

// Noisy synopsis of one repeat: the consistent tree plus the transition
// matrix, with the budget ledger that produced them.
struct Synopsis {
  BudgetSplit split;
  LevelBudgets levels;
  NoisyPrefixTree tree;
  TransitionMatrix transitions;
};

inline Synopsis build_synopsis(const CalibratedDataset& data, const GridSpec& grid,
                               int order, const PrivacyBudget& budget,
                               NoiseSource& tree_src, NoiseSource& markov_src) {
  const BudgetSplit split = split_budget(budget);
  LevelBudgets levels = level_budgets(split.tree_epsilon, order + 2, budget.delta_alloc);
  NoisyPrefixTree tree = enforce_consistency(
      build_prefix_tree(data, grid, order, split.tree_epsilon, budget.delta_alloc,
                        tree_src),
      data.size());
  TransitionMatrix transitions =
      normalize(perturb(build_frequency_matrix(data, grid, order),
                        split.markov_epsilon, markov_src));
  return Synopsis{split, std::move(levels), std::move(tree), std::move(transitions)};
}

struct RepeatRecord {
  std::uint64_t seed = 0;
  MetricsReport report;
  double wall_seconds = 0.0;
  std::size_t synthetic_size = 0;
};

struct MetricSummary {
  double location_avre = 0.0;
  double location_kt = 0.0;
  double fp_avre = 0.0;
  double fp_kt = 0.0;
  double trip_error = 0.0;
  double length_error = 0.0;
};

struct RunRecord {
  LoadStats load;
  std::uint64_t root_seed = 0;
  BudgetSplit split{};
  LevelBudgets level_shares;
  std::vector<RepeatRecord> repeats;
  MetricSummary mean{};
  MetricSummary median{};
};

namespace detail {

inline MetricSummary summarize(const std::vector<RepeatRecord>& repeats,
                               bool use_median) {
  const auto stat = [&](auto pick) {
    std::vector<double> values;
    values.reserve(repeats.size());
    for (const RepeatRecord& r : repeats) values.push_back(pick(r.report));
    if (!use_median) {
      double total = 0.0;
      for (double v : values) total += v;
      return total / static_cast<double>(values.size());
    }
    std::sort(values.begin(), values.end());
    const std::size_t n = values.size();
    return n % 2 ? values[n / 2] : 0.5 * (values[n / 2 - 1] + values[n / 2]);
  };
  MetricSummary s;
  s.location_avre = stat([](const MetricsReport& r) { return r.location_avre; });
  s.location_kt = stat([](const MetricsReport& r) { return r.location_kt; });
  s.fp_avre = stat([](const MetricsReport& r) { return r.fp_avre; });
  s.fp_kt = stat([](const MetricsReport& r) { return r.fp_kt; });
  s.trip_error = stat([](const MetricsReport& r) { return r.trip_error; });
  s.length_error = stat([](const MetricsReport& r) { return r.length_error; });
  return s;
}

inline void write_summary(std::ostream& os, std::string_view prefix,
                          const MetricSummary& s) {
  os << prefix << "location_avre = " << format_double(s.location_avre, 12) << '\n'
     << prefix << "location_kt = " << format_double(s.location_kt, 12) << '\n'
     << prefix << "fp_avre = " << format_double(s.fp_avre, 12) << '\n'
     << prefix << "fp_kt = " << format_double(s.fp_kt, 12) << '\n'
     << prefix << "trip_error = " << format_double(s.trip_error, 12) << '\n'
     << prefix << "length_error = " << format_double(s.length_error, 12) << '\n';
}

}  // namespace detail

// Runs the whole pipeline: load, calibrate, then per repeat build the noisy
// synopsis, generate, evaluate against the real dataset, and write the
// synthetic dataset plus its report. Repeat r uses a seed derived from
// (root seed, r), so one root seed reproduces every output byte-for-byte.
// Wall-clock timings go to run_log.txt only, never into the reports.
inline RunRecord run(const RunConfig& cfg) {
  validate(cfg);
  const GridSpec grid = synthesis_grid(cfg);
  const EvalConfig ecfg = eval_config(cfg);

  RunRecord record;
  const RawDataset raw =
      load_dataset(cfg.input_path, cfg.format, cfg.bbox, &record.load,
                   cfg.abort_on_out_of_bbox);
  CalibratedDataset data;
  data.reserve(raw.size());
  for (const RawTrajectory& t : raw) data.push_back(calibrate(t, grid));

  record.root_seed =
      cfg.seed_set ? cfg.seed : NoiseSource::from_entropy().seed();
  const NoiseSource root = cfg.zero_noise
                               ? NoiseSource::zero_noise(record.root_seed)
                               : NoiseSource::seeded(record.root_seed);

  namespace fs = std::filesystem;
  fs::create_directories(cfg.output_dir);
  const auto out_path = [&](const std::string& name) {
    return (fs::path(cfg.output_dir) / name).string();
  };

  for (std::size_t r = 0; r < cfg.repeats; ++r) {
    const auto started = std::chrono::steady_clock::now();
    const NoiseSource repeat_root = root.child(r);
    NoiseSource tree_src = repeat_root.child(1);
    NoiseSource markov_src = repeat_root.child(2);
    NoiseSource generate_src = repeat_root.child(3);

    Synopsis synopsis =
        build_synopsis(data, grid, cfg.order, cfg.budget, tree_src, markov_src);
    if (r == 0) {
      record.split = synopsis.split;
      record.level_shares = synopsis.levels;
    }

    const SyntheticDataset synthetic =
        generate(synopsis.tree, synopsis.transitions,
                 SynthesisConfig{effective_max_length(cfg), cfg.jitter}, generate_src);
    const std::string tag = "_r" + std::to_string(r);
    write_canonical(synthetic.raw, out_path("synthetic" + tag + ".csv"));

    RepeatRecord repeat;
    repeat.seed = repeat_root.seed();
    repeat.report = evaluate(raw, synthetic.raw, ecfg);
    repeat.synthetic_size = synthetic.raw.size();
    write_report(repeat.report, out_path("report" + tag + ".txt"));
    write_top_cells(repeat.report, out_path("top_cells" + tag + ".tsv"));
    repeat.wall_seconds =
        std::chrono::duration<double>(std::chrono::steady_clock::now() - started)
            .count();
    record.repeats.push_back(std::move(repeat));
  }

  record.mean = detail::summarize(record.repeats, false);
  record.median = detail::summarize(record.repeats, true);
  {
    auto os = detail::open_output(out_path("aggregate.txt"));
    os << "repeats = " << cfg.repeats << '\n';
    detail::write_summary(os, "mean_", record.mean);
    detail::write_summary(os, "median_", record.median);
  }
  {
    auto os = detail::open_output(out_path("run_log.txt"));
    os << "input = " << cfg.input_path << '\n'
       << "format = " << to_string(cfg.format) << '\n'
       << "loaded = " << record.load.loaded << '\n'
       << "rejected_out_of_bbox = " << record.load.rejected_out_of_bbox << '\n'
       << "skipped_malformed = " << record.load.skipped_malformed << '\n'
       << "grid = " << cfg.grid_rows << 'x' << cfg.grid_cols << '\n'
       << "m = " << cfg.order << '\n'
       << "l_max = " << effective_max_length(cfg) << '\n'
       << "epsilon = " << detail::format_double(cfg.budget.epsilon, 17) << '\n'
       << "g = " << detail::format_double(cfg.budget.g, 17) << '\n'
       << "delta_alloc = " << detail::format_double(cfg.budget.delta_alloc, 17) << '\n'
       << "zero_noise = " << (cfg.zero_noise ? "true" : "false") << '\n'
       << "root_seed = " << record.root_seed << '\n';
    // Budget ledger: every level share plus the Markov share sums to epsilon.
    os << "tree_epsilon = " << detail::format_double(record.split.tree_epsilon, 17)
       << '\n';
    double consumed = 0.0;
    for (std::size_t i = 0; i < record.level_shares.size(); ++i) {
      consumed += record.level_shares[i];
      os << "tree_epsilon_level_" << (i + 1) << " = "
         << detail::format_double(record.level_shares[i], 17) << '\n';
    }
    consumed += record.split.markov_epsilon;
    os << "markov_epsilon = "
       << detail::format_double(record.split.markov_epsilon, 17) << '\n'
       << "budget_consumed = " << detail::format_double(consumed, 17) << '\n';
    for (std::size_t r = 0; r < record.repeats.size(); ++r) {
      os << "repeat_" << r << "_seed = " << record.repeats[r].seed << '\n'
         << "repeat_" << r << "_synthetic_size = " << record.repeats[r].synthetic_size
         << '\n'
         << "repeat_" << r << "_wall_seconds = "
         << detail::format_double(record.repeats[r].wall_seconds, 6) << '\n';
    }
  }
  return record;
}

}  // namespace privtraj
