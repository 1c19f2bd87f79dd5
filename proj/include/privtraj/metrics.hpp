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

// Seven utility measurements comparing a real and a synthetic dataset on an
// evaluation grid: location visit AvRE, top-n visit proportions, location
// Kendall-tau, frequent-pattern AvRE and Kendall-tau, trip error, and length
// error. All are read-only folds over the two datasets.

#pragma once

#include <algorithm>
#include <cmath>
#include <cstdint>
#include <map>
#include <numeric>
#include <span>
#include <stdexcept>
#include <unordered_map>
#include <vector>

#include "privtraj/geo.hpp"

namespace privtraj {

// Evaluation-side parameters. The evaluation grid may differ from the grid
// the synthesizer used; they are independent concepts.
struct EvalConfig {
  GridSpec grid;
  double sanity_fraction = 0.001;  // relative-error floor, as a fraction of |D|
  std::size_t top_n = 20;
  std::size_t top_k = 200;
  std::size_t pattern_len_min = 2;
  std::size_t pattern_len_max = 8;
  std::size_t length_buckets = 20;
};

inline void validate(const EvalConfig& cfg) {
  if (!(cfg.sanity_fraction > 0.0)) {
    throw std::invalid_argument("sanity_fraction must be positive");
  }
  if (cfg.top_n == 0 || cfg.top_k == 0 || cfg.length_buckets == 0) {
    throw std::invalid_argument("top_n, top_k, and length_buckets must be positive");
  }
  if (cfg.pattern_len_min < 2 || cfg.pattern_len_max < cfg.pattern_len_min) {
    throw std::invalid_argument("pattern lengths must satisfy 2 <= min <= max");
  }
}

// One visit count per cell of the evaluation grid.
using CellPopularity = std::vector<std::int64_t>;

// Contiguous cell subsequence.
using CellPattern = std::vector<std::uint32_t>;

namespace detail {

// Cells visited by a trajectory, consecutive duplicates collapsed. Points
// outside the evaluation domain are ignored.
inline std::vector<std::uint32_t> visited_cells(const RawTrajectory& t,
                                                const GridSpec& grid) {
  std::vector<std::uint32_t> out;
  for (const GeoPoint& p : t.points) {
    if (!grid.bbox().contains(p)) continue;
    const std::uint32_t cell = map_point(p, grid).index();
    if (out.empty() || out.back() != cell) out.push_back(cell);
  }
  return out;
}

struct PatternHash {
  std::size_t operator()(const CellPattern& p) const {
    std::size_t h = 1469598103934665603ull;
    for (std::uint32_t c : p) {
      h ^= c + 0x9E3779B9u;
      h *= 1099511628211ull;
    }
    return h;
  }
};

}  // namespace detail

// Visit events per cell: every entry of the deduplicated cell sequence counts
// once, so re-entering a cell counts again but consecutive dwell points do
// not. Sampling-rate independent.
inline CellPopularity cell_popularity(const RawDataset& data, const GridSpec& grid) {
  CellPopularity pop(grid.cell_count(), 0);
  for (const RawTrajectory& t : data) {
    for (std::uint32_t cell : detail::visited_cells(t, grid)) pop[cell] += 1;
  }
  return pop;
}

// Kendall rank correlation with the fixed denominator n(n-1)/2; a pair tied
// in either vector is neither concordant nor discordant.
inline double kendall_tau(std::span<const std::int64_t> a,
                          std::span<const std::int64_t> b) {
  if (a.size() != b.size()) {
    throw std::invalid_argument("rank vectors must have equal length");
  }
  const std::size_t n = a.size();
  if (n < 2) return 0.0;
  long long concordant = 0;
  long long discordant = 0;
  for (std::size_t i = 0; i + 1 < n; ++i) {
    for (std::size_t j = i + 1; j < n; ++j) {
      const int sa = (a[i] > a[j]) - (a[i] < a[j]);
      const int sb = (b[i] > b[j]) - (b[i] < b[j]);
      const int prod = sa * sb;
      concordant += prod > 0;
      discordant += prod < 0;
    }
  }
  const double pairs = 0.5 * static_cast<double>(n) * static_cast<double>(n - 1);
  return static_cast<double>(concordant - discordant) / pairs;
}

// Mean relative error of per-cell visit counts over all cells, with the
// denominator floored at sanity_fraction * |real|.
inline double location_avre(const RawDataset& real, const RawDataset& synthetic,
                            const EvalConfig& cfg) {
  validate(cfg);
  if (real.empty()) {
    throw std::invalid_argument("real dataset must be non-empty");
  }
  const CellPopularity p = cell_popularity(real, cfg.grid);
  const CellPopularity s = cell_popularity(synthetic, cfg.grid);
  const double sanity = cfg.sanity_fraction * static_cast<double>(real.size());
  double total = 0.0;
  for (std::size_t i = 0; i < p.size(); ++i) {
    const double denom = std::max(static_cast<double>(p[i]), sanity);
    total += std::abs(static_cast<double>(p[i]) - static_cast<double>(s[i])) / denom;
  }
  return total / static_cast<double>(p.size());
}

inline double location_kt(const RawDataset& real, const RawDataset& synthetic,
                          const EvalConfig& cfg) {
  validate(cfg);
  const CellPopularity p = cell_popularity(real, cfg.grid);
  const CellPopularity s = cell_popularity(synthetic, cfg.grid);
  return kendall_tau(p, s);
}

struct CellProportion {
  std::uint32_t cell = 0;
  double proportion = 0.0;
};

// The top-n most visited cells with their share of all visit events. Ties
// break toward the lower cell index.
inline std::vector<CellProportion> visit_proportion(const RawDataset& data,
                                                    const EvalConfig& cfg) {
  validate(cfg);
  const CellPopularity pop = cell_popularity(data, cfg.grid);
  const std::int64_t total = std::accumulate(pop.begin(), pop.end(), std::int64_t{0});
  if (total <= 0) {
    throw std::invalid_argument("dataset has no visits on the evaluation grid");
  }
  std::vector<std::uint32_t> order(pop.size());
  std::iota(order.begin(), order.end(), 0u);
  std::stable_sort(order.begin(), order.end(),
                   [&](std::uint32_t x, std::uint32_t y) { return pop[x] > pop[y]; });
  const std::size_t n = std::min<std::size_t>(cfg.top_n, order.size());
  std::vector<CellProportion> out;
  out.reserve(n);
  for (std::size_t i = 0; i < n; ++i) {
    out.push_back({order[i],
                   static_cast<double>(pop[order[i]]) / static_cast<double>(total)});
  }
  return out;
}

struct PatternSupport {
  CellPattern pattern;
  std::int64_t support = 0;
};

// Top-k contiguous cell patterns of length in [pattern_len_min,
// pattern_len_max], ranked by the number of trajectories containing the
// pattern at least once. Ties break lexicographically on the pattern, so the
// ranking is deterministic. Fewer than k existing patterns shrink the result.
inline std::vector<PatternSupport> mine_top_k(const RawDataset& data,
                                              const EvalConfig& cfg) {
  validate(cfg);
  struct Entry {
    std::int64_t support = 0;
    std::size_t last_seen = 0;  // trajectory index + 1; 0 = never
  };
  std::unordered_map<CellPattern, Entry, detail::PatternHash> counts;
  for (std::size_t t = 0; t < data.size(); ++t) {
    const std::vector<std::uint32_t> cells = detail::visited_cells(data[t], cfg.grid);
    for (std::size_t len = cfg.pattern_len_min; len <= cfg.pattern_len_max; ++len) {
      if (cells.size() < len) break;
      for (std::size_t i = 0; i + len <= cells.size(); ++i) {
        CellPattern p(cells.begin() + i, cells.begin() + i + len);
        Entry& e = counts[std::move(p)];
        if (e.last_seen != t + 1) {
          e.last_seen = t + 1;
          e.support += 1;
        }
      }
    }
  }
  std::vector<PatternSupport> all;
  all.reserve(counts.size());
  for (const auto& [pattern, entry] : counts) all.push_back({pattern, entry.support});
  std::sort(all.begin(), all.end(), [](const PatternSupport& a, const PatternSupport& b) {
    if (a.support != b.support) return a.support > b.support;
    return a.pattern < b.pattern;
  });
  if (all.size() > cfg.top_k) all.resize(cfg.top_k);
  return all;
}

namespace detail {

// Per-trajectory supports of the given patterns measured in another dataset.
inline std::vector<std::int64_t> supports_in(const std::vector<PatternSupport>& patterns,
                                             const RawDataset& data,
                                             const EvalConfig& cfg) {
  std::unordered_map<CellPattern, std::size_t, PatternHash> index;
  index.reserve(patterns.size());
  for (std::size_t i = 0; i < patterns.size(); ++i) index.emplace(patterns[i].pattern, i);
  std::vector<std::int64_t> supports(patterns.size(), 0);
  std::vector<std::size_t> last_seen(patterns.size(), 0);
  CellPattern window;
  for (std::size_t t = 0; t < data.size(); ++t) {
    const std::vector<std::uint32_t> cells = visited_cells(data[t], cfg.grid);
    for (std::size_t len = cfg.pattern_len_min; len <= cfg.pattern_len_max; ++len) {
      if (cells.size() < len) break;
      for (std::size_t i = 0; i + len <= cells.size(); ++i) {
        window.assign(cells.begin() + i, cells.begin() + i + len);
        const auto it = index.find(window);
        if (it == index.end()) continue;
        if (last_seen[it->second] != t + 1) {
          last_seen[it->second] = t + 1;
          supports[it->second] += 1;
        }
      }
    }
  }
  return supports;
}

inline double fp_avre_from(const std::vector<PatternSupport>& top,
                           std::span<const std::int64_t> synthetic_supports) {
  double total = 0.0;
  for (std::size_t i = 0; i < top.size(); ++i) {
    total += std::abs(static_cast<double>(top[i].support) -
                      static_cast<double>(synthetic_supports[i])) /
             static_cast<double>(top[i].support);
  }
  return total / static_cast<double>(top.size());
}

inline double fp_kt_from(const std::vector<PatternSupport>& top,
                         std::span<const std::int64_t> synthetic_supports) {
  if (top.size() < 2) return 0.0;  // no ranking information
  std::vector<std::int64_t> real_supports;
  real_supports.reserve(top.size());
  for (const PatternSupport& p : top) real_supports.push_back(p.support);
  return kendall_tau(real_supports, synthetic_supports);
}

}  // namespace detail

// Mean relative support error of the real dataset's top-k patterns, measured
// in both datasets. A pattern absent from the synthetic side contributes 1.
inline double fp_avre(const RawDataset& real, const RawDataset& synthetic,
                      const EvalConfig& cfg) {
  const std::vector<PatternSupport> top = mine_top_k(real, cfg);
  if (top.empty()) {
    throw std::invalid_argument("real dataset yields no patterns");
  }
  return detail::fp_avre_from(top, detail::supports_in(top, synthetic, cfg));
}

inline double fp_kt(const RawDataset& real, const RawDataset& synthetic,
                    const EvalConfig& cfg) {
  const std::vector<PatternSupport> top = mine_top_k(real, cfg);
  return detail::fp_kt_from(top, detail::supports_in(top, synthetic, cfg));
}

// Jensen-Shannon divergence with base-2 logs over a shared support;
// 0*log(0) reads as 0. Symmetric and bounded to [0, 1].
inline double jsd(std::span<const double> p, std::span<const double> q) {
  if (p.size() != q.size()) {
    throw std::invalid_argument("distributions must share a support");
  }
  double sum_p = 0.0;
  double sum_q = 0.0;
  for (double v : p) {
    if (!(v >= 0.0)) throw std::invalid_argument("probabilities must be nonnegative");
    sum_p += v;
  }
  for (double v : q) {
    if (!(v >= 0.0)) throw std::invalid_argument("probabilities must be nonnegative");
    sum_q += v;
  }
  if (std::abs(sum_p - 1.0) > 1e-9 || std::abs(sum_q - 1.0) > 1e-9) {
    throw std::invalid_argument("distributions must sum to 1");
  }
  double acc = 0.0;
  for (std::size_t i = 0; i < p.size(); ++i) {
    const double mid = 0.5 * (p[i] + q[i]);
    if (p[i] > 0.0) acc += 0.5 * p[i] * std::log2(p[i] / mid);
    if (q[i] > 0.0) acc += 0.5 * q[i] * std::log2(q[i] / mid);
  }
  return std::clamp(acc, 0.0, 1.0);
}

// Divergence of the (start cell, end cell) trip distributions.
inline double trip_error(const RawDataset& real, const RawDataset& synthetic,
                         const EvalConfig& cfg) {
  validate(cfg);
  if (real.empty() || synthetic.empty()) {
    throw std::invalid_argument("both datasets must be non-empty");
  }
  const auto trips = [&](const RawDataset& data) {
    std::map<std::uint64_t, std::int64_t> counts;
    std::int64_t total = 0;
    for (const RawTrajectory& t : data) {
      const std::vector<std::uint32_t> cells = detail::visited_cells(t, cfg.grid);
      if (cells.empty()) continue;
      counts[(static_cast<std::uint64_t>(cells.front()) << 32) | cells.back()] += 1;
      ++total;
    }
    return std::pair{std::move(counts), total};
  };
  const auto [real_counts, real_total] = trips(real);
  const auto [syn_counts, syn_total] = trips(synthetic);
  if (real_total == 0 || syn_total == 0) {
    throw std::invalid_argument("no trips fall on the evaluation grid");
  }
  std::vector<double> p;
  std::vector<double> q;
  auto rit = real_counts.begin();
  auto sit = syn_counts.begin();
  while (rit != real_counts.end() || sit != syn_counts.end()) {
    if (sit == syn_counts.end() || (rit != real_counts.end() && rit->first < sit->first)) {
      p.push_back(static_cast<double>(rit->second) / static_cast<double>(real_total));
      q.push_back(0.0);
      ++rit;
    } else if (rit == real_counts.end() || sit->first < rit->first) {
      p.push_back(0.0);
      q.push_back(static_cast<double>(sit->second) / static_cast<double>(syn_total));
      ++sit;
    } else {
      p.push_back(static_cast<double>(rit->second) / static_cast<double>(real_total));
      q.push_back(static_cast<double>(sit->second) / static_cast<double>(syn_total));
      ++rit;
      ++sit;
    }
  }
  return jsd(p, q);
}

// Sum of great-circle distances between consecutive raw points.
inline double trip_length_meters(const RawTrajectory& t) {
  double total = 0.0;
  for (std::size_t i = 0; i + 1 < t.points.size(); ++i) {
    total += haversine_meters(t.points[i], t.points[i + 1]);
  }
  return total;
}

// Divergence of trip-length histograms. Bucket edges are equal-width bins
// spanning the real dataset's [min, max]; synthetic lengths outside the span
// clamp into the end buckets so both histograms share one support.
inline double length_error(const RawDataset& real, const RawDataset& synthetic,
                           const EvalConfig& cfg) {
  validate(cfg);
  if (real.empty() || synthetic.empty()) {
    throw std::invalid_argument("both datasets must be non-empty");
  }
  std::vector<double> real_lengths;
  real_lengths.reserve(real.size());
  for (const RawTrajectory& t : real) real_lengths.push_back(trip_length_meters(t));
  const auto [lo_it, hi_it] = std::minmax_element(real_lengths.begin(), real_lengths.end());
  const double lo = *lo_it;
  const double hi = *hi_it;
  const double width = (hi - lo) / static_cast<double>(cfg.length_buckets);
  const auto bucket_of = [&](double x) -> std::size_t {
    if (width <= 0.0) return x <= lo ? 0 : cfg.length_buckets - 1;
    if (x <= lo) return 0;
    if (x >= hi) return cfg.length_buckets - 1;
    const auto b = static_cast<std::size_t>((x - lo) / width);
    return std::min(b, cfg.length_buckets - 1);
  };
  std::vector<double> p(cfg.length_buckets, 0.0);
  std::vector<double> q(cfg.length_buckets, 0.0);
  for (double x : real_lengths) p[bucket_of(x)] += 1.0;
  for (const RawTrajectory& t : synthetic) q[bucket_of(trip_length_meters(t))] += 1.0;
  for (double& v : p) v /= static_cast<double>(real.size());
  for (double& v : q) v /= static_cast<double>(synthetic.size());
  return jsd(p, q);
}

struct MetricsReport {
  double location_avre = 0.0;
  double location_kt = 0.0;
  double fp_avre = 0.0;
  double fp_kt = 0.0;
  double trip_error = 0.0;
  double length_error = 0.0;
  std::size_t top_k_effective = 0;  // patterns actually available, <= top_k

  struct TopCell {
    std::uint32_t cell = 0;
    double real_proportion = 0.0;
    double synthetic_proportion = 0.0;
  };
  // The real dataset's top-n cells; the synthetic side reports its own
  // proportions on those same cells.
  std::vector<TopCell> top_cells;
};

// Runs all seven measurements, sharing the mined pattern set between the two
// frequent-pattern metrics.
inline MetricsReport evaluate(const RawDataset& real, const RawDataset& synthetic,
                              const EvalConfig& cfg) {
  validate(cfg);
  if (real.empty() || synthetic.empty()) {
    throw std::invalid_argument("both datasets must be non-empty");
  }
  MetricsReport report;
  report.location_avre = location_avre(real, synthetic, cfg);
  report.location_kt = location_kt(real, synthetic, cfg);

  const std::vector<CellProportion> top_cells = visit_proportion(real, cfg);
  const CellPopularity syn_pop = cell_popularity(synthetic, cfg.grid);
  const std::int64_t syn_total =
      std::accumulate(syn_pop.begin(), syn_pop.end(), std::int64_t{0});
  report.top_cells.reserve(top_cells.size());
  for (const CellProportion& c : top_cells) {
    const double syn_prop =
        syn_total > 0
            ? static_cast<double>(syn_pop[c.cell]) / static_cast<double>(syn_total)
            : 0.0;
    report.top_cells.push_back({c.cell, c.proportion, syn_prop});
  }

  const std::vector<PatternSupport> top = mine_top_k(real, cfg);
  report.top_k_effective = top.size();
  if (!top.empty()) {
    const std::vector<std::int64_t> syn_supports = detail::supports_in(top, synthetic, cfg);
    report.fp_avre = detail::fp_avre_from(top, syn_supports);
    report.fp_kt = detail::fp_kt_from(top, syn_supports);
  }

  report.trip_error = trip_error(real, synthetic, cfg);
  report.length_error = length_error(real, synthetic, cfg);
  return report;
}

}  // namespace privtraj
