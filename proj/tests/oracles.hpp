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

// Test-only brute-force oracles and random dataset generators. Everything
// here recomputes results from first principles, independent of the library's
// implementation paths.

#pragma once

#include <algorithm>
#include <map>
#include <random>
#include <vector>

#include "privtraj/privtraj.hpp"

namespace testutil {

using namespace privtraj;

// Grid whose cells are unit squares with the min corner at lon/lat (0, 0).
inline GridSpec unit_grid(std::uint32_t rows, std::uint32_t cols) {
  return GridSpec(rows, cols,
                  BoundingBox{{0.0, 0.0},
                              {static_cast<double>(cols), static_cast<double>(rows)}});
}

// Random valid calibrated trajectory: uniform start anchor, then a random
// walk over anchor neighbors.
inline CalibratedTrajectory random_walk(const GridSpec& grid, std::size_t max_anchors,
                                        std::mt19937_64& rng) {
  std::uniform_int_distribution<std::uint32_t> start(0, grid.cell_count() - 1);
  std::uniform_int_distribution<std::size_t> length(1, max_anchors);
  const std::size_t anchors = length(rng);
  std::vector<Symbol> symbols;
  symbols.reserve(anchors + 1);
  AnchorId cur(start(rng));
  symbols.emplace_back(cur);
  for (std::size_t i = 1; i < anchors; ++i) {
    const std::vector<AnchorId> options = anchor_neighbors(cur, grid);
    if (options.empty()) break;
    std::uniform_int_distribution<std::size_t> pick(0, options.size() - 1);
    cur = options[pick(rng)];
    symbols.emplace_back(cur);
  }
  symbols.push_back(Symbol::stop());
  return CalibratedTrajectory(std::move(symbols), grid);
}

inline CalibratedDataset random_walk_dataset(const GridSpec& grid, std::size_t count,
                                             std::size_t max_anchors,
                                             std::mt19937_64& rng) {
  CalibratedDataset out;
  out.reserve(count);
  for (std::size_t i = 0; i < count; ++i) out.push_back(random_walk(grid, max_anchors, rng));
  return out;
}

// Linear-scan prefix count, written independently of count_prefix.
inline std::size_t bf_count_prefix(const CalibratedDataset& data,
                                   const std::vector<Symbol>& prefix) {
  std::size_t n = 0;
  for (const CalibratedTrajectory& t : data) {
    const auto& s = t.symbols();
    if (s.size() < prefix.size()) continue;
    bool match = true;
    for (std::size_t i = 0; i < prefix.size(); ++i) {
      if (s[i] != prefix[i]) {
        match = false;
        break;
      }
    }
    if (match) ++n;
  }
  return n;
}

// All adjacency-constrained anchor tuples by exhaustive enumeration with
// odometer increments (no recursion, no neighbor lists).
inline std::vector<Gram> bf_enumerate_grams(const GridSpec& grid, int order) {
  std::vector<Gram> out;
  std::vector<std::uint32_t> idx(order, 0);
  const std::uint32_t n = grid.cell_count();
  while (true) {
    bool ok = true;
    for (int i = 0; i + 1 < order && ok; ++i) {
      const AnchorId a(idx[i]);
      const AnchorId b(idx[i + 1]);
      const auto dr = static_cast<std::int64_t>(grid.row_of(a)) -
                      static_cast<std::int64_t>(grid.row_of(b));
      const auto dc = static_cast<std::int64_t>(grid.col_of(a)) -
                      static_cast<std::int64_t>(grid.col_of(b));
      ok = std::max(std::abs(dr), std::abs(dc)) == 1;
    }
    if (ok) {
      Gram g;
      for (std::uint32_t v : idx) g.emplace_back(v);
      out.push_back(std::move(g));
    }
    int pos = order - 1;
    while (pos >= 0 && ++idx[pos] == n) idx[pos--] = 0;
    if (pos < 0) break;
  }
  return out;
}

// Per-position frequency accumulation: window-by-window scan into nested
// maps, one unit of mass per trajectory longer than m symbols.
using BfFrequency = std::map<Gram, std::map<Symbol, double>>;

inline BfFrequency bf_frequency(const CalibratedDataset& data, int order) {
  BfFrequency fm;
  for (const CalibratedTrajectory& t : data) {
    const auto& s = t.symbols();
    const std::size_t n = s.size();
    if (n <= static_cast<std::size_t>(order)) continue;
    const double w = 1.0 / static_cast<double>(n - order);
    for (std::size_t i = 0; i + order < n; ++i) {
      Gram g;
      for (int j = 0; j < order; ++j) g.push_back(s[i + j].anchor());
      fm[g][s[i + order]] += w;
    }
  }
  return fm;
}

// Clamp/normalize of one row over its eligible columns, with the uniform
// fallback for nonpositive sums.
inline std::map<Symbol, double> bf_transition_row(const BfFrequency& fm, const Gram& gram,
                                                  const GridSpec& grid) {
  const std::vector<Symbol> cols = neighbors(gram.back(), grid);
  std::map<Symbol, double> row;
  double sum = 0.0;
  const auto it = fm.find(gram);
  for (Symbol c : cols) {
    double v = 0.0;
    if (it != fm.end()) {
      const auto jt = it->second.find(c);
      if (jt != it->second.end()) v = std::max(0.0, jt->second);
    }
    row[c] = v;
    sum += v;
  }
  if (sum > 0.0) {
    for (auto& [c, v] : row) v /= sum;
  } else {
    for (auto& [c, v] : row) v = 1.0 / static_cast<double>(cols.size());
  }
  return row;
}

// Random raw trajectory with points drawn uniformly inside the bbox.
inline RawTrajectory random_raw(const GridSpec& grid, std::size_t points,
                                std::mt19937_64& rng) {
  const BoundingBox& b = grid.bbox();
  std::uniform_real_distribution<double> lon(b.min_corner.lon, b.max_corner.lon);
  std::uniform_real_distribution<double> lat(b.min_corner.lat, b.max_corner.lat);
  RawTrajectory t;
  t.id = "r" + std::to_string(rng() % 100000);
  for (std::size_t i = 0; i < points; ++i) t.points.push_back(GeoPoint{lon(rng), lat(rng)});
  return t;
}

// Coordinate-space dataset whose points are the centroids of a calibrated
// dataset's anchors; calibration is lossless on such data.
inline RawDataset centroid_dataset(const CalibratedDataset& data, const GridSpec& grid) {
  RawDataset out;
  out.reserve(data.size());
  for (std::size_t i = 0; i < data.size(); ++i) {
    RawTrajectory t;
    t.id = "t" + std::to_string(i);
    for (Symbol s : data[i].symbols()) {
      if (s.is_stop()) break;
      t.points.push_back(anchor_centroid(s.anchor(), grid));
    }
    out.push_back(std::move(t));
  }
  return out;
}

}  // namespace testutil
