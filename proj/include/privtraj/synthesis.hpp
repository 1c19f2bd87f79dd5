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

// Synthetic dataset generation from the noisy tree and transition matrix.
// Reads only the noisy synopsis, never the original data.

#pragma once

#include <cmath>
#include <stdexcept>
#include <string>
#include <vector>

#include "privtraj/geo.hpp"
#include "privtraj/markov.hpp"
#include "privtraj/prefix_tree.hpp"
#include "privtraj/privacy.hpp"

namespace privtraj {

struct SynthesisConfig {
  std::size_t max_length = 0;  // cap on symbols per trajectory, stop marker included
  bool jitter = false;         // uniform point within the cell instead of the centroid
};

struct SyntheticDataset {
  RawDataset raw;  // coordinate-space output, one point per anchor
  CalibratedDataset calibrated;
};

// Round half away from zero. Node masses are real-valued after consistency
// enforcement but emission counts must be integral.
inline long long round_count(double c) {
  if (!(c >= 0.0)) {
    throw std::invalid_argument("count must be nonnegative");
  }
  return std::llround(c);
}

namespace detail {

inline Symbol sample_row(const TransitionMatrix& q, std::size_t row, double u) {
  const auto cols = q.columns(row);
  const auto vals = q.values(row);
  double acc = 0.0;
  for (std::size_t i = 0; i < vals.size(); ++i) {
    acc += vals[i];
    if (u < acc) return cols[i];
  }
  return cols.back();
}

}  // namespace detail

// Emits round(count) trajectories per tree leaf, visiting leaves in
// deterministic prefix order with an independently derived noise stream each,
// so output does not depend on scheduling.
//
// Leaf dispatch:
//   - prefix ends with the stop marker: emitted verbatim;
//   - at least m anchors: continue by sampling the transition row of the last
//     m anchors until the stop marker is drawn or the length cap forces it;
//   - fewer than m anchors (pruned high up): emitted with a forced stop, as
//     there is no usable Markov context.
inline SyntheticDataset generate(const NoisyPrefixTree& tree, const TransitionMatrix& q,
                                 const SynthesisConfig& cfg, NoiseSource& src) {
  if (cfg.max_length < static_cast<std::size_t>(tree.height())) {
    throw std::invalid_argument("max_length must be at least the tree height");
  }
  if (q.order() != tree.order()) {
    throw std::invalid_argument("transition matrix order does not match the tree");
  }
  const GridSpec& grid = tree.grid();
  const std::size_t order = static_cast<std::size_t>(tree.order());

  SyntheticDataset out;
  std::size_t leaf_index = 0;
  std::size_t emitted = 0;
  Gram context;
  context.reserve(order);

  tree.visit([&](const std::vector<Symbol>& prefix, const TreeNode& node) {
    if (!node.children.empty()) return;
    const std::size_t this_leaf = leaf_index++;
    const long long copies = round_count(std::max(0.0, node.noisy_count));
    if (copies <= 0) return;
    NoiseSource leaf_src = src.child(this_leaf);

    for (long long rep = 0; rep < copies; ++rep) {
      std::vector<Symbol> symbols = prefix;
      if (!symbols.back().is_stop()) {
        if (symbols.size() >= order) {
          while (symbols.size() + 1 < cfg.max_length) {
            context.clear();
            for (auto it = symbols.end() - order; it != symbols.end(); ++it) {
              context.push_back(it->anchor());
            }
            const std::size_t row = q.row_of(context).value();
            const Symbol next = detail::sample_row(q, row, leaf_src.uniform01());
            symbols.push_back(next);
            if (next.is_stop()) break;
          }
        }
        if (!symbols.back().is_stop()) symbols.push_back(Symbol::stop());
      }

      RawTrajectory rt;
      rt.id = "syn_" + std::to_string(emitted);
      rt.points.reserve(symbols.size() - 1);
      for (Symbol s : symbols) {
        if (s.is_stop()) break;
        rt.points.push_back(cfg.jitter
                                ? cell_point(s.anchor(), grid, leaf_src.uniform01(),
                                             leaf_src.uniform01())
                                : anchor_centroid(s.anchor(), grid));
      }
      ++emitted;
      out.calibrated.emplace_back(std::move(symbols), grid);
      out.raw.push_back(std::move(rt));
    }
  });
  return out;
}

}  // namespace privtraj
