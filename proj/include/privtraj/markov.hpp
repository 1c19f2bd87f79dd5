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

// Eligible gram enumeration, per-trajectory-normalized frequency matrix,
// Laplace perturbation, and the row-normalized transition matrix of the
// m-order Markov process.

#pragma once

#include <algorithm>
#include <cstdio>
#include <optional>
#include <ostream>
#include <span>
#include <stdexcept>
#include <unordered_map>
#include <vector>

#include "privtraj/geo.hpp"
#include "privtraj/privacy.hpp"

namespace privtraj {

// Length-m anchor sequence with consecutive 8-adjacency; never contains the
// stop marker.
using Gram = std::vector<AnchorId>;

inline bool is_eligible_gram(std::span<const AnchorId> gram, const GridSpec& grid) {
  if (gram.empty()) return false;
  for (AnchorId a : gram) {
    if (!grid.valid(a)) return false;
  }
  for (std::size_t i = 0; i + 1 < gram.size(); ++i) {
    if (!grid.adjacent(gram[i], gram[i + 1])) return false;
  }
  return true;
}

// All adjacency-constrained anchor sequences of the given length, in
// lexicographic order of anchor indices. Length 1 has no adjacency
// constraint, so it yields every anchor.
inline std::vector<Gram> enumerate_grams(const GridSpec& grid, int order) {
  if (order < 1) {
    throw std::invalid_argument("gram order must be at least 1");
  }
  std::vector<Gram> out;
  Gram cur;
  cur.reserve(order);
  const auto extend = [&](auto&& self, AnchorId a) -> void {
    cur.push_back(a);
    if (static_cast<int>(cur.size()) == order) {
      out.push_back(cur);
    } else {
      for (AnchorId next : anchor_neighbors(a, grid)) self(self, next);
    }
    cur.pop_back();
  };
  for (std::uint32_t i = 0; i < grid.cell_count(); ++i) extend(extend, AnchorId(i));
  return out;
}

namespace detail {

struct GramHash {
  std::size_t operator()(const Gram& g) const {
    std::size_t h = 1469598103934665603ull;
    for (AnchorId a : g) {
      h ^= a.index() + 0x9E3779B9u;
      h *= 1099511628211ull;
    }
    return h;
  }
};

}  // namespace detail

// Row-sparse matrix over (eligible m-gram, next symbol). Row r stores exactly
// the neighbor alphabet of its gram's last anchor (including the stop
// marker); every other column is a structural zero and is never stored.
class GramMatrix {
 public:
  GramMatrix(const GridSpec& grid, int order)
      : grid_(grid), order_(order), rows_(enumerate_grams(grid, order)) {
    index_.reserve(rows_.size());
    offsets_.reserve(rows_.size() + 1);
    offsets_.push_back(0);
    for (std::size_t r = 0; r < rows_.size(); ++r) {
      index_.emplace(rows_[r], r);
      const std::vector<Symbol> cols = neighbors(rows_[r].back(), grid_);
      columns_.insert(columns_.end(), cols.begin(), cols.end());
      offsets_.push_back(columns_.size());
    }
    values_.assign(columns_.size(), 0.0);
  }

  const GridSpec& grid() const { return grid_; }
  int order() const { return order_; }
  std::size_t row_count() const { return rows_.size(); }
  std::size_t column_count() const { return grid_.cell_count() + 1u; }
  std::size_t entry_count() const { return values_.size(); }

  const Gram& row_label(std::size_t r) const { return rows_[r]; }

  std::optional<std::size_t> row_of(const Gram& g) const {
    const auto it = index_.find(g);
    if (it == index_.end()) return std::nullopt;
    return it->second;
  }

  std::span<const Symbol> columns(std::size_t r) const {
    return {columns_.data() + offsets_[r], offsets_[r + 1] - offsets_[r]};
  }
  std::span<const double> values(std::size_t r) const {
    return {values_.data() + offsets_[r], offsets_[r + 1] - offsets_[r]};
  }
  std::span<double> values(std::size_t r) {
    return {values_.data() + offsets_[r], offsets_[r + 1] - offsets_[r]};
  }

  bool eligible(std::size_t r, Symbol col) const { return find_slot(r, col) != kNpos; }

  // Structural zeros read as 0.
  double at(std::size_t r, Symbol col) const {
    const std::size_t s = find_slot(r, col);
    return s == kNpos ? 0.0 : values_[s];
  }

  void set(std::size_t r, Symbol col, double v) { values_[slot_or_throw(r, col)] = v; }
  void add(std::size_t r, Symbol col, double v) { values_[slot_or_throw(r, col)] += v; }

 private:
  static constexpr std::size_t kNpos = static_cast<std::size_t>(-1);

  std::size_t find_slot(std::size_t r, Symbol col) const {
    for (std::size_t i = offsets_[r]; i < offsets_[r + 1]; ++i) {
      if (columns_[i] == col) return i;
    }
    return kNpos;
  }
  std::size_t slot_or_throw(std::size_t r, Symbol col) const {
    const std::size_t s = find_slot(r, col);
    if (s == kNpos) {
      throw std::invalid_argument("column is a structural zero for this row");
    }
    return s;
  }

  GridSpec grid_;
  int order_;
  std::vector<Gram> rows_;
  std::unordered_map<Gram, std::size_t, detail::GramHash> index_;
  std::vector<std::size_t> offsets_;  // row r occupies [offsets_[r], offsets_[r+1])
  std::vector<Symbol> columns_;
  std::vector<double> values_;
};

// Per-trajectory-normalized gram frequencies. A trajectory longer than m
// symbols spreads exactly one unit of mass over its (m+1)-windows, so adding
// or removing one trajectory moves the matrix by L1 mass exactly 1.
struct FrequencyMatrix : GramMatrix {
  using GramMatrix::GramMatrix;
};

// Row-stochastic next-symbol distributions over the same shape.
struct TransitionMatrix : GramMatrix {
  using GramMatrix::GramMatrix;
};

// Accumulates window frequencies: each (m+1)-window of a trajectory with n
// symbols (stop marker included) contributes 1/(n-m) to its (gram, next)
// entry. Trajectories with n <= m contribute nothing; their initial segments
// are represented by the prefix tree instead.
inline FrequencyMatrix build_frequency_matrix(const CalibratedDataset& data,
                                              const GridSpec& grid, int order) {
  FrequencyMatrix fm(grid, order);
  Gram window;
  window.reserve(order);
  for (const CalibratedTrajectory& t : data) {
    const std::vector<Symbol>& s = t.symbols();
    const std::size_t n = s.size();
    if (n <= static_cast<std::size_t>(order)) continue;
    const double weight = 1.0 / static_cast<double>(n - order);
    for (std::size_t i = 0; i + order < n; ++i) {
      window.clear();
      for (int j = 0; j < order; ++j) window.push_back(s[i + j].anchor());
      const std::size_t row = fm.row_of(window).value();
      fm.add(row, s[i + order], weight);
    }
  }
  return fm;
}

// Adds Laplace(1/markov_epsilon) noise independently to every structurally
// eligible entry; structural zeros stay untouched. Query sensitivity is 1.
inline FrequencyMatrix perturb(FrequencyMatrix fm, double markov_epsilon,
                               NoiseSource& src) {
  if (!(markov_epsilon > 0.0)) {
    throw std::invalid_argument("markov epsilon must be positive");
  }
  const double scale = 1.0 / markov_epsilon;
  for (std::size_t r = 0; r < fm.row_count(); ++r) {
    for (double& v : fm.values(r)) v += src.laplace(scale);
  }
  return fm;
}

// Clamps negatives to zero and normalizes each row into a probability
// vector. A row whose clamped sum is zero falls back to the uniform
// distribution over its eligible columns, so generation always has a usable
// next-symbol distribution.
inline TransitionMatrix normalize(const FrequencyMatrix& fm) {
  TransitionMatrix q(fm.grid(), fm.order());
  for (std::size_t r = 0; r < fm.row_count(); ++r) {
    const std::span<const double> src = fm.values(r);
    const std::span<double> dst = q.values(r);
    double sum = 0.0;
    for (std::size_t i = 0; i < src.size(); ++i) {
      dst[i] = std::max(0.0, src[i]);
      sum += dst[i];
    }
    if (sum > 0.0) {
      for (double& v : dst) v /= sum;
    } else {
      const double uniform = 1.0 / static_cast<double>(dst.size());
      for (double& v : dst) v = uniform;
    }
  }
  return q;
}

// Empirical next-symbol probability c(gram+next) / c(gram), counting
// occurrences over every window position of every trajectory. This is the
// zero-noise oracle for the transition matrix.
inline double empirical_transition(const CalibratedDataset& data, const Gram& gram,
                                   Symbol next) {
  if (gram.empty()) {
    throw std::invalid_argument("gram must be non-empty");
  }
  long long context_count = 0;
  long long extended_count = 0;
  const std::size_t m = gram.size();
  for (const CalibratedTrajectory& t : data) {
    const std::vector<Symbol>& s = t.symbols();
    if (s.size() < m) continue;
    for (std::size_t i = 0; i + m <= s.size(); ++i) {
      bool match = true;
      for (std::size_t j = 0; j < m; ++j) {
        if (s[i + j] != Symbol(gram[j])) {
          match = false;
          break;
        }
      }
      if (!match) continue;
      ++context_count;
      if (i + m < s.size() && s[i + m] == next) ++extended_count;
    }
  }
  if (context_count == 0) {
    throw std::domain_error("context gram never occurs in the dataset");
  }
  return static_cast<double>(extended_count) / static_cast<double>(context_count);
}

inline std::string gram_label(const Gram& g) {
  std::string s;
  for (AnchorId a : g) s += to_label(Symbol(a));
  return s;
}

// One `gram <TAB> column <TAB> value` line per eligible entry. Inspection
// output only.
inline void dump(const GramMatrix& m, std::ostream& os) {
  char buf[64];
  for (std::size_t r = 0; r < m.row_count(); ++r) {
    const auto cols = m.columns(r);
    const auto vals = m.values(r);
    const std::string label = gram_label(m.row_label(r));
    for (std::size_t i = 0; i < cols.size(); ++i) {
      std::snprintf(buf, sizeof(buf), "%.9g", vals[i]);
      os << label << '\t' << to_label(cols[i]) << '\t' << buf << '\n';
    }
  }
}

}  // namespace privtraj
