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

// Noisy prefix tree over calibrated trajectories: per-level Laplace noise
// with decremental budgets, count-threshold pruning, and top-down consistency
// enforcement.

#pragma once

#include <algorithm>
#include <cstdio>
#include <map>
#include <ostream>
#include <span>
#include <stdexcept>
#include <vector>

#include "privtraj/geo.hpp"
#include "privtraj/privacy.hpp"

namespace privtraj {

struct TreeNode {
  Symbol symbol;
  double noisy_count = 0.0;
  int level = 0;
  std::vector<TreeNode> children;  // ascending by symbol; empty for leaves
};

// Height-(m+2) tree of noisy prefix counts. Level 1 holds one node per grid
// anchor; deeper levels hold the neighbor extensions of expanded nodes. The
// virtual root carries the (exact) dataset size and no symbol.
class NoisyPrefixTree {
 public:
  NoisyPrefixTree(GridSpec grid, int order, double root_count,
                  std::vector<TreeNode> level1)
      : grid_(std::move(grid)),
        order_(order),
        root_count_(root_count),
        level1_(std::move(level1)) {}

  int order() const { return order_; }
  int height() const { return order_ + 2; }
  double root_count() const { return root_count_; }
  const GridSpec& grid() const { return grid_; }
  const std::vector<TreeNode>& level1() const { return level1_; }

  // Pre-order visit of every node; f(prefix, node) where prefix includes the
  // node's own symbol.
  template <typename F>
  void visit(F&& f) const {
    std::vector<Symbol> prefix;
    for (const TreeNode& n : level1_) visit_node(n, prefix, f);
  }

  std::size_t node_count() const {
    std::size_t n = 0;
    visit([&](const std::vector<Symbol>&, const TreeNode&) { ++n; });
    return n;
  }

  // Indented text form, one `label count` line per node. Post-processing
  // output for inspection only.
  void dump(std::ostream& os) const {
    char buf[64];
    std::snprintf(buf, sizeof(buf), "%.9g", root_count_);
    os << "root " << buf << '\n';
    visit([&](const std::vector<Symbol>& prefix, const TreeNode& node) {
      std::snprintf(buf, sizeof(buf), "%.9g", node.noisy_count);
      os << std::string(2 * (prefix.size() - 1), ' ') << to_label(node.symbol)
         << ' ' << buf << '\n';
    });
  }

  friend NoisyPrefixTree enforce_consistency(NoisyPrefixTree tree,
                                             std::size_t dataset_size);

 private:
  template <typename F>
  static void visit_node(const TreeNode& node, std::vector<Symbol>& prefix, F& f) {
    prefix.push_back(node.symbol);
    f(static_cast<const std::vector<Symbol>&>(prefix), node);
    for (const TreeNode& child : node.children) visit_node(child, prefix, f);
    prefix.pop_back();
  }

  GridSpec grid_;
  int order_;
  double root_count_;
  std::vector<TreeNode> level1_;
};

// Number of trajectories whose leading symbols equal `prefix` exactly.
inline std::size_t count_prefix(const CalibratedDataset& data,
                                std::span<const Symbol> prefix) {
  if (prefix.empty()) {
    throw std::invalid_argument("prefix must be non-empty");
  }
  std::size_t count = 0;
  for (const CalibratedTrajectory& t : data) {
    const std::vector<Symbol>& s = t.symbols();
    if (s.size() < prefix.size()) continue;
    if (std::equal(prefix.begin(), prefix.end(), s.begin())) ++count;
  }
  return count;
}

namespace detail {

// Exact prefix-count trie, depth-limited. The builder queries it once per
// materialized node instead of rescanning the dataset.
struct ExactPrefixNode {
  std::size_t count = 0;
  std::map<Symbol, ExactPrefixNode> children;
};

inline ExactPrefixNode exact_prefix_counts(const CalibratedDataset& data,
                                           int max_depth) {
  ExactPrefixNode root;
  for (const CalibratedTrajectory& t : data) {
    ExactPrefixNode* cur = &root;
    int depth = 0;
    for (Symbol s : t.symbols()) {
      if (depth == max_depth) break;
      cur = &cur->children[s];
      cur->count += 1;
      ++depth;
    }
  }
  return root;
}

inline TreeNode grow_node(Symbol symbol, int level, const ExactPrefixNode* exact,
                          int height, const LevelBudgets& budgets,
                          const GridSpec& grid, NoiseSource& src) {
  TreeNode node;
  node.symbol = symbol;
  node.level = level;
  const double true_count = exact ? static_cast<double>(exact->count) : 0.0;
  node.noisy_count = true_count + src.laplace(1.0 / budgets[level - 1]);
  // Expansion rule: materialize the full neighbor alphabet below any node
  // whose pre-consistency noisy count reaches 1, unless the prefix already
  // ended or the next level would exceed the height cap.
  if (level < height - 1 && symbol.is_anchor() && node.noisy_count >= 1.0) {
    const std::vector<Symbol> alphabet = neighbors(symbol.anchor(), grid);
    node.children.reserve(alphabet.size());
    for (Symbol child : alphabet) {
      const ExactPrefixNode* child_exact = nullptr;
      if (exact) {
        const auto it = exact->children.find(child);
        if (it != exact->children.end()) child_exact = &it->second;
      }
      node.children.push_back(
          grow_node(child, level + 1, child_exact, height, budgets, grid, src));
    }
  }
  return node;
}

inline void clamp_counts(std::vector<TreeNode>& nodes) {
  for (TreeNode& n : nodes) {
    n.noisy_count = std::max(0.0, n.noisy_count);
    clamp_counts(n.children);
  }
}

// Rescales each sibling set to share its parent's (already final) count in
// proportion to the siblings' own counts; a sibling set whose counts all
// clamped to zero splits the parent mass equally. An already-consistent set
// is left untouched, so noiseless counts survive bit-exactly.
inline void rescale_top_down(std::vector<TreeNode>& children, double parent_count) {
  if (children.empty()) return;
  double sum = 0.0;
  for (const TreeNode& c : children) sum += c.noisy_count;
  if (sum > 0.0) {
    if (sum != parent_count) {
      for (TreeNode& c : children) c.noisy_count = c.noisy_count / sum * parent_count;
    }
  } else {
    const double share = parent_count / static_cast<double>(children.size());
    for (TreeNode& c : children) c.noisy_count = share;
  }
  for (TreeNode& c : children) rescale_top_down(c.children, c.noisy_count);
}

}  // namespace detail

// Builds the noisy prefix tree of height m+2. Every anchor appears at level 1
// regardless of its count. A node at level i draws Laplace noise at scale
// 1/share_i of the decremental allocation; prefix-count sensitivity is 1
// because one trajectory touches exactly one root-to-leaf path.
inline NoisyPrefixTree build_prefix_tree(const CalibratedDataset& data,
                                         const GridSpec& grid, int order,
                                         double tree_epsilon, double delta,
                                         NoiseSource& src) {
  if (order < 1) {
    throw std::invalid_argument("markov order must be at least 1");
  }
  const int height = order + 2;
  const LevelBudgets budgets = level_budgets(tree_epsilon, height, delta);
  const detail::ExactPrefixNode exact_root =
      detail::exact_prefix_counts(data, height - 1);

  std::vector<TreeNode> level1;
  level1.reserve(grid.cell_count());
  for (std::uint32_t i = 0; i < grid.cell_count(); ++i) {
    const Symbol symbol{AnchorId(i)};
    const auto it = exact_root.children.find(symbol);
    const detail::ExactPrefixNode* exact =
        it == exact_root.children.end() ? nullptr : &it->second;
    level1.push_back(
        detail::grow_node(symbol, 1, exact, height, budgets, grid, src));
  }
  return NoisyPrefixTree(grid, order, static_cast<double>(data.size()),
                         std::move(level1));
}

// Top-down consistency pass. Counts are first clamped at zero; the root count
// is pinned to the exact dataset size; then every sibling set is rescaled so
// it sums to its parent's count. Afterwards each node with children carries
// exactly the sum of its children (up to rounding), and all counts are
// nonnegative. Pure post-processing: never touches the dataset.
inline NoisyPrefixTree enforce_consistency(NoisyPrefixTree tree,
                                           std::size_t dataset_size) {
  tree.root_count_ = static_cast<double>(dataset_size);
  detail::clamp_counts(tree.level1_);
  detail::rescale_top_down(tree.level1_, tree.root_count_);
  return tree;
}

}  // namespace privtraj
