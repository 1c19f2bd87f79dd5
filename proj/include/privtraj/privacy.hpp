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

// Laplace noise source and privacy-budget arithmetic.

#pragma once

#include <cmath>
#include <cstdint>
#include <random>
#include <stdexcept>
#include <vector>

namespace privtraj {

inline std::uint64_t splitmix64(std::uint64_t x) {
  x += 0x9E3779B97F4A7C15ull;
  x = (x ^ (x >> 30)) * 0xBF58476D1CE4E5B9ull;
  x = (x ^ (x >> 27)) * 0x94D049BB133111EBull;
  return x ^ (x >> 31);
}

// Total budget and how it is shared between the prefix-tree synopsis and the
// Markov synopsis.
struct PrivacyBudget {
  double epsilon = 1.0;      // total budget, > 0
  double g = 0.6;            // tree share, strictly between 0 and 1
  double delta_alloc = 0.8;  // level-decay parameter for the tree, > 0
};

inline void validate(const PrivacyBudget& b) {
  if (!(b.epsilon > 0.0) || !std::isfinite(b.epsilon)) {
    throw std::invalid_argument("epsilon must be a positive finite value");
  }
  if (!(b.g > 0.0) || !(b.g < 1.0)) {
    throw std::invalid_argument("g must lie strictly between 0 and 1");
  }
  if (!(b.delta_alloc > 0.0) || !std::isfinite(b.delta_alloc)) {
    throw std::invalid_argument("delta_alloc must be a positive finite value");
  }
}

struct BudgetSplit {
  double tree_epsilon = 0.0;
  double markov_epsilon = 0.0;
};

// Splits the total budget into the tree share g*epsilon and the Markov
// remainder. The two parts sum to epsilon bit-exactly: the Markov share is
// the floating-point remainder, and the tree share is re-centered once when
// the direct sum misses by an ulp.
inline BudgetSplit split_budget(const PrivacyBudget& b) {
  validate(b);
  double tree = b.g * b.epsilon;
  const double markov = b.epsilon - tree;
  if (tree + markov != b.epsilon) tree = b.epsilon - markov;
  return {tree, markov};
}

using LevelBudgets = std::vector<double>;

// Per-level budgets for a height-h tree, one entry per level 1..h-1:
//
//   share_i = log(h - i + delta) / sum_k log(h - k + delta) * tree_epsilon
//
// Shallow levels receive more budget; the shares decrease strictly with depth
// and sum to tree_epsilon. The ratio is independent of the log base; natural
// log is used.
inline LevelBudgets level_budgets(double tree_epsilon, int height, double delta) {
  if (!(tree_epsilon > 0.0)) {
    throw std::invalid_argument("tree epsilon must be positive");
  }
  if (height < 2) {
    throw std::invalid_argument("tree height must be at least 2");
  }
  if (!(delta > 0.0)) {
    throw std::invalid_argument("delta must be positive");
  }
  LevelBudgets shares(static_cast<std::size_t>(height) - 1);
  double total = 0.0;
  for (int i = 1; i < height; ++i) {
    shares[i - 1] = std::log(static_cast<double>(height - i) + delta);
    total += shares[i - 1];
  }
  for (double& s : shares) s = s / total * tree_epsilon;
  return shares;
}

// Pseudo-random stream for the Laplace mechanism and synthesis sampling.
//
// A seeded stream replays bit-exactly; it exists for tests and repeatable
// experiments and is not private against anyone who can guess the seed.
// Entropy mode seeds from the platform random device. Zero-noise mode turns
// laplace() into the identity and is strictly a test stub.
//
// A source is single-owner: never share one instance across threads. Parallel
// work derives independent child streams from the root seed and a task index.
class NoiseSource {
 public:
  static NoiseSource seeded(std::uint64_t seed) { return NoiseSource(seed, false); }

  static NoiseSource from_entropy() {
    std::random_device rd;
    const std::uint64_t seed = (static_cast<std::uint64_t>(rd()) << 32) ^ rd();
    return NoiseSource(seed, false);
  }

  static NoiseSource zero_noise(std::uint64_t seed = 0) { return NoiseSource(seed, true); }

  // Independent stream for a sub-task; depends only on this source's seed and
  // the index, so derivation order does not matter.
  NoiseSource child(std::uint64_t task_index) const {
    return NoiseSource(splitmix64(seed_ ^ (0x9E3779B97F4A7C15ull * (task_index + 1))),
                       zero_);
  }

  std::uint64_t seed() const { return seed_; }
  bool is_zero_noise() const { return zero_; }

  // Uniform double in the open interval (0, 1).
  double uniform01() {
    return (static_cast<double>(rng_() >> 11) + 0.5) * 0x1p-53;
  }

  // Centered Laplace sample with the given scale, via the inverse CDF.
  double laplace(double scale) {
    if (!(scale > 0.0)) {
      throw std::invalid_argument("laplace scale must be positive");
    }
    if (zero_) return 0.0;
    const double v = uniform01() - 0.5;  // in (-1/2, 1/2), so 1 - 2|v| > 0
    const double t = std::log1p(-2.0 * std::abs(v));
    return v < 0.0 ? scale * t : -scale * t;
  }

 private:
  NoiseSource(std::uint64_t seed, bool zero) : seed_(seed), rng_(seed), zero_(zero) {}

  std::uint64_t seed_;
  std::mt19937_64 rng_;
  bool zero_;
};

inline double laplace(double scale, NoiseSource& src) { return src.laplace(scale); }

}  // namespace privtraj
