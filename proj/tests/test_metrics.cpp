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

#include <catch2/catch_amalgamated.hpp>

#include <map>
#include <random>
#include <set>

#include "oracles.hpp"
#include "privtraj/metrics.hpp"

using namespace privtraj;
using testutil::unit_grid;

namespace {

EvalConfig config_for(const GridSpec& grid) {
  return EvalConfig{grid, 0.001, 20, 200, 2, 8, 20};
}

// One-point-per-cell trajectory through the given cells of a unit grid.
RawTrajectory through(const GridSpec& grid, std::initializer_list<std::uint32_t> cells,
                      const std::string& id = "t") {
  RawTrajectory t;
  t.id = id;
  for (std::uint32_t c : cells) t.points.push_back(anchor_centroid(AnchorId(c), grid));
  return t;
}

// Distinct per-cell popularity and distinct pattern supports on a 2x2 grid.
RawDataset crafted_dataset(const GridSpec& grid) {
  return RawDataset{
      through(grid, {0, 1, 0}, "a"),
      through(grid, {2, 0, 1}, "b"),
      through(grid, {0, 2, 3}, "c"),
      through(grid, {1}, "d"),
  };
}

}  // namespace

TEST_CASE("cell popularity counts visit events with dedup", "[metrics]") {
  const GridSpec grid = unit_grid(2, 2);
  CHECK(cell_popularity({}, grid) == CellPopularity{0, 0, 0, 0});

  const RawDataset dwell{
      RawTrajectory{"t", {anchor_centroid(AnchorId(1), grid),
                          GeoPoint{1.6, 0.4},  // same cell again
                          anchor_centroid(AnchorId(1), grid)}}};
  CHECK(cell_popularity(dwell, grid) == CellPopularity{0, 1, 0, 0});

  const RawDataset reenter{through(grid, {0, 1, 0})};
  CHECK(cell_popularity(reenter, grid) == CellPopularity{2, 1, 0, 0});
}

TEST_CASE("location avre follows the sanity-bounded formula", "[metrics]") {
  const GridSpec grid = unit_grid(1, 2);
  EvalConfig cfg = config_for(grid);

  // two cells; direct arithmetic on one differing cell
  RawDataset real;
  for (int i = 0; i < 100; ++i) real.push_back(through(grid, {0}, "r" + std::to_string(i)));
  RawDataset syn;
  for (int i = 0; i < 50; ++i) syn.push_back(through(grid, {0}, "s" + std::to_string(i)));
  cfg.sanity_fraction = 0.1;  // lambda = 10
  // cell 0: |100-50|/max(100,10) = 0.5; cell 1: 0/max(0,10) = 0
  CHECK(location_avre(real, syn, cfg) == Catch::Approx(0.25));

  // sanity bound engages when the real count is tiny
  RawDataset real_small;
  for (int i = 0; i < 2; ++i) real_small.push_back(through(grid, {0}, "r"));
  RawDataset syn_big;
  for (int i = 0; i < 8; ++i) syn_big.push_back(through(grid, {0}, "s"));
  EvalConfig cfg2 = config_for(grid);
  cfg2.sanity_fraction = 5.0;  // lambda = 10 for |D| = 2
  CHECK(location_avre(real_small, syn_big, cfg2) == Catch::Approx(0.3));

  CHECK(location_avre(real, real, cfg) == 0.0);
  CHECK_THROWS_AS(location_avre({}, syn, cfg), std::invalid_argument);
}

TEST_CASE("kendall tau enumerates concordant and discordant pairs", "[metrics]") {
  const std::vector<std::int64_t> a{3, 1, 2};
  CHECK(kendall_tau(a, a) == 1.0);
  const std::vector<std::int64_t> reversed{1, 3, 2};
  // all three pair orders flip against {3,1,2}? enumerate: (0,1): 3>1 vs 1<3 D;
  // (0,2): 3>2 vs 1<2 D; (1,2): 1<2 vs 3>2 D -> -1
  CHECK(kendall_tau(a, reversed) == -1.0);
  const std::vector<std::int64_t> b{3, 2, 1};
  CHECK(kendall_tau(a, b) == 1.0 / 3.0);
  // ties are neutral but the denominator stays fixed
  const std::vector<std::int64_t> tied{2, 2, 1};
  CHECK(kendall_tau(tied, tied) == Catch::Approx(2.0 / 3.0));
}

TEST_CASE("visit proportions cover the distribution", "[metrics]") {
  const GridSpec grid = unit_grid(2, 2);
  EvalConfig cfg = config_for(grid);
  const RawDataset data = crafted_dataset(grid);
  // pops: cell0 = 4, cell1 = 3, cell2 = 2, cell3 = 1; total 10
  const auto all = [&] {
    EvalConfig wide = cfg;
    wide.top_n = 10;
    return visit_proportion(data, wide);
  }();
  REQUIRE(all.size() == 4);
  double total = 0.0;
  for (const auto& c : all) total += c.proportion;
  CHECK(total == Catch::Approx(1.0));
  CHECK(all[0].cell == 0);
  CHECK(all[0].proportion == Catch::Approx(0.4));

  cfg.top_n = 2;
  const auto top2 = visit_proportion(data, cfg);
  REQUIRE(top2.size() == 2);
  CHECK(top2[0].cell == 0);
  CHECK(top2[1].cell == 1);

  // uniform visits give uniform proportions
  RawDataset uniform;
  for (std::uint32_t c = 0; c < 4; ++c) uniform.push_back(through(grid, {c}));
  for (const auto& p : visit_proportion(uniform, cfg)) {
    CHECK(p.proportion == Catch::Approx(0.25));
  }
  CHECK_THROWS_AS(visit_proportion({}, cfg), std::invalid_argument);
}

TEST_CASE("pattern mining enumerates contiguous windows per trajectory", "[metrics]") {
  const GridSpec grid = unit_grid(1, 3);
  EvalConfig cfg = config_for(grid);
  const RawDataset one{through(grid, {0, 1, 2})};
  const auto mined = mine_top_k(one, cfg);
  // windows of [0,1,2]: (0,1), (1,2), (0,1,2), each supported once
  REQUIRE(mined.size() == 3);
  for (const auto& p : mined) CHECK(p.support == 1);
  const std::set<CellPattern> expected{{0, 1}, {1, 2}, {0, 1, 2}};
  std::set<CellPattern> got;
  for (const auto& p : mined) got.insert(p.pattern);
  CHECK(got == expected);
}

TEST_CASE("a repeated pattern inside one trajectory counts once", "[metrics]") {
  const GridSpec grid = unit_grid(1, 3);
  EvalConfig cfg = config_for(grid);
  const RawDataset data{through(grid, {0, 1, 0, 1})};
  for (const auto& p : mine_top_k(data, cfg)) {
    if (p.pattern == CellPattern{0, 1}) CHECK(p.support == 1);
  }
}

TEST_CASE("top-k mining agrees with an exhaustive window scan", "[metrics]") {
  std::mt19937_64 rng(151);
  const GridSpec grid = unit_grid(3, 3);
  EvalConfig cfg = config_for(grid);
  cfg.top_k = 1000;  // keep everything: compare the full support map
  const CalibratedDataset walks = testutil::random_walk_dataset(grid, 20, 8, rng);
  const RawDataset data = testutil::centroid_dataset(walks, grid);

  std::map<CellPattern, std::int64_t> brute;
  for (const RawTrajectory& t : data) {
    std::vector<std::uint32_t> cells;
    for (const GeoPoint& p : t.points) {
      const std::uint32_t c = map_point(p, grid).index();
      if (cells.empty() || cells.back() != c) cells.push_back(c);
    }
    std::set<CellPattern> seen;
    for (std::size_t len = cfg.pattern_len_min; len <= cfg.pattern_len_max; ++len) {
      for (std::size_t i = 0; i + len <= cells.size(); ++i) {
        seen.insert(CellPattern(cells.begin() + i, cells.begin() + i + len));
      }
    }
    for (const auto& p : seen) brute[p] += 1;
  }
  const auto mined = mine_top_k(data, cfg);
  REQUIRE(mined.size() == brute.size());
  for (const auto& p : mined) {
    REQUIRE(brute.at(p.pattern) == p.support);
  }
  // ranking is by support descending, ties lexicographic
  for (std::size_t i = 0; i + 1 < mined.size(); ++i) {
    const bool ordered = mined[i].support > mined[i + 1].support ||
                         (mined[i].support == mined[i + 1].support &&
                          mined[i].pattern < mined[i + 1].pattern);
    REQUIRE(ordered);
  }
}

TEST_CASE("frequent-pattern metrics hit their ideal and worst cases", "[metrics]") {
  const GridSpec grid = unit_grid(2, 2);
  EvalConfig cfg = config_for(grid);
  cfg.top_k = 2;
  const RawDataset data = crafted_dataset(grid);
  CHECK(fp_avre(data, data, cfg) == 0.0);
  CHECK(fp_kt(data, data, cfg) == 1.0);

  // a synthetic dataset sharing no pattern: every support reads zero
  const RawDataset unrelated{through(grid, {3, 2}), through(grid, {3, 2})};
  CHECK(fp_avre(data, unrelated, cfg) == Catch::Approx(1.0));
}

TEST_CASE("fp rank correlation sees preserved order", "[metrics]") {
  // supports (10, 5, 2) vs (9, 6, 1): all pairs concordant
  const std::vector<std::int64_t> a{10, 5, 2};
  const std::vector<std::int64_t> b{9, 6, 1};
  CHECK(kendall_tau(a, b) == 1.0);
}

TEST_CASE("jsd evaluates the closed-form examples", "[metrics]") {
  const std::vector<double> p{0.5, 0.5};
  const std::vector<double> q{1.0, 0.0};
  CHECK(jsd(p, p) == 0.0);
  CHECK(jsd(p, q) == Catch::Approx(0.3112781244591328).margin(1e-12));
  CHECK(jsd(q, p) == jsd(p, q));  // symmetric

  const std::vector<double> left{1.0, 0.0};
  const std::vector<double> right{0.0, 1.0};
  CHECK(jsd(left, right) == 1.0);

  CHECK_THROWS_AS(jsd(std::vector<double>{0.5, 0.6}, p), std::invalid_argument);
  CHECK_THROWS_AS(jsd(std::vector<double>{0.5}, p), std::invalid_argument);
}

TEST_CASE("jsd stays symmetric and bounded on random distributions", "[metrics]") {
  std::mt19937_64 rng(161);
  std::uniform_real_distribution<double> u(0.0, 1.0);
  for (int trial = 0; trial < 200; ++trial) {
    const std::size_t n = 2 + rng() % 8;
    std::vector<double> p(n);
    std::vector<double> q(n);
    double sp = 0.0;
    double sq = 0.0;
    for (std::size_t i = 0; i < n; ++i) {
      p[i] = u(rng);
      q[i] = u(rng);
      sp += p[i];
      sq += q[i];
    }
    for (std::size_t i = 0; i < n; ++i) {
      p[i] /= sp;
      q[i] /= sq;
    }
    const double d = jsd(p, q);
    REQUIRE(d >= 0.0);
    REQUIRE(d <= 1.0);
    REQUIRE(d == jsd(q, p));
  }
}

TEST_CASE("trip error compares start-end distributions", "[metrics]") {
  const GridSpec grid = unit_grid(2, 2);
  const EvalConfig cfg = config_for(grid);
  const RawDataset data = crafted_dataset(grid);
  CHECK(trip_error(data, data, cfg) == 0.0);

  const RawDataset a{through(grid, {0, 1})};
  const RawDataset b{through(grid, {2, 3})};
  CHECK(trip_error(a, b, cfg) == 1.0);  // disjoint point masses
  CHECK_THROWS_AS(trip_error({}, a, cfg), std::invalid_argument);
}

TEST_CASE("length error buckets the trip lengths", "[metrics]") {
  const GridSpec grid = unit_grid(2, 2);
  const EvalConfig cfg = config_for(grid);
  const RawDataset data = crafted_dataset(grid);
  CHECK(length_error(data, data, cfg) == 0.0);

  // all lengths equal in both datasets: one shared bucket
  const RawDataset same_a{through(grid, {0, 1}), through(grid, {2, 3})};
  const RawDataset same_b{through(grid, {1, 0})};
  CHECK(length_error(same_a, same_b, cfg) == 0.0);

  // short versus long trips in a two-bucket histogram: disjoint buckets
  EvalConfig two = cfg;
  two.length_buckets = 2;
  const RawDataset mixed{through(grid, {0}), through(grid, {0, 1, 3, 2})};
  const RawDataset only_long{through(grid, {0, 1, 3, 2}), through(grid, {1, 3, 2, 0})};
  CHECK(length_error(mixed, only_long, two) > 0.0);
  CHECK_THROWS_AS(length_error(data, {}, cfg), std::invalid_argument);
}

TEST_CASE("self-comparison yields the ideal report", "[metrics]") {
  const GridSpec grid = unit_grid(2, 2);
  EvalConfig cfg = config_for(grid);
  cfg.top_k = 2;
  const RawDataset data = crafted_dataset(grid);
  const MetricsReport report = evaluate(data, data, cfg);
  CHECK(report.location_avre == 0.0);
  CHECK(report.location_kt == 1.0);
  CHECK(report.fp_avre == 0.0);
  CHECK(report.fp_kt == 1.0);
  CHECK(report.trip_error == 0.0);
  CHECK(report.length_error == 0.0);
  CHECK(report.top_k_effective == 2);
  REQUIRE(!report.top_cells.empty());
  for (const auto& c : report.top_cells) {
    CHECK(c.real_proportion == Catch::Approx(c.synthetic_proportion));
  }
}

TEST_CASE("popularity and rank metrics match brute-force recomputation", "[metrics]") {
  std::mt19937_64 rng(171);
  const GridSpec grid = unit_grid(4, 4);
  const EvalConfig cfg = config_for(grid);
  const RawDataset real =
      testutil::centroid_dataset(testutil::random_walk_dataset(grid, 50, 7, rng), grid);
  const RawDataset syn =
      testutil::centroid_dataset(testutil::random_walk_dataset(grid, 50, 7, rng), grid);

  // popularity oracle
  CellPopularity pop(grid.cell_count(), 0);
  for (const RawTrajectory& t : real) {
    std::int64_t last = -1;
    for (const GeoPoint& p : t.points) {
      const std::int64_t c = map_point(p, grid).index();
      if (c != last) pop[static_cast<std::size_t>(c)] += 1;
      last = c;
    }
  }
  REQUIRE(cell_popularity(real, grid) == pop);

  // rank-correlation oracle over every pair
  const CellPopularity syn_pop = cell_popularity(syn, grid);
  long long c = 0;
  long long d = 0;
  for (std::size_t i = 0; i < pop.size(); ++i) {
    for (std::size_t j = i + 1; j < pop.size(); ++j) {
      const double da = static_cast<double>(pop[i] - pop[j]);
      const double db = static_cast<double>(syn_pop[i] - syn_pop[j]);
      if (da * db > 0) ++c;
      if (da * db < 0) ++d;
    }
  }
  const double expected =
      static_cast<double>(c - d) /
      (0.5 * static_cast<double>(pop.size()) * static_cast<double>(pop.size() - 1));
  CHECK(location_kt(real, syn, cfg) == Catch::Approx(expected).margin(1e-15));
}
