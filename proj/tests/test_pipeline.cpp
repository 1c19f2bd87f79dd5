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

#include <filesystem>
#include <fstream>
#include <sstream>

#include "oracles.hpp"
#include "privtraj/pipeline.hpp"

using namespace privtraj;
namespace fs = std::filesystem;

namespace {

fs::path temp_dir(const std::string& name) {
  const fs::path dir = fs::temp_directory_path() / ("privtraj_test_" + name);
  fs::remove_all(dir);
  fs::create_directories(dir);
  return dir;
}

void write_file(const fs::path& path, const std::string& content) {
  std::ofstream os(path);
  os << content;
}

std::string read_file(const fs::path& path) {
  std::ifstream in(path);
  REQUIRE(in.good());
  std::ostringstream ss;
  ss << in.rdbuf();
  return ss.str();
}

}  // namespace

TEST_CASE("canonical loader groups contiguous ids into trajectories", "[pipeline]") {
  const fs::path dir = temp_dir("canonical");
  write_file(dir / "data.csv",
             "# comment line\n"
             "t1,0.5,0.5\n"
             "t1,1.5,0.5\n"
             "t1,1.5,1.5\n"
             "t2,0.5,1.5\n"
             "t2,0.5,0.5\n"
             "t2,1.5,0.5\n");
  const BoundingBox box{{0, 0}, {2, 2}};
  LoadStats stats;
  const RawDataset data =
      load_dataset((dir / "data.csv").string(), DatasetFormat::canonical, box, &stats);
  REQUIRE(data.size() == 2);
  CHECK(data[0].id == "t1");
  CHECK(data[0].points.size() == 3);
  CHECK(data[1].points.size() == 3);
  CHECK(stats.loaded == 2);
  CHECK(stats.rejected_out_of_bbox == 0);
}

TEST_CASE("canonical loader reports the offending line", "[pipeline]") {
  const fs::path dir = temp_dir("badline");
  write_file(dir / "data.csv", "t1,0.5,0.5\nt1,oops,0.5\n");
  const BoundingBox box{{0, 0}, {2, 2}};
  try {
    load_dataset((dir / "data.csv").string(), DatasetFormat::canonical, box);
    FAIL("expected a parse error");
  } catch (const std::runtime_error& e) {
    CHECK(std::string(e.what()).find(":2") != std::string::npos);
  }
}

TEST_CASE("polyline loader parses lon-lat pair arrays", "[pipeline]") {
  const fs::path dir = temp_dir("porto");
  write_file(dir / "data.csv",
             "\"TRIP_ID\",\"CALL_TYPE\",\"POLYLINE\"\n"
             "\"1372636858\",\"C\",\"[[-8.61,41.14],[-8.62,41.15]]\"\n"
             "\"1372637091\",\"B\",\"[]\"\n"
             "\"1372637100\",\"A\",\"not json\"\n");
  const BoundingBox box{{-8.70, 41.10}, {-8.50, 41.25}};
  LoadStats stats;
  const RawDataset data =
      load_dataset((dir / "data.csv").string(), DatasetFormat::porto, box, &stats);
  REQUIRE(data.size() == 1);
  CHECK(data[0].id == "1372636858");
  REQUIRE(data[0].points.size() == 2);
  CHECK(data[0].points[0].lon == Catch::Approx(-8.61));
  CHECK(data[0].points[0].lat == Catch::Approx(41.14));
  CHECK(stats.skipped_malformed == 2);
}

TEST_CASE("out-of-box trajectories are rejected and counted", "[pipeline]") {
  const fs::path dir = temp_dir("oob");
  write_file(dir / "data.csv",
             "in,0.5,0.5\n"
             "out,0.5,0.5\n"
             "out,5.0,0.5\n");
  const BoundingBox box{{0, 0}, {2, 2}};
  LoadStats stats;
  const RawDataset data =
      load_dataset((dir / "data.csv").string(), DatasetFormat::canonical, box, &stats);
  REQUIRE(data.size() == 1);
  CHECK(data[0].id == "in");
  CHECK(stats.rejected_out_of_bbox == 1);

  CHECK_THROWS_AS(load_dataset((dir / "data.csv").string(), DatasetFormat::canonical,
                               box, nullptr, true),
                  std::runtime_error);
}

TEST_CASE("config files parse with defaults and overrides", "[pipeline]") {
  const RunConfig defaults;
  CHECK(defaults.repeats == 5);
  CHECK(defaults.order == 3);
  CHECK(defaults.budget.g == 0.6);
  CHECK(defaults.budget.delta_alloc == 0.8);
  CHECK(defaults.grid_rows == 20);
  CHECK(defaults.grid_cols == 20);

  const fs::path dir = temp_dir("config");
  write_file(dir / "run.cfg",
             "# minimal configuration\n"
             "input = data.csv\n"
             "bbox = -8.665,41.104,-8.528,41.250\n"
             "epsilon = 0.5\n"
             "grid = 6x7\n"
             "m = 2\n"
             "seed = 99\n"
             "zero_noise = true\n");
  const RunConfig cfg = load_run_config((dir / "run.cfg").string());
  CHECK(cfg.input_path == "data.csv");
  CHECK(cfg.bbox_set);
  CHECK(cfg.bbox.min_corner.lon == Catch::Approx(-8.665));
  CHECK(cfg.budget.epsilon == 0.5);
  CHECK(cfg.grid_rows == 6);
  CHECK(cfg.grid_cols == 7);
  CHECK(cfg.order == 2);
  CHECK(cfg.seed == 99);
  CHECK(cfg.seed_set);
  CHECK(cfg.zero_noise);
  CHECK(effective_max_length(cfg) == 42);

  RunConfig bad = cfg;
  CHECK_THROWS_AS(apply_config_entry(bad, "nonsense", "1"), std::invalid_argument);
  CHECK_THROWS_AS(apply_config_entry(bad, "epsilon", "abc"), std::runtime_error);
}

TEST_CASE("zero-noise run over a lossless dataset is ideal", "[pipeline]") {
  const GridSpec grid = testutil::unit_grid(2, 2);
  // centroid-path dataset with distinct popularity and supports; every
  // trajectory has at most m+1 = 4 symbols, so the tree holds all of it
  const fs::path dir = temp_dir("ideal");
  std::ostringstream data;
  const auto point = [&](std::uint32_t cell) {
    const GeoPoint p = anchor_centroid(AnchorId(cell), grid);
    return std::to_string(p.lon) + "," + std::to_string(p.lat);
  };
  data << "a," << point(0) << "\n"
       << "a," << point(1) << "\n"
       << "a," << point(0) << "\n"
       << "b," << point(2) << "\n"
       << "b," << point(0) << "\n"
       << "b," << point(1) << "\n"
       << "c," << point(0) << "\n"
       << "c," << point(2) << "\n"
       << "c," << point(3) << "\n"
       << "d," << point(1) << "\n";
  write_file(dir / "toy.csv", data.str());

  RunConfig cfg;
  cfg.input_path = (dir / "toy.csv").string();
  cfg.bbox = grid.bbox();
  cfg.bbox_set = true;
  cfg.grid_rows = 2;
  cfg.grid_cols = 2;
  cfg.order = 3;
  cfg.max_length = 8;
  cfg.repeats = 1;
  cfg.zero_noise = true;
  cfg.seed = 1;
  cfg.seed_set = true;
  cfg.top_k = 2;
  cfg.output_dir = (dir / "out").string();

  const RunRecord record = run(cfg);
  REQUIRE(record.repeats.size() == 1);
  const MetricsReport& report = record.repeats[0].report;
  CHECK(report.location_avre == 0.0);
  CHECK(report.location_kt == 1.0);
  CHECK(report.fp_avre == 0.0);
  CHECK(report.fp_kt == 1.0);
  CHECK(report.trip_error == 0.0);
  CHECK(report.length_error == 0.0);
  CHECK(record.repeats[0].synthetic_size == 4);

  // the budget ledger accounts for the whole epsilon
  double consumed = record.split.markov_epsilon;
  for (double share : record.level_shares) consumed += share;
  CHECK(consumed == Catch::Approx(cfg.budget.epsilon).margin(1e-12));

  CHECK(fs::exists(fs::path(cfg.output_dir) / "synthetic_r0.csv"));
  CHECK(fs::exists(fs::path(cfg.output_dir) / "report_r0.txt"));
  CHECK(fs::exists(fs::path(cfg.output_dir) / "top_cells_r0.tsv"));
  CHECK(fs::exists(fs::path(cfg.output_dir) / "aggregate.txt"));
  CHECK(fs::exists(fs::path(cfg.output_dir) / "run_log.txt"));
}

TEST_CASE("equal seeds reproduce the output files byte for byte", "[pipeline]") {
  const fs::path dir = temp_dir("repro");
  std::mt19937_64 rng(191);
  const GridSpec grid = testutil::unit_grid(3, 3);
  const RawDataset raw =
      testutil::centroid_dataset(testutil::random_walk_dataset(grid, 30, 6, rng), grid);
  write_canonical(raw, (dir / "data.csv").string());

  RunConfig cfg;
  cfg.input_path = (dir / "data.csv").string();
  cfg.bbox = grid.bbox();
  cfg.bbox_set = true;
  cfg.grid_rows = 3;
  cfg.grid_cols = 3;
  cfg.order = 2;
  cfg.repeats = 2;
  cfg.budget.epsilon = 1.0;
  cfg.seed = 4242;
  cfg.seed_set = true;
  cfg.top_k = 5;

  cfg.output_dir = (dir / "first").string();
  run(cfg);
  cfg.output_dir = (dir / "second").string();
  run(cfg);

  for (const char* name : {"synthetic_r0.csv", "synthetic_r1.csv", "report_r0.txt",
                           "report_r1.txt", "top_cells_r0.tsv", "aggregate.txt"}) {
    CHECK(read_file(dir / "first" / name) == read_file(dir / "second" / name));
  }

  // different repeats draw different noise
  CHECK(read_file(dir / "first" / "synthetic_r0.csv") !=
        read_file(dir / "first" / "synthetic_r1.csv"));
}

TEST_CASE("run validates its configuration up front", "[pipeline]") {
  RunConfig cfg;
  CHECK_THROWS_AS(run(cfg), std::invalid_argument);  // no input
  cfg.input_path = "x.csv";
  CHECK_THROWS_AS(run(cfg), std::invalid_argument);  // no bbox
  cfg.bbox = BoundingBox{{0, 0}, {1, 1}};
  cfg.bbox_set = true;
  cfg.repeats = 0;
  CHECK_THROWS_AS(run(cfg), std::invalid_argument);
  cfg.repeats = 1;
  cfg.budget.g = 1.5;
  CHECK_THROWS_AS(run(cfg), std::invalid_argument);
}

TEST_CASE("calibrated datasets serialize as labeled lines", "[pipeline]") {
  const GridSpec grid = testutil::unit_grid(2, 2);
  const CalibratedDataset data{
      CalibratedTrajectory({AnchorId(0), AnchorId(3), Symbol::stop()}, grid)};
  std::ostringstream os;
  write_calibrated(data, os);
  CHECK(os.str() == "C0 C3 #\n");
}
