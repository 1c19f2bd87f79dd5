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

// Spatial domain, uniform-grid reference system, anchor adjacency, and
// raw-to-calibrated trajectory conversion. Everything here is a pure function
// over immutable values and safe to call from any thread.

#pragma once

#include <algorithm>
#include <cassert>
#include <cmath>
#include <compare>
#include <cstdint>
#include <cstdlib>
#include <stdexcept>
#include <string>
#include <vector>

namespace privtraj {

// Longitude/latitude in degrees.
struct GeoPoint {
  double lon = 0.0;
  double lat = 0.0;
};

inline bool is_finite_lonlat(const GeoPoint& p) {
  return std::isfinite(p.lon) && std::isfinite(p.lat) && p.lon >= -180.0 &&
         p.lon <= 180.0 && p.lat >= -90.0 && p.lat <= 90.0;
}

// Great-circle distance in meters on the mean Earth radius.
inline double haversine_meters(const GeoPoint& a, const GeoPoint& b) {
  constexpr double kEarthRadiusM = 6371000.0;
  constexpr double kDegToRad = 3.14159265358979323846 / 180.0;
  const double lat1 = a.lat * kDegToRad;
  const double lat2 = b.lat * kDegToRad;
  const double half_dlat = 0.5 * (b.lat - a.lat) * kDegToRad;
  const double half_dlon = 0.5 * (b.lon - a.lon) * kDegToRad;
  const double s1 = std::sin(half_dlat);
  const double s2 = std::sin(half_dlon);
  const double h = s1 * s1 + std::cos(lat1) * std::cos(lat2) * s2 * s2;
  return 2.0 * kEarthRadiusM * std::asin(std::min(1.0, std::sqrt(h)));
}

// Axis-aligned spatial domain; closed on all edges for containment tests.
struct BoundingBox {
  GeoPoint min_corner;
  GeoPoint max_corner;

  bool contains(const GeoPoint& p) const {
    return p.lon >= min_corner.lon && p.lon <= max_corner.lon &&
           p.lat >= min_corner.lat && p.lat <= max_corner.lat;
  }
};

inline void validate_bbox(const BoundingBox& box) {
  if (!is_finite_lonlat(box.min_corner) || !is_finite_lonlat(box.max_corner)) {
    throw std::invalid_argument("bounding box corners must be finite lon/lat degrees");
  }
  if (!(box.min_corner.lon < box.max_corner.lon) ||
      !(box.min_corner.lat < box.max_corner.lat)) {
    throw std::invalid_argument("bounding box must have positive lon/lat extent");
  }
}

// Index of a grid cell, row-major with row 0 at the minimum latitude edge.
// The anchor point itself is the cell's centroid.
class AnchorId {
 public:
  constexpr AnchorId() = default;
  constexpr explicit AnchorId(std::uint32_t index) : index_(index) {}

  constexpr std::uint32_t index() const { return index_; }

  friend constexpr auto operator<=>(AnchorId, AnchorId) = default;

 private:
  std::uint32_t index_ = 0;
};

// An anchor or the end-of-trajectory marker. Anchors order by index; the
// stop marker sorts after every anchor.
class Symbol {
 public:
  constexpr Symbol() = default;
  constexpr Symbol(AnchorId a) : value_(a.index()) {}

  static constexpr Symbol stop() { return Symbol(kStopValue); }

  constexpr bool is_stop() const { return value_ == kStopValue; }
  constexpr bool is_anchor() const { return value_ != kStopValue; }
  constexpr AnchorId anchor() const {
    assert(is_anchor());
    return AnchorId(value_);
  }
  constexpr std::uint32_t raw() const { return value_; }

  friend constexpr auto operator<=>(Symbol, Symbol) = default;

 private:
  static constexpr std::uint32_t kStopValue = 0xFFFFFFFFu;

  constexpr explicit Symbol(std::uint32_t v) : value_(v) {}

  std::uint32_t value_ = kStopValue;
};

inline std::string to_label(Symbol s) {
  return s.is_stop() ? std::string("#") : "C" + std::to_string(s.anchor().index());
}

// Uniform u_h x u_w grid over a bounding box. Cells are half-open in lon and
// lat; the maximum edges close so every in-box point maps to exactly one cell.
class GridSpec {
 public:
  GridSpec(std::uint32_t rows, std::uint32_t cols, const BoundingBox& box)
      : rows_(rows), cols_(cols), bbox_(box) {
    validate_bbox(box);
    if (rows == 0 || cols == 0) {
      throw std::invalid_argument("grid needs at least one row and one column");
    }
    if (static_cast<std::uint64_t>(rows) * cols >= 0xFFFFFFFFull) {
      throw std::invalid_argument("grid too large for 32-bit anchor indices");
    }
    cell_width_ = (box.max_corner.lon - box.min_corner.lon) / cols;
    cell_height_ = (box.max_corner.lat - box.min_corner.lat) / rows;
    if (!(cell_width_ > 0.0) || !(cell_height_ > 0.0)) {
      throw std::invalid_argument("grid cells must have positive extent");
    }
  }

  std::uint32_t rows() const { return rows_; }
  std::uint32_t cols() const { return cols_; }
  std::uint32_t cell_count() const { return rows_ * cols_; }
  const BoundingBox& bbox() const { return bbox_; }
  double cell_width() const { return cell_width_; }
  double cell_height() const { return cell_height_; }

  std::uint32_t row_of(AnchorId a) const { return a.index() / cols_; }
  std::uint32_t col_of(AnchorId a) const { return a.index() % cols_; }
  AnchorId anchor_at(std::uint32_t row, std::uint32_t col) const {
    assert(row < rows_ && col < cols_);
    return AnchorId(row * cols_ + col);
  }
  bool valid(AnchorId a) const { return a.index() < cell_count(); }

  // Chebyshev distance 1 on (row, col): the 8-neighborhood relation.
  bool adjacent(AnchorId a, AnchorId b) const {
    const std::int64_t dr = std::abs(static_cast<std::int64_t>(row_of(a)) -
                                     static_cast<std::int64_t>(row_of(b)));
    const std::int64_t dc = std::abs(static_cast<std::int64_t>(col_of(a)) -
                                     static_cast<std::int64_t>(col_of(b)));
    return std::max(dr, dc) == 1;
  }

 private:
  std::uint32_t rows_;
  std::uint32_t cols_;
  BoundingBox bbox_;
  double cell_width_;
  double cell_height_;
};

// Maps an in-domain point to the cell containing it. Points exactly on the
// domain's maximum lon/lat edges belong to the last cell of their row/column.
inline AnchorId map_point(const GeoPoint& p, const GridSpec& grid) {
  const BoundingBox& box = grid.bbox();
  if (!box.contains(p)) {
    throw std::out_of_range("point lies outside the grid domain");
  }
  const auto cell_index = [](double offset, double extent, std::uint32_t n) {
    auto i = static_cast<std::int64_t>(std::floor(offset / extent));
    if (i < 0) i = 0;
    if (i >= static_cast<std::int64_t>(n)) i = static_cast<std::int64_t>(n) - 1;
    return static_cast<std::uint32_t>(i);
  };
  const std::uint32_t col =
      cell_index(p.lon - box.min_corner.lon, grid.cell_width(), grid.cols());
  const std::uint32_t row =
      cell_index(p.lat - box.min_corner.lat, grid.cell_height(), grid.rows());
  return grid.anchor_at(row, col);
}

// Geometric center of the cell.
inline GeoPoint anchor_centroid(AnchorId a, const GridSpec& grid) {
  assert(grid.valid(a));
  const BoundingBox& box = grid.bbox();
  return GeoPoint{box.min_corner.lon + (grid.col_of(a) + 0.5) * grid.cell_width(),
                  box.min_corner.lat + (grid.row_of(a) + 0.5) * grid.cell_height()};
}

// Point inside the cell at fractional offsets u_lon, u_lat in [0, 1).
inline GeoPoint cell_point(AnchorId a, const GridSpec& grid, double u_lon, double u_lat) {
  assert(grid.valid(a));
  const BoundingBox& box = grid.bbox();
  return GeoPoint{box.min_corner.lon + (grid.col_of(a) + u_lon) * grid.cell_width(),
                  box.min_corner.lat + (grid.row_of(a) + u_lat) * grid.cell_height()};
}

// Anchors of the up to 8 surrounding cells that exist on the grid, ascending
// by index. Never contains the cell itself.
inline std::vector<AnchorId> anchor_neighbors(AnchorId a, const GridSpec& grid) {
  assert(grid.valid(a));
  std::vector<AnchorId> out;
  out.reserve(8);
  const auto row = static_cast<std::int64_t>(grid.row_of(a));
  const auto col = static_cast<std::int64_t>(grid.col_of(a));
  for (std::int64_t dr = -1; dr <= 1; ++dr) {
    for (std::int64_t dc = -1; dc <= 1; ++dc) {
      if (dr == 0 && dc == 0) continue;
      const std::int64_t r = row + dr;
      const std::int64_t c = col + dc;
      if (r < 0 || c < 0 || r >= static_cast<std::int64_t>(grid.rows()) ||
          c >= static_cast<std::int64_t>(grid.cols())) {
        continue;
      }
      out.push_back(grid.anchor_at(static_cast<std::uint32_t>(r),
                                   static_cast<std::uint32_t>(c)));
    }
  }
  return out;  // ascending by construction: the scan follows row-major order
}

// The transition alphabet of an anchor: its existing grid neighbors plus the
// stop marker. Interior cells yield 9 symbols, edge cells 6, corner cells 4
// (on grids with at least two rows and columns).
inline std::vector<Symbol> neighbors(AnchorId a, const GridSpec& grid) {
  std::vector<Symbol> out;
  const std::vector<AnchorId> anchors = anchor_neighbors(a, grid);
  out.reserve(anchors.size() + 1);
  for (AnchorId n : anchors) out.emplace_back(n);
  out.push_back(Symbol::stop());
  return out;
}

struct RawTrajectory {
  std::string id;
  std::vector<GeoPoint> points;  // non-empty
};

using RawDataset = std::vector<RawTrajectory>;

// Discretized trajectory: pairwise-distinct, 8-adjacent anchors terminated by
// a single stop marker. Construction validates the invariants.
class CalibratedTrajectory {
 public:
  CalibratedTrajectory(std::vector<Symbol> symbols, const GridSpec& grid)
      : symbols_(std::move(symbols)) {
    if (symbols_.empty() || !symbols_.back().is_stop()) {
      throw std::invalid_argument("calibrated trajectory must end with the stop marker");
    }
    for (std::size_t i = 0; i + 1 < symbols_.size(); ++i) {
      if (!symbols_[i].is_anchor()) {
        throw std::invalid_argument("stop marker may appear only as the last symbol");
      }
      if (!grid.valid(symbols_[i].anchor())) {
        throw std::invalid_argument("anchor index outside the grid");
      }
      if (symbols_[i + 1].is_anchor() &&
          !grid.adjacent(symbols_[i].anchor(), symbols_[i + 1].anchor())) {
        throw std::invalid_argument("consecutive anchors must be distinct and 8-adjacent");
      }
    }
  }

  const std::vector<Symbol>& symbols() const { return symbols_; }
  std::size_t size() const { return symbols_.size(); }  // stop marker included
  std::size_t anchor_count() const { return symbols_.size() - 1; }

  friend auto operator<=>(const CalibratedTrajectory&, const CalibratedTrajectory&) = default;

 private:
  std::vector<Symbol> symbols_;
};

using CalibratedDataset = std::vector<CalibratedTrajectory>;

namespace detail {

// 8-connected digital straight line between two cells, appending every cell
// after `from` up to and including `to`. Each step moves by Chebyshev
// distance exactly 1, so the output joins the endpoints without gaps.
inline void walk_cells(AnchorId from, AnchorId to, const GridSpec& grid,
                       std::vector<Symbol>& out) {
  std::int64_t r = grid.row_of(from);
  std::int64_t c = grid.col_of(from);
  const std::int64_t r1 = grid.row_of(to);
  const std::int64_t c1 = grid.col_of(to);
  const std::int64_t dr = std::abs(r1 - r);
  const std::int64_t dc = std::abs(c1 - c);
  const std::int64_t sr = r < r1 ? 1 : -1;
  const std::int64_t sc = c < c1 ? 1 : -1;
  std::int64_t err = dc - dr;
  while (r != r1 || c != c1) {
    const std::int64_t e2 = 2 * err;
    if (e2 > -dr) {
      err -= dr;
      c += sc;
    }
    if (e2 < dc) {
      err += dc;
      r += sr;
    }
    out.emplace_back(grid.anchor_at(static_cast<std::uint32_t>(r),
                                    static_cast<std::uint32_t>(c)));
  }
}

}  // namespace detail

// Discretizes a raw trajectory: maps every point to its anchor, bridges
// non-adjacent consecutive anchors with a digital straight-line walk on the
// cell grid, collapses consecutive duplicates, and appends the stop marker.
// Deterministic; throws std::out_of_range if any point leaves the domain.
inline CalibratedTrajectory calibrate(const RawTrajectory& t, const GridSpec& grid) {
  if (t.points.empty()) {
    throw std::invalid_argument("raw trajectory has no points");
  }
  std::vector<Symbol> out;
  out.reserve(t.points.size() + 1);
  for (const GeoPoint& p : t.points) {
    const AnchorId a = map_point(p, grid);
    if (out.empty()) {
      out.emplace_back(a);
      continue;
    }
    const AnchorId prev = out.back().anchor();
    if (a == prev) continue;
    if (grid.adjacent(prev, a)) {
      out.emplace_back(a);
    } else {
      detail::walk_cells(prev, a, grid, out);
    }
  }
  out.push_back(Symbol::stop());
  return CalibratedTrajectory(std::move(out), grid);
}

}  // namespace privtraj
