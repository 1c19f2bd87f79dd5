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

// Dataset ingestion and the file formats the pipeline reads and writes.
//
// Canonical trajectory file: plain text, one `traj_id,lon,lat` line per
// point, points of a trajectory contiguous and in order. Polyline format:
// CSV rows whose POLYLINE column holds a JSON array of [lon, lat] pairs.

#pragma once

#include <algorithm>
#include <cctype>
#include <charconv>
#include <cstdio>
#include <fstream>
#include <istream>
#include <ostream>
#include <stdexcept>
#include <string>
#include <string_view>
#include <vector>

#include "json.hpp"
#include "privtraj/geo.hpp"
#include "privtraj/metrics.hpp"

namespace privtraj {

enum class DatasetFormat { canonical, porto };

inline DatasetFormat parse_format(std::string_view s) {
  if (s == "canonical") return DatasetFormat::canonical;
  if (s == "porto") return DatasetFormat::porto;
  throw std::invalid_argument("unknown dataset format: " + std::string(s) +
                              " (expected canonical or porto)");
}

inline std::string_view to_string(DatasetFormat f) {
  return f == DatasetFormat::canonical ? "canonical" : "porto";
}

struct LoadStats {
  std::size_t loaded = 0;
  std::size_t rejected_out_of_bbox = 0;
  std::size_t skipped_malformed = 0;
};

namespace detail {

inline std::string_view trim(std::string_view s) {
  while (!s.empty() && (s.back() == '\r' || s.back() == ' ' || s.back() == '\t')) {
    s.remove_suffix(1);
  }
  while (!s.empty() && (s.front() == ' ' || s.front() == '\t')) {
    s.remove_prefix(1);
  }
  return s;
}

inline double parse_double(std::string_view s, const std::string& where) {
  s = trim(s);
  double value = 0.0;
  const auto [ptr, ec] = std::from_chars(s.data(), s.data() + s.size(), value);
  if (ec != std::errc{} || ptr != s.data() + s.size()) {
    throw std::runtime_error(where + ": expected a number, got '" + std::string(s) + "'");
  }
  return value;
}

// Quote-aware CSV split; doubled quotes inside a quoted field unescape.
inline std::vector<std::string> split_csv(const std::string& line) {
  std::vector<std::string> fields;
  std::string cur;
  bool quoted = false;
  for (std::size_t i = 0; i < line.size(); ++i) {
    const char c = line[i];
    if (quoted) {
      if (c == '"') {
        if (i + 1 < line.size() && line[i + 1] == '"') {
          cur.push_back('"');
          ++i;
        } else {
          quoted = false;
        }
      } else {
        cur.push_back(c);
      }
    } else if (c == '"') {
      quoted = true;
    } else if (c == ',') {
      fields.push_back(std::move(cur));
      cur.clear();
    } else if (c != '\r') {
      cur.push_back(c);
    }
  }
  fields.push_back(std::move(cur));
  return fields;
}

inline RawDataset parse_canonical(std::istream& in, const std::string& name) {
  RawDataset out;
  std::string line;
  std::size_t line_no = 0;
  while (std::getline(in, line)) {
    ++line_no;
    const std::string_view trimmed = trim(line);
    if (trimmed.empty() || trimmed.front() == '#') continue;
    const std::string where = name + ":" + std::to_string(line_no);
    const std::size_t first = trimmed.find(',');
    const std::size_t second = first == std::string_view::npos
                                   ? std::string_view::npos
                                   : trimmed.find(',', first + 1);
    if (second == std::string_view::npos) {
      throw std::runtime_error(where + ": expected traj_id,lon,lat");
    }
    const std::string id(trim(trimmed.substr(0, first)));
    if (id.empty()) {
      throw std::runtime_error(where + ": empty trajectory id");
    }
    GeoPoint p;
    p.lon = parse_double(trimmed.substr(first + 1, second - first - 1), where);
    p.lat = parse_double(trimmed.substr(second + 1), where);
    if (out.empty() || out.back().id != id) {
      out.push_back(RawTrajectory{id, {}});
    }
    out.back().points.push_back(p);
  }
  return out;
}

inline RawDataset parse_porto(std::istream& in, const std::string& name,
                              LoadStats& stats) {
  RawDataset out;
  std::string line;
  std::size_t line_no = 0;
  std::size_t id_column = 0;
  std::size_t polyline_column = std::string::npos;

  while (std::getline(in, line)) {
    ++line_no;
    if (trim(line).empty()) continue;
    const std::vector<std::string> fields = split_csv(line);
    if (line_no == 1) {
      // Header row, when present, names the columns; otherwise assume the
      // polyline sits last and the id first.
      bool header = false;
      for (std::size_t i = 0; i < fields.size(); ++i) {
        std::string upper = fields[i];
        std::transform(upper.begin(), upper.end(), upper.begin(),
                       [](unsigned char c) { return std::toupper(c); });
        if (upper == "POLYLINE") {
          polyline_column = i;
          header = true;
        } else if (upper == "TRIP_ID") {
          id_column = i;
        }
      }
      if (header) continue;
      polyline_column = fields.size() - 1;
    }
    if (polyline_column == std::string::npos) polyline_column = fields.size() - 1;
    if (polyline_column >= fields.size()) {
      ++stats.skipped_malformed;
      continue;
    }
    const nlohmann::json polyline =
        nlohmann::json::parse(fields[polyline_column], nullptr, false);
    if (polyline.is_discarded() || !polyline.is_array() || polyline.empty()) {
      ++stats.skipped_malformed;
      continue;
    }
    RawTrajectory t;
    t.id = id_column < fields.size() && !fields[id_column].empty()
               ? fields[id_column]
               : "row" + std::to_string(line_no);
    bool ok = true;
    for (const auto& pair : polyline) {
      if (!pair.is_array() || pair.size() < 2 || !pair[0].is_number() ||
          !pair[1].is_number()) {
        ok = false;
        break;
      }
      t.points.push_back(GeoPoint{pair[0].get<double>(), pair[1].get<double>()});
    }
    if (!ok) {
      ++stats.skipped_malformed;
      continue;
    }
    out.push_back(std::move(t));
  }
  (void)name;
  return out;
}

inline std::string format_double(double v, int precision = 10) {
  char buf[64];
  std::snprintf(buf, sizeof(buf), "%.*g", precision, v);
  return buf;
}

inline std::ofstream open_output(const std::string& path) {
  std::ofstream os(path);
  if (!os) {
    throw std::runtime_error("cannot open " + path + " for writing");
  }
  return os;
}

}  // namespace detail

// Loads a trajectory file and keeps only trajectories entirely inside the
// bounding box. Rejected and malformed counts land in `stats`; with
// `abort_on_out_of_bbox` the first straying trajectory raises instead.
inline RawDataset load_dataset(const std::string& path, DatasetFormat format,
                               const BoundingBox& bbox, LoadStats* stats = nullptr,
                               bool abort_on_out_of_bbox = false) {
  validate_bbox(bbox);
  std::ifstream in(path);
  if (!in) {
    throw std::runtime_error("cannot open " + path);
  }
  LoadStats local;
  RawDataset parsed = format == DatasetFormat::canonical
                          ? detail::parse_canonical(in, path)
                          : detail::parse_porto(in, path, local);
  RawDataset kept;
  kept.reserve(parsed.size());
  for (RawTrajectory& t : parsed) {
    const bool inside = std::all_of(t.points.begin(), t.points.end(),
                                    [&](const GeoPoint& p) { return bbox.contains(p); });
    if (inside && !t.points.empty()) {
      kept.push_back(std::move(t));
    } else if (abort_on_out_of_bbox) {
      throw std::runtime_error(path + ": trajectory " + t.id +
                               " leaves the bounding box");
    } else {
      ++local.rejected_out_of_bbox;
    }
  }
  if (kept.empty()) {
    throw std::runtime_error(path + ": no usable trajectories inside the bounding box");
  }
  local.loaded = kept.size();
  if (stats) *stats = local;
  return kept;
}

inline void write_canonical(const RawDataset& data, std::ostream& os) {
  for (const RawTrajectory& t : data) {
    for (const GeoPoint& p : t.points) {
      os << t.id << ',' << detail::format_double(p.lon) << ','
         << detail::format_double(p.lat) << '\n';
    }
  }
}

inline void write_canonical(const RawDataset& data, const std::string& path) {
  auto os = detail::open_output(path);
  write_canonical(data, os);
}

// One line per trajectory: space-separated symbol labels, stop marker last.
inline void write_calibrated(const CalibratedDataset& data, std::ostream& os) {
  for (const CalibratedTrajectory& t : data) {
    bool first = true;
    for (Symbol s : t.symbols()) {
      if (!first) os << ' ';
      os << to_label(s);
      first = false;
    }
    os << '\n';
  }
}

inline void write_calibrated(const CalibratedDataset& data, const std::string& path) {
  auto os = detail::open_output(path);
  write_calibrated(data, os);
}

inline void write_report(const MetricsReport& report, std::ostream& os) {
  os << "location_avre = " << detail::format_double(report.location_avre, 12) << '\n'
     << "location_kt = " << detail::format_double(report.location_kt, 12) << '\n'
     << "fp_avre = " << detail::format_double(report.fp_avre, 12) << '\n'
     << "fp_kt = " << detail::format_double(report.fp_kt, 12) << '\n'
     << "trip_error = " << detail::format_double(report.trip_error, 12) << '\n'
     << "length_error = " << detail::format_double(report.length_error, 12) << '\n'
     << "top_k_effective = " << report.top_k_effective << '\n';
}

inline void write_report(const MetricsReport& report, const std::string& path) {
  auto os = detail::open_output(path);
  write_report(report, os);
}

// Two-column proportion table for the real dataset's top-n cells, ready for
// plotting.
inline void write_top_cells(const MetricsReport& report, std::ostream& os) {
  os << "# cell\treal_proportion\tsynthetic_proportion\n";
  for (const MetricsReport::TopCell& c : report.top_cells) {
    os << c.cell << '\t' << detail::format_double(c.real_proportion, 12) << '\t'
       << detail::format_double(c.synthetic_proportion, 12) << '\n';
  }
}

inline void write_top_cells(const MetricsReport& report, const std::string& path) {
  auto os = detail::open_output(path);
  write_top_cells(report, os);
}

}  // namespace privtraj
