// Copyright 2026 The ppgpr Authors.
//
// Licensed under the Apache License, Version 2.0 (the "License");
// you may not use this file except in compliance with the License.
// You may obtain a copy of the License at
//
//   http://www.apache.org/licenses/LICENSE-2.0
//
// Unless required by applicable law or agreed to in writing, software
// distributed under the License is distributed on an "AS IS" BASIS,
// WITHOUT WARRANTIES OR CONDITIONS OF ANY KIND, either express or implied.
// See the License for the specific language governing permissions and
// limitations under the License.

// CSV ingestion, feature normalization and scenario-aware input sharing.

#pragma once

#include <Eigen/Dense>

#include <algorithm>
#include <array>
#include <cctype>
#include <charconv>
#include <cmath>
#include <fstream>
#include <sstream>
#include <string>
#include <utility>
#include <vector>

#include "ppgpr/errors.hpp"
#include "ppgpr/random.hpp"
#include "ppgpr/ring.hpp"
#include "ppgpr/sharing.hpp"

namespace ppgpr {

enum class Normalization { kNone, kZScore, kL2 };

inline Normalization parse_normalization(const std::string& s) {
  if (s == "none" || s == "off") return Normalization::kNone;
  if (s == "zscore" || s == "on") return Normalization::kZScore;
  if (s == "l2") return Normalization::kL2;
  throw ConfigError("unknown normalization '" + s + "' (expected none, zscore or l2)");
}

struct CsvSchema {
  bool header = true;
  int output_column = -1;  // negative counts from the end
  char delimiter = ',';
  Normalization normalization = Normalization::kZScore;
};

struct Dataset {
  Eigen::MatrixXd X;
  Eigen::VectorXd y;
  std::vector<std::string> feature_names;
  std::string output_name;
  // Per-feature offset and divisor applied by normalization (public).
  std::vector<double> offset, divisor;

  std::size_t n() const { return static_cast<std::size_t>(X.rows()); }
  std::size_t d() const { return static_cast<std::size_t>(X.cols()); }
};

namespace detail {

inline std::string trim(std::string s) {
  auto ws = [](unsigned char c) { return std::isspace(c) != 0; };
  s.erase(s.begin(), std::find_if_not(s.begin(), s.end(), ws));
  s.erase(std::find_if_not(s.rbegin(), s.rend(), ws).base(), s.end());
  return s;
}

inline std::vector<std::string> split(const std::string& line, char delim) {
  std::vector<std::string> out;
  std::string cell;
  std::istringstream ss(line);
  while (std::getline(ss, cell, delim)) out.push_back(trim(cell));
  if (!line.empty() && line.back() == delim) out.emplace_back();
  return out;
}

}  // namespace detail

// Centers and scales each feature column. z-score divides by the standard
// deviation; l2 divides by the Euclidean norm of the centered column.
inline void normalize_features(Dataset& ds, Normalization how) {
  const auto d = ds.X.cols();
  const auto n = static_cast<double>(ds.X.rows());
  ds.offset.assign(static_cast<std::size_t>(d), 0.0);
  ds.divisor.assign(static_cast<std::size_t>(d), 1.0);
  if (how == Normalization::kNone) return;
  for (Eigen::Index j = 0; j < d; ++j) {
    const double mean = ds.X.col(j).mean();
    const double ss = (ds.X.col(j).array() - mean).square().sum();
    const double div = how == Normalization::kZScore ? std::sqrt(ss / n) : std::sqrt(ss);
    if (!(div > 0)) {
      const std::string name = static_cast<std::size_t>(j) < ds.feature_names.size()
                                   ? ds.feature_names[static_cast<std::size_t>(j)]
                                   : "#" + std::to_string(j);
      throw IngestError("feature column '" + name + "' has zero variance");
    }
    ds.X.col(j) = (ds.X.col(j).array() - mean) / div;
    ds.offset[static_cast<std::size_t>(j)] = mean;
    ds.divisor[static_cast<std::size_t>(j)] = div;
  }
}

inline Dataset parse_csv(std::istream& in, const CsvSchema& schema) {
  std::vector<std::vector<double>> rows;
  std::vector<std::string> names;
  std::string line;
  std::size_t lineno = 0, width = 0;
  while (std::getline(in, line)) {
    ++lineno;
    if (!line.empty() && line.back() == '\r') line.pop_back();
    if (detail::trim(line).empty()) continue;
    auto cells = detail::split(line, schema.delimiter);
    if (schema.header && names.empty() && rows.empty()) {
      names = cells;
      width = cells.size();
      continue;
    }
    if (width == 0) width = cells.size();
    if (cells.size() != width) {
      throw IngestError("row " + std::to_string(lineno) + ": expected " + std::to_string(width) +
                        " columns, found " + std::to_string(cells.size()));
    }
    std::vector<double> vals(width);
    for (std::size_t c = 0; c < width; ++c) {
      const std::string& s = cells[c];
      double v = 0;
      auto [ptr, ec] = std::from_chars(s.data(), s.data() + s.size(), v);
      if (s.empty() || ec != std::errc() || ptr != s.data() + s.size() || !std::isfinite(v)) {
        throw IngestError("row " + std::to_string(lineno) + ", column " + std::to_string(c + 1) +
                          ": non-numeric cell '" + s + "'");
      }
      vals[c] = v;
    }
    rows.push_back(std::move(vals));
  }
  if (rows.empty()) throw IngestError("no data rows");
  if (width < 2) throw IngestError("need at least one feature column and one output column");

  const int oc = schema.output_column < 0 ? static_cast<int>(width) + schema.output_column
                                          : schema.output_column;
  if (oc < 0 || oc >= static_cast<int>(width)) throw IngestError("output column out of range");

  Dataset ds;
  ds.X.resize(static_cast<Eigen::Index>(rows.size()), static_cast<Eigen::Index>(width - 1));
  ds.y.resize(static_cast<Eigen::Index>(rows.size()));
  for (std::size_t r = 0; r < rows.size(); ++r) {
    Eigen::Index k = 0;
    for (std::size_t c = 0; c < width; ++c) {
      if (static_cast<int>(c) == oc) {
        ds.y(static_cast<Eigen::Index>(r)) = rows[r][c];
      } else {
        ds.X(static_cast<Eigen::Index>(r), k++) = rows[r][c];
      }
    }
  }
  for (std::size_t c = 0; c < width; ++c) {
    const std::string name = names.empty() ? "col" + std::to_string(c + 1) : names[c];
    if (static_cast<int>(c) == oc) {
      ds.output_name = name;
    } else {
      ds.feature_names.push_back(name);
    }
  }
  normalize_features(ds, schema.normalization);
  return ds;
}

inline Dataset ingest_csv(const std::string& path, const CsvSchema& schema) {
  std::ifstream in(path);
  if (!in) throw IngestError("cannot open " + path);
  return parse_csv(in, schema);
}

// ---- scenarios -------------------------------------------------------------

enum class Scenario { kHDS, kVDS, kPDS };

inline Scenario parse_scenario(const std::string& s) {
  if (s == "hds") return Scenario::kHDS;
  if (s == "vds") return Scenario::kVDS;
  if (s == "pds") return Scenario::kPDS;
  throw ConfigError("unknown scenario '" + s + "' (expected hds, vds or pds)");
}

inline const char* scenario_name(Scenario s) {
  switch (s) {
    case Scenario::kHDS: return "hds";
    case Scenario::kVDS: return "vds";
    case Scenario::kPDS: return "pds";
  }
  return "?";
}

// Half-open index ranges, one per data owner. HDS ranges are training rows,
// VDS ranges are feature columns; PDS ignores them (one model owner, one
// model user).
struct Partition {
  std::vector<std::pair<std::size_t, std::size_t>> ranges;
};

inline Partition even_partition(std::size_t total, std::size_t owners) {
  if (owners == 0 || owners > total) throw ConfigError("invalid owner count");
  Partition p;
  for (std::size_t i = 0; i < owners; ++i) p.ranges.push_back({total * i / owners, total * (i + 1) / owners});
  return p;
}

inline void validate_partition(const Partition& p, std::size_t total, const char* what) {
  std::vector<int> cover(total, 0);
  for (auto [a, b] : p.ranges) {
    if (a >= b || b > total) {
      throw ConfigError(std::string(what) + " partition has an empty or out-of-range block");
    }
    for (std::size_t i = a; i < b; ++i) ++cover[i];
  }
  for (std::size_t i = 0; i < total; ++i) {
    if (cover[i] > 1) throw ConfigError(std::string(what) + " partition overlaps at index " + std::to_string(i));
    if (cover[i] == 0) throw ConfigError(std::string(what) + " partition misses index " + std::to_string(i));
  }
}

struct ShareBundle {
  SharedMatrix X, y, Xs;
};

// Identifiers used to derive the per-element masks.
inline constexpr std::uint32_t kMatrixIdX = 1, kMatrixIdY = 2, kMatrixIdXs = 3;

struct ScenarioShares {
  std::array<ShareBundle, 2> party;
  // Number of elements each owner shared (owner order as in the partition;
  // the test-input owner last).
  std::vector<std::size_t> shared_by_owner;
};

// Every owner shares each of its elements with the per-element mask
// prf(matrix, row, col): S0 receives the mask, S1 receives x - mask. The
// mask depends only on the element position, so any partition of the same
// data yields the same shares.
inline ScenarioShares split_scenario(const FixedPointCodec& codec, const Eigen::MatrixXd& X,
                                     const Eigen::VectorXd& y, const Eigen::MatrixXd& Xs,
                                     Scenario scenario, const Partition& owners,
                                     std::uint64_t seed) {
  if (X.rows() != y.size()) throw std::invalid_argument("split_scenario: |X| != |y|");
  if (Xs.rows() > 0 && Xs.cols() != X.cols()) {
    throw std::invalid_argument("split_scenario: test inputs have the wrong dimension");
  }
  const auto& R = codec.params();
  const ElementPrf prf(seed);
  const std::size_t n = static_cast<std::size_t>(X.rows()), d = static_cast<std::size_t>(X.cols()),
                    m = static_cast<std::size_t>(Xs.rows());

  ScenarioShares out;
  for (int j = 0; j < 2; ++j) {
    out.party[j].X = SharedMatrix(j, n, d);
    out.party[j].y = SharedMatrix(j, n, 1);
    out.party[j].Xs = SharedMatrix(j, m, d);
  }
  std::vector<int> seen_x(n * d, 0), seen_y(n, 0), seen_s(m * d, 0);

  auto put = [&](std::uint32_t id, SharedMatrix ShareBundle::*field, std::vector<int>& seen,
                 std::size_t r, std::size_t c, double v) {
    const Word e = codec.encode(v);
    const Word mask = R.wrap(prf(id, r, static_cast<std::uint32_t>(c)));
    (out.party[0].*field)(r, c) = mask;
    (out.party[1].*field)(r, c) = ring_sub(R, e, mask);
    ++seen[r * (out.party[0].*field).cols + c];
  };
  auto share_x_rows = [&](std::size_t r0, std::size_t r1, std::size_t c0, std::size_t c1) {
    std::size_t count = 0;
    for (std::size_t r = r0; r < r1; ++r)
      for (std::size_t c = c0; c < c1; ++c, ++count)
        put(kMatrixIdX, &ShareBundle::X, seen_x, r, c, X(static_cast<Eigen::Index>(r), static_cast<Eigen::Index>(c)));
    return count;
  };
  auto share_y = [&](std::size_t r0, std::size_t r1) {
    for (std::size_t r = r0; r < r1; ++r)
      put(kMatrixIdY, &ShareBundle::y, seen_y, r, 0, y(static_cast<Eigen::Index>(r)));
    return r1 - r0;
  };
  auto share_xs = [&](std::size_t c0, std::size_t c1) {
    std::size_t count = 0;
    for (std::size_t r = 0; r < m; ++r)
      for (std::size_t c = c0; c < c1; ++c, ++count)
        put(kMatrixIdXs, &ShareBundle::Xs, seen_s, r, c, Xs(static_cast<Eigen::Index>(r), static_cast<Eigen::Index>(c)));
    return count;
  };

  switch (scenario) {
    case Scenario::kHDS: {
      validate_partition(owners, n, "row");
      for (auto [a, b] : owners.ranges) out.shared_by_owner.push_back(share_x_rows(a, b, 0, d) + share_y(a, b));
      out.shared_by_owner.push_back(share_xs(0, d));
      break;
    }
    case Scenario::kVDS: {
      validate_partition(owners, d, "column");
      for (std::size_t k = 0; k < owners.ranges.size(); ++k) {
        auto [a, b] = owners.ranges[k];
        std::size_t count = share_x_rows(0, n, a, b) + share_xs(a, b);
        if (k == 0) count += share_y(0, n);  // the first owner also holds the outputs
        out.shared_by_owner.push_back(count);
      }
      break;
    }
    case Scenario::kPDS: {
      out.shared_by_owner.push_back(share_x_rows(0, n, 0, d) + share_y(0, n));
      out.shared_by_owner.push_back(share_xs(0, d));
      break;
    }
  }
  for (auto* s : {&seen_x, &seen_y, &seen_s})
    for (int c : *s)
      if (c != 1) throw std::logic_error("split_scenario: an element was not shared exactly once");
  return out;
}

}  // namespace ppgpr
