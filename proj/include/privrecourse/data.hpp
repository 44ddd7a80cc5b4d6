// Copyright 2026 The PrivRecourse Authors
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
#pragma once

#include <algorithm>
#include <cmath>
#include <cstdint>
#include <fstream>
#include <map>
#include <sstream>
#include <string>
#include <vector>

#include <nlohmann/json.hpp>

#include "privrecourse/error.hpp"
#include "privrecourse/points.hpp"
#include "privrecourse/random.hpp"

namespace privrecourse {

enum class FeatureKind { kContinuous, kCategorical };

// Actionability constraint on a feature, read in the direction of a step.
enum class Constraint { kNone, kNonDecreasing, kNonIncreasing, kImmutable };

NLOHMANN_JSON_SERIALIZE_ENUM(FeatureKind, {
                                              {FeatureKind::kContinuous, "continuous"},
                                              {FeatureKind::kCategorical, "categorical"},
                                          })
NLOHMANN_JSON_SERIALIZE_ENUM(Constraint, {
                                             {Constraint::kNone, "none"},
                                             {Constraint::kNonDecreasing, "non_decreasing"},
                                             {Constraint::kNonIncreasing, "non_increasing"},
                                             {Constraint::kImmutable, "immutable"},
                                         })

struct FeatureSpec {
  std::string name;
  FeatureKind kind = FeatureKind::kContinuous;
  double min = 0.0;
  double max = 1.0;
  std::vector<std::string> categories;
  Constraint constraint = Constraint::kNone;
  // Rendering hint only: inverse_transform rounds integral features.
  bool integral = false;

  std::size_t encoded_width() const {
    return kind == FeatureKind::kContinuous ? 1 : categories.size();
  }
};

// Column range of one logical feature in the encoded space.
struct FeatureBlock {
  std::size_t offset = 0;
  std::size_t width = 0;
};

struct FeatureSchema {
  std::vector<FeatureSpec> features;
  std::string label_column = "label";
  std::string favorable_label = "1";

  // Throws on any violated FeatureSpec invariant.
  void Validate() const {
    if (features.empty()) Fail(ErrorCode::kSchemaMismatch, "schema has no features");
    for (const auto& f : features) {
      if (f.kind == FeatureKind::kContinuous) {
        if (!(f.min < f.max)) {
          Fail(ErrorCode::kDegenerateBounds,
               "feature '" + f.name + "' needs min < max");
        }
      } else {
        if (f.categories.size() < 2) {
          Fail(ErrorCode::kSchemaMismatch,
               "categorical feature '" + f.name + "' needs >= 2 categories");
        }
        if (f.constraint == Constraint::kNonDecreasing ||
            f.constraint == Constraint::kNonIncreasing) {
          Fail(ErrorCode::kSchemaMismatch, "monotone constraint on categorical '" +
                                               f.name + "'");
        }
      }
    }
  }

  std::size_t encoded_width() const {
    std::size_t w = 0;
    for (const auto& f : features) w += f.encoded_width();
    return w;
  }

  std::size_t continuous_count() const {
    return static_cast<std::size_t>(
        std::count_if(features.begin(), features.end(), [](const FeatureSpec& f) {
          return f.kind == FeatureKind::kContinuous;
        }));
  }

  std::vector<FeatureBlock> Blocks() const {
    std::vector<FeatureBlock> blocks;
    std::size_t offset = 0;
    for (const auto& f : features) {
      blocks.push_back({offset, f.encoded_width()});
      offset += f.encoded_width();
    }
    return blocks;
  }

  std::ptrdiff_t IndexOf(const std::string& name) const {
    for (std::size_t i = 0; i < features.size(); ++i) {
      if (features[i].name == name) return static_cast<std::ptrdiff_t>(i);
    }
    return -1;
  }

  // Column names of the encoded space; categorical blocks expand to
  // "name=category".
  std::vector<std::string> EncodedColumnNames() const {
    std::vector<std::string> names;
    for (const auto& f : features) {
      if (f.kind == FeatureKind::kContinuous) {
        names.push_back(f.name);
      } else {
        for (const auto& c : f.categories) names.push_back(f.name + "=" + c);
      }
    }
    return names;
  }

  // Stable 64-bit FNV-1a over the canonical JSON dump; models and graphs
  // record it so mismatched artifacts are detected on load.
  std::string Fingerprint() const;
};

inline void to_json(nlohmann::json& j, const FeatureSpec& f) {
  j = nlohmann::json{{"name", f.name}, {"kind", f.kind}, {"constraint", f.constraint}};
  if (f.kind == FeatureKind::kContinuous) {
    j["min"] = f.min;
    j["max"] = f.max;
    j["integral"] = f.integral;
  } else {
    j["categories"] = f.categories;
  }
}

inline void from_json(const nlohmann::json& j, FeatureSpec& f) {
  j.at("name").get_to(f.name);
  f.kind = j.value("kind", FeatureKind::kContinuous);
  f.constraint = j.value("constraint", Constraint::kNone);
  if (f.kind == FeatureKind::kContinuous) {
    j.at("min").get_to(f.min);
    j.at("max").get_to(f.max);
    f.integral = j.value("integral", false);
  } else {
    j.at("categories").get_to(f.categories);
  }
}

inline void to_json(nlohmann::json& j, const FeatureSchema& s) {
  j = nlohmann::json{{"features", s.features},
                     {"label_column", s.label_column},
                     {"favorable_label", s.favorable_label}};
}

inline void from_json(const nlohmann::json& j, FeatureSchema& s) {
  j.at("features").get_to(s.features);
  s.label_column = j.value("label_column", std::string("label"));
  s.favorable_label = j.value("favorable_label", std::string("1"));
  s.Validate();
}

inline std::string FeatureSchema::Fingerprint() const {
  const std::string canonical = nlohmann::json(*this).dump();
  std::uint64_t h = 0xcbf29ce484222325ULL;
  for (unsigned char c : canonical) {
    h ^= c;
    h *= 0x100000001b3ULL;
  }
  std::ostringstream os;
  os << std::hex << h;
  return os.str();
}

// Labels are binary: 1 is the favorable outcome, 0 everything else.
using Label = int;
inline constexpr Label kFavorable = 1;
inline constexpr Label kUnfavorable = 0;

// Records in raw units, one value per logical feature; categorical values
// are stored as their category index.
struct RawDataset {
  FeatureSchema schema;
  std::vector<Record> rows;
  std::vector<Label> labels;

  std::size_t size() const { return rows.size(); }
};

// Records in the encoded space: continuous coordinates in [0,1], one-hot
// blocks for categorical features.
struct Dataset {
  FeatureSchema schema;
  PointSet rows;
  std::vector<Label> labels;

  std::size_t size() const { return labels.size(); }
  std::size_t width() const { return rows.width(); }

  Dataset Subset(const std::vector<std::size_t>& indices) const {
    Dataset out{schema, PointSet(rows.width()), {}};
    for (auto i : indices) {
      out.rows.Append(rows.row(i));
      out.labels.push_back(labels[i]);
    }
    return out;
  }
};

namespace detail {

inline std::string Trim(const std::string& s) {
  const auto b = s.find_first_not_of(" \t\r\n");
  if (b == std::string::npos) return "";
  const auto e = s.find_last_not_of(" \t\r\n");
  return s.substr(b, e - b + 1);
}

inline std::vector<std::string> SplitCsvLine(const std::string& line) {
  std::vector<std::string> cells;
  std::string cell;
  bool quoted = false;
  for (std::size_t i = 0; i < line.size(); ++i) {
    const char c = line[i];
    if (quoted) {
      if (c == '"' && i + 1 < line.size() && line[i + 1] == '"') {
        cell.push_back('"');
        ++i;
      } else if (c == '"') {
        quoted = false;
      } else {
        cell.push_back(c);
      }
    } else if (c == '"') {
      quoted = true;
    } else if (c == ',') {
      cells.push_back(Trim(cell));
      cell.clear();
    } else {
      cell.push_back(c);
    }
  }
  cells.push_back(Trim(cell));
  return cells;
}

}  // namespace detail

// Parses CSV text with a header row into raw records in schema order.
inline RawDataset ParseCsv(std::istream& in, const FeatureSchema& schema) {
  schema.Validate();
  std::string line;
  if (!std::getline(in, line)) Fail(ErrorCode::kSchemaMismatch, "empty CSV");
  const auto header = detail::SplitCsvLine(line);
  auto column_of = [&](const std::string& name) -> std::size_t {
    const auto it = std::find(header.begin(), header.end(), name);
    if (it == header.end()) Fail(ErrorCode::kSchemaMismatch, "missing column '" + name + "'");
    return static_cast<std::size_t>(it - header.begin());
  };
  std::vector<std::size_t> columns;
  for (const auto& f : schema.features) columns.push_back(column_of(f.name));
  const std::size_t label_col = column_of(schema.label_column);

  RawDataset out{schema, {}, {}};
  std::size_t row_index = 0;
  while (std::getline(in, line)) {
    if (detail::Trim(line).empty()) continue;
    const auto cells = detail::SplitCsvLine(line);
    if (cells.size() != header.size()) {
      Fail(ErrorCode::kParseError, "row " + std::to_string(row_index) + " has " +
                                       std::to_string(cells.size()) + " cells, expected " +
                                       std::to_string(header.size()));
    }
    Record r(schema.features.size());
    for (std::size_t k = 0; k < schema.features.size(); ++k) {
      const auto& f = schema.features[k];
      const std::string& cell = cells[columns[k]];
      if (f.kind == FeatureKind::kContinuous) {
        std::size_t used = 0;
        double v = 0.0;
        try {
          v = std::stod(cell, &used);
        } catch (const std::exception&) {
          used = 0;
        }
        if (used == 0 || used != cell.size() || !std::isfinite(v)) {
          Fail(ErrorCode::kParseError, "row " + std::to_string(row_index) + ", column '" +
                                           f.name + "': cannot parse '" + cell + "'");
        }
        r[k] = v;
      } else {
        const auto it = std::find(f.categories.begin(), f.categories.end(), cell);
        if (it == f.categories.end()) {
          Fail(ErrorCode::kUnknownCategory, "row " + std::to_string(row_index) + ", column '" +
                                                f.name + "': '" + cell + "'");
        }
        r[k] = static_cast<double>(it - f.categories.begin());
      }
    }
    out.rows.push_back(std::move(r));
    out.labels.push_back(cells[label_col] == schema.favorable_label ? kFavorable
                                                                    : kUnfavorable);
    ++row_index;
  }
  return out;
}

inline RawDataset LoadCsv(const std::string& path, const FeatureSchema& schema) {
  std::ifstream in(path);
  if (!in) Fail(ErrorCode::kIoError, "cannot open '" + path + "'");
  return ParseCsv(in, schema);
}

// Encodes one raw record. Uses only the schema bounds, never statistics of
// other records, so encoding spends no privacy budget.
inline Record PreprocessRecord(const FeatureSchema& schema, RecordView raw) {
  if (raw.size() != schema.features.size()) {
    Fail(ErrorCode::kDimensionError, "raw record has " + std::to_string(raw.size()) +
                                         " values, schema has " +
                                         std::to_string(schema.features.size()));
  }
  Record out;
  out.reserve(schema.encoded_width());
  for (std::size_t k = 0; k < schema.features.size(); ++k) {
    const auto& f = schema.features[k];
    if (f.kind == FeatureKind::kContinuous) {
      if (f.min == f.max) Fail(ErrorCode::kDegenerateBounds, "feature '" + f.name + "'");
      out.push_back(std::clamp((raw[k] - f.min) / (f.max - f.min), 0.0, 1.0));
    } else {
      const auto idx = static_cast<std::size_t>(raw[k]);
      if (raw[k] < 0 || idx >= f.categories.size() || static_cast<double>(idx) != raw[k]) {
        Fail(ErrorCode::kUnknownCategory, "feature '" + f.name + "' index out of range");
      }
      for (std::size_t c = 0; c < f.categories.size(); ++c) out.push_back(c == idx ? 1.0 : 0.0);
    }
  }
  return out;
}

inline Dataset Preprocess(const RawDataset& raw) {
  raw.schema.Validate();
  Dataset out{raw.schema, PointSet(raw.schema.encoded_width()), raw.labels};
  for (const auto& r : raw.rows) out.rows.Append(PreprocessRecord(raw.schema, r));
  return out;
}

// Maps an encoded record back to raw units. Integral features are rounded;
// one-hot blocks must contain a single 1.
inline Record InverseTransform(const FeatureSchema& schema, RecordView x) {
  if (x.size() != schema.encoded_width()) {
    Fail(ErrorCode::kDimensionError, "encoded record width " + std::to_string(x.size()));
  }
  Record out(schema.features.size());
  std::size_t offset = 0;
  for (std::size_t k = 0; k < schema.features.size(); ++k) {
    const auto& f = schema.features[k];
    if (f.kind == FeatureKind::kContinuous) {
      double v = f.min + std::clamp(x[offset], 0.0, 1.0) * (f.max - f.min);
      if (f.integral) v = std::round(v);
      out[k] = v;
      offset += 1;
    } else {
      double total = 0.0;
      std::size_t hot = 0;
      for (std::size_t c = 0; c < f.categories.size(); ++c) {
        total += x[offset + c];
        if (x[offset + c] > x[offset + hot]) hot = c;
      }
      if (std::abs(total - 1.0) > 1e-9) {
        Fail(ErrorCode::kInvalidEncoding, "one-hot block of '" + f.name + "' sums to " +
                                              std::to_string(total));
      }
      out[k] = static_cast<double>(hot);
      offset += f.categories.size();
    }
  }
  return out;
}

struct SplitResult {
  Dataset train;
  Dataset test;
  Dataset graph_sample;
};

// Draws `n` distinct indices out of [0, population) in a seed-determined order.
inline std::vector<std::size_t> SampleWithoutReplacement(std::size_t population,
                                                         std::size_t n, Rng& rng) {
  std::vector<std::size_t> idx(population);
  for (std::size_t i = 0; i < population; ++i) idx[i] = i;
  // Partial Fisher-Yates.
  for (std::size_t i = 0; i < n; ++i) {
    const std::size_t j = i + static_cast<std::size_t>(rng.Index(population - i));
    std::swap(idx[i], idx[j]);
  }
  idx.resize(n);
  return idx;
}

// Per-class fraction selection: each class contributes round(count * fraction)
// rows. Returns (selected, rest), both in ascending index order.
inline std::pair<std::vector<std::size_t>, std::vector<std::size_t>> StratifiedSelect(
    const std::vector<Label>& labels, double fraction, Rng& rng) {
  std::map<Label, std::vector<std::size_t>> by_class;
  for (std::size_t i = 0; i < labels.size(); ++i) by_class[labels[i]].push_back(i);
  std::vector<std::size_t> selected, rest;
  for (auto& [label, members] : by_class) {
    Shuffle(members, rng);
    const auto take = static_cast<std::size_t>(
        std::llround(fraction * static_cast<double>(members.size())));
    selected.insert(selected.end(), members.begin(), members.begin() + take);
    rest.insert(rest.end(), members.begin() + take, members.end());
  }
  std::sort(selected.begin(), selected.end());
  std::sort(rest.begin(), rest.end());
  return {selected, rest};
}

inline SplitResult StratifiedSplitAndSample(const Dataset& ds, double test_fraction,
                                            std::size_t sample_n, std::uint64_t seed) {
  if (!(test_fraction > 0.0 && test_fraction < 1.0)) {
    Fail(ErrorCode::kInvalidArgument, "test_fraction must be in (0, 1)");
  }
  Rng rng(seed);
  auto [test_idx, train_idx] = StratifiedSelect(ds.labels, test_fraction, rng);
  if (sample_n > train_idx.size()) {
    Fail(ErrorCode::kInsufficientData, "sample_n " + std::to_string(sample_n) +
                                           " exceeds train size " +
                                           std::to_string(train_idx.size()));
  }
  Dataset train = ds.Subset(train_idx);
  Dataset test = ds.Subset(test_idx);
  auto pick = SampleWithoutReplacement(train.size(), sample_n, rng);
  std::sort(pick.begin(), pick.end());
  Dataset sample = train.Subset(pick);
  return {std::move(train), std::move(test), std::move(sample)};
}

// Uniform sample of n rows without replacement, kept in original order.
inline Dataset SampleRows(const Dataset& ds, std::size_t n, std::uint64_t seed) {
  if (n > ds.size()) {
    Fail(ErrorCode::kInsufficientData, "cannot sample " + std::to_string(n) + " of " +
                                           std::to_string(ds.size()) + " rows");
  }
  Rng rng(seed);
  auto pick = SampleWithoutReplacement(ds.size(), n, rng);
  std::sort(pick.begin(), pick.end());
  return ds.Subset(pick);
}

}  // namespace privrecourse
