/*
 * Copyright 2026 The vflsa Authors.
 * Licensed under the Apache License, Version 2.0 (the "License");
 * you may not use this file except in compliance with the License.
 * You may obtain a copy of the License at
 *
 *     https://www.apache.org/licenses/LICENSE-2.0
 *
 * Unless required by applicable law or agreed to in writing, software
 * distributed under the License is distributed on an "AS IS" BASIS,
 * WITHOUT WARRANTIES OR CONDITIONS OF ANY KIND, either express or implied.
 * See the License for the specific language governing permissions and
 * limitations under the License.
 */

#include "vflsa/data.hpp"

#include <algorithm>
#include <charconv>
#include <cmath>
#include <fstream>
#include <json.hpp>
#include <numeric>
#include <set>
#include <sstream>

#include "vflsa/error.hpp"
#include "vflsa/rng.hpp"

namespace vflsa {

using nlohmann::json;

namespace {

constexpr std::string_view kOtherLevel = "other";

std::string_view trim(std::string_view s) {
  while (!s.empty() && (s.front() == ' ' || s.front() == '\t' || s.front() == '\r')) s.remove_prefix(1);
  while (!s.empty() && (s.back() == ' ' || s.back() == '\t' || s.back() == '\r')) s.remove_suffix(1);
  return s;
}

// Splits one CSV record. Quoted fields may contain the delimiter and "" escapes.
std::vector<std::string> split_record(std::string_view line, char delim) {
  std::vector<std::string> fields;
  std::string cur;
  bool quoted = false;
  bool was_quoted = false;
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
      was_quoted = true;
    } else if (c == delim) {
      fields.push_back(was_quoted ? cur : std::string(trim(cur)));
      cur.clear();
      was_quoted = false;
    } else {
      cur.push_back(c);
    }
  }
  fields.push_back(was_quoted ? cur : std::string(trim(cur)));
  return fields;
}

std::string_view type_name(ColumnType t) {
  switch (t) {
    case ColumnType::Categorical: return "categorical";
    case ColumnType::Numeric: return "numeric";
    case ColumnType::Label: return "label";
    case ColumnType::Ignore: return "ignore";
  }
  return "?";
}

ColumnType parse_type(const std::string& s) {
  if (s == "categorical") return ColumnType::Categorical;
  if (s == "numeric") return ColumnType::Numeric;
  if (s == "label") return ColumnType::Label;
  if (s == "ignore") return ColumnType::Ignore;
  throw Error(Errc::SchemaMismatch, "unknown column type '" + s + "'");
}

template <class F>
auto json_guard(std::string_view what, F&& f) {
  try {
    return f();
  } catch (const json::exception& e) {
    throw Error(Errc::ParseError, std::string(what) + ": " + e.what());
  }
}

std::string read_file(const std::string& path) {
  std::ifstream in(path, std::ios::binary);
  if (!in) throw Error(Errc::IoError, "cannot open " + path);
  std::ostringstream ss;
  ss << in.rdbuf();
  return ss.str();
}

void reject_unknown_keys(const json& j, std::initializer_list<std::string_view> allowed, std::string_view where) {
  for (const auto& [key, value] : j.items()) {
    if (std::find(allowed.begin(), allowed.end(), key) == allowed.end()) {
      throw Error(Errc::SchemaMismatch, "unknown key '" + key + "' in " + std::string(where));
    }
  }
}

}  // namespace

// ---------------------------------------------------------------------------
// schema

const ColumnSchema* DatasetSchema::find(std::string_view column) const {
  for (const auto& c : columns)
    if (c.name == column) return &c;
  return nullptr;
}

const ColumnSchema& DatasetSchema::label_column() const {
  const ColumnSchema* found = nullptr;
  for (const auto& c : columns) {
    if (c.type != ColumnType::Label) continue;
    if (found) throw Error(Errc::SchemaMismatch, "schema '" + name + "' declares more than one label column");
    found = &c;
  }
  if (!found) throw Error(Errc::SchemaMismatch, "schema '" + name + "' has no label column");
  return *found;
}

DatasetSchema parse_schema(std::string_view json_text) {
  return json_guard("schema", [&] {
    const json j = json::parse(json_text);
    reject_unknown_keys(j, {"name", "delimiter", "has_header", "positive_label", "negative_label", "columns"},
                        "schema");
    DatasetSchema s;
    s.name = j.value("name", "");
    const std::string delim = j.value("delimiter", ",");
    if (delim.size() != 1) throw Error(Errc::SchemaMismatch, "delimiter must be a single character");
    s.delimiter = delim[0];
    s.has_header = j.value("has_header", true);
    s.positive_label = j.at("positive_label").get<std::string>();
    s.negative_label = j.value("negative_label", "0");
    for (const auto& c : j.at("columns")) {
      reject_unknown_keys(c, {"name", "type", "levels", "mean", "std"}, "schema column");
      ColumnSchema col;
      col.name = c.at("name").get<std::string>();
      col.type = parse_type(c.at("type").get<std::string>());
      col.levels = c.value("levels", std::vector<std::string>{});
      col.mean = c.value("mean", 0.0);
      col.stddev = c.value("std", 1.0);
      s.columns.push_back(std::move(col));
    }
    s.label_column();
    return s;
  });
}

DatasetSchema load_schema(const std::string& path) { return parse_schema(read_file(path)); }

std::string schema_to_json(const DatasetSchema& schema) {
  json j;
  j["name"] = schema.name;
  j["delimiter"] = std::string(1, schema.delimiter);
  j["has_header"] = schema.has_header;
  j["positive_label"] = schema.positive_label;
  j["negative_label"] = schema.negative_label;
  j["columns"] = json::array();
  for (const auto& c : schema.columns) {
    json col = {{"name", c.name}, {"type", type_name(c.type)}};
    if (!c.levels.empty()) col["levels"] = c.levels;
    if (c.type == ColumnType::Numeric) {
      col["mean"] = c.mean;
      col["std"] = c.stddev;
    }
    j["columns"].push_back(col);
  }
  return j.dump(2);
}

// ---------------------------------------------------------------------------
// CSV

const RawColumn& RawDataset::column(std::string_view name) const {
  for (const auto& c : columns)
    if (c.name == name) return c;
  throw Error(Errc::SchemaMismatch, "no column '" + std::string(name) + "'");
}

RawDataset parse_csv(std::string_view text, const DatasetSchema& schema) {
  std::vector<std::string_view> lines;
  for (std::size_t pos = 0; pos < text.size();) {
    std::size_t end = text.find('\n', pos);
    if (end == std::string_view::npos) end = text.size();
    std::string_view line = text.substr(pos, end - pos);
    if (!trim(line).empty()) lines.push_back(line);
    pos = end + 1;
  }
  if (lines.empty()) throw Error(Errc::SchemaMismatch, "CSV is empty");

  // Resolve schema columns to field positions.
  constexpr std::size_t kAbsent = static_cast<std::size_t>(-1);
  std::vector<std::size_t> position(schema.columns.size());
  std::size_t first_data = 0;
  std::size_t expected_fields = schema.columns.size();
  if (schema.has_header) {
    const auto header = split_record(lines[0], schema.delimiter);
    expected_fields = header.size();
    for (std::size_t c = 0; c < schema.columns.size(); ++c) {
      auto it = std::find(header.begin(), header.end(), schema.columns[c].name);
      if (it == header.end() && schema.columns[c].type == ColumnType::Ignore) {
        position[c] = kAbsent;
        continue;
      }
      if (it == header.end()) {
        throw Error(Errc::SchemaMismatch, "CSV header lacks column '" + schema.columns[c].name + "'");
      }
      position[c] = static_cast<std::size_t>(it - header.begin());
    }
    first_data = 1;
  } else {
    std::iota(position.begin(), position.end(), 0);
  }

  const ColumnSchema& label = schema.label_column();
  RawDataset raw;
  std::vector<std::size_t> kept;  // schema column -> raw column index
  std::vector<std::set<std::string, std::less<>>> level_sets(schema.columns.size());
  for (std::size_t c = 0; c < schema.columns.size(); ++c) {
    const auto& col = schema.columns[c];
    level_sets[c].insert(col.levels.begin(), col.levels.end());
    if (col.type == ColumnType::Categorical || col.type == ColumnType::Numeric) {
      kept.push_back(raw.columns.size());
      raw.columns.push_back(RawColumn{col.name, col.type, {}, {}});
    } else {
      kept.push_back(static_cast<std::size_t>(-1));
    }
  }

  for (std::size_t li = first_data; li < lines.size(); ++li) {
    const std::size_t row_no = li - first_data + 1;
    const auto fields = split_record(lines[li], schema.delimiter);
    if (fields.size() != expected_fields) {
      throw Error(Errc::ParseError, "row " + std::to_string(row_no) + ": expected " + std::to_string(expected_fields) +
                                        " fields, found " + std::to_string(fields.size()));
    }
    for (std::size_t c = 0; c < schema.columns.size(); ++c) {
      const auto& col = schema.columns[c];
      if (position[c] == kAbsent) continue;
      const std::string& field = fields[position[c]];
      switch (col.type) {
        case ColumnType::Label: {
          std::string_view v = field;
          if (!v.empty() && v.back() == '.') v.remove_suffix(1);  // adult.test writes ">50K."
          if (v == schema.positive_label) {
            raw.labels.push_back(1.0);
          } else if (v == schema.negative_label) {
            raw.labels.push_back(0.0);
          } else {
            throw Error(Errc::ParseError, "row " + std::to_string(row_no) + ", column '" + label.name +
                                              "': unexpected label '" + field + "'");
          }
          break;
        }
        case ColumnType::Numeric: {
          double v = 0.0;
          const char* b = field.data();
          const char* e = b + field.size();
          auto [ptr, ec] = std::from_chars(b, e, v);
          if (field.empty() || ec != std::errc() || ptr != e) {
            throw Error(Errc::ParseError, "row " + std::to_string(row_no) + ", column '" + col.name +
                                              "': not a number: '" + field + "'");
          }
          raw.columns[kept[c]].numbers.push_back(v);
          break;
        }
        case ColumnType::Categorical: {
          const bool known = col.levels.empty() || level_sets[c].count(field) > 0;
          raw.columns[kept[c]].categories.push_back(known ? field : std::string(kOtherLevel));
          break;
        }
        case ColumnType::Ignore:
          break;
      }
    }
  }
  return raw;
}

RawDataset load_csv(const std::string& path, const DatasetSchema& schema) {
  return parse_csv(read_file(path), schema);
}

void write_csv(const std::string& path, const RawDataset& raw, const DatasetSchema& schema) {
  std::ofstream out(path);
  if (!out) throw Error(Errc::IoError, "cannot write " + path);
  const char d = schema.delimiter;
  auto quote = [&](const std::string& s) {
    if (s.find(d) == std::string::npos && s.find('"') == std::string::npos) return s;
    std::string q = "\"";
    for (char c : s) {
      if (c == '"') q += '"';
      q += c;
    }
    return q + "\"";
  };
  bool first = true;
  for (const auto& c : schema.columns) {
    if (c.type == ColumnType::Ignore) continue;
    out << (first ? "" : std::string(1, d)) << quote(c.name);
    first = false;
  }
  out << '\n';
  char buf[64];
  for (std::size_t r = 0; r < raw.rows(); ++r) {
    first = true;
    for (const auto& c : schema.columns) {
      if (c.type == ColumnType::Ignore) continue;
      if (!first) out << d;
      first = false;
      if (c.type == ColumnType::Label) {
        out << quote(raw.labels[r] > 0.5 ? schema.positive_label : schema.negative_label);
      } else if (c.type == ColumnType::Numeric) {
        auto [ptr, ec] = std::to_chars(buf, buf + sizeof buf, raw.column(c.name).numbers[r]);
        out.write(buf, ptr - buf);
      } else {
        out << quote(raw.column(c.name).categories[r]);
      }
    }
    out << '\n';
  }
}

RawDataset shuffle_rows(const RawDataset& raw, std::uint64_t seed) {
  std::vector<std::size_t> perm(raw.rows());
  std::iota(perm.begin(), perm.end(), 0);
  Rng rng(seed);
  fisher_yates(perm, rng);
  RawDataset out;
  out.labels.resize(raw.rows());
  for (std::size_t r = 0; r < raw.rows(); ++r) out.labels[r] = raw.labels[perm[r]];
  for (const auto& c : raw.columns) {
    RawColumn nc{c.name, c.type, {}, {}};
    if (c.type == ColumnType::Numeric) {
      nc.numbers.resize(raw.rows());
      for (std::size_t r = 0; r < raw.rows(); ++r) nc.numbers[r] = c.numbers[perm[r]];
    } else {
      nc.categories.resize(raw.rows());
      for (std::size_t r = 0; r < raw.rows(); ++r) nc.categories[r] = c.categories[perm[r]];
    }
    out.columns.push_back(std::move(nc));
  }
  return out;
}

// ---------------------------------------------------------------------------
// encoding

std::size_t EncodedDataset::width_of(const std::vector<std::string>& raw_columns) const {
  std::size_t w = 0;
  for (const auto& name : raw_columns) {
    auto it = column_ranges.find(name);
    if (it == column_ranges.end()) throw Error(Errc::CoverageError, "no encoded column '" + name + "'");
    w += it->second.second - it->second.first;
  }
  return w;
}

EncodedDataset encode(const RawDataset& raw, const DatasetSchema& schema, std::span<const std::size_t> stats_rows) {
  const std::size_t n = raw.rows();
  std::vector<std::size_t> all_rows;
  if (stats_rows.empty()) {
    all_rows.resize(n);
    std::iota(all_rows.begin(), all_rows.end(), 0);
    stats_rows = all_rows;
  }

  struct Block {
    const RawColumn* column;
    std::vector<std::string> levels;
    double mean = 0.0, scale = 0.0;  // scale 0 means constant column
  };
  std::vector<Block> blocks;
  EncodedDataset out;
  std::size_t width = 0;
  for (const auto& col : schema.columns) {
    if (col.type != ColumnType::Categorical && col.type != ColumnType::Numeric) continue;
    const RawColumn& rc = raw.column(col.name);
    if (rc.type != col.type) throw Error(Errc::SchemaMismatch, "column '" + col.name + "' changed type");
    Block b{&rc, {}, 0.0, 0.0};
    if (col.type == ColumnType::Categorical) {
      std::set<std::string> levels(col.levels.begin(), col.levels.end());
      if (col.levels.empty() || std::find(rc.categories.begin(), rc.categories.end(), kOtherLevel) != rc.categories.end()) {
        levels.insert(rc.categories.begin(), rc.categories.end());
      }
      b.levels.assign(levels.begin(), levels.end());
      for (const auto& l : b.levels) out.encoded_names.push_back(col.name + "=" + l);
    } else {
      double sum = 0.0;
      for (std::size_t r : stats_rows) sum += rc.numbers[r];
      const double cnt = static_cast<double>(stats_rows.size());
      b.mean = cnt > 0 ? sum / cnt : 0.0;
      double ss = 0.0;
      for (std::size_t r : stats_rows) ss += (rc.numbers[r] - b.mean) * (rc.numbers[r] - b.mean);
      const double sd = cnt > 0 ? std::sqrt(ss / cnt) : 0.0;
      b.scale = sd > 1e-12 ? 1.0 / sd : 0.0;
      out.encoded_names.push_back(col.name);
    }
    const std::size_t w = col.type == ColumnType::Categorical ? b.levels.size() : 1;
    out.column_ranges[col.name] = {width, width + w};
    width += w;
    blocks.push_back(std::move(b));
  }

  out.features = Matrix::Zero(static_cast<Eigen::Index>(n), static_cast<Eigen::Index>(width));
  std::size_t offset = 0;
  for (const auto& b : blocks) {
    if (b.column->type == ColumnType::Categorical) {
      for (std::size_t r = 0; r < n; ++r) {
        auto it = std::lower_bound(b.levels.begin(), b.levels.end(), b.column->categories[r]);
        const auto level = static_cast<std::size_t>(it - b.levels.begin());
        out.features(static_cast<Eigen::Index>(r), static_cast<Eigen::Index>(offset + level)) = 1.0;
      }
      offset += b.levels.size();
    } else {
      for (std::size_t r = 0; r < n; ++r) {
        out.features(static_cast<Eigen::Index>(r), static_cast<Eigen::Index>(offset)) =
            (b.column->numbers[r] - b.mean) * b.scale;
      }
      offset += 1;
    }
  }
  out.sample_ids.resize(n);
  std::iota(out.sample_ids.begin(), out.sample_ids.end(), SampleId{0});
  out.labels = Eigen::Map<const Vector>(raw.labels.data(), static_cast<Eigen::Index>(n));
  return out;
}

// ---------------------------------------------------------------------------
// partitions

std::size_t PartitionSpec::num_passive() const {
  std::size_t n = 0;
  for (const auto& c : clusters) n += c.members.size();
  return n;
}

PartitionSpec parse_partition(std::string_view json_text) {
  return json_guard("partition", [&] {
    const json j = json::parse(json_text);
    reject_unknown_keys(j, {"active_columns", "clusters"}, "partition");
    PartitionSpec spec;
    spec.active_columns = j.at("active_columns").get<std::vector<std::string>>();
    for (const auto& c : j.at("clusters")) {
      reject_unknown_keys(c, {"cluster_id", "columns", "members", "id_ranges"}, "partition cluster");
      ClusterSpec cs;
      cs.cluster_id = c.at("cluster_id").get<std::uint16_t>();
      cs.columns = c.at("columns").get<std::vector<std::string>>();
      cs.members = c.at("members").get<std::vector<PartyIndex>>();
      if (c.contains("id_ranges")) {
        for (const auto& member : c.at("id_ranges")) {
          std::vector<std::pair<SampleId, SampleId>> ranges;
          for (const auto& r : member) ranges.emplace_back(r.at(0).get<SampleId>(), r.at(1).get<SampleId>());
          cs.id_ranges.push_back(std::move(ranges));
        }
        if (cs.id_ranges.size() != cs.members.size()) {
          throw Error(Errc::SchemaMismatch, "cluster " + std::to_string(cs.cluster_id) +
                                                ": id_ranges must list one entry per member");
        }
      }
      spec.clusters.push_back(std::move(cs));
    }
    return spec;
  });
}

PartitionSpec load_partition(const std::string& path) { return parse_partition(read_file(path)); }

std::string partition_to_json(const PartitionSpec& spec) {
  json j;
  j["active_columns"] = spec.active_columns;
  j["clusters"] = json::array();
  for (const auto& c : spec.clusters) {
    json cj = {{"cluster_id", c.cluster_id}, {"columns", c.columns}, {"members", c.members}};
    if (!c.id_ranges.empty()) {
      json ranges = json::array();
      for (const auto& m : c.id_ranges) {
        json mj = json::array();
        for (const auto& [lo, hi] : m) mj.push_back({lo, hi});
        ranges.push_back(mj);
      }
      cj["id_ranges"] = ranges;
    }
    j["clusters"].push_back(cj);
  }
  return j.dump(2);
}

std::optional<std::size_t> PartyData::row_of(SampleId id) const {
  auto it = std::lower_bound(ids.begin(), ids.end(), id);
  if (it == ids.end() || *it != id) return std::nullopt;
  return static_cast<std::size_t>(it - ids.begin());
}

namespace {

std::vector<std::size_t> encoded_columns(const EncodedDataset& encoded, const std::vector<std::string>& names) {
  std::vector<std::size_t> cols;
  for (const auto& name : names) {
    auto it = encoded.column_ranges.find(name);
    if (it == encoded.column_ranges.end()) {
      throw Error(Errc::CoverageError, "partition names column '" + name + "' which the dataset does not have");
    }
    for (std::size_t c = it->second.first; c < it->second.second; ++c) cols.push_back(c);
  }
  return cols;
}

Matrix gather(const EncodedDataset& encoded, const std::vector<std::size_t>& rows,
              const std::vector<std::size_t>& cols) {
  Matrix m(static_cast<Eigen::Index>(rows.size()), static_cast<Eigen::Index>(cols.size()));
  for (std::size_t r = 0; r < rows.size(); ++r)
    for (std::size_t c = 0; c < cols.size(); ++c)
      m(static_cast<Eigen::Index>(r), static_cast<Eigen::Index>(c)) =
          encoded.features(static_cast<Eigen::Index>(rows[r]), static_cast<Eigen::Index>(cols[c]));
  return m;
}

}  // namespace

VerticalSplit vertical_split(const EncodedDataset& encoded, const PartitionSpec& spec) {
  // Column disjointness and coverage.
  std::map<std::string, std::string> owner;
  auto claim = [&](const std::string& column, const std::string& who) {
    auto [it, inserted] = owner.emplace(column, who);
    if (!inserted) {
      throw Error(Errc::OverlapError, "column '" + column + "' assigned to both " + it->second + " and " + who);
    }
  };
  for (const auto& c : spec.active_columns) claim(c, "the active party");
  for (const auto& cl : spec.clusters)
    for (const auto& c : cl.columns) claim(c, "cluster " + std::to_string(cl.cluster_id));
  for (const auto& [name, range] : encoded.column_ranges) {
    if (!owner.count(name)) throw Error(Errc::CoverageError, "column '" + name + "' is not assigned to any party");
  }

  std::set<PartyIndex> seen_parties;
  std::set<std::uint16_t> seen_clusters;
  for (const auto& cl : spec.clusters) {
    if (!seen_clusters.insert(cl.cluster_id).second) {
      throw Error(Errc::OverlapError, "cluster id " + std::to_string(cl.cluster_id) + " used twice");
    }
    if (cl.members.empty()) {
      throw Error(Errc::CoverageError, "cluster " + std::to_string(cl.cluster_id) + " has no members");
    }
    for (PartyIndex p : cl.members) {
      if (p == 0) throw Error(Errc::OverlapError, "party 0 is the active party and cannot be a cluster member");
      if (!seen_parties.insert(p).second) {
        throw Error(Errc::OverlapError, "party " + std::to_string(p) + " appears in more than one cluster");
      }
    }
  }

  // Row index of every id; the active party holds all of them.
  std::map<SampleId, std::size_t> row_of;
  for (std::size_t r = 0; r < encoded.sample_ids.size(); ++r) row_of[encoded.sample_ids[r]] = r;

  VerticalSplit split;
  {
    auto& a = split.active;
    a.party = 0;
    a.columns = encoded_columns(encoded, spec.active_columns);
    std::vector<std::size_t> rows;
    for (const auto& [id, r] : row_of) {
      a.ids.push_back(id);
      rows.push_back(r);
    }
    a.features = gather(encoded, rows, a.columns);
    a.labels = Vector(static_cast<Eigen::Index>(rows.size()));
    for (std::size_t i = 0; i < rows.size(); ++i) a.labels[static_cast<Eigen::Index>(i)] = encoded.labels[static_cast<Eigen::Index>(rows[i])];
  }

  for (const auto& cl : spec.clusters) {
    const auto cols = encoded_columns(encoded, cl.columns);
    std::vector<std::vector<SampleId>> member_ids(cl.members.size());
    if (cl.id_ranges.empty()) {
      std::size_t k = 0;
      for (const auto& [id, r] : row_of) member_ids[k++ % cl.members.size()].push_back(id);
    } else {
      std::set<SampleId> taken;
      for (std::size_t m = 0; m < cl.members.size(); ++m) {
        for (const auto& [lo, hi] : cl.id_ranges[m]) {
          for (SampleId id = lo; id < hi; ++id) {
            if (!row_of.count(id)) {
              throw Error(Errc::CoverageError, "cluster " + std::to_string(cl.cluster_id) + " member " +
                                                   std::to_string(cl.members[m]) + " claims unknown sample " +
                                                   std::to_string(id));
            }
            if (!taken.insert(id).second) {
              throw Error(Errc::OverlapError, "sample " + std::to_string(id) + " held by two members of cluster " +
                                                  std::to_string(cl.cluster_id));
            }
            member_ids[m].push_back(id);
          }
        }
        std::sort(member_ids[m].begin(), member_ids[m].end());
      }
    }
    for (std::size_t m = 0; m < cl.members.size(); ++m) {
      PartyData p;
      p.party = cl.members[m];
      p.cluster_id = cl.cluster_id;
      p.columns = cols;
      p.ids = std::move(member_ids[m]);
      std::vector<std::size_t> rows;
      rows.reserve(p.ids.size());
      for (SampleId id : p.ids) rows.push_back(row_of.at(id));
      p.features = gather(encoded, rows, cols);
      split.passives.push_back(std::move(p));
    }
  }
  std::sort(split.passives.begin(), split.passives.end(),
            [](const PartyData& a, const PartyData& b) { return a.party < b.party; });
  return split;
}

Matrix reassemble(const VerticalSplit& split, std::size_t rows, std::size_t width) {
  Matrix m = Matrix::Zero(static_cast<Eigen::Index>(rows), static_cast<Eigen::Index>(width));
  auto place = [&](const PartyData& p) {
    for (std::size_t r = 0; r < p.ids.size(); ++r)
      for (std::size_t c = 0; c < p.columns.size(); ++c)
        m(static_cast<Eigen::Index>(p.ids[r]), static_cast<Eigen::Index>(p.columns[c])) =
            p.features(static_cast<Eigen::Index>(r), static_cast<Eigen::Index>(c));
  };
  place(split.active);
  for (const auto& p : split.passives) place(p);
  return m;
}

// ---------------------------------------------------------------------------
// synthetic data

RawDataset synth_generate(std::size_t rows, const DatasetSchema& schema, std::uint64_t seed,
                          const SyntheticOptions& options) {
  Rng rng(seed);
  std::normal_distribution<double> std_normal(0.0, 1.0);

  RawDataset raw;
  std::vector<double> score(rows, 0.0);
  std::size_t informative = 0;
  for (const auto& col : schema.columns) {
    if (col.type == ColumnType::Categorical || col.type == ColumnType::Numeric) ++informative;
  }
  const double per_column = options.signal / std::sqrt(static_cast<double>(std::max<std::size_t>(informative, 1)));

  for (const auto& col : schema.columns) {
    if (col.type == ColumnType::Categorical) {
      std::vector<std::string> levels = col.levels;
      if (levels.empty()) levels = {"a", "b", "c"};
      // Skewed level frequencies and one planted effect per level.
      std::vector<double> cumulative(levels.size());
      std::vector<double> effect(levels.size());
      double total = 0.0;
      for (std::size_t k = 0; k < levels.size(); ++k) {
        total += 0.2 + uniform_unit(rng);
        cumulative[k] = total;
        effect[k] = std_normal(rng);
      }
      RawColumn rc{col.name, col.type, {}, {}};
      rc.categories.reserve(rows);
      for (std::size_t r = 0; r < rows; ++r) {
        const double u = uniform_unit(rng) * total;
        const auto k = static_cast<std::size_t>(std::upper_bound(cumulative.begin(), cumulative.end(), u) -
                                                cumulative.begin());
        const std::size_t level = std::min(k, levels.size() - 1);
        rc.categories.push_back(levels[level]);
        score[r] += per_column * effect[level];
      }
      raw.columns.push_back(std::move(rc));
    } else if (col.type == ColumnType::Numeric) {
      const double coef = std_normal(rng);
      RawColumn rc{col.name, col.type, {}, {}};
      rc.numbers.reserve(rows);
      for (std::size_t r = 0; r < rows; ++r) {
        const double zscore = std_normal(rng);
        rc.numbers.push_back(col.mean + col.stddev * zscore);
        score[r] += per_column * coef * zscore;
      }
      raw.columns.push_back(std::move(rc));
    }
  }
  raw.labels.resize(rows);
  for (std::size_t r = 0; r < rows; ++r) raw.labels[r] = uniform_unit(rng) < sigmoid(score[r]) ? 1.0 : 0.0;
  return raw;
}

}  // namespace vflsa
