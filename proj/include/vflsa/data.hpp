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

#pragma once

// CSV ingestion, one-hot / z-score encoding and vertical partitioning.

#include <cstdint>
#include <map>
#include <optional>
#include <span>
#include <string>
#include <string_view>
#include <utility>
#include <vector>

#include "vflsa/crypto.hpp"
#include "vflsa/model.hpp"

namespace vflsa {

enum class ColumnType { Categorical, Numeric, Label, Ignore };

struct ColumnSchema {
  std::string name;
  ColumnType type = ColumnType::Numeric;
  // Categorical: declared levels. Values outside this list load as "other".
  // Empty means infer from the data.
  std::vector<std::string> levels;
  // Numeric: location and spread used by the synthetic generator.
  double mean = 0.0;
  double stddev = 1.0;
};

struct DatasetSchema {
  std::string name;
  char delimiter = ',';
  bool has_header = true;
  std::string positive_label;
  std::string negative_label;
  std::vector<ColumnSchema> columns;

  const ColumnSchema* find(std::string_view column) const;
  const ColumnSchema& label_column() const;
};

DatasetSchema parse_schema(std::string_view json_text);
DatasetSchema load_schema(const std::string& path);
std::string schema_to_json(const DatasetSchema& schema);

struct RawColumn {
  std::string name;
  ColumnType type = ColumnType::Numeric;
  std::vector<std::string> categories;  // Categorical
  std::vector<double> numbers;          // Numeric
};

struct RawDataset {
  std::vector<RawColumn> columns;  // schema order, Label/Ignore columns excluded
  std::vector<double> labels;      // 0 / 1
  std::size_t rows() const { return labels.size(); }
  const RawColumn& column(std::string_view name) const;
};

// Throws Errc::SchemaMismatch (empty file, missing columns) or Errc::ParseError
// with 1-based row and the column name.
RawDataset load_csv(const std::string& path, const DatasetSchema& schema);
RawDataset parse_csv(std::string_view text, const DatasetSchema& schema);
void write_csv(const std::string& path, const RawDataset& raw, const DatasetSchema& schema);

// Seeded row permutation; sample IDs are later assigned by row order.
RawDataset shuffle_rows(const RawDataset& raw, std::uint64_t seed);

struct EncodedDataset {
  std::vector<SampleId> sample_ids;  // row r has id sample_ids[r]
  Matrix features;
  // raw column -> [begin, end) in encoded columns
  std::map<std::string, std::pair<std::size_t, std::size_t>> column_ranges;
  std::vector<std::string> encoded_names;
  Vector labels;

  std::size_t width() const { return static_cast<std::size_t>(features.cols()); }
  std::size_t width_of(const std::vector<std::string>& raw_columns) const;
};

// Categoricals become one-hot blocks with levels in lexicographic order;
// numerics are z-scored with statistics from `stats_rows` (all rows if empty).
// Constant numerics encode as zeros. Sample IDs are the row indices.
EncodedDataset encode(const RawDataset& raw, const DatasetSchema& schema,
                      std::span<const std::size_t> stats_rows = {});

struct ClusterSpec {
  std::uint16_t cluster_id = 0;
  std::vector<std::string> columns;
  std::vector<PartyIndex> members;
  // Optional explicit [lo, hi) id ranges per member. When absent, ids are
  // dealt round-robin across members (50/50 for two members).
  std::vector<std::vector<std::pair<SampleId, SampleId>>> id_ranges;
};

struct PartitionSpec {
  std::vector<std::string> active_columns;
  std::vector<ClusterSpec> clusters;

  std::size_t num_passive() const;
};

PartitionSpec parse_partition(std::string_view json_text);
PartitionSpec load_partition(const std::string& path);
std::string partition_to_json(const PartitionSpec& spec);

struct PartyData {
  PartyIndex party = 0;
  std::optional<std::uint16_t> cluster_id;  // empty for the active party
  std::vector<SampleId> ids;                // ascending
  std::vector<std::size_t> columns;         // encoded column indices
  Matrix features;                          // rows aligned with ids
  Vector labels;                            // active party only

  std::optional<std::size_t> row_of(SampleId id) const;
};

struct VerticalSplit {
  PartyData active;
  std::vector<PartyData> passives;  // ordered by party index
};

// Errc::OverlapError for shared columns, a party in two clusters, or one id
// held by two members of a cluster; Errc::CoverageError for unknown or
// unassigned columns and ids outside the dataset.
VerticalSplit vertical_split(const EncodedDataset& encoded, const PartitionSpec& spec);

// Inverse of vertical_split over the columns and ids the parties hold.
Matrix reassemble(const VerticalSplit& split, std::size_t rows, std::size_t width);

struct SyntheticOptions {
  // Scales the planted logit; larger values make labels less noisy.
  double signal = 2.5;
};

// Rows drawn from the schema's declared levels and numeric moments with a
// planted logistic label. Deterministic in `seed`.
RawDataset synth_generate(std::size_t rows, const DatasetSchema& schema, std::uint64_t seed,
                          const SyntheticOptions& options = {});

// Built-in schemas and default partitions: "banking", "adult", "taobao".
DatasetSchema builtin_schema(std::string_view name);
PartitionSpec builtin_partition(std::string_view name);
std::vector<std::string> builtin_dataset_names();

}  // namespace vflsa
