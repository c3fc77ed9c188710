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

#define DOCTEST_CONFIG_IMPLEMENT_WITH_MAIN
#include <doctest.h>

#include <cmath>
#include <filesystem>

#include "test_util.hpp"
#include "vflsa/data.hpp"

using namespace vflsa;
using vflsa::testing::error_code_of;

namespace {

constexpr const char* kToySchema = R"({
  "name": "toy", "positive_label": "yes", "negative_label": "no",
  "columns": [
    {"name": "color", "type": "categorical", "levels": ["red", "green", "blue"]},
    {"name": "size", "type": "numeric"},
    {"name": "note", "type": "ignore"},
    {"name": "y", "type": "label"}
  ]})";

constexpr const char* kToyCsv =
    "color,size,note,y\n"
    "red,1,a,yes\n"
    "blue,2,b,no\n"
    "green,3,c,yes\n"
    "mauve,6,d,no\n";

struct Widths {
  std::size_t active, c1, c2;
};

Widths builtin_widths(const std::string& name) {
  const auto schema = builtin_schema(name);
  const auto part = builtin_partition(name);
  const auto enc = encode(synth_generate(50, schema, 1), schema);
  return {enc.width_of(part.active_columns), enc.width_of(part.clusters[0].columns),
          enc.width_of(part.clusters[1].columns)};
}

}  // namespace

TEST_CASE("built-in partitions have the published layer widths") {
  const Widths banking = builtin_widths("banking");
  CHECK(banking.active == 57);
  CHECK(banking.c1 == 3);
  CHECK(banking.c2 == 20);
  const Widths adult = builtin_widths("adult");
  CHECK(adult.active == 27);
  CHECK(adult.c1 == 63);
  CHECK(adult.c2 == 16);
  const Widths taobao = builtin_widths("taobao");
  CHECK(taobao.active == 197);
  CHECK(taobao.c1 == 11);
  CHECK(taobao.c2 == 6);
  for (const auto& name : builtin_dataset_names()) CHECK(builtin_partition(name).num_passive() == 4);
}

TEST_CASE("csv parsing, unknown levels and encoding") {
  const auto schema = parse_schema(kToySchema);
  const auto raw = parse_csv(kToyCsv, schema);
  REQUIRE(raw.rows() == 4);
  CHECK(raw.labels == std::vector<double>{1, 0, 1, 0});
  CHECK(raw.column("color").categories[3] == "other");
  const auto enc = encode(raw, schema);
  // blue, green, other, red, size
  CHECK(enc.width() == 5);
  CHECK(enc.encoded_names[2] == "color=other");
  CHECK(enc.features(0, 3) == 1.0);
  CHECK(enc.features.row(0).head(4).sum() == 1.0);
  // size: mean 3, population sd sqrt(3.5)
  CHECK(enc.features(3, 4) == doctest::Approx(3.0 / std::sqrt(3.5)));
  CHECK(enc.features.col(4).sum() == doctest::Approx(0.0));
  const std::vector<std::size_t> first_two = {0, 1};
  const auto enc2 = encode(raw, schema, first_two);
  CHECK(enc2.features(0, 4) == doctest::Approx(-1.0));
}

TEST_CASE("ignored columns may be absent") {
  const auto schema = parse_schema(kToySchema);
  const auto raw = parse_csv("y,size,color\nno,1,red\nyes,2,blue\n", schema);
  CHECK(raw.rows() == 2);
  CHECK(raw.column("size").numbers == std::vector<double>{1, 2});
}

TEST_CASE("csv errors name row and column") {
  const auto schema = parse_schema(kToySchema);
  CHECK(error_code_of([&] { parse_csv("", schema); }) == Errc::SchemaMismatch);
  CHECK(error_code_of([&] { parse_csv("color,note,y\nred,a,yes\n", schema); }) == Errc::SchemaMismatch);
  try {
    parse_csv("color,size,note,y\nred,1,a,yes\nred,big,a,no\n", schema);
    FAIL("expected ParseError");
  } catch (const Error& e) {
    CHECK(e.code() == Errc::ParseError);
    CHECK(std::string(e.what()).find("row 2") != std::string::npos);
    CHECK(std::string(e.what()).find("size") != std::string::npos);
  }
  CHECK(error_code_of([&] { parse_csv("color,size,note,y\nred,1,a\n", schema); }) == Errc::ParseError);
  CHECK(error_code_of([&] { parse_csv("color,size,note,y\nred,1,a,maybe\n", schema); }) == Errc::ParseError);
  CHECK(error_code_of([&] { load_csv("/nonexistent/file.csv", schema); }) == Errc::IoError);
}

TEST_CASE("schema and partition JSON round trip and reject unknown keys") {
  const auto schema = builtin_schema("adult");
  const auto back = parse_schema(schema_to_json(schema));
  CHECK(back.columns.size() == schema.columns.size());
  CHECK(back.positive_label == schema.positive_label);
  const auto part = builtin_partition("taobao");
  const auto part_back = parse_partition(partition_to_json(part));
  CHECK(part_back.active_columns == part.active_columns);
  CHECK(part_back.clusters[1].members == part.clusters[1].members);
  CHECK(error_code_of([] { parse_partition(R"({"active_columns": [], "clusters": [], "extra": 1})"); }) ==
        Errc::SchemaMismatch);
  CHECK(error_code_of([] { parse_partition("{"); }) == Errc::ParseError);
}

TEST_CASE("vertical split reassembles to the encoded matrix") {
  const auto schema = builtin_schema("banking");
  const auto enc = encode(synth_generate(101, schema, 3), schema);
  const auto split = vertical_split(enc, builtin_partition("banking"));
  CHECK(split.active.ids.size() == 101);
  REQUIRE(split.passives.size() == 4);
  // round-robin: members of one cluster hold disjoint halves
  CHECK(split.passives[0].ids.size() == 51);
  CHECK(split.passives[1].ids.size() == 50);
  for (std::size_t i = 0; i < split.passives.size(); ++i) CHECK(split.passives[i].party == i + 1);
  CHECK(reassemble(split, 101, enc.width()) == enc.features);
  CHECK(split.active.labels == enc.labels);
  CHECK(split.passives[2].row_of(split.passives[2].ids[7]) == 7u);
  CHECK_FALSE(split.passives[0].row_of(1).has_value());
}

TEST_CASE("explicit id ranges") {
  const auto schema = parse_schema(kToySchema);
  const auto enc = encode(parse_csv(kToyCsv, schema), schema);
  PartitionSpec spec;
  spec.active_columns = {"size"};
  spec.clusters = {{1, {"color"}, {1, 2}, {{{0, 1}}, {{1, 3}}}}};
  const auto split = vertical_split(enc, spec);
  CHECK(split.passives[0].ids == std::vector<SampleId>{0});
  CHECK(split.passives[1].ids == std::vector<SampleId>{1, 2});

  spec.clusters[0].id_ranges = {{{0, 2}}, {{1, 3}}};
  CHECK(error_code_of([&] { vertical_split(enc, spec); }) == Errc::OverlapError);
  spec.clusters[0].id_ranges = {{{0, 2}}, {{2, 9}}};
  CHECK(error_code_of([&] { vertical_split(enc, spec); }) == Errc::CoverageError);
}

TEST_CASE("partition validation") {
  const auto schema = parse_schema(kToySchema);
  const auto enc = encode(parse_csv(kToyCsv, schema), schema);
  PartitionSpec shared;
  shared.active_columns = {"size", "color"};
  shared.clusters = {{1, {"color"}, {1}, {}}};
  CHECK(error_code_of([&] { vertical_split(enc, shared); }) == Errc::OverlapError);
  PartitionSpec missing;
  missing.active_columns = {"size"};
  CHECK(error_code_of([&] { vertical_split(enc, missing); }) == Errc::CoverageError);
  PartitionSpec unknown;
  unknown.active_columns = {"size", "color", "weight"};
  CHECK(error_code_of([&] { vertical_split(enc, unknown); }) == Errc::CoverageError);
  PartitionSpec twice;
  twice.active_columns = {"size"};
  twice.clusters = {{1, {"color"}, {1, 1}, {}}};
  CHECK(error_code_of([&] { vertical_split(enc, twice); }) == Errc::OverlapError);
}

TEST_CASE("synthetic data and shuffling are seeded") {
  const auto schema = builtin_schema("adult");
  const auto a = synth_generate(200, schema, 9);
  const auto b = synth_generate(200, schema, 9);
  const auto c = synth_generate(200, schema, 10);
  CHECK(a.labels == b.labels);
  CHECK(a.labels != c.labels);
  const double pos = std::count(a.labels.begin(), a.labels.end(), 1.0);
  CHECK(pos > 10);
  CHECK(pos < 190);
  const auto s1 = shuffle_rows(a, 4);
  const auto s2 = shuffle_rows(a, 4);
  CHECK(s1.labels == s2.labels);
  CHECK(std::count(s1.labels.begin(), s1.labels.end(), 1.0) == pos);
}

TEST_CASE("csv write and reload") {
  const auto schema = builtin_schema("banking");
  const auto raw = synth_generate(30, schema, 2);
  const auto path = (std::filesystem::temp_directory_path() / "vflsa_data_roundtrip.csv").string();
  write_csv(path, raw, schema);
  const auto back = load_csv(path, schema);
  CHECK(back.labels == raw.labels);
  CHECK(encode(back, schema).features.isApprox(encode(raw, schema).features, 1e-9));
  std::filesystem::remove(path);
}
