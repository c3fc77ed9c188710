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

// Column schemas for the UCI Bank Marketing (bank-full.csv) and Adult
// (adult.csv, 48,842 rows) files, plus a Taobao-shaped synthetic schema.
// Level lists are the complete value sets of the public files, so the one-hot
// widths of the default partitions come out as 57 / 3 / 20 (banking),
// 27 / 63 / 16 (adult) and 197 / 11 / 6 (taobao).

#include <string>

#include "vflsa/data.hpp"
#include "vflsa/error.hpp"

namespace vflsa {

namespace {

ColumnSchema cat(std::string name, std::vector<std::string> levels) {
  return {std::move(name), ColumnType::Categorical, std::move(levels), 0.0, 1.0};
}

ColumnSchema num(std::string name, double mean, double stddev) {
  return {std::move(name), ColumnType::Numeric, {}, mean, stddev};
}

ColumnSchema ignored(std::string name) { return {std::move(name), ColumnType::Ignore, {}, 0.0, 1.0}; }

ColumnSchema label(std::string name) { return {std::move(name), ColumnType::Label, {}, 0.0, 1.0}; }

std::vector<std::string> numbered(int first, int last, const std::string& prefix = "") {
  std::vector<std::string> out;
  for (int i = first; i <= last; ++i) out.push_back(prefix + std::to_string(i));
  return out;
}

DatasetSchema banking() {
  DatasetSchema s;
  s.name = "banking";
  s.delimiter = ';';
  s.positive_label = "yes";
  s.negative_label = "no";
  const std::vector<std::string> yes_no = {"no", "yes"};
  s.columns = {
      num("age", 40.9, 10.6),
      cat("job", {"admin.", "blue-collar", "entrepreneur", "housemaid", "management", "retired", "self-employed",
                  "services", "student", "technician", "unemployed", "unknown"}),
      cat("marital", {"divorced", "married", "single"}),
      cat("education", {"primary", "secondary", "tertiary", "unknown"}),
      cat("default", yes_no),
      num("balance", 1362.3, 3044.8),
      cat("housing", yes_no),
      cat("loan", yes_no),
      cat("contact", {"cellular", "telephone", "unknown"}),
      // Day of month is one-hot encoded; this is what makes the active block 57 wide.
      cat("day", numbered(1, 31)),
      cat("month", {"jan", "feb", "mar", "apr", "may", "jun", "jul", "aug", "sep", "oct", "nov", "dec"}),
      ignored("duration"),
      num("campaign", 2.76, 3.1),
      num("pdays", 40.2, 100.1),
      num("previous", 0.58, 2.3),
      cat("poutcome", {"failure", "other", "success", "unknown"}),
      label("y"),
  };
  return s;
}

DatasetSchema adult() {
  DatasetSchema s;
  s.name = "adult";
  s.delimiter = ',';
  s.positive_label = ">50K";
  s.negative_label = "<=50K";
  s.columns = {
      num("age", 38.6, 13.7),
      cat("workclass", {"?", "Federal-gov", "Local-gov", "Never-worked", "Private", "Self-emp-inc",
                        "Self-emp-not-inc", "State-gov", "Without-pay"}),
      ignored("fnlwgt"),
      cat("education", {"10th", "11th", "12th", "1st-4th", "5th-6th", "7th-8th", "9th", "Assoc-acdm", "Assoc-voc",
                        "Bachelors", "Doctorate", "HS-grad", "Masters", "Preschool", "Prof-school",
                        "Some-college"}),
      ignored("educational-num"),
      cat("marital-status", {"Divorced", "Married-AF-spouse", "Married-civ-spouse", "Married-spouse-absent",
                             "Never-married", "Separated", "Widowed"}),
      cat("occupation", {"?", "Adm-clerical", "Armed-Forces", "Craft-repair", "Exec-managerial", "Farming-fishing",
                         "Handlers-cleaners", "Machine-op-inspct", "Other-service", "Priv-house-serv",
                         "Prof-specialty", "Protective-serv", "Sales", "Tech-support", "Transport-moving"}),
      cat("relationship", {"Husband", "Not-in-family", "Other-relative", "Own-child", "Unmarried", "Wife"}),
      cat("race", {"Amer-Indian-Eskimo", "Asian-Pac-Islander", "Black", "Other", "White"}),
      cat("gender", {"Female", "Male"}),
      num("capital-gain", 1079.1, 7452.0),
      num("capital-loss", 87.5, 403.0),
      num("hours-per-week", 40.4, 12.4),
      cat("native-country",
          {"?", "Cambodia", "Canada", "China", "Columbia", "Cuba", "Dominican-Republic", "Ecuador", "El-Salvador",
           "England", "France", "Germany", "Greece", "Guatemala", "Haiti", "Holand-Netherlands", "Honduras", "Hong",
           "Hungary", "India", "Iran", "Ireland", "Italy", "Jamaica", "Japan", "Laos", "Mexico", "Nicaragua",
           "Outlying-US(Guam-USVI-etc)", "Peru", "Philippines", "Poland", "Portugal", "Puerto-Rico", "Scotland",
           "South", "Taiwan", "Thailand", "Trinadad&Tobago", "United-States", "Vietnam", "Yugoslavia"}),
      label("income"),
  };
  return s;
}

DatasetSchema taobao() {
  DatasetSchema s;
  s.name = "taobao";
  s.delimiter = ',';
  s.positive_label = "1";
  s.negative_label = "0";
  s.columns = {
      cat("pid", {"430539_1007", "430548_1007"}),
      cat("cms_group_id", numbered(0, 12)),
      cat("final_gender_code", {"1", "2"}),
      cat("age_level", numbered(0, 6)),
      cat("pvalue_level", {"1", "2", "3"}),
      cat("shopping_level", {"1", "2", "3"}),
      cat("occupation", {"0", "1"}),
      cat("new_user_class_level", numbered(1, 4)),
      // Desk-scale stand-ins for the long-tailed id columns.
      cat("cate_id", numbered(0, 79, "c")),
      cat("brand", numbered(0, 96, "b")),
      num("price", 4.3, 1.6),
      label("clk"),
  };
  return s;
}

ClusterSpec cluster(std::uint16_t id, std::vector<std::string> columns, std::vector<PartyIndex> members) {
  return {id, std::move(columns), std::move(members), {}};
}

}  // namespace

std::vector<std::string> builtin_dataset_names() { return {"banking", "adult", "taobao"}; }

DatasetSchema builtin_schema(std::string_view name) {
  if (name == "banking") return banking();
  if (name == "adult") return adult();
  if (name == "taobao") return taobao();
  throw Error(Errc::ConfigError, "unknown built-in dataset '" + std::string(name) + "' (banking, adult, taobao)");
}

PartitionSpec builtin_partition(std::string_view name) {
  PartitionSpec p;
  if (name == "banking") {
    p.active_columns = {"housing", "loan", "contact", "day", "month", "campaign", "pdays", "previous", "poutcome"};
    p.clusters = {cluster(1, {"default", "balance"}, {1, 2}),
                  cluster(2, {"age", "job", "marital", "education"}, {3, 4})};
  } else if (name == "adult") {
    p.active_columns = {"workclass", "occupation", "capital-gain", "capital-loss", "hours-per-week"};
    p.clusters = {cluster(1, {"race", "marital-status", "relationship", "age", "gender", "native-country"}, {1, 2}),
                  cluster(2, {"education"}, {3, 4})};
  } else if (name == "taobao") {
    p.active_columns = {"pid", "cms_group_id", "cate_id", "brand", "new_user_class_level", "price"};
    p.clusters = {cluster(1, {"final_gender_code", "age_level", "occupation"}, {1, 2}),
                  cluster(2, {"pvalue_level", "shopping_level"}, {3, 4})};
  } else {
    throw Error(Errc::ConfigError, "unknown built-in dataset '" + std::string(name) + "' (banking, adult, taobao)");
  }
  return p;
}

}  // namespace vflsa
