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

#include "test_util.hpp"
#include "vflsa/config.hpp"

using namespace vflsa;
using vflsa::testing::error_code_of;

TEST_CASE("defaults") {
  const auto c = SessionConfig::from_json("{}");
  CHECK(c.dataset == "banking");
  CHECK(c.batch_size == 256);
  CHECK(c.lr == 0.01);
  CHECK(c.rotation_period == 5);
  CHECK(c.mode == Mode::Secured);
  CHECK(c.hidden == 64);
  CHECK(c.scale_bits == 24);
  CHECK_FALSE(c.os_entropy);
}

TEST_CASE("hidden width follows the dataset unless set") {
  CHECK(default_hidden("taobao") == 128);
  CHECK(default_hidden("adult") == 64);
  CHECK(SessionConfig::from_json(R"({"dataset": "taobao"})").hidden == 128);
  CHECK(SessionConfig::from_json(R"({"dataset": "taobao", "hidden": 16})").hidden == 16);
}

TEST_CASE("round trip through JSON") {
  auto c = SessionConfig::from_json(R"({"dataset": "adult", "K": 3, "mode": "plain", "seed": 77,
                                        "entropy": "os", "pretrain": {"mode": "logistic-hidden", "hidden": 5}})");
  CHECK(c.rotation_period == 3);
  CHECK(c.mode == Mode::Plain);
  CHECK(c.os_entropy);
  CHECK(c.pretrain.mode == PretrainMode::LogisticHidden);
  const auto back = SessionConfig::from_json(c.to_json());
  CHECK(back.rotation_period == 3);
  CHECK(back.seed == 77);
  CHECK(back.pretrain.hidden == 5);
  CHECK(back.mode == Mode::Plain);
}

TEST_CASE("inline partition objects are kept as text") {
  const auto c = SessionConfig::from_json(R"({"partition": {"active_columns": ["a"], "clusters": []}})");
  CHECK(c.partition_path.empty());
  CHECK(c.partition_inline.find("active_columns") != std::string::npos);
}

TEST_CASE("invalid configurations") {
  for (const char* bad : {R"({"bogus": 1})", R"({"batch_size": 0})", R"({"K": 0})", R"({"test_fraction": 1.5})",
                          R"({"mode": "fast"})", R"({"entropy": "dice"})", R"({"pretrain": {"bogus": 1}})", "[1]",
                          "{", R"({"scale_bits": 70})", R"({"lr": -1})"}) {
    CAPTURE(bad);
    CHECK(error_code_of([&] { SessionConfig::from_json(bad); }) == Errc::ConfigError);
  }
  CHECK(error_code_of([] { parse_mode("fast"); }) == Errc::ConfigError);
  CHECK(parse_mode("secured") == Mode::Secured);
  CHECK(mode_name(Mode::Plain) == "plain");
}
