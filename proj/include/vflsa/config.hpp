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

#include <cstdint>
#include <optional>
#include <string>
#include <string_view>

#include "vflsa/model.hpp"

namespace vflsa {

enum class Mode { Secured, Plain };

std::string_view mode_name(Mode mode);
Mode parse_mode(std::string_view text);

// First-layer width used when the configuration leaves "hidden" unset: 128 for
// taobao, 64 otherwise.
std::size_t default_hidden(std::string_view dataset);

// Session configuration. JSON keys (all optional):
//
//   dataset           built-in schema/partition name: banking | adult | taobao
//   csv               real data file; synthetic rows are generated when empty
//   schema            schema JSON path (defaults to the built-in schema)
//   partition         partition JSON path or inline object (defaults to built-in)
//   synthetic_rows    rows generated when no csv is given
//   test_fraction     held-out share of the shuffled rows
//   num_passive       if present, must equal the partition's passive count
//   batch_size, lr, K, rounds, mode ("secured" | "plain"), seed, hidden
//   (default from default_hidden),
//   scale_bits, max_test_samples (0 = whole test split), log_messages,
//   entropy ("seeded" | "os"), pretrain {mode, hidden, epochs, lr}
//
// Unknown keys are rejected with Errc::ConfigError.
struct SessionConfig {
  std::string dataset = "banking";
  std::string csv;
  std::string schema;
  std::string partition_path;
  std::string partition_inline;  // JSON text of an inline partition object
  std::size_t synthetic_rows = 4000;
  double test_fraction = 0.2;
  std::optional<std::size_t> num_passive;

  std::size_t batch_size = 256;
  double lr = 0.01;
  std::uint32_t rotation_period = 5;  // K
  std::uint32_t rounds = 5;
  Mode mode = Mode::Secured;
  std::uint64_t seed = 0;
  std::size_t hidden = 64;
  int scale_bits = 24;
  std::size_t max_test_samples = 0;
  bool log_messages = false;
  bool os_entropy = false;
  PretrainConfig pretrain;

  // Errc::ConfigError for B < 1, K < 1, out-of-range fractions and the like.
  void validate() const;

  static SessionConfig from_json(std::string_view json_text);
  std::string to_json() const;
};

}  // namespace vflsa
