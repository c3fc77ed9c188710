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

#include <stdexcept>
#include <string>
#include <string_view>

namespace vflsa {

enum class Errc {
  // crypto
  InvalidPublicKey,
  AuthenticationFailed,
  // masking / fixed point
  RangeOverflow,
  LengthMismatch,
  MissingPeer,
  // model
  ShapeMismatch,
  EmptyDataset,
  // data
  ParseError,
  SchemaMismatch,
  OverlapError,
  CoverageError,
  // transport
  UnknownParty,
  ChannelClosed,
  MissingMessage,
  MalformedFrame,
  MissingBaseline,
  // protocol
  MissingContribution,
  SetupTimeout,
  ProtocolViolation,
  // bench
  MessageOutOfRange,
  // plumbing
  ConfigError,
  IoError,
};

std::string_view errc_name(Errc code) noexcept;

class Error : public std::runtime_error {
 public:
  Error(Errc code, const std::string& what)
      : std::runtime_error(std::string(errc_name(code)) + ": " + what), code_(code), detail_(what) {}

  Errc code() const noexcept { return code_; }
  // The message without the code name prefix.
  const std::string& detail() const noexcept { return detail_; }

 private:
  Errc code_;
  std::string detail_;
};

}  // namespace vflsa
