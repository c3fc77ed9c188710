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

#include "vflsa/error.hpp"

namespace vflsa {

std::string_view errc_name(Errc code) noexcept {
  switch (code) {
    case Errc::InvalidPublicKey: return "InvalidPublicKey";
    case Errc::AuthenticationFailed: return "AuthenticationFailed";
    case Errc::RangeOverflow: return "RangeOverflow";
    case Errc::LengthMismatch: return "LengthMismatch";
    case Errc::MissingPeer: return "MissingPeer";
    case Errc::ShapeMismatch: return "ShapeMismatch";
    case Errc::EmptyDataset: return "EmptyDataset";
    case Errc::ParseError: return "ParseError";
    case Errc::SchemaMismatch: return "SchemaMismatch";
    case Errc::OverlapError: return "OverlapError";
    case Errc::CoverageError: return "CoverageError";
    case Errc::UnknownParty: return "UnknownParty";
    case Errc::ChannelClosed: return "ChannelClosed";
    case Errc::MissingMessage: return "MissingMessage";
    case Errc::MalformedFrame: return "MalformedFrame";
    case Errc::MissingBaseline: return "MissingBaseline";
    case Errc::MissingContribution: return "MissingContribution";
    case Errc::SetupTimeout: return "SetupTimeout";
    case Errc::ProtocolViolation: return "ProtocolViolation";
    case Errc::MessageOutOfRange: return "MessageOutOfRange";
    case Errc::ConfigError: return "ConfigError";
    case Errc::IoError: return "IoError";
  }
  return "Unknown";
}

}  // namespace vflsa
