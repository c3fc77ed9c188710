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

#include "vflsa/config.hpp"

#include <algorithm>
#include <json.hpp>

#include "vflsa/error.hpp"

namespace vflsa {

using nlohmann::json;

std::string_view mode_name(Mode mode) { return mode == Mode::Secured ? "secured" : "plain"; }

std::size_t default_hidden(std::string_view dataset) { return dataset == "taobao" ? 128 : 64; }

Mode parse_mode(std::string_view text) {
  if (text == "secured") return Mode::Secured;
  if (text == "plain") return Mode::Plain;
  throw Error(Errc::ConfigError, "mode must be 'secured' or 'plain', got '" + std::string(text) + "'");
}

namespace {

std::string_view pretrain_mode_name(PretrainMode m) {
  return m == PretrainMode::Identity ? "identity" : "logistic-hidden";
}

PretrainMode parse_pretrain_mode(const std::string& s) {
  if (s == "identity") return PretrainMode::Identity;
  if (s == "logistic-hidden") return PretrainMode::LogisticHidden;
  throw Error(Errc::ConfigError, "pretrain.mode must be 'identity' or 'logistic-hidden', got '" + s + "'");
}

template <class T>
T get(const json& j, const char* key, T fallback) {
  if (!j.contains(key) || j.at(key).is_null()) return fallback;
  try {
    return j.at(key).get<T>();
  } catch (const json::exception& e) {
    throw Error(Errc::ConfigError, std::string("key '") + key + "': " + e.what());
  }
}

}  // namespace

void SessionConfig::validate() const {
  auto fail = [](const std::string& what) { throw Error(Errc::ConfigError, what); };
  if (batch_size < 1) fail("batch_size must be >= 1");
  if (batch_size > 0xFFFF) fail("batch_size must fit the 16-bit nonce position field (<= 65535)");
  if (rotation_period < 1) fail("K must be >= 1");
  if (!(lr > 0.0)) fail("lr must be positive");
  if (hidden < 1) fail("hidden must be >= 1");
  if (scale_bits < 1 || scale_bits > 48) fail("scale_bits must be in [1, 48]");
  if (!(test_fraction >= 0.0 && test_fraction < 1.0)) fail("test_fraction must be in [0, 1)");
  if (csv.empty() && synthetic_rows < 1) fail("synthetic_rows must be >= 1");
  if (pretrain.hidden < 1 || pretrain.epochs < 0) fail("pretrain.hidden must be >= 1 and pretrain.epochs >= 0");
  if (!partition_path.empty() && !partition_inline.empty()) fail("partition given twice");
}

SessionConfig SessionConfig::from_json(std::string_view json_text) {
  json j;
  try {
    j = json::parse(json_text);
  } catch (const json::exception& e) {
    throw Error(Errc::ConfigError, std::string("config is not valid JSON: ") + e.what());
  }
  if (!j.is_object()) throw Error(Errc::ConfigError, "config must be a JSON object");
  static const char* kKeys[] = {"dataset", "csv", "schema", "partition", "synthetic_rows", "test_fraction",
                                "num_passive", "batch_size", "lr", "K", "rounds", "mode", "seed", "hidden",
                                "scale_bits", "max_test_samples", "log_messages", "entropy", "pretrain"};
  for (const auto& [key, value] : j.items()) {
    if (std::find(std::begin(kKeys), std::end(kKeys), key) == std::end(kKeys)) {
      throw Error(Errc::ConfigError, "unknown config key '" + key + "'");
    }
  }

  SessionConfig c;
  c.dataset = get<std::string>(j, "dataset", c.dataset);
  c.csv = get<std::string>(j, "csv", "");
  c.schema = get<std::string>(j, "schema", "");
  if (j.contains("partition") && !j.at("partition").is_null()) {
    if (j.at("partition").is_string()) c.partition_path = j.at("partition").get<std::string>();
    else if (j.at("partition").is_object()) c.partition_inline = j.at("partition").dump();
    else throw Error(Errc::ConfigError, "partition must be a path or an object");
  }
  c.synthetic_rows = get<std::size_t>(j, "synthetic_rows", c.synthetic_rows);
  c.test_fraction = get<double>(j, "test_fraction", c.test_fraction);
  if (j.contains("num_passive") && !j.at("num_passive").is_null()) c.num_passive = get<std::size_t>(j, "num_passive", 0);
  c.batch_size = get<std::size_t>(j, "batch_size", c.batch_size);
  c.lr = get<double>(j, "lr", c.lr);
  c.rotation_period = get<std::uint32_t>(j, "K", c.rotation_period);
  c.rounds = get<std::uint32_t>(j, "rounds", c.rounds);
  c.mode = parse_mode(get<std::string>(j, "mode", "secured"));
  c.seed = get<std::uint64_t>(j, "seed", c.seed);
  c.hidden = get<std::size_t>(j, "hidden", default_hidden(c.dataset));
  c.scale_bits = get<int>(j, "scale_bits", c.scale_bits);
  c.max_test_samples = get<std::size_t>(j, "max_test_samples", c.max_test_samples);
  c.log_messages = get<bool>(j, "log_messages", c.log_messages);
  const auto entropy = get<std::string>(j, "entropy", "seeded");
  if (entropy != "seeded" && entropy != "os") throw Error(Errc::ConfigError, "entropy must be 'seeded' or 'os'");
  c.os_entropy = entropy == "os";
  if (j.contains("pretrain")) {
    const json& p = j.at("pretrain");
    for (const auto& [key, value] : p.items()) {
      if (key != "mode" && key != "hidden" && key != "epochs" && key != "lr") {
        throw Error(Errc::ConfigError, "unknown config key 'pretrain." + key + "'");
      }
    }
    c.pretrain.mode = parse_pretrain_mode(get<std::string>(p, "mode", "identity"));
    c.pretrain.hidden = get<int>(p, "hidden", c.pretrain.hidden);
    c.pretrain.epochs = get<int>(p, "epochs", c.pretrain.epochs);
    c.pretrain.lr = get<double>(p, "lr", c.pretrain.lr);
  }
  c.validate();
  return c;
}

std::string SessionConfig::to_json() const {
  json j = {{"dataset", dataset},
            {"csv", csv.empty() ? json(nullptr) : json(csv)},
            {"schema", schema.empty() ? json(nullptr) : json(schema)},
            {"synthetic_rows", synthetic_rows},
            {"test_fraction", test_fraction},
            {"batch_size", batch_size},
            {"lr", lr},
            {"K", rotation_period},
            {"rounds", rounds},
            {"mode", mode_name(mode)},
            {"seed", seed},
            {"hidden", hidden},
            {"scale_bits", scale_bits},
            {"max_test_samples", max_test_samples},
            {"log_messages", log_messages},
            {"entropy", os_entropy ? "os" : "seeded"},
            {"pretrain",
             {{"mode", pretrain_mode_name(pretrain.mode)},
              {"hidden", pretrain.hidden},
              {"epochs", pretrain.epochs},
              {"lr", pretrain.lr}}}};
  if (!partition_path.empty()) j["partition"] = partition_path;
  else if (!partition_inline.empty()) j["partition"] = json::parse(partition_inline);
  else j["partition"] = nullptr;
  if (num_passive) j["num_passive"] = *num_passive;
  return j.dump(2);
}

}  // namespace vflsa
