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

#include "vflsa/vflsa.h"

#include <algorithm>
#include <cstdio>
#include <cstring>
#include <fstream>
#include <memory>
#include <optional>
#include <string>

#include "vflsa/bench.hpp"
#include "vflsa/error.hpp"
#include "vflsa/protocol.hpp"

struct vfl_session {
  std::unique_ptr<vflsa::Session> session;
};

namespace {

thread_local std::string g_last_error;
thread_local std::string g_last_code;

vfl_status status_of(vflsa::Errc code) {
  using vflsa::Errc;
  switch (code) {
    case Errc::ConfigError:
    case Errc::MissingBaseline:
      return VFL_ERR_CONFIG;
    case Errc::EmptyDataset:
    case Errc::ParseError:
    case Errc::SchemaMismatch:
    case Errc::OverlapError:
    case Errc::CoverageError:
      return VFL_ERR_DATA;
    case Errc::IoError:
      return VFL_ERR_IO;
    case Errc::UnknownParty:
    case Errc::ChannelClosed:
    case Errc::MissingMessage:
    case Errc::MalformedFrame:
    case Errc::MissingContribution:
    case Errc::SetupTimeout:
    case Errc::ProtocolViolation:
    case Errc::MissingPeer:
      return VFL_ERR_PROTOCOL;
    case Errc::InvalidPublicKey:
    case Errc::AuthenticationFailed:
    case Errc::MessageOutOfRange:
      return VFL_ERR_CRYPTO;
    case Errc::RangeOverflow:
    case Errc::LengthMismatch:
    case Errc::ShapeMismatch:
      return VFL_ERR_NUMERIC;
  }
  return VFL_ERR_INTERNAL;
}

vfl_status fail(vfl_status status, const std::string& code, const std::string& what) {
  g_last_code = code;
  g_last_error = what;
  return status;
}

template <class F>
vfl_status guarded(F&& f) {
  g_last_error.clear();
  g_last_code.clear();
  try {
    f();
    return VFL_OK;
  } catch (const vflsa::Error& e) {
    return fail(status_of(e.code()), std::string(vflsa::errc_name(e.code())), e.what());
  } catch (const std::exception& e) {
    return fail(VFL_ERR_INTERNAL, "Internal", e.what());
  } catch (...) {
    return fail(VFL_ERR_INTERNAL, "Internal", "unknown exception");
  }
}

void require(bool ok, const char* what) {
  if (!ok) throw vflsa::Error(vflsa::Errc::ConfigError, what);
}

void write_file(const char* path, const std::string& text) {
  std::ofstream out(path, std::ios::binary);
  if (!out) throw vflsa::Error(vflsa::Errc::IoError, std::string("cannot write ") + path);
  out << text;
  if (!out) throw vflsa::Error(vflsa::Errc::IoError, std::string("short write to ") + path);
}

vflsa::SessionConfig parse_config(const char* json) {
  return json ? vflsa::SessionConfig::from_json(json) : vflsa::SessionConfig{};
}

}  // namespace

extern "C" {

const char* vfl_version(void) { return "0.3.0"; }

const char* vfl_status_name(vfl_status status) {
  switch (status) {
    case VFL_OK: return "ok";
    case VFL_ERR_CONFIG: return "config error";
    case VFL_ERR_DATA: return "data error";
    case VFL_ERR_IO: return "io error";
    case VFL_ERR_PROTOCOL: return "protocol error";
    case VFL_ERR_CRYPTO: return "crypto error";
    case VFL_ERR_NUMERIC: return "numeric error";
    case VFL_ERR_INTERNAL: return "internal error";
  }
  return "unknown status";
}

const char* vfl_last_error(void) { return g_last_error.c_str(); }
const char* vfl_last_error_code(void) { return g_last_code.c_str(); }

vfl_status vfl_session_create(const char* config_json, vfl_session** out) {
  return guarded([&] {
    require(out != nullptr, "out must not be NULL");
    *out = nullptr;
    auto s = std::make_unique<vfl_session>();
    s->session = std::make_unique<vflsa::Session>(parse_config(config_json));
    *out = s.release();
  });
}

void vfl_session_destroy(vfl_session* session) { delete session; }

vfl_status vfl_session_info_get(const vfl_session* session, vfl_session_info* out) {
  return guarded([&] {
    require(session && out, "session and out must not be NULL");
    const auto& s = *session->session;
    out->num_clients = 1 + s.passives().size();
    out->setup_phases = s.setup_phases_run();
    out->next_round = s.next_round();
    out->epoch = s.current_epoch();
    out->input_width = s.layout().input_width();
    out->hidden = s.layout().hidden;
    out->train_samples = s.data().train_ids.size();
    out->test_samples = s.data().test_ids.size();
  });
}

vfl_status vfl_session_setup_check(vfl_session* session, size_t* pairs) {
  return guarded([&] {
    require(session != nullptr, "session must not be NULL");
    const std::size_t n = session->session->run_setup_phase();
    if (pairs) *pairs = n;
  });
}

vfl_status vfl_session_train(vfl_session* session, uint32_t rounds, double* losses) {
  return guarded([&] {
    require(session != nullptr, "session must not be NULL");
    for (uint32_t i = 0; i < rounds; ++i) {
      const auto rep = session->session->run_training_round();
      if (losses) losses[i] = rep.loss;
    }
  });
}

vfl_status vfl_session_test(vfl_session* session, const char* predictions_csv, vfl_test_result* out) {
  return guarded([&] {
    require(session != nullptr, "session must not be NULL");
    auto& s = *session->session;
    const auto rep = s.run_testing_phase();
    if (out) *out = vfl_test_result{rep.ids.size(), rep.accuracy, rep.auc, rep.setup_phases};
    if (predictions_csv) {
      const vflsa::Vector y = s.active().labels_for(rep.ids);
      std::string text = "id,probability,decision,label\n";
      char buf[96];
      for (std::size_t k = 0; k < rep.ids.size(); ++k) {
        std::snprintf(buf, sizeof buf, "%llu,%.9f,%u,%d\n", static_cast<unsigned long long>(rep.ids[k]),
                      rep.probabilities[k], static_cast<unsigned>(rep.decisions[k]),
                      y(static_cast<Eigen::Index>(k)) > 0.5 ? 1 : 0);
        text += buf;
      }
      write_file(predictions_csv, text);
    }
  });
}

vfl_status vfl_session_save_checkpoint(vfl_session* session, const char* prefix) {
  return guarded([&] {
    require(session && prefix, "session and prefix must not be NULL");
    vflsa::save_checkpoint(prefix, session->session->checkpoint());
  });
}

vfl_status vfl_session_load_checkpoint(vfl_session* session, const char* prefix) {
  return guarded([&] {
    require(session && prefix, "session and prefix must not be NULL");
    session->session->restore(vflsa::load_checkpoint(prefix));
  });
}

vfl_status vfl_session_write_trace(vfl_session* session, const char* path) {
  return guarded([&] {
    require(session && path, "session and path must not be NULL");
    require(session->session->config().log_messages, "message logging is off; set log_messages to true");
    const auto log = session->session->network().log();
    write_file(path, vflsa::log_to_jsonl(log));
  });
}

vfl_status vfl_session_write_metrics(vfl_session* session, const vfl_session* baseline, const char* path) {
  return guarded([&] {
    require(session && path, "session and path must not be NULL");
    const auto run = session->session->metrics();
    std::optional<vflsa::SessionMetrics> base;
    if (baseline) base = baseline->session->metrics();
    const auto rows = vflsa::snapshot_metrics(run, base ? &*base : nullptr);
    write_file(path, vflsa::metrics_to_csv(rows));
  });
}

size_t vfl_session_resolved_config(const vfl_session* session, char* buffer, size_t capacity) {
  if (!session) return 0;
  const std::string text = session->session->config().to_json();
  if (buffer && capacity > 0) {
    const std::size_t n = std::min(capacity - 1, text.size());
    std::memcpy(buffer, text.data(), n);
    buffer[n] = '\0';
  }
  return text.size() + 1;
}

vfl_status vfl_run_overhead_suite(const char* config_json, int repetitions, uint32_t rounds, const char* table1_csv,
                                  const char* table2_csv) {
  return guarded([&] {
    require(table1_csv && table2_csv, "output paths must not be NULL");
    vflsa::OverheadOptions o;
    o.config = parse_config(config_json);
    o.repetitions = repetitions;
    o.rounds = rounds;
    const auto report = vflsa::run_overhead_suite(o);
    write_file(table1_csv, report.table1_csv());
    write_file(table2_csv, report.table2_csv());
  });
}

vfl_status vfl_run_ablation(const size_t* batch_sizes, size_t count, int repetitions, unsigned key_bits,
                            uint64_t seed, const char* csv_path, const char* gnuplot_path, double* min_speedup,
                            int* oracle_ok) {
  return guarded([&] {
    require(csv_path != nullptr, "csv_path must not be NULL");
    require(batch_sizes != nullptr && count > 0, "at least one batch size is required");
    vflsa::AblationOptions o;
    o.batch_sizes.assign(batch_sizes, batch_sizes + count);
    for (std::size_t b : o.batch_sizes) require(b > 0, "batch sizes must be positive");
    o.repetitions = repetitions;
    o.key_bits = key_bits;
    o.seed = seed;
    const auto report = vflsa::run_ablation(o);
    write_file(csv_path, report.to_csv());
    if (gnuplot_path) write_file(gnuplot_path, report.to_gnuplot());
    if (min_speedup) *min_speedup = report.min_speedup();
    if (oracle_ok) *oracle_ok = report.oracle_ok() ? 1 : 0;
  });
}

vfl_status vfl_generate_dataset(const char* dataset, size_t rows, uint64_t seed, const char* csv_path,
                                const char* schema_path, const char* partition_path) {
  return guarded([&] {
    require(dataset && csv_path, "dataset and csv_path must not be NULL");
    require(rows > 0, "rows must be positive");
    const auto schema = vflsa::builtin_schema(dataset);
    vflsa::write_csv(csv_path, vflsa::synth_generate(rows, schema, seed), schema);
    if (schema_path) write_file(schema_path, vflsa::schema_to_json(schema));
    if (partition_path) write_file(partition_path, vflsa::partition_to_json(vflsa::builtin_partition(dataset)));
  });
}

vfl_status vfl_fx_encode(double x, int scale_bits, uint64_t* out) {
  return guarded([&] {
    require(out != nullptr, "out must not be NULL");
    require(scale_bits >= 1 && scale_bits <= 48, "scale_bits must be in [1, 48]");
    *out = vflsa::FixedPointCodec{scale_bits, 64}.encode(x).value;
  });
}

vfl_status vfl_fx_decode(uint64_t x, int scale_bits, double* out) {
  return guarded([&] {
    require(out != nullptr, "out must not be NULL");
    require(scale_bits >= 1 && scale_bits <= 48, "scale_bits must be in [1, 48]");
    *out = vflsa::FixedPointCodec{scale_bits, 64}.decode(vflsa::RingElement(x));
  });
}

vfl_status vfl_prg_expand(const uint8_t seed[32], size_t count, uint64_t* out) {
  return guarded([&] {
    require(seed && (out || count == 0), "seed and out must not be NULL");
    vflsa::Key32 key;
    std::memcpy(key.data(), seed, key.size());
    const auto v = vflsa::prg_expand(key, count);
    for (std::size_t i = 0; i < count; ++i) out[i] = v[i].value;
  });
}

}  // extern "C"
