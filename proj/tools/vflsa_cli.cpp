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

// vflsa: command-line front end over the C interface.
//
// Exit codes: 0 success, 1 internal error, 2 configuration / data / io error,
// 3 protocol, crypto or numeric failure at run time.
//
// Log verbosity comes from VFLSA_LOG (quiet | info | debug; default info).

#include <CLI11.hpp>
#include <cmath>
#include <cstdio>
#include <cstdlib>
#include <filesystem>
#include <fstream>
#include <iostream>
#include <json.hpp>
#include <sstream>
#include <string>
#include <vector>

#include "vflsa/vflsa.h"

namespace fs = std::filesystem;
using nlohmann::json;

namespace {

constexpr int kExitOk = 0;
constexpr int kExitInternal = 1;
constexpr int kExitConfig = 2;
constexpr int kExitRuntime = 3;

int verbosity() {
  const char* v = std::getenv("VFLSA_LOG");
  if (!v) return 1;
  const std::string s(v);
  if (s == "quiet") return 0;
  if (s == "debug") return 2;
  return 1;
}

void info(const std::string& msg) {
  if (verbosity() >= 1) std::cerr << "vflsa: " << msg << "\n";
}

struct Failure {
  int exit_code;
  std::string message;
};

int exit_code_for(vfl_status s) {
  switch (s) {
    case VFL_OK: return kExitOk;
    case VFL_ERR_CONFIG:
    case VFL_ERR_DATA:
    case VFL_ERR_IO: return kExitConfig;
    case VFL_ERR_PROTOCOL:
    case VFL_ERR_CRYPTO:
    case VFL_ERR_NUMERIC: return kExitRuntime;
    default: return kExitInternal;
  }
}

void check(vfl_status s) {
  if (s != VFL_OK) throw Failure{exit_code_for(s), vfl_last_error()};
}

struct Session {
  vfl_session* s = nullptr;
  explicit Session(const std::string& config) { check(vfl_session_create(config.c_str(), &s)); }
  ~Session() { vfl_session_destroy(s); }
  Session(const Session&) = delete;
  Session& operator=(const Session&) = delete;

  std::string resolved() const {
    const std::size_t n = vfl_session_resolved_config(s, nullptr, 0);
    std::string out(n, '\0');
    vfl_session_resolved_config(s, out.data(), n);
    out.resize(n ? n - 1 : 0);
    return out;
  }
};

// Options shared by the session-based subcommands.
struct Common {
  std::string config_path;
  std::string out_dir = "out";
  std::vector<std::string> overrides;
  std::string dataset, mode, csv;
  long long seed = -1;
  long long rounds = -1;
  long long batch_size = -1;
  long long rotation = -1;
  double lr = -1.0;
  bool trace = false;
};

json parse_value(const std::string& text) {
  try {
    return json::parse(text);
  } catch (const json::exception&) {
    return json(text);
  }
}

// Config file, then flags, then --set overrides; later sources win.
json resolve_config(const Common& c) {
  json j = json::object();
  if (!c.config_path.empty()) {
    std::ifstream in(c.config_path);
    if (!in) throw Failure{kExitConfig, "cannot read config file " + c.config_path};
    try {
      j = json::parse(in);
    } catch (const json::exception& e) {
      throw Failure{kExitConfig, "config file " + c.config_path + " is not valid JSON: " + e.what()};
    }
    if (!j.is_object()) throw Failure{kExitConfig, "config file must hold a JSON object"};
  }
  if (!c.dataset.empty()) j["dataset"] = c.dataset;
  if (!c.mode.empty()) j["mode"] = c.mode;
  if (!c.csv.empty()) j["csv"] = c.csv;
  if (c.seed >= 0) j["seed"] = c.seed;
  if (c.rounds >= 0) j["rounds"] = c.rounds;
  if (c.batch_size >= 0) j["batch_size"] = c.batch_size;
  if (c.rotation >= 0) j["K"] = c.rotation;
  if (c.lr > 0.0) j["lr"] = c.lr;
  if (c.trace) j["log_messages"] = true;
  for (const auto& kv : c.overrides) {
    const auto eq = kv.find('=');
    if (eq == std::string::npos || eq == 0) throw Failure{kExitConfig, "override '" + kv + "' is not key=value"};
    const std::string key = kv.substr(0, eq);
    json* node = &j;
    std::size_t start = 0;
    for (std::size_t dot; (dot = key.find('.', start)) != std::string::npos; start = dot + 1) {
      node = &(*node)[key.substr(start, dot - start)];
      if (!node->is_object()) *node = json::object();
    }
    (*node)[key.substr(start)] = parse_value(kv.substr(eq + 1));
  }
  if (j.contains("csv") && j["csv"].is_string()) {
    const std::string path = j["csv"];
    if (!path.empty() && !fs::exists(path)) {
      throw Failure{kExitConfig, "dataset file '" + path + "' does not exist; pass an existing csv or drop the key "
                                 "to use synthetic rows"};
    }
  }
  return j;
}

void write_text(const fs::path& p, const std::string& text) {
  std::ofstream out(p, std::ios::binary);
  if (!out) throw Failure{kExitConfig, "cannot write " + p.string()};
  out << text;
}

void write_manifest(const fs::path& dir, const std::string& command, const json& config, int argc, char** argv,
                    const json& extra = json::object()) {
  json argv_j = json::array();
  for (int i = 0; i < argc; ++i) argv_j.push_back(argv[i]);
  json m = {{"command", command},
            {"argv", argv_j},
            {"library_version", vfl_version()},
            {"config", config},
            {"seed", config.contains("seed") ? config["seed"] : json(0)}};
  for (auto it = extra.begin(); it != extra.end(); ++it) m[it.key()] = it.value();
  write_text(dir / "manifest.json", m.dump(2) + "\n");
}

fs::path prepare_out(const std::string& dir) {
  std::error_code ec;
  fs::create_directories(dir, ec);
  if (ec) throw Failure{kExitConfig, "cannot create output directory " + dir + ": " + ec.message()};
  return fs::path(dir);
}

std::string fmt(double v, const char* f = "%.9g") {
  char buf[64];
  std::snprintf(buf, sizeof buf, f, v);
  return buf;
}

void add_common(CLI::App* app, Common& c, bool session_flags) {
  app->add_option("-c,--config", c.config_path, "JSON session configuration");
  app->add_option("-o,--out", c.out_dir, "output directory")->capture_default_str();
  app->add_option("--seed", c.seed, "session seed");
  app->add_option("--set", c.overrides, "override a config key, dotted.key=value (repeatable)");
  if (!session_flags) return;
  app->add_option("--dataset", c.dataset, "built-in dataset shape: banking | adult | taobao");
  app->add_option("--csv", c.csv, "real data file (synthetic rows otherwise)");
  app->add_option("--mode", c.mode, "secured | plain");
  app->add_option("--rounds", c.rounds, "training rounds");
  app->add_option("--batch-size", c.batch_size, "batch size B");
  app->add_option("-K,--rotation", c.rotation, "key rotation period in rounds");
  app->add_option("--lr", c.lr, "learning rate");
}

int cmd_setup_check(const Common& c, int argc, char** argv) {
  const json cfg = resolve_config(c);
  Session s(cfg.dump());
  std::size_t pairs = 0;
  check(vfl_session_setup_check(s.s, &pairs));
  vfl_session_info si{};
  check(vfl_session_info_get(s.s, &si));
  const fs::path out = prepare_out(c.out_dir);
  write_manifest(out, "setup-check", json::parse(s.resolved()), argc, argv, {{"pairs", pairs}});
  std::cout << "setup ok: " << si.num_clients << " clients, " << pairs << " pairwise secrets\n";
  return kExitOk;
}

int cmd_train(const Common& c, bool metrics, const std::string& checkpoint, int argc, char** argv) {
  json cfg = resolve_config(c);
  Session s(cfg.dump());
  const json resolved = json::parse(s.resolved());
  const std::uint32_t rounds = resolved["rounds"];
  const fs::path out = prepare_out(c.out_dir);

  std::vector<double> losses(rounds);
  info("training " + std::to_string(rounds) + " rounds in " + resolved["mode"].get<std::string>() + " mode");
  check(vfl_session_train(s.s, rounds, losses.data()));
  std::string csv = "round,loss\n";
  for (std::uint32_t r = 0; r < rounds; ++r) csv += std::to_string(r) + "," + fmt(losses[r]) + "\n";
  write_text(out / "losses.csv", csv);

  const std::string prefix = checkpoint.empty() ? (out / "model").string() : checkpoint;
  check(vfl_session_save_checkpoint(s.s, prefix.c_str()));
  if (resolved["log_messages"].get<bool>()) check(vfl_session_write_trace(s.s, (out / "trace.jsonl").c_str()));

  if (metrics) {
    json plain = resolved;
    plain["mode"] = "plain";
    plain["log_messages"] = false;
    Session base(plain.dump());
    check(vfl_session_train(base.s, rounds, nullptr));
    check(vfl_session_write_metrics(s.s, base.s, (out / "metrics.csv").c_str()));
  }
  write_manifest(out, "train", resolved, argc, argv, {{"checkpoint", prefix}});
  for (std::uint32_t r = 0; r < rounds; ++r) std::cout << "round " << r << " loss " << fmt(losses[r], "%.6f") << "\n";
  return kExitOk;
}

int cmd_test(const Common& c, const std::string& checkpoint, int argc, char** argv) {
  json cfg = resolve_config(c);
  Session s(cfg.dump());
  const json resolved = json::parse(s.resolved());
  const fs::path out = prepare_out(c.out_dir);
  if (!checkpoint.empty()) {
    check(vfl_session_load_checkpoint(s.s, checkpoint.c_str()));
  } else {
    const std::uint32_t rounds = resolved["rounds"];
    info("no checkpoint given; training " + std::to_string(rounds) + " rounds first");
    check(vfl_session_train(s.s, rounds, nullptr));
  }
  vfl_test_result r{};
  check(vfl_session_test(s.s, (out / "predictions.csv").c_str(), &r));
  const json summary = {{"samples", r.count},
                        {"accuracy", std::isnan(r.accuracy) ? json(nullptr) : json(r.accuracy)},
                        {"auc", std::isnan(r.auc) ? json(nullptr) : json(r.auc)},
                        {"setup_phases", r.setup_phases}};
  write_text(out / "test.json", summary.dump(2) + "\n");
  if (resolved["log_messages"].get<bool>()) check(vfl_session_write_trace(s.s, (out / "trace.jsonl").c_str()));
  write_manifest(out, "test", resolved, argc, argv, {{"checkpoint", checkpoint}});
  std::cout << "test samples " << r.count << " accuracy " << fmt(r.accuracy, "%.4f") << " auc "
            << fmt(r.auc, "%.4f") << "\n";
  return kExitOk;
}

int cmd_bench(const Common& c, int reps, int rounds, int argc, char** argv) {
  json cfg = resolve_config(c);
  {
    Session probe(cfg.dump());  // validates before the long run
    cfg = json::parse(probe.resolved());
  }
  const fs::path out = prepare_out(c.out_dir);
  info("overhead suite: " + std::to_string(reps) + " repetitions of " + std::to_string(rounds) + " rounds");
  check(vfl_run_overhead_suite(cfg.dump().c_str(), reps, static_cast<std::uint32_t>(rounds),
                               (out / "table1_cpu.csv").c_str(), (out / "table2_bytes.csv").c_str()));
  write_manifest(out, "bench", cfg, argc, argv, {{"repetitions", reps}, {"rounds", rounds}});
  std::cout << "wrote " << (out / "table1_cpu.csv").string() << " and " << (out / "table2_bytes.csv").string()
            << "\n";
  return kExitOk;
}

std::vector<std::size_t> parse_sizes(const std::string& text) {
  std::vector<std::size_t> out;
  std::stringstream ss(text);
  std::string item;
  while (std::getline(ss, item, ',')) {
    try {
      std::size_t pos = 0;
      const long long v = std::stoll(item, &pos);
      if (pos != item.size() || v <= 0) throw std::invalid_argument(item);
      out.push_back(static_cast<std::size_t>(v));
    } catch (const std::exception&) {
      throw Failure{kExitConfig, "batch size '" + item + "' is not a positive integer"};
    }
  }
  if (out.empty()) throw Failure{kExitConfig, "no batch sizes given"};
  return out;
}

int cmd_ablate(const Common& c, const std::string& sizes_text, int reps, unsigned key_bits, int argc, char** argv) {
  const auto sizes = parse_sizes(sizes_text);
  const fs::path out = prepare_out(c.out_dir);
  const std::uint64_t seed = c.seed >= 0 ? static_cast<std::uint64_t>(c.seed) : 0;
  double min_speedup = 0.0;
  int oracle_ok = 0;
  info("ablation over " + sizes_text + " with " + std::to_string(key_bits) + "-bit keys");
  check(vfl_run_ablation(sizes.data(), sizes.size(), reps, key_bits, seed, (out / "ablation.csv").c_str(),
                         (out / "ablation.dat").c_str(), &min_speedup, &oracle_ok));
  write_manifest(out, "ablate", json{{"seed", seed}}, argc, argv,
                 {{"batch_sizes", sizes}, {"repetitions", reps}, {"key_bits", key_bits},
                  {"min_speedup", min_speedup}, {"oracle_ok", oracle_ok == 1}});
  std::cout << "min speedup " << fmt(min_speedup, "%.1f") << ", oracle " << (oracle_ok ? "ok" : "MISMATCH")
            << "\n";
  return oracle_ok ? kExitOk : kExitRuntime;
}

int cmd_gen_data(const Common& c, const std::string& dataset, std::size_t rows, int argc, char** argv) {
  const fs::path out = prepare_out(c.out_dir);
  const std::uint64_t seed = c.seed >= 0 ? static_cast<std::uint64_t>(c.seed) : 0;
  const fs::path csv = out / (dataset + ".csv");
  check(vfl_generate_dataset(dataset.c_str(), rows, seed, csv.c_str(), (out / (dataset + ".schema.json")).c_str(),
                             (out / (dataset + ".partition.json")).c_str()));
  write_manifest(out, "gen-data", json{{"dataset", dataset}, {"seed", seed}}, argc, argv, {{"rows", rows}});
  std::cout << "wrote " << rows << " rows to " << csv.string() << "\n";
  return kExitOk;
}

}  // namespace

int main(int argc, char** argv) {
  CLI::App app{"Vertical federated learning with secure aggregation"};
  app.require_subcommand(1);
  app.set_version_flag("--version", std::string(vfl_version()));

  Common setup_c, train_c, test_c, bench_c, ablate_c, gen_c;
  auto* setup = app.add_subcommand("setup-check", "run one key-agreement phase and report the pair count");
  add_common(setup, setup_c, true);

  auto* train = app.add_subcommand("train", "train and write checkpoint, losses, trace and metrics");
  add_common(train, train_c, true);
  bool no_metrics = false;
  std::string train_ckpt;
  train->add_flag("--no-metrics", no_metrics, "skip the plain-mode baseline run and metrics.csv");
  train->add_flag("--trace", train_c.trace, "record the message log to trace.jsonl");
  train->add_option("--checkpoint", train_ckpt, "checkpoint prefix (default <out>/model)");

  auto* test = app.add_subcommand("test", "masked inference over the test split");
  add_common(test, test_c, true);
  std::string test_ckpt;
  test->add_option("--checkpoint", test_ckpt, "checkpoint prefix to load (trains first when absent)");
  test->add_flag("--trace", test_c.trace, "record the message log to trace.jsonl");

  auto* bench = app.add_subcommand("bench", "secured vs plain overhead tables");
  add_common(bench, bench_c, true);
  int bench_reps = 10;
  int bench_rounds = 5;
  bench->add_option("--reps", bench_reps, "repetitions")->capture_default_str()->check(CLI::PositiveNumber);
  bench->add_option("--train-rounds", bench_rounds, "training rounds per repetition")
      ->capture_default_str()
      ->check(CLI::PositiveNumber);

  auto* ablate = app.add_subcommand("ablate", "masked vs Paillier dot-product timing");
  add_common(ablate, ablate_c, false);
  std::string sizes = "16,64,256";
  int ablate_reps = 10;
  unsigned key_bits = 1024;
  ablate->add_option("--batch-sizes", sizes, "comma-separated batch sizes")->capture_default_str();
  ablate->add_option("--reps", ablate_reps, "repetitions")->capture_default_str()->check(CLI::PositiveNumber);
  ablate->add_option("--key-bits", key_bits, "Paillier modulus size")->capture_default_str();

  auto* gen = app.add_subcommand("gen-data", "write synthetic rows for a built-in dataset shape");
  add_common(gen, gen_c, false);
  std::string gen_dataset = "banking";
  std::size_t gen_rows = 4000;
  gen->add_option("--dataset", gen_dataset, "banking | adult | taobao")->capture_default_str();
  gen->add_option("--rows", gen_rows, "row count")->capture_default_str()->check(CLI::PositiveNumber);

  try {
    app.parse(argc, argv);
  } catch (const CLI::ParseError& e) {
    const int rc = app.exit(e);
    return rc == 0 ? kExitOk : kExitConfig;
  }

  try {
    if (*setup) return cmd_setup_check(setup_c, argc, argv);
    if (*train) return cmd_train(train_c, !no_metrics, train_ckpt, argc, argv);
    if (*test) return cmd_test(test_c, test_ckpt, argc, argv);
    if (*bench) return cmd_bench(bench_c, bench_reps, bench_rounds, argc, argv);
    if (*ablate) return cmd_ablate(ablate_c, sizes, ablate_reps, key_bits, argc, argv);
    if (*gen) return cmd_gen_data(gen_c, gen_dataset, gen_rows, argc, argv);
  } catch (const Failure& f) {
    std::cerr << "vflsa: error: " << f.message << "\n";
    return f.exit_code;
  } catch (const std::exception& e) {
    std::cerr << "vflsa: internal error: " << e.what() << "\n";
    return kExitInternal;
  }
  return kExitInternal;
}
