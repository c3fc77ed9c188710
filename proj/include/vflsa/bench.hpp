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

// Overhead harness and the masked-vs-homomorphic dot-product ablation.

#include <cstdint>
#include <string>
#include <vector>

#include "vflsa/config.hpp"
#include "vflsa/masking.hpp"
#include "vflsa/model.hpp"
#include "vflsa/paillier.hpp"
#include "vflsa/transport.hpp"

namespace vflsa {

struct DotProductResult {
  Matrix output;
  double elapsed_ms = 0.0;
};

// Encrypts every input cell, accumulates prod_j Enc(x_ij)^(w_jk) per output
// cell and decrypts. Inputs and weights are fixed-point encoded with
// `scale_bits`, so the product carries 2 * scale_bits fractional bits.
DotProductResult he_dot_product(const Matrix& x, const Matrix& w, const PaillierKeyPair& keys, int scale_bits,
                                gmp_randclass& rng);

// Two parties hold the first and second half of the input columns, compute
// their partial products, mask them with a shared pairwise seed, and the sum
// is unmasked by cancellation.
DotProductResult sa_dot_product(const Matrix& x, const Matrix& w, const Key32& pair_seed,
                                const FixedPointCodec& codec, std::uint32_t round = 0);

struct AblationOptions {
  std::vector<std::size_t> batch_sizes{16, 64, 256};
  int repetitions = 10;
  int warmup = 1;
  unsigned key_bits = 1024;
  int scale_bits = 24;
  std::uint64_t seed = 0;
  int inner = 8;  // x is [B x inner], w is [inner x inner]
};

struct AblationRow {
  std::size_t batch_size = 0;
  double sa_mean_ms = 0.0;
  double sa_std_ms = 0.0;
  double he_mean_ms = 0.0;
  double he_std_ms = 0.0;
  double speedup = 0.0;  // he_mean / sa_mean
  double sa_max_error = 0.0;
  double he_max_error = 0.0;
};

struct AblationReport {
  std::vector<AblationRow> rows;
  int repetitions = 0;
  unsigned key_bits = 0;
  double tolerance = 0.0;  // inner * 2^-scale_bits

  bool oracle_ok() const;
  double min_speedup() const;
  // batch_size,sa_mean_ms,sa_std_ms,he_mean_ms,he_std_ms,speedup,sa_max_error,he_max_error
  std::string to_csv() const;
  // Whitespace columns for a log-scale plot: batch_size sa_mean he_mean speedup
  std::string to_gnuplot() const;
};

AblationReport run_ablation(const AblationOptions& options);

struct OverheadOptions {
  SessionConfig config;  // mode is ignored; both modes run
  int repetitions = 10;
  std::uint32_t rounds = 5;
};

struct Stat {
  double mean = 0.0;
  double std = 0.0;
};

struct OverheadCell {
  std::string mode;  // "secured" or "plain"
  PartyKind kind = PartyKind::Active;
  Phase phase = Phase::Training;
  Stat total_bytes, overhead_bytes, cpu_ms, overhead_ms;
};

struct OverheadReport {
  std::vector<OverheadCell> cells;
  // Per repetition, the secured rows (overhead against the plain run).
  std::vector<std::vector<MetricsRow>> secured_runs;
  std::vector<std::vector<MetricsRow>> plain_runs;
  int repetitions = 0;
  std::size_t setup_phases_per_run = 0;

  // mode,party,phase,cpu_ms_mean,cpu_ms_std,overhead_ms_mean,overhead_ms_std
  std::string table1_csv() const;
  // mode,party,phase,bytes_mean,bytes_std,overhead_bytes_mean,overhead_bytes_std
  std::string table2_csv() const;
};

// Each repetition trains `rounds` rounds and runs the testing phase, once in
// secured and once in plain mode with the same seed (seed + repetition).
OverheadReport run_overhead_suite(const OverheadOptions& options);

Stat mean_std(const std::vector<double>& xs);

}  // namespace vflsa
