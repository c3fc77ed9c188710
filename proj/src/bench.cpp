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

#include "vflsa/bench.hpp"

#include <algorithm>
#include <chrono>
#include <cmath>
#include <cstdio>
#include <sstream>

#include "vflsa/error.hpp"
#include "vflsa/protocol.hpp"
#include "vflsa/rng.hpp"

namespace vflsa {

namespace {

using Clock = std::chrono::steady_clock;

double ms_since(Clock::time_point start) {
  return std::chrono::duration<double, std::milli>(Clock::now() - start).count();
}

std::int64_t quantize(double v, int scale_bits) {
  const double scaled = std::ldexp(v, scale_bits);
  if (!std::isfinite(scaled) || std::fabs(scaled) >= 0x1.0p62) {
    throw Error(Errc::MessageOutOfRange, "value does not fit the fixed-point range");
  }
  return std::llround(scaled);
}

std::vector<double> row_major(const Matrix& m) {
  std::vector<double> out;
  out.reserve(static_cast<std::size_t>(m.size()));
  for (Eigen::Index r = 0; r < m.rows(); ++r)
    for (Eigen::Index c = 0; c < m.cols(); ++c) out.push_back(m(r, c));
  return out;
}

Matrix random_matrix(Eigen::Index rows, Eigen::Index cols, Rng& rng) {
  Matrix m(rows, cols);
  for (Eigen::Index r = 0; r < rows; ++r)
    for (Eigen::Index c = 0; c < cols; ++c) m(r, c) = 2.0 * uniform_unit(rng) - 1.0;
  return m;
}

double max_abs_diff(const Matrix& a, const Matrix& b) { return (a - b).cwiseAbs().maxCoeff(); }

std::string fmt(const char* f, double v) {
  char buf[64];
  std::snprintf(buf, sizeof buf, f, v);
  return buf;
}

}  // namespace

Stat mean_std(const std::vector<double>& xs) {
  Stat s;
  if (xs.empty()) return s;
  for (double x : xs) s.mean += x;
  s.mean /= static_cast<double>(xs.size());
  if (xs.size() > 1) {
    double ss = 0.0;
    for (double x : xs) ss += (x - s.mean) * (x - s.mean);
    s.std = std::sqrt(ss / static_cast<double>(xs.size() - 1));
  }
  return s;
}

DotProductResult he_dot_product(const Matrix& x, const Matrix& w, const PaillierKeyPair& keys, int scale_bits,
                                gmp_randclass& rng) {
  if (x.cols() != w.rows()) throw Error(Errc::ShapeMismatch, "x columns must equal w rows");
  const auto& pk = keys.pk;
  const auto start = Clock::now();

  std::vector<std::vector<PaillierCiphertext>> enc(static_cast<std::size_t>(x.rows()));
  for (Eigen::Index i = 0; i < x.rows(); ++i) {
    for (Eigen::Index j = 0; j < x.cols(); ++j) {
      enc[i].push_back(paillier_encrypt(pk, paillier_encode_signed(pk, quantize(x(i, j), scale_bits)), rng));
    }
  }

  Matrix out(x.rows(), w.cols());
  for (Eigen::Index i = 0; i < x.rows(); ++i) {
    for (Eigen::Index k = 0; k < w.cols(); ++k) {
      PaillierCiphertext pos{1};
      PaillierCiphertext neg{1};
      for (Eigen::Index j = 0; j < x.cols(); ++j) {
        const std::int64_t wq = quantize(w(j, k), scale_bits);
        if (wq == 0) continue;
        const mpz_class mag = paillier_encode_signed(pk, wq < 0 ? -wq : wq);
        const auto term = paillier_scalar_mul(pk, enc[i][j], mag);
        if (wq > 0) pos = paillier_add(pk, pos, term);
        else neg = paillier_add(pk, neg, term);
      }
      // Enc(a) * Enc(b)^-1 = Enc(a - b)
      mpz_class neg_inv;
      mpz_invert(neg_inv.get_mpz_t(), neg.c.get_mpz_t(), pk.n_squared.get_mpz_t());
      const PaillierCiphertext cell = paillier_add(pk, pos, PaillierCiphertext{neg_inv});
      const mpz_class m = paillier_decode_signed(pk, paillier_decrypt(keys, cell));
      out(i, k) = std::ldexp(mpz_get_d(m.get_mpz_t()), -2 * scale_bits);
    }
  }
  return {out, ms_since(start)};
}

DotProductResult sa_dot_product(const Matrix& x, const Matrix& w, const Key32& pair_seed,
                                const FixedPointCodec& codec, std::uint32_t round) {
  if (x.cols() != w.rows()) throw Error(Errc::ShapeMismatch, "x columns must equal w rows");
  const auto start = Clock::now();
  const Eigen::Index left = x.cols() / 2;
  const Eigen::Index right = x.cols() - left;
  const Matrix p1 = x.leftCols(left) * w.topRows(left);
  const Matrix p2 = x.rightCols(right) * w.bottomRows(right);
  const std::size_t len = static_cast<std::size_t>(p1.size());

  const MaskContext ctx{0, round, MaskDirection::Forward, NoncePhase::Training};
  const PartyIndex parties[2] = {1, 2};
  const MaskVector n1 = compute_mask(1, parties, {{2, pair_seed}}, len, ctx);
  const MaskVector n2 = compute_mask(2, parties, {{1, pair_seed}}, len, ctx);
  const RingVector masked[2] = {mask_values(row_major(p1), codec, n1), mask_values(row_major(p2), codec, n2)};
  const std::vector<double> sum = codec.decode(sum_masked(masked));

  Matrix out(x.rows(), w.cols());
  std::size_t idx = 0;
  for (Eigen::Index r = 0; r < out.rows(); ++r)
    for (Eigen::Index c = 0; c < out.cols(); ++c) out(r, c) = sum[idx++];
  return {out, ms_since(start)};
}

bool AblationReport::oracle_ok() const {
  return std::all_of(rows.begin(), rows.end(),
                     [&](const AblationRow& r) { return r.sa_max_error <= tolerance && r.he_max_error <= tolerance; });
}

double AblationReport::min_speedup() const {
  double m = rows.empty() ? 0.0 : rows.front().speedup;
  for (const auto& r : rows) m = std::min(m, r.speedup);
  return m;
}

std::string AblationReport::to_csv() const {
  std::ostringstream out;
  out << "batch_size,sa_mean_ms,sa_std_ms,he_mean_ms,he_std_ms,speedup,sa_max_error,he_max_error\n";
  for (const auto& r : rows) {
    out << r.batch_size << ',' << fmt("%.6f", r.sa_mean_ms) << ',' << fmt("%.6f", r.sa_std_ms) << ','
        << fmt("%.3f", r.he_mean_ms) << ',' << fmt("%.3f", r.he_std_ms) << ',' << fmt("%.1f", r.speedup) << ','
        << fmt("%.3e", r.sa_max_error) << ',' << fmt("%.3e", r.he_max_error) << '\n';
  }
  return out.str();
}

std::string AblationReport::to_gnuplot() const {
  std::ostringstream out;
  out << "# repetitions=" << repetitions << " key_bits=" << key_bits << "\n";
  out << "# batch_size sa_mean_ms he_mean_ms speedup\n";
  for (const auto& r : rows) {
    out << r.batch_size << ' ' << fmt("%.6f", r.sa_mean_ms) << ' ' << fmt("%.3f", r.he_mean_ms) << ' '
        << fmt("%.1f", r.speedup) << '\n';
  }
  return out.str();
}

AblationReport run_ablation(const AblationOptions& o) {
  if (o.repetitions < 1) throw Error(Errc::ConfigError, "repetitions must be >= 1");
  AblationReport report;
  report.repetitions = o.repetitions;
  report.key_bits = o.key_bits;
  report.tolerance = o.inner * std::ldexp(1.0, -o.scale_bits);

  const PaillierKeyPair keys = paillier_keygen(o.key_bits, o.seed);
  gmp_randclass he_rng(gmp_randinit_mt);
  he_rng.seed(static_cast<unsigned long>(mix_seed(o.seed, 1)));

  Key32 e1{}, e2{};
  Rng key_rng(mix_seed(o.seed, 2));
  for (auto& b : e1) b = static_cast<std::uint8_t>(key_rng());
  for (auto& b : e2) b = static_cast<std::uint8_t>(key_rng());
  const KeyPair k1 = generate_keypair(e1);
  const KeyPair k2 = generate_keypair(e2);
  const Key32 pair_seed = derive_epoch_keys(derive_shared_secret(k1, 1, k2.public_key, 2), 0).prg_seed;
  const FixedPointCodec codec{o.scale_bits, 64};

  Rng data_rng(mix_seed(o.seed, 3));
  std::uint32_t round = 0;
  for (std::size_t b : o.batch_sizes) {
    const Matrix x = random_matrix(static_cast<Eigen::Index>(b), o.inner, data_rng);
    const Matrix w = random_matrix(o.inner, o.inner, data_rng);
    const Matrix oracle = x * w;
    AblationRow row;
    row.batch_size = b;
    std::vector<double> sa_ms, he_ms;
    for (int it = 0; it < o.warmup + o.repetitions; ++it) {
      const auto sa = sa_dot_product(x, w, pair_seed, codec, round++);
      const auto he = he_dot_product(x, w, keys, o.scale_bits, he_rng);
      row.sa_max_error = std::max(row.sa_max_error, max_abs_diff(sa.output, oracle));
      row.he_max_error = std::max(row.he_max_error, max_abs_diff(he.output, oracle));
      if (it < o.warmup) continue;
      sa_ms.push_back(sa.elapsed_ms);
      he_ms.push_back(he.elapsed_ms);
    }
    const Stat sa = mean_std(sa_ms);
    const Stat he = mean_std(he_ms);
    row.sa_mean_ms = sa.mean;
    row.sa_std_ms = sa.std;
    row.he_mean_ms = he.mean;
    row.he_std_ms = he.std;
    row.speedup = sa.mean > 0.0 ? he.mean / sa.mean : 0.0;
    report.rows.push_back(row);
  }
  return report;
}

// ---------------------------------------------------------------------------

OverheadReport run_overhead_suite(const OverheadOptions& o) {
  if (o.repetitions < 1) throw Error(Errc::ConfigError, "repetitions must be >= 1");
  OverheadReport report;
  report.repetitions = o.repetitions;
  for (int rep = 0; rep < o.repetitions; ++rep) {
    SessionConfig cfg = o.config;
    cfg.seed = o.config.seed + static_cast<std::uint64_t>(rep);
    cfg.rounds = o.rounds;
    cfg.log_messages = false;
    const PreparedData data = prepare_data(cfg);

    cfg.mode = Mode::Secured;
    Session secured(cfg, data);
    secured.train(o.rounds);
    report.setup_phases_per_run = secured.setup_phases_run();
    secured.run_testing_phase();

    cfg.mode = Mode::Plain;
    Session plain(cfg, data);
    plain.train(o.rounds);
    plain.run_testing_phase();

    const SessionMetrics base = plain.metrics();
    report.secured_runs.push_back(snapshot_metrics(secured.metrics(), &base));
    report.plain_runs.push_back(snapshot_metrics(base, &base));
  }

  auto summarize = [&](const std::string& mode, const std::vector<std::vector<MetricsRow>>& runs) {
    for (std::size_t i = 0; i < runs.front().size(); ++i) {
      std::vector<double> tb, ob, cm, om;
      for (const auto& run : runs) {
        tb.push_back(run[i].total_bytes);
        ob.push_back(run[i].overhead_bytes);
        cm.push_back(run[i].cpu_ms);
        om.push_back(run[i].overhead_ms);
      }
      report.cells.push_back(OverheadCell{mode, runs.front()[i].kind, runs.front()[i].phase, mean_std(tb),
                                          mean_std(ob), mean_std(cm), mean_std(om)});
    }
  };
  summarize("secured", report.secured_runs);
  summarize("plain", report.plain_runs);
  return report;
}

std::string OverheadReport::table1_csv() const {
  std::ostringstream out;
  out << "mode,party,phase,cpu_ms_mean,cpu_ms_std,overhead_ms_mean,overhead_ms_std\n";
  for (const auto& c : cells) {
    out << c.mode << ',' << party_kind_name(c.kind) << ',' << phase_name(c.phase) << ','
        << fmt("%.3f", c.cpu_ms.mean) << ',' << fmt("%.3f", c.cpu_ms.std) << ',' << fmt("%.3f", c.overhead_ms.mean)
        << ',' << fmt("%.3f", c.overhead_ms.std) << '\n';
  }
  return out.str();
}

std::string OverheadReport::table2_csv() const {
  std::ostringstream out;
  out << "mode,party,phase,bytes_mean,bytes_std,overhead_bytes_mean,overhead_bytes_std\n";
  for (const auto& c : cells) {
    out << c.mode << ',' << party_kind_name(c.kind) << ',' << phase_name(c.phase) << ','
        << fmt("%.1f", c.total_bytes.mean) << ',' << fmt("%.1f", c.total_bytes.std) << ','
        << fmt("%.1f", c.overhead_bytes.mean) << ',' << fmt("%.1f", c.overhead_bytes.std) << '\n';
  }
  return out.str();
}

}  // namespace vflsa
