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

#include <cmath>
#include <set>

#include "test_util.hpp"
#include "vflsa/protocol.hpp"

using namespace vflsa;
using vflsa::testing::error_code_of;
using vflsa::testing::small_config;

TEST_CASE("pairwise keys agree in both directions") {
  PairwiseKeys a(0, 11, false), b(1, 12, false);
  const std::vector<PartyIndex> pa = {1}, pb = {0};
  const auto ka = a.generate(3, pa);
  const auto kb = b.generate(3, pb);
  a.establish(1, kb[0].second);
  b.establish(0, ka[0].second);
  CHECK(a.epoch() == 3);
  CHECK(a.keys_for(1).sym_key == b.keys_for(0).sym_key);
  CHECK(a.prg_seeds().at(1) == b.prg_seeds().at(0));
  CHECK(a.secret_for(1).low == 0);
  CHECK(error_code_of([&] { a.keys_for(5); }) == Errc::MissingPeer);
  PairwiseKeys again(0, 11, false);
  CHECK(again.generate(3, pa)[0].second == ka[0].second);
  CHECK(again.generate(4, pa)[0].second != ka[0].second);
}

TEST_CASE("cluster batch payload round trip") {
  ClusterBatch cb;
  cb.cluster_id = 2;
  for (int i = 0; i < 3; ++i) {
    cb.entries.push_back(encrypt_sample_ids(Key32{static_cast<std::uint8_t>(i)}, std::vector<SampleId>{SampleId(i)},
                                            make_nonce(0, 0, NoncePhase::Training, 0, static_cast<std::uint16_t>(i)), 2));
  }
  const auto back = ClusterBatch::from_payload(cb.to_payload());
  CHECK(back.cluster_id == 2);
  REQUIRE(back.entries.size() == 3);
  CHECK(decrypt_sample_ids(Key32{1}, back.entries[1]) == std::vector<SampleId>{1});
  Bytes bad = cb.to_payload();
  bad.push_back(0);
  CHECK(error_code_of([&] { ClusterBatch::from_payload(bad); }) == Errc::MalformedFrame);
}

TEST_CASE("batch selection samples without replacement and clamps") {
  std::vector<SampleId> pool(50);
  std::iota(pool.begin(), pool.end(), 100);
  Rng rng(1);
  const auto ids = select_batch_ids(pool, 20, rng);
  CHECK(ids.size() == 20);
  CHECK(std::set<SampleId>(ids.begin(), ids.end()).size() == 20);
  for (auto id : ids) CHECK((id >= 100 && id < 150));
  CHECK(select_batch_ids(pool, 500, rng).size() == 50);
  CHECK(error_code_of([&] { select_batch_ids({}, 5, rng); }) == Errc::EmptyDataset);
}

TEST_CASE("auc with ties") {
  const std::vector<double> s = {0.1, 0.4, 0.35, 0.8, 0.4};
  const std::vector<double> y = {0, 0, 1, 1, 1};
  // positive/negative pairs: (0.35 vs 0.1, 0.4) = 1 + 0; (0.8) = 2; (0.4) = 1 + 0.5
  CHECK(roc_auc(s, y) == doctest::Approx(4.5 / 6.0));
  CHECK(std::isnan(roc_auc(s, std::vector<double>(5, 1.0))));
}

TEST_CASE("setup establishes every pair") {
  Session s(small_config(Mode::Secured));
  CHECK(s.run_setup_phase() == 10);
  for (PartyIndex p = 1; p <= 4; ++p) {
    CHECK(s.active().keys().keys_for(p).sym_key == s.passive(p).keys().keys_for(0).sym_key);
  }
  CHECK(s.passive(1).keys().keys_for(3).prg_seed == s.passive(3).keys().keys_for(1).prg_seed);
  CHECK(s.setup_phases_run() == 1);
  CHECK(s.network().pending() == 0);
}

TEST_CASE("two-party session") {
  auto c = small_config(Mode::Secured);
  PartitionSpec p = builtin_partition("banking");
  p.active_columns.insert(p.active_columns.end(), p.clusters[1].columns.begin(), p.clusters[1].columns.end());
  p.clusters.resize(1);
  p.clusters[0].members = {1};
  c.partition_inline = partition_to_json(p);
  Session s(c);
  CHECK(s.run_setup_phase() == 1);
  const auto rep = s.train(2);
  CHECK(std::isfinite(rep.back().loss));
  CHECK(s.passive(1).last_view().size() == rep.back().batch_size);
}

TEST_CASE("keys rotate every K rounds") {
  auto c = small_config(Mode::Secured);
  c.rotation_period = 2;
  Session s(c);
  const auto reps = s.train(5);
  CHECK(s.setup_phases_run() == 3);
  std::vector<std::uint32_t> epochs;
  for (const auto& r : reps) epochs.push_back(r.epoch);
  CHECK(epochs == std::vector<std::uint32_t>{0, 0, 1, 1, 2});
  CHECK(reps[0].setup_ran);
  CHECK_FALSE(reps[1].setup_ran);
  CHECK(reps[2].bytes.at(0) > reps[1].bytes.at(0));
}

TEST_CASE("plain mode never runs a setup") {
  Session s(small_config(Mode::Plain));
  s.train(3);
  CHECK(s.setup_phases_run() == 0);
  CHECK(s.run_testing_phase().setup_phases == 0);
}

TEST_CASE("a silent party is reported") {
  SUBCASE("during aggregation") {
    Session s(small_config(Mode::Secured));
    s.train(1);
    s.inject_silence(2, Tag::MaskedActivation);
    try {
      s.run_training_round();
      FAIL("expected MissingContribution");
    } catch (const Error& e) {
      CHECK(e.code() == Errc::MissingContribution);
      CHECK(std::string(e.what()).find("training round 1") != std::string::npos);
    }
  }
  SUBCASE("during the backward pass") {
    Session s(small_config(Mode::Plain));
    s.inject_silence(4, Tag::MaskedGradient);
    CHECK(error_code_of([&] { s.run_training_round(); }) == Errc::MissingContribution);
  }
  SUBCASE("during setup") {
    Session s(small_config(Mode::Secured));
    s.inject_silence(3, Tag::PubKeySet);
    CHECK(error_code_of([&] { s.run_setup_phase(); }) == Errc::SetupTimeout);
  }
  SUBCASE("acknowledgement") {
    Session s(small_config(Mode::Secured));
    s.inject_silence(0, Tag::Ack);
    CHECK(error_code_of([&] { s.run_setup_phase(); }) == Errc::SetupTimeout);
  }
}

TEST_CASE("empty test set") {
  Session s(small_config(Mode::Secured));
  const auto r = s.run_testing_phase(std::vector<SampleId>{});
  CHECK(r.probabilities.empty());
  CHECK(std::isnan(r.accuracy));
  CHECK(std::isnan(r.auc));
  CHECK(s.network().meter().total(Direction::Sent) == 0);
}

TEST_CASE("zero weights predict the sigmoid of the output bias") {
  Session s(small_config(Mode::Secured));
  const auto& layout = s.layout();
  s.active().set_weights(Matrix::Zero(static_cast<Eigen::Index>(layout.input_width()), 8), Vector::Zero(8));
  s.aggregator().set_global(GlobalModule{Vector::Zero(8), 0.7});
  const auto r = s.run_testing_phase();
  REQUIRE_FALSE(r.probabilities.empty());
  for (double p : r.probabilities) CHECK(p == doctest::Approx(sigmoid(0.7)).epsilon(1e-6));
}

TEST_CASE("secured and plain sessions agree") {
  Session sec(small_config(Mode::Secured, 5));
  Session pl(small_config(Mode::Plain, 5));
  const auto a = sec.train(4);
  const auto b = pl.train(4);
  for (std::size_t i = 0; i < a.size(); ++i) CHECK(std::fabs(a[i].loss - b[i].loss) < 1e-4);
  CHECK((sec.active().weights() - pl.active().weights()).cwiseAbs().maxCoeff() < 64 * std::ldexp(1.0, -24));
  const auto ta = sec.run_testing_phase();
  const auto tb = pl.run_testing_phase();
  CHECK(ta.ids == tb.ids);
  CHECK(ta.decisions == tb.decisions);
  CHECK(ta.accuracy == tb.accuracy);
}

TEST_CASE("message log is deterministic under a seed") {
  auto c = small_config(Mode::Secured, 8);
  c.log_messages = true;
  Session a(c), b(c);
  a.train(2);
  b.train(2);
  a.run_testing_phase();
  b.run_testing_phase();
  const auto la = a.network().log();
  const auto lb = b.network().log();
  REQUIRE(la.size() == lb.size());
  for (std::size_t i = 0; i < la.size(); ++i) CHECK(la[i].envelope == lb[i].envelope);
  c.seed = 9;
  Session d(c);
  d.train(2);
  // PubKeySet carries the freshly derived public keys.
  const auto first_keys = [](const std::vector<LoggedFrame>& log) {
    return std::find_if(log.begin(), log.end(), [](const LoggedFrame& f) { return f.envelope.tag == Tag::PubKeySet; })
        ->envelope.payload;
  };
  CHECK(first_keys(d.network().log()) != first_keys(la));
}

TEST_CASE("batch larger than the training pool is clamped") {
  auto c = small_config(Mode::Secured);
  c.batch_size = 5000;
  Session s(c);
  const auto r = s.run_training_round();
  CHECK(r.batch_size == s.data().train_ids.size());
}

TEST_CASE("passive parties learn only the ids they hold") {
  Session s(small_config(Mode::Secured));
  s.train(2);
  const auto& batch = s.active().last_batch();
  for (const auto& p : s.passives()) {
    std::vector<SampleId> want;
    for (SampleId id : batch)
      if (p->data().row_of(id)) want.push_back(id);
    std::sort(want.begin(), want.end());
    CHECK(p->last_view() == want);
  }
}

TEST_CASE("checkpoint restore reproduces predictions") {
  Session a(small_config(Mode::Secured, 2));
  a.train(3);
  const auto ckpt = a.checkpoint();
  CHECK(ckpt.shards.size() == 3);
  CHECK(ckpt.shards[0].shard.bias.has_value());
  Session b(small_config(Mode::Plain, 2));
  b.restore(ckpt);
  const auto pa = a.run_testing_phase();
  const auto pb = b.run_testing_phase();
  REQUIRE(pa.probabilities.size() == pb.probabilities.size());
  for (std::size_t i = 0; i < pa.probabilities.size(); ++i) {
    CHECK(pa.probabilities[i] == doctest::Approx(pb.probabilities[i]).epsilon(1e-5));
  }
  Checkpoint broken = ckpt;
  broken.shards.pop_back();
  CHECK(error_code_of([&] { b.restore(broken); }) == Errc::ShapeMismatch);
}

TEST_CASE("configuration errors surface at construction") {
  auto c = small_config(Mode::Secured);
  c.num_passive = 3;
  CHECK(error_code_of([&] { Session s(c); }) == Errc::ConfigError);
  auto d = small_config(Mode::Secured);
  d.csv = "/nonexistent/bank.csv";
  CHECK(error_code_of([&] { Session s(d); }) == Errc::IoError);
}

TEST_CASE("os entropy sessions still agree on keys") {
  auto c = small_config(Mode::Secured);
  c.os_entropy = true;
  Session s(c);
  CHECK(s.run_setup_phase() == 10);
  CHECK(std::isfinite(s.run_training_round().loss));
}
