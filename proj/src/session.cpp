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

#include <algorithm>
#include <cmath>
#include <limits>
#include <numeric>

#include "vflsa/error.hpp"
#include "vflsa/protocol.hpp"

namespace vflsa {

PreparedData prepare_data(const SessionConfig& config) {
  config.validate();
  PreparedData d;
  d.schema = config.schema.empty() ? builtin_schema(config.dataset) : load_schema(config.schema);
  if (!config.partition_path.empty()) d.partition = load_partition(config.partition_path);
  else if (!config.partition_inline.empty()) d.partition = parse_partition(config.partition_inline);
  else d.partition = builtin_partition(config.dataset);
  if (config.num_passive && *config.num_passive != d.partition.num_passive()) {
    throw Error(Errc::ConfigError, "num_passive is " + std::to_string(*config.num_passive) +
                                       " but the partition declares " + std::to_string(d.partition.num_passive()));
  }

  d.synthetic = config.csv.empty();
  RawDataset raw = d.synthetic ? synth_generate(config.synthetic_rows, d.schema, mix_seed(config.seed, 11))
                               : load_csv(config.csv, d.schema);
  raw = shuffle_rows(raw, mix_seed(config.seed, 12));
  const std::size_t n = raw.rows();
  const auto n_test = static_cast<std::size_t>(std::floor(static_cast<double>(n) * config.test_fraction));
  const std::size_t n_train = n - n_test;
  if (n_train == 0) throw Error(Errc::EmptyDataset, "no training rows");

  std::vector<std::size_t> stats(n_train);
  std::iota(stats.begin(), stats.end(), 0);
  d.encoded = encode(raw, d.schema, stats);
  d.train_ids.assign(d.encoded.sample_ids.begin(), d.encoded.sample_ids.begin() + static_cast<std::ptrdiff_t>(n_train));
  d.test_ids.assign(d.encoded.sample_ids.begin() + static_cast<std::ptrdiff_t>(n_train), d.encoded.sample_ids.end());
  return d;
}

Session::Session(SessionConfig config) : Session(config, prepare_data(config)) {}

Session::Session(SessionConfig config, PreparedData data) : config_(std::move(config)), data_(std::move(data)) {
  config_.validate();
  build();
}

Session::~Session() = default;

void Session::build() {
  VerticalSplit split = vertical_split(data_.encoded, data_.partition);
  for (std::size_t i = 0; i < split.passives.size(); ++i) {
    if (split.passives[i].party != i + 1) {
      throw Error(Errc::ConfigError, "passive parties must be numbered 1..N without gaps");
    }
  }

  if (config_.pretrain.mode == PretrainMode::LogisticHidden) {
    PretrainConfig pc = config_.pretrain;
    pc.seed = mix_seed(config_.seed, 40 + pc.seed);
    const PartyData& a = split.active;
    Matrix x(static_cast<Eigen::Index>(data_.train_ids.size()), a.features.cols());
    Vector y(x.rows());
    for (std::size_t k = 0; k < data_.train_ids.size(); ++k) {
      const auto row = static_cast<Eigen::Index>(*a.row_of(data_.train_ids[k]));
      x.row(static_cast<Eigen::Index>(k)) = a.features.row(row);
      y(static_cast<Eigen::Index>(k)) = a.labels(row);
    }
    pretrain_ = pretrain_active(x, y, pc);
    split.active.features = pretrain_embed(pretrain_, a.features);
  }

  FeatureLayout layout;
  layout.hidden = config_.hidden;
  layout.blocks.push_back({std::nullopt, 0, static_cast<std::size_t>(split.active.features.cols())});
  std::size_t offset = layout.blocks.back().width;
  for (const auto& c : data_.partition.clusters) {
    auto it = std::find_if(split.passives.begin(), split.passives.end(),
                           [&](const PartyData& p) { return p.cluster_id == c.cluster_id; });
    if (it == split.passives.end()) {
      throw Error(Errc::ConfigError, "cluster " + std::to_string(c.cluster_id) + " has no members");
    }
    const auto width = static_cast<std::size_t>(it->features.cols());
    layout.blocks.push_back({c.cluster_id, offset, width});
    offset += width;
  }

  std::vector<PartyIndex> parties;
  for (std::size_t p = 0; p <= split.passives.size(); ++p) parties.push_back(static_cast<PartyIndex>(p));
  ctx_.clients = parties;
  parties.push_back(kAggregator);
  network_ = std::make_unique<Network>(parties);
  network_->set_logging(config_.log_messages);

  ctx_.network = network_.get();
  ctx_.mode = config_.mode;
  ctx_.codec = FixedPointCodec{config_.scale_bits, 64};
  ctx_.os_entropy = config_.os_entropy;
  ctx_.layout = layout;
  for (const auto& c : data_.partition.clusters) {
    auto members = c.members;
    std::sort(members.begin(), members.end());
    ctx_.cluster_members[c.cluster_id] = members;
  }

  std::map<std::uint16_t, std::vector<PartyIndex>> holders;
  for (const auto& p : split.passives) {
    auto& h = holders[*p.cluster_id];
    h.resize(data_.encoded.sample_ids.size(), kAggregator);
    for (SampleId id : p.ids) h[id] = p.party;
  }

  active_ = std::make_unique<ActiveParty>(ctx_, std::move(split.active), data_.train_ids, data_.test_ids,
                                          mix_seed(config_.seed, 20));
  active_->set_holders(std::move(holders));
  for (auto& p : split.passives) {
    const PartyIndex idx = p.party;
    passives_.push_back(std::make_unique<PassiveParty>(ctx_, std::move(p), mix_seed(config_.seed, 100 + idx)));
  }
  aggregator_ = std::make_unique<Aggregator>(ctx_, config_.hidden, mix_seed(config_.seed, 30));
}

Client& Session::client(PartyIndex index) {
  if (index == 0) return *active_;
  return passive(index);
}

PassiveParty& Session::passive(PartyIndex index) {
  for (auto& p : passives_)
    if (p->index() == index) return *p;
  throw Error(Errc::UnknownParty, "no passive party " + std::to_string(index));
}

std::size_t Session::num_pairs() const {
  const std::size_t n = ctx_.clients.size();
  return n * (n - 1) / 2;
}

std::size_t Session::run_setup_phase() {
  if (config_.mode == Mode::Plain) return 0;
  const auto epoch = static_cast<std::uint32_t>(setup_phases_);
  const Phase phase = network_->phase();
  auto& meter = network_->meter();
  try {
    {
      CpuScope s(meter, kAggregator, phase);
      aggregator_->request_public_keys(epoch);
    }
    for (PartyIndex p : ctx_.clients) {
      CpuScope s(meter, p, phase);
      client(p).on_pubkey_request();
    }
    {
      CpuScope s(meter, kAggregator, phase);
      aggregator_->forward_public_keys(epoch);
    }
    for (PartyIndex p : ctx_.clients) {
      CpuScope s(meter, p, phase);
      client(p).on_pubkey_forward();
    }
    {
      CpuScope s(meter, kAggregator, phase);
      aggregator_->collect_acks(epoch);
    }
  } catch (const Error& e) {
    if (e.code() == Errc::MissingMessage) throw Error(Errc::SetupTimeout, "setup phase: " + e.detail());
    throw;
  }
  for (PartyIndex p : ctx_.clients) {
    if (client(p).keys().established() != ctx_.clients.size() - 1) {
      throw Error(Errc::SetupTimeout, "party " + std::to_string(p) + " did not establish every pairwise key");
    }
  }
  ++setup_phases_;
  epoch_ = epoch;
  keys_ready_ = true;
  return num_pairs();
}

RoundReport Session::run_training_round() {
  network_->set_phase(Phase::Training);
  auto& meter = network_->meter();
  std::vector<PartyIndex> everyone = ctx_.clients;
  everyone.push_back(kAggregator);
  std::map<PartyIndex, std::uint64_t> bytes_before;
  std::map<PartyIndex, double> cpu_before;
  for (PartyIndex p : everyone) {
    bytes_before[p] = meter.bytes(p, Phase::Training);
    cpu_before[p] = meter.cpu_ms(p, Phase::Training);
  }

  RoundReport rep;
  const std::uint32_t r = next_round_;
  rep.round = r;
  try {
    training_round_body(r, rep);
  } catch (const Error& e) {
    throw Error(e.code(), "training round " + std::to_string(r) + ": " + e.detail());
  }
  for (PartyIndex p : everyone) {
    rep.bytes[p] = meter.bytes(p, Phase::Training) - bytes_before[p];
    rep.cpu_ms[p] = meter.cpu_ms(p, Phase::Training) - cpu_before[p];
  }
  history_.push_back(rep);
  ++next_round_;
  return rep;
}

void Session::training_round_body(std::uint32_t r, RoundReport& rep) {
  auto& meter = network_->meter();
  if (config_.mode == Mode::Secured && (r % config_.rotation_period == 0 || !keys_ready_)) {
    run_setup_phase();
    rep.setup_ran = true;
  }

  BatchSelection sel;
  {
    CpuScope s(meter, 0, Phase::Training);
    sel = active_->begin_training_round(r, config_.batch_size);
  }
  {
    CpuScope s(meter, kAggregator, Phase::Training);
    aggregator_->relay_batch(r, true, true);
  }
  for (auto& p : passives_) {
    CpuScope s(meter, p->index(), Phase::Training);
    p->on_batch(r, true);
  }
  {
    CpuScope s(meter, 0, Phase::Training);
    active_->send_activation(r);
  }
  {
    CpuScope s(meter, kAggregator, Phase::Training);
    aggregator_->aggregate_forward(r, true, config_.lr);
  }
  for (auto& p : passives_) {
    CpuScope s(meter, p->index(), Phase::Training);
    p->on_delta(r);
  }
  {
    CpuScope s(meter, kAggregator, Phase::Training);
    aggregator_->relay_gradients(r);
  }
  {
    CpuScope s(meter, 0, Phase::Training);
    rep.loss = active_->finish_training_round(r, config_.lr);
  }

  rep.epoch = epoch_;
  rep.batch_size = sel.ids.size();
}

std::vector<RoundReport> Session::train(std::uint32_t rounds) {
  std::vector<RoundReport> out;
  for (std::uint32_t i = 0; i < rounds; ++i) out.push_back(run_training_round());
  return out;
}

TestReport Session::run_testing_phase(std::optional<std::vector<SampleId>> ids_opt) {
  TestReport rep;
  rep.ids = ids_opt ? std::move(*ids_opt) : data_.test_ids;
  if (!ids_opt && config_.max_test_samples > 0 && rep.ids.size() > config_.max_test_samples) {
    rep.ids.resize(config_.max_test_samples);
  }
  if (rep.ids.empty()) {
    rep.accuracy = std::numeric_limits<double>::quiet_NaN();
    rep.auc = std::numeric_limits<double>::quiet_NaN();
    return rep;
  }

  network_->set_phase(Phase::Testing);
  auto& meter = network_->meter();
  const std::size_t b = config_.batch_size;
  const std::size_t batches = (rep.ids.size() + b - 1) / b;
  try {
    for (std::size_t t = 0; t < batches; ++t) {
      const std::uint32_t round = test_rounds_++;
      if (config_.mode == Mode::Secured && t % config_.rotation_period == 0) {
        run_setup_phase();
        ++rep.setup_phases;
      }
      const bool first = t == 0;
      const std::span<const SampleId> chunk =
          std::span<const SampleId>(rep.ids).subspan(t * b, std::min(b, rep.ids.size() - t * b));
      {
        CpuScope s(meter, 0, Phase::Testing);
        if (first) active_->send_weight_slices(round);
        active_->begin_testing_batch(round, chunk);
      }
      {
        CpuScope s(meter, kAggregator, Phase::Testing);
        aggregator_->relay_batch(round, first, false);
      }
      for (auto& p : passives_) {
        CpuScope s(meter, p->index(), Phase::Testing);
        p->on_batch(round, first);
      }
      {
        CpuScope s(meter, 0, Phase::Testing);
        active_->send_activation(round);
      }
      {
        CpuScope s(meter, kAggregator, Phase::Testing);
        aggregator_->aggregate_forward(round, false, 0.0);
      }
      {
        CpuScope s(meter, 0, Phase::Testing);
        const auto probs = active_->receive_predictions();
        rep.probabilities.insert(rep.probabilities.end(), probs.begin(), probs.end());
      }
    }
  } catch (const Error& e) {
    network_->set_phase(Phase::Training);
    throw Error(e.code(), "testing: " + e.detail());
  } catch (...) {
    network_->set_phase(Phase::Training);
    throw;
  }
  network_->set_phase(Phase::Training);

  const Vector y = active_->labels_for(rep.ids);
  std::size_t correct = 0;
  for (std::size_t k = 0; k < rep.probabilities.size(); ++k) {
    const std::uint8_t d = rep.probabilities[k] >= 0.5 ? 1 : 0;
    rep.decisions.push_back(d);
    if (d == (y(static_cast<Eigen::Index>(k)) > 0.5 ? 1 : 0)) ++correct;
  }
  rep.accuracy = static_cast<double>(correct) / static_cast<double>(rep.probabilities.size());
  rep.auc = roc_auc(rep.probabilities, std::span<const double>(y.data(), static_cast<std::size_t>(y.size())));
  return rep;
}

SessionMetrics Session::metrics() const {
  SessionMetrics m;
  m.kinds[0] = PartyKind::Active;
  for (const auto& p : passives_) m.kinds[p->index()] = PartyKind::Passive;
  m.kinds[kAggregator] = PartyKind::Aggregator;
  m.meter = network_->meter();
  return m;
}

Checkpoint Session::checkpoint() const {
  Checkpoint c;
  c.shards.push_back({"active", active_->shard_for(std::nullopt)});
  for (const auto& [cid, members] : ctx_.cluster_members) {
    c.shards.push_back({"cluster-" + std::to_string(cid), active_->shard_for(cid)});
  }
  c.global = aggregator_->global();
  return c;
}

void Session::restore(const Checkpoint& ckpt) {
  const std::size_t in = ctx_.layout.input_width();
  const std::size_t h = ctx_.layout.hidden;
  Matrix w = Matrix::Zero(static_cast<Eigen::Index>(in), static_cast<Eigen::Index>(h));
  std::vector<std::uint8_t> covered(in, 0);
  std::optional<Vector> bias;
  for (const auto& named : ckpt.shards) {
    const ModelShard& s = named.shard;
    if (s.hidden_width() != h || s.owned_columns.size() != s.input_width()) {
      throw Error(Errc::ShapeMismatch, "checkpoint shard '" + named.name + "' does not match the session");
    }
    for (std::size_t i = 0; i < s.owned_columns.size(); ++i) {
      const std::size_t col = s.owned_columns[i];
      if (col >= in || covered[col]) {
        throw Error(Errc::ShapeMismatch, "checkpoint column " + std::to_string(col) + " is out of range or repeated");
      }
      covered[col] = 1;
      w.row(static_cast<Eigen::Index>(col)) = s.weights.row(static_cast<Eigen::Index>(i));
    }
    if (s.bias) bias = *s.bias;
  }
  if (std::find(covered.begin(), covered.end(), 0) != covered.end() || !bias ||
      static_cast<std::size_t>(bias->size()) != h ||
      static_cast<std::size_t>(ckpt.global.weights.size()) != h) {
    throw Error(Errc::ShapeMismatch, "checkpoint does not cover the session's model");
  }
  active_->set_weights(std::move(w), *bias);
  aggregator_->set_global(ckpt.global);
}

void Session::inject_silence(PartyIndex party, Tag tag) { ctx_.silenced.insert({party, tag}); }

}  // namespace vflsa
