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
#include "vflsa/wire.hpp"

namespace vflsa {

namespace {

std::vector<double> flatten(const Matrix& m) {
  std::vector<double> out(static_cast<std::size_t>(m.size()));
  std::size_t k = 0;
  for (Eigen::Index r = 0; r < m.rows(); ++r)
    for (Eigen::Index c = 0; c < m.cols(); ++c) out[k++] = m(r, c);
  return out;
}

Matrix unflatten(std::span<const double> v, std::size_t rows, std::size_t cols) {
  if (v.size() != rows * cols) {
    throw Error(Errc::ShapeMismatch, "expected " + std::to_string(rows * cols) + " values, got " +
                                         std::to_string(v.size()));
  }
  Matrix m(rows, cols);
  std::size_t k = 0;
  for (std::size_t r = 0; r < rows; ++r)
    for (std::size_t c = 0; c < cols; ++c) m(r, c) = v[k++];
  return m;
}

Matrix init_uniform(std::size_t rows, std::size_t cols, std::size_t fan, Rng& rng) {
  const double a = std::sqrt(6.0 / static_cast<double>(fan));
  Matrix m(rows, cols);
  for (std::size_t r = 0; r < rows; ++r)
    for (std::size_t c = 0; c < cols; ++c) m(r, c) = (2.0 * uniform_unit(rng) - 1.0) * a;
  return m;
}

NoncePhase nonce_phase_of(Phase phase) {
  return phase == Phase::Training ? NoncePhase::Training : NoncePhase::Testing;
}

// Writes a [rows x h] block into a full-layout gradient vector at row `offset`.
void place_block(std::vector<double>& full, const Matrix& block, std::size_t offset, std::size_t hidden) {
  for (Eigen::Index r = 0; r < block.rows(); ++r)
    for (Eigen::Index c = 0; c < block.cols(); ++c)
      full[(offset + static_cast<std::size_t>(r)) * hidden + static_cast<std::size_t>(c)] = block(r, c);
}

std::vector<double> sum_plain(const std::vector<std::vector<double>>& parts) {
  if (parts.empty()) return {};
  std::vector<double> out(parts.front().size(), 0.0);
  for (const auto& p : parts) {
    if (p.size() != out.size()) throw Error(Errc::LengthMismatch, "contributions differ in length");
    for (std::size_t i = 0; i < p.size(); ++i) out[i] += p[i];
  }
  return out;
}

}  // namespace

// ---------------------------------------------------------------------------

std::size_t FeatureLayout::input_width() const {
  std::size_t w = 0;
  for (const auto& b : blocks) w += b.width;
  return w;
}

std::size_t FeatureLayout::gradient_length() const { return input_width() * hidden + hidden; }

const FeatureLayout::Block& FeatureLayout::cluster(std::uint16_t cluster_id) const {
  for (const auto& b : blocks)
    if (b.cluster_id == cluster_id) return b;
  throw Error(Errc::CoverageError, "no layout block for cluster " + std::to_string(cluster_id));
}

// ---------------------------------------------------------------------------

PairwiseKeys::PairwiseKeys(PartyIndex self, std::uint64_t seed, bool os_entropy)
    : self_(self), seed_(seed), os_entropy_(os_entropy) {}

std::vector<std::pair<PartyIndex, Key32>> PairwiseKeys::generate(std::uint32_t epoch,
                                                                 std::span<const PartyIndex> peers) {
  epoch_ = epoch;
  own_.clear();
  secrets_.clear();
  epoch_keys_.clear();
  std::vector<std::pair<PartyIndex, Key32>> out;
  for (PartyIndex peer : peers) {
    if (peer == self_) continue;
    KeyPair kp;
    if (os_entropy_) {
      kp = generate_keypair();
    } else {
      Bytes ikm;
      wire::put_u64(ikm, seed_);
      wire::put_u16(ikm, self_);
      wire::put_u16(ikm, peer);
      wire::put_u32(ikm, epoch);
      static constexpr std::string_view kSalt = "vflsa/keygen/v1";
      static constexpr std::string_view kInfo = "x25519";
      const Bytes okm = hkdf_sha256(ikm, {reinterpret_cast<const std::uint8_t*>(kSalt.data()), kSalt.size()},
                                    {reinterpret_cast<const std::uint8_t*>(kInfo.data()), kInfo.size()}, 32);
      Key32 entropy;
      std::copy(okm.begin(), okm.end(), entropy.begin());
      kp = generate_keypair(entropy);
    }
    own_[peer] = kp;
    out.emplace_back(peer, kp.public_key);
  }
  return out;
}

void PairwiseKeys::establish(PartyIndex peer, const Key32& peer_public_key) {
  auto it = own_.find(peer);
  if (it == own_.end()) throw Error(Errc::MissingPeer, "no keypair generated for peer " + std::to_string(peer));
  secrets_[peer] = derive_shared_secret(it->second, self_, peer_public_key, peer);
  epoch_keys_[peer] = derive_epoch_keys(secrets_[peer], epoch_);
}

const EpochKeys& PairwiseKeys::keys_for(PartyIndex peer) const {
  auto it = epoch_keys_.find(peer);
  if (it == epoch_keys_.end()) throw Error(Errc::MissingPeer, "no epoch keys for peer " + std::to_string(peer));
  return it->second;
}

const SharedSecret& PairwiseKeys::secret_for(PartyIndex peer) const {
  auto it = secrets_.find(peer);
  if (it == secrets_.end()) throw Error(Errc::MissingPeer, "no shared secret for peer " + std::to_string(peer));
  return it->second;
}

std::map<PartyIndex, Key32> PairwiseKeys::prg_seeds() const {
  std::map<PartyIndex, Key32> out;
  for (const auto& [peer, k] : epoch_keys_) out[peer] = k.prg_seed;
  return out;
}

// ---------------------------------------------------------------------------

Bytes ClusterBatch::to_payload() const {
  Bytes out;
  wire::put_u16(out, cluster_id);
  wire::put_u32(out, static_cast<std::uint32_t>(entries.size()));
  for (const auto& e : entries) {
    const Bytes w = e.to_wire();
    wire::put_u32(out, static_cast<std::uint32_t>(w.size()));
    out.insert(out.end(), w.begin(), w.end());
  }
  return out;
}

ClusterBatch ClusterBatch::from_payload(std::span<const std::uint8_t> payload) {
  wire::Reader in(payload);
  ClusterBatch b;
  b.cluster_id = in.u16();
  const std::uint32_t n = in.u32();
  b.entries.reserve(n);
  for (std::uint32_t k = 0; k < n; ++k) {
    const std::uint32_t len = in.u32();
    b.entries.push_back(EncryptedIdBatch::from_wire(b.cluster_id, in.take(len)));
  }
  if (!in.done()) throw Error(Errc::MalformedFrame, "trailing bytes after cluster batch");
  return b;
}

std::vector<SampleId> select_batch_ids(std::span<const SampleId> pool, std::size_t batch_size, Rng& rng) {
  if (pool.empty()) throw Error(Errc::EmptyDataset, "no samples to draw a batch from");
  std::vector<SampleId> ids(pool.begin(), pool.end());
  const std::size_t m = std::min(batch_size, ids.size());
  for (std::size_t i = 0; i < m; ++i) std::swap(ids[i], ids[i + uniform_below(rng, ids.size() - i)]);
  ids.resize(m);
  return ids;
}

bool SessionContext::should_send(PartyIndex party, Tag tag) {
  auto it = silenced.find({party, tag});
  if (it == silenced.end()) return true;
  silenced.erase(it);
  return false;
}

double roc_auc(std::span<const double> scores, std::span<const double> labels) {
  const std::size_t n = scores.size();
  if (labels.size() != n) throw Error(Errc::LengthMismatch, "scores and labels differ in length");
  std::vector<std::size_t> order(n);
  std::iota(order.begin(), order.end(), 0);
  std::sort(order.begin(), order.end(), [&](std::size_t a, std::size_t b) { return scores[a] < scores[b]; });
  double pos_rank_sum = 0.0;
  double pos = 0.0;
  for (std::size_t i = 0; i < n;) {
    std::size_t j = i;
    while (j < n && scores[order[j]] == scores[order[i]]) ++j;
    const double avg_rank = (static_cast<double>(i + 1) + static_cast<double>(j)) / 2.0;
    for (std::size_t k = i; k < j; ++k) {
      if (labels[order[k]] > 0.5) {
        pos_rank_sum += avg_rank;
        pos += 1.0;
      }
    }
    i = j;
  }
  const double neg = static_cast<double>(n) - pos;
  if (pos == 0.0 || neg == 0.0) return std::numeric_limits<double>::quiet_NaN();
  return (pos_rank_sum - pos * (pos + 1.0) / 2.0) / (pos * neg);
}

// ---------------------------------------------------------------------------

Client::Client(PartyIndex index, SessionContext& ctx, std::uint64_t seed)
    : index_(index), ctx_(ctx), keys_(index, seed, ctx.os_entropy) {}

void Client::send(Tag tag, std::uint32_t round, Bytes payload) {
  if (!ctx_.should_send(index_, tag)) return;
  ctx_.network->send(Envelope{tag, index_, kAggregator, state_.epoch, round, std::move(payload)});
}

Envelope Client::recv(Tag tag) { return ctx_.network->recv(index_, RecvFilter{tag, kAggregator}); }

Bytes Client::contribution_payload(std::span<const double> values, const MaskContext& mctx, Tag tag) {
  if (ctx_.plaintext_tap) ctx_.plaintext_tap(index_, tag, mctx.round, values);
  Bytes out;
  if (ctx_.mode == Mode::Plain) {
    wire::put_f64_vector(out, values);
    return out;
  }
  const MaskVector mask = compute_mask(index_, ctx_.clients, keys_.prg_seeds(), values.size(), mctx);
  wire::put_ring_vector(out, mask_values(values, ctx_.codec, mask));
  return out;
}

void Client::on_pubkey_request() {
  const Envelope req = recv(Tag::PubKeyRequest);
  wire::Reader in(req.payload);
  state_.epoch = in.u32();
  state_.phase = RoundPhase::Setup;
  const auto pairs = keys_.generate(state_.epoch, ctx_.clients);
  Bytes out;
  wire::put_u16(out, static_cast<std::uint16_t>(pairs.size()));
  for (const auto& [peer, pk] : pairs) {
    wire::put_u16(out, peer);
    out.insert(out.end(), pk.begin(), pk.end());
  }
  send(Tag::PubKeySet, state_.round, std::move(out));
}

void Client::on_pubkey_forward() {
  const Envelope fwd = recv(Tag::PubKeyForward);
  wire::Reader in(fwd.payload);
  const std::uint16_t n = in.u16();
  for (std::uint16_t k = 0; k < n; ++k) {
    const PartyIndex peer = in.u16();
    keys_.establish(peer, parse_public_key(in.take(32)));
  }
  Bytes ack;
  wire::put_u16(ack, static_cast<std::uint16_t>(keys_.established()));
  state_.phase = RoundPhase::Idle;
  send(Tag::Ack, state_.round, std::move(ack));
}

// ---------------------------------------------------------------------------

ActiveParty::ActiveParty(SessionContext& ctx, PartyData data, std::vector<SampleId> train_ids,
                         std::vector<SampleId> test_ids, std::uint64_t seed)
    : Client(0, ctx, mix_seed(seed, 0)),
      data_(std::move(data)),
      train_ids_(std::move(train_ids)),
      test_ids_(std::move(test_ids)),
      batch_rng_(mix_seed(seed, 1)),
      crypto_rng_(mix_seed(seed, 2)) {
  Rng init(mix_seed(seed, 3));
  const std::size_t in = ctx_.layout.input_width();
  const std::size_t h = ctx_.layout.hidden;
  weights_ = init_uniform(in, h, in + h, init);
  bias_ = Vector::Zero(static_cast<Eigen::Index>(h));
}

void ActiveParty::set_holders(std::map<std::uint16_t, std::vector<PartyIndex>> holders) {
  holders_ = std::move(holders);
}

void ActiveParty::set_weights(Matrix weights, Vector bias) {
  if (weights.rows() != weights_.rows() || weights.cols() != weights_.cols() || bias.size() != bias_.size()) {
    throw Error(Errc::ShapeMismatch, "first-layer weights do not match the feature layout");
  }
  weights_ = std::move(weights);
  bias_ = std::move(bias);
}

ModelShard ActiveParty::shard_for(std::optional<std::uint16_t> cluster_id) const {
  const auto& block = cluster_id ? ctx_.layout.cluster(*cluster_id) : ctx_.layout.active();
  ModelShard s;
  s.weights = weights_.middleRows(static_cast<Eigen::Index>(block.offset), static_cast<Eigen::Index>(block.width));
  if (!cluster_id) s.bias = bias_;
  s.owned_columns.resize(block.width);
  std::iota(s.owned_columns.begin(), s.owned_columns.end(), block.offset);
  return s;
}

Vector ActiveParty::labels_for(std::span<const SampleId> ids) const {
  Vector y(static_cast<Eigen::Index>(ids.size()));
  for (std::size_t k = 0; k < ids.size(); ++k) {
    const auto row = data_.row_of(ids[k]);
    if (!row) throw Error(Errc::CoverageError, "active party lacks sample " + std::to_string(ids[k]));
    y(static_cast<Eigen::Index>(k)) = data_.labels(static_cast<Eigen::Index>(*row));
  }
  return y;
}

Matrix ActiveParty::batch_features(std::span<const SampleId> ids) const {
  Matrix x(static_cast<Eigen::Index>(ids.size()), data_.features.cols());
  for (std::size_t k = 0; k < ids.size(); ++k) {
    const auto row = data_.row_of(ids[k]);
    if (!row) throw Error(Errc::CoverageError, "active party lacks sample " + std::to_string(ids[k]));
    x.row(static_cast<Eigen::Index>(k)) = data_.features.row(static_cast<Eigen::Index>(*row));
  }
  return x;
}

std::vector<ClusterBatch> ActiveParty::seal_batch(std::uint32_t round, std::span<const SampleId> ids) {
  std::vector<ClusterBatch> out;
  const NoncePhase np = nonce_phase_of(phase());
  for (const auto& [cluster_id, members] : ctx_.cluster_members) {
    ClusterBatch cb;
    cb.cluster_id = cluster_id;
    const auto hit = holders_.find(cluster_id);
    for (std::size_t k = 0; k < ids.size(); ++k) {
      const SampleId id = ids[k];
      PartyIndex holder = kAggregator;
      if (hit != holders_.end() && id < hit->second.size()) holder = hit->second[id];
      Key32 key;
      if (holder == kAggregator) {
        for (auto& b : key) b = static_cast<std::uint8_t>(crypto_rng_());
      } else {
        key = keys_.keys_for(holder).sym_key;
      }
      const SampleId one[1] = {id};
      cb.entries.push_back(encrypt_sample_ids(
          key, one, make_nonce(state_.epoch, round, np, 0, static_cast<std::uint16_t>(k)), cluster_id));
    }
    out.push_back(std::move(cb));
  }
  return out;
}

BatchSelection ActiveParty::select_batch(std::uint32_t round, std::size_t batch_size) {
  BatchSelection sel;
  sel.ids = select_batch_ids(train_ids_, batch_size, batch_rng_);
  state_.round = round;
  if (ctx_.mode == Mode::Secured) sel.clusters = seal_batch(round, sel.ids);
  return sel;
}

void ActiveParty::announce_batch(std::uint32_t round, const BatchSelection& sel) {
  if (ctx_.mode == Mode::Plain) {
    for (const auto& [cluster_id, members] : ctx_.cluster_members) {
      Bytes out;
      wire::put_u16(out, cluster_id);
      const Bytes ids = serialize_ids(sel.ids);
      out.insert(out.end(), ids.begin(), ids.end());
      send(Tag::EncryptedBatch, round, std::move(out));
    }
  } else {
    for (const auto& cb : sel.clusters) send(Tag::EncryptedBatch, round, cb.to_payload());
  }
  batch_ = sel.ids;
}

void ActiveParty::send_weight_slices(std::uint32_t round) {
  for (const auto& [cluster_id, members] : ctx_.cluster_members) {
    const ModelShard s = shard_for(cluster_id);
    Bytes out;
    wire::put_u16(out, cluster_id);
    wire::put_u32(out, static_cast<std::uint32_t>(s.weights.rows()));
    wire::put_u32(out, static_cast<std::uint32_t>(s.weights.cols()));
    wire::put_f64_vector(out, flatten(s.weights));
    send(Tag::WeightSlice, round, std::move(out));
  }
}

BatchSelection ActiveParty::begin_training_round(std::uint32_t round, std::size_t batch_size) {
  state_.phase = RoundPhase::Forward;
  BatchSelection sel = select_batch(round, batch_size);
  announce_batch(round, sel);
  send_weight_slices(round);
  const Vector y = labels_for(sel.ids);
  Bytes labels;
  wire::put_f64_vector(labels, std::span<const double>(y.data(), static_cast<std::size_t>(y.size())));
  send(Tag::Labels, round, std::move(labels));
  return sel;
}

BatchSelection ActiveParty::begin_testing_batch(std::uint32_t round, std::span<const SampleId> ids) {
  state_.phase = RoundPhase::Forward;
  state_.round = round;
  BatchSelection sel;
  sel.ids.assign(ids.begin(), ids.end());
  if (ctx_.mode == Mode::Secured) sel.clusters = seal_batch(round, sel.ids);
  announce_batch(round, sel);
  return sel;
}

void ActiveParty::send_activation(std::uint32_t round) {
  const Matrix x = batch_features(batch_);
  const Presence all(batch_.size(), 1);
  const PartialActivation act = local_forward(shard_for(std::nullopt), x, all);
  const MaskContext mctx{state_.epoch, round, MaskDirection::Forward, nonce_phase_of(phase())};
  send(Tag::MaskedActivation, round, contribution_payload(flatten(act.values), mctx, Tag::MaskedActivation));
}

double ActiveParty::finish_training_round(std::uint32_t round, double lr) {
  state_.phase = RoundPhase::Backward;
  const std::size_t h = ctx_.layout.hidden;
  const Envelope d = recv(Tag::Delta);
  wire::Reader in(d.payload);
  const Matrix delta = unflatten(in.f64_vector(), batch_.size(), h);
  const double loss = in.f64();

  const Matrix x = batch_features(batch_);
  const Presence all(batch_.size(), 1);
  const PartialGradient own = local_backward(delta, x, all, true);
  const std::size_t len = ctx_.layout.gradient_length();
  std::vector<double> g(len, 0.0);
  place_block(g, own.weight_grad, ctx_.layout.active().offset, h);
  for (std::size_t c = 0; c < h; ++c) g[len - h + c] = (*own.bias_grad)(static_cast<Eigen::Index>(c));

  const Envelope fwd = recv(Tag::GradientForward);
  wire::Reader fin(fwd.payload);
  std::vector<double> total;
  if (ctx_.mode == Mode::Plain) {
    total = sum_plain({fin.f64_vector(), g});
  } else {
    const MaskContext mctx{state_.epoch, round, MaskDirection::Backward, nonce_phase_of(phase())};
    const MaskVector mask = compute_mask(index_, ctx_.clients, keys_.prg_seeds(), len, mctx);
    const RingVector parts[2] = {fin.ring_vector(), mask_values(g, ctx_.codec, mask)};
    total = ctx_.codec.decode(sum_masked(parts));
  }
  if (total.size() != len) throw Error(Errc::LengthMismatch, "aggregate gradient has the wrong length");

  const std::size_t in_w = ctx_.layout.input_width();
  const Matrix gw = unflatten(std::span<const double>(total).first(in_w * h), in_w, h);
  Vector gb(static_cast<Eigen::Index>(h));
  for (std::size_t c = 0; c < h; ++c) gb(static_cast<Eigen::Index>(c)) = total[in_w * h + c];
  weights_ = sgd_step(weights_, gw, lr);
  bias_ = sgd_step(bias_, gb, lr);
  last_gradient_ = Eigen::Map<const Vector>(total.data(), static_cast<Eigen::Index>(total.size()));
  state_.phase = RoundPhase::Idle;
  return loss;
}

std::vector<double> ActiveParty::receive_predictions() {
  const Envelope p = recv(Tag::Prediction);
  wire::Reader in(p.payload);
  state_.phase = RoundPhase::Idle;
  return in.f64_vector();
}

// ---------------------------------------------------------------------------

PassiveParty::PassiveParty(SessionContext& ctx, PartyData data, std::uint64_t seed)
    : Client(data.party, ctx, seed), data_(std::move(data)) {
  if (!data_.cluster_id) throw Error(Errc::ConfigError, "passive party without a cluster");
}

void PassiveParty::on_batch(std::uint32_t round, bool expect_weights) {
  state_.phase = RoundPhase::Forward;
  state_.round = round;
  const std::size_t h = ctx_.layout.hidden;
  const auto& block = ctx_.layout.cluster(cluster_id());

  if (expect_weights) {
    const Envelope w = recv(Tag::WeightSlice);
    wire::Reader in(w.payload);
    const std::uint16_t cid = in.u16();
    const std::uint32_t rows = in.u32();
    const std::uint32_t cols = in.u32();
    if (cid != cluster_id() || rows != block.width || cols != h) {
      throw Error(Errc::ShapeMismatch, "weight slice does not match this party's block");
    }
    shard_.weights = unflatten(in.f64_vector(), rows, cols);
    shard_.bias.reset();
    shard_.owned_columns.resize(block.width);
    std::iota(shard_.owned_columns.begin(), shard_.owned_columns.end(), block.offset);
  }

  const Envelope b = recv(Tag::EncryptedBatch);
  view_.clear();
  std::vector<std::optional<SampleId>> at;
  if (ctx_.mode == Mode::Plain) {
    wire::Reader in(b.payload);
    in.u16();
    const auto ids = deserialize_ids(in.take(in.remaining()));
    for (SampleId id : ids) at.push_back(data_.row_of(id) ? std::optional(id) : std::nullopt);
  } else {
    const ClusterBatch cb = ClusterBatch::from_payload(b.payload);
    if (cb.cluster_id != cluster_id()) throw Error(Errc::ProtocolViolation, "batch for another cluster");
    const Key32& key = keys_.keys_for(0).sym_key;
    for (const auto& e : cb.entries) {
      auto ids = try_decrypt_sample_ids(key, e);
      if (ids && ids->size() == 1 && data_.row_of(ids->front())) at.push_back(ids->front());
      else at.push_back(std::nullopt);
    }
  }

  batch_len_ = at.size();
  presence_.assign(batch_len_, 0);
  batch_ = Matrix::Zero(static_cast<Eigen::Index>(batch_len_), data_.features.cols());
  for (std::size_t k = 0; k < batch_len_; ++k) {
    if (!at[k]) continue;
    presence_[k] = 1;
    view_.push_back(*at[k]);
    batch_.row(static_cast<Eigen::Index>(k)) =
        data_.features.row(static_cast<Eigen::Index>(*data_.row_of(*at[k])));
  }
  std::sort(view_.begin(), view_.end());

  const PartialActivation act = local_forward(shard_, batch_, presence_);
  const MaskContext mctx{state_.epoch, round, MaskDirection::Forward, nonce_phase_of(phase())};
  send(Tag::MaskedActivation, round, contribution_payload(flatten(act.values), mctx, Tag::MaskedActivation));
}

void PassiveParty::on_delta(std::uint32_t round) {
  state_.phase = RoundPhase::Backward;
  const std::size_t h = ctx_.layout.hidden;
  const Envelope d = recv(Tag::Delta);
  wire::Reader in(d.payload);
  const Matrix delta = unflatten(in.f64_vector(), batch_len_, h);
  const PartialGradient pg = local_backward(delta, batch_, presence_, false);
  std::vector<double> g(ctx_.layout.gradient_length(), 0.0);
  place_block(g, pg.weight_grad, ctx_.layout.cluster(cluster_id()).offset, h);
  const MaskContext mctx{state_.epoch, round, MaskDirection::Backward, nonce_phase_of(phase())};
  send(Tag::MaskedGradient, round, contribution_payload(g, mctx, Tag::MaskedGradient));
  state_.phase = RoundPhase::Idle;
}

// ---------------------------------------------------------------------------

Aggregator::Aggregator(SessionContext& ctx, std::size_t hidden, std::uint64_t seed) : ctx_(ctx) {
  Rng init(mix_seed(seed, 3));
  global_.weights = init_uniform(hidden, 1, hidden + 1, init).col(0);
  global_.bias = 0.0;
}

Envelope Aggregator::recv_from(PartyIndex sender, Tag tag, Errc missing) {
  auto e = ctx_.network->try_recv(kAggregator, RecvFilter{tag, sender});
  if (!e) {
    throw Error(missing, "no " + std::string(tag_name(tag)) + " from party " + std::to_string(sender));
  }
  return std::move(*e);
}

void Aggregator::request_public_keys(std::uint32_t epoch) {
  epoch_ = epoch;
  pending_keys_.clear();
  for (PartyIndex p : ctx_.clients) {
    if (!ctx_.should_send(kAggregator, Tag::PubKeyRequest)) continue;
    Bytes out;
    wire::put_u32(out, epoch);
    ctx_.network->send(Envelope{Tag::PubKeyRequest, kAggregator, p, epoch, 0, std::move(out)});
  }
}

void Aggregator::forward_public_keys(std::uint32_t epoch) {
  for (PartyIndex p : ctx_.clients) {
    const Envelope e = recv_from(p, Tag::PubKeySet, Errc::SetupTimeout);
    wire::Reader in(e.payload);
    const std::uint16_t n = in.u16();
    for (std::uint16_t k = 0; k < n; ++k) {
      const PartyIndex peer = in.u16();
      const auto pk = in.take(32);
      Key32 key;
      std::copy(pk.begin(), pk.end(), key.begin());
      pending_keys_[peer].emplace_back(p, key);
    }
  }
  for (PartyIndex p : ctx_.clients) {
    const auto& keys = pending_keys_[p];
    Bytes out;
    wire::put_u16(out, static_cast<std::uint16_t>(keys.size()));
    for (const auto& [from, pk] : keys) {
      wire::put_u16(out, from);
      out.insert(out.end(), pk.begin(), pk.end());
    }
    ctx_.network->send(Envelope{Tag::PubKeyForward, kAggregator, p, epoch, 0, std::move(out)});
  }
}

void Aggregator::collect_acks(std::uint32_t /*epoch*/) {
  for (PartyIndex p : ctx_.clients) recv_from(p, Tag::Ack, Errc::SetupTimeout);
  pending_keys_.clear();
}

void Aggregator::relay_batch(std::uint32_t round, bool expect_weights, bool expect_labels) {
  auto relay = [&](Tag tag) {
    for (std::size_t k = 0; k < ctx_.cluster_members.size(); ++k) {
      Envelope e = recv_from(0, tag, Errc::MissingMessage);
      wire::Reader in(e.payload);
      const std::uint16_t cid = in.u16();
      auto it = ctx_.cluster_members.find(cid);
      if (it == ctx_.cluster_members.end()) throw Error(Errc::ProtocolViolation, "unknown cluster " + std::to_string(cid));
      for (PartyIndex m : it->second) {
        ctx_.network->send(Envelope{tag, kAggregator, m, e.epoch, round, e.payload});
      }
    }
  };
  relay(Tag::EncryptedBatch);
  if (expect_weights) relay(Tag::WeightSlice);
  if (expect_labels) {
    const Envelope l = recv_from(0, Tag::Labels, Errc::MissingMessage);
    wire::Reader in(l.payload);
    const auto y = in.f64_vector();
    labels_ = Eigen::Map<const Vector>(y.data(), static_cast<Eigen::Index>(y.size()));
  }
}

double Aggregator::aggregate_forward(std::uint32_t round, bool training, double lr) {
  const std::size_t h = global_.weights.size();
  std::vector<double> z;
  std::uint32_t epoch = epoch_;
  if (ctx_.mode == Mode::Plain) {
    std::vector<std::vector<double>> parts;
    for (PartyIndex p : ctx_.clients) {
      const Envelope e = recv_from(p, Tag::MaskedActivation, Errc::MissingContribution);
      wire::Reader in(e.payload);
      parts.push_back(in.f64_vector());
    }
    z = sum_plain(parts);
  } else {
    std::vector<RingVector> parts;
    for (PartyIndex p : ctx_.clients) {
      const Envelope e = recv_from(p, Tag::MaskedActivation, Errc::MissingContribution);
      epoch = e.epoch;
      wire::Reader in(e.payload);
      parts.push_back(in.ring_vector());
    }
    z = ctx_.codec.decode(sum_masked(parts));
  }
  if (z.size() % h != 0) throw Error(Errc::ShapeMismatch, "aggregate activation is not a multiple of h");
  batch_len_ = z.size() / h;
  z_ = unflatten(z, batch_len_, h);
  const ForwardResult fwd = finish_forward(z_, global_);

  if (!training) {
    std::vector<double> prob(batch_len_);
    for (std::size_t k = 0; k < batch_len_; ++k) prob[k] = sigmoid(fwd.logits(static_cast<Eigen::Index>(k)));
    Bytes out;
    wire::put_f64_vector(out, prob);
    if (ctx_.should_send(kAggregator, Tag::Prediction)) {
      ctx_.network->send(Envelope{Tag::Prediction, kAggregator, 0, epoch, round, std::move(out)});
    }
    return std::numeric_limits<double>::quiet_NaN();
  }

  if (static_cast<std::size_t>(labels_.size()) != batch_len_) {
    throw Error(Errc::ShapeMismatch, "labels do not match the batch");
  }
  const LossResult lr_ = bce_loss_and_delta(fwd.logits, labels_);
  const HiddenBackward hb = backprop_hidden(lr_.dlogit, global_, fwd);
  global_.weights = sgd_step(global_.weights, hb.weight_grad, lr);
  global_.bias = sgd_step(global_.bias, hb.bias_grad, lr);

  const std::vector<double> delta = flatten(hb.delta);
  for (PartyIndex p : ctx_.clients) {
    if (!ctx_.should_send(kAggregator, Tag::Delta)) continue;
    Bytes out;
    wire::put_f64_vector(out, delta);
    if (p == 0) wire::put_f64(out, lr_.loss);
    ctx_.network->send(Envelope{Tag::Delta, kAggregator, p, epoch, round, std::move(out)});
  }
  return lr_.loss;
}

void Aggregator::relay_gradients(std::uint32_t round) {
  const std::size_t len = ctx_.layout.gradient_length();
  Bytes out;
  std::uint32_t epoch = epoch_;
  if (ctx_.mode == Mode::Plain) {
    std::vector<std::vector<double>> parts;
    for (PartyIndex p : ctx_.clients) {
      if (p == 0) continue;
      const Envelope e = recv_from(p, Tag::MaskedGradient, Errc::MissingContribution);
      wire::Reader in(e.payload);
      parts.push_back(in.f64_vector());
    }
    auto sum = parts.empty() ? std::vector<double>(len, 0.0) : sum_plain(parts);
    wire::put_f64_vector(out, sum);
  } else {
    std::vector<RingVector> parts;
    for (PartyIndex p : ctx_.clients) {
      if (p == 0) continue;
      const Envelope e = recv_from(p, Tag::MaskedGradient, Errc::MissingContribution);
      epoch = e.epoch;
      wire::Reader in(e.payload);
      parts.push_back(in.ring_vector());
    }
    auto sum = parts.empty() ? RingVector(len) : sum_masked(parts);
    wire::put_ring_vector(out, sum);
  }
  if (ctx_.should_send(kAggregator, Tag::GradientForward)) {
    ctx_.network->send(Envelope{Tag::GradientForward, kAggregator, 0, epoch, round, std::move(out)});
  }
}

}  // namespace vflsa
