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

// Party state machines and the session that drives them.
//
// Party 0 is the active party (labels, canonical first-layer weights), parties
// 1..N are passive, and the aggregator (index kAggregator) relays traffic, sums
// masked vectors and owns the output layer. Every byte between parties goes
// through the Network as an encoded frame.
//
// One training round, in message order:
//
//   active  -> agg      EncryptedBatch (one per cluster), WeightSlice (one per
//                       cluster), Labels
//   agg     -> members  EncryptedBatch, WeightSlice
//   parties -> agg      MaskedActivation            (forward aggregate)
//   agg     -> parties  Delta                       (d loss / d z, plus the loss for party 0)
//   passive -> agg      MaskedGradient              (backward aggregate, full layout)
//   agg     -> active   GradientForward             (sum of passive masked gradients)
//
// The active party adds its own masked gradient to the forwarded sum; only
// then do the masks cancel, so the aggregate gradient is visible to it alone.

#include <cstdint>
#include <functional>
#include <map>
#include <memory>
#include <optional>
#include <set>
#include <span>
#include <string>
#include <vector>

#include "vflsa/config.hpp"
#include "vflsa/crypto.hpp"
#include "vflsa/data.hpp"
#include "vflsa/error.hpp"
#include "vflsa/masking.hpp"
#include "vflsa/model.hpp"
#include "vflsa/rng.hpp"
#include "vflsa/transport.hpp"

namespace vflsa {

enum class RoundPhase { Setup, Forward, Backward, Idle };

struct RoundState {
  std::uint32_t epoch = 0;
  std::uint32_t round = 0;
  RoundPhase phase = RoundPhase::Idle;
};

// Columns of the first layer, laid out as [active block | cluster blocks in
// partition order]. ModelShard::owned_columns index into this layout.
struct FeatureLayout {
  struct Block {
    std::optional<std::uint16_t> cluster_id;  // empty: active block
    std::size_t offset = 0;
    std::size_t width = 0;
  };
  std::vector<Block> blocks;
  std::size_t hidden = 0;

  std::size_t input_width() const;
  // Length of a full-layout gradient vector: input_width * hidden + hidden (bias).
  std::size_t gradient_length() const;
  const Block& active() const { return blocks.front(); }
  const Block& cluster(std::uint16_t cluster_id) const;
};

// Per-peer keypairs and epoch keys of one party.
class PairwiseKeys {
 public:
  PairwiseKeys(PartyIndex self, std::uint64_t seed, bool os_entropy);

  // Fresh keypair per peer for `epoch`; returns (peer, public key).
  std::vector<std::pair<PartyIndex, Key32>> generate(std::uint32_t epoch, std::span<const PartyIndex> peers);
  // Combines the keypair made for `peer` with the peer's public key.
  void establish(PartyIndex peer, const Key32& peer_public_key);

  std::uint32_t epoch() const { return epoch_; }
  std::size_t established() const { return epoch_keys_.size(); }
  const EpochKeys& keys_for(PartyIndex peer) const;
  const SharedSecret& secret_for(PartyIndex peer) const;
  std::map<PartyIndex, Key32> prg_seeds() const;

 private:
  PartyIndex self_;
  std::uint64_t seed_;
  bool os_entropy_;
  std::uint32_t epoch_ = 0;
  std::map<PartyIndex, KeyPair> own_;
  std::map<PartyIndex, SharedSecret> secrets_;
  std::map<PartyIndex, EpochKeys> epoch_keys_;
};

// Per-cluster broadcast of one batch: entry k carries the id at batch position
// k, sealed under the key the active party shares with the cluster member that
// holds it (or under a throwaway key when no member does).
struct ClusterBatch {
  std::uint16_t cluster_id = 0;
  std::vector<EncryptedIdBatch> entries;

  Bytes to_payload() const;
  static ClusterBatch from_payload(std::span<const std::uint8_t> payload);
};

struct BatchSelection {
  std::vector<SampleId> ids;
  std::vector<ClusterBatch> clusters;  // secured mode only
};

// Sampling without replacement; B larger than the pool is clamped to the pool.
std::vector<SampleId> select_batch_ids(std::span<const SampleId> pool, std::size_t batch_size, Rng& rng);

// Shared by every session participant.
struct SessionContext {
  Network* network = nullptr;
  Mode mode = Mode::Secured;
  FixedPointCodec codec;
  bool os_entropy = false;
  FeatureLayout layout;
  std::vector<PartyIndex> clients;  // 0..N
  std::map<std::uint16_t, std::vector<PartyIndex>> cluster_members;
  // Called with each party's pre-mask vectors. Never serialized; test hook.
  std::function<void(PartyIndex, Tag, std::uint32_t round, std::span<const double>)> plaintext_tap;
  // One-shot fault injection: a party that skips its next message of a tag.
  std::set<std::pair<PartyIndex, Tag>> silenced;

  bool should_send(PartyIndex party, Tag tag);
};

class Client {
 public:
  Client(PartyIndex index, SessionContext& ctx, std::uint64_t seed);
  virtual ~Client() = default;

  PartyIndex index() const { return index_; }
  const PairwiseKeys& keys() const { return keys_; }
  const RoundState& state() const { return state_; }

  // Setup phase: answer the aggregator's PubKeyRequest, then consume the
  // forwarded keys and acknowledge.
  void on_pubkey_request();
  void on_pubkey_forward();

 protected:
  void send(Tag tag, std::uint32_t round, Bytes payload);
  Envelope recv(Tag tag);
  // Encodes and masks (secured) or serializes plain f64 (plain mode).
  Bytes contribution_payload(std::span<const double> values, const MaskContext& ctx, Tag tag);
  Phase phase() const { return ctx_.network->phase(); }

  PartyIndex index_;
  SessionContext& ctx_;
  PairwiseKeys keys_;
  RoundState state_;
};

class ActiveParty : public Client {
 public:
  ActiveParty(SessionContext& ctx, PartyData data, std::vector<SampleId> train_ids, std::vector<SampleId> test_ids,
              std::uint64_t seed);

  // Training round: select and announce the batch, ship weight slices and labels.
  BatchSelection begin_training_round(std::uint32_t round, std::size_t batch_size);
  void send_activation(std::uint32_t round);
  // Consumes Delta and GradientForward, recovers the aggregate gradient and
  // applies SGD. Returns the loss reported by the aggregator.
  double finish_training_round(std::uint32_t round, double lr);

  // Testing: announce a batch of test ids (no labels), send masked activation.
  void send_weight_slices(std::uint32_t round);
  BatchSelection begin_testing_batch(std::uint32_t round, std::span<const SampleId> ids);
  std::vector<double> receive_predictions();

  BatchSelection select_batch(std::uint32_t round, std::size_t batch_size);

  // For each cluster, holder[id] is the member holding sample `id`, or
  // kAggregator when no member does. Derived from the public partition.
  void set_holders(std::map<std::uint16_t, std::vector<PartyIndex>> holders);

  const PartyData& data() const { return data_; }
  const Matrix& weights() const { return weights_; }
  const Vector& bias() const { return bias_; }
  void set_weights(Matrix weights, Vector bias);
  ModelShard shard_for(std::optional<std::uint16_t> cluster_id) const;
  const std::vector<SampleId>& train_ids() const { return train_ids_; }
  const std::vector<SampleId>& test_ids() const { return test_ids_; }
  const std::vector<SampleId>& last_batch() const { return batch_; }
  Vector labels_for(std::span<const SampleId> ids) const;
  const Vector& last_gradient() const { return last_gradient_; }

 private:
  Matrix batch_features(std::span<const SampleId> ids) const;
  void announce_batch(std::uint32_t round, const BatchSelection& sel);
  std::vector<ClusterBatch> seal_batch(std::uint32_t round, std::span<const SampleId> ids);

  PartyData data_;
  std::vector<SampleId> train_ids_;
  std::vector<SampleId> test_ids_;
  Matrix weights_;  // full first layer, [input_width x h]
  Vector bias_;
  Rng batch_rng_;
  Rng crypto_rng_;
  std::vector<SampleId> batch_;
  Vector last_gradient_;
  NoncePhase nonce_phase_ = NoncePhase::Training;
  std::map<std::uint16_t, std::vector<PartyIndex>> holders_;
};

class PassiveParty : public Client {
 public:
  PassiveParty(SessionContext& ctx, PartyData data, std::uint64_t seed);

  // Receives the batch and weight slice, decrypts what it can, sends the
  // masked activation.
  void on_batch(std::uint32_t round, bool expect_weights);
  // Receives Delta and sends the masked full-layout gradient.
  void on_delta(std::uint32_t round);

  const PartyData& data() const { return data_; }
  std::uint16_t cluster_id() const { return *data_.cluster_id; }
  // Ids this party decrypted in the last batch, ascending.
  const std::vector<SampleId>& last_view() const { return view_; }
  const ModelShard& shard() const { return shard_; }

 private:
  PartyData data_;
  ModelShard shard_;
  std::size_t batch_len_ = 0;
  std::vector<SampleId> view_;
  Presence presence_;
  Matrix batch_;
};

class Aggregator {
 public:
  Aggregator(SessionContext& ctx, std::size_t hidden, std::uint64_t seed);

  // Setup phase.
  void request_public_keys(std::uint32_t epoch);
  void forward_public_keys(std::uint32_t epoch);
  void collect_acks(std::uint32_t epoch);

  // Relays EncryptedBatch/WeightSlice from the active party; keeps Labels.
  void relay_batch(std::uint32_t round, bool expect_weights, bool expect_labels);
  // Sums the masked activations, finishes the forward pass and, in training,
  // updates the output layer and broadcasts Delta. Returns the loss (or NaN
  // when testing).
  double aggregate_forward(std::uint32_t round, bool training, double lr);
  void relay_gradients(std::uint32_t round);

  const GlobalModule& global() const { return global_; }
  void set_global(GlobalModule gm) { global_ = std::move(gm); }
  const Matrix& last_aggregate() const { return z_; }

 private:
  Envelope recv_from(PartyIndex sender, Tag tag, Errc missing);

  SessionContext& ctx_;
  std::uint32_t epoch_ = 0;
  GlobalModule global_;
  std::map<PartyIndex, std::vector<std::pair<PartyIndex, Key32>>> pending_keys_;
  Vector labels_;
  std::size_t batch_len_ = 0;
  Matrix z_;
};

struct RoundReport {
  std::uint32_t round = 0;
  std::uint32_t epoch = 0;
  bool setup_ran = false;
  double loss = 0.0;
  std::size_t batch_size = 0;
  std::map<PartyIndex, std::uint64_t> bytes;  // sent + received in this round
  std::map<PartyIndex, double> cpu_ms;
};

struct TestReport {
  std::vector<SampleId> ids;
  std::vector<double> probabilities;
  std::vector<std::uint8_t> decisions;  // probability >= 0.5
  double accuracy = 0.0;
  double auc = 0.0;
  std::size_t setup_phases = 0;
};

// Area under the ROC curve with ties counted half; NaN when one class is absent.
double roc_auc(std::span<const double> scores, std::span<const double> labels);

struct PreparedData {
  DatasetSchema schema;
  PartitionSpec partition;
  EncodedDataset encoded;
  std::vector<SampleId> train_ids;
  std::vector<SampleId> test_ids;
  bool synthetic = true;
};

// Loads (or synthesizes), shuffles, splits and encodes the configured data.
PreparedData prepare_data(const SessionConfig& config);

class Session {
 public:
  explicit Session(SessionConfig config);
  Session(SessionConfig config, PreparedData data);
  ~Session();

  Session(const Session&) = delete;
  Session& operator=(const Session&) = delete;

  // Runs one setup phase for the next epoch; returns the number of pairwise
  // secrets established. Throws Errc::SetupTimeout if a party stays silent.
  std::size_t run_setup_phase();
  RoundReport run_training_round();
  std::vector<RoundReport> train(std::uint32_t rounds);
  // Masked inference over `ids` (default: the test split, capped by
  // max_test_samples). Runs its own setup phases, every K batches.
  TestReport run_testing_phase(std::optional<std::vector<SampleId>> ids = std::nullopt);

  const SessionConfig& config() const { return config_; }
  const PreparedData& data() const { return data_; }
  const FeatureLayout& layout() const { return ctx_.layout; }
  Network& network() { return *network_; }
  SessionContext& context() { return ctx_; }
  SessionMetrics metrics() const;
  std::size_t setup_phases_run() const { return setup_phases_; }
  std::uint32_t next_round() const { return next_round_; }
  std::uint32_t current_epoch() const { return epoch_; }
  const std::vector<RoundReport>& history() const { return history_; }
  std::size_t num_pairs() const;

  ActiveParty& active() { return *active_; }
  const ActiveParty& active() const { return *active_; }
  PassiveParty& passive(PartyIndex index);
  const std::vector<std::unique_ptr<PassiveParty>>& passives() const { return passives_; }
  Aggregator& aggregator() { return *aggregator_; }
  const Aggregator& aggregator() const { return *aggregator_; }

  Checkpoint checkpoint() const;
  void restore(const Checkpoint& ckpt);

  // The next message of `tag` from `party` is dropped (fault injection).
  void inject_silence(PartyIndex party, Tag tag);

 private:
  void build();
  void training_round_body(std::uint32_t round, RoundReport& rep);
  Client& client(PartyIndex index);

  SessionConfig config_;
  PreparedData data_;
  std::unique_ptr<Network> network_;
  SessionContext ctx_;
  std::unique_ptr<ActiveParty> active_;
  std::vector<std::unique_ptr<PassiveParty>> passives_;
  std::unique_ptr<Aggregator> aggregator_;
  std::size_t setup_phases_ = 0;
  std::uint32_t epoch_ = 0;
  bool keys_ready_ = false;
  std::uint32_t next_round_ = 0;
  std::uint32_t test_rounds_ = 0;
  std::vector<RoundReport> history_;
  PretrainResult pretrain_;
};

}  // namespace vflsa
