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

// The partitioned two-layer network.
//
// Each party holds a slice of the first linear layer over the columns it owns;
// the aggregator holds the output layer. With z the sum of all party slices,
//
//   logits = relu(z) * w_out + b_out
//
// and training minimises mean binary cross-entropy.

#include <Eigen/Dense>
#include <cstdint>
#include <optional>
#include <string>
#include <vector>

namespace vflsa {

using Matrix = Eigen::MatrixXd;
using Vector = Eigen::VectorXd;
using BoolMatrix = Eigen::Array<bool, Eigen::Dynamic, Eigen::Dynamic>;
// One flag per batch row: does this party hold the sample.
using Presence = std::vector<std::uint8_t>;

struct ModelShard {
  Matrix weights;               // [d_local x h]
  std::optional<Vector> bias;   // [h], active party only
  std::vector<std::size_t> owned_columns;

  std::size_t input_width() const { return static_cast<std::size_t>(weights.rows()); }
  std::size_t hidden_width() const { return static_cast<std::size_t>(weights.cols()); }
};

struct GlobalModule {
  Vector weights;  // [h]
  double bias = 0.0;
};

struct PartialActivation {
  Matrix values;  // [B x h]; rows with presence == 0 are exactly zero
  Presence presence;
};

struct PartialGradient {
  Matrix weight_grad;  // [d_local x h]
  std::optional<Vector> bias_grad;
};

enum class PretrainMode { Identity, LogisticHidden };

struct PretrainConfig {
  PretrainMode mode = PretrainMode::Identity;
  int hidden = 16;
  int epochs = 2000;
  double lr = 0.5;
  std::uint64_t seed = 0;
};

struct PretrainResult {
  Matrix embeddings;
  // Populated in LogisticHidden mode only.
  Matrix hidden_weights;
  Vector hidden_bias;
  Vector output_weights;
  double output_bias = 0.0;
  double train_accuracy = 0.0;
};

PretrainResult pretrain_active(const Matrix& features, const Vector& labels, const PretrainConfig& config);

// Applies a trained LogisticHidden encoder to new rows.
Matrix pretrain_embed(const PretrainResult& model, const Matrix& features);

PartialActivation local_forward(const ModelShard& shard, const Matrix& batch, const Presence& presence);

struct ForwardResult {
  Vector logits;        // [B]
  Matrix hidden;        // relu(z), [B x h]
  BoolMatrix relu_mask; // z > 0
};

ForwardResult finish_forward(const Matrix& z, const GlobalModule& gm);

struct LossResult {
  double loss = 0.0;
  Vector dlogit;  // d(loss)/d(logit), already divided by B
};

LossResult bce_loss_and_delta(const Vector& logits, const Vector& labels);

struct HiddenBackward {
  Matrix delta;  // d(loss)/dz, [B x h]
  Vector weight_grad;
  double bias_grad = 0.0;
};

HiddenBackward backprop_hidden(const Vector& dlogit, const GlobalModule& gm, const ForwardResult& forward);

PartialGradient local_backward(const Matrix& delta, const Matrix& batch, const Presence& presence, bool with_bias);

Matrix sgd_step(const Matrix& weights, const Matrix& grad, double lr);
Vector sgd_step(const Vector& weights, const Vector& grad, double lr);
double sgd_step(double weight, double grad, double lr);

double sigmoid(double x);

// Flat little-endian f64 tensors plus a JSON sidecar with shapes and column
// ownership. Files are <prefix>.bin and <prefix>.json.
struct Checkpoint {
  struct Named {
    std::string name;
    ModelShard shard;
  };
  std::vector<Named> shards;
  GlobalModule global;
};

void save_checkpoint(const std::string& prefix, const Checkpoint& ckpt);
Checkpoint load_checkpoint(const std::string& prefix);

}  // namespace vflsa
