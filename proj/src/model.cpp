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

#include "vflsa/model.hpp"

#include <cmath>
#include <fstream>
#include <json.hpp>
#include <random>

#include "vflsa/error.hpp"
#include "vflsa/wire.hpp"

namespace vflsa {

namespace {

std::string shape_str(Eigen::Index r, Eigen::Index c) {
  return "[" + std::to_string(r) + " x " + std::to_string(c) + "]";
}

void require(bool ok, const std::string& what) {
  if (!ok) throw Error(Errc::ShapeMismatch, what);
}

Matrix apply_sigmoid(const Matrix& m) {
  return m.unaryExpr([](double x) { return sigmoid(x); });
}

}  // namespace

double sigmoid(double x) {
  if (x >= 0) return 1.0 / (1.0 + std::exp(-x));
  const double e = std::exp(x);
  return e / (1.0 + e);
}

PretrainResult pretrain_active(const Matrix& features, const Vector& labels, const PretrainConfig& config) {
  if (features.rows() == 0) throw Error(Errc::EmptyDataset, "pre-training needs at least one sample");
  require(labels.size() == features.rows(),
          "labels " + std::to_string(labels.size()) + " vs features " + shape_str(features.rows(), features.cols()));

  PretrainResult out;
  if (config.mode == PretrainMode::Identity) {
    out.embeddings = features;
    out.train_accuracy = std::nan("");
    return out;
  }

  const Eigen::Index n = features.rows();
  const Eigen::Index d = features.cols();
  const Eigen::Index h = config.hidden;
  std::mt19937_64 rng(config.seed);
  std::normal_distribution<double> normal(0.0, 1.0 / std::sqrt(static_cast<double>(std::max<Eigen::Index>(d, 1))));
  out.hidden_weights = Matrix(d, h);
  for (Eigen::Index i = 0; i < out.hidden_weights.size(); ++i) out.hidden_weights.data()[i] = normal(rng);
  out.hidden_bias = Vector::Zero(h);
  std::normal_distribution<double> normal_out(0.0, 1.0 / std::sqrt(static_cast<double>(h)));
  out.output_weights = Vector(h);
  for (Eigen::Index i = 0; i < h; ++i) out.output_weights[i] = normal_out(rng);
  out.output_bias = 0.0;

  // Full-batch gradient descent on mean cross-entropy.
  for (int epoch = 0; epoch < config.epochs; ++epoch) {
    Matrix pre = features * out.hidden_weights;
    pre.rowwise() += out.hidden_bias.transpose();
    const Matrix act = apply_sigmoid(pre);
    Vector logits = act * out.output_weights;
    logits.array() += out.output_bias;
    const LossResult lr = bce_loss_and_delta(logits, labels);

    const Vector g_out = act.transpose() * lr.dlogit;
    const double g_out_bias = lr.dlogit.sum();
    Matrix d_act = lr.dlogit * out.output_weights.transpose();
    d_act.array() *= act.array() * (1.0 - act.array());
    const Matrix g_hidden = features.transpose() * d_act;
    const Vector g_hidden_bias = d_act.colwise().sum().transpose();

    out.output_weights -= config.lr * g_out;
    out.output_bias -= config.lr * g_out_bias;
    out.hidden_weights -= config.lr * g_hidden;
    out.hidden_bias -= config.lr * g_hidden_bias;
  }

  out.embeddings = pretrain_embed(out, features);
  Vector logits = out.embeddings * out.output_weights;
  logits.array() += out.output_bias;
  Eigen::Index correct = 0;
  for (Eigen::Index i = 0; i < n; ++i) {
    const double pred = logits[i] >= 0.0 ? 1.0 : 0.0;
    if (pred == labels[i]) ++correct;
  }
  out.train_accuracy = static_cast<double>(correct) / static_cast<double>(n);
  return out;
}

Matrix pretrain_embed(const PretrainResult& model, const Matrix& features) {
  if (model.hidden_weights.size() == 0) return features;
  require(features.cols() == model.hidden_weights.rows(), "pre-train encoder expects " +
                                                              std::to_string(model.hidden_weights.rows()) +
                                                              " features, got " + std::to_string(features.cols()));
  Matrix pre = features * model.hidden_weights;
  pre.rowwise() += model.hidden_bias.transpose();
  return apply_sigmoid(pre);
}

PartialActivation local_forward(const ModelShard& shard, const Matrix& batch, const Presence& presence) {
  require(static_cast<std::size_t>(batch.cols()) == shard.input_width(),
          "batch " + shape_str(batch.rows(), batch.cols()) + " vs shard weights " +
              shape_str(shard.weights.rows(), shard.weights.cols()));
  require(presence.size() == static_cast<std::size_t>(batch.rows()), "presence length differs from batch rows");
  if (shard.bias) require(shard.bias->size() == shard.weights.cols(), "bias width differs from hidden width");

  PartialActivation out;
  out.presence = presence;
  out.values = batch * shard.weights;
  if (shard.bias) out.values.rowwise() += shard.bias->transpose();
  for (Eigen::Index r = 0; r < out.values.rows(); ++r) {
    if (!presence[static_cast<std::size_t>(r)]) out.values.row(r).setZero();
  }
  return out;
}

ForwardResult finish_forward(const Matrix& z, const GlobalModule& gm) {
  require(z.cols() == gm.weights.size(), "aggregate " + shape_str(z.rows(), z.cols()) + " vs global module width " +
                                             std::to_string(gm.weights.size()));
  ForwardResult out;
  out.relu_mask = z.array() > 0.0;
  out.hidden = z.cwiseMax(0.0);
  out.logits = out.hidden * gm.weights;
  out.logits.array() += gm.bias;
  return out;
}

LossResult bce_loss_and_delta(const Vector& logits, const Vector& labels) {
  require(logits.size() == labels.size(), "logits and labels differ in length");
  const Eigen::Index b = logits.size();
  LossResult out;
  out.dlogit = Vector(b);
  if (b == 0) return out;
  double total = 0.0;
  for (Eigen::Index k = 0; k < b; ++k) {
    const double l = logits[k];
    const double y = labels[k];
    // -[y log s(l) + (1-y) log(1-s(l))] == max(l,0) - l*y + log(1 + exp(-|l|))
    total += std::max(l, 0.0) - l * y + std::log1p(std::exp(-std::fabs(l)));
    out.dlogit[k] = (sigmoid(l) - y) / static_cast<double>(b);
  }
  out.loss = total / static_cast<double>(b);
  return out;
}

HiddenBackward backprop_hidden(const Vector& dlogit, const GlobalModule& gm, const ForwardResult& forward) {
  require(dlogit.size() == forward.hidden.rows(), "dlogit length differs from batch rows");
  require(gm.weights.size() == forward.hidden.cols(), "global module width differs from hidden width");
  HiddenBackward out;
  out.delta = (dlogit * gm.weights.transpose()).array() * forward.relu_mask.cast<double>();
  out.weight_grad = forward.hidden.transpose() * dlogit;
  out.bias_grad = dlogit.sum();
  return out;
}

PartialGradient local_backward(const Matrix& delta, const Matrix& batch, const Presence& presence, bool with_bias) {
  require(delta.rows() == batch.rows(), "delta " + shape_str(delta.rows(), delta.cols()) + " vs batch " +
                                            shape_str(batch.rows(), batch.cols()));
  require(presence.size() == static_cast<std::size_t>(batch.rows()), "presence length differs from batch rows");
  Matrix held_delta = delta;
  for (Eigen::Index r = 0; r < held_delta.rows(); ++r) {
    if (!presence[static_cast<std::size_t>(r)]) held_delta.row(r).setZero();
  }
  PartialGradient out;
  out.weight_grad = batch.transpose() * held_delta;
  if (with_bias) out.bias_grad = held_delta.colwise().sum().transpose();
  return out;
}

Matrix sgd_step(const Matrix& weights, const Matrix& grad, double lr) {
  require(weights.rows() == grad.rows() && weights.cols() == grad.cols(),
          "weights " + shape_str(weights.rows(), weights.cols()) + " vs grad " + shape_str(grad.rows(), grad.cols()));
  return weights - lr * grad;
}

Vector sgd_step(const Vector& weights, const Vector& grad, double lr) {
  require(weights.size() == grad.size(), "weights and grad differ in length");
  return weights - lr * grad;
}

double sgd_step(double weight, double grad, double lr) { return weight - lr * grad; }

// ---------------------------------------------------------------------------
// checkpoints

namespace {

void append_row_major(std::vector<std::uint8_t>& out, const Matrix& m) {
  for (Eigen::Index r = 0; r < m.rows(); ++r)
    for (Eigen::Index c = 0; c < m.cols(); ++c) wire::put_f64(out, m(r, c));
}

Matrix read_row_major(wire::Reader& in, Eigen::Index rows, Eigen::Index cols) {
  Matrix m(rows, cols);
  for (Eigen::Index r = 0; r < rows; ++r)
    for (Eigen::Index c = 0; c < cols; ++c) m(r, c) = in.f64();
  return m;
}

}  // namespace

void save_checkpoint(const std::string& prefix, const Checkpoint& ckpt) {
  using nlohmann::json;
  std::vector<std::uint8_t> blob;
  json tensors = json::array();
  auto add = [&](const std::string& name, const Matrix& m, const json& extra) {
    json t = {{"name", name}, {"shape", {m.rows(), m.cols()}}, {"offset", blob.size()}};
    t.update(extra);
    tensors.push_back(t);
    append_row_major(blob, m);
  };
  for (const auto& named : ckpt.shards) {
    add(named.name + ".weight", named.shard.weights, {{"owned_columns", named.shard.owned_columns}});
    if (named.shard.bias) add(named.name + ".bias", Matrix(*named.shard.bias), json::object());
  }
  add("global.weight", Matrix(ckpt.global.weights), json::object());
  add("global.bias", Matrix::Constant(1, 1, ckpt.global.bias), json::object());

  json meta = {{"format", "vflsa-checkpoint-v1"}, {"dtype", "f64-le"}, {"layout", "row-major"},
               {"bytes", blob.size()}, {"tensors", tensors}};
  std::ofstream bin(prefix + ".bin", std::ios::binary);
  if (!bin) throw Error(Errc::IoError, "cannot write " + prefix + ".bin");
  bin.write(reinterpret_cast<const char*>(blob.data()), static_cast<std::streamsize>(blob.size()));
  std::ofstream side(prefix + ".json");
  if (!side) throw Error(Errc::IoError, "cannot write " + prefix + ".json");
  side << meta.dump(2) << '\n';
}

Checkpoint load_checkpoint(const std::string& prefix) {
  using nlohmann::json;
  std::ifstream side(prefix + ".json");
  if (!side) throw Error(Errc::IoError, "cannot read " + prefix + ".json");
  json meta;
  try {
    meta = json::parse(side);
  } catch (const json::exception& e) {
    throw Error(Errc::ParseError, prefix + ".json: " + e.what());
  }
  std::ifstream bin(prefix + ".bin", std::ios::binary);
  if (!bin) throw Error(Errc::IoError, "cannot read " + prefix + ".bin");
  std::vector<std::uint8_t> blob((std::istreambuf_iterator<char>(bin)), std::istreambuf_iterator<char>());
  if (blob.size() != meta.at("bytes").get<std::size_t>()) {
    throw Error(Errc::ParseError, prefix + ".bin size disagrees with sidecar");
  }

  Checkpoint ckpt;
  for (const auto& t : meta.at("tensors")) {
    const auto name = t.at("name").get<std::string>();
    const auto rows = t.at("shape")[0].get<Eigen::Index>();
    const auto cols = t.at("shape")[1].get<Eigen::Index>();
    const auto offset = t.at("offset").get<std::size_t>();
    if (offset + static_cast<std::size_t>(rows * cols) * 8 > blob.size()) {
      throw Error(Errc::ParseError, "tensor " + name + " overruns " + prefix + ".bin");
    }
    wire::Reader in(std::span<const std::uint8_t>(blob).subspan(offset));
    Matrix m = read_row_major(in, rows, cols);

    const auto dot = name.rfind('.');
    const std::string owner = name.substr(0, dot);
    const std::string kind = name.substr(dot + 1);
    if (owner == "global") {
      if (kind == "weight") ckpt.global.weights = m.col(0);
      else ckpt.global.bias = m(0, 0);
      continue;
    }
    if (kind == "weight") {
      Checkpoint::Named named;
      named.name = owner;
      named.shard.weights = std::move(m);
      named.shard.owned_columns = t.at("owned_columns").get<std::vector<std::size_t>>();
      ckpt.shards.push_back(std::move(named));
    } else {
      if (ckpt.shards.empty() || ckpt.shards.back().name != owner) {
        throw Error(Errc::ParseError, "bias " + name + " precedes its weight");
      }
      ckpt.shards.back().shard.bias = Vector(m.col(0));
    }
  }
  return ckpt;
}

}  // namespace vflsa
