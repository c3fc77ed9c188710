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
#include <filesystem>
#include <random>

#include "test_util.hpp"
#include "vflsa/model.hpp"

using namespace vflsa;
using vflsa::testing::error_code_of;

namespace {

Matrix random_matrix(Eigen::Index r, Eigen::Index c, std::mt19937_64& rng) {
  std::uniform_real_distribution<double> u(-1.0, 1.0);
  Matrix m(r, c);
  for (Eigen::Index i = 0; i < m.size(); ++i) m.data()[i] = u(rng);
  return m;
}

// Loop-based reference of the whole network, no Eigen products.
double reference_loss(const std::vector<Matrix>& xs, const std::vector<Matrix>& ws, const Vector& bias,
                      const GlobalModule& gm, const Vector& y) {
  const Eigen::Index b = xs[0].rows();
  const Eigen::Index h = ws[0].cols();
  double total = 0.0;
  for (Eigen::Index r = 0; r < b; ++r) {
    double logit = gm.bias;
    for (Eigen::Index k = 0; k < h; ++k) {
      double z = bias[k];
      for (std::size_t p = 0; p < xs.size(); ++p)
        for (Eigen::Index j = 0; j < xs[p].cols(); ++j) z += xs[p](r, j) * ws[p](j, k);
      logit += std::max(z, 0.0) * gm.weights[k];
    }
    const double s = 1.0 / (1.0 + std::exp(-logit));
    total += -(y[r] * std::log(s) + (1.0 - y[r]) * std::log(1.0 - s));
  }
  return total / static_cast<double>(b);
}

struct Instance {
  std::vector<Matrix> xs;
  std::vector<Matrix> ws;
  Vector bias;
  GlobalModule gm;
  Vector y;
};

Instance make_instance(std::uint64_t seed, Eigen::Index b, std::vector<Eigen::Index> widths, Eigen::Index h) {
  std::mt19937_64 rng(seed);
  Instance in;
  for (auto w : widths) {
    in.xs.push_back(random_matrix(b, w, rng));
    in.ws.push_back(random_matrix(w, h, rng));
  }
  in.bias = random_matrix(h, 1, rng).col(0);
  in.gm.weights = random_matrix(h, 1, rng).col(0);
  in.gm.bias = 0.1;
  in.y = Vector(b);
  for (Eigen::Index r = 0; r < b; ++r) in.y[r] = static_cast<double>(rng() & 1);
  return in;
}

Matrix aggregate(const Instance& in) {
  const Presence all(static_cast<std::size_t>(in.xs[0].rows()), 1);
  Matrix z = Matrix::Zero(in.xs[0].rows(), in.ws[0].cols());
  for (std::size_t p = 0; p < in.xs.size(); ++p) {
    ModelShard s{in.ws[p], p == 0 ? std::optional<Vector>(in.bias) : std::nullopt, {}};
    z += local_forward(s, in.xs[p], all).values;
  }
  return z;
}

}  // namespace

TEST_CASE("local forward matches a loop product and zeroes absent rows") {
  std::mt19937_64 rng(1);
  const Matrix x = random_matrix(4, 3, rng);
  const Matrix w = random_matrix(3, 2, rng);
  const Presence presence = {1, 0, 1, 1};
  const auto out = local_forward(ModelShard{w, std::nullopt, {}}, x, presence);
  for (int r = 0; r < 4; ++r) {
    for (int k = 0; k < 2; ++k) {
      double want = 0.0;
      for (int j = 0; j < 3; ++j) want += x(r, j) * w(j, k);
      CHECK(out.values(r, k) == doctest::Approx(presence[r] ? want : 0.0).epsilon(1e-14));
    }
  }
  CHECK(out.values.row(1).isZero(0.0));
}

TEST_CASE("sum of shard activations equals the monolithic layer") {
  const Instance in = make_instance(2, 6, {5, 3, 4}, 7);
  const Matrix z = aggregate(in);
  Matrix x(6, 12), w(12, 7);
  x << in.xs[0], in.xs[1], in.xs[2];
  w << in.ws[0], in.ws[1], in.ws[2];
  Matrix mono = x * w;
  mono.rowwise() += in.bias.transpose();
  CHECK((z - mono).cwiseAbs().maxCoeff() < 1e-12);
}

TEST_CASE("forward loss matches the loop reference") {
  const Instance in = make_instance(3, 9, {4, 2}, 5);
  const auto fwd = finish_forward(aggregate(in), in.gm);
  const auto loss = bce_loss_and_delta(fwd.logits, in.y);
  CHECK(loss.loss == doctest::Approx(reference_loss(in.xs, in.ws, in.bias, in.gm, in.y)).epsilon(1e-12));
}

TEST_CASE("backward pass agrees with central differences") {
  Instance in = make_instance(4, 5, {5, 3}, 8);
  const auto fwd = finish_forward(aggregate(in), in.gm);
  const auto loss = bce_loss_and_delta(fwd.logits, in.y);
  const auto hb = backprop_hidden(loss.dlogit, in.gm, fwd);
  const Presence all(5, 1);
  const double eps = 1e-6;
  for (std::size_t p = 0; p < in.ws.size(); ++p) {
    const auto g = local_backward(hb.delta, in.xs[p], all, p == 0);
    for (Eigen::Index i = 0; i < in.ws[p].size(); ++i) {
      Instance plus = in, minus = in;
      plus.ws[p].data()[i] += eps;
      minus.ws[p].data()[i] -= eps;
      const double num = (reference_loss(plus.xs, plus.ws, plus.bias, plus.gm, plus.y) -
                          reference_loss(minus.xs, minus.ws, minus.bias, minus.gm, minus.y)) /
                         (2 * eps);
      CHECK(std::fabs(num - g.weight_grad.data()[i]) < 1e-5);
    }
    if (p == 0) {
      for (Eigen::Index k = 0; k < in.bias.size(); ++k) {
        Instance plus = in, minus = in;
        plus.bias[k] += eps;
        minus.bias[k] -= eps;
        const double num = (reference_loss(plus.xs, plus.ws, plus.bias, plus.gm, plus.y) -
                            reference_loss(minus.xs, minus.ws, minus.bias, minus.gm, minus.y)) /
                           (2 * eps);
        CHECK(std::fabs(num - (*g.bias_grad)[k]) < 1e-5);
      }
    }
  }
  for (Eigen::Index k = 0; k < in.gm.weights.size(); ++k) {
    Instance plus = in, minus = in;
    plus.gm.weights[k] += eps;
    minus.gm.weights[k] -= eps;
    const double num = (reference_loss(plus.xs, plus.ws, plus.bias, plus.gm, plus.y) -
                        reference_loss(minus.xs, minus.ws, minus.bias, minus.gm, minus.y)) /
                       (2 * eps);
    CHECK(std::fabs(num - hb.weight_grad[k]) < 1e-5);
  }
}

TEST_CASE("partial gradients of disjoint row sets sum to the full gradient") {
  std::mt19937_64 rng(8);
  const Matrix delta = random_matrix(6, 3, rng);
  const Matrix x = random_matrix(6, 4, rng);
  const Presence a = {1, 0, 1, 0, 1, 0};
  const Presence b = {0, 1, 0, 1, 0, 1};
  const Presence all(6, 1);
  const Matrix sum = local_backward(delta, x, a, true).weight_grad + local_backward(delta, x, b, true).weight_grad;
  CHECK((sum - local_backward(delta, x, all, true).weight_grad).cwiseAbs().maxCoeff() < 1e-12);
  CHECK_FALSE(local_backward(delta, x, a, false).bias_grad.has_value());
}

TEST_CASE("cross-entropy is stable for extreme logits") {
  Vector logits(4);
  logits << 1000.0, -1000.0, 800.0, -800.0;
  Vector y(4);
  y << 1.0, 0.0, 0.0, 1.0;
  const auto r = bce_loss_and_delta(logits, y);
  CHECK(std::isfinite(r.loss));
  CHECK(r.loss == doctest::Approx((800.0 + 800.0) / 4.0));
  CHECK(r.dlogit[0] == doctest::Approx(0.0));
  CHECK(r.dlogit[2] == doctest::Approx(0.25));
  CHECK(sigmoid(-1000.0) == 0.0);
  CHECK(sigmoid(1000.0) == 1.0);
  CHECK(sigmoid(0.0) == 0.5);
}

TEST_CASE("relu gate uses strict positivity") {
  Matrix z(1, 3);
  z << -1.0, 0.0, 2.0;
  GlobalModule gm{Vector::Ones(3), 0.5};
  const auto f = finish_forward(z, gm);
  CHECK(f.logits[0] == 2.5);
  CHECK_FALSE(f.relu_mask(0, 1));
  CHECK(f.relu_mask(0, 2));
}

TEST_CASE("sgd") {
  Matrix w(1, 2);
  w << 1.0, 2.0;
  Matrix g(1, 2);
  g << 10.0, -10.0;
  const Matrix out = sgd_step(w, g, 0.1);
  CHECK(out(0, 0) == doctest::Approx(0.0));
  CHECK(out(0, 1) == doctest::Approx(3.0));
  CHECK(sgd_step(1.0, 2.0, 0.5) == 0.0);
  CHECK(error_code_of([&] { sgd_step(w, Matrix(2, 1), 0.1); }) == Errc::ShapeMismatch);
}

TEST_CASE("shape errors") {
  const ModelShard s{Matrix::Zero(3, 2), std::nullopt, {}};
  CHECK(error_code_of([&] { local_forward(s, Matrix::Zero(2, 4), Presence(2, 1)); }) == Errc::ShapeMismatch);
  CHECK(error_code_of([&] { local_forward(s, Matrix::Zero(2, 3), Presence(3, 1)); }) == Errc::ShapeMismatch);
  CHECK(error_code_of([&] { finish_forward(Matrix::Zero(2, 3), GlobalModule{Vector::Zero(2), 0}); }) ==
        Errc::ShapeMismatch);
  CHECK(error_code_of([&] { bce_loss_and_delta(Vector::Zero(2), Vector::Zero(3)); }) == Errc::ShapeMismatch);
  CHECK(error_code_of([&] { pretrain_active(Matrix(0, 3), Vector(0), {}); }) == Errc::EmptyDataset);
}

TEST_CASE("checkpoint round trip") {
  std::mt19937_64 rng(11);
  Checkpoint c;
  c.shards.push_back({"active", ModelShard{random_matrix(3, 4, rng), Vector(random_matrix(4, 1, rng).col(0)), {0, 1, 2}}});
  c.shards.push_back({"cluster-1", ModelShard{random_matrix(2, 4, rng), std::nullopt, {3, 4}}});
  c.global = GlobalModule{random_matrix(4, 1, rng).col(0), -0.25};
  const auto dir = std::filesystem::temp_directory_path() / "vflsa_model_ckpt";
  std::filesystem::create_directories(dir);
  const std::string prefix = (dir / "m").string();
  save_checkpoint(prefix, c);
  const Checkpoint back = load_checkpoint(prefix);
  REQUIRE(back.shards.size() == 2);
  CHECK(back.shards[0].shard.weights == c.shards[0].shard.weights);
  CHECK(*back.shards[0].shard.bias == *c.shards[0].shard.bias);
  CHECK(back.shards[1].shard.owned_columns == std::vector<std::size_t>{3, 4});
  CHECK_FALSE(back.shards[1].shard.bias.has_value());
  CHECK(back.global.weights == c.global.weights);
  CHECK(back.global.bias == -0.25);
  CHECK(std::filesystem::file_size(prefix + ".bin") == 8u * (12 + 4 + 8 + 4 + 1));
  CHECK(error_code_of([&] { load_checkpoint((dir / "absent").string()); }) == Errc::IoError);
  std::filesystem::resize_file(prefix + ".bin", 16);
  CHECK(error_code_of([&] { load_checkpoint(prefix); }) == Errc::ParseError);
  std::filesystem::remove_all(dir);
}

TEST_CASE("logistic pre-training learns a separable rule") {
  std::mt19937_64 rng(12);
  const Matrix x = random_matrix(200, 3, rng);
  Vector y(200);
  for (int r = 0; r < 200; ++r) y[r] = x(r, 0) + x(r, 1) > 0 ? 1.0 : 0.0;
  PretrainConfig cfg;
  cfg.mode = PretrainMode::LogisticHidden;
  cfg.hidden = 4;
  cfg.epochs = 1500;
  const auto r = pretrain_active(x, y, cfg);
  CHECK(r.train_accuracy > 0.9);
  CHECK(r.embeddings.cols() == 4);
  CHECK((pretrain_embed(r, x) - r.embeddings).cwiseAbs().maxCoeff() == 0.0);
  PretrainConfig id;
  CHECK(pretrain_active(x, y, id).embeddings == x);
}
