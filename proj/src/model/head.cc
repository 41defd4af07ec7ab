// Copyright 2026 The WiC Authors.
//
// Licensed under the Apache License, Version 2.0 (the "License");
// you may not use this file except in compliance with the License.
// You may obtain a copy of the License at
//
//     http://www.apache.org/licenses/LICENSE-2.0
//
// Unless required by applicable law or agreed to in writing, software
// distributed under the License is distributed on an "AS IS" BASIS,
// WITHOUT WARRANTIES OR CONDITIONS OF ANY KIND, either express or implied.
// See the License for the specific language governing permissions and
// limitations under the License.


#include "wic/model/head.h"

#include <array>
#include <cmath>

#include <fmt/format.h>

#include "wic/error.h"

namespace wic {

using nn::Matrix;
using nn::Parameter;
using nn::Var;

nlohmann::json HeadConfig::ToJson() const {
  return {{"dropout", dropout}, {"hidden_layer", hidden_layer}, {"init_std", init_std},
          {"seed", seed}};
}

HeadConfig HeadConfig::FromJson(const nlohmann::json& j) {
  HeadConfig c;
  c.dropout = j.value("dropout", c.dropout);
  c.hidden_layer = j.value("hidden_layer", c.hidden_layer);
  c.init_std = j.value("init_std", c.init_std);
  c.seed = j.value("seed", c.seed);
  return c;
}

namespace {

void CheckIndices(std::span<const std::size_t> idx, Eigen::Index rows, const char* which) {
  if (idx.empty()) throw ShapeError(fmt::format("build_feature: {} is empty", which));
  for (std::size_t i : idx) {
    if (i == 0 || i >= static_cast<std::size_t>(rows)) {
      throw ShapeError(
          fmt::format("build_feature: {} index {} outside [1, {})", which, i, rows));
    }
  }
}

}  // namespace

nn::RowVector BuildFeature(const Matrix& emb, std::span<const std::size_t> idx1,
                           std::span<const std::size_t> idx2) {
  CheckIndices(idx1, emb.rows(), "target_idx1");
  CheckIndices(idx2, emb.rows(), "target_idx2");
  const Eigen::Index h = emb.cols();
  nn::RowVector out = nn::RowVector::Zero(3 * h);
  out.segment(0, h) = emb.row(0);
  for (std::size_t i : idx1) out.segment(h, h) += emb.row(static_cast<Eigen::Index>(i));
  for (std::size_t i : idx2) out.segment(2 * h, h) += emb.row(static_cast<Eigen::Index>(i));
  out.segment(h, h) /= static_cast<double>(idx1.size());
  out.segment(2 * h, h) /= static_cast<double>(idx2.size());
  return out;
}

Var BuildFeature(nn::Graph& g, Var emb, std::span<const std::size_t> idx1,
                 std::span<const std::size_t> idx2) {
  CheckIndices(idx1, g.value(emb).rows(), "target_idx1");
  CheckIndices(idx2, g.value(emb).rows(), "target_idx2");
  const std::array<std::size_t, 1> cls = {0};
  const std::array<Var, 3> parts = {g.MeanRows(emb, cls), g.MeanRows(emb, idx1),
                                    g.MeanRows(emb, idx2)};
  return g.ConcatColumns(parts);
}

double ProbabilityTrue(const Matrix& logits) {
  // Softmax over two logits, written in the overflow-safe logistic form.
  const double d = logits(0, 1) - logits(0, 0);
  return d >= 0 ? 1.0 / (1.0 + std::exp(-d)) : std::exp(d) / (1.0 + std::exp(d));
}

ClassifierHead::ClassifierHead(int hidden_size, const HeadConfig& config)
    : hidden_size_(hidden_size), config_(config) {
  if (hidden_size <= 0) throw ConfigError("head: hidden size must be positive");
  if (config.dropout < 0.0 || config.dropout >= 1.0) {
    throw ConfigError(fmt::format("head: dropout {} outside [0, 1)", config.dropout));
  }
  Rng rng(config.seed);
  auto normal = [&](int rows, int cols) {
    Matrix m(rows, cols);
    for (Eigen::Index i = 0; i < m.size(); ++i) m.data()[i] = config.init_std * rng.Normal();
    return m;
  };
  int in = feature_size();
  if (config.hidden_layer > 0) {
    dense_w_ = Parameter("head.dense.weight", normal(config.hidden_layer, in), 2);
    dense_b_ = Parameter("head.dense.bias", Matrix::Zero(1, config.hidden_layer), 1);
    in = config.hidden_layer;
  }
  out_w_ = Parameter("head.out_proj.weight", normal(2, in), 2);
  out_b_ = Parameter("head.out_proj.bias", Matrix::Zero(1, 2), 1);
}

std::vector<Parameter*> ClassifierHead::parameters() {
  if (config_.hidden_layer > 0) return {&dense_w_, &dense_b_, &out_w_, &out_b_};
  return {&out_w_, &out_b_};
}

Var ClassifierHead::Dropout(nn::Graph& g, Var x, bool training, Rng* rng) {
  if (!training || config_.dropout == 0.0) return x;
  if (rng == nullptr) throw ConfigError("head: training-mode dropout needs a generator");
  const Matrix& v = g.value(x);
  Matrix keep(v.rows(), v.cols());
  const double scale = 1.0 / (1.0 - config_.dropout);
  for (Eigen::Index i = 0; i < keep.size(); ++i) {
    keep.data()[i] = rng->Uniform() < config_.dropout ? 0.0 : scale;
  }
  return g.Mul(x, keep);
}

Var ClassifierHead::Logits(nn::Graph& g, Var feature, bool training, Rng* rng) {
  if (g.value(feature).rows() != 1 || g.value(feature).cols() != feature_size()) {
    throw ShapeError(fmt::format("classify: feature has {} columns, expected {}",
                                 g.value(feature).cols(), feature_size()));
  }
  Var h = Dropout(g, feature, training, rng);
  if (config_.hidden_layer > 0) {
    h = g.Tanh(g.AddRow(g.MatMulT(h, g.Param(&dense_w_)), g.Param(&dense_b_)));
    h = Dropout(g, h, training, rng);
  }
  return g.AddRow(g.MatMulT(h, g.Param(&out_w_)), g.Param(&out_b_));
}

double ClassifierHead::Classify(const nn::RowVector& feature, bool training, Rng* rng) {
  nn::Graph g;
  const Var logits = Logits(g, g.Constant(feature), training, rng);
  return ProbabilityTrue(g.value(logits));
}

}  // namespace wic
