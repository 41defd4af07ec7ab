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

#ifndef WIC_MODEL_HEAD_H_
#define WIC_MODEL_HEAD_H_

#include <cstddef>
#include <cstdint>
#include <span>
#include <vector>

#include "json.hpp"
#include "wic/model/graph.h"
#include "wic/util/random.h"

namespace wic {

inline constexpr double kDefaultDropout = 0.28;

struct HeadConfig {
  double dropout = kDefaultDropout;
  // 0 keeps the single affine map; > 0 inserts dense -> tanh of this width.
  int hidden_layer = 0;
  double init_std = 0.02;
  std::uint64_t seed = 3999;

  nlohmann::json ToJson() const;
  static HeadConfig FromJson(const nlohmann::json& j);
};

// concat(row 0, mean of rows idx1, mean of rows idx2): a 1 x 3H row.
nn::RowVector BuildFeature(const nn::Matrix& embeddings, std::span<const std::size_t> idx1,
                           std::span<const std::size_t> idx2);
nn::Var BuildFeature(nn::Graph& graph, nn::Var embeddings, std::span<const std::size_t> idx1,
                     std::span<const std::size_t> idx2);

// Probability of T from a 1 x 2 logit row (index 1 is T).
double ProbabilityTrue(const nn::Matrix& logits);

// dropout -> affine 3H -> 2 (optionally through one tanh hidden layer).
class ClassifierHead {
 public:
  ClassifierHead(int hidden_size, const HeadConfig& config);

  // `rng` supplies dropout masks and is only consulted when training.
  nn::Var Logits(nn::Graph& graph, nn::Var feature, bool training, Rng* rng);

  // Probability of T for a single feature row.
  double Classify(const nn::RowVector& feature, bool training, Rng* rng);

  int feature_size() const { return 3 * hidden_size_; }
  const HeadConfig& config() const { return config_; }
  std::vector<nn::Parameter*> parameters();

  nn::Parameter& out_weight() { return out_w_; }
  nn::Parameter& out_bias() { return out_b_; }

 private:
  nn::Var Dropout(nn::Graph& graph, nn::Var x, bool training, Rng* rng);

  int hidden_size_;
  HeadConfig config_;
  nn::Parameter dense_w_, dense_b_;  // hidden layer only
  nn::Parameter out_w_, out_b_;
};

}  // namespace wic

#endif  // WIC_MODEL_HEAD_H_
