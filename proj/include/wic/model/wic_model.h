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


#ifndef WIC_MODEL_WIC_MODEL_H_
#define WIC_MODEL_WIC_MODEL_H_

#include <cstdint>
#include <filesystem>
#include <memory>
#include <optional>
#include <span>
#include <string>
#include <vector>

#include "json.hpp"
#include "wic/encoding.h"
#include "wic/model/encoder.h"
#include "wic/model/head.h"
#include "wic/util/random.h"

namespace wic {

struct ForwardResult {
  double probability = 0.0;  // P(T)
  std::optional<double> loss;
};

// Encoder plus classification head.
class WicModel {
 public:
  WicModel(std::unique_ptr<Encoder> encoder, const HeadConfig& head);

  ForwardResult Forward(const EncodedExample& example, bool training);

  // Forward over already padded ids; padding is masked out.
  ForwardResult ForwardPadded(std::span<const int> ids, std::span<const std::uint8_t> mask,
                              const EncodedExample& example, bool training);

  // Mean cross-entropy over the labeled batch, back-propagated so that
  // parameter gradients accumulate (they are not zeroed here).
  double AccumulateGradients(const Batch& batch, bool training);

  // Same mean loss without touching gradients.
  double BatchLoss(const Batch& batch, bool training);

  std::vector<double> PredictProbabilities(const std::vector<EncodedExample>& examples);

  void ZeroGrad();
  std::vector<nn::Parameter*> parameters();
  Encoder& encoder() { return *encoder_; }
  ClassifierHead& head() { return head_; }
  void SeedDropout(std::uint64_t seed) { dropout_rng_ = Rng(seed); }

 private:
  nn::Var Loss(nn::Graph& graph, std::span<const int> ids, std::span<const std::uint8_t> mask,
               const EncodedExample& example, bool training, double* probability);

  std::unique_ptr<Encoder> encoder_;
  ClassifierHead head_;
  Rng dropout_rng_;
};

// Named tensor stored alongside model parameters (e.g. optimizer state).
struct TensorBlob {
  std::string name;
  nn::Matrix value;
};

// Stable hash of the architecture (encoder and head configuration).
std::string ConfigHash(WicModel& model);

// Directory with manifest.json (encoder identity, H, head shape, config
// hash, seed, tensor index) and params.bin (raw little-endian doubles).
void SaveCheckpoint(const std::filesystem::path& dir, WicModel& model,
                    const nlohmann::json& extra_meta = nlohmann::json::object(),
                    const std::vector<TensorBlob>& extra = {});

struct LoadedCheckpoint {
  std::unique_ptr<WicModel> model;
  nlohmann::json manifest;
  std::vector<TensorBlob> extra;
};

LoadedCheckpoint LoadCheckpoint(const std::filesystem::path& dir);

}  // namespace wic

#endif  // WIC_MODEL_WIC_MODEL_H_
