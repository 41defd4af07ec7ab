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


// Ranger (rectified Adam + lookahead + gradient centralization) and the
// fast gradient method for adversarial training on the token embeddings.

#ifndef WIC_OPTIM_H_
#define WIC_OPTIM_H_

#include <cstddef>
#include <cstdint>
#include <span>
#include <vector>

#include "json.hpp"
#include "wic/encoding.h"
#include "wic/error.h"
#include "wic/model/graph.h"
#include "wic/model/wic_model.h"

namespace wic {

class NonFiniteGradient : public Error {
 public:
  using Error::Error;
};

// Subtracts from every axis-0 slice its mean over the remaining axes.
// Tensors of rank < 2 are left untouched.
void GcCentralize(std::span<double> data, std::span<const std::size_t> shape);
// Matrix form: rows are the axis-0 slices when rank >= 2.
void GcCentralize(nn::Matrix* grad, int rank);

struct RangerConfig {
  double lr = 1.2e-5;
  double beta1 = 0.9;
  double beta2 = 0.999;
  double eps = 1e-8;
  double weight_decay = 0.0;
  int k = 6;
  double alpha = 0.5;
  bool gradient_centralization = true;

  void Validate() const;
  nlohmann::json ToJson() const;
  static RangerConfig FromJson(const nlohmann::json& j);
};

struct RangerState {
  std::vector<nn::Matrix> m;
  std::vector<nn::Matrix> v;
  std::vector<nn::Matrix> slow;
  std::int64_t t = 0;
};

// One rectified-Adam update of `param` at step `t` (already incremented).
// Returns true when the rectified branch was taken, false for the
// momentum-only warmup branch.
bool RadamStep(nn::Matrix* param, const nn::Matrix& grad, nn::Matrix* m, nn::Matrix* v,
               std::int64_t t, const RangerConfig& config);

// Every k-th step pulls the slow weights toward the fast ones and resets
// the fast weights onto them. Returns true when a sync happened.
bool LookaheadSync(nn::Matrix* fast, nn::Matrix* slow, std::int64_t t, const RangerConfig& config);

class Ranger {
 public:
  Ranger(std::vector<nn::Parameter*> params, const RangerConfig& config);

  // Consumes the parameters' current gradients. Throws NonFiniteGradient
  // (leaving parameters and state untouched) on NaN or infinite entries.
  void Step();

  const RangerConfig& config() const { return config_; }
  const RangerState& state() const { return state_; }
  std::int64_t step_count() const { return state_.t; }

  std::vector<TensorBlob> StateBlobs() const;
  void LoadStateBlobs(const std::vector<TensorBlob>& blobs, std::int64_t t);

 private:
  std::vector<nn::Parameter*> params_;
  RangerConfig config_;
  RangerState state_;
};

struct FgmConfig {
  double epsilon = 1.0;
  bool per_row = false;  // normalize each table row separately
};

struct FgmBackup {
  nn::Matrix table;
};

// table += epsilon * g / ||g|| (Frobenius norm over the whole table, or
// per row). A zero gradient leaves the table unchanged.
FgmBackup FgmAttack(nn::Matrix* table, const nn::Matrix& grad, const FgmConfig& config);
FgmBackup FgmAttack(nn::Parameter* table, const FgmConfig& config);
void FgmRestore(nn::Matrix* table, const FgmBackup& backup);

struct StepLosses {
  double clean = 0.0;
  double adversarial = 0.0;
};

// Clean forward/backward, attack on the embedding table, adversarial
// forward/backward accumulating into the same gradients, restore, then one
// optimizer step.
StepLosses AdversarialTrainingStep(WicModel& model, const Batch& batch, Ranger& optimizer,
                                   const FgmConfig& fgm);

// Forward/backward `accumulate` times without perturbation, then step.
double PlainStep(WicModel& model, const Batch& batch, Ranger& optimizer, int accumulate = 1);

}  // namespace wic

#endif  // WIC_OPTIM_H_
