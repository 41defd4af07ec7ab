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

#ifndef WIC_MODEL_ENCODER_H_
#define WIC_MODEL_ENCODER_H_

#include <cstdint>
#include <filesystem>
#include <memory>
#include <span>
#include <string>
#include <vector>

#include "json.hpp"
#include "wic/model/graph.h"

namespace wic {

// Sentence encoder: token ids -> last-layer token representations (L x H).
class Encoder {
 public:
  virtual ~Encoder() = default;

  // `mask` marks real tokens with 1; padded keys are never attended to.
  virtual nn::Var Embed(nn::Graph& graph, std::span<const int> ids,
                        std::span<const std::uint8_t> mask) = 0;

  virtual int hidden_size() const = 0;
  virtual int vocab_size() const = 0;

  // Token embedding table, exposed read-write for adversarial perturbation.
  virtual nn::Parameter& embedding_table() = 0;

  virtual std::vector<nn::Parameter*> parameters() = 0;

  // Architecture description sufficient to rebuild an untrained copy.
  virtual nlohmann::json config() const = 0;
  virtual std::string identity() const = 0;

  // Forward pass outside of training.
  nn::Matrix EmbedValues(std::span<const int> ids, std::span<const std::uint8_t> mask);
};

enum class PositionKind { kSinusoidal, kLearned };

struct TransformerConfig {
  std::string identity = "toy";
  int vocab_size = 0;
  int hidden = 32;
  int layers = 2;
  int heads = 2;
  int ff = 64;
  PositionKind positions = PositionKind::kSinusoidal;
  // Learned positions only: table size and the id of the first real
  // position (padding_idx + 1 for RoBERTa-family checkpoints).
  int max_positions = 512;
  int position_offset = 0;
  int type_vocab = 0;  // token-type table rows; row 0 is added when > 0
  double ln_eps = 1e-12;
  double init_std = 0.02;
  // Token table init; 0 means init_std. Sinusoidal positions have unit
  // scale, so a toy model starts with comparable token embeddings.
  double embedding_std = 0.0;
  std::uint64_t seed = 3999;

  nlohmann::json ToJson() const;
  static TransformerConfig FromJson(const nlohmann::json& j);
};

// Post-norm transformer encoder (BERT / XLM-R layout): embedding sum and
// LayerNorm, then per layer multi-head self-attention and a GELU
// feed-forward block, each wrapped in residual + LayerNorm.
class TransformerEncoder : public Encoder {
 public:
  // Deterministic initialization from config.seed.
  explicit TransformerEncoder(const TransformerConfig& config);

  nn::Var Embed(nn::Graph& graph, std::span<const int> ids,
                std::span<const std::uint8_t> mask) override;

  int hidden_size() const override { return config_.hidden; }
  int vocab_size() const override { return config_.vocab_size; }
  nn::Parameter& embedding_table() override { return word_embeddings_; }
  std::vector<nn::Parameter*> parameters() override;
  nlohmann::json config() const override { return config_.ToJson(); }
  std::string identity() const override { return config_.identity; }

  const TransformerConfig& transformer_config() const { return config_; }

  // Parameter lookup by its checkpoint name, e.g.
  // "encoder.layer.0.attention.self.query.weight". Null when absent.
  nn::Parameter* FindParameter(std::string_view name);

  // Grows the token table to `vocab_size` rows (new tokens such as the
  // target tags); new rows are drawn from N(0, init_std) with `seed`.
  void ResizeTokenEmbeddings(int vocab_size, std::uint64_t seed);

 private:
  struct Layer {
    nn::Parameter q_w, q_b, k_w, k_b, v_w, v_b, o_w, o_b;
    nn::Parameter ln1_g, ln1_b;
    nn::Parameter ff1_w, ff1_b, ff2_w, ff2_b;
    nn::Parameter ln2_g, ln2_b;
  };

  nn::Var LayerForward(nn::Graph& g, Layer& layer, nn::Var h, const nn::Matrix& key_mask);

  TransformerConfig config_;
  nn::Parameter word_embeddings_;
  nn::Parameter position_embeddings_;  // learned positions only
  nn::Parameter token_type_embeddings_;
  nn::Parameter emb_ln_g_, emb_ln_b_;
  std::vector<Layer> layers_;
};

struct ToyEncoderConfig {
  int vocab_size = 0;
  int hidden = 32;
  int layers = 2;
  int heads = 2;
  int ff = 64;
  double init_std = 0.02;
  double embedding_std = 1.0;
  std::uint64_t seed = 3999;
};

std::unique_ptr<Encoder> BuildToyEncoder(const ToyEncoderConfig& config);

// Rebuilds an encoder (untrained weights) from Encoder::config().
std::unique_ptr<TransformerEncoder> EncoderFromConfig(const nlohmann::json& config);

// Loads a pretrained RoBERTa-family checkpoint directory containing
// config.json and model.safetensors (weights named as in the Hugging Face
// export, with or without the "roberta." prefix). The hidden size comes from
// the checkpoint's configuration. Fails with a message naming the path
// when files are missing; never falls back to a toy encoder.
std::unique_ptr<TransformerEncoder> LoadPretrainedEncoder(const std::filesystem::path& dir);

// "base" and "large" resolve to $WIC_MODELS_DIR/xlm-roberta-{base,large}
// (WIC_MODELS_DIR defaults to ./models); anything else is used as a path.
std::filesystem::path ResolvePretrainedPath(const std::string& name_or_path);

}  // namespace wic

#endif  // WIC_MODEL_ENCODER_H_
