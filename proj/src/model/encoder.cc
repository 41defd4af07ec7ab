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

#include "wic/model/encoder.h"

#include <cmath>
#include <cstdlib>
#include <limits>

#include <fmt/format.h>

#include "wic/corpus.h"
#include "wic/error.h"
#include "wic/model/safetensors.h"
#include "wic/util/random.h"

namespace wic {

using nn::Matrix;
using nn::Parameter;
using nn::Var;

nn::Matrix Encoder::EmbedValues(std::span<const int> ids,
                                std::span<const std::uint8_t> mask) {
  nn::Graph g;
  return g.value(Embed(g, ids, mask));
}

nlohmann::json TransformerConfig::ToJson() const {
  return {{"identity", identity},
          {"vocab_size", vocab_size},
          {"hidden", hidden},
          {"layers", layers},
          {"heads", heads},
          {"ff", ff},
          {"positions", positions == PositionKind::kLearned ? "learned" : "sinusoidal"},
          {"max_positions", max_positions},
          {"position_offset", position_offset},
          {"type_vocab", type_vocab},
          {"ln_eps", ln_eps},
          {"init_std", init_std},
          {"embedding_std", embedding_std},
          {"seed", seed}};
}

TransformerConfig TransformerConfig::FromJson(const nlohmann::json& j) {
  TransformerConfig c;
  c.identity = j.value("identity", c.identity);
  c.vocab_size = j.at("vocab_size").get<int>();
  c.hidden = j.value("hidden", c.hidden);
  c.layers = j.value("layers", c.layers);
  c.heads = j.value("heads", c.heads);
  c.ff = j.value("ff", c.ff);
  c.positions = j.value("positions", std::string("sinusoidal")) == "learned"
                    ? PositionKind::kLearned
                    : PositionKind::kSinusoidal;
  c.max_positions = j.value("max_positions", c.max_positions);
  c.position_offset = j.value("position_offset", c.position_offset);
  c.type_vocab = j.value("type_vocab", c.type_vocab);
  c.ln_eps = j.value("ln_eps", c.ln_eps);
  c.init_std = j.value("init_std", c.init_std);
  c.embedding_std = j.value("embedding_std", c.embedding_std);
  c.seed = j.value("seed", c.seed);
  return c;
}

namespace {

Parameter Normal(std::string name, int rows, int cols, double std, Rng& rng) {
  Matrix m(rows, cols);
  for (Eigen::Index i = 0; i < m.size(); ++i) m.data()[i] = std * rng.Normal();
  return Parameter(std::move(name), std::move(m), 2);
}

Parameter Filled(std::string name, int n, double v) {
  return Parameter(std::move(name), Matrix::Constant(1, n, v), 1);
}

Matrix Sinusoid(int length, int hidden) {
  Matrix pe(length, hidden);
  for (int p = 0; p < length; ++p) {
    for (int i = 0; i < hidden; i += 2) {
      const double freq = std::pow(10000.0, -static_cast<double>(i) / hidden);
      pe(p, i) = std::sin(p * freq);
      if (i + 1 < hidden) pe(p, i + 1) = std::cos(p * freq);
    }
  }
  return pe;
}

}  // namespace

TransformerEncoder::TransformerEncoder(const TransformerConfig& config) : config_(config) {
  if (config_.vocab_size <= 0) throw ConfigError("encoder vocab_size must be positive");
  if (config_.hidden <= 0 || config_.heads <= 0 || config_.hidden % config_.heads != 0) {
    throw ConfigError(fmt::format("hidden size {} must be a positive multiple of {} heads",
                                  config_.hidden, config_.heads));
  }
  Rng rng(config_.seed);
  const int h = config_.hidden;
  const double s = config_.init_std;
  const double es = config_.embedding_std > 0.0 ? config_.embedding_std : s;
  word_embeddings_ = Normal("embeddings.word_embeddings.weight", config_.vocab_size, h, es, rng);
  if (config_.positions == PositionKind::kLearned) {
    position_embeddings_ =
        Normal("embeddings.position_embeddings.weight", config_.max_positions, h, s, rng);
  }
  if (config_.type_vocab > 0) {
    token_type_embeddings_ =
        Normal("embeddings.token_type_embeddings.weight", config_.type_vocab, h, s, rng);
  }
  emb_ln_g_ = Filled("embeddings.LayerNorm.weight", h, 1.0);
  emb_ln_b_ = Filled("embeddings.LayerNorm.bias", h, 0.0);
  for (int l = 0; l < config_.layers; ++l) {
    const std::string p = fmt::format("encoder.layer.{}.", l);
    Layer layer;
    layer.q_w = Normal(p + "attention.self.query.weight", h, h, s, rng);
    layer.q_b = Filled(p + "attention.self.query.bias", h, 0.0);
    layer.k_w = Normal(p + "attention.self.key.weight", h, h, s, rng);
    layer.k_b = Filled(p + "attention.self.key.bias", h, 0.0);
    layer.v_w = Normal(p + "attention.self.value.weight", h, h, s, rng);
    layer.v_b = Filled(p + "attention.self.value.bias", h, 0.0);
    layer.o_w = Normal(p + "attention.output.dense.weight", h, h, s, rng);
    layer.o_b = Filled(p + "attention.output.dense.bias", h, 0.0);
    layer.ln1_g = Filled(p + "attention.output.LayerNorm.weight", h, 1.0);
    layer.ln1_b = Filled(p + "attention.output.LayerNorm.bias", h, 0.0);
    layer.ff1_w = Normal(p + "intermediate.dense.weight", config_.ff, h, s, rng);
    layer.ff1_b = Filled(p + "intermediate.dense.bias", config_.ff, 0.0);
    layer.ff2_w = Normal(p + "output.dense.weight", h, config_.ff, s, rng);
    layer.ff2_b = Filled(p + "output.dense.bias", h, 0.0);
    layer.ln2_g = Filled(p + "output.LayerNorm.weight", h, 1.0);
    layer.ln2_b = Filled(p + "output.LayerNorm.bias", h, 0.0);
    layers_.push_back(std::move(layer));
  }
}

std::vector<Parameter*> TransformerEncoder::parameters() {
  std::vector<Parameter*> out = {&word_embeddings_};
  if (config_.positions == PositionKind::kLearned) out.push_back(&position_embeddings_);
  if (config_.type_vocab > 0) out.push_back(&token_type_embeddings_);
  out.push_back(&emb_ln_g_);
  out.push_back(&emb_ln_b_);
  for (Layer& l : layers_) {
    for (Parameter* p : {&l.q_w, &l.q_b, &l.k_w, &l.k_b, &l.v_w, &l.v_b, &l.o_w, &l.o_b,
                         &l.ln1_g, &l.ln1_b, &l.ff1_w, &l.ff1_b, &l.ff2_w, &l.ff2_b,
                         &l.ln2_g, &l.ln2_b}) {
      out.push_back(p);
    }
  }
  return out;
}

Parameter* TransformerEncoder::FindParameter(std::string_view name) {
  for (Parameter* p : parameters()) {
    if (p->name == name) return p;
  }
  return nullptr;
}

void TransformerEncoder::ResizeTokenEmbeddings(int vocab_size, std::uint64_t seed) {
  const auto old_rows = static_cast<int>(word_embeddings_.value.rows());
  if (vocab_size < old_rows) throw ConfigError("token table can only grow");
  Rng rng(seed);
  const double row_std = config_.embedding_std > 0.0 ? config_.embedding_std : config_.init_std;
  Matrix grown(vocab_size, word_embeddings_.value.cols());
  grown.topRows(old_rows) = word_embeddings_.value;
  for (int r = old_rows; r < vocab_size; ++r) {
    for (Eigen::Index c = 0; c < grown.cols(); ++c) grown(r, c) = row_std * rng.Normal();
  }
  word_embeddings_.value = std::move(grown);
  word_embeddings_.ZeroGrad();
  config_.vocab_size = vocab_size;
}

Var TransformerEncoder::LayerForward(nn::Graph& g, Layer& l, Var h, const Matrix& key_mask) {
  const int heads = config_.heads;
  const int dh = config_.hidden / heads;
  const double scale = 1.0 / std::sqrt(static_cast<double>(dh));
  const Var q = g.AddRow(g.MatMulT(h, g.Param(&l.q_w)), g.Param(&l.q_b));
  const Var k = g.AddRow(g.MatMulT(h, g.Param(&l.k_w)), g.Param(&l.k_b));
  const Var v = g.AddRow(g.MatMulT(h, g.Param(&l.v_w)), g.Param(&l.v_b));
  std::vector<Var> ctx;
  ctx.reserve(heads);
  for (int i = 0; i < heads; ++i) {
    const Var qi = g.Columns(q, i * dh, dh);
    const Var ki = g.Columns(k, i * dh, dh);
    const Var vi = g.Columns(v, i * dh, dh);
    const Var scores = g.AddConstant(g.Scale(g.MatMulT(qi, ki), scale), key_mask);
    ctx.push_back(g.MatMul(g.SoftmaxRows(scores), vi));
  }
  const Var attn = g.AddRow(g.MatMulT(g.ConcatColumns(ctx), g.Param(&l.o_w)), g.Param(&l.o_b));
  const Var h1 = g.LayerNormRows(g.Add(h, attn), g.Param(&l.ln1_g), g.Param(&l.ln1_b),
                                 config_.ln_eps);
  const Var ff = g.Gelu(g.AddRow(g.MatMulT(h1, g.Param(&l.ff1_w)), g.Param(&l.ff1_b)));
  const Var out = g.AddRow(g.MatMulT(ff, g.Param(&l.ff2_w)), g.Param(&l.ff2_b));
  return g.LayerNormRows(g.Add(h1, out), g.Param(&l.ln2_g), g.Param(&l.ln2_b), config_.ln_eps);
}

Var TransformerEncoder::Embed(nn::Graph& g, std::span<const int> ids,
                              std::span<const std::uint8_t> mask) {
  const auto length = static_cast<int>(ids.size());
  if (mask.size() != ids.size()) throw ShapeError("embed: mask length differs from ids");
  if (length == 0) throw ShapeError("embed: empty sequence");

  Var h = g.GatherRows(g.Param(&word_embeddings_), ids);
  if (config_.positions == PositionKind::kLearned) {
    // Real tokens count from position_offset; pads sit at the padding row.
    std::vector<int> pos(ids.size());
    for (int i = 0; i < length; ++i) {
      pos[i] = mask[i] ? config_.position_offset + i : std::max(0, config_.position_offset - 1);
    }
    if (config_.position_offset + length > config_.max_positions) {
      throw ShapeError(fmt::format("sequence of {} exceeds {} learned positions", length,
                                   config_.max_positions - config_.position_offset));
    }
    h = g.Add(h, g.GatherRows(g.Param(&position_embeddings_), pos));
  } else {
    h = g.AddConstant(h, Sinusoid(length, config_.hidden));
  }
  if (config_.type_vocab > 0) {
    const std::vector<int> types(ids.size(), 0);
    h = g.Add(h, g.GatherRows(g.Param(&token_type_embeddings_), types));
  }
  h = g.LayerNormRows(h, g.Param(&emb_ln_g_), g.Param(&emb_ln_b_), config_.ln_eps);

  Matrix key_mask = Matrix::Zero(length, length);
  for (int j = 0; j < length; ++j) {
    if (!mask[j]) key_mask.col(j).setConstant(-std::numeric_limits<double>::infinity());
  }
  for (Layer& layer : layers_) h = LayerForward(g, layer, h, key_mask);
  return h;
}

std::unique_ptr<Encoder> BuildToyEncoder(const ToyEncoderConfig& c) {
  TransformerConfig t;
  t.identity = "toy";
  t.vocab_size = c.vocab_size;
  t.hidden = c.hidden;
  t.layers = c.layers;
  t.heads = c.heads;
  t.ff = c.ff;
  t.positions = PositionKind::kSinusoidal;
  t.init_std = c.init_std;
  t.embedding_std = c.embedding_std;
  t.seed = c.seed;
  return std::make_unique<TransformerEncoder>(t);
}

std::unique_ptr<TransformerEncoder> EncoderFromConfig(const nlohmann::json& config) {
  return std::make_unique<TransformerEncoder>(TransformerConfig::FromJson(config));
}

std::filesystem::path ResolvePretrainedPath(const std::string& name_or_path) {
  if (name_or_path == "base" || name_or_path == "large") {
    const char* env = std::getenv("WIC_MODELS_DIR");
    const std::filesystem::path root = env ? env : "models";
    return root / ("xlm-roberta-" + name_or_path);
  }
  return name_or_path;
}

std::unique_ptr<TransformerEncoder> LoadPretrainedEncoder(const std::filesystem::path& dir) {
  const auto config_path = dir / "config.json";
  const auto weights_path = dir / "model.safetensors";
  if (!std::filesystem::exists(config_path) || !std::filesystem::exists(weights_path)) {
    throw ConfigError(fmt::format(
        "pretrained encoder not found at '{}': expected config.json and model.safetensors "
        "(export a Hugging Face checkpoint with save_pretrained(safe_serialization=True) "
        "and set \"encoder\" to its directory or WIC_MODELS_DIR to its parent)",
        dir.string()));
  }
  const nlohmann::json hf = ReadJsonFile(config_path);
  TransformerConfig c;
  c.identity = hf.value("_name_or_path", dir.filename().string());
  if (c.identity.empty()) c.identity = dir.filename().string();
  c.vocab_size = hf.at("vocab_size").get<int>();
  c.hidden = hf.at("hidden_size").get<int>();
  c.layers = hf.at("num_hidden_layers").get<int>();
  c.heads = hf.at("num_attention_heads").get<int>();
  c.ff = hf.at("intermediate_size").get<int>();
  c.positions = PositionKind::kLearned;
  c.max_positions = hf.value("max_position_embeddings", 514);
  c.position_offset = hf.value("pad_token_id", 1) + 1;
  c.type_vocab = hf.value("type_vocab_size", 1);
  c.ln_eps = hf.value("layer_norm_eps", 1e-5);
  const std::string act = hf.value("hidden_act", std::string("gelu"));
  if (act != "gelu") {
    throw ConfigError(fmt::format("'{}': unsupported activation '{}'", dir.string(), act));
  }
  auto encoder = std::make_unique<TransformerEncoder>(c);

  const auto tensors = ReadSafetensors(weights_path);
  for (Parameter* p : encoder->parameters()) {
    auto it = tensors.find(p->name);
    if (it == tensors.end()) it = tensors.find("roberta." + p->name);
    if (it == tensors.end()) {
      throw DataError(fmt::format("'{}': missing weight '{}'", weights_path.string(), p->name));
    }
    const SafeTensor& t = it->second;
    if (static_cast<Eigen::Index>(t.data.size()) != p->value.size()) {
      throw DataError(fmt::format("'{}': weight '{}' has {} values, expected {}",
                                  weights_path.string(), p->name, t.data.size(),
                                  p->value.size()));
    }
    std::copy(t.data.begin(), t.data.end(), p->value.data());
  }
  return encoder;
}

}  // namespace wic
