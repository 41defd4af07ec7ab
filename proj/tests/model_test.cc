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


#include <cmath>
#include <filesystem>
#include <iostream>
#include <map>
#include <random>

#include <gtest/gtest.h>

#include "wic/corpus.h"
#include "wic/model/encoder.h"
#include "wic/model/head.h"
#include "wic/model/safetensors.h"
#include "wic/model/wic_model.h"

namespace wic {
namespace {

namespace fs = std::filesystem;
using nn::Matrix;
using nn::RowVector;

constexpr int kVocab = 20;

std::unique_ptr<WicModel> ToyModel(std::uint64_t seed = 3999, double dropout = 0.0) {
  ToyEncoderConfig ec;
  ec.vocab_size = kVocab;
  ec.seed = seed;
  HeadConfig hc;
  hc.dropout = dropout;
  hc.init_std = 0.5;
  return std::make_unique<WicModel>(BuildToyEncoder(ec), hc);
}

EncodedExample Example(std::vector<int> ids, std::vector<std::size_t> t1,
                       std::vector<std::size_t> t2, std::optional<Label> label) {
  EncodedExample e;
  e.id = "e";
  e.token_ids = std::move(ids);
  e.target_idx1 = std::move(t1);
  e.target_idx2 = std::move(t2);
  e.label = label;
  e.sep_position = e.target_idx1.back() + 1;
  return e;
}

EncodedExample ExampleA() { return Example({0, 7, 8, 9, 4, 10, 11, 2}, {2}, {5, 6}, Label::kTrue); }
EncodedExample ExampleB() { return Example({0, 12, 5, 13, 4, 14, 2}, {1}, {5}, Label::kFalse); }

TEST(BuildFeatureTest, MeanAndConcatenation) {
  Matrix emb = Matrix::Zero(6, 2);
  emb.row(0) << 1, 0;
  emb.row(2) << 2, 2;
  emb.row(4) << 4, 4;
  emb.row(5) << 0, 1;
  const std::vector<std::size_t> idx1 = {2, 4}, idx2 = {5};
  RowVector expected(6);
  expected << 1, 0, 3, 3, 0, 1;
  EXPECT_EQ(BuildFeature(emb, idx1, idx2), expected);
}

TEST(BuildFeatureTest, IdenticalRows) {
  RowVector v(3);
  v << 0.5, -1, 2;
  const Matrix emb = v.replicate(5, 1);
  const std::vector<std::size_t> idx1 = {1, 2}, idx2 = {3, 4};
  EXPECT_EQ(BuildFeature(emb, idx1, idx2), (RowVector(9) << v, v, v).finished());
}

TEST(BuildFeatureTest, InvalidIndexSets) {
  const Matrix emb = Matrix::Ones(4, 2);
  const std::vector<std::size_t> empty, zero = {0}, ok = {1}, far = {4};
  EXPECT_THROW(BuildFeature(emb, empty, ok), Error);
  EXPECT_THROW(BuildFeature(emb, ok, far), Error);
  EXPECT_THROW(BuildFeature(emb, zero, ok), Error);
}

TEST(BuildFeatureTest, FeatureIsThreeTimesHidden) {
  for (int h : {32, 768, 1024}) {
    EXPECT_EQ(ClassifierHead(h, {}).feature_size(), 3 * h);
    const Matrix emb = Matrix::Ones(3, h);
    const std::vector<std::size_t> a = {1}, b = {2};
    EXPECT_EQ(BuildFeature(emb, a, b).size(), 3 * h);
  }
}

TEST(ClassifyTest, ZeroWeightsGiveHalf) {
  ClassifierHead head(2, {});
  head.out_weight().value.setZero();
  head.out_bias().value.setZero();
  EXPECT_EQ(head.Classify(RowVector::Ones(6), false, nullptr), 0.5);
}

TEST(ClassifyTest, HandSetWeights) {
  ClassifierHead head(2, {});
  head.out_weight().value << 0.1, -0.2, 0.3, 0.0, 0.5, -0.1,  //
      -0.3, 0.4, 0.2, 0.1, -0.5, 0.6;
  head.out_bias().value << 0.05, -0.05;
  RowVector x(6);
  x << 1, 2, -1, 0.5, 3, -2;
  // z0 = 0.1 - 0.4 - 0.3 + 0 + 1.5 + 0.2 + 0.05 = 1.15
  // z1 = -0.3 + 0.8 - 0.2 + 0.05 - 1.5 - 1.2 - 0.05 = -2.4
  const double expected = std::exp(-2.4) / (std::exp(1.15) + std::exp(-2.4));
  EXPECT_NEAR(head.Classify(x, false, nullptr), expected, 1e-15);
}

TEST(ClassifyTest, EvaluationIsDeterministicAndShiftInvariant) {
  ClassifierHead head(4, {});
  RowVector x = RowVector::LinSpaced(12, -1, 1);
  const double p = head.Classify(x, false, nullptr);
  EXPECT_EQ(p, head.Classify(x, false, nullptr));
  EXPECT_GT(p, 0.0);
  EXPECT_LT(p, 1.0);
  Matrix logits(1, 2);
  logits << 0.3, -1.2;
  const double base = ProbabilityTrue(logits);
  logits.array() += 100.0;
  EXPECT_NEAR(ProbabilityTrue(logits), base, 1e-15);
}

TEST(ClassifyTest, DimensionMismatch) {
  ClassifierHead head(2, {});
  EXPECT_THROW(head.Classify(RowVector::Ones(5), false, nullptr), Error);
}

TEST(ClassifyTest, DropoutOnlyWhenTraining) {
  HeadConfig cfg;
  cfg.dropout = 0.5;
  ClassifierHead head(8, cfg);
  const RowVector x = RowVector::LinSpaced(24, -2, 2);
  Rng rng(1);
  bool differs = false;
  for (int i = 0; i < 10; ++i) differs |= head.Classify(x, true, &rng) != head.Classify(x, false, nullptr);
  EXPECT_TRUE(differs);
}

TEST(ForwardTest, LossIsNegativeLogProbability) {
  auto model = ToyModel();
  const auto r = model->Forward(ExampleA(), false);
  ASSERT_TRUE(r.loss.has_value());
  EXPECT_NEAR(*r.loss, -std::log(r.probability), 1e-12);
  const auto f = model->Forward(ExampleB(), false);
  EXPECT_NEAR(*f.loss, -std::log(1.0 - f.probability), 1e-12);
  EXPECT_FALSE(model->Forward(Example({0, 7, 4, 8, 2}, {1}, {3}, std::nullopt), false).loss);
}

TEST(ForwardTest, HeadGradientMatchesFiniteDifferences) {
  auto model = ToyModel();
  const Batch batch = MakeBatch({ExampleA(), ExampleB()}, 1);
  model->ZeroGrad();
  model->AccumulateGradients(batch, false);
  for (nn::Parameter* p : model->head().parameters()) {
    for (Eigen::Index i = 0; i < p->value.size(); i += 7) {
      const double orig = p->value.data()[i];
      p->value.data()[i] = orig + 1e-4;
      const double up = model->BatchLoss(batch, false);
      p->value.data()[i] = orig - 1e-4;
      const double down = model->BatchLoss(batch, false);
      p->value.data()[i] = orig;
      const double numeric = (up - down) / 2e-4;
      const double analytic = p->grad.data()[i];
      EXPECT_LT(std::abs(numeric - analytic), 1e-4 * std::max(1.0, std::abs(numeric)))
          << p->name << "[" << i << "]";
    }
  }
}

TEST(ForwardTest, BatchEqualsPerExample) {
  auto model = ToyModel();
  const std::vector<EncodedExample> ex = {ExampleA(), ExampleB()};
  const Batch batch = MakeBatch(ex, 1);
  double sum = 0;
  for (std::size_t i = 0; i < ex.size(); ++i) {
    const auto single = model->Forward(ex[i], false);
    const auto padded = model->ForwardPadded(batch.ids[i], batch.mask[i], ex[i], false);
    EXPECT_NEAR(padded.probability, single.probability, 1e-12);
    sum += *single.loss;
  }
  EXPECT_NEAR(model->BatchLoss(batch, false), sum / 2, 1e-12);
  const auto probs = model->PredictProbabilities(ex);
  EXPECT_EQ(probs[0], model->Forward(ex[0], false).probability);
}

TEST(ForwardTest, PadTokenIdsDoNotChangeLoss) {
  auto model = ToyModel();
  const Batch batch = MakeBatch({ExampleA(), ExampleB()}, 1);
  std::vector<int> ids = batch.ids[1];
  const double base = *model->ForwardPadded(ids, batch.mask[1], batch.examples[1], false).loss;
  for (std::size_t i = 0; i < ids.size(); ++i) {
    if (!batch.mask[1][i]) ids[i] = 17;
  }
  EXPECT_EQ(*model->ForwardPadded(ids, batch.mask[1], batch.examples[1], false).loss, base);
}

TEST(ToyEncoderTest, SameSeedSameParameters) {
  auto a = ToyModel(5), b = ToyModel(5), c = ToyModel(6);
  const auto pa = a->encoder().parameters(), pb = b->encoder().parameters(),
             pc = c->encoder().parameters();
  ASSERT_EQ(pa.size(), pb.size());
  bool any_diff = false;
  for (std::size_t i = 0; i < pa.size(); ++i) {
    EXPECT_EQ(pa[i]->value, pb[i]->value) << pa[i]->name;
    any_diff |= pa[i]->value != pc[i]->value;
  }
  EXPECT_TRUE(any_diff);
}

TEST(ToyEncoderTest, OutputShape) {
  auto model = ToyModel();
  const std::vector<int> ids = {0, 5, 6, 7, 8, 9, 2};
  const std::vector<std::uint8_t> mask(7, 1);
  const Matrix out = model->encoder().EmbedValues(ids, mask);
  EXPECT_EQ(out.rows(), 7);
  EXPECT_EQ(out.cols(), 32);
}

TEST(ToyEncoderTest, PermutedPadsLeaveRealRowsUnchanged) {
  auto model = ToyModel();
  std::vector<int> ids = {0, 5, 6, 7, 2, 1, 1, 1};
  const std::vector<std::uint8_t> mask = {1, 1, 1, 1, 1, 0, 0, 0};
  const Matrix base = model->encoder().EmbedValues(ids, mask);
  ids[5] = 9;
  ids[6] = 3;
  ids[7] = 12;
  const Matrix other = model->encoder().EmbedValues(ids, mask);
  EXPECT_EQ(base.topRows(5), other.topRows(5));
}

// Writes a checkpoint directory shaped like a Hugging Face export.
void WriteTinyPretrained(const fs::path& dir, int hidden) {
  TransformerConfig c;
  c.vocab_size = 30;
  c.hidden = hidden;
  c.layers = 1;
  c.heads = 2;
  c.ff = 2 * hidden;
  c.positions = PositionKind::kLearned;
  c.max_positions = 40;
  c.position_offset = 2;
  c.type_vocab = 1;
  c.ln_eps = 1e-5;
  TransformerEncoder enc(c);
  std::map<std::string, SafeTensor> tensors;
  for (nn::Parameter* p : enc.parameters()) {
    SafeTensor t;
    for (auto d : p->shape()) t.shape.push_back(static_cast<std::int64_t>(d));
    t.data.assign(p->value.data(), p->value.data() + p->value.size());
    tensors["roberta." + p->name] = t;
  }
  fs::create_directories(dir);
  WriteSafetensors(dir / "model.safetensors", tensors, false);
  WriteJsonFile(dir / "config.json", {{"vocab_size", 30},
                                      {"hidden_size", hidden},
                                      {"num_hidden_layers", 1},
                                      {"num_attention_heads", 2},
                                      {"intermediate_size", 2 * hidden},
                                      {"max_position_embeddings", 40},
                                      {"pad_token_id", 1},
                                      {"type_vocab_size", 1},
                                      {"layer_norm_eps", 1e-5},
                                      {"hidden_act", "gelu"}});
}

TEST(PretrainedEncoderTest, HiddenSizeComesFromConfiguration) {
  const fs::path dir = fs::temp_directory_path() / "wic_tiny_pretrained";
  WriteTinyPretrained(dir, 12);
  auto enc = LoadPretrainedEncoder(dir);
  EXPECT_EQ(enc->hidden_size(), 12);
  const std::vector<int> ids = {0, 5, 6, 2};
  const std::vector<std::uint8_t> mask(4, 1);
  EXPECT_EQ(enc->EmbedValues(ids, mask).rows(), 4);
  fs::remove_all(dir);
}

TEST(PretrainedEncoderTest, MissingPathIsNamed) {
  try {
    LoadPretrainedEncoder("/nonexistent/xlm-roberta-huge");
    FAIL() << "expected an error";
  } catch (const Error& e) {
    EXPECT_NE(std::string(e.what()).find("/nonexistent/xlm-roberta-huge"), std::string::npos);
  }
}

// Sizes of the published checkpoints; run when they are installed.
TEST(PretrainedEncoderTest, PublishedHiddenSizes) {
  for (auto [name, h] : {std::pair{"base", 768}, std::pair{"large", 1024}}) {
    const fs::path dir = ResolvePretrainedPath(name);
    if (!fs::exists(dir / "config.json")) {
      std::cout << "skipping " << name << ": " << dir << " not present\n";
      continue;
    }
    EXPECT_EQ(ReadJsonFile(dir / "config.json").at("hidden_size").get<int>(), h);
  }
}

TEST(CheckpointTest, RoundTripIsBitExact) {
  auto model = ToyModel(9);
  const fs::path dir = fs::temp_directory_path() / "wic_ckpt_test";
  fs::remove_all(dir);
  SaveCheckpoint(dir, *model, {{"note", "x"}}, {{"extra.a", Matrix::Constant(2, 3, 0.25)}});
  const auto loaded = LoadCheckpoint(dir);
  const auto a = model->parameters(), b = loaded.model->parameters();
  ASSERT_EQ(a.size(), b.size());
  for (std::size_t i = 0; i < a.size(); ++i) {
    EXPECT_EQ(a[i]->name, b[i]->name);
    EXPECT_EQ(a[i]->value, b[i]->value);
  }
  EXPECT_EQ(loaded.manifest.at("hidden_size"), 32);
  EXPECT_EQ(loaded.manifest.at("config_hash"), ConfigHash(*model));
  ASSERT_EQ(loaded.extra.size(), 1u);
  EXPECT_EQ(loaded.extra[0].value, Matrix::Constant(2, 3, 0.25));
  EXPECT_EQ(loaded.model->Forward(ExampleA(), false).probability,
            model->Forward(ExampleA(), false).probability);
  fs::remove_all(dir);
}

}  // namespace
}  // namespace wic
