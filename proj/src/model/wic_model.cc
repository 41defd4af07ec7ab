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


#include "wic/model/wic_model.h"

#include <cmath>
#include <fstream>

#include <fmt/format.h>

#include "wic/corpus.h"
#include "wic/error.h"

namespace wic {

using nn::Matrix;
using nn::Parameter;
using nn::Var;

WicModel::WicModel(std::unique_ptr<Encoder> encoder, const HeadConfig& head)
    : encoder_(std::move(encoder)),
      head_(encoder_->hidden_size(), head),
      dropout_rng_(DeriveSeed(head.seed, {0xD50})) {}

Var WicModel::Loss(nn::Graph& g, std::span<const int> ids, std::span<const std::uint8_t> mask,
                   const EncodedExample& ex, bool training, double* probability) {
  const Var emb = encoder_->Embed(g, ids, mask);
  const Var feature = BuildFeature(g, emb, ex.target_idx1, ex.target_idx2);
  const Var logits = head_.Logits(g, feature, training, &dropout_rng_);
  *probability = ProbabilityTrue(g.value(logits));
  if (!ex.label) return Var{};
  return g.SoftmaxCrossEntropy(logits, static_cast<int>(*ex.label));
}

ForwardResult WicModel::ForwardPadded(std::span<const int> ids,
                                      std::span<const std::uint8_t> mask,
                                      const EncodedExample& ex, bool training) {
  nn::Graph g;
  ForwardResult r;
  const Var loss = Loss(g, ids, mask, ex, training, &r.probability);
  if (loss.index >= 0) r.loss = g.value(loss)(0, 0);
  return r;
}

ForwardResult WicModel::Forward(const EncodedExample& ex, bool training) {
  const std::vector<std::uint8_t> mask(ex.token_ids.size(), 1);
  return ForwardPadded(ex.token_ids, mask, ex, training);
}

double WicModel::AccumulateGradients(const Batch& batch, bool training) {
  std::size_t n = 0;
  for (const auto& ex : batch.examples) n += ex.label.has_value();
  if (n == 0) throw DataError("training batch has no labeled examples");
  double total = 0.0;
  // One tape per example; the mean's gradient is the sum of scaled parts.
  for (std::size_t i = 0; i < batch.examples.size(); ++i) {
    const EncodedExample& ex = batch.examples[i];
    if (!ex.label) continue;
    nn::Graph g;
    double p;
    const Var loss = Loss(g, batch.ids[i], batch.mask[i], ex, training, &p);
    total += g.value(loss)(0, 0);
    g.Backward(g.Scale(loss, 1.0 / static_cast<double>(n)));
  }
  return total / static_cast<double>(n);
}

double WicModel::BatchLoss(const Batch& batch, bool training) {
  std::size_t n = 0;
  double total = 0.0;
  for (std::size_t i = 0; i < batch.examples.size(); ++i) {
    const auto r = ForwardPadded(batch.ids[i], batch.mask[i], batch.examples[i], training);
    if (r.loss) {
      total += *r.loss;
      ++n;
    }
  }
  if (n == 0) throw DataError("batch has no labeled examples");
  return total / static_cast<double>(n);
}

std::vector<double> WicModel::PredictProbabilities(const std::vector<EncodedExample>& examples) {
  std::vector<double> out;
  out.reserve(examples.size());
  for (const auto& ex : examples) out.push_back(Forward(ex, false).probability);
  return out;
}

void WicModel::ZeroGrad() {
  for (Parameter* p : parameters()) p->ZeroGrad();
}

std::vector<Parameter*> WicModel::parameters() {
  std::vector<Parameter*> out = encoder_->parameters();
  for (Parameter* p : head_.parameters()) out.push_back(p);
  return out;
}

std::string ConfigHash(WicModel& model) {
  const nlohmann::json arch = {{"encoder", model.encoder().config()},
                               {"head", model.head().config().ToJson()}};
  return fmt::format("{:016x}", Fnv1a(arch.dump()));
}

namespace {

constexpr int kCheckpointVersion = 1;

nlohmann::json TensorEntry(const std::string& name, const Matrix& m, std::uint64_t offset) {
  return {{"name", name}, {"rows", m.rows()}, {"cols", m.cols()}, {"offset", offset}};
}

void WriteMatrix(std::ofstream& out, const Matrix& m) {
  out.write(reinterpret_cast<const char*>(m.data()),
            static_cast<std::streamsize>(m.size() * sizeof(double)));
}

}  // namespace

void SaveCheckpoint(const std::filesystem::path& dir, WicModel& model,
                    const nlohmann::json& extra_meta, const std::vector<TensorBlob>& extra) {
  std::filesystem::create_directories(dir);
  nlohmann::json tensors = nlohmann::json::array();
  nlohmann::json extra_index = nlohmann::json::array();
  std::ofstream out(dir / "params.bin", std::ios::binary | std::ios::trunc);
  if (!out) throw Error(fmt::format("cannot write '{}'", (dir / "params.bin").string()));
  std::uint64_t offset = 0;
  for (Parameter* p : model.parameters()) {
    tensors.push_back(TensorEntry(p->name, p->value, offset));
    WriteMatrix(out, p->value);
    offset += static_cast<std::uint64_t>(p->value.size());
  }
  for (const TensorBlob& b : extra) {
    extra_index.push_back(TensorEntry(b.name, b.value, offset));
    WriteMatrix(out, b.value);
    offset += static_cast<std::uint64_t>(b.value.size());
  }
  out.close();
  if (!out) throw Error(fmt::format("write failed for '{}'", (dir / "params.bin").string()));

  const HeadConfig& head = model.head().config();
  nlohmann::json manifest = {
      {"version", kCheckpointVersion},
      {"encoder_identity", model.encoder().identity()},
      {"hidden_size", model.encoder().hidden_size()},
      {"head_shape", {model.head().feature_size(), head.hidden_layer, 2}},
      {"config_hash", ConfigHash(model)},
      {"seed", head.seed},
      {"encoder", model.encoder().config()},
      {"head", head.ToJson()},
      {"tensors", tensors},
      {"extra_tensors", extra_index},
      {"meta", extra_meta}};
  WriteJsonFile(dir / "manifest.json", manifest);
}

LoadedCheckpoint LoadCheckpoint(const std::filesystem::path& dir) {
  const auto manifest_path = dir / "manifest.json";
  if (!std::filesystem::exists(manifest_path)) {
    throw DataError(fmt::format("no checkpoint manifest at '{}'", manifest_path.string()));
  }
  LoadedCheckpoint out;
  out.manifest = ReadJsonFile(manifest_path);
  if (out.manifest.value("version", 0) != kCheckpointVersion) {
    throw DataError(fmt::format("'{}': unsupported checkpoint version", manifest_path.string()));
  }
  out.model = std::make_unique<WicModel>(EncoderFromConfig(out.manifest.at("encoder")),
                                         HeadConfig::FromJson(out.manifest.at("head")));
  if (ConfigHash(*out.model) != out.manifest.at("config_hash").get<std::string>()) {
    throw DataError(fmt::format("'{}': config hash mismatch", manifest_path.string()));
  }

  std::ifstream in(dir / "params.bin", std::ios::binary);
  if (!in) throw DataError(fmt::format("cannot open '{}'", (dir / "params.bin").string()));
  auto read_into = [&](const nlohmann::json& entry, Matrix& m) {
    const auto rows = entry.at("rows").get<Eigen::Index>();
    const auto cols = entry.at("cols").get<Eigen::Index>();
    m.resize(rows, cols);
    in.seekg(static_cast<std::streamoff>(entry.at("offset").get<std::uint64_t>() *
                                         sizeof(double)));
    in.read(reinterpret_cast<char*>(m.data()),
            static_cast<std::streamsize>(m.size() * sizeof(double)));
    if (!in) {
      throw DataError(fmt::format("'{}': truncated tensor '{}'", dir.string(),
                                  entry.at("name").get<std::string>()));
    }
  };
  const auto params = out.model->parameters();
  const auto& tensors = out.manifest.at("tensors");
  if (tensors.size() != params.size()) {
    throw DataError(fmt::format("'{}': {} tensors for {} parameters", dir.string(),
                                tensors.size(), params.size()));
  }
  for (std::size_t i = 0; i < params.size(); ++i) {
    if (tensors[i].at("name").get<std::string>() != params[i]->name) {
      throw DataError(fmt::format("'{}': tensor {} is '{}', expected '{}'", dir.string(), i,
                                  tensors[i].at("name").get<std::string>(), params[i]->name));
    }
    Matrix m;
    read_into(tensors[i], m);
    if (m.rows() != params[i]->value.rows() || m.cols() != params[i]->value.cols()) {
      throw DataError(fmt::format("'{}': shape mismatch for '{}'", dir.string(), params[i]->name));
    }
    params[i]->value = std::move(m);
    params[i]->ZeroGrad();
  }
  for (const auto& entry : out.manifest.at("extra_tensors")) {
    TensorBlob b;
    b.name = entry.at("name").get<std::string>();
    read_into(entry, b.value);
    out.extra.push_back(std::move(b));
  }
  return out;
}

}  // namespace wic
