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


#include "wic/trainer.h"

#include <algorithm>
#include <cmath>
#include <exception>
#include <fstream>
#include <map>
#include <numeric>
#include <set>
#include <thread>

#include <fmt/format.h>

#include "wic/model/encoder.h"
#include "wic/util/random.h"

namespace wic {

namespace {

const std::set<std::string>& ConfigKeys() {
  static const std::set<std::string> keys = {
      "schema_version", "seed", "batch_size", "lr", "dropout", "folds", "max_epochs",
      "patience", "max_len", "fgm", "fgm_epsilon", "fgm_per_row", "wordnet",
      "wordnet_ratio", "wordnet_path", "swap", "encoder", "tokenizer", "toy_hidden",
      "toy_layers", "toy_heads", "toy_ff", "head_hidden", "beta1", "beta2", "eps",
      "weight_decay", "lookahead_k", "lookahead_alpha", "gradient_centralization", "clean",
      "window", "pseudo_threshold", "parallel_folds"};
  return keys;
}

template <typename T>
void Read(const nlohmann::json& j, const char* key, T* field) {
  if (!j.contains(key)) return;
  try {
    *field = j.at(key).get<T>();
  } catch (const nlohmann::json::exception& e) {
    throw ConfigError(fmt::format("config key '{}': {}", key, e.what()));
  }
}

}  // namespace

void TrainConfig::Validate() const {
  if (folds < 2) throw ConfigError(fmt::format("folds must be >= 2, got {}", folds));
  if (max_epochs < 1) throw ConfigError("max_epochs must be >= 1");
  if (patience < 1 || patience > max_epochs) {
    throw ConfigError(fmt::format("patience {} must lie in [1, max_epochs={}]", patience,
                                  max_epochs));
  }
  if (batch_size == 0) throw ConfigError("batch_size must be positive");
  if (max_len < 8) throw ConfigError("max_len is too small");
  if (dropout < 0.0 || dropout >= 1.0) throw ConfigError("dropout must lie in [0, 1)");
  if (fgm_epsilon < 0.0) throw ConfigError("fgm_epsilon must be non-negative");
  if (wordnet && wordnet_path.empty()) throw ConfigError("wordnet enabled without wordnet_path");
  if (wordnet_ratio < 0.0) throw ConfigError("wordnet_ratio must be non-negative");
  if (encoder.empty()) throw ConfigError("encoder must be set");
  if (pseudo_threshold < 0.0 || pseudo_threshold >= 1.0) {
    throw ConfigError("pseudo_threshold must lie in [0, 1)");
  }
  if (parallel_folds < 1) throw ConfigError("parallel_folds must be >= 1");
  ranger().Validate();
}

nlohmann::json TrainConfig::ToJson() const {
  return {{"schema_version", kConfigSchemaVersion},
          {"seed", seed},
          {"batch_size", batch_size},
          {"lr", lr},
          {"dropout", dropout},
          {"folds", folds},
          {"max_epochs", max_epochs},
          {"patience", patience},
          {"max_len", max_len},
          {"fgm", fgm},
          {"fgm_epsilon", fgm_epsilon},
          {"fgm_per_row", fgm_per_row},
          {"wordnet", wordnet},
          {"wordnet_ratio", wordnet_ratio},
          {"wordnet_path", wordnet_path},
          {"swap", swap},
          {"encoder", encoder},
          {"tokenizer", tokenizer},
          {"toy_hidden", toy_hidden},
          {"toy_layers", toy_layers},
          {"toy_heads", toy_heads},
          {"toy_ff", toy_ff},
          {"head_hidden", head_hidden},
          {"beta1", beta1},
          {"beta2", beta2},
          {"eps", eps},
          {"weight_decay", weight_decay},
          {"lookahead_k", lookahead_k},
          {"lookahead_alpha", lookahead_alpha},
          {"gradient_centralization", gradient_centralization},
          {"clean", clean},
          {"window", window},
          {"pseudo_threshold", pseudo_threshold},
          {"parallel_folds", parallel_folds}};
}

TrainConfig TrainConfig::FromJson(const nlohmann::json& j) {
  if (!j.is_object()) throw ConfigError("config must be a JSON object");
  for (const auto& [key, value] : j.items()) {
    if (!ConfigKeys().contains(key)) throw ConfigError(fmt::format("unknown config key '{}'", key));
  }
  if (j.contains("schema_version") && j.at("schema_version") != kConfigSchemaVersion) {
    throw ConfigError(fmt::format("unsupported config schema_version {}",
                                  j.at("schema_version").dump()));
  }
  TrainConfig c;
  Read(j, "seed", &c.seed);
  Read(j, "batch_size", &c.batch_size);
  Read(j, "lr", &c.lr);
  Read(j, "dropout", &c.dropout);
  Read(j, "folds", &c.folds);
  Read(j, "max_epochs", &c.max_epochs);
  Read(j, "patience", &c.patience);
  Read(j, "max_len", &c.max_len);
  Read(j, "fgm", &c.fgm);
  Read(j, "fgm_epsilon", &c.fgm_epsilon);
  Read(j, "fgm_per_row", &c.fgm_per_row);
  Read(j, "wordnet", &c.wordnet);
  Read(j, "wordnet_ratio", &c.wordnet_ratio);
  Read(j, "wordnet_path", &c.wordnet_path);
  Read(j, "swap", &c.swap);
  Read(j, "encoder", &c.encoder);
  Read(j, "tokenizer", &c.tokenizer);
  Read(j, "toy_hidden", &c.toy_hidden);
  Read(j, "toy_layers", &c.toy_layers);
  Read(j, "toy_heads", &c.toy_heads);
  Read(j, "toy_ff", &c.toy_ff);
  Read(j, "head_hidden", &c.head_hidden);
  Read(j, "beta1", &c.beta1);
  Read(j, "beta2", &c.beta2);
  Read(j, "eps", &c.eps);
  Read(j, "weight_decay", &c.weight_decay);
  Read(j, "lookahead_k", &c.lookahead_k);
  Read(j, "lookahead_alpha", &c.lookahead_alpha);
  Read(j, "gradient_centralization", &c.gradient_centralization);
  Read(j, "clean", &c.clean);
  Read(j, "window", &c.window);
  Read(j, "pseudo_threshold", &c.pseudo_threshold);
  Read(j, "parallel_folds", &c.parallel_folds);
  c.Validate();
  return c;
}

RangerConfig TrainConfig::ranger() const {
  RangerConfig r;
  r.lr = lr;
  r.beta1 = beta1;
  r.beta2 = beta2;
  r.eps = eps;
  r.weight_decay = weight_decay;
  r.k = lookahead_k;
  r.alpha = lookahead_alpha;
  r.gradient_centralization = gradient_centralization;
  return r;
}

std::vector<std::vector<std::size_t>> StratifiedFolds(const std::vector<TaggedPair>& pairs,
                                                      int k, std::uint64_t seed) {
  if (k < 2) throw ConfigError("stratified folds need k >= 2");
  // Groups keyed by source id, in first-appearance order.
  std::vector<std::string> order;
  std::map<std::string, std::vector<std::size_t>> groups;
  std::map<std::string, Label> group_label;
  for (std::size_t i = 0; i < pairs.size(); ++i) {
    if (!pairs[i].label) throw DataError(fmt::format("pair '{}' is unlabeled", pairs[i].id));
    const std::string src = SourceId(pairs[i].id);
    auto [it, inserted] = groups.try_emplace(src);
    if (inserted) {
      order.push_back(src);
      group_label[src] = *pairs[i].label;
    } else if (group_label[src] != *pairs[i].label) {
      throw DataError(fmt::format("pair '{}' disagrees with the label of its source", pairs[i].id));
    }
    it->second.push_back(i);
  }
  std::vector<std::string> by_class[2];
  for (const auto& src : order) by_class[static_cast<int>(group_label[src])].push_back(src);
  for (int c = 0; c < 2; ++c) {
    if (by_class[c].size() < static_cast<std::size_t>(k)) {
      throw DataError(fmt::format("class {} has {} members, fewer than {} folds",
                                  LabelTag(static_cast<Label>(c)), by_class[c].size(), k));
    }
  }
  Rng rng(DeriveSeed(seed, {0x5F01D}));
  std::vector<std::vector<std::size_t>> folds(static_cast<std::size_t>(k));
  std::size_t next = 0;
  // T first, then F continuing where T stopped, so fold sizes stay balanced.
  for (int c : {1, 0}) {
    rng.Shuffle(&by_class[c]);
    for (const auto& src : by_class[c]) {
      auto& fold = folds[next % static_cast<std::size_t>(k)];
      for (std::size_t i : groups[src]) fold.push_back(i);
      ++next;
    }
  }
  for (auto& f : folds) std::sort(f.begin(), f.end());
  return folds;
}

StopDecision EarlyStopping(const std::vector<double>& dev_accuracies, int patience) {
  StopDecision d;
  if (dev_accuracies.empty()) return d;
  for (std::size_t e = 1; e < dev_accuracies.size(); ++e) {
    if (dev_accuracies[e] > dev_accuracies[static_cast<std::size_t>(d.best_epoch)]) {
      d.best_epoch = static_cast<int>(e);
    }
  }
  d.stop = static_cast<int>(dev_accuracies.size()) - 1 - d.best_epoch >= patience;
  return d;
}

std::string HistoryCsv(const FoldResult& result) {
  std::string out = "epoch,train_loss,adversarial_loss,dev_accuracy\n";
  for (const auto& r : result.history) {
    out += fmt::format("{},{:.17g},{:.17g},{:.17g}\n", r.epoch, r.train_loss, r.adversarial_loss,
                       r.dev_accuracy);
  }
  return out;
}

namespace {

bool IsToy(const TrainConfig& c) { return c.encoder == "toy"; }

void WriteText(const std::filesystem::path& path, const std::string& text) {
  std::filesystem::create_directories(path.parent_path());
  std::ofstream out(path, std::ios::trunc);
  out << text;
  if (!out) throw Error(fmt::format("cannot write '{}'", path.string()));
}

std::vector<TaggedPair> WithSwaps(const std::vector<TaggedPair>& pairs) {
  std::set<std::string> present;
  for (const auto& p : pairs) present.insert(p.id);
  std::vector<TaggedPair> out;
  for (const auto& p : pairs) {
    out.push_back(p);
    if (p.label && p.provenance != Provenance::kSwapped &&
        !present.contains(p.id + std::string(kSwapSuffix))) {
      out.push_back(SwapPair(p));
    }
  }
  return out;
}

}  // namespace

std::unique_ptr<Tokenizer> MakeTokenizer(const TrainConfig& config,
                                         const std::vector<std::string>& texts) {
  std::unique_ptr<Tokenizer> tok;
  if (IsToy(config)) {
    tok = std::make_unique<WordTokenizer>(WordTokenizer::Build(texts));
  } else {
    std::filesystem::path path = config.tokenizer;
    if (path.empty()) path = ResolvePretrainedPath(config.encoder) / "tokenizer.json";
    if (!std::filesystem::exists(path)) {
      throw ConfigError(fmt::format(
          "tokenizer not found at '{}' (set \"tokenizer\" or place tokenizer.json next to the "
          "pretrained weights)",
          path.string()));
    }
    tok = std::make_unique<UnigramTokenizer>(UnigramTokenizer::FromFile(path));
  }
  RegisterSpecialTokens(*tok);
  return tok;
}

std::unique_ptr<WicModel> MakeModel(const TrainConfig& config, const Tokenizer& tokenizer) {
  HeadConfig head;
  head.dropout = config.dropout;
  head.hidden_layer = config.head_hidden;
  head.seed = DeriveSeed(config.seed, {0x4EAD});
  const int vocab = static_cast<int>(tokenizer.vocab_size());
  if (IsToy(config)) {
    ToyEncoderConfig t;
    t.vocab_size = vocab;
    t.hidden = config.toy_hidden;
    t.layers = config.toy_layers;
    t.heads = config.toy_heads;
    t.ff = config.toy_ff;
    t.seed = config.seed;
    return std::make_unique<WicModel>(BuildToyEncoder(t), head);
  }
  auto encoder = LoadPretrainedEncoder(ResolvePretrainedPath(config.encoder));
  if (vocab > encoder->vocab_size()) {
    encoder->ResizeTokenEmbeddings(vocab, DeriveSeed(config.seed, {0x7A65}));
  }
  return std::make_unique<WicModel>(std::move(encoder), head);
}

FoldResult TrainFold(int fold, const std::vector<TaggedPair>& corpus,
                     const std::vector<std::size_t>& train_idx,
                     const std::vector<std::size_t>& dev_idx,
                     const std::vector<TaggedPair>& extra_train, const TrainConfig& config,
                     const Tokenizer& tokenizer, const std::filesystem::path& fold_dir) {
  std::vector<TaggedPair> train_pairs;
  std::vector<TaggedPair> dev_pairs;
  std::set<std::string> dev_sources;
  for (std::size_t i : dev_idx) {
    dev_pairs.push_back(corpus.at(i));
    dev_sources.insert(SourceId(corpus[i].id));
  }
  for (std::size_t i : train_idx) train_pairs.push_back(corpus.at(i));
  for (const auto& p : extra_train) train_pairs.push_back(p);
  if (config.swap) train_pairs = WithSwaps(train_pairs);
  for (const auto& p : train_pairs) {
    if (dev_sources.contains(SourceId(p.id))) {
      throw DataError(fmt::format("fold {}: '{}' appears in both training and dev", fold, p.id));
    }
  }
  const std::vector<EncodedExample> train = EncodeCorpus(train_pairs, tokenizer, config.max_len);
  const std::vector<EncodedExample> dev = EncodeCorpus(dev_pairs, tokenizer, config.max_len);

  auto model = MakeModel(config, tokenizer);
  model->SeedDropout(DeriveSeed(config.seed, {static_cast<std::uint64_t>(fold), 0xD0}));
  Ranger optimizer(model->parameters(), config.ranger());
  const FgmConfig fgm{config.fgm_epsilon, config.fgm_per_row};
  const int pad = tokenizer.special().pad;

  FoldResult result;
  result.fold = fold;
  result.checkpoint = fold_dir / "checkpoint";
  std::vector<double> dev_acc;
  for (int epoch = 1; epoch <= config.max_epochs; ++epoch) {
    std::vector<EncodedExample> shuffled = train;
    Rng rng(DeriveSeed(config.seed, {static_cast<std::uint64_t>(fold),
                                     static_cast<std::uint64_t>(epoch)}));
    rng.Shuffle(&shuffled);
    EpochRecord rec;
    rec.epoch = epoch;
    std::size_t batches = 0;
    for (const Batch& batch : BatchEncode(shuffled, pad, config.batch_size)) {
      try {
        if (config.fgm) {
          const StepLosses l = AdversarialTrainingStep(*model, batch, optimizer, fgm);
          rec.train_loss += l.clean;
          rec.adversarial_loss += l.adversarial;
        } else {
          rec.train_loss += PlainStep(*model, batch, optimizer);
        }
      } catch (const NonFiniteGradient& e) {
        throw Error(fmt::format("fold {} epoch {} batch {} (first id '{}'): {}", fold, epoch,
                                batches, batch.examples.front().id, e.what()));
      }
      ++batches;
    }
    rec.train_loss /= static_cast<double>(batches);
    rec.adversarial_loss /= static_cast<double>(batches);
    if (!std::isfinite(rec.train_loss) || !std::isfinite(rec.adversarial_loss)) {
      throw Error(fmt::format("fold {} epoch {}: non-finite training loss", fold, epoch));
    }
    std::vector<Prediction> preds = EnsembleAverage(
        [&] {
          std::vector<std::string> ids;
          for (const auto& ex : dev) ids.push_back(ex.id);
          return ids;
        }(),
        {{fold, model->PredictProbabilities(dev)}});
    rec.dev_accuracy = Accuracy(preds, dev);
    result.history.push_back(rec);
    dev_acc.push_back(rec.dev_accuracy);

    const StopDecision d = EarlyStopping(dev_acc, config.patience);
    if (d.best_epoch == epoch - 1) {
      SaveCheckpoint(result.checkpoint, *model,
                     {{"fold", fold},
                      {"epoch", epoch},
                      {"dev_accuracy", rec.dev_accuracy},
                      {"optimizer_step", optimizer.step_count()},
                      {"ranger", optimizer.config().ToJson()}},
                     optimizer.StateBlobs());
    }
    result.best_epoch = d.best_epoch + 1;
    result.best_dev_accuracy = dev_acc[static_cast<std::size_t>(d.best_epoch)];
    if (d.stop) break;
  }
  WriteText(fold_dir / "history.csv", HistoryCsv(result));
  return result;
}

std::vector<Prediction> EnsembleAverage(const std::vector<std::string>& ids,
                                        std::vector<std::pair<int, std::vector<double>>> folds) {
  if (folds.empty()) throw ConfigError("ensemble needs at least one fold");
  std::sort(folds.begin(), folds.end(),
            [](const auto& a, const auto& b) { return a.first < b.first; });
  std::vector<Prediction> out(ids.size());
  for (std::size_t i = 0; i < ids.size(); ++i) {
    double sum = 0.0;
    for (const auto& [index, probs] : folds) {
      if (probs.size() != ids.size()) throw ShapeError("ensemble: fold prediction count differs");
      sum += probs[i];
    }
    out[i].id = ids[i];
    out[i].probability = sum / static_cast<double>(folds.size());
    out[i].label = HardLabel(out[i].probability);
  }
  return out;
}

std::vector<Prediction> EnsemblePredict(const std::vector<std::filesystem::path>& checkpoints,
                                        const std::vector<EncodedExample>& examples) {
  if (checkpoints.empty()) throw ConfigError("ensemble needs at least one checkpoint");
  std::vector<std::pair<int, std::vector<double>>> folds;
  std::string hash;
  for (std::size_t i = 0; i < checkpoints.size(); ++i) {
    LoadedCheckpoint ck = LoadCheckpoint(checkpoints[i]);
    const std::string h = ck.manifest.at("config_hash").get<std::string>();
    if (hash.empty()) {
      hash = h;
    } else if (h != hash) {
      throw ConfigError(fmt::format("checkpoint '{}' has a different architecture",
                                    checkpoints[i].string()));
    }
    const int fold = ck.manifest.at("meta").value("fold", static_cast<int>(i));
    folds.emplace_back(fold, ck.model->PredictProbabilities(examples));
  }
  std::vector<std::string> ids;
  for (const auto& ex : examples) ids.push_back(ex.id);
  return EnsembleAverage(ids, std::move(folds));
}

double Accuracy(const std::vector<Prediction>& predictions,
                const std::vector<EncodedExample>& examples) {
  if (predictions.size() != examples.size() || examples.empty()) {
    throw ShapeError("accuracy: prediction count differs from examples");
  }
  std::size_t right = 0;
  for (std::size_t i = 0; i < examples.size(); ++i) {
    if (!examples[i].label) throw DataError(fmt::format("'{}' is unlabeled", examples[i].id));
    right += predictions[i].label == *examples[i].label;
  }
  return static_cast<double>(right) / static_cast<double>(examples.size());
}

std::vector<std::filesystem::path> RunResult::checkpoints() const {
  std::vector<std::filesystem::path> out;
  for (const auto& f : folds) out.push_back(f.checkpoint);
  return out;
}

namespace {

nlohmann::json FoldResultToJson(const FoldResult& r) {
  nlohmann::json history = nlohmann::json::array();
  for (const auto& e : r.history) {
    history.push_back({{"epoch", e.epoch},
                       {"train_loss", e.train_loss},
                       {"adversarial_loss", e.adversarial_loss},
                       {"dev_accuracy", e.dev_accuracy}});
  }
  return {{"fold", r.fold},
          {"checkpoint", r.checkpoint.filename().string()},
          {"best_epoch", r.best_epoch},
          {"best_dev_accuracy", r.best_dev_accuracy},
          {"history", history}};
}

}  // namespace

RunResult TrainKFold(const std::vector<TaggedPair>& corpus,
                     const std::vector<TaggedPair>& extra_train, const TrainConfig& config,
                     const Tokenizer& tokenizer, const std::filesystem::path& run_dir) {
  config.Validate();
  std::filesystem::create_directories(run_dir);
  WriteJsonFile(run_dir / "config.json", config.ToJson());
  WriteJsonFile(run_dir / "tokenizer.json", tokenizer.ToJson());

  RunResult run;
  run.assignment = StratifiedFolds(corpus, config.folds, config.seed);
  nlohmann::json assignment = nlohmann::json::array();
  for (const auto& f : run.assignment) {
    nlohmann::json ids = nlohmann::json::array();
    for (std::size_t i : f) ids.push_back(corpus[i].id);
    assignment.push_back(ids);
  }
  WriteJsonFile(run_dir / "folds.json", assignment);

  const int k = config.folds;
  run.folds.resize(static_cast<std::size_t>(k));
  auto train_one = [&](int f) {
    std::vector<std::size_t> train_idx;
    for (int g = 0; g < k; ++g) {
      if (g == f) continue;
      const auto& part = run.assignment[static_cast<std::size_t>(g)];
      train_idx.insert(train_idx.end(), part.begin(), part.end());
    }
    std::sort(train_idx.begin(), train_idx.end());
    run.folds[static_cast<std::size_t>(f)] =
        TrainFold(f, corpus, train_idx, run.assignment[static_cast<std::size_t>(f)], extra_train,
                  config, tokenizer, run_dir / fmt::format("fold_{}", f));
  };
  if (config.parallel_folds <= 1) {
    for (int f = 0; f < k; ++f) train_one(f);
  } else {
    std::vector<std::exception_ptr> errors(static_cast<std::size_t>(k));
    for (int start = 0; start < k; start += config.parallel_folds) {
      std::vector<std::thread> workers;
      for (int f = start; f < std::min(k, start + config.parallel_folds); ++f) {
        workers.emplace_back([&, f] {
          try {
            train_one(f);
          } catch (...) {
            errors[static_cast<std::size_t>(f)] = std::current_exception();
          }
        });
      }
      for (auto& w : workers) w.join();
    }
    for (const auto& e : errors) {
      if (e) std::rethrow_exception(e);
    }
  }

  nlohmann::json summary = {{"folds", nlohmann::json::array()}};
  for (const auto& r : run.folds) summary["folds"].push_back(FoldResultToJson(r));
  WriteJsonFile(run_dir / "summary.json", summary);
  return run;
}

std::vector<Prediction> PredictRun(const std::filesystem::path& run_dir,
                                   const std::vector<TaggedPair>& pairs) {
  const TrainConfig config = TrainConfig::FromJson(ReadJsonFile(run_dir / "config.json"));
  const auto tokenizer = TokenizerFromJson(ReadJsonFile(run_dir / "tokenizer.json"));
  const nlohmann::json summary = ReadJsonFile(run_dir / "summary.json");
  std::vector<std::filesystem::path> checkpoints;
  for (const auto& f : summary.at("folds")) {
    checkpoints.push_back(run_dir / fmt::format("fold_{}", f.at("fold").get<int>()) /
                          f.at("checkpoint").get<std::string>());
  }
  return EnsemblePredict(checkpoints, EncodeCorpus(pairs, *tokenizer, config.max_len));
}

LabelCounts CountLabels(const std::vector<TaggedPair>& pairs) {
  LabelCounts c;
  c.total = pairs.size();
  for (const auto& p : pairs) {
    if (!p.label) continue;
    (*p.label == Label::kTrue ? c.t : c.f) += 1;
  }
  return c;
}

nlohmann::json PseudoReportToJson(const PseudoReport& r) {
  auto counts = [](const LabelCounts& c) {
    return nlohmann::json{{"total", c.total}, {"T", c.t}, {"F", c.f}};
  };
  return {{"stage1_train", counts(r.stage1_train)},
          {"unlabeled", r.unlabeled},
          {"pseudo", counts(r.pseudo)},
          {"dropped_low_confidence", r.dropped_low_confidence},
          {"stage5_train", counts(r.stage5_train)},
          {"degenerate", r.degenerate}};
}

PseudoResult PseudoLabelCycle(const std::vector<TaggedPair>& train,
                              const std::vector<TaggedPair>& unlabeled,
                              const std::vector<TaggedPair>& extra_train,
                              const TrainConfig& config, const Tokenizer& tokenizer,
                              const std::filesystem::path& run_dir) {
  PseudoResult out;
  out.report.stage1_train = CountLabels(train);
  out.report.unlabeled = unlabeled.size();
  out.report.degenerate = unlabeled.empty();
  std::vector<TaggedPair> merged = train;
  if (!unlabeled.empty()) {
    out.stage1 = TrainKFold(train, extra_train, config, tokenizer, run_dir / "stage1");
    const auto preds = EnsemblePredict(out.stage1.checkpoints(),
                                       EncodeCorpus(unlabeled, tokenizer, config.max_len));
    std::set<std::string> taken;
    for (const auto& p : train) taken.insert(p.id);
    for (std::size_t i = 0; i < unlabeled.size(); ++i) {
      const double confidence = std::max(preds[i].probability, 1.0 - preds[i].probability);
      if (config.pseudo_threshold > 0.0 && confidence < config.pseudo_threshold) {
        ++out.report.dropped_low_confidence;
        continue;
      }
      TaggedPair p = unlabeled[i];
      p.label = preds[i].label;
      p.provenance = Provenance::kPseudo;
      // Keep ids unique when the pool overlaps the training corpus.
      while (taken.contains(p.id)) p.id += ".pl";
      taken.insert(p.id);
      out.pseudo_pairs.push_back(std::move(p));
    }
    out.report.pseudo = CountLabels(out.pseudo_pairs);
    merged.insert(merged.end(), out.pseudo_pairs.begin(), out.pseudo_pairs.end());
  }
  out.report.stage5_train = CountLabels(merged);
  out.final_run = TrainKFold(merged, extra_train, config, tokenizer, run_dir / "final");
  std::filesystem::create_directories(run_dir);
  WriteJsonFile(run_dir / "pseudo_report.json", PseudoReportToJson(out.report));
  return out;
}

std::vector<TaggedPair> WordNetTrainingPairs(const std::vector<WicPair>& train,
                                             const TrainConfig& config, AugmentReport* report) {
  const auto source = OpenWordNet(config.wordnet_path);
  Rng rng(DeriveSeed(config.seed, {0x3D}));
  const auto pairs = AugmentWordNet(CorpusLemmas(train), *source, train.size(),
                                    config.wordnet_ratio, rng, report);
  return PrepareCorpus(pairs, Provenance::kWordNet, {config.clean, config.window});
}

std::vector<std::string> SyntheticVocabulary(const SyntheticConfig& c) {
  static const char* kTargets[] = {"bank", "play", "spring", "bat", "crane",
                                   "match", "seal", "pitch", "ring", "light"};
  static const char* kMarkers[] = {"river", "money", "music", "sport", "stone", "water"};
  static const char* kFillers[] = {
      "the",   "a",    "of",   "and",   "to",    "in",   "is",   "was",  "it",   "for",
      "on",    "with", "as",   "at",    "by",    "from", "this", "that", "an",   "be",
      "are",   "or",   "we",   "they",  "he",    "she",  "you",  "but",  "not",  "all",
      "some",  "one",  "two",  "new",   "old",   "big",  "small", "red", "blue", "green",
      "quick", "slow", "near", "far",   "very",  "then", "when", "here", "there", "now",
      "soon",  "late", "open"};
  if (c.targets == 0 || c.targets > std::size(kTargets) || c.markers < 2 ||
      c.markers > std::size(kMarkers) || c.vocabulary <= c.targets + c.markers) {
    throw ConfigError("synthetic: vocabulary too small for targets and markers");
  }
  std::vector<std::string> words;
  for (std::size_t t = 0; t < c.targets; ++t) words.emplace_back(kTargets[t]);
  for (std::size_t m = 0; m < c.markers; ++m) words.emplace_back(kMarkers[m]);
  const std::size_t n_fillers = c.vocabulary - c.targets - c.markers;
  for (std::size_t f = 0; f < n_fillers; ++f) {
    words.push_back(f < std::size(kFillers) ? std::string(kFillers[f]) : fmt::format("w{}", f));
  }
  return words;
}

std::vector<WicPair> GenerateSynthetic(const SyntheticConfig& c, const std::string& id_prefix) {
  if (c.min_words < 2 || c.max_words < c.min_words) {
    throw ConfigError("synthetic: need 2 <= min_words <= max_words");
  }
  const std::vector<std::string> words = SyntheticVocabulary(c);
  const std::size_t n_fillers = words.size() - c.targets - c.markers;
  Rng rng(c.seed);
  auto sentence = [&](std::size_t target, std::size_t marker, Span* span) {
    const std::size_t n = c.min_words + rng.Below(c.max_words - c.min_words + 1);
    const std::size_t at = rng.Below(n - 1);
    std::string text;
    for (std::size_t w = 0; w < n; ++w) {
      if (!text.empty()) text += ' ';
      if (w == at) {
        span->start = text.size();
        text += words[target];
        span->end = text.size();
      } else if (w == at + 1) {
        text += words[c.targets + marker];
      } else {
        text += words[c.targets + c.markers + rng.Below(n_fillers)];
      }
    }
    return text + " .";
  };
  std::vector<WicPair> out;
  for (std::size_t i = 0; i < c.pairs; ++i) {
    WicPair p;
    p.id = fmt::format("{}.{}", id_prefix, i);
    const std::size_t target = rng.Below(c.targets);
    const bool same = i % 2 == 0;
    const std::size_t m1 = rng.Below(c.markers);
    const std::size_t m2 = same ? m1 : (m1 + 1 + rng.Below(c.markers - 1)) % c.markers;
    p.lemma = words[target];
    p.pos = "NOUN";
    p.sentence1 = sentence(target, m1, &p.span1);
    p.sentence2 = sentence(target, m2, &p.span2);
    p.label = same ? Label::kTrue : Label::kFalse;
    out.push_back(std::move(p));
  }
  return out;
}

}  // namespace wic
