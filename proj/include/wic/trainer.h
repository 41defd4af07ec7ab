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


#ifndef WIC_TRAINER_H_
#define WIC_TRAINER_H_

#include <cstddef>
#include <cstdint>
#include <filesystem>
#include <memory>
#include <optional>
#include <string>
#include <utility>
#include <vector>

#include "json.hpp"
#include "wic/corpus.h"
#include "wic/encoding.h"
#include "wic/model/wic_model.h"
#include "wic/optim.h"
#include "wic/preprocess.h"
#include "wic/tokenizer.h"
#include "wic/wordnet.h"

namespace wic {

struct TrainConfig {
  std::uint64_t seed = 3999;
  std::size_t batch_size = 10;
  double lr = 1.2e-5;
  double dropout = 0.28;
  int folds = 5;
  int max_epochs = 10;
  int patience = 3;
  std::size_t max_len = 240;

  bool fgm = true;
  double fgm_epsilon = 1.0;
  bool fgm_per_row = false;

  bool wordnet = false;
  double wordnet_ratio = 0.30;
  std::string wordnet_path;

  bool swap = true;

  // "toy", "base", "large", or a checkpoint directory.
  std::string encoder = "large";
  // Tokenizer file for pretrained encoders; defaults to <encoder>/tokenizer.json.
  std::string tokenizer;

  // Toy encoder shape.
  int toy_hidden = 32;
  int toy_layers = 2;
  int toy_heads = 2;
  int toy_ff = 64;

  int head_hidden = 0;

  // Ranger settings other than lr.
  double beta1 = 0.9;
  double beta2 = 0.999;
  double eps = 1e-8;
  double weight_decay = 0.0;
  int lookahead_k = 6;
  double lookahead_alpha = 0.5;
  bool gradient_centralization = true;

  bool clean = true;
  std::size_t window = 40;

  // Pseudo labels with max(p, 1 - p) below this are dropped; 0 keeps all.
  double pseudo_threshold = 0.0;
  // Folds trained concurrently.
  int parallel_folds = 1;

  void Validate() const;
  nlohmann::json ToJson() const;
  // Missing keys keep their defaults; unknown keys are rejected.
  static TrainConfig FromJson(const nlohmann::json& j);
  RangerConfig ranger() const;
};

inline constexpr int kConfigSchemaVersion = 1;

// K disjoint index groups. Pairs sharing a SourceId (a pair and its swap)
// stay together; each class is dealt round-robin over folds after a seeded
// shuffle, so every fold's count of a class is within one of its share.
std::vector<std::vector<std::size_t>> StratifiedFolds(const std::vector<TaggedPair>& pairs,
                                                      int k, std::uint64_t seed);

struct EpochRecord {
  int epoch = 0;
  double train_loss = 0.0;
  double adversarial_loss = 0.0;  // 0 when FGM is off
  double dev_accuracy = 0.0;
};

struct FoldResult {
  int fold = 0;
  std::filesystem::path checkpoint;
  std::vector<EpochRecord> history;
  int best_epoch = 0;
  double best_dev_accuracy = 0.0;
};

// Index of the best epoch (first maximum) and whether training should stop
// after the last recorded epoch.
struct StopDecision {
  int best_epoch = 0;
  bool stop = false;
};
StopDecision EarlyStopping(const std::vector<double>& dev_accuracies, int patience);

std::string HistoryCsv(const FoldResult& result);

// Tokenizer for the configured encoder. The toy tokenizer's vocabulary is
// built from `texts`; target tags are registered in either case.
std::unique_ptr<Tokenizer> MakeTokenizer(const TrainConfig& config,
                                         const std::vector<std::string>& texts);

// Fresh model for the configured encoder and tokenizer.
std::unique_ptr<WicModel> MakeModel(const TrainConfig& config, const Tokenizer& tokenizer);

// Trains one fold, keeping the best-dev checkpoint under `fold_dir`.
// `extra_train` (e.g. WordNet pairs) is added to the training portion only,
// as is swap augmentation.
FoldResult TrainFold(int fold, const std::vector<TaggedPair>& corpus,
                     const std::vector<std::size_t>& train_idx,
                     const std::vector<std::size_t>& dev_idx,
                     const std::vector<TaggedPair>& extra_train, const TrainConfig& config,
                     const Tokenizer& tokenizer, const std::filesystem::path& fold_dir);

struct Prediction {
  std::string id;
  double probability = 0.0;  // P(T)
  Label label = Label::kFalse;
};

// T iff p > 0.5; exactly 0.5 is F.
inline Label HardLabel(double p) { return p > 0.5 ? Label::kTrue : Label::kFalse; }

// Mean probability per example, summed in ascending fold-index order.
std::vector<Prediction> EnsembleAverage(const std::vector<std::string>& ids,
                                        std::vector<std::pair<int, std::vector<double>>> folds);

// Loads each checkpoint and averages its predictions.
std::vector<Prediction> EnsemblePredict(const std::vector<std::filesystem::path>& checkpoints,
                                        const std::vector<EncodedExample>& examples);

double Accuracy(const std::vector<Prediction>& predictions,
                const std::vector<EncodedExample>& examples);

struct RunResult {
  std::vector<FoldResult> folds;
  std::vector<std::vector<std::size_t>> assignment;
  std::vector<std::filesystem::path> checkpoints() const;
};

// Full K-fold training of `corpus` into `run_dir`: resolved config,
// tokenizer, fold assignment, per-fold checkpoints and histories.
RunResult TrainKFold(const std::vector<TaggedPair>& corpus,
                     const std::vector<TaggedPair>& extra_train, const TrainConfig& config,
                     const Tokenizer& tokenizer, const std::filesystem::path& run_dir);

// Loads the tokenizer and fold checkpoints of a finished run and predicts.
std::vector<Prediction> PredictRun(const std::filesystem::path& run_dir,
                                   const std::vector<TaggedPair>& pairs);

struct LabelCounts {
  std::size_t total = 0;
  std::size_t t = 0;
  std::size_t f = 0;
};
LabelCounts CountLabels(const std::vector<TaggedPair>& pairs);

struct PseudoReport {
  LabelCounts stage1_train;
  std::size_t unlabeled = 0;
  LabelCounts pseudo;
  std::size_t dropped_low_confidence = 0;
  LabelCounts stage5_train;
  bool degenerate = false;  // empty unlabeled pool: plain retrain
};
nlohmann::json PseudoReportToJson(const PseudoReport& report);

struct PseudoResult {
  RunResult stage1;
  RunResult final_run;
  std::vector<TaggedPair> pseudo_pairs;
  PseudoReport report;
};

// Trains K folds, labels `unlabeled` with the ensemble, merges those pairs
// (provenance pseudo) into the training corpus and retrains from scratch.
// Stage runs go to run_dir/stage1 and run_dir/final.
PseudoResult PseudoLabelCycle(const std::vector<TaggedPair>& train,
                              const std::vector<TaggedPair>& unlabeled,
                              const std::vector<TaggedPair>& extra_train,
                              const TrainConfig& config, const Tokenizer& tokenizer,
                              const std::filesystem::path& run_dir);

// WordNet pairs for the lemmas of `train`, prepared like the corpus.
// base_size is |train|; the generator is derived from the config seed.
std::vector<TaggedPair> WordNetTrainingPairs(const std::vector<WicPair>& train,
                                             const TrainConfig& config,
                                             AugmentReport* report = nullptr);

// Synthetic task: each context holds a target word immediately followed by
// one of a few sense-marker words; the label is T iff both contexts use the
// same marker.
struct SyntheticConfig {
  std::size_t pairs = 200;
  std::size_t vocabulary = 60;
  std::size_t targets = 5;
  std::size_t markers = 2;
  std::size_t min_words = 3;
  std::size_t max_words = 6;
  std::uint64_t seed = 3999;
};
std::vector<WicPair> GenerateSynthetic(const SyntheticConfig& config, const std::string& id_prefix);
// The generator's word list: targets, markers, then fillers.
std::vector<std::string> SyntheticVocabulary(const SyntheticConfig& config);

}  // namespace wic

#endif  // WIC_TRAINER_H_
