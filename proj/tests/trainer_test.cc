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


#include <algorithm>
#include <filesystem>
#include <set>

#include <gtest/gtest.h>

#include "wic/preprocess.h"
#include "wic/trainer.h"

namespace wic {
namespace {

namespace fs = std::filesystem;

std::vector<TaggedPair> Labeled(std::size_t n, std::size_t n_true) {
  std::vector<TaggedPair> out;
  for (std::size_t i = 0; i < n; ++i) {
    out.push_back({"p" + std::to_string(i), "a <t> x </t>", "<t> x </t> b",
                   i < n_true ? Label::kTrue : Label::kFalse, Provenance::kOriginal});
  }
  return out;
}

std::size_t CountTrue(const std::vector<TaggedPair>& pairs, const std::vector<std::size_t>& fold) {
  return std::count_if(fold.begin(), fold.end(),
                       [&](std::size_t i) { return pairs[i].label == Label::kTrue; });
}

void ExpectPartition(const std::vector<std::vector<std::size_t>>& folds, std::size_t n) {
  std::vector<int> seen(n, 0);
  for (const auto& f : folds) {
    for (std::size_t i : f) ++seen.at(i);
  }
  EXPECT_TRUE(std::all_of(seen.begin(), seen.end(), [](int c) { return c == 1; }));
}

TEST(StratifiedFoldsTest, TenPairsFiveFolds) {
  const auto pairs = Labeled(10, 5);
  const auto folds = StratifiedFolds(pairs, 5, 3999);
  ASSERT_EQ(folds.size(), 5u);
  for (const auto& f : folds) {
    EXPECT_EQ(f.size(), 2u);
    EXPECT_EQ(CountTrue(pairs, f), 1u);
  }
  ExpectPartition(folds, 10);
}

TEST(StratifiedFoldsTest, EightThousandPairs) {
  const auto pairs = Labeled(8000, 4000);
  const auto folds = StratifiedFolds(pairs, 5, 3999);
  for (const auto& f : folds) EXPECT_EQ(f.size(), 1600u);
  ExpectPartition(folds, 8000);
}

TEST(StratifiedFoldsTest, UnevenClassesTallied) {
  const auto pairs = Labeled(103, 61);
  const auto folds = StratifiedFolds(pairs, 5, 3999);
  std::size_t total_true = 0;
  for (const auto& f : folds) {
    const std::size_t t = CountTrue(pairs, f);
    EXPECT_TRUE(t == 12 || t == 13) << t;
    total_true += t;
  }
  EXPECT_EQ(total_true, 61u);
  ExpectPartition(folds, 103);
}

TEST(StratifiedFoldsTest, DeterministicUnderSeed) {
  const auto pairs = Labeled(50, 20);
  EXPECT_EQ(StratifiedFolds(pairs, 5, 1), StratifiedFolds(pairs, 5, 1));
  EXPECT_NE(StratifiedFolds(pairs, 5, 1), StratifiedFolds(pairs, 5, 2));
}

TEST(StratifiedFoldsTest, SwapsStayWithSource) {
  const auto pairs = SwapAugment(Labeled(30, 12));
  const auto folds = StratifiedFolds(pairs, 5, 3999);
  for (const auto& f : folds) {
    std::set<std::string> ids;
    for (std::size_t i : f) ids.insert(pairs[i].id);
    for (const auto& id : ids) EXPECT_TRUE(ids.contains(SourceId(id)) && ids.contains(SourceId(id) + ".swap"));
  }
}

TEST(StratifiedFoldsTest, TooFewOfAClass) {
  EXPECT_THROW(StratifiedFolds(Labeled(10, 3), 5, 1), DataError);
  auto unlabeled = Labeled(10, 5);
  unlabeled[0].label.reset();
  EXPECT_THROW(StratifiedFolds(unlabeled, 5, 1), DataError);
}

TEST(EarlyStoppingTest, PlateauStopsAfterPatience) {
  const std::vector<double> acc = {0.6, 0.7, 0.7, 0.7, 0.7};
  const auto d = EarlyStopping(acc, 3);
  EXPECT_EQ(d.best_epoch, 1);  // second epoch
  EXPECT_TRUE(d.stop);
  EXPECT_FALSE(EarlyStopping({0.6, 0.7, 0.7, 0.7}, 3).stop);
}

TEST(EarlyStoppingTest, PatienceEqualToBudgetNeverStops) {
  std::vector<double> acc = {0.9};
  for (int e = 1; e < 10; ++e) {
    acc.push_back(0.5);
    EXPECT_FALSE(EarlyStopping(acc, 10).stop);
  }
}

TEST(EnsembleTest, TieGoesToFalse) {
  const auto p = EnsembleAverage({"a"}, {{0, {0.2}}, {1, {0.8}}});
  EXPECT_EQ(p[0].probability, 0.5);
  EXPECT_EQ(p[0].label, Label::kFalse);
}

TEST(EnsembleTest, SingleFoldIsIdentity) {
  const auto p = EnsembleAverage({"a", "b"}, {{0, {0.3, 0.9}}});
  EXPECT_EQ(p[0].probability, 0.3);
  EXPECT_EQ(p[1].probability, 0.9);
  EXPECT_EQ(p[1].label, Label::kTrue);
}

TEST(EnsembleTest, FoldOrderInvariantAndBounded) {
  std::vector<std::pair<int, std::vector<double>>> folds = {
      {0, {0.1, 0.7, 0.3333}}, {1, {0.2, 0.61, 0.9}}, {2, {0.3, 0.123456789, 0.5}},
      {3, {0.05, 0.99, 0.4}},  {4, {0.7, 0.0001, 0.77}}};
  const std::vector<std::string> ids = {"a", "b", "c"};
  const auto base = EnsembleAverage(ids, folds);
  std::reverse(folds.begin(), folds.end());
  std::swap(folds[1], folds[3]);
  const auto permuted = EnsembleAverage(ids, folds);
  for (std::size_t i = 0; i < ids.size(); ++i) {
    EXPECT_EQ(base[i].probability, permuted[i].probability);
    double lo = 1, hi = 0;
    for (const auto& f : folds) {
      lo = std::min(lo, f.second[i]);
      hi = std::max(hi, f.second[i]);
    }
    EXPECT_GE(base[i].probability, lo);
    EXPECT_LE(base[i].probability, hi);
  }
}

TEST(TrainConfigTest, ReferenceDefaults) {
  const TrainConfig c;
  EXPECT_EQ(c.seed, 3999u);
  EXPECT_EQ(c.batch_size, 10u);
  EXPECT_EQ(c.lr, 1.2e-5);
  EXPECT_EQ(c.dropout, 0.28);
  EXPECT_EQ(c.folds, 5);
  EXPECT_EQ(c.max_epochs, 10);
  EXPECT_EQ(c.patience, 3);
  EXPECT_EQ(c.max_len, 240u);
  EXPECT_EQ(c.encoder, "large");
}

TEST(TrainConfigTest, JsonRoundTripAndValidation) {
  TrainConfig c;
  c.encoder = "toy";
  c.lr = 0.01;
  c.swap = false;
  const auto j = c.ToJson();
  EXPECT_EQ(j.at("schema_version"), kConfigSchemaVersion);
  EXPECT_EQ(TrainConfig::FromJson(j).ToJson(), j);
  auto bad = j;
  bad["lrr"] = 0.1;
  EXPECT_THROW(TrainConfig::FromJson(bad), ConfigError);
  bad = j;
  bad["folds"] = 1;
  EXPECT_THROW(TrainConfig::FromJson(bad), ConfigError);
  bad = j;
  bad["patience"] = 11;
  EXPECT_THROW(TrainConfig::FromJson(bad), ConfigError);
}

TEST(SyntheticTest, LabelRuleAndVocabulary) {
  SyntheticConfig sc;
  const auto pairs = GenerateSynthetic(sc, "s");
  ASSERT_EQ(pairs.size(), 200u);
  const auto vocab = SyntheticVocabulary(sc);
  EXPECT_EQ(vocab.size(), 60u);
  const std::set<std::string> words(vocab.begin(), vocab.end());
  std::size_t t = 0;
  for (const auto& p : pairs) {
    EXPECT_TRUE(ValidatePair(p).empty());
    // The word after the target is the sense marker.
    auto marker = [&](const std::string& s, Span span) {
      const auto rest = s.substr(span.end + 1);
      return rest.substr(0, rest.find(' '));
    };
    const bool same = marker(p.sentence1, p.span1) == marker(p.sentence2, p.span2);
    EXPECT_EQ(p.label, same ? Label::kTrue : Label::kFalse) << p.id;
    t += same;
    for (const auto w : WhitespaceTokens(p.sentence1)) {
      if (w != ".") EXPECT_TRUE(words.contains(std::string(w))) << w;
    }
  }
  EXPECT_EQ(t, 100u);
}

TEST(HistoryCsvTest, OneRowPerEpoch) {
  FoldResult r;
  r.history = {{0, 0.7, 0.8, 0.5}, {1, 0.6, 0.7, 0.75}};
  const std::string csv = HistoryCsv(r);
  EXPECT_EQ(std::count(csv.begin(), csv.end(), '\n'), 3);
}

TrainConfig TinyConfig() {
  TrainConfig c;
  c.encoder = "toy";
  c.lr = 0.01;
  c.dropout = 0.1;
  c.folds = 2;
  c.max_epochs = 2;
  c.patience = 2;
  c.swap = false;
  c.toy_hidden = 8;
  c.toy_ff = 16;
  c.toy_layers = 1;
  return c;
}

struct TinyTask {
  std::vector<TaggedPair> train, unlabeled;
  std::unique_ptr<Tokenizer> tokenizer;
};

TinyTask MakeTinyTask(const TrainConfig& config) {
  SyntheticConfig sc;
  sc.pairs = 16;
  TinyTask t;
  t.train = PrepareCorpus(GenerateSynthetic(sc, "tr"), Provenance::kOriginal);
  sc.pairs = 6;
  sc.seed = 7;
  auto pool = GenerateSynthetic(sc, "un");
  for (auto& p : pool) p.label.reset();
  t.unlabeled = PrepareCorpus(pool, Provenance::kOriginal);
  std::vector<std::string> texts;
  for (const auto* set : {&t.train, &t.unlabeled}) {
    for (const auto& p : *set) {
      texts.push_back(p.tagged1);
      texts.push_back(p.tagged2);
    }
  }
  t.tokenizer = MakeTokenizer(config, texts);
  return t;
}

TEST(PseudoLabelTest, FinalTrainingSetGrowsByPool) {
  const TrainConfig config = TinyConfig();
  const TinyTask task = MakeTinyTask(config);
  const fs::path dir = fs::temp_directory_path() / "wic_pseudo_test";
  fs::remove_all(dir);
  const auto r = PseudoLabelCycle(task.train, task.unlabeled, {}, config, *task.tokenizer, dir);
  EXPECT_EQ(r.report.stage1_train.total, 16u);
  EXPECT_EQ(r.report.unlabeled, 6u);
  EXPECT_EQ(r.report.pseudo.total, 6u);
  EXPECT_EQ(r.report.pseudo.t + r.report.pseudo.f, 6u);
  EXPECT_EQ(r.report.stage5_train.total, 22u);
  EXPECT_FALSE(r.report.degenerate);
  for (const auto& p : r.pseudo_pairs) {
    EXPECT_EQ(p.provenance, Provenance::kPseudo);
    EXPECT_TRUE(p.label.has_value());
  }
  EXPECT_TRUE(fs::exists(dir / "pseudo_report.json"));
  EXPECT_TRUE(fs::exists(dir / "final" / "summary.json"));
  fs::remove_all(dir);
}

TEST(PseudoLabelTest, EmptyPoolDegeneratesToRetrain) {
  const TrainConfig config = TinyConfig();
  const TinyTask task = MakeTinyTask(config);
  const fs::path dir = fs::temp_directory_path() / "wic_pseudo_empty";
  fs::remove_all(dir);
  const auto r = PseudoLabelCycle(task.train, {}, {}, config, *task.tokenizer, dir);
  EXPECT_TRUE(r.report.degenerate);
  EXPECT_EQ(r.report.stage5_train.total, 16u);
  fs::remove_all(dir);
}

TEST(TrainKFoldTest, RunDirectoryLayoutAndDevHonesty) {
  TrainConfig config = TinyConfig();
  config.swap = true;
  const TinyTask task = MakeTinyTask(config);
  const fs::path dir = fs::temp_directory_path() / "wic_kfold_test";
  fs::remove_all(dir);
  const RunResult run = TrainKFold(task.train, {}, config, *task.tokenizer, dir);
  ASSERT_EQ(run.folds.size(), 2u);
  for (const char* f : {"config.json", "tokenizer.json", "folds.json", "summary.json",
                        "fold_0/history.csv", "fold_1/checkpoint/manifest.json"}) {
    EXPECT_TRUE(fs::exists(dir / f)) << f;
  }
  for (const auto& f : run.folds) {
    double best = 0;
    for (const auto& e : f.history) best = std::max(best, e.dev_accuracy);
    EXPECT_EQ(f.best_dev_accuracy, best);
    EXPECT_LE(static_cast<int>(f.history.size()) - 1 - f.best_epoch, config.patience);
  }
  const auto preds = PredictRun(dir, task.train);
  EXPECT_EQ(preds.size(), task.train.size());
  fs::remove_all(dir);
}

}  // namespace
}  // namespace wic
