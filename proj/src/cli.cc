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


// Command-line surface. Each subcommand loads its inputs, calls into the
// library and writes a resolved-config snapshot next to its outputs.

#include <algorithm>
#include <cctype>
#include <fstream>
#include <iostream>
#include <set>

#include <fmt/format.h>

#include "CLI11.hpp"
#include "wic/corpus.h"
#include "wic/evalcli.h"
#include "wic/preprocess.h"
#include "wic/trainer.h"
#include "wic/wordnet.h"

namespace wic {

namespace {

namespace fs = std::filesystem;
using nlohmann::json;

// "key=value" with value parsed as JSON when possible, else taken as a
// string. Dotted keys address nested objects ("data.train=...").
void ApplySet(json* j, const std::string& assignment) {
  const auto eq = assignment.find('=');
  if (eq == std::string::npos || eq == 0) {
    throw ConfigError(fmt::format("--set expects key=value, got '{}'", assignment));
  }
  const std::string key = assignment.substr(0, eq);
  const std::string raw = assignment.substr(eq + 1);
  json value = json::parse(raw, nullptr, false);
  if (value.is_discarded()) value = raw;
  json* node = j;
  std::size_t start = 0;
  for (std::size_t dot; (dot = key.find('.', start)) != std::string::npos; start = dot + 1) {
    node = &(*node)[key.substr(start, dot - start)];
  }
  (*node)[key.substr(start)] = value;
}

fs::path Resolve(const fs::path& base, const std::string& p) {
  if (p.empty()) return {};
  fs::path path(p);
  return fs::absolute(path.is_absolute() ? path : base / path).lexically_normal();
}

struct RunPlan {
  TrainConfig config;
  json data = json::object();  // absolute paths
  fs::path run_dir;

  json Resolved() const {
    json j = config.ToJson();
    j["data"] = data;
    j["run_dir"] = fs::absolute(run_dir).string();
    return j;
  }
};

const char* kDataKeys[] = {"train", "train_gold", "dev", "dev_gold", "unlabeled"};

// Config file layout: TrainConfig keys at top level, plus optional
// "data" {train, train_gold, dev, dev_gold, unlabeled, merge_dev} and
// "run_dir". Relative data paths are taken from the config's directory.
RunPlan LoadRunPlan(const std::string& config_path, const std::vector<std::string>& sets,
                    const std::string& run_dir_flag) {
  json j = json::object();
  fs::path base = fs::current_path();
  if (!config_path.empty()) {
    j = ReadJsonFile(config_path);
    base = fs::absolute(config_path).parent_path();
  }
  for (const auto& s : sets) ApplySet(&j, s);
  RunPlan plan;
  if (j.contains("data")) {
    const json& d = j.at("data");
    if (!d.is_object()) throw ConfigError("'data' must be an object");
    for (const auto& [key, value] : d.items()) {
      if (key == "merge_dev") {
        plan.data[key] = value.get<bool>();
      } else if (std::find(std::begin(kDataKeys), std::end(kDataKeys), key) !=
                 std::end(kDataKeys)) {
        plan.data[key] = Resolve(base, value.get<std::string>()).string();
      } else {
        throw ConfigError(fmt::format("unknown data key '{}'", key));
      }
    }
    j.erase("data");
  }
  if (j.contains("run_dir")) {
    plan.run_dir = Resolve(base, j.at("run_dir").get<std::string>());
    j.erase("run_dir");
  }
  if (!run_dir_flag.empty()) plan.run_dir = fs::absolute(run_dir_flag);
  if (j.contains("wordnet_path") && j.at("wordnet_path").is_string()) {
    j["wordnet_path"] = Resolve(base, j.at("wordnet_path").get<std::string>()).string();
  }
  if (j.contains("tokenizer") && j.at("tokenizer").is_string()) {
    j["tokenizer"] = Resolve(base, j.at("tokenizer").get<std::string>()).string();
  }
  plan.config = TrainConfig::FromJson(j);
  return plan;
}

std::string DataPath(const RunPlan& plan, const char* key) {
  return plan.data.value(key, std::string());
}

std::vector<WicPair> LoadValidated(const std::string& data, const std::string& gold) {
  if (data.empty()) throw ConfigError("no data file given");
  auto pairs = LoadDataset(data, gold.empty() ? std::nullopt : std::optional<fs::path>(gold));
  for (const auto& p : pairs) {
    const auto v = ValidatePair(p);
    if (!v.empty()) {
      throw DataError(fmt::format("'{}': pair '{}': {}: {}", data, p.id, v[0].field, v[0].reason));
    }
  }
  return pairs;
}

Provenance ProvenanceOf(const std::string& id) {
  if (id.ends_with(kSwapSuffix)) return Provenance::kSwapped;
  if (id.find(".wn.") != std::string::npos) return Provenance::kWordNet;
  return Provenance::kOriginal;
}

std::vector<TaggedPair> Prepare(const std::vector<WicPair>& pairs, const TrainConfig& config,
                                std::ostream& out) {
  PrepareStats stats;
  std::vector<TaggedPair> tagged;
  for (const auto& p : pairs) {
    tagged.push_back(PreparePair(p, ProvenanceOf(p.id), {config.clean, config.window}, &stats));
  }
  if (stats.cleaning_skipped > 0) {
    out << fmt::format("note: {} sentences left uncleaned (edit would touch the target)\n",
                       stats.cleaning_skipped);
  }
  return tagged;
}

struct TrainingInputs {
  std::vector<WicPair> raw;
  std::vector<TaggedPair> train;
  std::vector<TaggedPair> extra;
  std::vector<TaggedPair> dev;
  std::vector<TaggedPair> unlabeled;
  std::unique_ptr<Tokenizer> tokenizer;
};

TrainingInputs LoadTrainingInputs(const RunPlan& plan, std::ostream& out) {
  TrainingInputs in;
  in.raw = LoadValidated(DataPath(plan, "train"), DataPath(plan, "train_gold"));
  std::vector<WicPair> dev_raw;
  if (!DataPath(plan, "dev").empty()) {
    dev_raw = LoadValidated(DataPath(plan, "dev"), DataPath(plan, "dev_gold"));
  }
  if (plan.data.value("merge_dev", false)) {
    in.raw.insert(in.raw.end(), dev_raw.begin(), dev_raw.end());
    dev_raw.clear();
  }
  in.train = Prepare(in.raw, plan.config, out);
  in.dev = Prepare(dev_raw, plan.config, out);
  if (!DataPath(plan, "unlabeled").empty()) {
    auto pool = LoadValidated(DataPath(plan, "unlabeled"), "");
    for (auto& p : pool) p.label.reset();
    in.unlabeled = Prepare(pool, plan.config, out);
  }
  if (plan.config.wordnet) {
    AugmentReport report;
    in.extra = WordNetTrainingPairs(in.raw, plan.config, &report);
    out << "wordnet: " << AugmentReportToJson(report).dump() << "\n";
  }
  std::vector<std::string> texts;
  for (const auto* set : {&in.train, &in.extra, &in.dev, &in.unlabeled}) {
    for (const auto& p : *set) {
      texts.push_back(p.tagged1);
      texts.push_back(p.tagged2);
    }
  }
  in.tokenizer = MakeTokenizer(plan.config, texts);
  return in;
}

void PrintRun(const RunResult& run, std::ostream& out) {
  for (const auto& f : run.folds) {
    out << fmt::format("fold {}: best epoch {} of {}, dev accuracy {:.1f}\n", f.fold,
                       f.best_epoch, f.history.size(), 100.0 * f.best_dev_accuracy);
  }
}

void ReportDev(const RunResult& run, const TrainingInputs& in, const TrainConfig& config,
               const fs::path& dir, std::ostream& out) {
  if (in.dev.empty()) return;
  const auto examples = EncodeCorpus(in.dev, *in.tokenizer, config.max_len);
  const auto preds = EnsemblePredict(run.checkpoints(), examples);
  EmitPredictions(preds, dir / "dev_predictions.json");
  std::vector<GoldEntry> gold;
  for (const auto& p : in.dev) {
    if (p.label) gold.push_back({p.id, *p.label});
  }
  if (gold.size() == in.dev.size()) {
    out << fmt::format("dev accuracy {:.1f}\n", Score(PredictionsToGold(preds), gold).accuracy);
  }
}

RunResult TrainWith(const RunPlan& plan, const TrainingInputs& in, std::ostream& out) {
  if (plan.run_dir.empty()) throw ConfigError("no run directory (set run_dir or --out)");
  WriteJsonFile(plan.run_dir / "resolved_config.json", plan.Resolved());
  RunResult run = TrainKFold(in.train, in.extra, plan.config, *in.tokenizer, plan.run_dir);
  PrintRun(run, out);
  ReportDev(run, in, plan.config, plan.run_dir, out);
  return run;
}

std::string Slug(const std::string& label) {
  std::string s;
  for (char c : label) {
    if (std::isalnum(static_cast<unsigned char>(c))) {
      s += static_cast<char>(std::tolower(static_cast<unsigned char>(c)));
    } else if (!s.empty() && s.back() != '_') {
      s += '_';
    }
  }
  while (!s.empty() && s.back() == '_') s.pop_back();
  return s.empty() ? "strategy" : s;
}

WicPair SwapWicPair(const WicPair& p) {
  WicPair s = p;
  s.id = p.id + std::string(kSwapSuffix);
  std::swap(s.sentence1, s.sentence2);
  std::swap(s.span1, s.span2);
  return s;
}

}  // namespace

int RunCli(int argc, const char* const* argv, std::ostream& out, std::ostream& err) {
  CLI::App app{"Word-in-context disambiguation: data tools, training and evaluation", "wic"};
  app.require_subcommand(1);

  std::string data, gold, json_out;
  auto* stats = app.add_subcommand("stats", "Corpus statistics");
  stats->add_option("--data", data, "Dataset .data file")->required();
  stats->add_option("--gold", gold, "Optional .gold file");
  stats->add_option("--json", json_out, "Also write the statistics as JSON");

  std::string out_dir, wordnet_path;
  bool do_swap = false;
  double ratio = kDefaultWordNetRatio;
  std::uint64_t seed = 3999;
  auto* augment = app.add_subcommand("augment", "Swap and WordNet augmentation");
  augment->add_option("--data", data)->required();
  augment->add_option("--gold", gold)->required();
  augment->add_option("--out", out_dir, "Output directory")->required();
  augment->add_flag("--swap", do_swap, "Add context-swapped copies");
  augment->add_option("--wordnet", wordnet_path, "WordNet dict directory or JSON fixture");
  augment->add_option("--ratio", ratio, "WordNet pairs per original pair");
  augment->add_option("--seed", seed);

  std::string config_path, run_flag;
  std::vector<std::string> sets;
  auto add_run_options = [&](CLI::App* sub) {
    sub->add_option("--config", config_path, "Config JSON");
    sub->add_option("--set", sets, "Override, key=value (repeatable)");
    sub->add_option("--data", data, "Training .data (overrides data.train)");
    sub->add_option("--gold", gold, "Training .gold (overrides data.train_gold)");
    sub->add_option("--out", run_flag, "Run directory (overrides run_dir)");
  };
  auto* train = app.add_subcommand("train", "Stratified K-fold training");
  add_run_options(train);
  std::string unlabeled;
  auto* pseudo = app.add_subcommand("pseudo", "Pseudo-label cycle");
  add_run_options(pseudo);
  pseudo->add_option("--unlabeled", unlabeled, "Unlabeled .data (overrides data.unlabeled)");

  std::string run_dir, pred_out;
  auto* predict = app.add_subcommand("predict", "Fold-ensemble prediction");
  predict->add_option("--run", run_dir, "Finished training run directory")->required();
  predict->add_option("--data", data, "Dataset to label")->required();
  predict->add_option("--gold", gold, "Optional gold file to score against");
  predict->add_option("--out", pred_out, "Predictions JSON")->required();

  std::string pred_path;
  auto* score = app.add_subcommand("score", "Accuracy of predictions against gold");
  score->add_option("--pred", pred_path)->required();
  score->add_option("--gold", gold)->required();

  std::string ablation_path;
  auto* ablate = app.add_subcommand("ablate", "Run strategies and emit the comparison table");
  ablate->add_option("--config", ablation_path, "Ablation JSON")->required();

  std::size_t n_pairs = 200, n_heldout = 200;
  std::uint64_t heldout_seed = 4000;
  auto* synth = app.add_subcommand("synth", "Write the synthetic toy task");
  synth->add_option("--out", out_dir)->required();
  synth->add_option("--pairs", n_pairs);
  synth->add_option("--heldout", n_heldout);
  synth->add_option("--seed", seed);
  synth->add_option("--heldout-seed", heldout_seed);

  try {
    app.parse(argc, argv);
  } catch (const CLI::ParseError& e) {
    return app.exit(e, out, err);
  }

  try {
    if (*stats) {
      const auto pairs = LoadDataset(data, gold.empty() ? std::nullopt : std::optional<fs::path>(gold));
      const CorpusStats s = ComputeStats(pairs);
      const SpanUnitReport units = DetectSpanUnits(pairs);
      out << StatsTable(s);
      out << fmt::format("Span units               {} ({}/{} spans as characters, {}/{} as bytes)\n",
                         SpanUnitsName(units.verdict), units.consistent_as_chars, units.total,
                         units.consistent_as_bytes, units.total);
      if (!json_out.empty()) {
        json j = StatsToJson(s);
        j["span_units"] = std::string(SpanUnitsName(units.verdict));
        WriteJsonFile(json_out, j);
      }
      return 0;
    }

    if (*augment) {
      auto pairs = LoadValidated(data, gold);
      const std::size_t base = pairs.size();
      std::vector<WicPair> result;
      for (const auto& p : pairs) {
        result.push_back(p);
        if (do_swap) result.push_back(SwapWicPair(p));
      }
      json report = {{"original", base}, {"swapped", do_swap ? base : 0}};
      if (!wordnet_path.empty()) {
        const auto source = OpenWordNet(wordnet_path);
        Rng rng(seed);
        AugmentReport r;
        const auto wn = AugmentWordNet(CorpusLemmas(pairs), *source, base, ratio, rng, &r);
        result.insert(result.end(), wn.begin(), wn.end());
        report["wordnet"] = AugmentReportToJson(r);
      }
      report["total"] = result.size();
      const fs::path dir(out_dir);
      SaveDataset(result, dir / "augmented.data", dir / "augmented.gold");
      WriteJsonFile(dir / "augment_report.json", report);
      WriteJsonFile(dir / "resolved_config.json",
                    {{"command", "augment"},
                     {"data", fs::absolute(data).string()},
                     {"gold", fs::absolute(gold).string()},
                     {"swap", do_swap},
                     {"wordnet", wordnet_path.empty() ? "" : fs::absolute(wordnet_path).string()},
                     {"ratio", ratio},
                     {"seed", seed}});
      out << report.dump(2) << "\n";
      return 0;
    }

    if (*train || *pseudo) {
      RunPlan plan = LoadRunPlan(config_path, sets, run_flag);
      if (!data.empty()) plan.data["train"] = fs::absolute(data).string();
      if (!gold.empty()) plan.data["train_gold"] = fs::absolute(gold).string();
      if (!unlabeled.empty()) plan.data["unlabeled"] = fs::absolute(unlabeled).string();
      const TrainingInputs in = LoadTrainingInputs(plan, out);
      if (*train) {
        TrainWith(plan, in, out);
        return 0;
      }
      if (plan.run_dir.empty()) throw ConfigError("no run directory (set run_dir or --out)");
      WriteJsonFile(plan.run_dir / "resolved_config.json", plan.Resolved());
      const PseudoResult r =
          PseudoLabelCycle(in.train, in.unlabeled, in.extra, plan.config, *in.tokenizer, plan.run_dir);
      if (r.report.degenerate) out << "unlabeled pool is empty: plain retrain\n";
      PrintRun(r.final_run, out);
      ReportDev(r.final_run, in, plan.config, plan.run_dir / "final", out);
      out << PseudoReportToJson(r.report).dump(2) << "\n";
      return 0;
    }

    if (*predict) {
      const TrainConfig config = TrainConfig::FromJson(ReadJsonFile(fs::path(run_dir) / "config.json"));
      auto pairs = LoadValidated(data, gold);
      const auto preds = PredictRun(run_dir, Prepare(pairs, config, out));
      EmitPredictions(preds, pred_out);
      WriteJsonFile(fs::path(pred_out).parent_path() / "predict_resolved_config.json",
                    {{"command", "predict"},
                     {"run", fs::absolute(run_dir).string()},
                     {"data", fs::absolute(data).string()},
                     {"out", fs::absolute(pred_out).string()}});
      out << fmt::format("wrote {} predictions to {}\n", preds.size(), pred_out);
      if (!gold.empty()) {
        out << fmt::format("accuracy {:.1f}\n", Score(PredictionsToGold(preds), LoadGold(gold)).accuracy);
      }
      return 0;
    }

    if (*score) {
      const ScoreResult r = Score(LoadGold(pred_path), LoadGold(gold));
      out << fmt::format("accuracy {:.1f} ({}/{})\n", r.accuracy, r.correct, r.total);
      return 0;
    }

    if (*ablate) {
      const json plan = ReadJsonFile(ablation_path);
      const fs::path base_dir = fs::absolute(ablation_path).parent_path();
      const fs::path out_root = Resolve(base_dir, plan.value("out", std::string("ablation")));
      WriteJsonFile(out_root / "resolved_config.json", plan);
      const fs::path base_config = out_root / "base_config.json";
      WriteJsonFile(base_config, plan.value("base", json::object()));
      std::vector<AblationRow> rows;
      int index = 0;
      for (const auto& strategy : plan.at("strategies")) {
        const std::string label = strategy.at("label").get<std::string>();
        std::vector<std::string> overrides;
        const json set = strategy.value("set", json::object());
        for (const auto& [key, value] : set.items()) {
          overrides.push_back(key + "=" + value.dump());
        }
        RunPlan rs = LoadRunPlan(base_config.string(), overrides,
                                 (out_root / fmt::format("{:02d}_{}", index++, Slug(label))).string());
        // Data paths in the base config are relative to the ablation file.
        const json base_data = plan.value("base", json::object()).value("data", json::object());
        for (const char* key : kDataKeys) {
          if (base_data.contains(key)) {
            rs.data[key] = Resolve(base_dir, base_data.at(key).get<std::string>()).string();
          }
        }
        out << "== " << label << "\n";
        const TrainingInputs in = LoadTrainingInputs(rs, out);
        fs::path final_dir = rs.run_dir;
        if (strategy.value("pseudo", false)) {
          WriteJsonFile(rs.run_dir / "resolved_config.json", rs.Resolved());
          PseudoLabelCycle(in.train, in.unlabeled, in.extra, rs.config,
                           *in.tokenizer, rs.run_dir);
          final_dir = rs.run_dir / "final";
        } else {
          TrainWith(rs, in, out);
        }
        AblationRow row{label, {}};
        for (const auto& [task, files] : plan.at("tasks").items()) {
          const auto pairs = LoadValidated(Resolve(base_dir, files.at("data")).string(),
                                           Resolve(base_dir, files.at("gold")).string());
          const auto preds = PredictRun(final_dir, Prepare(pairs, rs.config, out));
          std::vector<GoldEntry> g;
          for (const auto& p : pairs) g.push_back({p.id, *p.label});
          row.accuracy[task] = Score(PredictionsToGold(preds), g).accuracy;
        }
        rows.push_back(std::move(row));
      }
      WriteAblationReport(rows, out_root / "ablation");
      out << AblationReport(rows).text;
      return 0;
    }

    if (*synth) {
      SyntheticConfig sc;
      sc.pairs = n_pairs;
      sc.seed = seed;
      const fs::path dir(out_dir);
      SaveDataset(GenerateSynthetic(sc, "syn"), dir / "train.data", dir / "train.gold");
      sc.pairs = n_heldout;
      sc.seed = heldout_seed;
      SaveDataset(GenerateSynthetic(sc, "held"), dir / "heldout.data", dir / "heldout.gold");
      out << fmt::format("wrote {} training and {} held-out pairs to {}\n", n_pairs, n_heldout,
                         dir.string());
      return 0;
    }
  } catch (const std::exception& e) {
    err << "error: " << e.what() << "\n";
    return 1;
  }
  return 0;
}

}  // namespace wic
