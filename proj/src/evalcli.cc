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


#include "wic/evalcli.h"

#include <algorithm>
#include <cmath>
#include <fstream>
#include <set>

#include <fmt/format.h>

namespace wic {

namespace {

// The message lists at most 20 ids; the full lists stay on the exception.
std::string JoinIds(const std::vector<std::string>& ids) {
  constexpr std::size_t kShown = 20;
  std::string out;
  for (std::size_t i = 0; i < ids.size() && i < kShown; ++i) {
    out += (out.empty() ? "" : ", ") + ids[i];
  }
  if (ids.size() > kShown) out += fmt::format(", ... {} more", ids.size() - kShown);
  return out;
}

}  // namespace

ScoreError::ScoreError(std::vector<std::string> missing, std::vector<std::string> extra)
    : DataError(fmt::format("prediction ids do not match gold: missing [{}]; extra [{}]",
                            JoinIds(missing), JoinIds(extra))),
      missing_(std::move(missing)),
      extra_(std::move(extra)) {}

ScoreResult Score(const std::vector<GoldEntry>& predictions, const std::vector<GoldEntry>& gold) {
  std::map<std::string, Label> predicted;
  for (const auto& p : predictions) {
    if (!predicted.emplace(p.id, p.label).second) {
      throw DataError(fmt::format("duplicate prediction id '{}'", p.id));
    }
  }
  std::set<std::string> gold_ids;
  std::vector<std::string> missing;
  ScoreResult r;
  for (const auto& g : gold) {
    if (!gold_ids.insert(g.id).second) throw DataError(fmt::format("duplicate gold id '{}'", g.id));
    auto it = predicted.find(g.id);
    if (it == predicted.end()) {
      missing.push_back(g.id);
      continue;
    }
    r.correct += it->second == g.label;
  }
  std::vector<std::string> extra;
  for (const auto& p : predictions) {
    if (!gold_ids.contains(p.id)) extra.push_back(p.id);
  }
  if (!missing.empty() || !extra.empty()) throw ScoreError(std::move(missing), std::move(extra));
  if (gold.empty()) throw DataError("gold file is empty");
  r.total = gold.size();
  r.accuracy = 100.0 * static_cast<double>(r.correct) / static_cast<double>(r.total);
  return r;
}

double RoundTenth(double x) { return std::floor(x * 10.0 + 0.5) / 10.0; }

double AblationRow::Average() const {
  if (accuracy.empty()) return 0.0;
  double sum = 0.0;
  for (const auto& [task, acc] : accuracy) sum += RoundTenth(acc);
  return RoundTenth(sum / static_cast<double>(accuracy.size()));
}

AblationTable AblationReport(const std::vector<AblationRow>& rows) {
  AblationTable t;
  std::set<std::string> present;
  for (const auto& r : rows) {
    for (const auto& [task, acc] : r.accuracy) present.insert(task);
  }
  for (std::string_view task : kTaskColumns) {
    if (present.erase(std::string(task))) t.columns.emplace_back(task);
  }
  t.columns.insert(t.columns.end(), present.begin(), present.end());

  // Column 0 is Avg. Maxima compare the one-decimal values that are shown.
  std::vector<double> best(t.columns.size() + 1, -1.0);
  auto cell = [&](const AblationRow& r, std::size_t col) -> std::optional<double> {
    if (col == 0) return r.accuracy.empty() ? std::nullopt : std::optional(r.Average());
    auto it = r.accuracy.find(t.columns[col - 1]);
    if (it == r.accuracy.end()) return std::nullopt;
    return RoundTenth(it->second);
  };
  for (const auto& r : rows) {
    for (std::size_t c = 0; c < best.size(); ++c) {
      if (auto v = cell(r, c)) best[c] = std::max(best[c], *v);
    }
  }

  std::size_t label_width = 8;
  for (const auto& r : rows) label_width = std::max(label_width, r.label.size());
  t.text = fmt::format("{:<{}} | {:>6}", "Strategy", label_width, "Avg");
  t.csv = "strategy,Avg";
  for (const auto& c : t.columns) {
    t.text += fmt::format(" | {:>6}", c);
    t.csv += "," + c;
  }
  t.text += "\n" + std::string(label_width + 9 * (t.columns.size() + 1), '-') + "\n";
  t.csv += "\n";
  for (const auto& r : rows) {
    t.text += fmt::format("{:<{}}", r.label, label_width);
    std::string label = r.label;
    if (label.find_first_of(",\"") != std::string::npos) {
      std::string quoted;
      for (char ch : label) quoted += ch == '"' ? std::string("\"\"") : std::string(1, ch);
      label = "\"" + quoted + "\"";
    }
    t.csv += label;
    for (std::size_t c = 0; c < best.size(); ++c) {
      const auto v = cell(r, c);
      if (!v) {
        t.text += fmt::format(" | {:>6}", "-");
        t.csv += ",";
        continue;
      }
      const std::string shown = fmt::format("{:.1f}{}", *v, *v == best[c] ? "*" : " ");
      t.text += fmt::format(" | {:>6}", shown);
      t.csv += fmt::format(",{:.1f}", *v);
    }
    t.text += "\n";
    t.csv += "\n";
  }
  return t;
}

void WriteAblationReport(const std::vector<AblationRow>& rows,
                         const std::filesystem::path& prefix) {
  const AblationTable t = AblationReport(rows);
  if (prefix.has_parent_path()) std::filesystem::create_directories(prefix.parent_path());
  for (const auto& [ext, body] : {std::pair{".txt", &t.text}, std::pair{".csv", &t.csv}}) {
    std::filesystem::path path = prefix;
    path += ext;
    std::ofstream out(path, std::ios::trunc);
    out << *body;
    if (!out) throw Error(fmt::format("cannot write '{}'", path.string()));
  }
}

std::vector<GoldEntry> PredictionsToGold(const std::vector<Prediction>& predictions) {
  std::vector<GoldEntry> out;
  out.reserve(predictions.size());
  for (const auto& p : predictions) out.push_back({p.id, p.label});
  return out;
}

void EmitPredictions(const std::vector<Prediction>& predictions,
                     const std::filesystem::path& path) {
  nlohmann::json j = nlohmann::json::array();
  for (const auto& p : predictions) {
    j.push_back({{"id", p.id}, {"tag", std::string(LabelTag(p.label))}});
  }
  WriteJsonFile(path, j);
}

}  // namespace wic
