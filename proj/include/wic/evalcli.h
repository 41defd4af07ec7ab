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


#ifndef WIC_EVALCLI_H_
#define WIC_EVALCLI_H_

#include <array>
#include <filesystem>
#include <iosfwd>
#include <map>
#include <string>
#include <string_view>
#include <vector>

#include "wic/corpus.h"
#include "wic/error.h"
#include "wic/trainer.h"

namespace wic {

// Raised when prediction and gold id sets differ; lists both directions.
class ScoreError : public DataError {
 public:
  ScoreError(std::vector<std::string> missing, std::vector<std::string> extra);
  const std::vector<std::string>& missing() const { return missing_; }
  const std::vector<std::string>& extra() const { return extra_; }

 private:
  std::vector<std::string> missing_;
  std::vector<std::string> extra_;
};

struct ScoreResult {
  std::size_t correct = 0;
  std::size_t total = 0;
  double accuracy = 0.0;  // percent
};

// 100 * matching / |gold|. Prediction ids must cover gold ids exactly.
ScoreResult Score(const std::vector<GoldEntry>& predictions, const std::vector<GoldEntry>& gold);

inline constexpr std::array<std::string_view, 9> kTaskColumns = {
    "En-En", "Fr-Fr", "Ru-Ru", "Zh-Zh", "Ar-Ar", "En-Ru", "En-Zh", "En-Fr", "En-Ar"};

// Accuracies are kept at one decimal, as reported.
double RoundTenth(double x);

struct AblationRow {
  std::string label;
  std::map<std::string, double> accuracy;  // task -> percent

  // Mean of the present tasks' one-decimal accuracies, to one decimal.
  double Average() const;
};

struct AblationTable {
  std::vector<std::string> columns;  // task columns after "Avg"
  std::string text;                  // aligned table, '*' marks column maxima
  std::string csv;
};

// Known tasks come first in the standard order; any others follow sorted.
AblationTable AblationReport(const std::vector<AblationRow>& rows);
// Writes <prefix>.txt and <prefix>.csv.
void WriteAblationReport(const std::vector<AblationRow>& rows, const std::filesystem::path& prefix);

std::vector<GoldEntry> PredictionsToGold(const std::vector<Prediction>& predictions);
// JSON array of {id, tag}, input order preserved.
void EmitPredictions(const std::vector<Prediction>& predictions, const std::filesystem::path& path);

// Command-line entry point: stats, augment, train, predict, pseudo, score,
// ablate and synth. Returns the process exit code.
int RunCli(int argc, const char* const* argv, std::ostream& out, std::ostream& err);

}  // namespace wic

#endif  // WIC_EVALCLI_H_
