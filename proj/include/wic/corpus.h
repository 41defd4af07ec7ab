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

// Word-in-context datasets: the .data / .gold JSON files, validation of
// individual pairs and corpus-level statistics.
//
// A .data file is a JSON array of records
//   {"id", "lemma", "pos", "sentence1", "sentence2",
//    "start1", "end1", "start2", "end2"}
// where the offsets are zero-based, half-open code point indices (integers
// or decimal strings are both accepted). A .gold file is a JSON array of
// {"id", "tag"} with tag "T" or "F".

#ifndef WIC_CORPUS_H_
#define WIC_CORPUS_H_

#include <cstddef>
#include <filesystem>
#include <optional>
#include <string>
#include <string_view>
#include <vector>

#include "json.hpp"

namespace wic {

enum class Label { kFalse = 0, kTrue = 1 };

std::string_view LabelTag(Label label);  // "T" / "F"
Label ParseLabel(std::string_view tag);  // throws DataError

inline Label Flip(Label l) {
  return l == Label::kTrue ? Label::kFalse : Label::kTrue;
}

// The four part-of-speech classes a target may carry.
enum class Pos { kNoun, kVerb, kAdj, kAdv };

std::optional<Pos> ParsePos(std::string_view s);
std::string_view PosName(Pos pos);

// Half-open [start, end) range of code points.
struct Span {
  std::size_t start = 0;
  std::size_t end = 0;

  std::size_t size() const { return end - start; }
  friend bool operator==(const Span&, const Span&) = default;
};

struct WicPair {
  std::string id;
  std::string lemma;
  // Kept as the raw string from the file; ValidatePair checks membership.
  std::string pos;
  std::string sentence1;
  std::string sentence2;
  Span span1;
  Span span2;
  std::optional<Label> label;

  friend bool operator==(const WicPair&, const WicPair&) = default;
};

// Substring of `sentence` selected by a code point span.
std::string SpanText(std::string_view sentence, Span span);

struct GoldEntry {
  std::string id;
  Label label;
};

std::vector<WicPair> ParseDataset(const nlohmann::json& records);
std::vector<GoldEntry> ParseGold(const nlohmann::json& records);

// Joins gold labels onto pairs by id. Every gold id must exist.
void JoinGold(std::vector<WicPair>* pairs, const std::vector<GoldEntry>& gold);

// Reads a .data file and, when given, its .gold file. Errors (missing
// file, malformed JSON, unknown gold id, duplicate id) name the culprit.
std::vector<WicPair> LoadDataset(
    const std::filesystem::path& data_path,
    const std::optional<std::filesystem::path>& gold_path = std::nullopt);

std::vector<GoldEntry> LoadGold(const std::filesystem::path& gold_path);

nlohmann::json DatasetToJson(const std::vector<WicPair>& pairs);
// Only labeled pairs are emitted.
nlohmann::json GoldToJson(const std::vector<WicPair>& pairs);

void SaveDataset(const std::vector<WicPair>& pairs,
                 const std::filesystem::path& data_path,
                 const std::optional<std::filesystem::path>& gold_path =
                     std::nullopt);

nlohmann::json ReadJsonFile(const std::filesystem::path& path);
void WriteJsonFile(const std::filesystem::path& path, const nlohmann::json& j);

struct Violation {
  std::string field;
  std::string reason;
};

// Lists every broken WicPair invariant; empty when the pair is valid.
std::vector<Violation> ValidatePair(const WicPair& pair);

struct CorpusStats {
  std::size_t n_pairs = 0;
  std::size_t n_target_words = 0;
  std::size_t min_tokens = 0;
  double avg_tokens = 0.0;  // exact mean; see RoundedAverage()
  std::size_t max_tokens = 0;

  // Round-half-up, as printed in reports.
  long RoundedAverage() const;
};

std::vector<std::string_view> WhitespaceTokens(std::string_view text);

// Token counts are whitespace tokens of both sentences of every pair.
// Throws DataError on an empty list.
CorpusStats ComputeStats(const std::vector<WicPair>& pairs);

nlohmann::json StatsToJson(const CorpusStats& stats);
std::string StatsTable(const CorpusStats& stats);

// Which unit the offsets of a file are consistent with. Offsets in the
// official release are documented as zero-based indices but not as
// characters or bytes; the two only differ for non-ASCII text.
enum class SpanUnits { kCharacters, kBytes, kBoth, kNeither };

struct SpanUnitReport {
  std::size_t consistent_as_chars = 0;
  std::size_t consistent_as_bytes = 0;
  std::size_t total = 0;
  SpanUnits verdict = SpanUnits::kNeither;
};

std::string_view SpanUnitsName(SpanUnits u);

// A span is consistent under an interpretation when it lies in bounds,
// falls on code point boundaries and selects a non-empty substring that
// neither starts nor ends with whitespace. The verdict requires every
// span of every pair to agree.
SpanUnitReport DetectSpanUnits(const std::vector<WicPair>& pairs);

}  // namespace wic

#endif  // WIC_CORPUS_H_
