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

#include "wic/corpus.h"

#include <algorithm>
#include <charconv>
#include <cmath>
#include <fstream>
#include <set>
#include <sstream>
#include <unordered_map>
#include <unordered_set>

#include <fmt/format.h>

#include "wic/error.h"
#include "wic/util/utf8.h"

namespace wic {

using nlohmann::json;

std::string_view LabelTag(Label label) {
  return label == Label::kTrue ? "T" : "F";
}

Label ParseLabel(std::string_view tag) {
  if (tag == "T") return Label::kTrue;
  if (tag == "F") return Label::kFalse;
  throw DataError(fmt::format("label must be T or F, got '{}'", tag));
}

std::optional<Pos> ParsePos(std::string_view s) {
  if (s == "NOUN") return Pos::kNoun;
  if (s == "VERB") return Pos::kVerb;
  if (s == "ADJ") return Pos::kAdj;
  if (s == "ADV") return Pos::kAdv;
  return std::nullopt;
}

std::string_view PosName(Pos pos) {
  switch (pos) {
    case Pos::kNoun: return "NOUN";
    case Pos::kVerb: return "VERB";
    case Pos::kAdj: return "ADJ";
    case Pos::kAdv: return "ADV";
  }
  return "";
}

std::string SpanText(std::string_view sentence, Span span) {
  const std::size_t b = utf8::ByteOffset(sentence, span.start);
  const std::size_t e = utf8::ByteOffset(sentence, span.end);
  return std::string(sentence.substr(b, e - b));
}

namespace {

const json& Field(const json& record, const char* key, std::string_view id) {
  auto it = record.find(key);
  if (it == record.end()) {
    throw DataError(fmt::format("record '{}': missing key '{}'", id, key));
  }
  return *it;
}

std::string StringField(const json& record, const char* key,
                        std::string_view id) {
  const json& v = Field(record, key, id);
  if (!v.is_string()) {
    throw DataError(fmt::format("record '{}': key '{}' must be a string", id, key));
  }
  return v.get<std::string>();
}

// Offsets appear as integers or as decimal strings depending on the release.
std::size_t OffsetField(const json& record, const char* key,
                        std::string_view id) {
  const json& v = Field(record, key, id);
  if (v.is_number_unsigned()) return v.get<std::size_t>();
  if (v.is_number_integer() && v.get<long long>() >= 0) {
    return static_cast<std::size_t>(v.get<long long>());
  }
  if (v.is_string()) {
    const auto& s = v.get_ref<const std::string&>();
    std::size_t out = 0;
    auto [ptr, ec] = std::from_chars(s.data(), s.data() + s.size(), out);
    if (ec == std::errc() && ptr == s.data() + s.size() && !s.empty()) {
      return out;
    }
  }
  throw DataError(fmt::format(
      "record '{}': key '{}' must be a non-negative integer, got {}", id, key,
      v.dump()));
}

}  // namespace

std::vector<WicPair> ParseDataset(const json& records) {
  if (!records.is_array()) {
    throw DataError("dataset must be a JSON array of records");
  }
  std::vector<WicPair> pairs;
  pairs.reserve(records.size());
  std::unordered_set<std::string> seen;
  for (std::size_t i = 0; i < records.size(); ++i) {
    const json& r = records[i];
    if (!r.is_object()) {
      throw DataError(fmt::format("record #{} is not a JSON object", i));
    }
    WicPair p;
    p.id = StringField(r, "id", fmt::format("#{}", i));
    p.lemma = StringField(r, "lemma", p.id);
    p.pos = StringField(r, "pos", p.id);
    p.sentence1 = StringField(r, "sentence1", p.id);
    p.sentence2 = StringField(r, "sentence2", p.id);
    p.span1 = {OffsetField(r, "start1", p.id), OffsetField(r, "end1", p.id)};
    p.span2 = {OffsetField(r, "start2", p.id), OffsetField(r, "end2", p.id)};
    if (!seen.insert(p.id).second) {
      throw DataError(fmt::format("duplicate id '{}'", p.id));
    }
    pairs.push_back(std::move(p));
  }
  return pairs;
}

std::vector<GoldEntry> ParseGold(const json& records) {
  if (!records.is_array()) {
    throw DataError("gold file must be a JSON array of {id, tag} objects");
  }
  std::vector<GoldEntry> gold;
  gold.reserve(records.size());
  std::unordered_set<std::string> seen;
  for (std::size_t i = 0; i < records.size(); ++i) {
    const json& r = records[i];
    if (!r.is_object()) {
      throw DataError(fmt::format("gold record #{} is not a JSON object", i));
    }
    GoldEntry g;
    g.id = StringField(r, "id", fmt::format("#{}", i));
    const std::string tag = StringField(r, "tag", g.id);
    try {
      g.label = ParseLabel(tag);
    } catch (const DataError& e) {
      throw DataError(fmt::format("gold '{}': {}", g.id, e.what()));
    }
    if (!seen.insert(g.id).second) {
      throw DataError(fmt::format("duplicate gold id '{}'", g.id));
    }
    gold.push_back(std::move(g));
  }
  return gold;
}

void JoinGold(std::vector<WicPair>* pairs, const std::vector<GoldEntry>& gold) {
  std::unordered_map<std::string, std::size_t> index;
  for (std::size_t i = 0; i < pairs->size(); ++i) index[(*pairs)[i].id] = i;
  for (const GoldEntry& g : gold) {
    auto it = index.find(g.id);
    if (it == index.end()) {
      throw DataError(fmt::format("gold id '{}' has no matching data record", g.id));
    }
    (*pairs)[it->second].label = g.label;
  }
}

json ReadJsonFile(const std::filesystem::path& path) {
  std::ifstream in(path);
  if (!in) throw DataError(fmt::format("cannot open '{}'", path.string()));
  try {
    return json::parse(in);
  } catch (const json::parse_error& e) {
    throw DataError(fmt::format("malformed JSON in '{}': {}", path.string(), e.what()));
  }
}

void WriteJsonFile(const std::filesystem::path& path, const json& j) {
  if (path.has_parent_path()) std::filesystem::create_directories(path.parent_path());
  std::ofstream out(path);
  if (!out) throw Error(fmt::format("cannot write '{}'", path.string()));
  out << j.dump(2) << '\n';
  if (!out) throw Error(fmt::format("write failed for '{}'", path.string()));
}

std::vector<WicPair> LoadDataset(const std::filesystem::path& data_path,
                                 const std::optional<std::filesystem::path>& gold_path) {
  std::vector<WicPair> pairs;
  try {
    pairs = ParseDataset(ReadJsonFile(data_path));
  } catch (const DataError& e) {
    throw DataError(fmt::format("{}: {}", data_path.string(), e.what()));
  }
  if (gold_path) JoinGold(&pairs, LoadGold(*gold_path));
  return pairs;
}

std::vector<GoldEntry> LoadGold(const std::filesystem::path& gold_path) {
  try {
    return ParseGold(ReadJsonFile(gold_path));
  } catch (const DataError& e) {
    throw DataError(fmt::format("{}: {}", gold_path.string(), e.what()));
  }
}

json DatasetToJson(const std::vector<WicPair>& pairs) {
  json out = json::array();
  for (const WicPair& p : pairs) {
    out.push_back({{"id", p.id},
                   {"lemma", p.lemma},
                   {"pos", p.pos},
                   {"sentence1", p.sentence1},
                   {"sentence2", p.sentence2},
                   {"start1", p.span1.start},
                   {"end1", p.span1.end},
                   {"start2", p.span2.start},
                   {"end2", p.span2.end}});
  }
  return out;
}

json GoldToJson(const std::vector<WicPair>& pairs) {
  json out = json::array();
  for (const WicPair& p : pairs) {
    if (p.label) out.push_back({{"id", p.id}, {"tag", LabelTag(*p.label)}});
  }
  return out;
}

void SaveDataset(const std::vector<WicPair>& pairs,
                 const std::filesystem::path& data_path,
                 const std::optional<std::filesystem::path>& gold_path) {
  WriteJsonFile(data_path, DatasetToJson(pairs));
  if (gold_path) WriteJsonFile(*gold_path, GoldToJson(pairs));
}

namespace {

bool IsSentenceSeparator(char32_t cp) {
  return cp == '\n' || cp == '\r' || cp == 0x2028 || cp == 0x2029;
}

void CheckSpan(const std::string& sentence, Span span, const std::string& name,
               std::vector<Violation>* out) {
  const std::size_t len = utf8::Length(sentence);
  if (span.start >= span.end) {
    out->push_back({name, "start >= end"});
    return;
  }
  if (span.end > len) {
    out->push_back({name, fmt::format("end {} exceeds sentence length {}",
                                      span.end, len)});
    return;
  }
  const std::string text = SpanText(sentence, span);
  for (char32_t cp : utf8::ToCodePoints(text)) {
    if (IsSentenceSeparator(cp)) {
      out->push_back({name, "target contains a sentence separator"});
      return;
    }
  }
}

}  // namespace

std::vector<Violation> ValidatePair(const WicPair& pair) {
  std::vector<Violation> out;
  if (pair.id.empty()) out.push_back({"id", "empty id"});
  if (!ParsePos(pair.pos)) {
    out.push_back({"pos", fmt::format("'{}' is not one of NOUN, VERB, ADJ, ADV",
                                      pair.pos)});
  }
  CheckSpan(pair.sentence1, pair.span1, "span1", &out);
  CheckSpan(pair.sentence2, pair.span2, "span2", &out);
  return out;
}

long CorpusStats::RoundedAverage() const {
  return static_cast<long>(std::floor(avg_tokens + 0.5));
}

std::vector<std::string_view> WhitespaceTokens(std::string_view text) {
  std::vector<std::string_view> tokens;
  std::size_t i = 0, len = 0, begin = std::string_view::npos;
  while (i < text.size()) {
    const char32_t cp = utf8::Decode(text, i, &len);
    if (utf8::IsSpace(cp)) {
      if (begin != std::string_view::npos) {
        tokens.push_back(text.substr(begin, i - begin));
        begin = std::string_view::npos;
      }
    } else if (begin == std::string_view::npos) {
      begin = i;
    }
    i += len;
  }
  if (begin != std::string_view::npos) tokens.push_back(text.substr(begin));
  return tokens;
}

CorpusStats ComputeStats(const std::vector<WicPair>& pairs) {
  if (pairs.empty()) throw DataError("corpus statistics need at least one pair");
  CorpusStats s;
  s.n_pairs = pairs.size();
  std::set<std::string> lemmas;
  std::size_t total = 0, n = 0;
  s.min_tokens = SIZE_MAX;
  for (const WicPair& p : pairs) {
    lemmas.insert(p.lemma);
    for (const std::string* sent : {&p.sentence1, &p.sentence2}) {
      const std::size_t c = WhitespaceTokens(*sent).size();
      s.min_tokens = std::min(s.min_tokens, c);
      s.max_tokens = std::max(s.max_tokens, c);
      total += c;
      ++n;
    }
  }
  s.n_target_words = lemmas.size();
  s.avg_tokens = static_cast<double>(total) / static_cast<double>(n);
  return s;
}

json StatsToJson(const CorpusStats& s) {
  return {{"n_pairs", s.n_pairs},
          {"n_target_words", s.n_target_words},
          {"min_tokens", s.min_tokens},
          {"avg_tokens", s.RoundedAverage()},
          {"avg_tokens_exact", s.avg_tokens},
          {"max_tokens", s.max_tokens}};
}

std::string StatsTable(const CorpusStats& s) {
  std::ostringstream out;
  auto row = [&out](std::string_view name, auto value) {
    out << fmt::format("{:<24} {:>8}\n", name, value);
  };
  row("No. of target words", s.n_target_words);
  row("No. of pairs", s.n_pairs);
  row("Min. tokens", s.min_tokens);
  row("Avg. tokens", s.RoundedAverage());
  row("Max. tokens", s.max_tokens);
  return out.str();
}

std::string_view SpanUnitsName(SpanUnits u) {
  switch (u) {
    case SpanUnits::kCharacters: return "characters";
    case SpanUnits::kBytes: return "bytes";
    case SpanUnits::kBoth: return "both";
    case SpanUnits::kNeither: return "neither";
  }
  return "";
}

namespace {

bool SubstringLooksRight(std::string_view s, std::size_t b, std::size_t e) {
  if (b >= e || e > s.size()) return false;
  if (!utf8::IsBoundary(s, b) || !utf8::IsBoundary(s, e)) return false;
  std::size_t len = 0;
  if (utf8::IsSpace(utf8::Decode(s, b, &len))) return false;
  std::size_t last = e - 1;
  while (last > b && !utf8::IsBoundary(s, last)) --last;
  return !utf8::IsSpace(utf8::Decode(s, last, &len));
}

bool ConsistentAsChars(std::string_view s, Span span) {
  const std::size_t len = utf8::Length(s);
  if (span.end > len || span.start >= span.end) return false;
  return SubstringLooksRight(s, utf8::ByteOffset(s, span.start),
                             utf8::ByteOffset(s, span.end));
}

bool ConsistentAsBytes(std::string_view s, Span span) {
  return SubstringLooksRight(s, span.start, span.end);
}

}  // namespace

SpanUnitReport DetectSpanUnits(const std::vector<WicPair>& pairs) {
  SpanUnitReport r;
  for (const WicPair& p : pairs) {
    for (auto [s, span] : {std::pair{&p.sentence1, p.span1},
                           std::pair{&p.sentence2, p.span2}}) {
      ++r.total;
      if (ConsistentAsChars(*s, span)) ++r.consistent_as_chars;
      if (ConsistentAsBytes(*s, span)) ++r.consistent_as_bytes;
    }
  }
  const bool chars = r.consistent_as_chars == r.total;
  const bool bytes = r.consistent_as_bytes == r.total;
  if (chars && bytes) {
    r.verdict = SpanUnits::kBoth;
  } else if (chars) {
    r.verdict = SpanUnits::kCharacters;
  } else if (bytes) {
    r.verdict = SpanUnits::kBytes;
  }
  return r;
}

}  // namespace wic
