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

#include "wic/wordnet.h"

#include <algorithm>
#include <cmath>
#include <fstream>
#include <set>
#include <sstream>
#include <unordered_map>

#include <fmt/format.h>

#include "wic/error.h"
#include "wic/util/utf8.h"

namespace wic {

using nlohmann::json;

JsonWordNet::JsonWordNet(const json& fixture) {
  if (!fixture.is_object()) {
    throw DataError("WordNet fixture must be an object keyed by lemma");
  }
  for (const auto& [lemma, by_pos] : fixture.items()) {
    if (!by_pos.is_object()) {
      throw DataError(fmt::format("WordNet fixture: entry '{}' must be an object", lemma));
    }
    for (const auto& [pos_name, synsets] : by_pos.items()) {
      const auto pos = ParsePos(pos_name);
      if (!pos) {
        throw DataError(fmt::format("WordNet fixture: '{}' has unknown POS '{}'",
                                    lemma, pos_name));
      }
      auto& out = entries_[{utf8::AsciiLower(lemma), *pos}];
      for (const json& s : synsets) {
        Synset syn;
        syn.id = s.at("synset").get<std::string>();
        for (const json& e : s.at("examples")) syn.examples.push_back(e.get<std::string>());
        out.push_back(std::move(syn));
      }
    }
  }
}

JsonWordNet JsonWordNet::FromFile(const std::filesystem::path& path) {
  return JsonWordNet(ReadJsonFile(path));
}

std::vector<Synset> JsonWordNet::Lookup(std::string_view lemma, Pos pos) const {
  auto it = entries_.find({utf8::AsciiLower(lemma), pos});
  return it == entries_.end() ? std::vector<Synset>{} : it->second;
}

namespace {

std::string_view WndbSuffix(Pos pos) {
  switch (pos) {
    case Pos::kNoun: return "noun";
    case Pos::kVerb: return "verb";
    case Pos::kAdj: return "adj";
    case Pos::kAdv: return "adv";
  }
  return "";
}

std::string ReadFile(const std::filesystem::path& path) {
  std::ifstream in(path, std::ios::binary);
  if (!in) throw DataError(fmt::format("cannot open '{}'", path.string()));
  std::ostringstream ss;
  ss << in.rdbuf();
  return ss.str();
}

std::vector<std::string> SplitFields(std::string_view line) {
  std::vector<std::string> out;
  std::istringstream ss{std::string(line)};
  std::string f;
  while (ss >> f) out.push_back(f);
  return out;
}

}  // namespace

WndbWordNet::WndbWordNet(const std::filesystem::path& dict_dir) {
  for (Pos pos : {Pos::kNoun, Pos::kVerb, Pos::kAdj, Pos::kAdv}) {
    const auto index_path = dict_dir / fmt::format("index.{}", WndbSuffix(pos));
    const auto data_path = dict_dir / fmt::format("data.{}", WndbSuffix(pos));
    if (!std::filesystem::exists(index_path) || !std::filesystem::exists(data_path)) {
      continue;
    }
    PosFiles& pf = files_[pos];
    pf.data = ReadFile(data_path);
    std::istringstream index(ReadFile(index_path));
    std::string line;
    while (std::getline(index, line)) {
      if (line.empty() || line[0] == ' ') continue;  // license header
      // lemma pos synset_cnt p_cnt [ptr_symbol...] sense_cnt tagsense_cnt
      // synset_offset...
      const auto f = SplitFields(line);
      if (f.size() < 6) continue;
      const std::size_t synset_cnt = std::stoul(f[2]);
      if (f.size() < synset_cnt) continue;
      std::vector<std::size_t> offsets;
      for (std::size_t i = f.size() - synset_cnt; i < f.size(); ++i) {
        offsets.push_back(std::stoul(f[i]));
      }
      pf.index[f[0]] = std::move(offsets);
    }
  }
  if (files_.empty()) {
    throw DataError(fmt::format("no WordNet index/data files in '{}'", dict_dir.string()));
  }
}

std::vector<Synset> WndbWordNet::Lookup(std::string_view lemma, Pos pos) const {
  auto fit = files_.find(pos);
  if (fit == files_.end()) return {};
  std::string key = utf8::AsciiLower(lemma);
  std::replace(key.begin(), key.end(), ' ', '_');
  auto it = fit->second.index.find(key);
  if (it == fit->second.index.end()) return {};
  const std::string& data = fit->second.data;
  std::vector<Synset> out;
  for (std::size_t offset : it->second) {
    if (offset >= data.size()) {
      throw DataError(fmt::format("WordNet offset {} past end of data file", offset));
    }
    const std::size_t eol = data.find('\n', offset);
    const std::string_view line(data.data() + offset,
                                (eol == std::string::npos ? data.size() : eol) - offset);
    const std::size_t bar = line.find('|');
    Synset syn;
    syn.id = fmt::format("{:08d}-{}", offset, WndbSuffix(pos).substr(0, 1));
    if (bar != std::string_view::npos) syn.examples = GlossExamples(line.substr(bar + 1));
    out.push_back(std::move(syn));
  }
  return out;
}

std::unique_ptr<WordNetSource> OpenWordNet(const std::filesystem::path& path) {
  if (std::filesystem::is_directory(path)) return std::make_unique<WndbWordNet>(path);
  return std::make_unique<JsonWordNet>(JsonWordNet::FromFile(path));
}

std::vector<std::string> GlossExamples(std::string_view gloss) {
  std::vector<std::string> out;
  std::size_t pos = 0;
  while ((pos = gloss.find('"', pos)) != std::string_view::npos) {
    const std::size_t end = gloss.find('"', pos + 1);
    if (end == std::string_view::npos) break;
    std::string_view ex = gloss.substr(pos + 1, end - pos - 1);
    while (!ex.empty() && ex.front() == ' ') ex.remove_prefix(1);
    while (!ex.empty() && ex.back() == ' ') ex.remove_suffix(1);
    if (!ex.empty()) out.emplace_back(ex);
    pos = end + 1;
  }
  return out;
}

namespace {

bool IsLetter(char32_t c) {
  if (c < 0x80) {
    return (c >= 'a' && c <= 'z') || (c >= 'A' && c <= 'Z') || (c >= '0' && c <= '9');
  }
  return !utf8::IsSpace(c) && c >= 0xC0;
}

char32_t Lower(char32_t c) { return (c >= 'A' && c <= 'Z') ? c - 'A' + 'a' : c; }

}  // namespace

std::optional<Span> LocateLemma(std::string_view example, std::string_view lemma) {
  const auto text = utf8::ToCodePoints(example);
  auto needle = utf8::ToCodePoints(lemma);
  if (needle.empty()) return std::nullopt;
  for (char32_t& c : needle) c = c == '_' ? U' ' : Lower(c);
  for (std::size_t i = 0; i + needle.size() <= text.size(); ++i) {
    if (i > 0 && IsLetter(text[i - 1])) continue;
    bool match = true;
    for (std::size_t k = 0; k < needle.size() && match; ++k) {
      match = Lower(text[i + k]) == needle[k];
    }
    if (!match) continue;
    std::size_t end = i + needle.size();
    while (end < text.size() && IsLetter(text[end])) ++end;
    return Span{i, end};
  }
  return std::nullopt;
}

json AugmentReportToJson(const AugmentReport& r) {
  return {{"requested", r.requested},
          {"emitted", r.emitted},
          {"emitted_true", r.emitted_true},
          {"emitted_false", r.emitted_false},
          {"skipped_no_lemma", r.skipped_no_lemma},
          {"skipped_no_span", r.skipped_no_span}};
}

namespace {

struct Example {
  std::string text;
  Span span;
};

struct Candidate {
  std::size_t lemma_index;
  const Example* a;
  const Example* b;
  Label label;
  std::size_t order;
};

}  // namespace

std::vector<WicPair> AugmentWordNet(const std::vector<LemmaPos>& lemmas,
                                    const WordNetSource& wordnet,
                                    std::size_t base_size, double ratio, Rng& rng,
                                    AugmentReport* report) {
  if (ratio < 0.0) throw ConfigError("WordNet ratio must be non-negative");
  AugmentReport rep;
  rep.requested = static_cast<std::size_t>(
      std::ceil(ratio * static_cast<double>(base_size) - 1e-9));

  // Located examples per lemma, per synset. Kept alive for the candidates.
  std::vector<std::vector<std::vector<Example>>> located(lemmas.size());
  std::vector<Candidate> trues, falses;
  std::size_t order = 0;
  for (std::size_t li = 0; li < lemmas.size(); ++li) {
    const auto synsets = wordnet.Lookup(lemmas[li].lemma, lemmas[li].pos);
    if (synsets.empty()) {
      ++rep.skipped_no_lemma;
      continue;
    }
    auto& groups = located[li];
    for (const Synset& s : synsets) {
      std::vector<Example> found;
      for (const std::string& ex : s.examples) {
        if (auto span = LocateLemma(ex, lemmas[li].lemma)) {
          found.push_back({ex, *span});
        } else {
          ++rep.skipped_no_span;
        }
      }
      groups.push_back(std::move(found));
    }
    for (std::size_t s = 0; s < groups.size(); ++s) {
      for (std::size_t i = 0; i < groups[s].size(); ++i) {
        for (std::size_t j = i + 1; j < groups[s].size(); ++j) {
          trues.push_back({li, &groups[s][i], &groups[s][j], Label::kTrue, order++});
        }
      }
    }
    for (std::size_t s = 0; s < groups.size(); ++s) {
      for (std::size_t t = s + 1; t < groups.size(); ++t) {
        for (const Example& a : groups[s]) {
          for (const Example& b : groups[t]) {
            falses.push_back({li, &a, &b, Label::kFalse, order++});
          }
        }
      }
    }
  }

  const std::size_t cap = rep.requested;
  std::size_t n_true = std::min(trues.size(), (cap + 1) / 2);
  const std::size_t n_false = std::min(falses.size(), cap - n_true);
  n_true = std::min(trues.size(), cap - n_false);

  rng.Shuffle(&trues);
  rng.Shuffle(&falses);
  std::vector<Candidate> chosen(trues.begin(), trues.begin() + n_true);
  chosen.insert(chosen.end(), falses.begin(), falses.begin() + n_false);
  std::sort(chosen.begin(), chosen.end(),
            [](const Candidate& x, const Candidate& y) { return x.order < y.order; });

  std::map<std::string, std::size_t> counters;
  std::vector<WicPair> out;
  out.reserve(chosen.size());
  for (const Candidate& c : chosen) {
    const LemmaPos& lp = lemmas[c.lemma_index];
    WicPair p;
    p.id = fmt::format("{}.wn.{}", lp.lemma, counters[lp.lemma]++);
    p.lemma = lp.lemma;
    p.pos = std::string(PosName(lp.pos));
    p.sentence1 = c.a->text;
    p.sentence2 = c.b->text;
    p.span1 = c.a->span;
    p.span2 = c.b->span;
    p.label = c.label;
    out.push_back(std::move(p));
  }
  rep.emitted = out.size();
  rep.emitted_true = n_true;
  rep.emitted_false = n_false;
  if (report) *report = rep;
  return out;
}

std::vector<LemmaPos> CorpusLemmas(const std::vector<WicPair>& pairs) {
  std::set<LemmaPos> seen;
  for (const WicPair& p : pairs) {
    if (auto pos = ParsePos(p.pos)) seen.insert({p.lemma, *pos});
  }
  return {seen.begin(), seen.end()};
}

}  // namespace wic
