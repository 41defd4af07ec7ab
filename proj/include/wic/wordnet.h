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

// WordNet example-sentence mining.
//
// Two backends implement WordNetSource:
//
//  * JsonWordNet reads a fixture of the shape
//      {"bank": {"NOUN": [{"synset": "bank.n.01",
//                          "examples": ["he sat on the bank", ...]}, ...]}}
//    Lemmas are matched lowercase; POS keys are NOUN, VERB, ADJ, ADV.
//
//  * WndbWordNet reads the standard database directory (index.noun,
//    data.noun, ... as shipped in WordNet 3.x "dict/"). Examples are the
//    double-quoted fragments of each synset gloss.

#ifndef WIC_WORDNET_H_
#define WIC_WORDNET_H_

#include <cstddef>
#include <filesystem>
#include <map>
#include <memory>
#include <optional>
#include <string>
#include <string_view>
#include <vector>

#include "json.hpp"
#include "wic/corpus.h"
#include "wic/util/random.h"

namespace wic {

struct Synset {
  std::string id;
  std::vector<std::string> examples;
};

class WordNetSource {
 public:
  virtual ~WordNetSource() = default;
  // Empty when the lemma is unknown for that part of speech.
  virtual std::vector<Synset> Lookup(std::string_view lemma, Pos pos) const = 0;
};

class JsonWordNet : public WordNetSource {
 public:
  explicit JsonWordNet(const nlohmann::json& fixture);
  static JsonWordNet FromFile(const std::filesystem::path& path);

  std::vector<Synset> Lookup(std::string_view lemma, Pos pos) const override;

 private:
  std::map<std::pair<std::string, Pos>, std::vector<Synset>> entries_;
};

class WndbWordNet : public WordNetSource {
 public:
  // `dict_dir` holds index.<pos> and data.<pos> files.
  explicit WndbWordNet(const std::filesystem::path& dict_dir);

  std::vector<Synset> Lookup(std::string_view lemma, Pos pos) const override;

 private:
  struct PosFiles {
    std::map<std::string, std::vector<std::size_t>, std::less<>> index;
    std::string data;
  };
  std::map<Pos, PosFiles> files_;
};

std::unique_ptr<WordNetSource> OpenWordNet(const std::filesystem::path& path);

// Extracts the quoted example fragments of a WordNet gloss.
std::vector<std::string> GlossExamples(std::string_view gloss);

// Finds the lemma in an example: case-insensitive, starting at a word
// boundary and extended to the end of the word so that inflections
// ("banks") are covered. Underscores in the lemma match spaces.
std::optional<Span> LocateLemma(std::string_view example, std::string_view lemma);

struct LemmaPos {
  std::string lemma;
  Pos pos;

  friend auto operator<=>(const LemmaPos&, const LemmaPos&) = default;
};

struct AugmentReport {
  std::size_t requested = 0;  // the cap, ceil(ratio * base_size)
  std::size_t emitted = 0;
  std::size_t emitted_true = 0;
  std::size_t emitted_false = 0;
  std::size_t skipped_no_lemma = 0;
  std::size_t skipped_no_span = 0;
};

nlohmann::json AugmentReportToJson(const AugmentReport& report);

inline constexpr double kDefaultWordNetRatio = 0.30;

// Builds labeled pairs from WordNet examples: two examples of the same
// synset give T, examples of two different synsets of the lemma give F.
// At most ceil(ratio * base_size) pairs are emitted, T and F kept within
// one of each other when supply allows. Ids are lemma + ".wn." + counter.
// Deterministic for a given generator state.
std::vector<WicPair> AugmentWordNet(const std::vector<LemmaPos>& lemmas,
                                    const WordNetSource& wordnet,
                                    std::size_t base_size, double ratio,
                                    Rng& rng, AugmentReport* report = nullptr);

// Distinct lemma+POS pairs of a corpus, sorted; invalid POS entries skipped.
std::vector<LemmaPos> CorpusLemmas(const std::vector<WicPair>& pairs);

}  // namespace wic

#endif  // WIC_WORDNET_H_
