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

// Text preparation: cleaning, trimming around the target, target tagging
// and context-swap augmentation. All spans are code point spans and every
// step returns a span that selects the same target string it was given.

#ifndef WIC_PREPROCESS_H_
#define WIC_PREPROCESS_H_

#include <cstddef>
#include <optional>
#include <string>
#include <string_view>
#include <vector>

#include "wic/corpus.h"
#include "wic/error.h"

namespace wic {

inline constexpr std::string_view kTargetOpen = "<t>";
inline constexpr std::string_view kTargetClose = "</t>";

// Trimming keeps at most this many words on each side of the target.
inline constexpr std::size_t kDefaultWindow = 40;

// Upper bound on whitespace tokens of a tagged sentence: 40 + 1 + 40 words
// plus the two tag tokens.
inline constexpr std::size_t kMaxTaggedTokens = 2 * kDefaultWindow + 1 + 2;

enum class Provenance { kOriginal, kSwapped, kWordNet, kPseudo };

std::string_view ProvenanceName(Provenance p);

struct TaggedPair {
  std::string id;
  std::string tagged1;
  std::string tagged2;
  std::optional<Label> label;
  Provenance provenance = Provenance::kOriginal;

  friend bool operator==(const TaggedPair&, const TaggedPair&) = default;
};

// Raised when a cleaning rule would touch the target span. Callers keep the
// sentence uncleaned in that case.
class CleaningConflict : public Error {
 public:
  using Error::Error;
};

struct SpannedText {
  std::string text;
  Span span;

  friend bool operator==(const SpannedText&, const SpannedText&) = default;
};

// Cleaning table, version 1:
//   * English contractions expanded ("it's" -> "it is", "don't" -> "do not",
//     "can't" -> "cannot", ...). Both ' and U+2019 count as apostrophes.
//     A leading capital is preserved. Possessive 's is left intact.
//   * « » ‹ › ™ and control characters removed; tab, CR and LF become a
//     space.
inline constexpr int kCleaningTableVersion = 1;

SpannedText CleanText(std::string_view sentence, Span span);

// Keeps at most `window` whitespace tokens before the token holding the
// span start and after the token holding the span end. Text between the
// kept tokens is preserved byte for byte.
SpannedText TrimContext(std::string_view sentence, Span span,
                        std::size_t window = kDefaultWindow);

// Inserts "<t> " before the span and " </t>" after it.
std::string TagTarget(std::string_view sentence, Span span);

// Violations of the tagged-sentence invariants: exactly one <t> followed by
// exactly one </t> with non-blank content between, and at most
// kMaxTaggedTokens whitespace tokens.
std::vector<std::string> ValidateTagged(std::string_view tagged);
std::vector<Violation> ValidateTaggedPair(const TaggedPair& pair);

struct PrepareOptions {
  bool clean = true;
  std::size_t window = kDefaultWindow;
};

struct PrepareStats {
  std::size_t cleaning_skipped = 0;  // sentences left uncleaned on conflict
};

// clean -> trim -> tag, for both sentences.
TaggedPair PreparePair(const WicPair& pair, Provenance provenance,
                       const PrepareOptions& options = {},
                       PrepareStats* stats = nullptr);

std::vector<TaggedPair> PrepareCorpus(const std::vector<WicPair>& pairs,
                                      Provenance provenance,
                                      const PrepareOptions& options = {},
                                      PrepareStats* stats = nullptr);

inline constexpr std::string_view kSwapSuffix = ".swap";

// Exchanges the contexts. The new id is the original id plus ".swap".
TaggedPair SwapPair(const TaggedPair& pair);

// Each labeled pair followed by its swap; unlabeled pairs pass through once.
std::vector<TaggedPair> SwapAugment(const std::vector<TaggedPair>& pairs);

// Id of the pair a swapped pair was derived from (strips ".swap" suffixes).
std::string SourceId(std::string_view id);

}  // namespace wic

#endif  // WIC_PREPROCESS_H_
