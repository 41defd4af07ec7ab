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

#include "wic/preprocess.h"

#include <algorithm>
#include <array>
#include <utility>

#include <fmt/format.h>

#include "wic/util/utf8.h"

namespace wic {

std::string_view ProvenanceName(Provenance p) {
  switch (p) {
    case Provenance::kOriginal: return "original";
    case Provenance::kSwapped: return "swapped";
    case Provenance::kWordNet: return "wordnet";
    case Provenance::kPseudo: return "pseudo";
  }
  return "";
}

namespace {

struct Contraction {
  std::u32string_view from;  // lowercase, ASCII apostrophe
  std::u32string_view to;
};

constexpr std::array kContractions = {
    Contraction{U"it's", U"it is"},       Contraction{U"that's", U"that is"},
    Contraction{U"what's", U"what is"},   Contraction{U"there's", U"there is"},
    Contraction{U"here's", U"here is"},   Contraction{U"he's", U"he is"},
    Contraction{U"she's", U"she is"},     Contraction{U"let's", U"let us"},
    Contraction{U"i'm", U"I am"},         Contraction{U"you're", U"you are"},
    Contraction{U"we're", U"we are"},     Contraction{U"they're", U"they are"},
    Contraction{U"i've", U"I have"},      Contraction{U"you've", U"you have"},
    Contraction{U"we've", U"we have"},    Contraction{U"they've", U"they have"},
    Contraction{U"i'll", U"I will"},      Contraction{U"you'll", U"you will"},
    Contraction{U"he'll", U"he will"},    Contraction{U"she'll", U"she will"},
    Contraction{U"it'll", U"it will"},    Contraction{U"we'll", U"we will"},
    Contraction{U"they'll", U"they will"}, Contraction{U"i'd", U"I would"},
    Contraction{U"you'd", U"you would"},  Contraction{U"we'd", U"we would"},
    Contraction{U"they'd", U"they would"}, Contraction{U"don't", U"do not"},
    Contraction{U"doesn't", U"does not"}, Contraction{U"didn't", U"did not"},
    Contraction{U"isn't", U"is not"},     Contraction{U"aren't", U"are not"},
    Contraction{U"wasn't", U"was not"},   Contraction{U"weren't", U"were not"},
    Contraction{U"can't", U"cannot"},     Contraction{U"won't", U"will not"},
    Contraction{U"shouldn't", U"should not"},
    Contraction{U"wouldn't", U"would not"},
    Contraction{U"couldn't", U"could not"},
    Contraction{U"haven't", U"have not"}, Contraction{U"hasn't", U"has not"},
    Contraction{U"hadn't", U"had not"},   Contraction{U"mustn't", U"must not"},
};

bool IsWordChar(char32_t c) {
  if (c < 0x80) {
    return (c >= 'a' && c <= 'z') || (c >= 'A' && c <= 'Z') ||
           (c >= '0' && c <= '9');
  }
  return c >= 0xC0 && !utf8::IsSpace(c) && c != 0x2019 && c != 0xAB &&
         c != 0xBB && c != 0x2039 && c != 0x203A;
}

char32_t FoldChar(char32_t c) {
  if (c == 0x2019) return '\'';
  if (c >= 'A' && c <= 'Z') return c - 'A' + 'a';
  return c;
}

bool IsRemovedChar(char32_t c) {
  return c == 0xAB || c == 0xBB || c == 0x2039 || c == 0x203A || c == 0x2122 ||
         (c < 0x20 && c != '\t' && c != '\n' && c != '\r') || c == 0x7F ||
         (c >= 0x80 && c <= 0x9F);
}

// Length of the contraction matched at `i` and its replacement, if any.
std::optional<std::pair<std::size_t, std::u32string>> MatchContraction(
    const std::u32string& s, std::size_t i) {
  if (i > 0 && IsWordChar(s[i - 1])) return std::nullopt;
  for (const Contraction& c : kContractions) {
    const std::size_t n = c.from.size();
    if (i + n > s.size()) continue;
    bool ok = true;
    for (std::size_t k = 0; k < n && ok; ++k) ok = FoldChar(s[i + k]) == c.from[k];
    if (!ok) continue;
    if (i + n < s.size() && IsWordChar(s[i + n])) continue;
    std::u32string to(c.to);
    if (s[i] >= 'A' && s[i] <= 'Z' && to[0] >= 'a' && to[0] <= 'z') {
      to[0] = to[0] - 'a' + 'A';
    }
    return std::pair{n, std::move(to)};
  }
  return std::nullopt;
}

std::string Encode(const std::u32string& s) {
  std::string out;
  out.reserve(s.size());
  for (char32_t c : s) utf8::Append(&out, c);
  return out;
}

void CheckSpanInRange(std::string_view sentence, Span span) {
  if (span.start >= span.end || span.end > utf8::Length(sentence)) {
    throw DataError(fmt::format("invalid span [{}, {}) for sentence of length {}",
                                span.start, span.end, utf8::Length(sentence)));
  }
}

}  // namespace

SpannedText CleanText(std::string_view sentence, Span span) {
  CheckSpanInRange(sentence, span);
  const auto cps = utf8::ToCodePoints(sentence);
  const std::u32string in(cps.begin(), cps.end());
  std::u32string out;
  out.reserve(in.size());
  std::size_t new_start = 0, new_end = 0;
  auto overlaps = [&](std::size_t b, std::size_t e) {
    return b < span.end && span.start < e;
  };
  std::size_t i = 0;
  while (i < in.size()) {
    if (i == span.start) new_start = out.size();
    if (i == span.end) new_end = out.size();
    if (auto m = MatchContraction(in, i)) {
      if (overlaps(i, i + m->first)) {
        throw CleaningConflict(fmt::format(
            "contraction at {} overlaps target span [{}, {})", i, span.start,
            span.end));
      }
      out += m->second;
      i += m->first;
      continue;
    }
    const char32_t c = in[i];
    if (IsRemovedChar(c) || c == '\t' || c == '\n' || c == '\r') {
      if (overlaps(i, i + 1)) {
        throw CleaningConflict(fmt::format(
            "character U+{:04X} at {} inside target span", static_cast<unsigned>(c), i));
      }
      if (!IsRemovedChar(c)) out.push_back(' ');
      ++i;
      continue;
    }
    out.push_back(c);
    ++i;
  }
  if (span.end == in.size()) new_end = out.size();
  return {Encode(out), {new_start, new_end}};
}

SpannedText TrimContext(std::string_view sentence, Span span,
                        std::size_t window) {
  CheckSpanInRange(sentence, span);
  const std::size_t sb = utf8::ByteOffset(sentence, span.start);
  const std::size_t se = utf8::ByteOffset(sentence, span.end);
  const auto tokens = WhitespaceTokens(sentence);
  auto begin_of = [&](std::size_t t) {
    return static_cast<std::size_t>(tokens[t].data() - sentence.data());
  };
  auto end_of = [&](std::size_t t) { return begin_of(t) + tokens[t].size(); };

  // Token holding the span start (or the first token after it when the span
  // starts on whitespace) and the token holding the last target byte.
  std::size_t first = 0;
  while (first + 1 < tokens.size() && end_of(first) <= sb) ++first;
  std::size_t last = first;
  while (last + 1 < tokens.size() && begin_of(last + 1) < se) ++last;

  const std::size_t keep_from = first > window ? first - window : 0;
  const std::size_t keep_to = std::min(tokens.size() - 1, last + window);
  if (keep_from == 0 && keep_to + 1 == tokens.size()) {
    return {std::string(sentence), span};
  }
  const std::size_t cut_b = keep_from == 0 ? 0 : begin_of(keep_from);
  const std::size_t cut_e =
      keep_to + 1 == tokens.size() ? sentence.size() : end_of(keep_to);
  const std::size_t shift = utf8::CharIndex(sentence, cut_b);
  return {std::string(sentence.substr(cut_b, cut_e - cut_b)),
          {span.start - shift, span.end - shift}};
}

std::string TagTarget(std::string_view sentence, Span span) {
  CheckSpanInRange(sentence, span);
  const std::size_t b = utf8::ByteOffset(sentence, span.start);
  const std::size_t e = utf8::ByteOffset(sentence, span.end);
  std::string out;
  out.reserve(sentence.size() + 10);
  out.append(sentence.substr(0, b));
  out.append(kTargetOpen).push_back(' ');
  out.append(sentence.substr(b, e - b));
  out.push_back(' ');
  out.append(kTargetClose);
  out.append(sentence.substr(e));
  return out;
}

namespace {

std::size_t CountOccurrences(std::string_view s, std::string_view needle) {
  std::size_t n = 0;
  for (std::size_t pos = s.find(needle); pos != std::string_view::npos;
       pos = s.find(needle, pos + needle.size())) {
    ++n;
  }
  return n;
}

}  // namespace

std::vector<std::string> ValidateTagged(std::string_view tagged) {
  std::vector<std::string> out;
  const std::size_t opens = CountOccurrences(tagged, kTargetOpen);
  const std::size_t closes = CountOccurrences(tagged, kTargetClose);
  if (opens != 1) out.push_back(fmt::format("expected one <t>, found {}", opens));
  if (closes != 1) out.push_back(fmt::format("expected one </t>, found {}", closes));
  if (opens == 1 && closes == 1) {
    const std::size_t o = tagged.find(kTargetOpen);
    const std::size_t c = tagged.find(kTargetClose);
    if (c < o) {
      out.push_back("</t> precedes <t>");
    } else {
      const auto inner = tagged.substr(o + kTargetOpen.size(),
                                       c - o - kTargetOpen.size());
      if (WhitespaceTokens(inner).empty()) out.push_back("empty target between tags");
    }
  }
  const std::size_t n = WhitespaceTokens(tagged).size();
  if (n > kMaxTaggedTokens) {
    out.push_back(fmt::format("{} tokens exceed the cap of {}", n, kMaxTaggedTokens));
  }
  return out;
}

std::vector<Violation> ValidateTaggedPair(const TaggedPair& pair) {
  std::vector<Violation> out;
  for (auto& r : ValidateTagged(pair.tagged1)) out.push_back({"tagged1", r});
  for (auto& r : ValidateTagged(pair.tagged2)) out.push_back({"tagged2", r});
  return out;
}

namespace {

SpannedText PrepareSentence(const std::string& sentence, Span span,
                            const PrepareOptions& options, PrepareStats* stats) {
  SpannedText cur{sentence, span};
  if (options.clean) {
    try {
      cur = CleanText(sentence, span);
    } catch (const CleaningConflict&) {
      if (stats) ++stats->cleaning_skipped;
    }
  }
  return TrimContext(cur.text, cur.span, options.window);
}

}  // namespace

TaggedPair PreparePair(const WicPair& pair, Provenance provenance,
                       const PrepareOptions& options, PrepareStats* stats) {
  try {
    const SpannedText s1 = PrepareSentence(pair.sentence1, pair.span1, options, stats);
    const SpannedText s2 = PrepareSentence(pair.sentence2, pair.span2, options, stats);
    return {pair.id, TagTarget(s1.text, s1.span), TagTarget(s2.text, s2.span),
            pair.label, provenance};
  } catch (const DataError& e) {
    throw DataError(fmt::format("pair '{}': {}", pair.id, e.what()));
  }
}

std::vector<TaggedPair> PrepareCorpus(const std::vector<WicPair>& pairs,
                                      Provenance provenance,
                                      const PrepareOptions& options,
                                      PrepareStats* stats) {
  std::vector<TaggedPair> out;
  out.reserve(pairs.size());
  for (const WicPair& p : pairs) out.push_back(PreparePair(p, provenance, options, stats));
  return out;
}

TaggedPair SwapPair(const TaggedPair& pair) {
  return {pair.id + std::string(kSwapSuffix), pair.tagged2, pair.tagged1,
          pair.label, Provenance::kSwapped};
}

std::vector<TaggedPair> SwapAugment(const std::vector<TaggedPair>& pairs) {
  std::vector<TaggedPair> out;
  out.reserve(2 * pairs.size());
  for (const TaggedPair& p : pairs) {
    out.push_back(p);
    if (p.label) out.push_back(SwapPair(p));
  }
  return out;
}

std::string SourceId(std::string_view id) {
  while (id.size() >= kSwapSuffix.size() && id.ends_with(kSwapSuffix)) {
    id.remove_suffix(kSwapSuffix.size());
  }
  return std::string(id);
}

}  // namespace wic
