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

#include "wic/tokenizer.h"

#include <algorithm>
#include <limits>
#include <set>

#include <fmt/format.h>

#include "wic/corpus.h"
#include "wic/error.h"
#include "wic/preprocess.h"
#include "wic/util/utf8.h"

namespace wic {

using nlohmann::json;

namespace {

const std::vector<std::string>& ReservedTokens() {
  static const std::vector<std::string> kReserved = {"<s>", "<pad>", "</s>",
                                                     "<unk>", "<sep>"};
  return kReserved;
}

constexpr SpecialIds kWordSpecials{0, 1, 2, 3, 4};

bool IsAsciiPunct(char c) {
  return (c >= '!' && c <= '/') || (c >= ':' && c <= '@') ||
         (c >= '[' && c <= '`') || (c >= '{' && c <= '~');
}

bool IsSpaceAt(std::string_view s, std::size_t i, std::size_t* len) {
  return utf8::IsSpace(utf8::Decode(s, i, len));
}

}  // namespace

std::vector<TokenPiece> Tokenizer::Encode(std::string_view text) const {
  std::vector<TokenPiece> out;
  std::size_t pos = 0;
  bool after_special = false;
  while (pos <= text.size()) {
    // Earliest (then longest) added token at or after pos.
    std::size_t best = std::string_view::npos, best_len = 0;
    int best_id = -1;
    for (std::size_t k = 0; k < added_.size(); ++k) {
      const std::size_t f = text.find(added_[k], pos);
      if (f == std::string_view::npos) continue;
      if (f < best || (f == best && added_[k].size() > best_len)) {
        best = f;
        best_len = added_[k].size();
        best_id = static_cast<int>(BaseVocabSize() + k);
      }
    }
    std::size_t seg_b = pos;
    std::size_t seg_e = best == std::string_view::npos ? text.size() : best;
    std::size_t len = 0;
    if (after_special) {
      while (seg_b < seg_e && IsSpaceAt(text, seg_b, &len)) seg_b += len;
    }
    if (best != std::string_view::npos) {
      while (seg_e > seg_b) {
        std::size_t p = seg_e - 1;
        while (p > seg_b && !utf8::IsBoundary(text, p)) --p;
        if (!IsSpaceAt(text, p, &len)) break;
        seg_e = p;
      }
    }
    if (seg_e > seg_b) EncodePlain(text.substr(seg_b, seg_e - seg_b), seg_b, &out);
    if (best == std::string_view::npos) break;
    out.push_back({best_id, best, best + best_len});
    pos = best + best_len;
    after_special = true;
  }
  return out;
}

std::optional<int> Tokenizer::AddedTokenId(std::string_view token) const {
  for (std::size_t k = 0; k < added_.size(); ++k) {
    if (added_[k] == token) return static_cast<int>(BaseVocabSize() + k);
  }
  return std::nullopt;
}

std::optional<int> Tokenizer::target_open_id() const { return AddedTokenId(kTargetOpen); }
std::optional<int> Tokenizer::target_close_id() const { return AddedTokenId(kTargetClose); }

int Tokenizer::AddToken(std::string_view token) {
  if (token.empty()) throw ConfigError("cannot add an empty token");
  if (auto id = AddedTokenId(token)) return *id;
  added_.emplace_back(token);
  return static_cast<int>(vocab_size() - 1);
}

std::string Tokenizer::Piece(int id) const {
  if (id < 0 || static_cast<std::size_t>(id) >= vocab_size()) {
    throw ShapeError(fmt::format("token id {} outside vocabulary of {}", id, vocab_size()));
  }
  if (static_cast<std::size_t>(id) < BaseVocabSize()) return BasePiece(id);
  return added_[id - BaseVocabSize()];
}

json Tokenizer::AddedToJson() const { return added_; }

void Tokenizer::AddedFromJson(const json& j) {
  added_.clear();
  for (const json& t : j) added_.push_back(t.get<std::string>());
}

RegisterResult RegisterSpecialTokens(Tokenizer& tokenizer) {
  RegisterResult r;
  const bool had_open = tokenizer.target_open_id().has_value();
  const bool had_close = tokenizer.target_close_id().has_value();
  r.already_present = had_open && had_close;
  if (!had_open) {
    tokenizer.AddToken(kTargetOpen);
    ++r.added;
  }
  if (!had_close) {
    tokenizer.AddToken(kTargetClose);
    ++r.added;
  }
  return r;
}

std::vector<std::pair<std::size_t, std::size_t>> PreTokenize(std::string_view text) {
  std::vector<std::pair<std::size_t, std::size_t>> out;
  std::size_t i = 0, len = 0, begin = std::string_view::npos;
  auto flush = [&](std::size_t end) {
    if (begin != std::string_view::npos) out.emplace_back(begin, end);
    begin = std::string_view::npos;
  };
  while (i < text.size()) {
    if (IsSpaceAt(text, i, &len)) {
      flush(i);
    } else if (len == 1 && IsAsciiPunct(text[i])) {
      flush(i);
      out.emplace_back(i, i + 1);
    } else if (begin == std::string_view::npos) {
      begin = i;
    }
    i += len;
  }
  flush(text.size());
  return out;
}

// ---------------------------------------------------------------- Word

WordTokenizer::WordTokenizer(const std::vector<std::string>& words) {
  special_ = kWordSpecials;
  for (const auto& r : ReservedTokens()) {
    index_.emplace(r, static_cast<int>(vocab_.size()));
    vocab_.push_back(r);
  }
  for (const auto& w : words) {
    if (w.empty() || index_.count(w)) continue;
    index_.emplace(w, static_cast<int>(vocab_.size()));
    vocab_.push_back(w);
  }
}

WordTokenizer WordTokenizer::Build(const std::vector<std::string>& texts) {
  std::set<std::string> words;
  for (const std::string& t : texts) {
    for (auto [b, e] : PreTokenize(t)) words.insert(t.substr(b, e - b));
  }
  // Tag strings pre-tokenize into punctuation and "t"; drop nothing else.
  return WordTokenizer(std::vector<std::string>(words.begin(), words.end()));
}

WordTokenizer WordTokenizer::FromJson(const json& j) {
  WordTokenizer t(j.at("vocab").get<std::vector<std::string>>());
  t.AddedFromJson(j.at("added"));
  return t;
}

json WordTokenizer::ToJson() const {
  std::vector<std::string> words(vocab_.begin() + ReservedTokens().size(), vocab_.end());
  return {{"kind", kind()}, {"vocab", words}, {"added", AddedToJson()}};
}

std::optional<int> WordTokenizer::BaseLookup(std::string_view token) const {
  auto it = index_.find(std::string(token));
  if (it == index_.end()) return std::nullopt;
  return it->second;
}

void WordTokenizer::EncodePlain(std::string_view text, std::size_t base,
                                std::vector<TokenPiece>* out) const {
  for (auto [b, e] : PreTokenize(text)) {
    const auto id = BaseLookup(text.substr(b, e - b));
    out->push_back({id.value_or(special_.unk), base + b, base + e});
  }
}

std::string WordTokenizer::JoinPieces(std::span<const int> ids) const {
  std::string out;
  for (int id : ids) {
    if (!out.empty()) out.push_back(' ');
    out += Piece(id);
  }
  return out;
}

// ----------------------------------------------------------- WordPiece

WordPieceTokenizer::WordPieceTokenizer(const std::vector<std::string>& pieces) {
  special_ = kWordSpecials;
  for (const auto& r : ReservedTokens()) {
    index_.emplace(r, static_cast<int>(vocab_.size()));
    vocab_.push_back(r);
  }
  for (const auto& p : pieces) {
    if (p.empty() || index_.count(p)) continue;
    index_.emplace(p, static_cast<int>(vocab_.size()));
    vocab_.push_back(p);
  }
}

WordPieceTokenizer WordPieceTokenizer::FromJson(const json& j) {
  WordPieceTokenizer t(j.at("vocab").get<std::vector<std::string>>());
  t.AddedFromJson(j.at("added"));
  return t;
}

json WordPieceTokenizer::ToJson() const {
  std::vector<std::string> pieces(vocab_.begin() + ReservedTokens().size(), vocab_.end());
  return {{"kind", kind()}, {"vocab", pieces}, {"added", AddedToJson()}};
}

std::optional<int> WordPieceTokenizer::BaseLookup(std::string_view token) const {
  auto it = index_.find(std::string(token));
  if (it == index_.end()) return std::nullopt;
  return it->second;
}

void WordPieceTokenizer::EncodePlain(std::string_view text, std::size_t base,
                                     std::vector<TokenPiece>* out) const {
  for (auto [wb, we] : PreTokenize(text)) {
    const std::string_view word = text.substr(wb, we - wb);
    std::vector<TokenPiece> pieces;
    std::size_t start = 0;
    bool ok = true;
    while (start < word.size()) {
      std::size_t end = word.size();
      std::optional<int> found;
      while (end > start) {
        std::string cand(word.substr(start, end - start));
        if (start > 0) cand = "##" + cand;
        if (utf8::IsBoundary(word, end)) found = BaseLookup(cand);
        if (found) break;
        --end;
      }
      if (!found) {
        ok = false;
        break;
      }
      pieces.push_back({*found, base + wb + start, base + wb + end});
      start = end;
    }
    if (ok) {
      out->insert(out->end(), pieces.begin(), pieces.end());
    } else {
      out->push_back({special_.unk, base + wb, base + we});
    }
  }
}

std::string WordPieceTokenizer::JoinPieces(std::span<const int> ids) const {
  std::string out;
  for (int id : ids) {
    std::string p = Piece(id);
    if (p.starts_with("##")) {
      out += p.substr(2);
    } else {
      if (!out.empty()) out.push_back(' ');
      out += p;
    }
  }
  return out;
}

// ------------------------------------------------------------- Unigram

namespace {

constexpr std::string_view kMetaspace = "\xE2\x96\x81";  // U+2581
constexpr double kUnkPenalty = 10.0;

}  // namespace

UnigramTokenizer UnigramTokenizer::FromFile(const std::filesystem::path& path) {
  return FromJson(ReadJsonFile(path));
}

UnigramTokenizer UnigramTokenizer::FromJson(const json& j) {
  // Accepts both a raw tokenizer.json and the wrapper written by ToJson().
  const json& src = j.contains("source") ? j.at("source") : j;
  const json& model = src.at("model");
  if (model.value("type", std::string()) != "Unigram") {
    throw ConfigError("tokenizer.json model type must be Unigram");
  }
  UnigramTokenizer t;
  t.source_ = src;
  double min_score = std::numeric_limits<double>::infinity();
  for (const json& entry : model.at("vocab")) {
    const std::string piece = entry.at(0).get<std::string>();
    const double score = entry.at(1).get<double>();
    t.index_.emplace(piece, static_cast<int>(t.pieces_.size()));
    t.pieces_.push_back(piece);
    t.scores_.push_back(score);
    t.max_piece_bytes_ = std::max(t.max_piece_bytes_, piece.size());
    min_score = std::min(min_score, score);
  }
  t.unk_score_ = min_score - kUnkPenalty;
  auto id_of = [&t](const char* piece, int fallback) {
    auto it = t.index_.find(piece);
    return it == t.index_.end() ? fallback : it->second;
  };
  t.special_.unk = model.contains("unk_id") && !model.at("unk_id").is_null()
                       ? model.at("unk_id").get<int>()
                       : id_of("<unk>", 3);
  t.special_.start = id_of("<s>", 0);
  t.special_.pad = id_of("<pad>", 1);
  t.special_.eos = id_of("</s>", 2);
  t.special_.sep = t.special_.eos;
  if (j.contains("added")) t.AddedFromJson(j.at("added"));
  return t;
}

json UnigramTokenizer::ToJson() const {
  return {{"kind", kind()}, {"source", source_}, {"added", AddedToJson()}};
}

std::optional<int> UnigramTokenizer::BaseLookup(std::string_view token) const {
  auto it = index_.find(std::string(token));
  if (it == index_.end()) return std::nullopt;
  return it->second;
}

void UnigramTokenizer::SegmentWord(
    std::string_view word, std::vector<std::pair<int, std::size_t>>* out) const {
  const std::size_t n = word.size();
  const double kNone = -std::numeric_limits<double>::infinity();
  std::vector<double> best(n + 1, kNone);
  std::vector<std::size_t> prev(n + 1, 0);
  std::vector<int> piece(n + 1, -1);
  best[0] = 0.0;
  for (std::size_t i = 0; i < n; i += utf8::SequenceLength(word[i])) {
    if (best[i] == kNone) continue;
    bool any = false;
    const std::size_t char_len = std::min(utf8::SequenceLength(word[i]), n - i);
    for (std::size_t len = 1; len <= max_piece_bytes_ && i + len <= n; ++len) {
      if (!utf8::IsBoundary(word, i + len)) continue;
      auto it = index_.find(std::string(word.substr(i, len)));
      if (it == index_.end()) continue;
      if (len == char_len) any = true;
      const double s = best[i] + scores_[it->second];
      if (s > best[i + len]) {
        best[i + len] = s;
        prev[i + len] = i;
        piece[i + len] = it->second;
      }
    }
    if (!any) {
      const double s = best[i] + unk_score_;
      if (s > best[i + char_len]) {
        best[i + char_len] = s;
        prev[i + char_len] = i;
        piece[i + char_len] = special_.unk;
      }
    }
  }
  std::vector<std::pair<int, std::size_t>> rev;  // (id, end offset)
  for (std::size_t e = n; e > 0; e = prev[e]) rev.emplace_back(piece[e], e);
  // Consecutive unknowns fuse into one token.
  for (auto it = rev.rbegin(); it != rev.rend(); ++it) {
    if (!out->empty() && it->first == special_.unk && out->back().first == special_.unk) {
      out->back().second = it->second;
    } else {
      out->push_back(*it);
    }
  }
}

void UnigramTokenizer::EncodePlain(std::string_view text, std::size_t base,
                                   std::vector<TokenPiece>* out) const {
  for (std::string_view w : WhitespaceTokens(text)) {
    const std::size_t wb = static_cast<std::size_t>(w.data() - text.data());
    const std::string word = std::string(kMetaspace) + std::string(w);
    std::vector<std::pair<int, std::size_t>> seg;
    SegmentWord(word, &seg);
    std::size_t begin = 0;
    for (auto [id, end] : seg) {
      // Bytes of the metaspace prefix map onto the word start.
      auto map = [&](std::size_t k) {
        return base + wb + (k > kMetaspace.size() ? k - kMetaspace.size() : 0);
      };
      out->push_back({id, map(begin), map(end)});
      begin = end;
    }
  }
}

std::string UnigramTokenizer::JoinPieces(std::span<const int> ids) const {
  std::string joined;
  for (int id : ids) joined += Piece(id);
  std::string out;
  for (std::size_t i = 0; i < joined.size();) {
    if (joined.compare(i, kMetaspace.size(), kMetaspace) == 0) {
      if (!out.empty()) out.push_back(' ');
      i += kMetaspace.size();
    } else {
      out.push_back(joined[i++]);
    }
  }
  return out;
}

std::unique_ptr<Tokenizer> TokenizerFromJson(const json& j) {
  const std::string kind = j.value("kind", std::string());
  if (kind == "word") return std::make_unique<WordTokenizer>(WordTokenizer::FromJson(j));
  if (kind == "wordpiece") {
    return std::make_unique<WordPieceTokenizer>(WordPieceTokenizer::FromJson(j));
  }
  if (kind == "unigram" || j.contains("model")) {
    return std::make_unique<UnigramTokenizer>(UnigramTokenizer::FromJson(j));
  }
  throw ConfigError(fmt::format("unknown tokenizer kind '{}'", kind));
}

}  // namespace wic
