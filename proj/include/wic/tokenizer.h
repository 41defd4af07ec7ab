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

// Tokenizer adapter contract.
//
// Every tokenizer maps text to ids with byte offsets into the input and
// exposes the ids of the sequence-start, separator, end-of-sequence, pad
// and unknown tokens. Added special tokens (the target tags) are split out
// of the text before the underlying model sees it and always encode to a
// single id; whitespace adjacent to them is dropped.
//
// Implementations:
//   WordTokenizer       whitespace + punctuation split, closed vocabulary
//                       (the desk-scale tokenizer used with the toy encoder)
//   WordPieceTokenizer  greedy longest-match subwords with "##" continuation
//   UnigramTokenizer    sentencepiece-style unigram model read from a
//                       tokenizer.json (the multilingual production path)

#ifndef WIC_TOKENIZER_H_
#define WIC_TOKENIZER_H_

#include <cstddef>
#include <filesystem>
#include <memory>
#include <optional>
#include <span>
#include <string>
#include <string_view>
#include <unordered_map>
#include <vector>

#include "json.hpp"

namespace wic {

struct TokenPiece {
  int id = 0;
  std::size_t begin = 0;  // byte offsets into the encoded text
  std::size_t end = 0;

  friend bool operator==(const TokenPiece&, const TokenPiece&) = default;
};

struct SpecialIds {
  int start = 0;  // [CLS]-role token
  int pad = 1;
  int eos = 2;
  int unk = 3;
  int sep = 2;
};

class Tokenizer {
 public:
  virtual ~Tokenizer() = default;

  std::vector<TokenPiece> Encode(std::string_view text) const;

  // Base vocabulary plus added tokens.
  std::size_t vocab_size() const { return BaseVocabSize() + added_.size(); }
  const SpecialIds& special() const { return special_; }

  // Ids of <t> and </t>; nullopt before registration.
  std::optional<int> target_open_id() const;
  std::optional<int> target_close_id() const;

  std::optional<int> AddedTokenId(std::string_view token) const;
  // Appends a token that will be matched verbatim. Returns its id, or the
  // existing id if it is already known.
  int AddToken(std::string_view token);

  std::string Piece(int id) const;

  // Surface string of consecutive pieces under this tokenizer's joining
  // convention (space-joined words, "##" continuations, "▁" word marks).
  virtual std::string JoinPieces(std::span<const int> ids) const = 0;

  virtual std::string kind() const = 0;
  virtual nlohmann::json ToJson() const = 0;

 protected:
  virtual std::size_t BaseVocabSize() const = 0;
  virtual std::string BasePiece(int id) const = 0;
  virtual std::optional<int> BaseLookup(std::string_view token) const = 0;
  // Encodes a segment containing no added tokens; offsets are relative to
  // the segment start and shifted by `base`.
  virtual void EncodePlain(std::string_view text, std::size_t base,
                           std::vector<TokenPiece>* out) const = 0;

  nlohmann::json AddedToJson() const;
  void AddedFromJson(const nlohmann::json& j);

  SpecialIds special_;

 private:
  std::vector<std::string> added_;
};

struct RegisterResult {
  std::size_t added = 0;
  bool already_present = false;
};

// Adds <t> and </t> as single-id tokens. Idempotent: a second call adds
// nothing and reports already_present.
RegisterResult RegisterSpecialTokens(Tokenizer& tokenizer);

// Splits on whitespace and isolates ASCII punctuation characters.
std::vector<std::pair<std::size_t, std::size_t>> PreTokenize(std::string_view text);

class WordTokenizer : public Tokenizer {
 public:
  // Vocabulary starts with <s> <pad> </s> <unk> <sep>; `words` follow in the
  // given order (duplicates and reserved strings ignored).
  explicit WordTokenizer(const std::vector<std::string>& words);

  // Sorted distinct pre-tokens of `texts` (tag strings excluded).
  static WordTokenizer Build(const std::vector<std::string>& texts);
  static WordTokenizer FromJson(const nlohmann::json& j);

  std::string JoinPieces(std::span<const int> ids) const override;
  std::string kind() const override { return "word"; }
  nlohmann::json ToJson() const override;

 protected:
  std::size_t BaseVocabSize() const override { return vocab_.size(); }
  std::string BasePiece(int id) const override { return vocab_[id]; }
  std::optional<int> BaseLookup(std::string_view token) const override;
  void EncodePlain(std::string_view text, std::size_t base,
                   std::vector<TokenPiece>* out) const override;

 private:
  std::vector<std::string> vocab_;
  std::unordered_map<std::string, int> index_;
};

class WordPieceTokenizer : public Tokenizer {
 public:
  // Reserved tokens as in WordTokenizer, then `pieces` ("##x" marks a
  // word-internal continuation).
  explicit WordPieceTokenizer(const std::vector<std::string>& pieces);
  static WordPieceTokenizer FromJson(const nlohmann::json& j);

  std::string JoinPieces(std::span<const int> ids) const override;
  std::string kind() const override { return "wordpiece"; }
  nlohmann::json ToJson() const override;

 protected:
  std::size_t BaseVocabSize() const override { return vocab_.size(); }
  std::string BasePiece(int id) const override { return vocab_[id]; }
  std::optional<int> BaseLookup(std::string_view token) const override;
  void EncodePlain(std::string_view text, std::size_t base,
                   std::vector<TokenPiece>* out) const override;

 private:
  std::vector<std::string> vocab_;
  std::unordered_map<std::string, int> index_;
};

// Unigram language-model tokenizer with Metaspace pre-tokenization, read
// from a Hugging Face tokenizer.json. The normalizer section is not
// applied; inputs are expected to be NFC text already.
class UnigramTokenizer : public Tokenizer {
 public:
  static UnigramTokenizer FromFile(const std::filesystem::path& path);
  static UnigramTokenizer FromJson(const nlohmann::json& j);

  std::string JoinPieces(std::span<const int> ids) const override;
  std::string kind() const override { return "unigram"; }
  nlohmann::json ToJson() const override;

 protected:
  std::size_t BaseVocabSize() const override { return pieces_.size(); }
  std::string BasePiece(int id) const override { return pieces_[id]; }
  std::optional<int> BaseLookup(std::string_view token) const override;
  void EncodePlain(std::string_view text, std::size_t base,
                   std::vector<TokenPiece>* out) const override;

 private:
  UnigramTokenizer() = default;

  // Viterbi segmentation of one Metaspace word (starting with "▁").
  void SegmentWord(std::string_view word, std::vector<std::pair<int, std::size_t>>* out) const;

  std::vector<std::string> pieces_;
  std::vector<double> scores_;
  std::unordered_map<std::string, int> index_;
  std::size_t max_piece_bytes_ = 0;
  double unk_score_ = -100.0;
  nlohmann::json source_;
};

// Reconstructs a tokenizer from Tokenizer::ToJson().
std::unique_ptr<Tokenizer> TokenizerFromJson(const nlohmann::json& j);

}  // namespace wic

#endif  // WIC_TOKENIZER_H_
