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

#include "wic/encoding.h"

#include <algorithm>

#include <fmt/format.h>

namespace wic {

namespace {

// Tokens of one tagged context and the target positions relative to them.
struct ContextTokens {
  std::vector<int> ids;
  std::vector<std::size_t> target;
};

ContextTokens EncodeContext(const std::string& tagged, const Tokenizer& tok,
                            int open, int close, const std::string& id) {
  ContextTokens out;
  for (const TokenPiece& p : tok.Encode(tagged)) out.ids.push_back(p.id);
  const auto o = std::find(out.ids.begin(), out.ids.end(), open);
  const auto c = std::find(out.ids.begin(), out.ids.end(), close);
  if (o == out.ids.end() || c == out.ids.end() || c < o) {
    throw EncodingError(fmt::format(
        "pair '{}': target tags lost in tokenization of \"{}\"", id, tagged));
  }
  if (std::count(out.ids.begin(), out.ids.end(), open) != 1 ||
      std::count(out.ids.begin(), out.ids.end(), close) != 1) {
    throw EncodingError(fmt::format("pair '{}': context has more than one tag pair", id));
  }
  for (auto it = o + 1; it != c; ++it) {
    out.target.push_back(static_cast<std::size_t>(it - out.ids.begin()));
  }
  if (out.target.empty()) {
    throw EncodingError(fmt::format("pair '{}': no tokens between target tags", id));
  }
  return out;
}

}  // namespace

EncodedExample EncodePair(const TaggedPair& pair, const Tokenizer& tokenizer,
                          std::size_t max_len) {
  const auto open = tokenizer.target_open_id();
  const auto close = tokenizer.target_close_id();
  if (!open || !close) {
    throw EncodingError("tokenizer has no <t>/</t> tokens; register them first");
  }
  const ContextTokens c1 = EncodeContext(pair.tagged1, tokenizer, *open, *close, pair.id);
  const ContextTokens c2 = EncodeContext(pair.tagged2, tokenizer, *open, *close, pair.id);
  const SpecialIds& sp = tokenizer.special();

  EncodedExample ex;
  ex.id = pair.id;
  ex.label = pair.label;
  ex.token_ids.reserve(c1.ids.size() + c2.ids.size() + 3);
  ex.token_ids.push_back(sp.start);
  ex.token_ids.insert(ex.token_ids.end(), c1.ids.begin(), c1.ids.end());
  ex.sep_position = ex.token_ids.size();
  ex.token_ids.push_back(sp.sep);
  const std::size_t second = ex.token_ids.size();
  ex.token_ids.insert(ex.token_ids.end(), c2.ids.begin(), c2.ids.end());
  ex.token_ids.push_back(sp.eos);
  if (ex.token_ids.size() > max_len) {
    throw EncodingError(fmt::format("pair '{}': {} tokens exceed max length {}", pair.id,
                                    ex.token_ids.size(), max_len));
  }
  for (std::size_t t : c1.target) ex.target_idx1.push_back(1 + t);
  for (std::size_t t : c2.target) ex.target_idx2.push_back(second + t);
  return ex;
}

std::vector<EncodedExample> EncodeCorpus(const std::vector<TaggedPair>& pairs,
                                         const Tokenizer& tokenizer,
                                         std::size_t max_len) {
  std::vector<EncodedExample> out;
  out.reserve(pairs.size());
  for (const TaggedPair& p : pairs) out.push_back(EncodePair(p, tokenizer, max_len));
  return out;
}

Batch MakeBatch(std::vector<EncodedExample> examples, int pad_id) {
  Batch b;
  for (const auto& e : examples) b.max_length = std::max(b.max_length, e.token_ids.size());
  for (const auto& e : examples) {
    std::vector<int> ids = e.token_ids;
    std::vector<std::uint8_t> mask(e.token_ids.size(), 1);
    ids.resize(b.max_length, pad_id);
    mask.resize(b.max_length, 0);
    b.ids.push_back(std::move(ids));
    b.mask.push_back(std::move(mask));
  }
  b.examples = std::move(examples);
  return b;
}

std::vector<Batch> BatchEncode(const std::vector<EncodedExample>& examples, int pad_id,
                               std::size_t batch_size) {
  if (batch_size == 0) throw ConfigError("batch size must be positive");
  std::vector<Batch> out;
  for (std::size_t i = 0; i < examples.size(); i += batch_size) {
    const std::size_t end = std::min(examples.size(), i + batch_size);
    out.push_back(MakeBatch({examples.begin() + i, examples.begin() + end}, pad_id));
  }
  return out;
}

std::vector<Batch> BatchEncode(const std::vector<TaggedPair>& pairs,
                               const Tokenizer& tokenizer, std::size_t max_len,
                               std::size_t batch_size) {
  return BatchEncode(EncodeCorpus(pairs, tokenizer, max_len), tokenizer.special().pad,
                     batch_size);
}

std::vector<EncodedExample> Unbatch(const std::vector<Batch>& batches) {
  std::vector<EncodedExample> out;
  for (const Batch& b : batches) {
    for (std::size_t i = 0; i < b.examples.size(); ++i) {
      EncodedExample e = b.examples[i];
      const auto real = static_cast<std::size_t>(
          std::count(b.mask[i].begin(), b.mask[i].end(), std::uint8_t{1}));
      e.token_ids.assign(b.ids[i].begin(), b.ids[i].begin() + real);
      out.push_back(std::move(e));
    }
  }
  return out;
}

}  // namespace wic
