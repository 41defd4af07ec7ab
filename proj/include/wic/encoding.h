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

#ifndef WIC_ENCODING_H_
#define WIC_ENCODING_H_

#include <cstddef>
#include <cstdint>
#include <optional>
#include <string>
#include <vector>

#include "wic/corpus.h"
#include "wic/error.h"
#include "wic/preprocess.h"
#include "wic/tokenizer.h"

namespace wic {

inline constexpr std::size_t kDefaultMaxLen = 240;
inline constexpr std::size_t kDefaultBatchSize = 10;

class EncodingError : public Error {
 public:
  using Error::Error;
};

// [start] tokens(tagged1) [sep] tokens(tagged2) [eos], with the positions
// of the target subwords (tags excluded) of each context.
struct EncodedExample {
  std::string id;
  std::vector<int> token_ids;
  std::vector<std::size_t> target_idx1;
  std::vector<std::size_t> target_idx2;
  std::optional<Label> label;
  std::size_t sep_position = 0;

  friend bool operator==(const EncodedExample&, const EncodedExample&) = default;
};

// Throws EncodingError when the sequence exceeds max_len or when a tag
// does not survive tokenization as a single token.
EncodedExample EncodePair(const TaggedPair& pair, const Tokenizer& tokenizer,
                          std::size_t max_len = kDefaultMaxLen);

std::vector<EncodedExample> EncodeCorpus(const std::vector<TaggedPair>& pairs,
                                         const Tokenizer& tokenizer,
                                         std::size_t max_len = kDefaultMaxLen);

// Right-padded batch. ids[b] and mask[b] all have length max_length.
struct Batch {
  std::vector<EncodedExample> examples;
  std::vector<std::vector<int>> ids;
  std::vector<std::vector<std::uint8_t>> mask;
  std::size_t max_length = 0;
};

Batch MakeBatch(std::vector<EncodedExample> examples, int pad_id);

// Order-preserving batches of at most batch_size examples.
std::vector<Batch> BatchEncode(const std::vector<EncodedExample>& examples,
                               int pad_id, std::size_t batch_size = kDefaultBatchSize);

std::vector<Batch> BatchEncode(const std::vector<TaggedPair>& pairs,
                               const Tokenizer& tokenizer,
                               std::size_t max_len = kDefaultMaxLen,
                               std::size_t batch_size = kDefaultBatchSize);

// Strips padding: the examples as they would be encoded individually.
std::vector<EncodedExample> Unbatch(const std::vector<Batch>& batches);

}  // namespace wic

#endif  // WIC_ENCODING_H_
