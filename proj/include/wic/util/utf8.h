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

// Minimal UTF-8 helpers. Text is stored as UTF-8 std::string everywhere;
// character spans count code points.

#ifndef WIC_UTIL_UTF8_H_
#define WIC_UTIL_UTF8_H_

#include <cstddef>
#include <string>
#include <string_view>
#include <vector>

namespace wic::utf8 {

// Number of bytes in the sequence introduced by lead byte `c` (1 for
// invalid lead bytes so that scanning always makes progress).
std::size_t SequenceLength(unsigned char c);

bool IsBoundary(std::string_view s, std::size_t byte);

// Number of code points in `s`.
std::size_t Length(std::string_view s);

// Byte offset of code point `index`; index == Length(s) maps to s.size().
// Throws wic::Error when index is past the end.
std::size_t ByteOffset(std::string_view s, std::size_t index);

// Code point index of byte offset `byte` (must be a boundary).
std::size_t CharIndex(std::string_view s, std::size_t byte);

// Decodes the code point starting at `byte`; sets *len to its byte length.
char32_t Decode(std::string_view s, std::size_t byte, std::size_t* len);

void Append(std::string* out, char32_t cp);

std::vector<char32_t> ToCodePoints(std::string_view s);

// Unicode-aware enough for tokenization: ASCII whitespace, NBSP, the
// U+2000 block spaces and the ideographic space.
bool IsSpace(char32_t cp);

// ASCII-only lowercase; non-ASCII code points pass through.
std::string AsciiLower(std::string_view s);

}  // namespace wic::utf8

#endif  // WIC_UTIL_UTF8_H_
