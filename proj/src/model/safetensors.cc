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

#include "wic/model/safetensors.h"

#include <bit>
#include <cmath>
#include <cstring>
#include <fstream>
#include <limits>

#include <fmt/format.h>

#include "json.hpp"
#include "wic/error.h"

namespace wic {

namespace {

static_assert(std::endian::native == std::endian::little,
              "safetensors I/O assumes a little-endian host");

double HalfToDouble(std::uint16_t h) {
  const int sign = (h >> 15) & 1;
  const int exp = (h >> 10) & 0x1F;
  const int mant = h & 0x3FF;
  double v;
  if (exp == 0) {
    v = std::ldexp(static_cast<double>(mant), -24);
  } else if (exp == 31) {
    v = mant ? std::numeric_limits<double>::quiet_NaN() : std::numeric_limits<double>::infinity();
  } else {
    v = std::ldexp(static_cast<double>(mant | 0x400), exp - 25);
  }
  return sign ? -v : v;
}

double Bf16ToDouble(std::uint16_t b) {
  const std::uint32_t bits = static_cast<std::uint32_t>(b) << 16;
  return static_cast<double>(std::bit_cast<float>(bits));
}

}  // namespace

std::map<std::string, SafeTensor> ReadSafetensors(const std::filesystem::path& path) {
  std::ifstream in(path, std::ios::binary);
  if (!in) throw DataError(fmt::format("cannot open '{}'", path.string()));
  std::uint64_t header_len = 0;
  in.read(reinterpret_cast<char*>(&header_len), 8);
  if (!in || header_len > (1ULL << 30)) {
    throw DataError(fmt::format("'{}': bad safetensors header", path.string()));
  }
  std::string header(header_len, '\0');
  in.read(header.data(), static_cast<std::streamsize>(header_len));
  nlohmann::json meta;
  try {
    meta = nlohmann::json::parse(header);
  } catch (const nlohmann::json::parse_error& e) {
    throw DataError(fmt::format("'{}': malformed safetensors header: {}", path.string(), e.what()));
  }
  const std::uint64_t data_start = 8 + header_len;

  std::map<std::string, SafeTensor> out;
  for (const auto& [name, info] : meta.items()) {
    if (name == "__metadata__") continue;
    const std::string dtype = info.at("dtype").get<std::string>();
    SafeTensor t;
    t.shape = info.at("shape").get<std::vector<std::int64_t>>();
    const auto offsets = info.at("data_offsets").get<std::vector<std::uint64_t>>();
    const std::uint64_t nbytes = offsets.at(1) - offsets.at(0);
    std::size_t count = 1;
    for (auto d : t.shape) count *= static_cast<std::size_t>(d);
    std::string raw(nbytes, '\0');
    in.seekg(static_cast<std::streamoff>(data_start + offsets[0]));
    in.read(raw.data(), static_cast<std::streamsize>(nbytes));
    if (!in) throw DataError(fmt::format("'{}': truncated tensor '{}'", path.string(), name));
    t.data.resize(count);
    auto expect = [&](std::size_t width) {
      if (nbytes != count * width) {
        throw DataError(fmt::format("'{}': tensor '{}' size mismatch", path.string(), name));
      }
    };
    if (dtype == "F64") {
      expect(8);
      std::memcpy(t.data.data(), raw.data(), nbytes);
    } else if (dtype == "F32") {
      expect(4);
      for (std::size_t i = 0; i < count; ++i) {
        float f;
        std::memcpy(&f, raw.data() + 4 * i, 4);
        t.data[i] = f;
      }
    } else if (dtype == "F16" || dtype == "BF16") {
      expect(2);
      for (std::size_t i = 0; i < count; ++i) {
        std::uint16_t h;
        std::memcpy(&h, raw.data() + 2 * i, 2);
        t.data[i] = dtype == "F16" ? HalfToDouble(h) : Bf16ToDouble(h);
      }
    } else {
      // Integer buffers (e.g. position_ids) are not parameters.
      continue;
    }
    out.emplace(name, std::move(t));
  }
  return out;
}

void WriteSafetensors(const std::filesystem::path& path,
                      const std::map<std::string, SafeTensor>& tensors, bool f64) {
  nlohmann::json meta = nlohmann::json::object();
  std::uint64_t offset = 0;
  const std::size_t width = f64 ? 8 : 4;
  for (const auto& [name, t] : tensors) {
    const std::uint64_t n = t.data.size() * width;
    meta[name] = {{"dtype", f64 ? "F64" : "F32"},
                  {"shape", t.shape},
                  {"data_offsets", {offset, offset + n}}};
    offset += n;
  }
  std::string header = meta.dump();
  while ((8 + header.size()) % 8 != 0) header.push_back(' ');
  std::ofstream out(path, std::ios::binary);
  if (!out) throw Error(fmt::format("cannot write '{}'", path.string()));
  const std::uint64_t len = header.size();
  out.write(reinterpret_cast<const char*>(&len), 8);
  out.write(header.data(), static_cast<std::streamsize>(header.size()));
  for (const auto& [name, t] : tensors) {
    if (f64) {
      out.write(reinterpret_cast<const char*>(t.data.data()),
                static_cast<std::streamsize>(t.data.size() * 8));
    } else {
      for (double d : t.data) {
        const float f = static_cast<float>(d);
        out.write(reinterpret_cast<const char*>(&f), 4);
      }
    }
  }
  if (!out) throw Error(fmt::format("write failed for '{}'", path.string()));
}

}  // namespace wic
