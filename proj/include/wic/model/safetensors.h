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

// Reader and writer for the safetensors container: an 8-byte little-endian
// header length, a JSON header {name: {dtype, shape, data_offsets}} and the
// raw tensor bytes. F64, F32, F16 and BF16 tensors are converted to double.

#ifndef WIC_MODEL_SAFETENSORS_H_
#define WIC_MODEL_SAFETENSORS_H_

#include <cstdint>
#include <filesystem>
#include <map>
#include <string>
#include <vector>

namespace wic {

struct SafeTensor {
  std::vector<std::int64_t> shape;
  std::vector<double> data;  // row-major
};

std::map<std::string, SafeTensor> ReadSafetensors(const std::filesystem::path& path);

// Writes tensors as F32 (or F64 when `f64` is set).
void WriteSafetensors(const std::filesystem::path& path,
                      const std::map<std::string, SafeTensor>& tensors, bool f64 = false);

}  // namespace wic

#endif  // WIC_MODEL_SAFETENSORS_H_
