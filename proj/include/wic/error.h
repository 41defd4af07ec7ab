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

#ifndef WIC_ERROR_H_
#define WIC_ERROR_H_

#include <stdexcept>
#include <string>

namespace wic {

// Base class for every failure raised by the library. Messages always name
// the offending id, path or field so the CLI can print them verbatim.
class Error : public std::runtime_error {
 public:
  explicit Error(const std::string& what) : std::runtime_error(what) {}
};

// Input data violates the expected file format or schema.
class DataError : public Error {
 public:
  using Error::Error;
};

// A configuration value is out of range or inconsistent.
class ConfigError : public Error {
 public:
  using Error::Error;
};

// Tensor shapes or index sets do not fit together.
class ShapeError : public Error {
 public:
  using Error::Error;
};

}  // namespace wic

#endif  // WIC_ERROR_H_
