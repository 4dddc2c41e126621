// Copyright 2026 The segens Authors.
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

#pragma once

#include <filesystem>
#include <stdexcept>
#include <string>

#include "segens/tensor.hpp"

namespace segens {

class NetpbmError : public std::runtime_error {
 public:
  enum class Kind { kIo, kWrongMagic, kBadHeader, kTruncated, kRange };
  NetpbmError(Kind kind, const std::string& what)
      : std::runtime_error(what), kind_(kind) {}
  Kind kind() const { return kind_; }

 private:
  Kind kind_;
};

/// Binary P6, maxval 255. `image` is (1, 3, H, W) with values in [0, 1].
void write_image_ppm(const std::filesystem::path& path, const Tensor<float>& image);
Tensor<float> read_image_ppm(const std::filesystem::path& path);

/// Binary P5, maxval 255; one byte per class id.
void write_mask_pgm(const std::filesystem::path& path, const LabelMap& mask);
LabelMap read_mask_pgm(const std::filesystem::path& path);

}  // namespace segens
