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

#include "segens/synthdata.hpp"

namespace segens {

/// Writes `<root>/<split>/img_%05d.ppm`, `msk_%05d.pgm` and
/// `<root>/manifest.json` (class list, seed, dims, split membership).
void write_dataset(const std::filesystem::path& root, const Dataset& ds);

/// Reads a directory produced by write_dataset. Images come back quantized
/// to 8 bits.
Dataset read_dataset(const std::filesystem::path& root);

}  // namespace segens
