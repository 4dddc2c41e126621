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

#include <cstdint>
#include <filesystem>
#include <span>
#include <stdexcept>
#include <string>
#include <vector>

#include "segens/nets.hpp"

namespace segens {

inline constexpr std::uint16_t kCheckpointVersion = 1;

class CheckpointError : public std::runtime_error {
 public:
  enum class Kind { kIo, kBadMagic, kBadVersion, kTruncated, kCorrupt };
  CheckpointError(Kind kind, const std::string& what)
      : std::runtime_error(what), kind_(kind) {}
  Kind kind() const { return kind_; }

 private:
  Kind kind_;
};

/// Layout (all integers little-endian):
///   "SGNS" | u16 version | spec | u32 n_params |
///   n_params x (u32 name_len | name | 4 x u32 shape | f32 values) |
///   u64 FNV-1a of the parameter section
/// where spec = u8 arch | u32 in | u32 out | u32 depth | u32 width | u64 seed.
std::vector<std::uint8_t> serialize(const Network& net);
Network deserialize(std::span<const std::uint8_t> bytes);

void save_checkpoint(const Network& net, const std::filesystem::path& path);
Network load_checkpoint(const std::filesystem::path& path);

std::uint64_t fnv1a64(std::span<const std::uint8_t> bytes);

/// Hash of the serialized parameter section (names, shapes and values).
std::uint64_t payload_hash(const Network& net);
/// Same hash read back from a checkpoint file.
std::uint64_t checkpoint_payload_hash(const std::filesystem::path& path);

}  // namespace segens
