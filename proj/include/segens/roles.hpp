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

#include <array>
#include <cstdint>
#include <string>
#include <string_view>

namespace segens {

/// Raw scene labels written by the generator.
enum class PlantClass : std::uint8_t {
  kBackgroundSoil = 0,
  kNarrowLeaf = 1,
  kCanolaEarly = 2,
  kCanolaLate = 3,
  kKochia = 4,
  kBroadleafWeed = 5,
};
inline constexpr int kNumPlantClasses = 6;

std::string_view plant_class_name(PlantClass c);

/// One-vs-all target of a base model.
enum class RoleId : std::uint8_t {
  kNarrowLeafCrop,  // C_nl
  kCanolaEarly,     // C_c_E
  kCanolaLate,      // C_c_L
  kKochia,          // W_k
  kBroadleafWeed,   // W_bl
  kBareSoil,        // S_bs
};

struct BaseRole {
  RoleId id;
  std::string_view symbol;
  std::string_view description;
  PlantClass target;
  // Relative training-set size (image counts of the field datasets).
  int reference_images;
};

const std::array<BaseRole, 6>& all_roles();
const BaseRole& role_info(RoleId id);
/// Throws std::invalid_argument listing the valid symbols.
RoleId role_from_symbol(std::string_view symbol);
std::string valid_role_symbols();

}  // namespace segens
