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

#include "segens/roles.hpp"

#include <stdexcept>

namespace segens {

std::string_view plant_class_name(PlantClass c) {
  switch (c) {
    case PlantClass::kBackgroundSoil: return "BACKGROUND_SOIL";
    case PlantClass::kNarrowLeaf: return "NARROW_LEAF";
    case PlantClass::kCanolaEarly: return "CANOLA_EARLY";
    case PlantClass::kCanolaLate: return "CANOLA_LATE";
    case PlantClass::kKochia: return "KOCHIA";
    case PlantClass::kBroadleafWeed: return "BROADLEAF_WEED";
  }
  return "?";
}

const std::array<BaseRole, 6>& all_roles() {
  static const std::array<BaseRole, 6> roles = {{
      {RoleId::kNarrowLeafCrop, "C_nl", "Detects narrow leaf crops",
       PlantClass::kNarrowLeaf, 250},
      {RoleId::kCanolaEarly, "C_c_E", "Detects early stage Canola",
       PlantClass::kCanolaEarly, 150},
      {RoleId::kCanolaLate, "C_c_L", "Detects mid / late stage Canola",
       PlantClass::kCanolaLate, 300},
      {RoleId::kKochia, "W_k", "Detects Kochia weed", PlantClass::kKochia, 124},
      {RoleId::kBroadleafWeed, "W_bl", "Detects broad leaf weeds",
       PlantClass::kBroadleafWeed, 150},
      {RoleId::kBareSoil, "S_bs", "Detects bare soil",
       PlantClass::kBackgroundSoil, 50},
  }};
  return roles;
}

const BaseRole& role_info(RoleId id) {
  return all_roles()[static_cast<std::size_t>(id)];
}

std::string valid_role_symbols() {
  std::string out;
  for (const auto& r : all_roles()) {
    if (!out.empty()) out += ", ";
    out += r.symbol;
  }
  return out;
}

RoleId role_from_symbol(std::string_view symbol) {
  for (const auto& r : all_roles()) {
    if (r.symbol == symbol) return r.id;
  }
  throw std::invalid_argument("unknown role '" + std::string(symbol) +
                              "' (valid: " + valid_role_symbols() + ")");
}

}  // namespace segens
