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
#include <optional>
#include <string>
#include <utility>
#include <vector>

#include "segens/roles.hpp"
#include "segens/tensor.hpp"

namespace segens {

struct ShadowBand {
  double position = 0.5;     // band centre as a fraction of the image width
  double width = 8.0;        // pixels
  double attenuation = 0.5;  // multiplier inside the band
  double angle = 0.0;        // radians, 0 = vertical band
};

/// Image-only degradations; masks are never touched.
struct AugmentSpec {
  double blur_sigma = 0.0;
  double gain = 1.0;
  std::optional<ShadowBand> shadow;
  double noise_std = 0.0;
};

struct RowStructure {
  double angle = 0.0;  // radians
  int rows = 4;
};

struct SceneSpec {
  int height = 64;
  int width = 64;
  // Painted in order; later instances cover earlier ones.
  std::vector<std::pair<PlantClass, int>> instances;
  std::optional<RowStructure> rows;
  AugmentSpec augment;
  std::uint64_t seed = 0;
  // Spatial dims must be multiples of this.
  int stride = 8;
  // Radius range override for CANOLA_EARLY leaves (pixels at 64x64).
  double early_min_radius = 3.0;
  double early_max_radius = 5.0;
};

struct Sample {
  Tensor<float> image;  // (1, 3, H, W), values in [0, 1]
  LabelMap mask;        // (1, H, W)
};

/// Renders a procedural field scene and its per-pixel PlantClass mask.
Sample generate_scene(const SceneSpec& spec);

struct Dataset {
  std::string name;
  std::vector<std::string> class_names;
  std::vector<Sample> train, val, test;
  // Generation index of each sample, per split.
  std::vector<int> train_ids, val_ids, test_ids;
  std::uint64_t seed = 0;
  int height = 64;
  int width = 64;

  std::size_t size() const { return train.size() + val.size() + test.size(); }
};

struct SplitSizes {
  int train = 0;
  int val = 0;
  int test = 0;
};

/// 70/15/15 by default: floor for validation and test, remainder to train.
SplitSizes split_sizes(int n, int val_percent = 15, int test_percent = 15);

/// Default per-role dataset size.
inline constexpr int kDefaultBaseImages = 60;

/// Scenes containing the role's class plus distractors, masks binarized to
/// {0 = other, 1 = role's class}.
Dataset make_binary_dataset(RoleId role, int n_images, std::uint64_t seed,
                            int hw = 64, int val_percent = 15, int test_percent = 15);

enum class EvalKind { kKwdLike, kMscdLike };
std::string eval_kind_name(EvalKind kind);
EvalKind eval_kind_from_name(const std::string& name);

/// Multi-class evaluation scenes under harsher field conditions.
/// MSCD_like: {Non-Canola, Canola}; KWD_like: {Non-Kochia, Kochia}.
Dataset make_multiclass_eval_set(EvalKind kind, int n_images, std::uint64_t seed,
                                 int hw = 64, int val_percent = 15,
                                 int test_percent = 15);

/// Scene behind generation index `index` of the corresponding dataset.
/// generate_scene on it yields the unbinarized mask.
SceneSpec binary_scene_spec(RoleId role, int index, std::uint64_t seed, int hw = 64);
SceneSpec eval_scene_spec(EvalKind kind, int index, std::uint64_t seed, int hw = 64);

/// Target class of each role inside an eval set (0 = background).
int eval_class_of(EvalKind kind, RoleId role);

}  // namespace segens
