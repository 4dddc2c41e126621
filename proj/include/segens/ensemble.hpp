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
#include <optional>
#include <span>
#include <string>
#include <string_view>
#include <vector>

#include "segens/nets.hpp"
#include "segens/roles.hpp"
#include "segens/training.hpp"

namespace segens {

/// Frozen binary base outputs f_i stacked channel-wise in registration order.
struct BaseOutputStack {
  Tensor<float> probs;  // (N_b, N_models, H, W)
  std::vector<RoleId> roles;
};

struct TeacherPrediction {
  Tensor<float> class_probs;  // (N_b, K, H, W)
  LabelMap class_map;
};

enum class FusionKind { kABE, kMCE, kMSNE, kMUNE };
std::string_view fusion_name(FusionKind kind);
FusionKind fusion_from_name(std::string_view name);

struct FusionStrategy {
  FusionKind kind = FusionKind::kABE;
  std::optional<Network> meta;
  // Channel order the meta head was trained on; fusion is order-sensitive.
  std::vector<RoleId> trained_roles;
};

struct BaseModel {
  RoleId role;
  Network net;
  int target_class = 1;  // class this role votes for; 0 = background
};

struct Teacher {
  std::vector<BaseModel> bases;
  int k_classes = 2;
  FusionStrategy strategy;
  double abe_threshold = 0.5;

  std::vector<RoleId> roles() const;
  std::vector<int> channel_classes() const;
};

BaseOutputStack stack_bases(std::span<const BaseModel> bases, const Tensor<float>& batch);

/// Per pixel: the most confident base (lowest index on ties) decides when its
/// probability reaches `threshold`; otherwise background. Produces one-hot
/// probabilities.
TeacherPrediction fuse_abe(const BaseOutputStack& stack, std::span<const int> channel_classes,
                           int k_classes, double threshold = 0.5);

struct MetaArchitecture {
  int depth = 3;
  int base_width = 16;
};

FusionStrategy build_meta(FusionKind kind, int n_models, int k_classes, std::uint64_t seed,
                          MetaArchitecture arch = {});

struct MetaReport {
  TrainReport train;
  std::vector<double> train_loss;  // per epoch
  std::vector<double> val_miou;    // per epoch
};

/// Trains only the meta head; bases stay frozen.
MetaReport train_meta(FusionStrategy& strategy, std::span<const BaseModel> bases,
                      int k_classes, const Dataset& ds, const TrainConfig& config,
                      const EpochHook& on_epoch = {});

TeacherPrediction teacher_forward(const Teacher& teacher, const Tensor<float>& batch);

/// Sum of base FLOPs plus the meta head's.
std::int64_t teacher_flops(const Teacher& teacher, int h, int w);
std::int64_t teacher_param_count(const Teacher& teacher);

/// Binary prediction of one base mapped into the teacher's class space.
LabelMap single_base_class_map(const BaseModel& base, const Tensor<float>& batch,
                               double threshold = 0.5);

// Ensemble manifest (JSON). Paths are relative to the manifest's directory.
struct ManifestEntry {
  RoleId role;
  std::filesystem::path checkpoint;
  int target_class = 1;
};

struct EnsembleManifest {
  std::vector<std::string> classes;
  std::vector<ManifestEntry> bases;
  FusionKind strategy = FusionKind::kABE;
  std::optional<std::filesystem::path> meta_checkpoint;
  std::vector<RoleId> meta_roles;
  double abe_threshold = 0.5;
};

EnsembleManifest read_manifest(const std::filesystem::path& path);
void write_manifest(const std::filesystem::path& path, const EnsembleManifest& manifest);

/// Loads every checkpoint named by the manifest; bases come back frozen.
Teacher load_teacher(const std::filesystem::path& manifest_path);
Teacher load_teacher(const EnsembleManifest& manifest, const std::filesystem::path& base_dir);

}  // namespace segens
