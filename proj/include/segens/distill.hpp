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

#include <optional>
#include <span>
#include <vector>

#include "segens/ensemble.hpp"
#include "segens/nets.hpp"
#include "segens/training.hpp"

namespace segens {

struct DistillConfig {
  ModelSpec student_spec;  // out_channels: teacher K, or 1 for a single class
  bool soft_targets = true;
  TrainConfig train;
  // Used instead of a fresh initialization when set.
  std::optional<Network> warm_start;
  // Teacher class tracked by a single-channel student.
  int target_class = 1;
};

/// Teacher output used as the distillation target; hard mode replaces the
/// probabilities with the one-hot class map.
TeacherPrediction pseudo_label(const Teacher& teacher, const Tensor<float>& batch, bool soft);

struct DistillEpoch {
  int epoch = 0;
  double loss = 0;
  double agreement = 0;  // on held-out images
  double seconds = 0;
};

struct DistillReport {
  std::vector<DistillEpoch> epochs;
  double final_agreement = 0;
};

struct DistillResult {
  Network student;
  DistillReport report;
};

/// Trains the student on unlabeled images against the teacher via
/// per-channel BCE. Teacher parameters are never touched.
DistillResult distill_student(const Teacher& teacher, const DistillConfig& config,
                              std::span<const Tensor<float>> images,
                              std::span<const Tensor<float>> held_out);

/// Student prediction expressed in the teacher's class space.
LabelMap student_class_map(const Network& student, const Tensor<float>& batch,
                           int target_class = 1);

/// Fraction of pixels on which two class maps coincide.
double agreement(const LabelMap& a, const LabelMap& b);
double agreement(const Network& student, const Teacher& teacher,
                 std::span<const Tensor<float>> images, int target_class = 1);

}  // namespace segens
