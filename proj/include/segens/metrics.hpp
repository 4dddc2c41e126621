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
#include <functional>
#include <vector>

#include "segens/tensor.hpp"

namespace segens {

/// Per-class pixel tallies over a stream of (prediction, ground truth) pairs.
class ConfusionAccumulator {
 public:
  explicit ConfusionAccumulator(int k);

  void update(const LabelMap& pred, const LabelMap& gt);
  /// Exact tally addition; accumulators must share k.
  void merge(const ConfusionAccumulator& other);

  int k() const { return k_; }
  std::int64_t total() const { return total_; }
  const std::vector<std::int64_t>& tp() const { return tp_; }
  const std::vector<std::int64_t>& fp() const { return fp_; }
  const std::vector<std::int64_t>& fn() const { return fn_; }
  const std::vector<std::int64_t>& gt_count() const { return gt_count_; }

  // A class absent from both prediction and ground truth scores 1.0.
  std::vector<double> iou_per_class() const;
  double miou() const;
  double fwiou() const;

 private:
  void require_nonempty() const;

  int k_;
  std::vector<std::int64_t> tp_, fp_, fn_, gt_count_;
  std::int64_t total_ = 0;
};

struct SegmentationScores {
  double fwiou = 0;
  double miou = 0;
  std::vector<double> iou;
};

SegmentationScores scores(const ConfusionAccumulator& acc);

struct TimingStats {
  double mean_seconds = 0;
  double std_seconds = 0;
  std::vector<double> samples;
};

/// Runs `infer` once untimed, then `repeats` timed passes.
TimingStats benchmark_inference(const std::function<void()>& infer, int repeats);
/// Mean and sample standard deviation of raw timings.
TimingStats summarize_timings(std::vector<double> samples);

}  // namespace segens
