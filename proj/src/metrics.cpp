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

#include "segens/metrics.hpp"

#include <chrono>
#include <cmath>
#include <stdexcept>
#include <string>

namespace segens {

ConfusionAccumulator::ConfusionAccumulator(int k)
    : k_(k), tp_(k, 0), fp_(k, 0), fn_(k, 0), gt_count_(k, 0) {
  if (k < 1) throw std::invalid_argument("ConfusionAccumulator: k must be >= 1");
}

void ConfusionAccumulator::update(const LabelMap& pred, const LabelMap& gt) {
  if (pred.n != gt.n || pred.h != gt.h || pred.w != gt.w ||
      pred.size() != gt.size()) {
    throw std::invalid_argument("ConfusionAccumulator: prediction and ground truth shapes differ");
  }
  for (std::size_t i = 0; i < gt.size(); ++i) {
    if (pred.labels[i] >= k_ || gt.labels[i] >= k_) {
      throw std::invalid_argument(
          "ConfusionAccumulator: class " +
          std::to_string(std::max(pred.labels[i], gt.labels[i])) +
          " outside [0," + std::to_string(k_) + ")");
    }
  }
  for (std::size_t i = 0; i < gt.size(); ++i) {
    const int p = pred.labels[i];
    const int g = gt.labels[i];
    ++gt_count_[g];
    if (p == g) {
      ++tp_[g];
    } else {
      ++fp_[p];
      ++fn_[g];
    }
  }
  total_ += static_cast<std::int64_t>(gt.size());
}

void ConfusionAccumulator::merge(const ConfusionAccumulator& other) {
  if (other.k_ != k_) throw std::invalid_argument("ConfusionAccumulator: merging different k");
  for (int c = 0; c < k_; ++c) {
    tp_[c] += other.tp_[c];
    fp_[c] += other.fp_[c];
    fn_[c] += other.fn_[c];
    gt_count_[c] += other.gt_count_[c];
  }
  total_ += other.total_;
}

void ConfusionAccumulator::require_nonempty() const {
  if (total_ == 0) throw std::logic_error("IOU of an empty accumulator");
}

std::vector<double> ConfusionAccumulator::iou_per_class() const {
  require_nonempty();
  std::vector<double> iou(k_);
  for (int c = 0; c < k_; ++c) {
    const std::int64_t denom = tp_[c] + fp_[c] + fn_[c];
    iou[c] = denom == 0 ? 1.0 : static_cast<double>(tp_[c]) / static_cast<double>(denom);
  }
  return iou;
}

double ConfusionAccumulator::miou() const {
  const auto iou = iou_per_class();
  double total = 0;
  for (double v : iou) total += v;
  return total / k_;
}

double ConfusionAccumulator::fwiou() const {
  const auto iou = iou_per_class();
  double total = 0;
  for (int c = 0; c < k_; ++c) {
    total += static_cast<double>(gt_count_[c]) / static_cast<double>(total_) * iou[c];
  }
  return total;
}

SegmentationScores scores(const ConfusionAccumulator& acc) {
  return {acc.fwiou(), acc.miou(), acc.iou_per_class()};
}

TimingStats benchmark_inference(const std::function<void()>& infer, int repeats) {
  if (repeats < 3) throw std::invalid_argument("benchmark_inference: repeats must be >= 3");
  infer();
  TimingStats stats;
  for (int i = 0; i < repeats; ++i) {
    const auto t0 = std::chrono::steady_clock::now();
    infer();
    const auto t1 = std::chrono::steady_clock::now();
    stats.samples.push_back(std::chrono::duration<double>(t1 - t0).count());
  }
  return summarize_timings(std::move(stats.samples));
}

TimingStats summarize_timings(std::vector<double> samples) {
  TimingStats stats;
  stats.samples = std::move(samples);
  const auto n = static_cast<double>(stats.samples.size());
  if (stats.samples.empty()) return stats;
  double mean = 0;
  for (double s : stats.samples) mean += s;
  mean /= n;
  double var = 0;
  for (double s : stats.samples) var += (s - mean) * (s - mean);
  stats.mean_seconds = mean;
  stats.std_seconds = stats.samples.size() > 1 ? std::sqrt(var / (n - 1)) : 0.0;
  return stats;
}

}  // namespace segens
