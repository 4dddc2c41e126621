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
#include <span>
#include <stdexcept>
#include <vector>

#include "segens/metrics.hpp"
#include "segens/nets.hpp"
#include "segens/synthdata.hpp"

namespace segens {

/// Raised when a loss becomes NaN or infinite.
class NumericError : public std::runtime_error {
 public:
  using std::runtime_error::runtime_error;
};

struct TrainConfig {
  int epochs = 30;
  double lr = 0.001;
  int batch = 2;
  std::uint64_t seed = 0;
};

struct EpochRecord {
  int epoch = 0;  // 1-based
  double loss = 0;
  double val_metric = 0;
  double seconds = 0;
};

struct TrainReport {
  std::vector<EpochRecord> epochs;
  int best_epoch = 0;  // 0 when no epoch ran
  double best_val = 0;
};

/// Builds the scalar loss for the samples at `indices`, recorded on the
/// current tape.
using BatchLossFn =
    std::function<Tensor<float>(const Network& net, std::span<const int> indices)>;
/// Higher is better. May be empty, in which case the last epoch is kept.
using ValidateFn = std::function<double(const Network& net)>;
using EpochHook = std::function<void(const EpochRecord&)>;

/// Mini-batch Adam over a shuffled sample index range. With a validator the
/// parameters of the best-scoring epoch are restored on return.
TrainReport fit(Network& net, int n_samples, const BatchLossFn& loss,
                const ValidateFn& validate, const TrainConfig& config,
                const EpochHook& on_epoch = {});

/// Runs `predict` over each sample and tallies the confusion counts.
ConfusionAccumulator evaluate(const std::function<LabelMap(const Tensor<float>&)>& predict,
                              std::span<const Sample> samples, int k);

Tensor<float> mask_as_probability(const LabelMap& mask);

struct BaseTrainResult {
  Network net;
  TrainReport report;
};

/// Trains a binary base model with BCE against the {0,1} masks, keeping the
/// checkpoint with the best validation IOU of class 1.
BaseTrainResult train_base(const Dataset& ds, const ModelSpec& spec,
                           const TrainConfig& config, const EpochHook& on_epoch = {});

}  // namespace segens
