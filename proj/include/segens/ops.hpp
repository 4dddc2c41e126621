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
#include <vector>

#include "segens/tensor.hpp"

namespace segens {

/// Argmax slot of each 2x2 pooling window, stored as `dy * k + dx`.
struct PoolIndices {
  Shape shape;
  int k = 2;
  std::vector<std::uint8_t> slot;
};

template <typename T>
struct PoolResult {
  Tensor<T> values;
  PoolIndices indices;
};

// Clamp applied to student probabilities inside bce_loss.
inline constexpr double kBceEpsilon = 1e-7;

template <typename T>
Tensor<T> conv2d(const Tensor<T>& input, const Tensor<T>& weight,
                 const Tensor<T>& bias, int stride, int pad);

/// Only k == stride == 2 is supported; ties resolve to the lowest slot.
template <typename T>
PoolResult<T> maxpool2d_with_indices(const Tensor<T>& input, int k = 2,
                                     int stride = 2);

template <typename T>
Tensor<T> max_unpool2d(const Tensor<T>& input, const PoolIndices& indices,
                       int k = 2);

template <typename T>
Tensor<T> upsample_nearest2x(const Tensor<T>& input);

template <typename T>
Tensor<T> concat_channels(const Tensor<T>& a, const Tensor<T>& b);

template <typename T>
Tensor<T> slice_channels(const Tensor<T>& input, int begin, int count);

template <typename T>
Tensor<T> relu(const Tensor<T>& x);

template <typename T>
Tensor<T> sigmoid(const Tensor<T>& x);

template <typename T>
Tensor<T> softmax_channels(const Tensor<T>& x);

/// Mean over pixels of -log softmax(logits)[target], via log-sum-exp.
template <typename T>
Tensor<T> cce_loss(const Tensor<T>& logits, const LabelMap& target);

/// Mean over all elements of the binary cross-entropy between a fixed target
/// probability map and a predicted one. The clamp on `c_s` affects values
/// only; the gradient is passed through at the clamped point.
template <typename T>
Tensor<T> bce_loss(const Tensor<T>& c_tau, const Tensor<T>& c_s);

template <typename T>
Tensor<T> sum(const Tensor<T>& x);

template <typename T>
Tensor<T> mul(const Tensor<T>& a, const Tensor<T>& b);

/// Per-pixel argmax over channels; a single channel is read as P(class 1)
/// and thresholded at 0.5.
template <typename T>
LabelMap argmax_channels(const Tensor<T>& probs);

/// Stacks single-image tensors along the batch axis.
template <typename T>
Tensor<T> stack_batch(const std::vector<Tensor<T>>& items);

}  // namespace segens
