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
#include <string_view>
#include <vector>

#include "segens/ops.hpp"
#include "segens/tensor.hpp"

namespace segens {

// kPointwise is a lone 1x1 conv head, used for the mask-convolution fusion.
enum class Arch : std::uint8_t { kSegNet = 0, kUNet = 1, kPointwise = 2 };

std::string_view arch_name(Arch arch);
Arch arch_from_name(std::string_view name);

struct ModelSpec {
  Arch arch = Arch::kSegNet;
  int in_channels = 3;
  int out_channels = 1;
  int depth = 3;
  int base_width = 16;
  std::uint64_t seed = 0;

  /// Throws std::invalid_argument naming the offending field.
  void validate() const;
  int width(int stage) const { return base_width << stage; }
  /// Spatial dims must be a multiple of this.
  int required_multiple() const { return arch == Arch::kPointwise ? 1 : 1 << depth; }

  friend bool operator==(const ModelSpec&, const ModelSpec&) = default;
};

struct ConvLayer {
  std::string name;
  int kernel = 3;
  int c_in = 0;
  int c_out = 0;
  // Output resolution relative to the input: h_out = h / scale.
  int scale = 1;
};

/// Fixed conv layer list implied by a spec, in parameter order.
std::vector<ConvLayer> conv_layers(const ModelSpec& spec);

/// Optional record of SegNet/UNet internals during forward().
template <typename T>
struct ForwardTrace {
  std::vector<Tensor<T>> encoder_features;  // pre-pool, per stage
  std::vector<PoolIndices> pool_indices;    // per stage (SegNet only)
  std::vector<Tensor<T>> unpooled;          // decoder, per stage, deepest first
};

template <typename T>
class BasicNetwork {
 public:
  /// Takes ownership of `params` and marks them trainable.
  BasicNetwork(ModelSpec spec, std::vector<std::string> names,
               std::vector<Tensor<T>> params);

  const ModelSpec& spec() const { return spec_; }
  const std::vector<std::string>& names() const { return names_; }
  const std::vector<Tensor<T>>& parameters() const { return params_; }
  std::vector<Tensor<T>>& parameters() { return params_; }

  bool frozen() const { return frozen_; }
  /// Stops gradient tracking on every parameter.
  void freeze();
  void unfreeze();

  /// Head output: sigmoid probabilities for one output channel, raw logits
  /// otherwise.
  Tensor<T> forward(const Tensor<T>& batch, ForwardTrace<T>* trace = nullptr) const;

  /// Per-class probabilities: sigmoid for binary heads, softmax otherwise.
  Tensor<T> probabilities(const Tensor<T>& batch) const;

  template <typename U>
  BasicNetwork<U> cast() const {
    std::vector<Tensor<U>> out;
    for (const auto& p : params_) out.push_back(p.template cast<U>());
    BasicNetwork<U> net(spec_, names_, std::move(out));
    if (frozen_) net.freeze();
    return net;
  }

  /// Deep copy with independent parameter storage.
  BasicNetwork clone() const;

 private:
  ModelSpec spec_;
  std::vector<std::string> names_;
  std::vector<Tensor<T>> params_;
  bool frozen_ = false;
};

using Network = BasicNetwork<float>;

/// He-uniform weights, zero biases, drawn from SplitMix64(spec.seed).
template <typename T = float>
BasicNetwork<T> build(const ModelSpec& spec);

std::int64_t conv_param_count(int kernel, int c_in, int c_out);
std::int64_t param_count(const ModelSpec& spec);
template <typename T>
std::int64_t param_count(const BasicNetwork<T>& net) {
  return param_count(net.spec());
}

struct FlopsBreakdown {
  std::int64_t conv = 0;
  std::int64_t activation = 0;
  std::int64_t resample = 0;
  std::int64_t total() const { return conv + activation + resample; }
};

/// One multiply-accumulate counts as 2 FLOPs.
FlopsBreakdown flops_count(const ModelSpec& spec, int h, int w);

}  // namespace segens
