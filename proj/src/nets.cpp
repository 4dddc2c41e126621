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

#include "segens/nets.hpp"

#include <cmath>
#include <stdexcept>

#include "segens/rng.hpp"

namespace segens {
namespace {

template <typename T>
struct ParamCursor {
  const std::vector<Tensor<T>>& params;
  std::size_t next = 0;

  Tensor<T> conv(const Tensor<T>& x, int pad) {
    const Tensor<T>& w = params[next++];
    const Tensor<T>& b = params[next++];
    return conv2d(x, w, b, 1, pad);
  }
  Tensor<T> conv_relu(const Tensor<T>& x) { return relu(conv(x, 1)); }
};

}  // namespace

std::string_view arch_name(Arch arch) {
  switch (arch) {
    case Arch::kSegNet: return "SEGNET";
    case Arch::kUNet: return "UNET";
    case Arch::kPointwise: return "POINTWISE";
  }
  return "?";
}

Arch arch_from_name(std::string_view name) {
  if (name == "SEGNET") return Arch::kSegNet;
  if (name == "UNET") return Arch::kUNet;
  if (name == "POINTWISE") return Arch::kPointwise;
  throw std::invalid_argument("arch: unknown architecture '" + std::string(name) +
                              "' (expected SEGNET, UNET or POINTWISE)");
}

void ModelSpec::validate() const {
  if (static_cast<std::uint8_t>(arch) > 2) {
    throw std::invalid_argument("arch: invalid value");
  }
  if (in_channels < 1) throw std::invalid_argument("in_channels: must be >= 1");
  if (out_channels < 1) throw std::invalid_argument("out_channels: must be >= 1");
  if (arch == Arch::kPointwise) return;
  if (depth < 1 || depth > 8) throw std::invalid_argument("depth: must be in [1,8]");
  if (base_width < 1) throw std::invalid_argument("base_width: must be >= 1");
  if ((static_cast<long long>(base_width) << (depth - 1)) > 4096) {
    throw std::invalid_argument("base_width: too wide for depth");
  }
}

std::vector<ConvLayer> conv_layers(const ModelSpec& spec) {
  spec.validate();
  std::vector<ConvLayer> layers;
  if (spec.arch == Arch::kPointwise) {
    layers.push_back({"head", 1, spec.in_channels, spec.out_channels, 1});
    return layers;
  }
  int c_in = spec.in_channels;
  for (int s = 0; s < spec.depth; ++s) {
    const std::string stage = "enc" + std::to_string(s);
    layers.push_back({stage + ".conv0", 3, c_in, spec.width(s), 1 << s});
    layers.push_back({stage + ".conv1", 3, spec.width(s), spec.width(s), 1 << s});
    c_in = spec.width(s);
  }
  const int skip = spec.arch == Arch::kUNet ? 2 : 1;
  for (int s = spec.depth - 1; s >= 0; --s) {
    const std::string stage = "dec" + std::to_string(s);
    const int next = s > 0 ? spec.width(s - 1) : spec.width(0);
    layers.push_back({stage + ".conv0", 3, skip * spec.width(s), spec.width(s), 1 << s});
    layers.push_back({stage + ".conv1", 3, spec.width(s), next, 1 << s});
  }
  layers.push_back({"head", 1, spec.width(0), spec.out_channels, 1});
  return layers;
}

template <typename T>
BasicNetwork<T>::BasicNetwork(ModelSpec spec, std::vector<std::string> names,
                              std::vector<Tensor<T>> params)
    : spec_(spec), names_(std::move(names)), params_(std::move(params)) {
  const auto layers = conv_layers(spec_);
  if (params_.size() != 2 * layers.size() || names_.size() != params_.size()) {
    throw std::invalid_argument("network parameter list does not match spec " +
                                std::string(arch_name(spec_.arch)));
  }
  for (std::size_t i = 0; i < layers.size(); ++i) {
    const ConvLayer& l = layers[i];
    const Shape ws{l.c_out, l.c_in, l.kernel, l.kernel};
    const Shape bs{1, l.c_out, 1, 1};
    if (!(params_[2 * i].shape() == ws) || !(params_[2 * i + 1].shape() == bs)) {
      throw std::invalid_argument("parameter " + names_[2 * i] +
                                  " has shape " + params_[2 * i].shape().str() +
                                  ", expected " + ws.str());
    }
  }
  unfreeze();
}

template <typename T>
void BasicNetwork<T>::freeze() {
  for (auto& p : params_) p.set_requires_grad(false);
  frozen_ = true;
}

template <typename T>
void BasicNetwork<T>::unfreeze() {
  for (auto& p : params_) {
    if (!p.requires_grad()) p.set_requires_grad(true);
  }
  frozen_ = false;
}

template <typename T>
BasicNetwork<T> BasicNetwork<T>::clone() const {
  std::vector<Tensor<T>> copy;
  for (const auto& p : params_) copy.push_back(p.detach());
  BasicNetwork net(spec_, names_, std::move(copy));
  if (frozen_) net.freeze();
  return net;
}

template <typename T>
Tensor<T> BasicNetwork<T>::forward(const Tensor<T>& batch,
                                   ForwardTrace<T>* trace) const {
  const Shape& s = batch.shape();
  if (s.c != spec_.in_channels) {
    throw std::invalid_argument("forward: batch has " + std::to_string(s.c) +
                                " channels, network expects " +
                                std::to_string(spec_.in_channels));
  }
  const int mult = spec_.required_multiple();
  if (s.h % mult != 0 || s.w % mult != 0) {
    throw std::invalid_argument("forward: spatial dims " + std::to_string(s.h) +
                                "x" + std::to_string(s.w) +
                                " must be multiples of " + std::to_string(mult));
  }
  ParamCursor<T> cur{params_};
  Tensor<T> x = batch;
  if (spec_.arch != Arch::kPointwise) {
    std::vector<Tensor<T>> features;
    std::vector<PoolIndices> indices;
    for (int st = 0; st < spec_.depth; ++st) {
      x = cur.conv_relu(x);
      x = cur.conv_relu(x);
      features.push_back(x);
      auto pooled = maxpool2d_with_indices(x);
      x = pooled.values;
      indices.push_back(std::move(pooled.indices));
    }
    for (int st = spec_.depth - 1; st >= 0; --st) {
      if (spec_.arch == Arch::kSegNet) {
        x = max_unpool2d(x, indices[st]);
      } else {
        x = concat_channels(upsample_nearest2x(x), features[st]);
      }
      if (trace) trace->unpooled.push_back(x);
      x = cur.conv_relu(x);
      x = cur.conv_relu(x);
    }
    if (trace) {
      trace->encoder_features = features;
      if (spec_.arch == Arch::kSegNet) trace->pool_indices = indices;
    }
  }
  Tensor<T> head = cur.conv(x, 0);
  return spec_.out_channels == 1 ? sigmoid(head) : head;
}

template <typename T>
Tensor<T> BasicNetwork<T>::probabilities(const Tensor<T>& batch) const {
  Tensor<T> out = forward(batch);
  return spec_.out_channels == 1 ? out : softmax_channels(out);
}

template <typename T>
BasicNetwork<T> build(const ModelSpec& spec) {
  const auto layers = conv_layers(spec);
  SplitMix64 rng(spec.seed);
  std::vector<std::string> names;
  std::vector<Tensor<T>> params;
  for (const ConvLayer& l : layers) {
    Tensor<T> w(Shape{l.c_out, l.c_in, l.kernel, l.kernel});
    const double bound = std::sqrt(6.0 / (l.c_in * l.kernel * l.kernel));
    for (T& v : w.mutable_data()) v = static_cast<T>(rng.uniform(-bound, bound));
    names.push_back(l.name + ".weight");
    params.push_back(std::move(w));
    names.push_back(l.name + ".bias");
    params.emplace_back(Shape{1, l.c_out, 1, 1});
  }
  return BasicNetwork<T>(spec, std::move(names), std::move(params));
}

std::int64_t conv_param_count(int kernel, int c_in, int c_out) {
  return static_cast<std::int64_t>(kernel) * kernel * c_in * c_out + c_out;
}

std::int64_t param_count(const ModelSpec& spec) {
  std::int64_t total = 0;
  for (const ConvLayer& l : conv_layers(spec)) {
    total += conv_param_count(l.kernel, l.c_in, l.c_out);
  }
  return total;
}

FlopsBreakdown flops_count(const ModelSpec& spec, int h, int w) {
  const int mult = spec.required_multiple();
  if (h <= 0 || w <= 0 || h % mult != 0 || w % mult != 0) {
    throw std::invalid_argument("flops_count: spatial dims " + std::to_string(h) +
                                "x" + std::to_string(w) +
                                " must be positive multiples of " +
                                std::to_string(mult));
  }
  FlopsBreakdown f;
  for (const ConvLayer& l : conv_layers(spec)) {
    const std::int64_t px = static_cast<std::int64_t>(h / l.scale) * (w / l.scale);
    f.conv += 2LL * l.kernel * l.kernel * l.c_in * l.c_out * px;
    f.activation += 2LL * l.c_out * px;
  }
  if (spec.arch != Arch::kPointwise) {
    for (int s = 0; s < spec.depth; ++s) {
      const std::int64_t pooled = static_cast<std::int64_t>(h >> (s + 1)) * (w >> (s + 1));
      const std::int64_t restored = static_cast<std::int64_t>(h >> s) * (w >> s);
      f.resample += spec.width(s) * pooled;    // max-pool comparisons
      f.resample += spec.width(s) * restored;  // unpool / upsample copies
    }
  }
  return f;
}

template class BasicNetwork<float>;
template class BasicNetwork<double>;
template BasicNetwork<float> build<float>(const ModelSpec&);
template BasicNetwork<double> build<double>(const ModelSpec&);

}  // namespace segens
