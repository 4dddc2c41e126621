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

#include <cstddef>
#include <cstdint>
#include <functional>
#include <memory>
#include <optional>
#include <span>
#include <string>
#include <vector>

namespace segens {

/// Dense NCHW extent.
struct Shape {
  int n = 0;
  int c = 0;
  int h = 0;
  int w = 0;

  std::size_t numel() const {
    return static_cast<std::size_t>(n) * c * h * w;
  }
  std::string str() const;
  friend bool operator==(const Shape&, const Shape&) = default;
};

/// Per-pixel class indices for a batch, laid out (n, h, w).
struct LabelMap {
  int n = 0;
  int h = 0;
  int w = 0;
  std::vector<std::uint8_t> labels;

  LabelMap() = default;
  LabelMap(int n_, int h_, int w_, std::uint8_t fill = 0)
      : n(n_), h(h_), w(w_),
        labels(static_cast<std::size_t>(n_) * h_ * w_, fill) {}

  std::size_t size() const { return labels.size(); }
  std::uint8_t& at(int b, int y, int x) {
    return labels[(static_cast<std::size_t>(b) * h + y) * w + x];
  }
  std::uint8_t at(int b, int y, int x) const {
    return labels[(static_cast<std::size_t>(b) * h + y) * w + x];
  }
  friend bool operator==(const LabelMap&, const LabelMap&) = default;
};

template <typename T>
struct TensorStorage {
  Shape shape;
  std::vector<T> data;
  // Empty unless requires_grad.
  std::vector<T> grad;
  bool requires_grad = false;
  // Index of the producing tape node; empty for leaves.
  std::optional<std::size_t> tape_id;
};

/// Shared handle to an NCHW buffer that may participate in reverse-mode
/// differentiation. Copies alias the same storage.
template <typename T>
class Tensor {
 public:
  Tensor() = default;
  explicit Tensor(Shape shape, T fill = T(0));
  Tensor(Shape shape, std::vector<T> values);

  static Tensor zeros(Shape shape) { return Tensor(shape); }

  bool defined() const { return storage_ != nullptr; }
  const Shape& shape() const { return storage_->shape; }
  std::size_t numel() const { return storage_->data.size(); }

  std::span<const T> data() const { return storage_->data; }
  // Writes are reserved for initializers and optimizers.
  std::span<T> mutable_data() { return storage_->data; }

  std::size_t offset(int b, int ch, int y, int x) const {
    const Shape& s = storage_->shape;
    return ((static_cast<std::size_t>(b) * s.c + ch) * s.h + y) * s.w + x;
  }
  T at(int b, int ch, int y, int x) const {
    return storage_->data[offset(b, ch, y, x)];
  }
  T& at(int b, int ch, int y, int x) {
    return storage_->data[offset(b, ch, y, x)];
  }
  T item() const;

  bool requires_grad() const { return storage_->requires_grad; }
  // Only valid on leaves.
  void set_requires_grad(bool on);
  bool has_grad() const { return !storage_->grad.empty(); }
  std::span<const T> grad() const { return storage_->grad; }
  std::span<T> mutable_grad() { return storage_->grad; }
  void zero_grad();

  std::optional<std::size_t> tape_id() const { return storage_->tape_id; }
  bool is_leaf() const { return !storage_->tape_id.has_value(); }

  /// Deep copy of the values with no gradient and no tape link.
  Tensor detach() const;

  template <typename U>
  Tensor<U> cast() const {
    std::vector<U> v(storage_->data.begin(), storage_->data.end());
    return Tensor<U>(shape(), std::move(v));
  }

  const std::shared_ptr<TensorStorage<T>>& storage() const { return storage_; }

 private:
  std::shared_ptr<TensorStorage<T>> storage_;
};

/// Linear record of executed differentiable operations. Each thread owns one
/// current tape; ops append to it whenever an input requires gradients.
template <typename T>
class Tape {
 public:
  using StoragePtr = std::shared_ptr<TensorStorage<T>>;
  using BackwardFn = std::function<void(TensorStorage<T>& out)>;

  struct Node {
    std::vector<StoragePtr> inputs;
    StoragePtr output;
    BackwardFn backward;
  };

  static Tape& current();

  std::size_t record(std::vector<StoragePtr> inputs, StoragePtr output,
                     BackwardFn backward);

  /// Seeds d(loss)/d(loss) = 1, replays nodes in reverse, then resets.
  void backward(const Tensor<T>& loss);

  /// Drops all nodes and detaches their outputs.
  void reset();

  std::size_t size() const { return nodes_.size(); }
  const std::vector<Node>& nodes() const { return nodes_; }

  // Number of backward rules run by the most recent backward().
  std::size_t last_backward_visits() const { return last_visits_; }

 private:
  std::vector<Node> nodes_;
  std::size_t last_visits_ = 0;
};

/// Disables tape recording on this thread for the guard's lifetime.
class NoGradGuard {
 public:
  NoGradGuard();
  ~NoGradGuard();
  NoGradGuard(const NoGradGuard&) = delete;
  NoGradGuard& operator=(const NoGradGuard&) = delete;

 private:
  bool previous_;
};

bool grad_enabled();

/// Creates the output storage for an op and wires it onto the current tape
/// when any input requires gradients. Returns the output tensor.
template <typename T>
Tensor<T> make_result(Shape shape, std::vector<T> values,
                      std::initializer_list<const Tensor<T>*> inputs,
                      std::function<void(TensorStorage<T>& out)> backward);

}  // namespace segens
