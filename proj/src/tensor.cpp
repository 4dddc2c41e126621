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

#include "segens/tensor.hpp"

#include <stdexcept>

namespace segens {
namespace {
thread_local bool g_grad_enabled = true;
}  // namespace

NoGradGuard::NoGradGuard() : previous_(g_grad_enabled) { g_grad_enabled = false; }
NoGradGuard::~NoGradGuard() { g_grad_enabled = previous_; }
bool grad_enabled() { return g_grad_enabled; }

std::string Shape::str() const {
  return "(" + std::to_string(n) + "," + std::to_string(c) + "," +
         std::to_string(h) + "," + std::to_string(w) + ")";
}

template <typename T>
Tensor<T>::Tensor(Shape shape, T fill)
    : storage_(std::make_shared<TensorStorage<T>>()) {
  if (shape.n < 0 || shape.c < 0 || shape.h < 0 || shape.w < 0) {
    throw std::invalid_argument("negative tensor extent " + shape.str());
  }
  storage_->shape = shape;
  storage_->data.assign(shape.numel(), fill);
}

template <typename T>
Tensor<T>::Tensor(Shape shape, std::vector<T> values)
    : storage_(std::make_shared<TensorStorage<T>>()) {
  if (values.size() != shape.numel()) {
    throw std::invalid_argument("tensor data length " +
                                std::to_string(values.size()) +
                                " does not match shape " + shape.str());
  }
  storage_->shape = shape;
  storage_->data = std::move(values);
}

template <typename T>
T Tensor<T>::item() const {
  if (numel() != 1) {
    throw std::invalid_argument("item() on non-scalar tensor " +
                                shape().str());
  }
  return storage_->data[0];
}

template <typename T>
void Tensor<T>::set_requires_grad(bool on) {
  if (!is_leaf()) {
    throw std::logic_error("set_requires_grad on a non-leaf tensor");
  }
  storage_->requires_grad = on;
  if (on) {
    storage_->grad.assign(storage_->data.size(), T(0));
  } else {
    storage_->grad.clear();
  }
}

template <typename T>
void Tensor<T>::zero_grad() {
  std::fill(storage_->grad.begin(), storage_->grad.end(), T(0));
}

template <typename T>
Tensor<T> Tensor<T>::detach() const {
  return Tensor<T>(shape(), storage_->data);
}

template <typename T>
Tape<T>& Tape<T>::current() {
  thread_local Tape<T> tape;
  return tape;
}

template <typename T>
std::size_t Tape<T>::record(std::vector<StoragePtr> inputs, StoragePtr output,
                            BackwardFn backward) {
  const std::size_t id = nodes_.size();
  output->tape_id = id;
  nodes_.push_back(Node{std::move(inputs), std::move(output),
                        std::move(backward)});
  return id;
}

template <typename T>
void Tape<T>::backward(const Tensor<T>& loss) {
  if (loss.numel() != 1) {
    throw std::invalid_argument("backward() requires a scalar loss, got " +
                                loss.shape().str());
  }
  const auto& root = loss.storage();
  if (!root->requires_grad) {
    throw std::invalid_argument(
        "backward() on a loss that does not depend on any parameter");
  }
  root->grad.assign(1, T(1));
  last_visits_ = 0;
  if (root->tape_id) {
    const std::size_t top = *root->tape_id;
    for (std::size_t i = top + 1; i-- > 0;) {
      Node& node = nodes_[i];
      node.backward(*node.output);
      ++last_visits_;
    }
  }
  reset();
}

template <typename T>
void Tape<T>::reset() {
  for (Node& node : nodes_) {
    node.output->tape_id.reset();
    node.output->requires_grad = false;
    node.output->grad.clear();
    node.output->grad.shrink_to_fit();
  }
  nodes_.clear();
}

template <typename T>
Tensor<T> make_result(Shape shape, std::vector<T> values,
                      std::initializer_list<const Tensor<T>*> inputs,
                      std::function<void(TensorStorage<T>& out)> backward) {
  Tensor<T> out(shape, std::move(values));
  if (!g_grad_enabled) return out;
  bool any = false;
  for (const Tensor<T>* in : inputs) {
    if (in->requires_grad()) {
      any = true;
      break;
    }
  }
  if (!any) return out;
  auto& st = out.storage();
  st->requires_grad = true;
  st->grad.assign(st->data.size(), T(0));
  std::vector<typename Tape<T>::StoragePtr> in_storage;
  in_storage.reserve(inputs.size());
  for (const Tensor<T>* in : inputs) in_storage.push_back(in->storage());
  Tape<T>::current().record(std::move(in_storage), st, std::move(backward));
  return out;
}

template class Tensor<float>;
template class Tensor<double>;
template class Tape<float>;
template class Tape<double>;
template Tensor<float> make_result(Shape, std::vector<float>,
                                   std::initializer_list<const Tensor<float>*>,
                                   std::function<void(TensorStorage<float>&)>);
template Tensor<double> make_result(
    Shape, std::vector<double>, std::initializer_list<const Tensor<double>*>,
    std::function<void(TensorStorage<double>&)>);

}  // namespace segens
