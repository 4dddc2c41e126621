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

#include "segens/adam.hpp"

#include <cmath>

#include <gtest/gtest.h>

#include "oracles.hpp"
#include "segens/ops.hpp"

namespace segens {
namespace {

Tensor<float> scalar_param(float v) {
  Tensor<float> t({1, 1, 1, 1}, v);
  t.set_requires_grad(true);
  return t;
}

TEST(Adam, ZeroGradientLeavesParametersUnchanged) {
  auto p = scalar_param(0.75f);
  Adam opt({p});
  for (int i = 0; i < 3; ++i) opt.step();
  EXPECT_EQ(p.item(), 0.75f);
  EXPECT_EQ(opt.steps(), 3);
}

TEST(Adam, FirstStepMatchesHandComputation) {
  auto p = scalar_param(1.0f);
  Adam opt({p});
  p.mutable_grad()[0] = 1.0f;
  opt.step();
  // m_hat = 1, v_hat = 1, so the update is lr / (1 + eps).
  const double expected = 1.0 - 0.001 / (1.0 + 1e-8);
  EXPECT_NEAR(p.item(), expected, 1e-6);
  EXPECT_NEAR(1.0 - p.item(), 0.001, 1e-6);
  EXPECT_EQ(p.grad()[0], 0.0f);
}

TEST(Adam, MatchesScalarRecurrenceOverManySteps) {
  SplitMix64 g(31);
  for (int trial = 0; trial < 50; ++trial) {
    const double w0 = g.uniform(-2, 2);
    auto p = scalar_param(static_cast<float>(w0));
    Adam opt({p});
    oracle::AdamScalar ref;
    double w = static_cast<float>(w0);
    for (int s = 0; s < 20; ++s) {
      const float grad = static_cast<float>(g.uniform(-3, 3));
      p.mutable_grad()[0] = grad;
      opt.step();
      w = static_cast<float>(ref.step(w, grad));
      ASSERT_NEAR(p.item(), w, 1e-6) << "trial " << trial << " step " << s;
    }
  }
}

TEST(Adam, DescendsQuadratic) {
  auto w = scalar_param(0.0f);
  Adam opt({w});
  const double start = std::abs(w.item() - 3.0);
  for (int i = 0; i < 50; ++i) {
    // f(w) = (w - 3)^2, so the gradient is 2(w - 3).
    w.mutable_grad()[0] = 2.0f * (w.item() - 3.0f);
    opt.step();
  }
  EXPECT_LT(std::abs(w.item() - 3.0), start);
}

TEST(Adam, MomentsAreShapeCongruentAndStepCountIncreases) {
  Tensor<float> a({2, 3, 4, 4});
  Tensor<float> b({1, 5, 1, 1});
  a.set_requires_grad(true);
  b.set_requires_grad(true);
  Adam opt({a, b});
  ASSERT_EQ(opt.first_moment().size(), 2u);
  EXPECT_EQ(opt.first_moment()[0].size(), a.numel());
  EXPECT_EQ(opt.second_moment()[1].size(), b.numel());
  for (int i = 1; i <= 4; ++i) {
    opt.step();
    EXPECT_EQ(opt.steps(), i);
  }
}

TEST(Adam, RejectsFrozenAndMissingGradients) {
  Tensor<float> frozen({1, 1, 1, 1});
  EXPECT_THROW(Adam opt({frozen}), std::invalid_argument);
  auto p = scalar_param(1.0f);
  Adam opt({p});
  p.set_requires_grad(false);
  EXPECT_THROW(opt.step(), std::logic_error);
}

}  // namespace
}  // namespace segens
