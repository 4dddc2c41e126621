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

#include "segens/training.hpp"

#include <chrono>
#include <cmath>
#include <limits>

#include "segens/adam.hpp"
#include "segens/rng.hpp"

namespace segens {

TrainReport fit(Network& net, int n_samples, const BatchLossFn& loss,
                const ValidateFn& validate, const TrainConfig& config,
                const EpochHook& on_epoch) {
  if (config.batch < 1) throw std::invalid_argument("batch must be >= 1");
  if (config.epochs < 0) throw std::invalid_argument("epochs must be >= 0");
  if (n_samples < 1 && config.epochs > 0) {
    throw std::invalid_argument("cannot train on an empty sample set");
  }
  TrainReport report;
  if (config.epochs == 0) return report;
  if (net.frozen()) throw std::invalid_argument("cannot train a frozen network");

  Adam adam(net.parameters(), AdamConfig{.lr = config.lr});
  auto& tape = Tape<float>::current();
  std::vector<Tensor<float>> best;
  report.best_val = -std::numeric_limits<double>::infinity();
  std::vector<int> order(n_samples);
  for (int epoch = 1; epoch <= config.epochs; ++epoch) {
    const auto t0 = std::chrono::steady_clock::now();
    for (int i = 0; i < n_samples; ++i) order[i] = i;
    SplitMix64 rng(derive_seed(config.seed, static_cast<std::uint64_t>(epoch)));
    rng.shuffle(order);
    double total = 0;
    for (int start = 0; start < n_samples; start += config.batch) {
      const int count = std::min(config.batch, n_samples - start);
      tape.reset();
      Tensor<float> l = loss(net, std::span<const int>(order).subspan(start, count));
      const double value = l.item();
      if (!std::isfinite(value)) {
        tape.reset();
        throw NumericError("non-finite loss at epoch " + std::to_string(epoch));
      }
      tape.backward(l);
      adam.step();
      total += value * count;
    }
    EpochRecord rec;
    rec.epoch = epoch;
    rec.loss = total / n_samples;
    if (validate) {
      rec.val_metric = validate(net);
      if (rec.val_metric > report.best_val) {
        report.best_val = rec.val_metric;
        report.best_epoch = epoch;
        best.clear();
        for (const auto& p : net.parameters()) best.push_back(p.detach());
      }
    }
    rec.seconds = std::chrono::duration<double>(std::chrono::steady_clock::now() - t0).count();
    report.epochs.push_back(rec);
    if (on_epoch) on_epoch(rec);
  }
  if (validate && !best.empty()) {
    for (std::size_t i = 0; i < best.size(); ++i) {
      auto dst = net.parameters()[i].mutable_data();
      std::copy(best[i].data().begin(), best[i].data().end(), dst.begin());
    }
  } else {
    report.best_epoch = config.epochs;
    report.best_val = report.epochs.back().val_metric;
  }
  return report;
}

ConfusionAccumulator evaluate(const std::function<LabelMap(const Tensor<float>&)>& predict,
                              std::span<const Sample> samples, int k) {
  NoGradGuard no_grad;
  ConfusionAccumulator acc(k);
  for (const Sample& s : samples) acc.update(predict(s.image), s.mask);
  return acc;
}

Tensor<float> mask_as_probability(const LabelMap& mask) {
  std::vector<float> v(mask.labels.begin(), mask.labels.end());
  return Tensor<float>(Shape{mask.n, 1, mask.h, mask.w}, std::move(v));
}

BaseTrainResult train_base(const Dataset& ds, const ModelSpec& spec,
                           const TrainConfig& config, const EpochHook& on_epoch) {
  if (spec.out_channels != 1) {
    throw std::invalid_argument("base models have one output channel");
  }
  Network net = build(spec);
  std::vector<Tensor<float>> targets;
  for (const Sample& s : ds.train) targets.push_back(mask_as_probability(s.mask));
  auto loss = [&](const Network& n, std::span<const int> idx) {
    std::vector<Tensor<float>> xs, ys;
    for (int i : idx) {
      xs.push_back(ds.train[i].image);
      ys.push_back(targets[i]);
    }
    return bce_loss(stack_batch(ys), n.forward(stack_batch(xs)));
  };
  const std::span<const Sample> val =
      ds.val.empty() ? std::span<const Sample>(ds.train) : std::span<const Sample>(ds.val);
  auto validate = [&](const Network& n) {
    auto acc = evaluate([&](const Tensor<float>& x) { return argmax_channels(n.forward(x)); },
                        val, 2);
    return acc.iou_per_class()[1];
  };
  TrainReport report = fit(net, static_cast<int>(ds.train.size()), loss, validate, config, on_epoch);
  return {std::move(net), std::move(report)};
}

}  // namespace segens
