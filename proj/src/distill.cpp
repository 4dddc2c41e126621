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

#include "segens/distill.hpp"

#include <chrono>
#include <stdexcept>

namespace segens {
namespace {

// Target the student regresses onto for one image.
Tensor<float> student_target(const TeacherPrediction& pred, int student_channels,
                             int target_class) {
  if (student_channels == pred.class_probs.shape().c) return pred.class_probs;
  if (student_channels != 1) {
    throw std::invalid_argument("distill: student has " + std::to_string(student_channels) +
                                " channels, teacher has " +
                                std::to_string(pred.class_probs.shape().c));
  }
  return slice_channels(pred.class_probs, target_class, 1);
}

Tensor<float> student_probs(const Network& student, const Tensor<float>& batch) {
  Tensor<float> out = student.forward(batch);
  return student.spec().out_channels == 1 ? out : softmax_channels(out);
}

}  // namespace

TeacherPrediction pseudo_label(const Teacher& teacher, const Tensor<float>& batch, bool soft) {
  TeacherPrediction pred = teacher_forward(teacher, batch);
  if (soft) return pred;
  const Shape& s = pred.class_probs.shape();
  const std::size_t hw = static_cast<std::size_t>(s.h) * s.w;
  std::vector<float> onehot(s.numel(), 0.0f);
  for (int b = 0; b < s.n; ++b) {
    for (std::size_t p = 0; p < hw; ++p) {
      const int c = pred.class_map.labels[b * hw + p];
      onehot[(static_cast<std::size_t>(b) * s.c + c) * hw + p] = 1.0f;
    }
  }
  pred.class_probs = Tensor<float>(s, std::move(onehot));
  return pred;
}

LabelMap student_class_map(const Network& student, const Tensor<float>& batch,
                           int target_class) {
  NoGradGuard no_grad;
  LabelMap map = argmax_channels(student_probs(student, batch));
  if (student.spec().out_channels == 1) {
    for (auto& l : map.labels) l = l ? static_cast<std::uint8_t>(target_class) : 0;
  }
  return map;
}

double agreement(const LabelMap& a, const LabelMap& b) {
  if (a.size() != b.size() || a.h != b.h || a.w != b.w) {
    throw std::invalid_argument("agreement: class maps differ in shape");
  }
  if (a.size() == 0) return 1.0;
  std::size_t same = 0;
  for (std::size_t i = 0; i < a.size(); ++i) same += a.labels[i] == b.labels[i];
  return static_cast<double>(same) / static_cast<double>(a.size());
}

double agreement(const Network& student, const Teacher& teacher,
                 std::span<const Tensor<float>> images, int target_class) {
  std::size_t same = 0, total = 0;
  for (const Tensor<float>& x : images) {
    const LabelMap s = student_class_map(student, x, target_class);
    const LabelMap t = teacher_forward(teacher, x).class_map;
    if (s.size() != t.size()) throw std::invalid_argument("agreement: class maps differ in shape");
    for (std::size_t i = 0; i < s.size(); ++i) same += s.labels[i] == t.labels[i];
    total += s.size();
  }
  return total == 0 ? 1.0 : static_cast<double>(same) / static_cast<double>(total);
}

DistillResult distill_student(const Teacher& teacher, const DistillConfig& config,
                              std::span<const Tensor<float>> images,
                              std::span<const Tensor<float>> held_out) {
  const ModelSpec& spec = config.warm_start ? config.warm_start->spec() : config.student_spec;
  if (spec.out_channels != 1 && spec.out_channels != teacher.k_classes) {
    throw std::invalid_argument("distill: student out_channels " +
                                std::to_string(spec.out_channels) + " must be 1 or " +
                                std::to_string(teacher.k_classes));
  }
  if (config.target_class < 0 || config.target_class >= teacher.k_classes) {
    throw std::invalid_argument("distill: target_class out of range");
  }
  Network student = config.warm_start ? config.warm_start->clone() : build(spec);
  if (student.frozen()) student.unfreeze();

  // The teacher is fixed, so its targets are computed once up front.
  std::vector<Tensor<float>> targets;
  for (const Tensor<float>& x : images) {
    if (x.shape().c != spec.in_channels) {
      throw std::invalid_argument("distill: image channels do not match the student");
    }
    targets.push_back(student_target(pseudo_label(teacher, x, config.soft_targets),
                                     spec.out_channels, config.target_class)
                          .detach());
  }
  auto loss = [&](const Network& n, std::span<const int> idx) {
    std::vector<Tensor<float>> xs, ts;
    for (int i : idx) {
      xs.push_back(images[i]);
      ts.push_back(targets[i]);
    }
    const Tensor<float> c_s = student_probs(n, stack_batch(xs));
    const Tensor<float> c_tau = stack_batch(ts);
    if (!(c_s.shape() == c_tau.shape())) {
      throw std::invalid_argument("distill: teacher target " + c_tau.shape().str() +
                                  " vs student output " + c_s.shape().str());
    }
    return bce_loss(c_tau, c_s);
  };
  DistillResult result{std::move(student), {}};
  const auto held = held_out.empty() ? images : held_out;
  fit(result.student, static_cast<int>(images.size()), loss, {}, config.train,
      [&](const EpochRecord& r) {
        DistillEpoch e;
        e.epoch = r.epoch;
        e.loss = r.loss;
        e.seconds = r.seconds;
        e.agreement = agreement(result.student, teacher, held, config.target_class);
        result.report.epochs.push_back(e);
      });
  result.report.final_agreement =
      agreement(result.student, teacher, held, config.target_class);
  return result;
}

}  // namespace segens
