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

#include "segens/ensemble.hpp"

#include <fstream>
#include <set>
#include <stdexcept>

#include <json.hpp>

#include "segens/checkpoint.hpp"

namespace segens {
namespace {

LabelMap stack_labels(const std::vector<const LabelMap*>& maps) {
  LabelMap out;
  out.h = maps.front()->h;
  out.w = maps.front()->w;
  for (const LabelMap* m : maps) {
    out.n += m->n;
    out.labels.insert(out.labels.end(), m->labels.begin(), m->labels.end());
  }
  return out;
}

std::string role_list(const std::vector<RoleId>& roles) {
  std::string s;
  for (RoleId r : roles) {
    if (!s.empty()) s += ",";
    s += role_info(r).symbol;
  }
  return s;
}

void require_frozen(std::span<const BaseModel> bases) {
  for (const BaseModel& b : bases) {
    if (!b.net.frozen()) {
      throw std::invalid_argument("base model " + std::string(role_info(b.role).symbol) +
                                  " is not frozen; teacher bases must be frozen");
    }
    for (const auto& p : b.net.parameters()) {
      if (p.requires_grad()) {
        throw std::invalid_argument("base model " + std::string(role_info(b.role).symbol) +
                                    " has a parameter requiring gradients");
      }
    }
  }
}

}  // namespace

std::string_view fusion_name(FusionKind kind) {
  switch (kind) {
    case FusionKind::kABE: return "ABE";
    case FusionKind::kMCE: return "MCE";
    case FusionKind::kMSNE: return "MSNE";
    case FusionKind::kMUNE: return "MUNE";
  }
  return "?";
}

FusionKind fusion_from_name(std::string_view name) {
  for (FusionKind k : {FusionKind::kABE, FusionKind::kMCE, FusionKind::kMSNE, FusionKind::kMUNE}) {
    if (fusion_name(k) == name) return k;
  }
  throw std::invalid_argument("unknown fusion strategy '" + std::string(name) +
                              "' (valid: ABE, MCE, MSNE, MUNE)");
}

std::vector<RoleId> Teacher::roles() const {
  std::vector<RoleId> out;
  for (const BaseModel& b : bases) out.push_back(b.role);
  return out;
}

std::vector<int> Teacher::channel_classes() const {
  std::vector<int> out;
  for (const BaseModel& b : bases) out.push_back(b.target_class);
  return out;
}

BaseOutputStack stack_bases(std::span<const BaseModel> bases, const Tensor<float>& batch) {
  if (bases.empty()) throw std::invalid_argument("stack_bases: no base models");
  require_frozen(bases);
  std::set<RoleId> seen;
  for (const BaseModel& b : bases) {
    if (!seen.insert(b.role).second) {
      throw std::invalid_argument("stack_bases: duplicate role " +
                                  std::string(role_info(b.role).symbol));
    }
    if (b.net.spec().out_channels != 1) {
      throw std::invalid_argument("stack_bases: base " + std::string(role_info(b.role).symbol) +
                                  " is not a binary model");
    }
    if (b.net.spec().in_channels != bases.front().net.spec().in_channels) {
      throw std::invalid_argument("stack_bases: bases disagree on input channels");
    }
  }
  NoGradGuard no_grad;
  const Shape& s = batch.shape();
  const int n = static_cast<int>(bases.size());
  const std::size_t hw = static_cast<std::size_t>(s.h) * s.w;
  std::vector<float> out(static_cast<std::size_t>(s.n) * n * hw);
  BaseOutputStack stack;
  for (int i = 0; i < n; ++i) {
    const Tensor<float> f = bases[i].net.forward(batch);
    for (int b = 0; b < s.n; ++b) {
      std::copy_n(f.data().begin() + b * hw, hw,
                  out.begin() + (static_cast<std::size_t>(b) * n + i) * hw);
    }
    stack.roles.push_back(bases[i].role);
  }
  stack.probs = Tensor<float>(Shape{s.n, n, s.h, s.w}, std::move(out));
  return stack;
}

TeacherPrediction fuse_abe(const BaseOutputStack& stack, std::span<const int> channel_classes,
                           int k_classes, double threshold) {
  if (!(threshold >= 0.0 && threshold <= 1.0)) {
    throw std::invalid_argument("fuse_abe: threshold must lie in [0,1]");
  }
  const Shape& s = stack.probs.shape();
  if (channel_classes.size() != static_cast<std::size_t>(s.c)) {
    throw std::invalid_argument("fuse_abe: class mapping has " +
                                std::to_string(channel_classes.size()) + " entries for " +
                                std::to_string(s.c) + " channels");
  }
  for (int c : channel_classes) {
    if (c < 0 || c >= k_classes) throw std::invalid_argument("fuse_abe: class mapping out of range");
  }
  const std::size_t hw = static_cast<std::size_t>(s.h) * s.w;
  TeacherPrediction pred;
  pred.class_map = LabelMap(s.n, s.h, s.w);
  std::vector<float> probs(static_cast<std::size_t>(s.n) * k_classes * hw, 0.0f);
  const float* f = stack.probs.data().data();
  for (int b = 0; b < s.n; ++b) {
    for (std::size_t p = 0; p < hw; ++p) {
      int best = 0;
      float best_v = f[(static_cast<std::size_t>(b) * s.c) * hw + p];
      for (int i = 1; i < s.c; ++i) {
        const float v = f[(static_cast<std::size_t>(b) * s.c + i) * hw + p];
        if (v > best_v) {
          best_v = v;
          best = i;
        }
      }
      const int cls = best_v >= threshold ? channel_classes[best] : 0;
      pred.class_map.labels[b * hw + p] = static_cast<std::uint8_t>(cls);
      probs[(static_cast<std::size_t>(b) * k_classes + cls) * hw + p] = 1.0f;
    }
  }
  pred.class_probs = Tensor<float>(Shape{s.n, k_classes, s.h, s.w}, std::move(probs));
  return pred;
}

FusionStrategy build_meta(FusionKind kind, int n_models, int k_classes, std::uint64_t seed,
                          MetaArchitecture arch) {
  if (kind == FusionKind::kABE) {
    throw std::invalid_argument("build_meta: ABE is rule-based and has no meta network");
  }
  if (n_models < 2) throw std::invalid_argument("build_meta: need at least 2 base models");
  if (k_classes < 2) throw std::invalid_argument("build_meta: need at least 2 classes");
  ModelSpec spec;
  spec.arch = kind == FusionKind::kMCE    ? Arch::kPointwise
              : kind == FusionKind::kMSNE ? Arch::kSegNet
                                          : Arch::kUNet;
  spec.in_channels = n_models;
  spec.out_channels = k_classes;
  spec.depth = arch.depth;
  spec.base_width = arch.base_width;
  spec.seed = seed;
  FusionStrategy strategy;
  strategy.kind = kind;
  strategy.meta = build(spec);
  return strategy;
}

MetaReport train_meta(FusionStrategy& strategy, std::span<const BaseModel> bases,
                      int k_classes, const Dataset& ds, const TrainConfig& config,
                      const EpochHook& on_epoch) {
  if (strategy.kind == FusionKind::kABE) {
    throw std::invalid_argument("train_meta: ABE is rule-based and cannot be trained");
  }
  if (!strategy.meta) throw std::invalid_argument("train_meta: strategy has no meta network");
  require_frozen(bases);
  Network& meta = *strategy.meta;
  if (meta.spec().in_channels != static_cast<int>(bases.size()) ||
      meta.spec().out_channels != k_classes) {
    throw std::invalid_argument("train_meta: meta network shape does not match ensemble");
  }
  for (const auto* split : {&ds.train, &ds.val}) {
    for (const Sample& s : *split) {
      for (auto l : s.mask.labels) {
        if (l >= k_classes) throw std::invalid_argument("train_meta: label outside [0,K)");
      }
    }
  }
  // Bases are frozen, so their outputs can be computed once.
  std::vector<Tensor<float>> train_stacks, val_stacks;
  for (const Sample& s : ds.train) train_stacks.push_back(stack_bases(bases, s.image).probs);
  for (const Sample& s : ds.val) val_stacks.push_back(stack_bases(bases, s.image).probs);

  auto loss = [&](const Network& n, std::span<const int> idx) {
    std::vector<Tensor<float>> xs;
    std::vector<const LabelMap*> ys;
    for (int i : idx) {
      xs.push_back(train_stacks[i]);
      ys.push_back(&ds.train[i].mask);
    }
    return cce_loss(n.forward(stack_batch(xs)), stack_labels(ys));
  };
  const auto& vstacks = val_stacks.empty() ? train_stacks : val_stacks;
  const auto& vsamples = ds.val.empty() ? ds.train : ds.val;
  auto validate = [&](const Network& n) {
    NoGradGuard no_grad;
    ConfusionAccumulator acc(k_classes);
    for (std::size_t i = 0; i < vstacks.size(); ++i) {
      acc.update(argmax_channels(n.forward(vstacks[i])), vsamples[i].mask);
    }
    return acc.miou();
  };
  MetaReport report;
  report.train = fit(meta, static_cast<int>(train_stacks.size()), loss, validate, config,
                     [&](const EpochRecord& r) {
                       report.train_loss.push_back(r.loss);
                       report.val_miou.push_back(r.val_metric);
                       if (on_epoch) on_epoch(r);
                     });
  strategy.trained_roles.clear();
  for (const BaseModel& b : bases) strategy.trained_roles.push_back(b.role);
  return report;
}

TeacherPrediction teacher_forward(const Teacher& teacher, const Tensor<float>& batch) {
  NoGradGuard no_grad;
  const BaseOutputStack stack = stack_bases(teacher.bases, batch);
  if (teacher.strategy.kind == FusionKind::kABE) {
    const auto classes = teacher.channel_classes();
    return fuse_abe(stack, classes, teacher.k_classes, teacher.abe_threshold);
  }
  if (!teacher.strategy.meta) throw std::invalid_argument("teacher_forward: missing meta network");
  if (teacher.strategy.trained_roles != stack.roles) {
    throw std::invalid_argument("teacher_forward: base order [" + role_list(stack.roles) +
                                "] does not match the order the meta head was trained on [" +
                                role_list(teacher.strategy.trained_roles) + "]");
  }
  const Network& meta = *teacher.strategy.meta;
  if (meta.spec().out_channels != teacher.k_classes) {
    throw std::invalid_argument("teacher_forward: meta head emits " +
                                std::to_string(meta.spec().out_channels) + " classes, teacher has " +
                                std::to_string(teacher.k_classes));
  }
  TeacherPrediction pred;
  pred.class_probs = softmax_channels(meta.forward(stack.probs));
  pred.class_map = argmax_channels(pred.class_probs);
  return pred;
}

std::int64_t teacher_flops(const Teacher& teacher, int h, int w) {
  std::int64_t total = 0;
  for (const BaseModel& b : teacher.bases) total += flops_count(b.net.spec(), h, w).total();
  if (teacher.strategy.meta) total += flops_count(teacher.strategy.meta->spec(), h, w).total();
  return total;
}

std::int64_t teacher_param_count(const Teacher& teacher) {
  std::int64_t total = 0;
  for (const BaseModel& b : teacher.bases) total += param_count(b.net);
  if (teacher.strategy.meta) total += param_count(*teacher.strategy.meta);
  return total;
}

LabelMap single_base_class_map(const BaseModel& base, const Tensor<float>& batch,
                               double threshold) {
  NoGradGuard no_grad;
  const Tensor<float> f = base.net.forward(batch);
  const Shape& s = f.shape();
  LabelMap out(s.n, s.h, s.w);
  for (std::size_t i = 0; i < out.labels.size(); ++i) {
    out.labels[i] = f.data()[i] >= threshold ? static_cast<std::uint8_t>(base.target_class) : 0;
  }
  return out;
}

EnsembleManifest read_manifest(const std::filesystem::path& path) {
  std::ifstream in(path);
  if (!in) throw std::runtime_error("ensemble manifest not found: " + path.string());
  nlohmann::json j;
  try {
    in >> j;
  } catch (const nlohmann::json::exception& e) {
    throw std::invalid_argument("malformed ensemble manifest " + path.string() + ": " + e.what());
  }
  static const std::set<std::string> kKeys = {"classes", "bases", "strategy", "meta_checkpoint",
                                              "meta_roles", "abe_threshold"};
  for (const auto& [key, _] : j.items()) {
    if (!kKeys.count(key)) throw std::invalid_argument("ensemble manifest: unknown key '" + key + "'");
  }
  EnsembleManifest m;
  try {
    m.classes = j.at("classes").get<std::vector<std::string>>();
    for (const auto& b : j.at("bases")) {
      m.bases.push_back({role_from_symbol(b.at("role").get<std::string>()),
                         b.at("checkpoint").get<std::string>(), b.at("class").get<int>()});
    }
    m.strategy = fusion_from_name(j.value("strategy", std::string("ABE")));
    if (j.contains("meta_checkpoint")) m.meta_checkpoint = j.at("meta_checkpoint").get<std::string>();
    if (j.contains("meta_roles")) {
      for (const auto& r : j.at("meta_roles")) m.meta_roles.push_back(role_from_symbol(r.get<std::string>()));
    }
    m.abe_threshold = j.value("abe_threshold", 0.5);
  } catch (const nlohmann::json::exception& e) {
    throw std::invalid_argument("ensemble manifest " + path.string() + ": " + e.what());
  }
  if (m.classes.size() < 2) throw std::invalid_argument("ensemble manifest: need at least 2 classes");
  for (const auto& b : m.bases) {
    if (b.target_class < 0 || b.target_class >= static_cast<int>(m.classes.size())) {
      throw std::invalid_argument("ensemble manifest: class index out of range for role " +
                                  std::string(role_info(b.role).symbol));
    }
  }
  return m;
}

void write_manifest(const std::filesystem::path& path, const EnsembleManifest& m) {
  nlohmann::json j;
  j["classes"] = m.classes;
  j["bases"] = nlohmann::json::array();
  for (const auto& b : m.bases) {
    j["bases"].push_back({{"role", std::string(role_info(b.role).symbol)},
                          {"checkpoint", b.checkpoint.generic_string()},
                          {"class", b.target_class}});
  }
  j["strategy"] = std::string(fusion_name(m.strategy));
  if (m.meta_checkpoint) j["meta_checkpoint"] = m.meta_checkpoint->generic_string();
  if (!m.meta_roles.empty()) {
    j["meta_roles"] = nlohmann::json::array();
    for (RoleId r : m.meta_roles) j["meta_roles"].push_back(std::string(role_info(r).symbol));
  }
  j["abe_threshold"] = m.abe_threshold;
  if (path.has_parent_path()) std::filesystem::create_directories(path.parent_path());
  std::ofstream out(path);
  if (!out) throw std::runtime_error("cannot write manifest " + path.string());
  out << j.dump(2) << "\n";
}

Teacher load_teacher(const EnsembleManifest& m, const std::filesystem::path& base_dir) {
  Teacher t;
  t.k_classes = static_cast<int>(m.classes.size());
  t.abe_threshold = m.abe_threshold;
  for (const auto& entry : m.bases) {
    const auto path = entry.checkpoint.is_absolute() ? entry.checkpoint : base_dir / entry.checkpoint;
    if (!std::filesystem::exists(path)) {
      throw std::runtime_error("base checkpoint missing for " +
                               std::string(role_info(entry.role).symbol) + ": " + path.string());
    }
    Network net = load_checkpoint(path);
    net.freeze();
    t.bases.push_back({entry.role, std::move(net), entry.target_class});
  }
  t.strategy.kind = m.strategy;
  if (m.strategy != FusionKind::kABE) {
    if (!m.meta_checkpoint) {
      throw std::invalid_argument("ensemble manifest: strategy " +
                                  std::string(fusion_name(m.strategy)) + " needs meta_checkpoint");
    }
    const auto path = m.meta_checkpoint->is_absolute() ? *m.meta_checkpoint : base_dir / *m.meta_checkpoint;
    Network meta = load_checkpoint(path);
    meta.freeze();
    t.strategy.meta = std::move(meta);
    t.strategy.trained_roles = m.meta_roles;
  }
  return t;
}

Teacher load_teacher(const std::filesystem::path& manifest_path) {
  return load_teacher(read_manifest(manifest_path), manifest_path.parent_path());
}

}  // namespace segens
