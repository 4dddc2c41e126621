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

#include "segens/synthdata.hpp"

#include <algorithm>
#include <cmath>
#include <functional>
#include <numbers>
#include <stdexcept>

#include "segens/rng.hpp"

namespace segens {
namespace {

struct Rgb {
  double r, g, b;
};

struct Palette {
  Rgb base;
  double jitter;
};

Palette palette_of(PlantClass c) {
  switch (c) {
    case PlantClass::kNarrowLeaf: return {{0.50, 0.68, 0.22}, 0.04};
    case PlantClass::kCanolaEarly: return {{0.22, 0.54, 0.32}, 0.03};
    case PlantClass::kCanolaLate: return {{0.20, 0.48, 0.28}, 0.03};
    case PlantClass::kKochia: return {{0.40, 0.58, 0.16}, 0.04};
    case PlantClass::kBroadleafWeed: return {{0.25, 0.50, 0.25}, 0.03};
    case PlantClass::kBackgroundSoil: break;
  }
  return {{0.42, 0.31, 0.20}, 0.05};
}

// Point-in-shape test in image coordinates.
using ShapeFn = std::function<bool(double, double)>;

struct Instance {
  PlantClass cls;
  ShapeFn inside;
  double cx, cy, radius;  // bounding circle
  Rgb color;
};

bool in_ellipse(double x, double y, double cx, double cy, double a, double b,
                double theta) {
  const double dx = x - cx;
  const double dy = y - cy;
  const double c = std::cos(theta);
  const double s = std::sin(theta);
  const double u = (dx * c + dy * s) / a;
  const double v = (-dx * s + dy * c) / b;
  return u * u + v * v <= 1.0;
}

double segment_distance(double x, double y, double x0, double y0, double x1,
                        double y1) {
  const double vx = x1 - x0, vy = y1 - y0;
  const double len2 = vx * vx + vy * vy;
  double t = len2 > 0 ? ((x - x0) * vx + (y - y0) * vy) / len2 : 0.0;
  t = std::clamp(t, 0.0, 1.0);
  const double px = x0 + t * vx - x, py = y0 + t * vy - y;
  return std::sqrt(px * px + py * py);
}

Instance make_instance(PlantClass cls, double cx, double cy, double scale,
                       const SceneSpec& spec, SplitMix64& rng) {
  const Palette pal = palette_of(cls);
  Rgb color{pal.base.r + rng.uniform(-pal.jitter, pal.jitter),
            pal.base.g + rng.uniform(-pal.jitter, pal.jitter),
            pal.base.b + rng.uniform(-pal.jitter, pal.jitter)};
  const double two_pi = 2 * std::numbers::pi;
  switch (cls) {
    case PlantClass::kNarrowLeaf: {
      struct Bar { double x1, y1; };
      const int n_bars = rng.uniform_int(2, 3);
      const double half = rng.uniform(0.8, 1.3) * scale;
      const double base_angle = rng.uniform(0, two_pi);
      std::vector<Bar> bars;
      double reach = 0;
      for (int i = 0; i < n_bars; ++i) {
        const double len = rng.uniform(8, 14) * scale;
        const double a = base_angle + i * (two_pi / n_bars) + rng.uniform(-0.4, 0.4);
        bars.push_back({cx + len * std::cos(a), cy + len * std::sin(a)});
        reach = std::max(reach, len);
      }
      return {cls,
              [=](double x, double y) {
                for (const Bar& b : bars) {
                  if (segment_distance(x, y, cx, cy, b.x1, b.y1) <= half) return true;
                }
                return false;
              },
              cx, cy, reach + half + 1, color};
    }
    case PlantClass::kCanolaEarly: {
      const double r = rng.uniform(spec.early_min_radius, spec.early_max_radius) * scale;
      const double theta = rng.uniform(0, two_pi);
      const double off = 0.8 * r;
      const double ax = cx + off * std::cos(theta), ay = cy + off * std::sin(theta);
      const double bx = cx - off * std::cos(theta), by = cy - off * std::sin(theta);
      const double minor = 0.7 * r;
      return {cls,
              [=](double x, double y) {
                return in_ellipse(x, y, ax, ay, r, minor, theta) ||
                       in_ellipse(x, y, bx, by, r, minor, theta);
              },
              cx, cy, off + r + 1, color};
    }
    case PlantClass::kCanolaLate: {
      const double big = rng.uniform(6, 10) * scale;
      const int lobes = rng.uniform_int(4, 6);
      const double phase = rng.uniform(0, two_pi);
      return {cls,
              [=](double x, double y) {
                const double dx = x - cx, dy = y - cy;
                const double rr = std::sqrt(dx * dx + dy * dy);
                const double a = std::atan2(dy, dx);
                return rr <= big * (0.75 + 0.25 * std::cos(lobes * a + phase));
              },
              cx, cy, big + 1, color};
    }
    case PlantClass::kKochia: {
      struct Dot { double x, y, r; };
      const double spread = rng.uniform(4, 7) * scale;
      const int n = rng.uniform_int(8, 14);
      std::vector<Dot> dots;
      for (int i = 0; i < n; ++i) {
        const double a = rng.uniform(0, two_pi);
        const double d = spread * std::sqrt(rng.uniform());
        dots.push_back({cx + d * std::cos(a), cy + d * std::sin(a),
                        rng.uniform(1.2, 2.2) * scale});
      }
      return {cls,
              [=](double x, double y) {
                for (const Dot& d : dots) {
                  if ((x - d.x) * (x - d.x) + (y - d.y) * (y - d.y) <= d.r * d.r) return true;
                }
                return false;
              },
              cx, cy, spread + 2.2 * scale + 1, color};
    }
    case PlantClass::kBroadleafWeed: {
      const double a = rng.uniform(6, 10) * scale;
      const double b = a * rng.uniform(0.6, 0.9);
      const double theta = rng.uniform(0, two_pi);
      return {cls,
              [=](double x, double y) { return in_ellipse(x, y, cx, cy, a, b, theta); },
              cx, cy, a + 1, color};
    }
    case PlantClass::kBackgroundSoil: break;
  }
  throw std::invalid_argument("generate_scene: soil is not an instance class");
}

bool is_crop(PlantClass c) {
  return c == PlantClass::kNarrowLeaf || c == PlantClass::kCanolaEarly ||
         c == PlantClass::kCanolaLate;
}

// Bilinear value noise on a coarse lattice.
std::vector<double> value_noise(int h, int w, int cell, SplitMix64& rng) {
  const int gh = h / cell + 2, gw = w / cell + 2;
  std::vector<double> lattice(static_cast<std::size_t>(gh) * gw);
  for (double& v : lattice) v = rng.uniform(-1, 1);
  std::vector<double> out(static_cast<std::size_t>(h) * w);
  for (int y = 0; y < h; ++y) {
    const double fy = static_cast<double>(y) / cell;
    const int iy = static_cast<int>(fy);
    const double ty = fy - iy;
    for (int x = 0; x < w; ++x) {
      const double fx = static_cast<double>(x) / cell;
      const int ix = static_cast<int>(fx);
      const double tx = fx - ix;
      const auto at = [&](int yy, int xx) { return lattice[static_cast<std::size_t>(yy) * gw + xx]; };
      const double top = at(iy, ix) * (1 - tx) + at(iy, ix + 1) * tx;
      const double bot = at(iy + 1, ix) * (1 - tx) + at(iy + 1, ix + 1) * tx;
      out[static_cast<std::size_t>(y) * w + x] = top * (1 - ty) + bot * ty;
    }
  }
  return out;
}

void gaussian_blur(std::vector<float>& img, int h, int w, double sigma) {
  const int radius = static_cast<int>(std::ceil(3 * sigma));
  std::vector<double> kernel(2 * radius + 1);
  double total = 0;
  for (int i = -radius; i <= radius; ++i) {
    kernel[i + radius] = std::exp(-0.5 * i * i / (sigma * sigma));
    total += kernel[i + radius];
  }
  for (double& k : kernel) k /= total;
  std::vector<float> tmp(img.size());
  for (int c = 0; c < 3; ++c) {
    float* plane = img.data() + static_cast<std::size_t>(c) * h * w;
    for (int y = 0; y < h; ++y) {
      for (int x = 0; x < w; ++x) {
        double acc = 0;
        for (int i = -radius; i <= radius; ++i) {
          const int xx = std::clamp(x + i, 0, w - 1);
          acc += kernel[i + radius] * plane[static_cast<std::size_t>(y) * w + xx];
        }
        tmp[static_cast<std::size_t>(y) * w + x] = static_cast<float>(acc);
      }
    }
    for (int y = 0; y < h; ++y) {
      for (int x = 0; x < w; ++x) {
        double acc = 0;
        for (int i = -radius; i <= radius; ++i) {
          const int yy = std::clamp(y + i, 0, h - 1);
          acc += kernel[i + radius] * tmp[static_cast<std::size_t>(yy) * w + x];
        }
        plane[static_cast<std::size_t>(y) * w + x] = static_cast<float>(acc);
      }
    }
  }
}

void apply_augment(std::vector<float>& img, int h, int w, const AugmentSpec& aug,
                   std::uint64_t seed) {
  const std::size_t hw = static_cast<std::size_t>(h) * w;
  if (aug.gain != 1.0) {
    for (float& v : img) v = static_cast<float>(v * aug.gain);
  }
  if (aug.shadow) {
    const ShadowBand& s = *aug.shadow;
    const double c = std::cos(s.angle), sn = std::sin(s.angle);
    const double px = s.position * w, py = 0.5 * h;
    for (int y = 0; y < h; ++y) {
      for (int x = 0; x < w; ++x) {
        const double u = (x - px) * c + (y - py) * sn;
        // One-pixel soft edge.
        const double d = std::clamp(std::abs(u) - 0.5 * s.width + 0.5, 0.0, 1.0);
        const double f = s.attenuation + (1.0 - s.attenuation) * d;
        for (int ch = 0; ch < 3; ++ch) {
          float& v = img[ch * hw + static_cast<std::size_t>(y) * w + x];
          v = static_cast<float>(v * f);
        }
      }
    }
  }
  if (aug.blur_sigma > 0) gaussian_blur(img, h, w, aug.blur_sigma);
  if (aug.noise_std > 0) {
    SplitMix64 rng(derive_seed(seed, 0xa06));
    for (float& v : img) v = static_cast<float>(v + aug.noise_std * rng.normal());
  }
  for (float& v : img) v = std::clamp(v, 0.0f, 1.0f);
}

AugmentSpec random_augment(SplitMix64& rng, bool harsh, int w) {
  AugmentSpec a;
  if (harsh) {
    a.gain = rng.uniform(0.6, 1.35);
    a.blur_sigma = rng.uniform() < 0.5 ? rng.uniform(0.3, 1.2) : 0.0;
    if (rng.uniform() < 0.5) {
      a.shadow = ShadowBand{rng.uniform(0.1, 0.9), rng.uniform(0.15, 0.4) * w,
                            rng.uniform(0.35, 0.7), rng.uniform(-0.6, 0.6)};
    }
    a.noise_std = rng.uniform(0.01, 0.03);
  } else {
    a.gain = rng.uniform(0.85, 1.15);
    a.blur_sigma = rng.uniform() < 0.3 ? rng.uniform(0.2, 0.6) : 0.0;
    if (rng.uniform() < 0.15) {
      a.shadow = ShadowBand{rng.uniform(0.1, 0.9), rng.uniform(0.1, 0.25) * w,
                            rng.uniform(0.6, 0.85), rng.uniform(-0.6, 0.6)};
    }
    a.noise_std = rng.uniform(0.005, 0.02);
  }
  return a;
}

int typical_count(PlantClass c, SplitMix64& rng) {
  switch (c) {
    case PlantClass::kNarrowLeaf: return rng.uniform_int(3, 6);
    case PlantClass::kCanolaEarly: return rng.uniform_int(4, 8);
    case PlantClass::kCanolaLate: return rng.uniform_int(2, 4);
    case PlantClass::kKochia: return rng.uniform_int(2, 4);
    case PlantClass::kBroadleafWeed: return rng.uniform_int(1, 3);
    case PlantClass::kBackgroundSoil: break;
  }
  return 0;
}

SplitMix64 image_rng(std::uint64_t seed, int index) {
  return SplitMix64(derive_seed(seed, static_cast<std::uint64_t>(index)));
}

template <typename Relabel>
Dataset assemble(std::string name, std::vector<std::string> class_names, int n,
                 std::uint64_t seed, int hw, int val_percent, int test_percent,
                 const std::function<SceneSpec(SplitMix64&, int)>& make_spec,
                 Relabel relabel) {
  if ((hw % 8) != 0 || hw <= 0) {
    throw std::invalid_argument("dataset hw " + std::to_string(hw) +
                                " must be a positive multiple of 8");
  }
  Dataset ds;
  ds.name = std::move(name);
  ds.class_names = std::move(class_names);
  ds.seed = seed;
  ds.height = ds.width = hw;
  std::vector<Sample> all;
  for (int i = 0; i < n; ++i) {
    SplitMix64 rng = image_rng(seed, i);
    SceneSpec spec = make_spec(rng, i);
    Sample s = generate_scene(spec);
    for (auto& l : s.mask.labels) l = relabel(static_cast<PlantClass>(l));
    all.push_back(std::move(s));
  }
  std::vector<int> order(n);
  for (int i = 0; i < n; ++i) order[i] = i;
  SplitMix64 split_rng(derive_seed(seed, 0x5717));
  split_rng.shuffle(order);
  const SplitSizes sz = split_sizes(n, val_percent, test_percent);
  for (int j = 0; j < n; ++j) {
    const int id = order[j];
    if (j < sz.train) {
      ds.train_ids.push_back(id);
    } else if (j < sz.train + sz.val) {
      ds.val_ids.push_back(id);
    } else {
      ds.test_ids.push_back(id);
    }
  }
  for (auto* ids : {&ds.train_ids, &ds.val_ids, &ds.test_ids}) std::sort(ids->begin(), ids->end());
  for (int id : ds.train_ids) ds.train.push_back(all[id]);
  for (int id : ds.val_ids) ds.val.push_back(all[id]);
  for (int id : ds.test_ids) ds.test.push_back(all[id]);
  return ds;
}

}  // namespace

Sample generate_scene(const SceneSpec& spec) {
  if (spec.stride < 1 || spec.height <= 0 || spec.width <= 0 ||
      spec.height % spec.stride != 0 || spec.width % spec.stride != 0) {
    throw std::invalid_argument("generate_scene: dims " + std::to_string(spec.height) +
                                "x" + std::to_string(spec.width) +
                                " must be multiples of " + std::to_string(spec.stride));
  }
  const int h = spec.height, w = spec.width;
  const std::size_t hw = static_cast<std::size_t>(h) * w;
  const double scale = std::min(h, w) / 64.0;
  SplitMix64 rng(spec.seed);

  std::vector<float> img(3 * hw);
  const Palette soil = palette_of(PlantClass::kBackgroundSoil);
  const Rgb soil_color{soil.base.r + rng.uniform(-soil.jitter, soil.jitter),
                       soil.base.g + rng.uniform(-soil.jitter, soil.jitter),
                       soil.base.b + rng.uniform(-0.03, 0.03)};
  const auto coarse = value_noise(h, w, 8, rng);
  const auto fine = value_noise(h, w, 2, rng);
  for (std::size_t p = 0; p < hw; ++p) {
    const double t = 1.0 + 0.10 * coarse[p] + 0.05 * fine[p];
    img[p] = static_cast<float>(soil_color.r * t);
    img[hw + p] = static_cast<float>(soil_color.g * t);
    img[2 * hw + p] = static_cast<float>(soil_color.b * t);
  }

  LabelMap mask(1, h, w, static_cast<std::uint8_t>(PlantClass::kBackgroundSoil));
  const double two_pi = 2 * std::numbers::pi;
  for (const auto& [cls, count] : spec.instances) {
    for (int k = 0; k < count; ++k) {
      double cx = rng.uniform(0, w), cy = rng.uniform(0, h);
      if (spec.rows && is_crop(cls)) {
        const double a = spec.rows->angle;
        const double len = std::sqrt(static_cast<double>(h * h + w * w));
        const int row = rng.uniform_int(0, std::max(1, spec.rows->rows) - 1);
        const double along = (rng.uniform() - 0.5) * len;
        const double across =
            ((row + 0.5) / std::max(1, spec.rows->rows) - 0.5) * std::min(h, w);
        for (int attempt = 0; attempt < 16; ++attempt) {
          const double t = attempt == 0 ? along : (rng.uniform() - 0.5) * len;
          const double x = 0.5 * w + t * std::cos(a) - across * std::sin(a) + rng.uniform(-2, 2);
          const double y = 0.5 * h + t * std::sin(a) + across * std::cos(a) + rng.uniform(-2, 2);
          if (x >= 0 && x < w && y >= 0 && y < h) {
            cx = x;
            cy = y;
            break;
          }
        }
      }
      Instance inst = make_instance(cls, cx, cy, scale, spec, rng);
      const int x0 = std::max(0, static_cast<int>(std::floor(inst.cx - inst.radius)));
      const int x1 = std::min(w - 1, static_cast<int>(std::ceil(inst.cx + inst.radius)));
      const int y0 = std::max(0, static_cast<int>(std::floor(inst.cy - inst.radius)));
      const int y1 = std::min(h - 1, static_cast<int>(std::ceil(inst.cy + inst.radius)));
      const double phase = rng.uniform(0, two_pi);
      for (int y = y0; y <= y1; ++y) {
        for (int x = x0; x <= x1; ++x) {
          if (!inst.inside(x + 0.5, y + 0.5)) continue;
          const std::size_t p = static_cast<std::size_t>(y) * w + x;
          // Leaf texture: gentle periodic veining.
          const double shade = 0.94 + 0.06 * std::sin(0.9 * x + 1.3 * y + phase);
          img[p] = static_cast<float>(inst.color.r * shade);
          img[hw + p] = static_cast<float>(inst.color.g * shade);
          img[2 * hw + p] = static_cast<float>(inst.color.b * shade);
          mask.labels[p] = static_cast<std::uint8_t>(cls);
        }
      }
    }
  }
  apply_augment(img, h, w, spec.augment, spec.seed);
  return {Tensor<float>(Shape{1, 3, h, w}, std::move(img)), std::move(mask)};
}

SplitSizes split_sizes(int n, int val_percent, int test_percent) {
  if (n < 0 || val_percent < 0 || test_percent < 0 || val_percent + test_percent >= 100) {
    throw std::invalid_argument("split_sizes: invalid split");
  }
  SplitSizes s;
  s.val = n * val_percent / 100;
  s.test = n * test_percent / 100;
  s.train = n - s.val - s.test;
  return s;
}

namespace {

SceneSpec binary_spec(RoleId role, SplitMix64& rng, int hw) {
  const PlantClass target = role_info(role).target;
  const std::vector<PlantClass> vegetation = {
      PlantClass::kNarrowLeaf, PlantClass::kCanolaEarly, PlantClass::kCanolaLate,
      PlantClass::kKochia, PlantClass::kBroadleafWeed};
  SceneSpec spec;
  spec.height = spec.width = hw;
  spec.seed = rng.next();
  std::vector<PlantClass> others;
  for (PlantClass c : vegetation) {
    if (c != target) others.push_back(c);
  }
  rng.shuffle(others);
  std::vector<std::pair<PlantClass, int>> groups;
  const int n_distract = target == PlantClass::kBackgroundSoil ? 3 : 2;
  for (int i = 0; i < n_distract; ++i) {
    groups.emplace_back(others[i], rng.uniform_int(1, 3));
  }
  if (role == RoleId::kKochia &&
      std::none_of(groups.begin(), groups.end(),
                   [](const auto& g) { return g.first == PlantClass::kCanolaEarly; })) {
    groups.emplace_back(PlantClass::kCanolaEarly, rng.uniform_int(2, 4));
  }
  if (target != PlantClass::kBackgroundSoil) {
    groups.emplace_back(target, typical_count(target, rng));
  }
  rng.shuffle(groups);
  spec.instances = groups;
  if (rng.uniform() < 0.5) spec.rows = RowStructure{rng.uniform(-0.5, 0.5), rng.uniform_int(3, 5)};
  spec.augment = random_augment(rng, false, hw);
  return spec;
}

SceneSpec eval_spec(EvalKind kind, SplitMix64& rng, int hw) {
  SceneSpec spec;
  spec.height = spec.width = hw;
  spec.seed = rng.next();
  std::vector<std::pair<PlantClass, int>> groups;
  if (kind == EvalKind::kMscdLike) {
    groups.emplace_back(PlantClass::kCanolaEarly, rng.uniform_int(2, 6));
    groups.emplace_back(PlantClass::kCanolaLate, rng.uniform_int(1, 3));
    groups.emplace_back(PlantClass::kNarrowLeaf, rng.uniform_int(0, 3));
    groups.emplace_back(PlantClass::kKochia, rng.uniform_int(0, 2));
    groups.emplace_back(PlantClass::kBroadleafWeed, rng.uniform_int(0, 2));
  } else {
    groups.emplace_back(PlantClass::kKochia, rng.uniform_int(2, 4));
    groups.emplace_back(PlantClass::kCanolaEarly, rng.uniform_int(1, 4));
    groups.emplace_back(PlantClass::kCanolaLate, rng.uniform_int(0, 2));
    groups.emplace_back(PlantClass::kNarrowLeaf, rng.uniform_int(1, 4));
  }
  rng.shuffle(groups);
  spec.instances = groups;
  spec.rows = RowStructure{rng.uniform(-0.8, 0.8), rng.uniform_int(3, 5)};
  spec.augment = random_augment(rng, true, hw);
  return spec;
}

}  // namespace

SceneSpec binary_scene_spec(RoleId role, int index, std::uint64_t seed, int hw) {
  SplitMix64 rng = image_rng(seed, index);
  return binary_spec(role, rng, hw);
}

SceneSpec eval_scene_spec(EvalKind kind, int index, std::uint64_t seed, int hw) {
  SplitMix64 rng = image_rng(seed, index);
  return eval_spec(kind, rng, hw);
}

Dataset make_binary_dataset(RoleId role, int n_images, std::uint64_t seed, int hw,
                            int val_percent, int test_percent) {
  if (n_images < 4) throw std::invalid_argument("make_binary_dataset: need at least 4 images");
  const BaseRole& info = role_info(role);
  const PlantClass target = info.target;
  auto make_spec = [&](SplitMix64& rng, int) { return binary_spec(role, rng, hw); };
  const auto relabel = [target](PlantClass c) -> std::uint8_t { return c == target ? 1 : 0; };
  return assemble("base_" + std::string(info.symbol),
                  {"other", std::string(info.symbol)}, n_images, seed, hw,
                  val_percent, test_percent, make_spec, relabel);
}

std::string eval_kind_name(EvalKind kind) {
  return kind == EvalKind::kKwdLike ? "KWD_like" : "MSCD_like";
}

EvalKind eval_kind_from_name(const std::string& name) {
  if (name == "KWD_like") return EvalKind::kKwdLike;
  if (name == "MSCD_like") return EvalKind::kMscdLike;
  throw std::invalid_argument("dataset kind '" + name +
                              "' unknown (valid: KWD_like, MSCD_like)");
}

int eval_class_of(EvalKind kind, RoleId role) {
  if (kind == EvalKind::kMscdLike) {
    return (role == RoleId::kCanolaEarly || role == RoleId::kCanolaLate) ? 1 : 0;
  }
  return role == RoleId::kKochia ? 1 : 0;
}

Dataset make_multiclass_eval_set(EvalKind kind, int n_images, std::uint64_t seed,
                                 int hw, int val_percent, int test_percent) {
  if (n_images < 10) throw std::invalid_argument("make_multiclass_eval_set: need at least 10 images");
  auto make_spec = [&](SplitMix64& rng, int) { return eval_spec(kind, rng, hw); };
  if (kind == EvalKind::kMscdLike) {
    const auto relabel = [](PlantClass c) -> std::uint8_t {
      return (c == PlantClass::kCanolaEarly || c == PlantClass::kCanolaLate) ? 1 : 0;
    };
    return assemble("MSCD_like", {"Non-Canola", "Canola"}, n_images, seed, hw,
                    val_percent, test_percent, make_spec, relabel);
  }
  const auto relabel = [](PlantClass c) -> std::uint8_t { return c == PlantClass::kKochia ? 1 : 0; };
  return assemble("KWD_like", {"Non-Kochia", "Kochia"}, n_images, seed, hw,
                  val_percent, test_percent, make_spec, relabel);
}

}  // namespace segens
