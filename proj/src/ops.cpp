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

#include "segens/ops.hpp"

#include <algorithm>
#include <cmath>
#include <limits>
#include <stdexcept>
#include <string>

#include <Eigen/Core>

namespace segens {
namespace {

template <typename T>
using RowMatrix = Eigen::Matrix<T, Eigen::Dynamic, Eigen::Dynamic, Eigen::RowMajor>;
template <typename T>
using MatMap = Eigen::Map<RowMatrix<T>>;
template <typename T>
using ConstMatMap = Eigen::Map<const RowMatrix<T>>;

template <typename T>
void im2col(const T* img, int c_in, int h, int w, int k, int stride, int pad,
            int h_out, int w_out, T* cols) {
  const std::size_t plane = static_cast<std::size_t>(h_out) * w_out;
  for (int ci = 0; ci < c_in; ++ci) {
    for (int ky = 0; ky < k; ++ky) {
      for (int kx = 0; kx < k; ++kx) {
        T* row = cols + ((static_cast<std::size_t>(ci) * k + ky) * k + kx) * plane;
        for (int oy = 0; oy < h_out; ++oy) {
          const int iy = oy * stride - pad + ky;
          T* dst = row + static_cast<std::size_t>(oy) * w_out;
          if (iy < 0 || iy >= h) {
            std::fill(dst, dst + w_out, T(0));
            continue;
          }
          const T* src = img + (static_cast<std::size_t>(ci) * h + iy) * w;
          for (int ox = 0; ox < w_out; ++ox) {
            const int ix = ox * stride - pad + kx;
            dst[ox] = (ix >= 0 && ix < w) ? src[ix] : T(0);
          }
        }
      }
    }
  }
}

template <typename T>
void col2im_add(const T* cols, int c_in, int h, int w, int k, int stride,
                int pad, int h_out, int w_out, T* img) {
  const std::size_t plane = static_cast<std::size_t>(h_out) * w_out;
  for (int ci = 0; ci < c_in; ++ci) {
    for (int ky = 0; ky < k; ++ky) {
      for (int kx = 0; kx < k; ++kx) {
        const T* row =
            cols + ((static_cast<std::size_t>(ci) * k + ky) * k + kx) * plane;
        for (int oy = 0; oy < h_out; ++oy) {
          const int iy = oy * stride - pad + ky;
          if (iy < 0 || iy >= h) continue;
          const T* src = row + static_cast<std::size_t>(oy) * w_out;
          T* dst = img + (static_cast<std::size_t>(ci) * h + iy) * w;
          for (int ox = 0; ox < w_out; ++ox) {
            const int ix = ox * stride - pad + kx;
            if (ix >= 0 && ix < w) dst[ix] += src[ox];
          }
        }
      }
    }
  }
}

void require_pool_config(int k, int stride) {
  if (k != 2 || stride != 2) {
    throw std::invalid_argument("pooling supports only k=2, stride=2 (got k=" +
                                std::to_string(k) + ", stride=" +
                                std::to_string(stride) + ")");
  }
}

template <typename T>
T stable_sigmoid(T x) {
  if (x >= T(0)) return T(1) / (T(1) + std::exp(-x));
  const T e = std::exp(x);
  return e / (T(1) + e);
}

}  // namespace

template <typename T>
Tensor<T> conv2d(const Tensor<T>& input, const Tensor<T>& weight,
                 const Tensor<T>& bias, int stride, int pad) {
  const Shape& is = input.shape();
  const Shape& ws = weight.shape();
  if (ws.h != ws.w || ws.c != is.c || bias.numel() != static_cast<std::size_t>(ws.n)) {
    throw std::invalid_argument("conv2d shape mismatch: input " + is.str() +
                                " vs weight " + ws.str() + " (bias " +
                                bias.shape().str() + ")");
  }
  if (stride < 1 || pad < 0) {
    throw std::invalid_argument("conv2d requires stride >= 1 and pad >= 0");
  }
  const int k = ws.h;
  const int c_in = is.c;
  const int c_out = ws.n;
  const int h_out = (is.h + 2 * pad - k) / stride + 1;
  const int w_out = (is.w + 2 * pad - k) / stride + 1;
  if (h_out <= 0 || w_out <= 0) {
    throw std::invalid_argument("conv2d kernel larger than padded input " +
                                is.str());
  }
  const int kdim = c_in * k * k;
  const std::size_t plane = static_cast<std::size_t>(h_out) * w_out;
  const std::size_t in_plane = static_cast<std::size_t>(c_in) * is.h * is.w;
  const bool direct = (k == 1 && stride == 1 && pad == 0);

  Shape out_shape{is.n, c_out, h_out, w_out};
  std::vector<T> out(out_shape.numel());
  const bool track = grad_enabled() && (input.requires_grad() || weight.requires_grad() ||
                     bias.requires_grad());
  auto cols = std::make_shared<std::vector<T>>();
  if (!direct) cols->resize(static_cast<std::size_t>(is.n) * kdim * plane);

  ConstMatMap<T> wmat(weight.data().data(), c_out, kdim);
  const T* bptr = bias.data().data();
  for (int b = 0; b < is.n; ++b) {
    const T* img = input.data().data() + b * in_plane;
    const T* col_ptr = img;
    if (!direct) {
      T* dst = cols->data() + static_cast<std::size_t>(b) * kdim * plane;
      im2col(img, c_in, is.h, is.w, k, stride, pad, h_out, w_out, dst);
      col_ptr = dst;
    }
    ConstMatMap<T> cmat(col_ptr, kdim, plane);
    MatMap<T> omat(out.data() + static_cast<std::size_t>(b) * c_out * plane,
                   c_out, plane);
    omat.noalias() = wmat * cmat;
    for (int co = 0; co < c_out; ++co) omat.row(co).array() += bptr[co];
  }
  if (!track) cols.reset();

  auto in_st = input.storage();
  auto w_st = weight.storage();
  auto b_st = bias.storage();
  return make_result<T>(
      out_shape, std::move(out), {&input, &weight, &bias},
      [=](TensorStorage<T>& o) {
        ConstMatMap<T> wm(w_st->data.data(), c_out, kdim);
        std::vector<T> dcols(static_cast<std::size_t>(kdim) * plane);
        for (int b = 0; b < is.n; ++b) {
          ConstMatMap<T> g(o.grad.data() + static_cast<std::size_t>(b) * c_out * plane,
                           c_out, plane);
          const T* col_ptr =
              direct ? in_st->data.data() + b * in_plane
                     : cols->data() + static_cast<std::size_t>(b) * kdim * plane;
          ConstMatMap<T> cm(col_ptr, kdim, plane);
          if (w_st->requires_grad) {
            MatMap<T> gw(w_st->grad.data(), c_out, kdim);
            gw.noalias() += g * cm.transpose();
          }
          if (b_st->requires_grad) {
            // Plain loop: Eigen's vectorized sum peels by address alignment,
            // which makes the rounding vary between runs.
            const T* gp = o.grad.data() + static_cast<std::size_t>(b) * c_out * plane;
            for (int co = 0; co < c_out; ++co) {
              T acc = 0;
              for (int p = 0; p < plane; ++p) acc += gp[static_cast<std::size_t>(co) * plane + p];
              b_st->grad[co] += acc;
            }
          }
          if (in_st->requires_grad) {
            T* gin = in_st->grad.data() + b * in_plane;
            if (direct) {
              MatMap<T> gi(gin, kdim, plane);
              gi.noalias() += wm.transpose() * g;
            } else {
              MatMap<T> dc(dcols.data(), kdim, plane);
              dc.noalias() = wm.transpose() * g;
              col2im_add(dcols.data(), c_in, is.h, is.w, k, stride, pad, h_out,
                         w_out, gin);
            }
          }
        }
      });
}

template <typename T>
PoolResult<T> maxpool2d_with_indices(const Tensor<T>& input, int k,
                                     int stride) {
  require_pool_config(k, stride);
  const Shape& s = input.shape();
  if (s.h % 2 != 0 || s.w % 2 != 0) {
    throw std::invalid_argument("maxpool2d input spatial dims " + s.str() +
                                " must be divisible by 2");
  }
  Shape os{s.n, s.c, s.h / 2, s.w / 2};
  std::vector<T> out(os.numel());
  PoolIndices idx{os, 2, std::vector<std::uint8_t>(os.numel())};
  const T* src = input.data().data();
  std::size_t o = 0;
  for (int p = 0; p < s.n * s.c; ++p) {
    const T* plane = src + static_cast<std::size_t>(p) * s.h * s.w;
    for (int oy = 0; oy < os.h; ++oy) {
      for (int ox = 0; ox < os.w; ++ox, ++o) {
        const T* top = plane + static_cast<std::size_t>(2 * oy) * s.w + 2 * ox;
        const T v[4] = {top[0], top[1], top[s.w], top[s.w + 1]};
        std::uint8_t best = 0;
        for (std::uint8_t j = 1; j < 4; ++j) {
          if (v[j] > v[best]) best = j;
        }
        out[o] = v[best];
        idx.slot[o] = best;
      }
    }
  }
  auto in_st = input.storage();
  auto slots = std::make_shared<std::vector<std::uint8_t>>(idx.slot);
  Tensor<T> values = make_result<T>(
      os, std::move(out), {&input}, [=](TensorStorage<T>& g) {
        std::size_t q = 0;
        for (int p = 0; p < s.n * s.c; ++p) {
          T* plane = in_st->grad.data() + static_cast<std::size_t>(p) * s.h * s.w;
          for (int oy = 0; oy < os.h; ++oy) {
            for (int ox = 0; ox < os.w; ++ox, ++q) {
              const int dy = (*slots)[q] / 2;
              const int dx = (*slots)[q] % 2;
              plane[static_cast<std::size_t>(2 * oy + dy) * s.w + 2 * ox + dx] +=
                  g.grad[q];
            }
          }
        }
      });
  return {std::move(values), std::move(idx)};
}

template <typename T>
Tensor<T> max_unpool2d(const Tensor<T>& input, const PoolIndices& indices,
                       int k) {
  require_pool_config(k, 2);
  const Shape& s = input.shape();
  if (!(s == indices.shape) || indices.slot.size() != s.numel()) {
    throw std::invalid_argument("max_unpool2d input " + s.str() +
                                " does not match indices " +
                                indices.shape.str());
  }
  Shape os{s.n, s.c, s.h * 2, s.w * 2};
  std::vector<T> out(os.numel(), T(0));
  const T* src = input.data().data();
  auto slots = std::make_shared<std::vector<std::uint8_t>>(indices.slot);
  std::size_t q = 0;
  for (int p = 0; p < s.n * s.c; ++p) {
    T* plane = out.data() + static_cast<std::size_t>(p) * os.h * os.w;
    for (int y = 0; y < s.h; ++y) {
      for (int x = 0; x < s.w; ++x, ++q) {
        const std::uint8_t slot = (*slots)[q];
        if (slot > 3) {
          throw std::invalid_argument("pool index outside its 2x2 window");
        }
        plane[static_cast<std::size_t>(2 * y + slot / 2) * os.w + 2 * x + slot % 2] =
            src[q];
      }
    }
  }
  auto in_st = input.storage();
  return make_result<T>(os, std::move(out), {&input}, [=](TensorStorage<T>& g) {
    std::size_t r = 0;
    for (int p = 0; p < s.n * s.c; ++p) {
      const T* plane = g.grad.data() + static_cast<std::size_t>(p) * os.h * os.w;
      for (int y = 0; y < s.h; ++y) {
        for (int x = 0; x < s.w; ++x, ++r) {
          const std::uint8_t slot = (*slots)[r];
          in_st->grad[r] +=
              plane[static_cast<std::size_t>(2 * y + slot / 2) * os.w + 2 * x + slot % 2];
        }
      }
    }
  });
}

template <typename T>
Tensor<T> upsample_nearest2x(const Tensor<T>& input) {
  const Shape& s = input.shape();
  Shape os{s.n, s.c, s.h * 2, s.w * 2};
  std::vector<T> out(os.numel());
  const T* src = input.data().data();
  for (int p = 0; p < s.n * s.c; ++p) {
    const T* ip = src + static_cast<std::size_t>(p) * s.h * s.w;
    T* op = out.data() + static_cast<std::size_t>(p) * os.h * os.w;
    for (int y = 0; y < os.h; ++y) {
      for (int x = 0; x < os.w; ++x) {
        op[static_cast<std::size_t>(y) * os.w + x] =
            ip[static_cast<std::size_t>(y / 2) * s.w + x / 2];
      }
    }
  }
  auto in_st = input.storage();
  return make_result<T>(os, std::move(out), {&input}, [=](TensorStorage<T>& g) {
    for (int p = 0; p < s.n * s.c; ++p) {
      T* ip = in_st->grad.data() + static_cast<std::size_t>(p) * s.h * s.w;
      const T* op = g.grad.data() + static_cast<std::size_t>(p) * os.h * os.w;
      for (int y = 0; y < os.h; ++y) {
        for (int x = 0; x < os.w; ++x) {
          ip[static_cast<std::size_t>(y / 2) * s.w + x / 2] +=
              op[static_cast<std::size_t>(y) * os.w + x];
        }
      }
    }
  });
}

template <typename T>
Tensor<T> concat_channels(const Tensor<T>& a, const Tensor<T>& b) {
  const Shape& sa = a.shape();
  const Shape& sb = b.shape();
  if (sa.n != sb.n || sa.h != sb.h || sa.w != sb.w) {
    throw std::invalid_argument("concat_channels mismatch: " + sa.str() +
                                " vs " + sb.str());
  }
  Shape os{sa.n, sa.c + sb.c, sa.h, sa.w};
  const std::size_t pa = static_cast<std::size_t>(sa.c) * sa.h * sa.w;
  const std::size_t pb = static_cast<std::size_t>(sb.c) * sb.h * sb.w;
  std::vector<T> out;
  out.reserve(os.numel());
  for (int n = 0; n < sa.n; ++n) {
    auto ad = a.data().subspan(n * pa, pa);
    auto bd = b.data().subspan(n * pb, pb);
    out.insert(out.end(), ad.begin(), ad.end());
    out.insert(out.end(), bd.begin(), bd.end());
  }
  auto a_st = a.storage();
  auto b_st = b.storage();
  return make_result<T>(os, std::move(out), {&a, &b}, [=](TensorStorage<T>& g) {
    for (int n = 0; n < sa.n; ++n) {
      const T* gp = g.grad.data() + n * (pa + pb);
      if (a_st->requires_grad) {
        for (std::size_t i = 0; i < pa; ++i) a_st->grad[n * pa + i] += gp[i];
      }
      if (b_st->requires_grad) {
        for (std::size_t i = 0; i < pb; ++i) b_st->grad[n * pb + i] += gp[pa + i];
      }
    }
  });
}

template <typename T>
Tensor<T> slice_channels(const Tensor<T>& input, int begin, int count) {
  const Shape& s = input.shape();
  if (begin < 0 || count < 0 || begin + count > s.c) {
    throw std::invalid_argument("slice_channels range [" +
                                std::to_string(begin) + "," +
                                std::to_string(begin + count) +
                                ") outside " + s.str());
  }
  Shape os{s.n, count, s.h, s.w};
  const std::size_t hw = static_cast<std::size_t>(s.h) * s.w;
  std::vector<T> out;
  out.reserve(os.numel());
  for (int n = 0; n < s.n; ++n) {
    auto src = input.data().subspan((static_cast<std::size_t>(n) * s.c + begin) * hw,
                                    count * hw);
    out.insert(out.end(), src.begin(), src.end());
  }
  auto in_st = input.storage();
  return make_result<T>(os, std::move(out), {&input}, [=](TensorStorage<T>& g) {
    for (int n = 0; n < s.n; ++n) {
      T* dst = in_st->grad.data() + (static_cast<std::size_t>(n) * s.c + begin) * hw;
      const T* src = g.grad.data() + static_cast<std::size_t>(n) * count * hw;
      for (std::size_t i = 0; i < count * hw; ++i) dst[i] += src[i];
    }
  });
}

template <typename T>
Tensor<T> relu(const Tensor<T>& x) {
  std::vector<T> out(x.data().begin(), x.data().end());
  for (T& v : out) v = v > T(0) ? v : T(0);
  auto in_st = x.storage();
  return make_result<T>(x.shape(), std::move(out), {&x}, [=](TensorStorage<T>& g) {
    for (std::size_t i = 0; i < g.grad.size(); ++i) {
      if (in_st->data[i] > T(0)) in_st->grad[i] += g.grad[i];
    }
  });
}

template <typename T>
Tensor<T> sigmoid(const Tensor<T>& x) {
  std::vector<T> out(x.numel());
  for (std::size_t i = 0; i < out.size(); ++i) out[i] = stable_sigmoid(x.data()[i]);
  auto in_st = x.storage();
  return make_result<T>(x.shape(), std::move(out), {&x}, [=](TensorStorage<T>& g) {
    for (std::size_t i = 0; i < g.grad.size(); ++i) {
      const T s = g.data[i];
      in_st->grad[i] += g.grad[i] * s * (T(1) - s);
    }
  });
}

template <typename T>
Tensor<T> softmax_channels(const Tensor<T>& x) {
  const Shape& s = x.shape();
  if (s.c < 2) {
    throw std::invalid_argument("softmax_channels requires at least 2 channels, got " +
                                s.str());
  }
  const std::size_t hw = static_cast<std::size_t>(s.h) * s.w;
  std::vector<T> out(x.numel());
  const T* src = x.data().data();
  for (int n = 0; n < s.n; ++n) {
    const std::size_t base = static_cast<std::size_t>(n) * s.c * hw;
    for (std::size_t p = 0; p < hw; ++p) {
      T mx = src[base + p];
      for (int c = 1; c < s.c; ++c) mx = std::max(mx, src[base + c * hw + p]);
      T total = 0;
      for (int c = 0; c < s.c; ++c) {
        const T e = std::exp(src[base + c * hw + p] - mx);
        out[base + c * hw + p] = e;
        total += e;
      }
      for (int c = 0; c < s.c; ++c) out[base + c * hw + p] /= total;
    }
  }
  auto in_st = x.storage();
  return make_result<T>(s, std::move(out), {&x}, [=](TensorStorage<T>& g) {
    for (int n = 0; n < s.n; ++n) {
      const std::size_t base = static_cast<std::size_t>(n) * s.c * hw;
      for (std::size_t p = 0; p < hw; ++p) {
        T dot = 0;
        for (int c = 0; c < s.c; ++c) {
          dot += g.grad[base + c * hw + p] * g.data[base + c * hw + p];
        }
        for (int c = 0; c < s.c; ++c) {
          const std::size_t i = base + c * hw + p;
          in_st->grad[i] += g.data[i] * (g.grad[i] - dot);
        }
      }
    }
  });
}

template <typename T>
Tensor<T> cce_loss(const Tensor<T>& logits, const LabelMap& target) {
  const Shape& s = logits.shape();
  if (s.c < 2) {
    throw std::invalid_argument("cce_loss requires at least 2 channels, got " +
                                s.str());
  }
  if (target.n != s.n || target.h != s.h || target.w != s.w) {
    throw std::invalid_argument("cce_loss target (" + std::to_string(target.n) +
                                "," + std::to_string(target.h) + "," +
                                std::to_string(target.w) +
                                ") does not match logits " + s.str());
  }
  for (std::uint8_t label : target.labels) {
    if (label >= s.c) {
      throw std::invalid_argument("cce_loss class index " +
                                  std::to_string(label) + " outside [0," +
                                  std::to_string(s.c) + ")");
    }
  }
  const std::size_t hw = static_cast<std::size_t>(s.h) * s.w;
  const std::size_t pixels = static_cast<std::size_t>(s.n) * hw;
  auto probs = std::make_shared<std::vector<T>>(logits.numel());
  const T* src = logits.data().data();
  T total = 0;
  for (int n = 0; n < s.n; ++n) {
    const std::size_t base = static_cast<std::size_t>(n) * s.c * hw;
    for (std::size_t p = 0; p < hw; ++p) {
      T mx = src[base + p];
      for (int c = 1; c < s.c; ++c) mx = std::max(mx, src[base + c * hw + p]);
      T z = 0;
      for (int c = 0; c < s.c; ++c) {
        const T e = std::exp(src[base + c * hw + p] - mx);
        (*probs)[base + c * hw + p] = e;
        z += e;
      }
      for (int c = 0; c < s.c; ++c) (*probs)[base + c * hw + p] /= z;
      const int y = target.labels[n * hw + p];
      total += mx + std::log(z) - src[base + y * hw + p];
    }
  }
  const T scale = T(1) / static_cast<T>(pixels);
  auto in_st = logits.storage();
  auto labels = std::make_shared<std::vector<std::uint8_t>>(target.labels);
  return make_result<T>(
      Shape{1, 1, 1, 1}, {total * scale}, {&logits}, [=](TensorStorage<T>& g) {
        const T up = g.grad[0] * scale;
        for (int n = 0; n < s.n; ++n) {
          const std::size_t base = static_cast<std::size_t>(n) * s.c * hw;
          for (std::size_t p = 0; p < hw; ++p) {
            const int y = (*labels)[n * hw + p];
            for (int c = 0; c < s.c; ++c) {
              const std::size_t i = base + c * hw + p;
              in_st->grad[i] += up * ((*probs)[i] - (c == y ? T(1) : T(0)));
            }
          }
        }
      });
}

template <typename T>
Tensor<T> bce_loss(const Tensor<T>& c_tau, const Tensor<T>& c_s) {
  if (!(c_tau.shape() == c_s.shape())) {
    throw std::invalid_argument("bce_loss shape mismatch: " +
                                c_tau.shape().str() + " vs " +
                                c_s.shape().str());
  }
  const T eps = static_cast<T>(kBceEpsilon);
  const std::size_t count = c_s.numel();
  T total = 0;
  for (std::size_t i = 0; i < count; ++i) {
    const T t = c_tau.data()[i];
    if (!(t >= T(0) && t <= T(1))) {
      throw std::invalid_argument("bce_loss target outside [0,1]");
    }
    const T c = std::clamp(c_s.data()[i], eps, T(1) - eps);
    total -= t * std::log(c) + (T(1) - t) * std::log(T(1) - c);
  }
  const T scale = T(1) / static_cast<T>(count);
  auto t_st = c_tau.storage();
  auto s_st = c_s.storage();
  return make_result<T>(
      Shape{1, 1, 1, 1}, {total * scale}, {&c_s}, [=](TensorStorage<T>& g) {
        const T up = g.grad[0] * scale;
        for (std::size_t i = 0; i < count; ++i) {
          const T t = t_st->data[i];
          const T c = std::clamp(s_st->data[i], eps, T(1) - eps);
          s_st->grad[i] -= up * (t / c - (T(1) - t) / (T(1) - c));
        }
      });
}

template <typename T>
Tensor<T> sum(const Tensor<T>& x) {
  T total = 0;
  for (T v : x.data()) total += v;
  auto in_st = x.storage();
  return make_result<T>(Shape{1, 1, 1, 1}, {total}, {&x}, [=](TensorStorage<T>& g) {
    for (T& v : in_st->grad) v += g.grad[0];
  });
}

template <typename T>
Tensor<T> mul(const Tensor<T>& a, const Tensor<T>& b) {
  if (!(a.shape() == b.shape())) {
    throw std::invalid_argument("mul shape mismatch: " + a.shape().str() +
                                " vs " + b.shape().str());
  }
  std::vector<T> out(a.numel());
  for (std::size_t i = 0; i < out.size(); ++i) out[i] = a.data()[i] * b.data()[i];
  auto a_st = a.storage();
  auto b_st = b.storage();
  return make_result<T>(a.shape(), std::move(out), {&a, &b}, [=](TensorStorage<T>& g) {
    for (std::size_t i = 0; i < g.grad.size(); ++i) {
      if (a_st->requires_grad) a_st->grad[i] += g.grad[i] * b_st->data[i];
      if (b_st->requires_grad) b_st->grad[i] += g.grad[i] * a_st->data[i];
    }
  });
}

template <typename T>
LabelMap argmax_channels(const Tensor<T>& probs) {
  const Shape& s = probs.shape();
  LabelMap out(s.n, s.h, s.w);
  const std::size_t hw = static_cast<std::size_t>(s.h) * s.w;
  const T* src = probs.data().data();
  for (int n = 0; n < s.n; ++n) {
    const std::size_t base = static_cast<std::size_t>(n) * s.c * hw;
    for (std::size_t p = 0; p < hw; ++p) {
      int best = 0;
      if (s.c == 1) {
        best = src[base + p] >= T(0.5) ? 1 : 0;
      } else {
        for (int c = 1; c < s.c; ++c) {
          if (src[base + c * hw + p] > src[base + best * hw + p]) best = c;
        }
      }
      out.labels[n * hw + p] = static_cast<std::uint8_t>(best);
    }
  }
  return out;
}

template <typename T>
Tensor<T> stack_batch(const std::vector<Tensor<T>>& items) {
  if (items.empty()) throw std::invalid_argument("stack_batch of nothing");
  Shape s = items.front().shape();
  int n = 0;
  std::vector<T> out;
  for (const Tensor<T>& t : items) {
    const Shape& ts = t.shape();
    if (ts.c != s.c || ts.h != s.h || ts.w != s.w) {
      throw std::invalid_argument("stack_batch mismatch: " + s.str() + " vs " +
                                  ts.str());
    }
    n += ts.n;
    out.insert(out.end(), t.data().begin(), t.data().end());
  }
  s.n = n;
  return Tensor<T>(s, std::move(out));
}

#define SEGENS_INSTANTIATE_OPS(T)                                              \
  template Tensor<T> conv2d(const Tensor<T>&, const Tensor<T>&,                \
                            const Tensor<T>&, int, int);                       \
  template PoolResult<T> maxpool2d_with_indices(const Tensor<T>&, int, int);   \
  template Tensor<T> max_unpool2d(const Tensor<T>&, const PoolIndices&, int);  \
  template Tensor<T> upsample_nearest2x(const Tensor<T>&);                     \
  template Tensor<T> concat_channels(const Tensor<T>&, const Tensor<T>&);     \
  template Tensor<T> slice_channels(const Tensor<T>&, int, int);               \
  template Tensor<T> relu(const Tensor<T>&);                                   \
  template Tensor<T> sigmoid(const Tensor<T>&);                                \
  template Tensor<T> softmax_channels(const Tensor<T>&);                       \
  template Tensor<T> cce_loss(const Tensor<T>&, const LabelMap&);              \
  template Tensor<T> bce_loss(const Tensor<T>&, const Tensor<T>&);             \
  template Tensor<T> sum(const Tensor<T>&);                                    \
  template Tensor<T> mul(const Tensor<T>&, const Tensor<T>&);                  \
  template LabelMap argmax_channels(const Tensor<T>&);                         \
  template Tensor<T> stack_batch(const std::vector<Tensor<T>>&);

SEGENS_INSTANTIATE_OPS(float)
SEGENS_INSTANTIATE_OPS(double)

}  // namespace segens
