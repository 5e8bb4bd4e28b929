// Copyright 2026 the raniqa authors. All rights reserved.
//
// Licensed under the Apache License, Version 2.0 (the "License");
// you may not use this file except in compliance with the License.
// You may obtain a copy of the License at
//
//    http://www.apache.org/licenses/LICENSE-2.0
//
// Unless required by applicable law or agreed to in writing, software
// distributed under the License is distributed on an "AS IS" BASIS,
// WITHOUT WARRANTIES OR CONDITIONS OF ANY KIND, either express or implied.
// See the License for the specific language governing permissions and
// limitations under the License.

#include "raniqa/ops.hpp"

#include <algorithm>
#include <cmath>
#include <cstring>

namespace raniqa {

namespace {

// Row-major GEMM kernels. Each output row is owned by a single thread and
// accumulated in a fixed order, so results do not depend on thread count.

// C(M x N) += A(M x K) * B(K x N)
template <typename T>
void gemm_nn(int64_t m, int64_t n, int64_t k, const T* a, const T* b, T* c) {
#pragma omp parallel for schedule(static) if (m * n * k > (1 << 14))
  for (int64_t i = 0; i < m; ++i) {
    const T* arow = a + i * k;
    T* crow = c + i * n;
    for (int64_t p = 0; p < k; ++p) {
      const T av = arow[p];
      const T* brow = b + p * n;
      for (int64_t j = 0; j < n; ++j) crow[j] += av * brow[j];
    }
  }
}

// C(M x N) += A(M x K) * B(N x K)^T
template <typename T>
void gemm_nt(int64_t m, int64_t n, int64_t k, const T* a, const T* b, T* c) {
#pragma omp parallel for schedule(static) if (m * n * k > (1 << 14))
  for (int64_t i = 0; i < m; ++i) {
    const T* arow = a + i * k;
    T* crow = c + i * n;
    for (int64_t j = 0; j < n; ++j) {
      const T* brow = b + j * k;
      T acc = 0;
      for (int64_t p = 0; p < k; ++p) acc += arow[p] * brow[p];
      crow[j] += acc;
    }
  }
}

// C(M x N) += A(K x M)^T * B(K x N)
template <typename T>
void gemm_tn(int64_t m, int64_t n, int64_t k, const T* a, const T* b, T* c) {
#pragma omp parallel for schedule(static) if (m * n * k > (1 << 14))
  for (int64_t i = 0; i < m; ++i) {
    T* crow = c + i * n;
    for (int64_t p = 0; p < k; ++p) {
      const T av = a[p * m + i];
      const T* brow = b + p * n;
      for (int64_t j = 0; j < n; ++j) crow[j] += av * brow[j];
    }
  }
}

struct ConvGeom {
  int64_t n, ic, h, w, oc, oh, ow;
  int stride;
  int pad_top, pad_left;
};

ConvGeom conv_geometry(const Shape& xd, const Shape& wd, int stride,
                       Padding padding) {
  if (xd.size() != 4) throw ShapeError("conv2d input must be NCHW");
  if (wd.size() != 4 || wd[2] != 3 || wd[3] != 3)
    throw ShapeError("conv2d weights must be outC x inC x 3 x 3");
  if (xd[1] != wd[1])
    throw ShapeError("conv2d channel mismatch: input has " +
                     std::to_string(xd[1]) + ", weights expect " +
                     std::to_string(wd[1]));
  if (stride < 1) throw ArgumentError("conv2d stride must be >= 1");
  ConvGeom g;
  g.n = xd[0];
  g.ic = xd[1];
  g.h = xd[2];
  g.w = xd[3];
  g.oc = wd[0];
  g.stride = stride;
  if (padding == Padding::kSame) {
    g.oh = (g.h + stride - 1) / stride;
    g.ow = (g.w + stride - 1) / stride;
    const int64_t pad_h = std::max<int64_t>((g.oh - 1) * stride + 3 - g.h, 0);
    const int64_t pad_w = std::max<int64_t>((g.ow - 1) * stride + 3 - g.w, 0);
    g.pad_top = static_cast<int>(pad_h / 2);
    g.pad_left = static_cast<int>(pad_w / 2);
  } else {
    if (g.h < 3 || g.w < 3)
      throw ShapeError("conv2d valid padding needs input >= 3x3");
    g.oh = (g.h - 3) / stride + 1;
    g.ow = (g.w - 3) / stride + 1;
    g.pad_top = 0;
    g.pad_left = 0;
  }
  return g;
}

// col: (ic*9) x (oh*ow) for one batch image.
template <typename T>
void im2col(const T* x, const ConvGeom& g, T* col) {
  const int64_t ohw = g.oh * g.ow;
  for (int64_t c = 0; c < g.ic; ++c) {
    const T* plane = x + c * g.h * g.w;
    for (int ky = 0; ky < 3; ++ky) {
      for (int kx = 0; kx < 3; ++kx) {
        T* crow = col + (c * 9 + ky * 3 + kx) * ohw;
        for (int64_t oy = 0; oy < g.oh; ++oy) {
          const int64_t iy = oy * g.stride - g.pad_top + ky;
          T* dst = crow + oy * g.ow;
          if (iy < 0 || iy >= g.h) {
            std::fill(dst, dst + g.ow, T(0));
            continue;
          }
          const T* src = plane + iy * g.w;
          for (int64_t ox = 0; ox < g.ow; ++ox) {
            const int64_t ix = ox * g.stride - g.pad_left + kx;
            dst[ox] = (ix >= 0 && ix < g.w) ? src[ix] : T(0);
          }
        }
      }
    }
  }
}

// Scatter-add of a col gradient back onto the input plane.
template <typename T>
void col2im_acc(const T* col, const ConvGeom& g, T* dx) {
  const int64_t ohw = g.oh * g.ow;
  for (int64_t c = 0; c < g.ic; ++c) {
    T* plane = dx + c * g.h * g.w;
    for (int ky = 0; ky < 3; ++ky) {
      for (int kx = 0; kx < 3; ++kx) {
        const T* crow = col + (c * 9 + ky * 3 + kx) * ohw;
        for (int64_t oy = 0; oy < g.oh; ++oy) {
          const int64_t iy = oy * g.stride - g.pad_top + ky;
          if (iy < 0 || iy >= g.h) continue;
          const T* src = crow + oy * g.ow;
          T* dst = plane + iy * g.w;
          for (int64_t ox = 0; ox < g.ow; ++ox) {
            const int64_t ix = ox * g.stride - g.pad_left + kx;
            if (ix >= 0 && ix < g.w) dst[ix] += src[ox];
          }
        }
      }
    }
  }
}

template <typename T>
using NodePtr = std::shared_ptr<detail::Node<T>>;

template <typename T>
Tensor<T> make_op(Shape dims, std::vector<NodePtr<T>> parents,
                  std::function<void(detail::Node<T>&)> backward) {
  auto n = std::make_shared<detail::Node<T>>();
  const int64_t count = shape_numel(dims);
  n->dims = std::move(dims);
  n->data.resize(static_cast<size_t>(count));
  bool needs = false;
  for (const auto& p : parents) needs = needs || p->requires_grad;
  if (needs) {
    n->requires_grad = true;
    n->parents = std::move(parents);
    n->backward = std::move(backward);
  }
  return Tensor<T>(std::move(n));
}

template <typename T>
void check_same_shape(const Tensor<T>& a, const Tensor<T>& b,
                      const char* op) {
  if (a.dims() != b.dims())
    throw ShapeError(std::string(op) + ": shape mismatch " +
                     shape_str(a.dims()) + " vs " + shape_str(b.dims()));
}

}  // namespace

// ---- elementwise ----------------------------------------------------------

template <typename T>
Tensor<T> add(const Tensor<T>& a, const Tensor<T>& b) {
  check_same_shape(a, b, "add");
  auto an = a.node(), bn = b.node();
  auto out = make_op<T>(
      a.dims(), {an, bn}, [an, bn](detail::Node<T>& self) {
        if (an->requires_grad) {
          an->ensure_grad();
          for (size_t i = 0; i < self.grad.size(); ++i)
            an->grad[i] += self.grad[i];
        }
        if (bn->requires_grad) {
          bn->ensure_grad();
          for (size_t i = 0; i < self.grad.size(); ++i)
            bn->grad[i] += self.grad[i];
        }
      });
  const T* pa = a.data();
  const T* pb = b.data();
  T* po = out.data();
  for (int64_t i = 0; i < a.numel(); ++i) po[i] = pa[i] + pb[i];
  return out;
}

template <typename T>
Tensor<T> sub(const Tensor<T>& a, const Tensor<T>& b) {
  check_same_shape(a, b, "sub");
  auto an = a.node(), bn = b.node();
  auto out = make_op<T>(
      a.dims(), {an, bn}, [an, bn](detail::Node<T>& self) {
        if (an->requires_grad) {
          an->ensure_grad();
          for (size_t i = 0; i < self.grad.size(); ++i)
            an->grad[i] += self.grad[i];
        }
        if (bn->requires_grad) {
          bn->ensure_grad();
          for (size_t i = 0; i < self.grad.size(); ++i)
            bn->grad[i] -= self.grad[i];
        }
      });
  const T* pa = a.data();
  const T* pb = b.data();
  T* po = out.data();
  for (int64_t i = 0; i < a.numel(); ++i) po[i] = pa[i] - pb[i];
  return out;
}

template <typename T>
Tensor<T> mul(const Tensor<T>& a, const Tensor<T>& b) {
  check_same_shape(a, b, "mul");
  auto an = a.node(), bn = b.node();
  auto out = make_op<T>(
      a.dims(), {an, bn}, [an, bn](detail::Node<T>& self) {
        if (an->requires_grad) {
          an->ensure_grad();
          for (size_t i = 0; i < self.grad.size(); ++i)
            an->grad[i] += self.grad[i] * bn->data[i];
        }
        if (bn->requires_grad) {
          bn->ensure_grad();
          for (size_t i = 0; i < self.grad.size(); ++i)
            bn->grad[i] += self.grad[i] * an->data[i];
        }
      });
  const T* pa = a.data();
  const T* pb = b.data();
  T* po = out.data();
  for (int64_t i = 0; i < a.numel(); ++i) po[i] = pa[i] * pb[i];
  return out;
}

template <typename T>
Tensor<T> div(const Tensor<T>& a, const Tensor<T>& b) {
  check_same_shape(a, b, "div");
  auto an = a.node(), bn = b.node();
  auto out = make_op<T>(
      a.dims(), {an, bn}, [an, bn](detail::Node<T>& self) {
        if (an->requires_grad) {
          an->ensure_grad();
          for (size_t i = 0; i < self.grad.size(); ++i)
            an->grad[i] += self.grad[i] / bn->data[i];
        }
        if (bn->requires_grad) {
          bn->ensure_grad();
          for (size_t i = 0; i < self.grad.size(); ++i)
            bn->grad[i] -= self.grad[i] * an->data[i] /
                           (bn->data[i] * bn->data[i]);
        }
      });
  const T* pa = a.data();
  const T* pb = b.data();
  T* po = out.data();
  for (int64_t i = 0; i < a.numel(); ++i) po[i] = pa[i] / pb[i];
  return out;
}

template <typename T>
Tensor<T> neg(const Tensor<T>& a) {
  auto an = a.node();
  auto out = make_op<T>(a.dims(), {an}, [an](detail::Node<T>& self) {
    an->ensure_grad();
    for (size_t i = 0; i < self.grad.size(); ++i)
      an->grad[i] -= self.grad[i];
  });
  const T* pa = a.data();
  T* po = out.data();
  for (int64_t i = 0; i < a.numel(); ++i) po[i] = -pa[i];
  return out;
}

template <typename T>
Tensor<T> add_scalar(const Tensor<T>& a, T s) {
  auto an = a.node();
  auto out = make_op<T>(a.dims(), {an}, [an](detail::Node<T>& self) {
    an->ensure_grad();
    for (size_t i = 0; i < self.grad.size(); ++i)
      an->grad[i] += self.grad[i];
  });
  const T* pa = a.data();
  T* po = out.data();
  for (int64_t i = 0; i < a.numel(); ++i) po[i] = pa[i] + s;
  return out;
}

template <typename T>
Tensor<T> mul_scalar(const Tensor<T>& a, T s) {
  auto an = a.node();
  auto out = make_op<T>(a.dims(), {an}, [an, s](detail::Node<T>& self) {
    an->ensure_grad();
    for (size_t i = 0; i < self.grad.size(); ++i)
      an->grad[i] += self.grad[i] * s;
  });
  const T* pa = a.data();
  T* po = out.data();
  for (int64_t i = 0; i < a.numel(); ++i) po[i] = pa[i] * s;
  return out;
}

template <typename T>
Tensor<T> abs_val(const Tensor<T>& a) {
  auto an = a.node();
  auto out = make_op<T>(a.dims(), {an}, [an](detail::Node<T>& self) {
    an->ensure_grad();
    for (size_t i = 0; i < self.grad.size(); ++i) {
      const T x = an->data[i];
      if (x > T(0))
        an->grad[i] += self.grad[i];
      else if (x < T(0))
        an->grad[i] -= self.grad[i];
      // subgradient 0 at the tie
    }
  });
  const T* pa = a.data();
  T* po = out.data();
  for (int64_t i = 0; i < a.numel(); ++i) po[i] = std::abs(pa[i]);
  return out;
}

template <typename T>
Tensor<T> leaky_relu(const Tensor<T>& a, T slope) {
  if (!(slope >= T(0) && slope < T(1)))
    throw ArgumentError("leaky_relu slope must be in [0, 1)");
  auto an = a.node();
  auto out = make_op<T>(a.dims(), {an}, [an, slope](detail::Node<T>& self) {
    an->ensure_grad();
    for (size_t i = 0; i < self.grad.size(); ++i) {
      const T g = (an->data[i] > T(0)) ? self.grad[i] : self.grad[i] * slope;
      an->grad[i] += g;
    }
  });
  const T* pa = a.data();
  T* po = out.data();
  for (int64_t i = 0; i < a.numel(); ++i)
    po[i] = pa[i] > T(0) ? pa[i] : pa[i] * slope;
  return out;
}

template <typename T>
Tensor<T> sigmoid(const Tensor<T>& a) {
  auto an = a.node();
  auto out = make_op<T>(a.dims(), {an}, [an](detail::Node<T>& self) {
    an->ensure_grad();
    for (size_t i = 0; i < self.grad.size(); ++i) {
      const T y = self.data[i];
      an->grad[i] += self.grad[i] * y * (T(1) - y);
    }
  });
  const T* pa = a.data();
  T* po = out.data();
  for (int64_t i = 0; i < a.numel(); ++i) {
    const T x = pa[i];
    po[i] = x >= T(0) ? T(1) / (T(1) + std::exp(-x))
                      : std::exp(x) / (T(1) + std::exp(x));
  }
  return out;
}

template <typename T>
Tensor<T> softplus(const Tensor<T>& a) {
  auto an = a.node();
  auto out = make_op<T>(a.dims(), {an}, [an](detail::Node<T>& self) {
    an->ensure_grad();
    for (size_t i = 0; i < self.grad.size(); ++i) {
      const T x = an->data[i];
      const T sig = x >= T(0) ? T(1) / (T(1) + std::exp(-x))
                              : std::exp(x) / (T(1) + std::exp(x));
      an->grad[i] += self.grad[i] * sig;
    }
  });
  const T* pa = a.data();
  T* po = out.data();
  for (int64_t i = 0; i < a.numel(); ++i) {
    const T x = pa[i];
    po[i] = x > T(20) ? x : std::log1p(std::exp(std::min(x, T(20))));
  }
  return out;
}

// ---- reductions ------------------------------------------------------------

template <typename T>
Tensor<T> sum(const Tensor<T>& a) {
  auto an = a.node();
  auto out = make_op<T>({1}, {an}, [an](detail::Node<T>& self) {
    an->ensure_grad();
    const T g = self.grad[0];
    for (auto& v : an->grad) v += g;
  });
  double acc = 0.0;
  const T* pa = a.data();
  for (int64_t i = 0; i < a.numel(); ++i) acc += static_cast<double>(pa[i]);
  out.data()[0] = static_cast<T>(acc);
  return out;
}

template <typename T>
Tensor<T> mean(const Tensor<T>& a) {
  auto an = a.node();
  const T inv = T(1) / static_cast<T>(a.numel());
  auto out = make_op<T>({1}, {an}, [an, inv](detail::Node<T>& self) {
    an->ensure_grad();
    const T g = self.grad[0] * inv;
    for (auto& v : an->grad) v += g;
  });
  double acc = 0.0;
  const T* pa = a.data();
  for (int64_t i = 0; i < a.numel(); ++i) acc += static_cast<double>(pa[i]);
  out.data()[0] = static_cast<T>(acc / static_cast<double>(a.numel()));
  return out;
}

// ---- shape ------------------------------------------------------------------

template <typename T>
Tensor<T> concat_channels(const Tensor<T>& a, const Tensor<T>& b) {
  const auto& ad = a.dims();
  const auto& bd = b.dims();
  if (ad.size() != bd.size() || (ad.size() != 2 && ad.size() != 4))
    throw ShapeError("concat_channels expects two rank-2 or rank-4 tensors");
  for (size_t i = 0; i < ad.size(); ++i)
    if (i != 1 && ad[i] != bd[i])
      throw ShapeError("concat_channels: non-channel extents must match");
  Shape od = ad;
  od[1] = ad[1] + bd[1];
  // Per-item strides along the flattened channel-and-inner block.
  const int64_t n = ad[0];
  int64_t inner = 1;
  for (size_t i = 2; i < ad.size(); ++i) inner *= ad[i];
  const int64_t ablock = ad[1] * inner;
  const int64_t bblock = bd[1] * inner;
  auto an = a.node(), bn = b.node();
  auto out = make_op<T>(
      od, {an, bn}, [an, bn, n, ablock, bblock](detail::Node<T>& self) {
        const int64_t oblock = ablock + bblock;
        if (an->requires_grad) {
          an->ensure_grad();
          for (int64_t i = 0; i < n; ++i)
            for (int64_t j = 0; j < ablock; ++j)
              an->grad[i * ablock + j] += self.grad[i * oblock + j];
        }
        if (bn->requires_grad) {
          bn->ensure_grad();
          for (int64_t i = 0; i < n; ++i)
            for (int64_t j = 0; j < bblock; ++j)
              bn->grad[i * bblock + j] += self.grad[i * oblock + ablock + j];
        }
      });
  const T* pa = a.data();
  const T* pb = b.data();
  T* po = out.data();
  for (int64_t i = 0; i < n; ++i) {
    std::memcpy(po + i * (ablock + bblock), pa + i * ablock,
                sizeof(T) * ablock);
    std::memcpy(po + i * (ablock + bblock) + ablock, pb + i * bblock,
                sizeof(T) * bblock);
  }
  return out;
}

// ---- conv2d -----------------------------------------------------------------

template <typename T>
Tensor<T> conv2d(const Tensor<T>& x, const Tensor<T>& w, const Tensor<T>& b,
                 int stride, Padding padding) {
  const ConvGeom g = conv_geometry(x.dims(), w.dims(), stride, padding);
  if (b.rank() != 1 || b.dim(0) != g.oc)
    throw ShapeError("conv2d bias must have outC entries");
  auto xn = x.node(), wn = w.node(), bn = b.node();
  const int64_t k = g.ic * 9;
  const int64_t ohw = g.oh * g.ow;

  auto out = make_op<T>(
      {g.n, g.oc, g.oh, g.ow}, {xn, wn, bn},
      [xn, wn, bn, g, k, ohw](detail::Node<T>& self) {
        std::vector<T> col(static_cast<size_t>(k * ohw));
        std::vector<T> dcol;
        const bool need_dx = xn->requires_grad;
        const bool need_dw = wn->requires_grad;
        const bool need_db = bn->requires_grad;
        if (need_dx) {
          xn->ensure_grad();
          dcol.resize(static_cast<size_t>(k * ohw));
        }
        if (need_dw) wn->ensure_grad();
        if (need_db) bn->ensure_grad();
        for (int64_t img = 0; img < g.n; ++img) {
          const T* xptr = xn->data.data() + img * g.ic * g.h * g.w;
          const T* dout = self.grad.data() + img * g.oc * ohw;
          if (need_dw || need_dx) im2col(xptr, g, col.data());
          if (need_dw)  // dW(oc x k) += dout(oc x ohw) * col(k x ohw)^T
            gemm_nt<T>(g.oc, k, ohw, dout, col.data(), wn->grad.data());
          if (need_db) {
            for (int64_t c = 0; c < g.oc; ++c) {
              T acc = 0;
              const T* row = dout + c * ohw;
              for (int64_t j = 0; j < ohw; ++j) acc += row[j];
              bn->grad[c] += acc;
            }
          }
          if (need_dx) {  // dcol(k x ohw) = W(oc x k)^T * dout(oc x ohw)
            std::fill(dcol.begin(), dcol.end(), T(0));
            gemm_tn<T>(k, ohw, g.oc, wn->data.data(), dout, dcol.data());
            col2im_acc(dcol.data(), g,
                       xn->grad.data() + img * g.ic * g.h * g.w);
          }
        }
      });

  std::vector<T> col(static_cast<size_t>(k * ohw));
  T* po = out.data();
  for (int64_t img = 0; img < g.n; ++img) {
    const T* xptr = x.data() + img * g.ic * g.h * g.w;
    im2col(xptr, g, col.data());
    T* optr = po + img * g.oc * ohw;
    for (int64_t c = 0; c < g.oc; ++c)
      std::fill(optr + c * ohw, optr + (c + 1) * ohw, b.data()[c]);
    gemm_nn<T>(g.oc, ohw, k, w.data(), col.data(), optr);
  }
  return out;
}

// ---- dense ------------------------------------------------------------------

template <typename T>
Tensor<T> dense(const Tensor<T>& x, const Tensor<T>& w, const Tensor<T>& b) {
  if (x.rank() != 2) throw ShapeError("dense input must be N x features");
  if (w.rank() != 2 || w.dim(1) != x.dim(1))
    throw ShapeError("dense weights must be out x in with in = " +
                     std::to_string(x.dim(1)));
  const int64_t n = x.dim(0), in = x.dim(1), outf = w.dim(0);
  if (b.rank() != 1 || b.dim(0) != outf)
    throw ShapeError("dense bias must have out entries");
  auto xn = x.node(), wn = w.node(), bn = b.node();
  auto out = make_op<T>(
      {n, outf}, {xn, wn, bn}, [xn, wn, bn, n, in, outf](detail::Node<T>& self) {
        if (xn->requires_grad) {  // dx(n x in) += dy(n x out) * W(out x in)
          xn->ensure_grad();
          gemm_nn<T>(n, in, outf, self.grad.data(), wn->data.data(),
                     xn->grad.data());
        }
        if (wn->requires_grad) {  // dW(out x in) += dy(n x out)^T * x(n x in)
          wn->ensure_grad();
          gemm_tn<T>(outf, in, n, self.grad.data(), xn->data.data(),
                     wn->grad.data());
        }
        if (bn->requires_grad) {
          bn->ensure_grad();
          for (int64_t i = 0; i < n; ++i)
            for (int64_t j = 0; j < outf; ++j)
              bn->grad[j] += self.grad[i * outf + j];
        }
      });
  T* po = out.data();
  for (int64_t i = 0; i < n; ++i)
    for (int64_t j = 0; j < outf; ++j) po[i * outf + j] = b.data()[j];
  gemm_nt<T>(n, outf, in, x.data(), w.data(), po);
  return out;
}

// ---- batch norm --------------------------------------------------------------

template <typename T>
Tensor<T> batch_norm(const Tensor<T>& x, const Tensor<T>& gamma,
                     const Tensor<T>& beta, BatchNormState<T>& state,
                     BnMode mode, T momentum, T eps) {
  if (x.rank() != 4) throw ShapeError("batch_norm input must be NCHW");
  const int64_t n = x.dim(0), c = x.dim(1), hw = x.dim(2) * x.dim(3);
  if (gamma.numel() != c || beta.numel() != c)
    throw ShapeError("batch_norm gamma/beta must have one entry per channel");
  if (state.running_mean.numel() != c || state.running_var.numel() != c)
    throw ShapeError("batch_norm running stats must have one entry per channel");
  if (mode == BnMode::kInfer && state.steps.item() <= T(0))
    throw StateError("batch_norm infer mode before any train-mode pass");

  const int64_t per_c = n * hw;
  std::vector<T> mean_c(static_cast<size_t>(c), T(0));
  std::vector<T> invstd_c(static_cast<size_t>(c), T(0));
  if (mode == BnMode::kTrain) {
    for (int64_t ch = 0; ch < c; ++ch) {
      double acc = 0.0;
      for (int64_t img = 0; img < n; ++img) {
        const T* p = x.data() + (img * c + ch) * hw;
        for (int64_t j = 0; j < hw; ++j) acc += static_cast<double>(p[j]);
      }
      const double mu = acc / static_cast<double>(per_c);
      double vacc = 0.0;
      for (int64_t img = 0; img < n; ++img) {
        const T* p = x.data() + (img * c + ch) * hw;
        for (int64_t j = 0; j < hw; ++j) {
          const double d = static_cast<double>(p[j]) - mu;
          vacc += d * d;
        }
      }
      const double var = vacc / static_cast<double>(per_c);  // biased
      mean_c[ch] = static_cast<T>(mu);
      invstd_c[ch] = static_cast<T>(1.0 / std::sqrt(var + eps));
      // running stats: keep `momentum` of the old value
      T& rm = state.running_mean.data()[ch];
      T& rv = state.running_var.data()[ch];
      rm = momentum * rm + (T(1) - momentum) * static_cast<T>(mu);
      rv = momentum * rv + (T(1) - momentum) * static_cast<T>(var);
    }
    state.steps.data()[0] += T(1);
  } else {
    for (int64_t ch = 0; ch < c; ++ch) {
      mean_c[ch] = state.running_mean.data()[ch];
      invstd_c[ch] = static_cast<T>(
          1.0 / std::sqrt(static_cast<double>(state.running_var.data()[ch]) +
                          static_cast<double>(eps)));
    }
  }

  auto xn = x.node();
  auto gn = gamma.node();
  auto bn = beta.node();
  const bool train = mode == BnMode::kTrain;
  auto out = make_op<T>(
      x.dims(), {xn, gn, bn},
      [xn, gn, bn, mean_c, invstd_c, n, c, hw, train](detail::Node<T>& self) {
        const int64_t per_c = n * hw;
        if (gn->requires_grad) gn->ensure_grad();
        if (bn->requires_grad) bn->ensure_grad();
        if (xn->requires_grad) xn->ensure_grad();
        for (int64_t ch = 0; ch < c; ++ch) {
          const T mu = mean_c[ch];
          const T is = invstd_c[ch];
          const T g = gn->data[ch];
          // accumulate the channel sums first
          double sum_dy = 0.0, sum_dy_xhat = 0.0;
          for (int64_t img = 0; img < n; ++img) {
            const T* xp = xn->data.data() + (img * c + ch) * hw;
            const T* dy = self.grad.data() + (img * c + ch) * hw;
            for (int64_t j = 0; j < hw; ++j) {
              const T xhat = (xp[j] - mu) * is;
              sum_dy += static_cast<double>(dy[j]);
              sum_dy_xhat += static_cast<double>(dy[j] * xhat);
            }
          }
          if (gn->requires_grad) gn->grad[ch] += static_cast<T>(sum_dy_xhat);
          if (bn->requires_grad) bn->grad[ch] += static_cast<T>(sum_dy);
          if (!xn->requires_grad) continue;
          if (train) {
            const T m_dy = static_cast<T>(sum_dy / per_c);
            const T m_dyx = static_cast<T>(sum_dy_xhat / per_c);
            for (int64_t img = 0; img < n; ++img) {
              const T* xp = xn->data.data() + (img * c + ch) * hw;
              const T* dy = self.grad.data() + (img * c + ch) * hw;
              T* dx = xn->grad.data() + (img * c + ch) * hw;
              for (int64_t j = 0; j < hw; ++j) {
                const T xhat = (xp[j] - mu) * is;
                dx[j] += g * is * (dy[j] - m_dy - xhat * m_dyx);
              }
            }
          } else {
            for (int64_t img = 0; img < n; ++img) {
              const T* dy = self.grad.data() + (img * c + ch) * hw;
              T* dx = xn->grad.data() + (img * c + ch) * hw;
              for (int64_t j = 0; j < hw; ++j) dx[j] += g * is * dy[j];
            }
          }
        }
      });

  T* po = out.data();
  for (int64_t img = 0; img < n; ++img) {
    for (int64_t ch = 0; ch < c; ++ch) {
      const T* xp = x.data() + (img * c + ch) * hw;
      T* op = po + (img * c + ch) * hw;
      const T mu = mean_c[ch];
      const T is = invstd_c[ch];
      const T g = gamma.data()[ch];
      const T be = beta.data()[ch];
      for (int64_t j = 0; j < hw; ++j) op[j] = (xp[j] - mu) * is * g + be;
    }
  }
  return out;
}

// ---- global average pool -------------------------------------------------------

template <typename T>
Tensor<T> global_avg_pool(const Tensor<T>& x) {
  if (x.rank() != 4) throw ShapeError("global_avg_pool input must be NCHW");
  const int64_t n = x.dim(0), c = x.dim(1), hw = x.dim(2) * x.dim(3);
  auto xn = x.node();
  auto out = make_op<T>({n, c}, {xn}, [xn, n, c, hw](detail::Node<T>& self) {
    xn->ensure_grad();
    const T inv = T(1) / static_cast<T>(hw);
    for (int64_t i = 0; i < n * c; ++i) {
      const T g = self.grad[i] * inv;
      T* dst = xn->grad.data() + i * hw;
      for (int64_t j = 0; j < hw; ++j) dst[j] += g;
    }
  });
  T* po = out.data();
  for (int64_t i = 0; i < n * c; ++i) {
    double acc = 0.0;
    const T* src = x.data() + i * hw;
    for (int64_t j = 0; j < hw; ++j) acc += static_cast<double>(src[j]);
    po[i] = static_cast<T>(acc / static_cast<double>(hw));
  }
  return out;
}

template <typename T>
Tensor<T> clamp_data(const Tensor<T>& x, T lo, T hi) {
  Tensor<T> out = Tensor<T>::zeros(x.dims());
  const T* px = x.data();
  T* po = out.data();
  for (int64_t i = 0; i < x.numel(); ++i)
    po[i] = std::min(std::max(px[i], lo), hi);
  return out;
}

// ---- explicit instantiations ---------------------------------------------------

#define RANIQA_INSTANTIATE_OPS(T)                                             \
  template Tensor<T> add(const Tensor<T>&, const Tensor<T>&);                 \
  template Tensor<T> sub(const Tensor<T>&, const Tensor<T>&);                 \
  template Tensor<T> mul(const Tensor<T>&, const Tensor<T>&);                 \
  template Tensor<T> div(const Tensor<T>&, const Tensor<T>&);                 \
  template Tensor<T> neg(const Tensor<T>&);                                   \
  template Tensor<T> add_scalar(const Tensor<T>&, T);                         \
  template Tensor<T> mul_scalar(const Tensor<T>&, T);                         \
  template Tensor<T> abs_val(const Tensor<T>&);                               \
  template Tensor<T> leaky_relu(const Tensor<T>&, T);                         \
  template Tensor<T> sigmoid(const Tensor<T>&);                               \
  template Tensor<T> softplus(const Tensor<T>&);                              \
  template Tensor<T> sum(const Tensor<T>&);                                   \
  template Tensor<T> mean(const Tensor<T>&);                                  \
  template Tensor<T> concat_channels(const Tensor<T>&, const Tensor<T>&);     \
  template Tensor<T> conv2d(const Tensor<T>&, const Tensor<T>&,               \
                            const Tensor<T>&, int, Padding);                  \
  template Tensor<T> dense(const Tensor<T>&, const Tensor<T>&,                \
                           const Tensor<T>&);                                 \
  template Tensor<T> batch_norm(const Tensor<T>&, const Tensor<T>&,           \
                                const Tensor<T>&, BatchNormState<T>&, BnMode, \
                                T, T);                                        \
  template Tensor<T> global_avg_pool(const Tensor<T>&);                       \
  template Tensor<T> clamp_data(const Tensor<T>&, T, T);

RANIQA_INSTANTIATE_OPS(float)
RANIQA_INSTANTIATE_OPS(double)

#undef RANIQA_INSTANTIATE_OPS

}  // namespace raniqa
