// ndgrad/ops.cc

// Copyright 2026  The vexkit Authors

// Licensed under the Apache License, Version 2.0 (the "License");
// you may not use this file except in compliance with the License.
// You may obtain a copy of the License at
//
//  http://www.apache.org/licenses/LICENSE-2.0
//
// THIS CODE IS PROVIDED *AS IS* BASIS, WITHOUT WARRANTIES OR CONDITIONS OF ANY
// KIND, EITHER EXPRESS OR IMPLIED, INCLUDING WITHOUT LIMITATION ANY IMPLIED
// WARRANTIES OR CONDITIONS OF TITLE, FITNESS FOR A PARTICULAR PURPOSE,
// MERCHANTABLITY OR NON-INFRINGEMENT.
// See the Apache 2 License for the specific language governing permissions and
// limitations under the License.

#include "vexkit/ndgrad/ops.h"

#include <algorithm>
#include <cmath>
#include <limits>
#include <string>
#include <vector>

#include <Eigen/Core>

#include "vexkit/errors.h"

namespace vexkit::ndgrad {

namespace {

template <typename T>
using RowMat = Eigen::Matrix<T, Eigen::Dynamic, Eigen::Dynamic, Eigen::RowMajor>;
template <typename T>
using MatMap = Eigen::Map<RowMat<T>>;
template <typename T>
using ConstMatMap = Eigen::Map<const RowMat<T>>;

[[noreturn]] void ShapeError(const std::string &op, const std::string &msg) {
  Fail(ErrorKind::kInvalidArgument, op + ": " + msg);
}

void RequireRank(const std::string &op, const Shape &s, int rank) {
  if (static_cast<int>(s.size()) != rank)
    ShapeError(op, "expected rank " + std::to_string(rank) + ", got " +
                       ShapeString(s));
}

struct ConvGeometry {
  int n, c, h, w;      // input
  int o, kh, kw;       // kernel
  int oh, ow;          // output
  Conv2dOptions opt;
  int k() const { return c * kh * kw; }
  int p() const { return oh * ow; }
  bool pointwise() const {
    return kh == 1 && kw == 1 && opt.stride_h == 1 && opt.stride_w == 1 &&
           opt.pad_h == 0 && opt.pad_w == 0;
  }
};

// Output columns [lo, hi) whose input column ow * stride - pad + k is
// inside [0, w).
inline void ValidRange(int k, int stride, int pad, int w, int out, int *lo, int *hi) {
  const int first = pad - k;  // smallest ow * stride that lands inside
  *lo = first <= 0 ? 0 : std::min(out, (first + stride - 1) / stride);
  const int last = w - 1 + pad - k;  // largest ow * stride that lands inside
  *hi = last < 0 ? 0 : std::min(out, last / stride + 1);
  if (*hi < *lo) *hi = *lo;
}

template <typename T>
void Im2Col(const T *x, const ConvGeometry &g, T *col) {
  const int P = g.p();
  const int sw = g.opt.stride_w;
  for (int c = 0; c < g.c; ++c) {
    for (int kh = 0; kh < g.kh; ++kh) {
      for (int kw = 0; kw < g.kw; ++kw) {
        T *dst = col + static_cast<std::size_t>((c * g.kh + kh) * g.kw + kw) * P;
        int lo, hi;
        ValidRange(kw, sw, g.opt.pad_w, g.w, g.ow, &lo, &hi);
        for (int oh = 0; oh < g.oh; ++oh) {
          const int ih = oh * g.opt.stride_h - g.opt.pad_h + kh;
          T *row = dst + static_cast<std::size_t>(oh) * g.ow;
          if (ih < 0 || ih >= g.h) {
            std::fill(row, row + g.ow, T(0));
            continue;
          }
          const T *src = x + (static_cast<std::size_t>(c) * g.h + ih) * g.w;
          const int off = kw - g.opt.pad_w;
          std::fill(row, row + lo, T(0));
          if (sw == 1) {
            std::copy(src + lo + off, src + hi + off, row + lo);
          } else {
            for (int ow = lo; ow < hi; ++ow) row[ow] = src[ow * sw + off];
          }
          std::fill(row + hi, row + g.ow, T(0));
        }
      }
    }
  }
}

template <typename T>
void Col2ImAdd(const T *col, const ConvGeometry &g, T *dx) {
  const int P = g.p();
  const int sw = g.opt.stride_w;
  for (int c = 0; c < g.c; ++c) {
    for (int kh = 0; kh < g.kh; ++kh) {
      for (int kw = 0; kw < g.kw; ++kw) {
        const T *src =
            col + static_cast<std::size_t>((c * g.kh + kh) * g.kw + kw) * P;
        int lo, hi;
        ValidRange(kw, sw, g.opt.pad_w, g.w, g.ow, &lo, &hi);
        for (int oh = 0; oh < g.oh; ++oh) {
          const int ih = oh * g.opt.stride_h - g.opt.pad_h + kh;
          if (ih < 0 || ih >= g.h) continue;
          T *dst = dx + (static_cast<std::size_t>(c) * g.h + ih) * g.w;
          const int off = kw - g.opt.pad_w;
          const T *row = src + static_cast<std::size_t>(oh) * g.ow;
          for (int ow = lo; ow < hi; ++ow) dst[ow * sw + off] += row[ow];
        }
      }
    }
  }
}

// Per-thread scratch reused across calls; contents are always overwritten.
template <typename T>
T *Scratch(std::size_t n, int slot) {
  thread_local std::vector<T> buffers[2];
  if (buffers[slot].size() < n) buffers[slot].resize(n);
  return buffers[slot].data();
}

}  // namespace

int ConvOutSize(int in, int kernel, int stride, int pad) {
  const int span = in + 2 * pad - kernel;
  if (span < 0 || stride <= 0) return 0;
  return span / stride + 1;
}

template <typename T>
Var<T> Conv2d(Var<T> x, Var<T> weight, std::optional<Var<T>> bias,
              const Conv2dOptions &opt) {
  const Shape &xs = x.shape();
  const Shape &ws = weight.shape();
  RequireRank("conv2d", xs, 4);
  RequireRank("conv2d", ws, 4);
  ConvGeometry g{xs[0], xs[1], xs[2], xs[3], ws[0], ws[2], ws[3], 0, 0, opt};
  if (ws[1] != g.c)
    ShapeError("conv2d", "input has " + std::to_string(g.c) +
                             " channels, kernel expects " +
                             std::to_string(ws[1]));
  if (bias && (bias->shape().size() != 1 || bias->shape()[0] != g.o))
    ShapeError("conv2d", "bias shape " + ShapeString(bias->shape()));
  g.oh = ConvOutSize(g.h, g.kh, opt.stride_h, opt.pad_h);
  g.ow = ConvOutSize(g.w, g.kw, opt.stride_w, opt.pad_w);
  if (g.oh < 1 || g.ow < 1)
    ShapeError("conv2d", "kernel " + ShapeString(ws) +
                             " does not fit padded input " + ShapeString(xs));

  const int K = g.k(), P = g.p();
  Tensor<T> out({g.n, g.o, g.oh, g.ow});
  const T *xd = x.value().data();
  ConstMatMap<T> wmat(weight.value().data(), g.o, K);
  T *col = g.pointwise() ? nullptr : Scratch<T>(static_cast<std::size_t>(K) * P, 0);
  for (int n = 0; n < g.n; ++n) {
    const T *xn = xd + static_cast<std::size_t>(n) * g.c * g.h * g.w;
    const T *cp = xn;
    if (!g.pointwise()) {
      Im2Col(xn, g, col);
      cp = col;
    }
    MatMap<T> on(out.data() + static_cast<std::size_t>(n) * g.o * P, g.o, P);
    on.noalias() = wmat * ConstMatMap<T>(cp, K, P);
    if (bias) {
      const T *b = bias->value().data();
      for (int o = 0; o < g.o; ++o) on.row(o).array() += b[o];
    }
  }

  Tape<T> &tape = *x.tape;
  const int xid = x.id, wid = weight.id, bid = bias ? bias->id : -1;
  std::vector<Var<T>> parents{x, weight};
  if (bias) parents.push_back(*bias);
  return tape.Record(std::move(out), parents, [g, xid, wid, bid](Tape<T> &t,
                                                                  int self) {
    const int K = g.k(), P = g.p();
    const Tensor<T> &gout = t.grad(self);
    const Var<T> xv{&t, xid}, wv{&t, wid};
    const bool need_dx = t.requires_grad(xv);
    const bool need_dw = t.requires_grad(wv);
    const bool need_db = bid >= 0 && t.requires_grad(Var<T>{&t, bid});
    const T *xd = t.value(xv).data();
    ConstMatMap<T> wmat(t.value(wv).data(), g.o, K);
    T *dx = need_dx ? t.grad(xid).data() : nullptr;
    std::optional<MatMap<T>> dw;
    if (need_dw) dw.emplace(t.grad(wid).data(), g.o, K);
    T *db = need_db ? t.grad(bid).data() : nullptr;
    T *col = g.pointwise() ? nullptr : Scratch<T>(static_cast<std::size_t>(K) * P, 0);
    T *dcol = g.pointwise() ? nullptr : Scratch<T>(static_cast<std::size_t>(K) * P, 1);
    for (int n = 0; n < g.n; ++n) {
      ConstMatMap<T> gn(gout.data() + static_cast<std::size_t>(n) * g.o * P,
                        g.o, P);
      const T *xn = xd + static_cast<std::size_t>(n) * g.c * g.h * g.w;
      if (need_dw) {
        const T *cp = xn;
        if (!g.pointwise()) {
          Im2Col(xn, g, col);
          cp = col;
        }
        dw->noalias() += gn * ConstMatMap<T>(cp, K, P).transpose();
      }
      if (need_db)
        // Plain loop: Eigen's vectorised sum peels by address, which would
        // make the result depend on allocation alignment.
        for (int o = 0; o < g.o; ++o) {
          const T *r = gout.data() + (static_cast<std::size_t>(n) * g.o + o) * P;
          T acc = T(0);
          for (int i = 0; i < P; ++i) acc += r[i];
          db[o] += acc;
        }
      if (need_dx) {
        T *dxn = dx + static_cast<std::size_t>(n) * g.c * g.h * g.w;
        if (g.pointwise()) {
          MatMap<T>(dxn, K, P).noalias() += wmat.transpose() * gn;
        } else {
          MatMap<T>(dcol, K, P).noalias() = wmat.transpose() * gn;
          Col2ImAdd(dcol, g, dxn);
        }
      }
    }
  });
}

template <typename T>
Var<T> BatchNorm(Var<T> x, Var<T> gamma, Var<T> beta, Tensor<T> &running_mean,
                 Tensor<T> &running_var, BatchNormMode mode, double momentum,
                 double eps) {
  const Shape &xs = x.shape();
  if (xs.size() != 2 && xs.size() != 4)
    ShapeError("batchnorm", "expected N x C or N x C x H x W, got " +
                                ShapeString(xs));
  const int N = xs[0], C = xs[1];
  const int inner = xs.size() == 4 ? xs[2] * xs[3] : 1;
  for (const Tensor<T> *t : {&gamma.value(), &beta.value(),
                             static_cast<const Tensor<T> *>(&running_mean),
                             static_cast<const Tensor<T> *>(&running_var)})
    if (t->size() != static_cast<std::size_t>(C))
      ShapeError("batchnorm", "channel count " + std::to_string(C) +
                                  " does not match parameter shape " +
                                  ShapeString(t->shape()));
  if (N < 1) ShapeError("batchnorm", "zero batch");
  const std::size_t count = static_cast<std::size_t>(N) * inner;

  std::vector<T> inv_std(C);
  std::vector<T> mean(C);
  if (mode == BatchNormMode::kTrain) {
    for (int c = 0; c < C; ++c) {
      double s = 0.0;
      for (int n = 0; n < N; ++n) {
        const T *p = x.value().data() + (static_cast<std::size_t>(n) * C + c) * inner;
        for (int i = 0; i < inner; ++i) s += p[i];
      }
      const double m = s / count;
      double v = 0.0;
      for (int n = 0; n < N; ++n) {
        const T *p = x.value().data() + (static_cast<std::size_t>(n) * C + c) * inner;
        for (int i = 0; i < inner; ++i) {
          const double d = p[i] - m;
          v += d * d;
        }
      }
      v /= count;
      mean[c] = static_cast<T>(m);
      inv_std[c] = static_cast<T>(1.0 / std::sqrt(v + eps));
      const double unbiased = count > 1 ? v * count / (count - 1) : v;
      running_mean[c] =
          static_cast<T>((1.0 - momentum) * running_mean[c] + momentum * m);
      running_var[c] = static_cast<T>((1.0 - momentum) * running_var[c] +
                                      momentum * unbiased);
    }
  } else {
    for (int c = 0; c < C; ++c) {
      mean[c] = running_mean[c];
      inv_std[c] = static_cast<T>(1.0 / std::sqrt(double(running_var[c]) + eps));
    }
  }

  Tensor<T> xhat(xs);
  Tensor<T> out(xs);
  const T *gm = gamma.value().data();
  const T *bt = beta.value().data();
  for (int n = 0; n < N; ++n) {
    for (int c = 0; c < C; ++c) {
      const std::size_t off = (static_cast<std::size_t>(n) * C + c) * inner;
      const T *p = x.value().data() + off;
      T *h = xhat.data() + off;
      T *o = out.data() + off;
      for (int i = 0; i < inner; ++i) {
        h[i] = (p[i] - mean[c]) * inv_std[c];
        o[i] = gm[c] * h[i] + bt[c];
      }
    }
  }

  const int xid = x.id, gid = gamma.id, bid = beta.id;
  const bool train = mode == BatchNormMode::kTrain;
  return x.tape->Record(
      std::move(out), {x, gamma, beta},
      [=, xhat = std::move(xhat), inv_std = std::move(inv_std)](Tape<T> &t,
                                                               int self) {
        const Tensor<T> &g = t.grad(self);
        const T *gm = t.value(Var<T>{&t, gid}).data();
        std::vector<double> sum_g(C, 0.0), sum_gh(C, 0.0);
        for (int n = 0; n < N; ++n)
          for (int c = 0; c < C; ++c) {
            const std::size_t off = (static_cast<std::size_t>(n) * C + c) * inner;
            for (int i = 0; i < inner; ++i) {
              sum_g[c] += g[off + i];
              sum_gh[c] += static_cast<double>(g[off + i]) * xhat[off + i];
            }
          }
        if (t.requires_grad(Var<T>{&t, gid})) {
          T *dg = t.grad(gid).data();
          for (int c = 0; c < C; ++c) dg[c] += static_cast<T>(sum_gh[c]);
        }
        if (t.requires_grad(Var<T>{&t, bid})) {
          T *db = t.grad(bid).data();
          for (int c = 0; c < C; ++c) db[c] += static_cast<T>(sum_g[c]);
        }
        if (!t.requires_grad(Var<T>{&t, xid})) return;
        T *dx = t.grad(xid).data();
        for (int n = 0; n < N; ++n)
          for (int c = 0; c < C; ++c) {
            const std::size_t off = (static_cast<std::size_t>(n) * C + c) * inner;
            const double scale = static_cast<double>(gm[c]) * inv_std[c];
            if (train) {
              const double mg = sum_g[c] / count, mgh = sum_gh[c] / count;
              for (int i = 0; i < inner; ++i)
                dx[off + i] += static_cast<T>(
                    scale * (g[off + i] - mg - xhat[off + i] * mgh));
            } else {
              for (int i = 0; i < inner; ++i)
                dx[off + i] += static_cast<T>(scale * g[off + i]);
            }
          }
      });
}

template <typename T>
Var<T> Relu(Var<T> x) {
  Tensor<T> out(x.shape());
  const T *xd = x.value().data();
  for (std::size_t i = 0; i < out.size(); ++i) out[i] = xd[i] > T(0) ? xd[i] : T(0);
  const int xid = x.id;
  return x.tape->Record(std::move(out), {x}, [xid](Tape<T> &t, int self) {
    const Tensor<T> &g = t.grad(self);
    const Tensor<T> &xv = t.value(Var<T>{&t, xid});
    T *dx = t.grad(xid).data();
    for (std::size_t i = 0; i < g.size(); ++i)
      if (xv[i] > T(0)) dx[i] += g[i];
  });
}

template <typename T>
Var<T> Add(Var<T> a, Var<T> b) {
  if (a.shape() != b.shape())
    ShapeError("add", ShapeString(a.shape()) + " vs " + ShapeString(b.shape()));
  Tensor<T> out(a.shape());
  const T *ad = a.value().data(), *bd = b.value().data();
  T *od = out.data();
  for (std::size_t i = 0; i < out.size(); ++i) od[i] = ad[i] + bd[i];
  const int aid = a.id, bid = b.id;
  return a.tape->Record(std::move(out), {a, b}, [aid, bid](Tape<T> &t, int self) {
    const Tensor<T> &g = t.grad(self);
    for (int id : {aid, bid}) {
      if (!t.requires_grad(Var<T>{&t, id})) continue;
      T *d = t.grad(id).data();
      for (std::size_t i = 0; i < g.size(); ++i) d[i] += g[i];
    }
  });
}

template <typename T>
Var<T> MaxPool2d(Var<T> x, const PoolOptions &opt) {
  const Shape &xs = x.shape();
  RequireRank("maxpool2d", xs, 4);
  if (opt.pad_h >= opt.window_h || opt.pad_w >= opt.window_w)
    ShapeError("maxpool2d", "padding must be smaller than the window");
  const int N = xs[0], C = xs[1], H = xs[2], W = xs[3];
  const int OH = ConvOutSize(H, opt.window_h, opt.stride_h, opt.pad_h);
  const int OW = ConvOutSize(W, opt.window_w, opt.stride_w, opt.pad_w);
  if (OH < 1 || OW < 1)
    ShapeError("maxpool2d", "window does not fit input " + ShapeString(xs));
  Tensor<T> out({N, C, OH, OW});
  std::vector<int> argmax(out.size());
  const T *xd = x.value().data();
  std::size_t o = 0;
  for (int plane = 0; plane < N * C; ++plane) {
    const T *src = xd + static_cast<std::size_t>(plane) * H * W;
    for (int oh = 0; oh < OH; ++oh)
      for (int ow = 0; ow < OW; ++ow, ++o) {
        T best = -std::numeric_limits<T>::infinity();
        int best_idx = -1;
        for (int kh = 0; kh < opt.window_h; ++kh) {
          const int ih = oh * opt.stride_h - opt.pad_h + kh;
          if (ih < 0 || ih >= H) continue;
          for (int kw = 0; kw < opt.window_w; ++kw) {
            const int iw = ow * opt.stride_w - opt.pad_w + kw;
            if (iw < 0 || iw >= W) continue;
            const T v = src[ih * W + iw];
            if (best_idx < 0 || v > best) {
              best = v;
              best_idx = ih * W + iw;
            }
          }
        }
        out[o] = best;
        argmax[o] = best_idx;
      }
  }
  const int xid = x.id;
  const int in_plane = H * W, out_plane = OH * OW;
  return x.tape->Record(
      std::move(out), {x},
      [xid, in_plane, out_plane, argmax = std::move(argmax)](Tape<T> &t,
                                                             int self) {
        const Tensor<T> &g = t.grad(self);
        T *dx = t.grad(xid).data();
        for (std::size_t i = 0; i < g.size(); ++i) {
          const std::size_t plane = i / out_plane;
          dx[plane * in_plane + argmax[i]] += g[i];
        }
      });
}

template <typename T>
Var<T> AvgPool2d(Var<T> x, const PoolOptions &opt) {
  const Shape &xs = x.shape();
  RequireRank("avgpool2d", xs, 4);
  if (opt.pad_h != 0 || opt.pad_w != 0)
    ShapeError("avgpool2d", "padding is not supported");
  const int N = xs[0], C = xs[1], H = xs[2], W = xs[3];
  const int OH = ConvOutSize(H, opt.window_h, opt.stride_h, 0);
  const int OW = ConvOutSize(W, opt.window_w, opt.stride_w, 0);
  if (OH < 1 || OW < 1)
    ShapeError("avgpool2d", "window does not fit input " + ShapeString(xs));
  const double inv = 1.0 / (opt.window_h * opt.window_w);
  Tensor<T> out({N, C, OH, OW});
  const T *xd = x.value().data();
  std::size_t o = 0;
  for (int plane = 0; plane < N * C; ++plane) {
    const T *src = xd + static_cast<std::size_t>(plane) * H * W;
    for (int oh = 0; oh < OH; ++oh)
      for (int ow = 0; ow < OW; ++ow, ++o) {
        double s = 0.0;
        for (int kh = 0; kh < opt.window_h; ++kh)
          for (int kw = 0; kw < opt.window_w; ++kw)
            s += src[(oh * opt.stride_h + kh) * W + ow * opt.stride_w + kw];
        out[o] = static_cast<T>(s * inv);
      }
  }
  const int xid = x.id;
  return x.tape->Record(std::move(out), {x}, [=](Tape<T> &t, int self) {
    const Tensor<T> &g = t.grad(self);
    T *dx = t.grad(xid).data();
    std::size_t o = 0;
    for (int plane = 0; plane < N * C; ++plane) {
      T *dst = dx + static_cast<std::size_t>(plane) * H * W;
      for (int oh = 0; oh < OH; ++oh)
        for (int ow = 0; ow < OW; ++ow, ++o) {
          const T gv = static_cast<T>(g[o] * inv);
          for (int kh = 0; kh < opt.window_h; ++kh)
            for (int kw = 0; kw < opt.window_w; ++kw)
              dst[(oh * opt.stride_h + kh) * W + ow * opt.stride_w + kw] += gv;
        }
    }
  });
}

template <typename T>
Var<T> GlobalAvgPool(Var<T> x) {
  const Shape &xs = x.shape();
  RequireRank("global_avgpool", xs, 4);
  const int N = xs[0], C = xs[1];
  const int inner = xs[2] * xs[3];
  Tensor<T> out({N, C});
  const T *xd = x.value().data();
  for (int i = 0; i < N * C; ++i) {
    double s = 0.0;
    const T *p = xd + static_cast<std::size_t>(i) * inner;
    for (int j = 0; j < inner; ++j) s += p[j];
    out[i] = static_cast<T>(s / inner);
  }
  const int xid = x.id;
  return x.tape->Record(std::move(out), {x}, [=](Tape<T> &t, int self) {
    const Tensor<T> &g = t.grad(self);
    T *dx = t.grad(xid).data();
    for (int i = 0; i < N * C; ++i) {
      const T gv = static_cast<T>(g[i] / static_cast<double>(inner));
      T *p = dx + static_cast<std::size_t>(i) * inner;
      for (int j = 0; j < inner; ++j) p[j] += gv;
    }
  });
}

template <typename T>
Var<T> Linear(Var<T> x, Var<T> weight, std::optional<Var<T>> bias) {
  RequireRank("linear", x.shape(), 2);
  RequireRank("linear", weight.shape(), 2);
  const int N = x.shape()[0], In = x.shape()[1], Out = weight.shape()[0];
  if (weight.shape()[1] != In)
    ShapeError("linear", "input width " + std::to_string(In) +
                             " vs weight " + ShapeString(weight.shape()));
  if (bias && (bias->shape().size() != 1 || bias->shape()[0] != Out))
    ShapeError("linear", "bias shape " + ShapeString(bias->shape()));
  Tensor<T> out({N, Out});
  MatMap<T> om(out.data(), N, Out);
  om.noalias() = ConstMatMap<T>(x.value().data(), N, In) *
                 ConstMatMap<T>(weight.value().data(), Out, In).transpose();
  if (bias) {
    const T *b = bias->value().data();
    for (int n = 0; n < N; ++n)
      for (int o = 0; o < Out; ++o) om(n, o) += b[o];
  }
  const int xid = x.id, wid = weight.id, bid = bias ? bias->id : -1;
  std::vector<Var<T>> parents{x, weight};
  if (bias) parents.push_back(*bias);
  return x.tape->Record(std::move(out), parents, [=](Tape<T> &t, int self) {
    ConstMatMap<T> g(t.grad(self).data(), N, Out);
    if (t.requires_grad(Var<T>{&t, xid}))
      MatMap<T>(t.grad(xid).data(), N, In).noalias() +=
          g * ConstMatMap<T>(t.value(Var<T>{&t, wid}).data(), Out, In);
    if (t.requires_grad(Var<T>{&t, wid}))
      MatMap<T>(t.grad(wid).data(), Out, In).noalias() +=
          g.transpose() * ConstMatMap<T>(t.value(Var<T>{&t, xid}).data(), N, In);
    if (bid >= 0 && t.requires_grad(Var<T>{&t, bid})) {
      T *db = t.grad(bid).data();
      for (int n = 0; n < N; ++n)
        for (int o = 0; o < Out; ++o) db[o] += g(n, o);
    }
  });
}

template <typename T>
Var<T> L2Normalize(Var<T> x) {
  RequireRank("l2_normalize", x.shape(), 2);
  const int N = x.shape()[0], D = x.shape()[1];
  Tensor<T> out(x.shape());
  std::vector<double> norms(N);
  for (int n = 0; n < N; ++n) {
    const T *p = x.value().data() + static_cast<std::size_t>(n) * D;
    double s = 0.0;
    for (int d = 0; d < D; ++d) s += static_cast<double>(p[d]) * p[d];
    norms[n] = std::max(std::sqrt(s), 1e-12);
    for (int d = 0; d < D; ++d)
      out[static_cast<std::size_t>(n) * D + d] = static_cast<T>(p[d] / norms[n]);
  }
  const int xid = x.id;
  return x.tape->Record(
      std::move(out), {x}, [=, norms = std::move(norms)](Tape<T> &t, int self) {
        const Tensor<T> &g = t.grad(self);
        const Tensor<T> &y = t.value(Var<T>{&t, self});
        T *dx = t.grad(xid).data();
        for (int n = 0; n < N; ++n) {
          const std::size_t off = static_cast<std::size_t>(n) * D;
          double yg = 0.0;
          for (int d = 0; d < D; ++d) yg += static_cast<double>(y[off + d]) * g[off + d];
          for (int d = 0; d < D; ++d)
            dx[off + d] +=
                static_cast<T>((g[off + d] - y[off + d] * yg) / norms[n]);
        }
      });
}

template <typename T>
Var<T> SoftmaxCrossEntropy(Var<T> logits, std::span<const int> labels) {
  RequireRank("softmax_xent", logits.shape(), 2);
  const int N = logits.shape()[0], K = logits.shape()[1];
  if (static_cast<int>(labels.size()) != N)
    ShapeError("softmax_xent", "label count " + std::to_string(labels.size()) +
                                   " vs batch " + std::to_string(N));
  Tensor<T> probs(logits.shape());
  double loss = 0.0;
  std::vector<int> lab(labels.begin(), labels.end());
  for (int n = 0; n < N; ++n) {
    if (lab[n] < 0 || lab[n] >= K)
      ShapeError("softmax_xent", "label " + std::to_string(lab[n]) +
                                     " outside [0, " + std::to_string(K) + ")");
    const T *z = logits.value().data() + static_cast<std::size_t>(n) * K;
    double zmax = z[0];
    for (int k = 1; k < K; ++k) zmax = std::max(zmax, static_cast<double>(z[k]));
    double s = 0.0;
    for (int k = 0; k < K; ++k) s += std::exp(z[k] - zmax);
    const double lse = zmax + std::log(s);
    loss += lse - z[lab[n]];
    for (int k = 0; k < K; ++k)
      probs[static_cast<std::size_t>(n) * K + k] =
          static_cast<T>(std::exp(z[k] - lse));
  }
  Tensor<T> out({1}, static_cast<T>(loss / N));
  const int lid = logits.id;
  return logits.tape->Record(
      std::move(out), {logits},
      [=, probs = std::move(probs), lab = std::move(lab)](Tape<T> &t, int self) {
        const double scale = t.grad(self)[0] / static_cast<double>(N);
        T *d = t.grad(lid).data();
        for (int n = 0; n < N; ++n)
          for (int k = 0; k < K; ++k) {
            const std::size_t i = static_cast<std::size_t>(n) * K + k;
            const double onehot = k == lab[n] ? 1.0 : 0.0;
            d[i] += static_cast<T>(scale * (probs[i] - onehot));
          }
      });
}

template <typename T>
Var<T> ContrastiveLoss(Var<T> a, Var<T> b, std::span<const int> labels,
                       double margin) {
  RequireRank("contrastive", a.shape(), 2);
  if (a.shape() != b.shape())
    ShapeError("contrastive", "embedding shapes differ: " +
                                  ShapeString(a.shape()) + " vs " +
                                  ShapeString(b.shape()));
  const int N = a.shape()[0], D = a.shape()[1];
  if (static_cast<int>(labels.size()) != N)
    ShapeError("contrastive", "label count mismatch");
  if (margin < 0) ShapeError("contrastive", "negative margin");
  std::vector<int> lab(labels.begin(), labels.end());
  std::vector<double> dist(N);
  double loss = 0.0;
  for (int n = 0; n < N; ++n) {
    if (lab[n] != 0 && lab[n] != 1)
      ShapeError("contrastive", "labels must be 0 or 1");
    double s = 0.0;
    for (int d = 0; d < D; ++d) {
      const double diff = static_cast<double>(a.value()[n * D + d]) - b.value()[n * D + d];
      s += diff * diff;
    }
    dist[n] = std::sqrt(s);
    if (lab[n] == 1) {
      loss += s;
    } else {
      const double h = std::max(0.0, margin - dist[n]);
      loss += h * h;
    }
  }
  Tensor<T> out({1}, static_cast<T>(loss / N));
  const int aid = a.id, bid = b.id;
  return a.tape->Record(
      std::move(out), {a, b},
      [=, lab = std::move(lab), dist = std::move(dist)](Tape<T> &t, int self) {
        const double scale = t.grad(self)[0] / static_cast<double>(N);
        const Tensor<T> &av = t.value(Var<T>{&t, aid});
        const Tensor<T> &bv = t.value(Var<T>{&t, bid});
        const bool need_a = t.requires_grad(Var<T>{&t, aid});
        const bool need_b = t.requires_grad(Var<T>{&t, bid});
        T *da = need_a ? t.grad(aid).data() : nullptr;
        T *db = need_b ? t.grad(bid).data() : nullptr;
        for (int n = 0; n < N; ++n) {
          // d(loss)/d(a - b) = coef * (a - b)
          double coef;
          if (lab[n] == 1) {
            coef = 2.0;
          } else if (dist[n] < margin && dist[n] > 0.0) {
            coef = -2.0 * (margin - dist[n]) / dist[n];
          } else {
            continue;
          }
          for (int d = 0; d < D; ++d) {
            const std::size_t i = static_cast<std::size_t>(n) * D + d;
            const double gdiff = scale * coef * (static_cast<double>(av[i]) - bv[i]);
            if (da) da[i] += static_cast<T>(gdiff);
            if (db) db[i] -= static_cast<T>(gdiff);
          }
        }
      });
}

template <typename T>
Var<T> GatherRows(Var<T> x, std::span<const int> rows) {
  const Shape &xs = x.shape();
  if (xs.empty()) ShapeError("gather_rows", "scalar input");
  const std::size_t row_size = x.value().size() / xs[0];
  Shape os = xs;
  os[0] = static_cast<int>(rows.size());
  Tensor<T> out(os);
  std::vector<int> idx(rows.begin(), rows.end());
  for (std::size_t r = 0; r < idx.size(); ++r) {
    if (idx[r] < 0 || idx[r] >= xs[0]) ShapeError("gather_rows", "row out of range");
    std::copy_n(x.value().data() + idx[r] * row_size, row_size,
                out.data() + r * row_size);
  }
  const int xid = x.id;
  return x.tape->Record(std::move(out), {x},
                        [=, idx = std::move(idx)](Tape<T> &t, int self) {
                          const Tensor<T> &g = t.grad(self);
                          T *dx = t.grad(xid).data();
                          for (std::size_t r = 0; r < idx.size(); ++r)
                            for (std::size_t j = 0; j < row_size; ++j)
                              dx[idx[r] * row_size + j] += g[r * row_size + j];
                        });
}

#define VEXKIT_INSTANTIATE_OPS(T)                                              \
  template Var<T> Conv2d(Var<T>, Var<T>, std::optional<Var<T>>,               \
                         const Conv2dOptions &);                              \
  template Var<T> BatchNorm(Var<T>, Var<T>, Var<T>, Tensor<T> &, Tensor<T> &, \
                            BatchNormMode, double, double);                   \
  template Var<T> Relu(Var<T>);                                               \
  template Var<T> Add(Var<T>, Var<T>);                                        \
  template Var<T> MaxPool2d(Var<T>, const PoolOptions &);                     \
  template Var<T> AvgPool2d(Var<T>, const PoolOptions &);                     \
  template Var<T> GlobalAvgPool(Var<T>);                                      \
  template Var<T> Linear(Var<T>, Var<T>, std::optional<Var<T>>);              \
  template Var<T> L2Normalize(Var<T>);                                        \
  template Var<T> SoftmaxCrossEntropy(Var<T>, std::span<const int>);          \
  template Var<T> ContrastiveLoss(Var<T>, Var<T>, std::span<const int>,       \
                                  double);                                    \
  template Var<T> GatherRows(Var<T>, std::span<const int>);

VEXKIT_INSTANTIATE_OPS(float)
VEXKIT_INSTANTIATE_OPS(double)

}  // namespace vexkit::ndgrad
