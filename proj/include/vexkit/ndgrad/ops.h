// vexkit/ndgrad/ops.h

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

#ifndef VEXKIT_NDGRAD_OPS_H_
#define VEXKIT_NDGRAD_OPS_H_

#include <optional>
#include <span>

#include "vexkit/ndgrad/tape.h"

namespace vexkit::ndgrad {

struct Conv2dOptions {
  int stride_h = 1, stride_w = 1;
  int pad_h = 0, pad_w = 0;
};

// Output spatial size of a convolution or pooling window; 0 when the
// padded input is smaller than the kernel.
int ConvOutSize(int in, int kernel, int stride, int pad);

// Cross-correlation.  x: N x C x H x W, weight: O x C x KH x KW, bias: O.
template <typename T>
Var<T> Conv2d(Var<T> x, Var<T> weight, std::optional<Var<T>> bias,
              const Conv2dOptions &opt);

enum class BatchNormMode { kTrain, kEval };

// Per-channel normalisation over N (and H, W for rank-4 input).  Train mode
// uses batch statistics and folds them into the running estimates with the
// given momentum (running variance unbiased); eval mode uses the running
// estimates.  x: N x C or N x C x H x W.
template <typename T>
Var<T> BatchNorm(Var<T> x, Var<T> gamma, Var<T> beta, Tensor<T> &running_mean,
                 Tensor<T> &running_var, BatchNormMode mode,
                 double momentum = 0.1, double eps = 1e-7);

template <typename T>
Var<T> Relu(Var<T> x);

template <typename T>
Var<T> Add(Var<T> a, Var<T> b);

struct PoolOptions {
  int window_h = 1, window_w = 1;
  int stride_h = 1, stride_w = 1;
  int pad_h = 0, pad_w = 0;  // max pool only; padded cells never win
};

template <typename T>
Var<T> MaxPool2d(Var<T> x, const PoolOptions &opt);

// Window mean; no padding.
template <typename T>
Var<T> AvgPool2d(Var<T> x, const PoolOptions &opt);

// Mean over all spatial positions: N x C x H x W -> N x C.
template <typename T>
Var<T> GlobalAvgPool(Var<T> x);

// x: N x In, weight: Out x In, bias: Out.
template <typename T>
Var<T> Linear(Var<T> x, Var<T> weight, std::optional<Var<T>> bias);

// Row-wise x / ||x||: N x D.
template <typename T>
Var<T> L2Normalize(Var<T> x);

// Mean cross-entropy of softmax(logits) against integer labels.
// logits: N x K, labels in [0, K).  Result has shape [1].
template <typename T>
Var<T> SoftmaxCrossEntropy(Var<T> logits, std::span<const int> labels);

// Mean over pairs of  y d^2 + (1 - y) max(0, margin - d)^2  with
// d = ||a_i - b_i||.  a, b: N x D; labels 1 (same) / 0 (different).
template <typename T>
Var<T> ContrastiveLoss(Var<T> a, Var<T> b, std::span<const int> labels,
                       double margin);

// Picks rows of x: N x ... -> len(rows) x ...
template <typename T>
Var<T> GatherRows(Var<T> x, std::span<const int> rows);

}  // namespace vexkit::ndgrad

#endif  // VEXKIT_NDGRAD_OPS_H_
