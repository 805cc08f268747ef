// tests/grad-check.h

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

#ifndef VEXKIT_TESTS_GRAD_CHECK_H_
#define VEXKIT_TESTS_GRAD_CHECK_H_

#include <algorithm>
#include <cmath>
#include <functional>
#include <vector>

#include "vexkit/ndgrad/ops.h"
#include "vexkit/rng.h"

namespace vexkit::testing {

using ndgrad::Shape;
using ndgrad::Tape;
using ndgrad::Tensor;
using ndgrad::Var;

inline Tensor<double> RandomTensor(Shape shape, Rng &rng, double scale = 1.0) {
  Tensor<double> t(std::move(shape));
  for (std::size_t i = 0; i < t.size(); ++i) t[i] = scale * StandardNormal(rng);
  return t;
}

// sum(x .* w) as a scalar node, so any op output can be reduced to a loss
// with a non-trivial upstream gradient.
inline Var<double> WeightedSum(Var<double> x, const Tensor<double> &w) {
  double s = 0.0;
  for (std::size_t i = 0; i < w.size(); ++i) s += x.value()[i] * w[i];
  const int xid = x.id;
  return x.tape->Record(Tensor<double>({1}, s), {x},
                        [xid, w](Tape<double> &t, int self) {
                          const double g = t.grad(self)[0];
                          auto &dx = t.grad(xid);
                          for (std::size_t i = 0; i < w.size(); ++i)
                            dx[i] += g * w[i];
                        });
}

// Builds a scalar from the given leaf values.
using ScalarFn =
    std::function<Var<double>(Tape<double> &, const std::vector<Var<double>> &)>;

struct GradCheckResult {
  double max_rel_error = 0.0;  // over inputs, norm-wise
};

// Compares reverse-mode gradients with central differences, input by
// input; the relative error for one input is ||a - n|| / max(||a||, ||n||).
inline GradCheckResult CheckGradients(const ScalarFn &fn,
                                      std::vector<Tensor<double>> inputs,
                                      double h = 1e-6) {
  std::vector<Tensor<double>> analytic;
  {
    Tape<double> tape;
    std::vector<Var<double>> leaves;
    for (auto &t : inputs) leaves.push_back(tape.Leaf(t));
    Var<double> out = fn(tape, leaves);
    tape.Backward(out);
    for (auto &l : leaves) analytic.push_back(tape.grad(l));
  }
  auto eval = [&](const std::vector<Tensor<double>> &in) {
    Tape<double> tape;
    std::vector<Var<double>> leaves;
    for (auto &t : in) leaves.push_back(tape.Constant(t));
    return fn(tape, leaves).value()[0];
  };
  GradCheckResult res;
  for (std::size_t k = 0; k < inputs.size(); ++k) {
    double diff2 = 0.0, a2 = 0.0, n2 = 0.0;
    for (std::size_t i = 0; i < inputs[k].size(); ++i) {
      const double orig = inputs[k][i];
      inputs[k][i] = orig + h;
      const double fp = eval(inputs);
      inputs[k][i] = orig - h;
      const double fm = eval(inputs);
      inputs[k][i] = orig;
      const double num = (fp - fm) / (2 * h);
      const double a = analytic[k][i];
      diff2 += (a - num) * (a - num);
      a2 += a * a;
      n2 += num * num;
    }
    const double denom = std::max({std::sqrt(a2), std::sqrt(n2), 1e-12});
    res.max_rel_error = std::max(res.max_rel_error, std::sqrt(diff2) / denom);
  }
  return res;
}

}  // namespace vexkit::testing

#endif  // VEXKIT_TESTS_GRAD_CHECK_H_
