// Copyright 2026 The RaFE-Desk Authors
// SPDX-License-Identifier: Apache-2.0

#pragma once

#include <functional>
#include <span>
#include <vector>

#include "rafe/numerics/tape.hpp"

// Differentiable primitives. Every op has a first-order backward; the ops
// marked (2) also build their backward as tape nodes so they can sit
// inside a gradient that is itself differentiated.
//
// Image tensors use NHWC layout: [batch, height, width, channels].

namespace rafe::ops {

// Elementwise, same shape. (2)
Var add(Var a, Var b);
Var sub(Var a, Var b);
Var mul(Var a, Var b);
Var scale(Var a, double k);
Var add_scalar(Var a, double k);
Var neg(Var a);
Var square(Var a);
/// a * c with c a constant array of a's shape.
Var mul_const(Var a, std::vector<double> c);

// Activations. (2)
Var softplus(Var a);
Var sigmoid(Var a);
Var tanh(Var a);
Var leaky_relu(Var a, double slope = 0.2);
Var sqrt(Var a);
Var reciprocal(Var a);

// Reductions to a scalar. (2)
Var sum(Var a);
Var mean(Var a);

// Matrix ops on rank-2 tensors. (2)
Var matmul(Var a, Var b);
Var transpose(Var a);
/// [n, m] + broadcast [m]
Var add_bias(Var a, Var bias);
/// [m] -> [n, m]
Var broadcast_rows(Var v, std::int64_t n);
/// [n, m] -> [m]
Var sum_rows(Var a);
/// [n, m] -> [n, 1]
Var mean_cols(Var a);
/// [n, k] -> [n * r, k], each row repeated r times consecutively.
Var repeat_rows(Var a, std::int64_t r);
/// scalar -> shape
Var broadcast_scalar(Var s, Shape shape);
Var reshape(Var a, Shape shape);
/// columns [begin, end) of a rank-2 tensor.
Var slice_cols(Var a, std::int64_t begin, std::int64_t end);
Var concat_cols(Var a, Var b);
/// [b, h, w, c] -> [b, h*w*c]
Var flatten(Var a);

/// Generic linear map y = A x given forward and adjoint kernels. Both kernels
/// accumulate (`out += ...`). (2)
using LinearKernel = std::function<void(std::span<const double> in, std::span<double> out)>;
Var linear_map(const char* name, Var x, Shape out_shape, LinearKernel forward, LinearKernel adjoint);

// Image ops, NHWC. (2)
/// 3x3 patches with zero padding: [b,h,w,c] -> [b*h*w, 9*c]
Var im2col3x3(Var x);
/// [b,h,w,c] -> [b,h/2,w/2,c], 2x2 average.
Var avg_pool2(Var x);
/// [b,h,w,c] -> [b,2h,2w,c], nearest.
Var upsample2(Var x);
/// Mirror index without edge repeat: -1 -> 1, n -> n-2.
std::int64_t reflect_index(std::int64_t i, std::int64_t n);
/// Separable blur with reflect padding; `taps` has odd length.
Var blur_separable(Var x, std::vector<double> taps);
/// [n*g... ] minibatch grouping: [B, F] -> [B/g, F], mean over samples with equal (b mod B/g).
Var group_mean(Var x, std::int64_t group_size);
/// [B/g, F] -> [B, F], inverse layout of group_mean (copy, not scaled).
Var group_broadcast(Var x, std::int64_t group_size);

/// 3x3 "same" convolution, NHWC, weight [9*cin, cout], bias [cout].
Var conv3x3(Var x, Var weight, Var bias);
/// 1x1 convolution, NHWC, weight [cin, cout], bias [cout].
Var conv1x1(Var x, Var weight, Var bias);
/// Appends one channel holding the per-group stddev averaged over features.
Var minibatch_stddev(Var x, std::int64_t group_size, double eps = 1e-8);

/// Mean of squared entries.
Var mean_square(Var a);
/// Mean squared error between equally shaped tensors.
Var mse(Var a, Var b);

}  // namespace rafe::ops
