// Copyright (c) 2026 The CPNet Authors
// SPDX-License-Identifier: Apache-2.0

#pragma once

#include <span>
#include <vector>

#include "cpnet/tape.hpp"

// Differentiable tensor ops. Forward evaluates eagerly; each op records a
// backward closure on the tape. All ops are deterministic for a fixed input,
// independent of thread count: parallel loops write disjoint outputs and
// reductions run in a fixed order.
namespace cpnet {

/// 2-D convolution, NCHW. x [N,Ci,H,W], w [Co,Ci,kh,kw], b [Co] or undefined.
template <typename T>
Var<T> conv2d(Var<T> x, Var<T> w, Var<T> b, int stride, int pad);

/// Fully connected: x [N,D], w [O,D], b [O] or undefined. Returns [N,O].
template <typename T>
Var<T> linear(Var<T> x, Var<T> w, Var<T> b);

/// Instance normalization with affine parameters gamma/beta of size [C].
template <typename T>
Var<T> instance_norm(Var<T> x, Var<T> gamma, Var<T> beta, T eps = T(1e-5));

template <typename T> Var<T> leaky_relu(Var<T> x, T slope);
template <typename T> Var<T> relu(Var<T> x);
template <typename T> Var<T> sigmoid(Var<T> x);
template <typename T> Var<T> softplus(Var<T> x);

/// Nearest-neighbor 2x spatial upsampling.
template <typename T> Var<T> upsample_nearest2x(Var<T> x);

/// Adaptive average pooling to (oh, ow). Regions follow the floor/ceil rule.
template <typename T> Var<T> adaptive_avg_pool(Var<T> x, int oh, int ow);

/// 2x2 max pooling, stride 2. Ties route the gradient to the first maximum
/// in row-major order.
template <typename T> Var<T> max_pool2x2(Var<T> x);

/// Bilinear resize to (oh, ow), half-pixel centers.
template <typename T> Var<T> bilinear_resize(Var<T> x, int oh, int ow);

template <typename T> Var<T> add(Var<T> a, Var<T> b);
template <typename T> Var<T> sub(Var<T> a, Var<T> b);
template <typename T> Var<T> scale(Var<T> x, T s);
template <typename T> Var<T> add_scalar(Var<T> x, T c);
template <typename T> Var<T> square(Var<T> x);
template <typename T> Var<T> abs_val(Var<T> x);

/// Channel-wise recalibration: x [N,C,H,W] scaled by g [N,C].
template <typename T> Var<T> scale_channels(Var<T> x, Var<T> g);

/// Concatenate along the channel axis. All inputs share N, H, W.
template <typename T> Var<T> concat_channels(std::span<const Var<T>> xs);

/// Batch slice [n0, n1) of x [N,...]. Contiguous copy with scatter backward.
template <typename T> Var<T> slice_batch(Var<T> x, int n0, int n1);

/// Same data, new shape (element count preserved).
template <typename T> Var<T> reshape(Var<T> x, std::vector<int> shape);

/// Constant copy; gradients do not flow past it.
template <typename T> Var<T> detach(Var<T> x);

template <typename T> Var<T> sum_all(Var<T> x);
template <typename T> Var<T> mean_all(Var<T> x);

/// Euclidean norm over the flattened tensor: sqrt(sum x^2). Scalar output.
template <typename T> Var<T> euclidean_norm(Var<T> x);

/// Mean over the batch axis of per-sample Euclidean norms.
template <typename T> Var<T> per_sample_euclidean_norm_mean(Var<T> x);

/// Mean over the batch axis of per-sample L1 sums (sum of |x| per sample).
template <typename T> Var<T> per_sample_l1_sum_mean(Var<T> x);

/// Sets the number of OpenMP threads used by the ops (and pins Eigen to one
/// thread per task). Results do not depend on this value.
void set_num_threads(int n);
int num_threads();

} // namespace cpnet
