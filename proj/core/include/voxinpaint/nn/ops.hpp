// Copyright 2026 The voxinpaint Authors.
// SPDX-License-Identifier: Apache-2.0

#pragma once

#include <array>

#include "voxinpaint/nn/tensor.hpp"

namespace voxinpaint::nn {

// Layouts: 2D activations are (N, C, H, W), 3D are (N, C, D, H, W).
// Convolution weights are (Cout, Cin, k...), transpose-convolution weights
// (Cin, Cout, 2...). An undefined bias Var means no bias.

/// Stride-1 cross-correlation with symmetric zero padding.
template <class T>
Var<T> conv2d(const Var<T>& x, const Var<T>& w, const Var<T>& b, int padding);
template <class T>
Var<T> conv3d(const Var<T>& x, const Var<T>& w, const Var<T>& b, int padding);

/// Non-overlapping max pooling. Ties go to the first position in scan order.
template <class T>
Var<T> max_pool2d(const Var<T>& x, int window = 2);
template <class T>
Var<T> max_pool3d(const Var<T>& x, int window = 2);

/// Non-overlapping 2D average pooling.
template <class T>
Var<T> avg_pool2d(const Var<T>& x, int window = 2);

/// Kernel 2, stride 2: doubles every spatial dimension.
template <class T>
Var<T> transpose_conv2d(const Var<T>& x, const Var<T>& w, const Var<T>& b);
template <class T>
Var<T> transpose_conv3d(const Var<T>& x, const Var<T>& w, const Var<T>& b);

template <class T>
Var<T> relu(const Var<T>& x);
template <class T>
Var<T> sigmoid(const Var<T>& x);

template <class T>
Var<T> add(const Var<T>& a, const Var<T>& b);
/// x + c for a constant array of the same shape.
template <class T>
Var<T> add_const(const Var<T>& x, const Array<T>& c);
/// x * c elementwise for a constant array of the same shape.
template <class T>
Var<T> mul_const(const Var<T>& x, const Array<T>& c);
template <class T>
Var<T> scale(const Var<T>& x, T s);

/// Concatenates along axis 1.
template <class T>
Var<T> concat_channels(const Var<T>& a, const Var<T>& b);

/// Adds v (N, C) to every spatial position of x (N, C, ...).
template <class T>
Var<T> add_channel_vector(const Var<T>& x, const Var<T>& v);

/// x (N, in) * w(out, in)^T + b(out).
template <class T>
Var<T> linear(const Var<T>& x, const Var<T>& w, const Var<T>& b);

/// (N, C, D, H, W) -> (N*D, C, H, W): each axial slice becomes an image.
template <class T>
Var<T> axial_slices(const Var<T>& x);

template <class T>
Var<T> sum(const Var<T>& x);
template <class T>
Var<T> mean(const Var<T>& x);

// Losses reduce to shape (1) with double accumulation.

/// Mean binary cross-entropy on probabilities clamped to [eps, 1-eps].
/// Clamped entries pass no gradient.
template <class T>
Var<T> bce(const Var<T>& probabilities, const Array<T>& targets, double eps = 1e-7);

/// Mean binary cross-entropy of sigmoid(logits) in the overflow-free form
/// max(x,0) - x*t + log(1 + exp(-|x|)). Matches bce(sigmoid(x)) while the
/// probability lies inside the clamp range, and never saturates its
/// gradient.
template <class T>
Var<T> bce_with_logits(const Var<T>& logits, const Array<T>& targets);

/// sum(|pred - target| * mask) / max(1, sum(mask)). The mask has pred's
/// shape, so a channel-broadcast mask counts once per channel.
template <class T>
Var<T> l1_masked(const Var<T>& pred, const Array<T>& target, const Array<T>& mask);

template <class T>
Var<T> mse(const Var<T>& pred, const Array<T>& target);

/// sum(mask * (pred - target)^2) / max(1, sum(mask)).
template <class T>
Var<T> mse_masked(const Var<T>& pred, const Array<T>& target, const Array<T>& mask);

/// For x (N, 3, ...) and support (N, 1, ...): per item, the squared distance
/// between the support-weighted mean color and `palette`; averaged over N.
/// Items with empty support contribute 0.
template <class T>
Var<T> color_prior(const Var<T>& x, const Array<T>& support, const std::array<double, 3>& palette);

/// emb[2i] = sin(t w_i), emb[2i+1] = cos(t w_i), w_i = 10000^(-2i/dim).
template <class T>
Array<T> sinusoidal_embedding(int t, int dim);

/// Stacks embeddings of several timesteps into (N, dim).
template <class T>
Array<T> sinusoidal_embedding(const std::vector<int>& ts, int dim);

/// Repeats a (N, 1, ...) array along axis 1 to (N, channels, ...).
template <class T>
Array<T> repeat_channels(const Array<T>& a, int channels);

}  // namespace voxinpaint::nn
