// Copyright (c) 2026 The CPNet Authors
// SPDX-License-Identifier: Apache-2.0

#pragma once

#include "cpnet/data_pipeline.hpp"
#include "cpnet/nn.hpp"
#include "cpnet/tape.hpp"
#include "cpnet/tensor.hpp"

namespace cpnet {

/// Normalized Gaussian kernel: unit sum, radially symmetric, peak at center.
struct GaussianKernel {
    int size = 25;
    double sigma = 5.0;
    Tensor<double> weights; // [size, size]
};

GaussianKernel build_gaussian_kernel(int size, double sigma);

/// Ground-truth landmark density map: the rasterized dot image convolved
/// with the kernel (zero padding). Each interior landmark contributes
/// exactly the kernel mass, so the map sum counts interior landmarks.
template <typename T>
Tensor<T> make_probability_map(const LandmarkSet& lms, int height, int width,
                               const GaussianKernel& kernel);

/// Lightweight encoder/decoder that predicts a density map from an RGB
/// frame. Output is softplus-activated, so predicted maps are non-negative.
template <typename T>
class MapPredictor {
public:
    MapPredictor(int resolution, int base_width, Rng& rng);

    /// x [N,3,H,W] at the configured resolution -> [N,1,H,W].
    Var<T> forward(Tape<T>& tape, Var<T> x, bool frozen = false) const;

    /// Inference-only convenience for a single [3,H,W] frame.
    Tensor<T> predict(const Tensor<T>& image) const;

    ParamStore<T>& params() { return params_; }
    const ParamStore<T>& params() const { return params_; }
    int resolution() const { return resolution_; }

private:
    int resolution_;
    int base_;
    ParamStore<T> params_;
};

/// Predictor objective: ||pred_real - target||_2 - lambda_dmp * ||pred_fake -
/// pred_real||_2, norms over flattened maps, batch-averaged. May be negative.
template <typename T>
Var<T> predictor_loss(Var<T> pred_real, Var<T> target, Var<T> pred_fake, T lambda_dmp);

} // namespace cpnet
