// Copyright (c) 2026 The CPNet Authors
// SPDX-License-Identifier: Apache-2.0

#pragma once

#include "cpnet/perceptual.hpp"
#include "cpnet/probability_map.hpp"
#include "cpnet/tape.hpp"
#include "cpnet/tensor.hpp"

namespace cpnet {

/// Weights of the composite generator objective. The dmp coefficient belongs
/// to the map predictor's own objective, not the generator's.
struct LossWeights {
    double adversarial = 1.0;
    double reconstruction = 5.0;
    double temporal = 1.0;
    double probability = 0.1;
    double lambda_dmp = 0.1;
};

/// Least-squares critic objective: mean((real-1)^2) + mean(fake^2).
template <typename T>
Var<T> lsgan_discriminator_loss(Tape<T>& tape, Var<T> real_scores, Var<T> fake_scores);

/// Least-squares generator objective: mean((fake-1)^2).
template <typename T>
Var<T> lsgan_generator_loss(Tape<T>& tape, Var<T> fake_scores);

/// Feature-space reconstruction: mean over tapped layers of the batch-mean
/// per-sample L1 distance between extractor features of generated and target.
template <typename T>
Var<T> perceptual_loss(const PerceptualExtractor<T>& extractor, Tape<T>& tape,
                       Var<T> generated, Var<T> target);

/// Map-consistency term: batch-mean Euclidean distance between the frozen
/// predictor's maps of generated and target frames. Gradients reach only the
/// generated frames.
template <typename T>
Var<T> probability_consistency_loss(const MapPredictor<T>& predictor, Tape<T>& tape,
                                    Var<T> generated, Var<T> target);

/// Variant that compares against precomputed target maps [N,1,H,W] instead of
/// running the predictor on the target frames.
template <typename T>
Var<T> probability_consistency_loss(const MapPredictor<T>& predictor, Tape<T>& tape,
                                    Var<T> generated, const Tensor<T>& target_maps);

/// Weighted sum of the four generator terms. Undefined terms contribute zero,
/// which is how ablations drop components.
template <typename T>
Var<T> total_generator_loss(Tape<T>& tape, const LossWeights& weights, Var<T> adversarial,
                            Var<T> reconstruction, Var<T> temporal, Var<T> probability);

/// Scalar mirror of the weighted sum, for logging and tests.
double total_generator_loss(const LossWeights& weights, double adversarial,
                            double reconstruction, double temporal, double probability);

} // namespace cpnet
