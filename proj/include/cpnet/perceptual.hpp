// Copyright (c) 2026 The CPNet Authors
// SPDX-License-Identifier: Apache-2.0

#pragma once

#include <memory>
#include <string>
#include <vector>

#include "cpnet/nn.hpp"
#include "cpnet/tape.hpp"

namespace cpnet {

/// Frozen feature extractor for the perceptual loss. extract() runs on the
/// caller's tape so gradients flow into the image, never into the extractor.
template <typename T>
class PerceptualExtractor {
public:
    virtual ~PerceptualExtractor() = default;
    /// image: [N,3,H,W] in [0,1] -> one feature map per tapped layer.
    virtual std::vector<Var<T>> extract(Tape<T>& tape, Var<T> image) const = 0;
    virtual int layer_count() const = 0;
};

/// Seeded random-convolution stub. With num_layers == 1 the single "feature"
/// is the image itself, which makes the extractor injective.
template <typename T>
class StubPerceptualExtractor final : public PerceptualExtractor<T> {
public:
    StubPerceptualExtractor(std::uint64_t seed, int num_layers = 3);
    std::vector<Var<T>> extract(Tape<T>& tape, Var<T> image) const override;
    int layer_count() const override { return layers_; }

    const ParamStore<T>& params() const { return params_; }

private:
    int layers_;
    ParamStore<T> params_;
};

/// VGG16 convolutional trunk loaded from a weight archive; features are
/// tapped after convolutions 2, 4, 7, and 10 (post-ReLU).
template <typename T>
class VggExtractor final : public PerceptualExtractor<T> {
public:
    /// Throws ExtractorLoadError when the archive is missing or malformed.
    explicit VggExtractor(const std::string& weights_path);
    std::vector<Var<T>> extract(Tape<T>& tape, Var<T> image) const override;
    int layer_count() const override { return 4; }

    const ParamStore<T>& params() const { return params_; }

private:
    ParamStore<T> params_;
};

template <typename T>
std::unique_ptr<PerceptualExtractor<T>> make_perceptual_extractor(const std::string& backend,
                                                                  std::uint64_t seed,
                                                                  const std::string& weights_path);

} // namespace cpnet
