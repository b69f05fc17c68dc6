// Copyright (c) 2026 The CPNet Authors
// SPDX-License-Identifier: Apache-2.0

#pragma once

#include <memory>
#include <string>
#include <vector>

#include "cpnet/nn.hpp"
#include "cpnet/tape.hpp"
#include "cpnet/tensor.hpp"

namespace cpnet {

/// Maps a landmark image to a fixed-dimension semantic embedding.
/// Implementations are deterministic and safe for concurrent calls.
class EmbeddingProvider {
public:
    virtual ~EmbeddingProvider() = default;
    virtual int dim() const = 0;
    /// landmark_image: [1,H,W], values in [0,1]. Returns a finite d-vector.
    virtual std::vector<double> embed(const Tensor<double>& landmark_image) const = 0;
};

/// Deterministic test double: a seeded Gaussian projection of the
/// 32x32-downsampled landmark image, unit-normalized.
class StubEmbeddingProvider final : public EmbeddingProvider {
public:
    StubEmbeddingProvider(std::uint64_t seed, int dim);
    int dim() const override { return dim_; }
    std::vector<double> embed(const Tensor<double>& landmark_image) const override;

private:
    int dim_;
    Tensor<double> projection_; // [dim, 32*32]
};

/// Frozen ViT image encoder loaded from a weight archive. Forward passes are
/// stateless, so concurrent calls are safe (no internal serialization).
class ClipVitProvider final : public EmbeddingProvider {
public:
    /// Throws ProviderLoadError when the archive is missing, malformed, or
    /// internally inconsistent.
    explicit ClipVitProvider(const std::string& weights_path);
    ~ClipVitProvider() override; // out of line: Block is private to the .cpp
    int dim() const override { return embed_dim_; }
    std::vector<double> embed(const Tensor<double>& landmark_image) const override;

    int image_size() const { return image_size_; }
    const std::string& variant() const { return variant_; }

private:
    struct Block;
    int image_size_ = 0, patch_size_ = 0, width_ = 0, heads_ = 0, embed_dim_ = 0;
    std::string variant_;
    Tensor<float> patch_w_, cls_, pos_;
    Tensor<float> ln_pre_g_, ln_pre_b_, ln_post_g_, ln_post_b_, proj_;
    std::vector<Block> blocks_;
};

/// Creates a provider from its config name ("stub" or "clip_vit").
std::unique_ptr<EmbeddingProvider> make_embedding_provider(const std::string& kind,
                                                           std::uint64_t seed, int stub_dim,
                                                           const std::string& weights_path);

/// sigma(v W^T): v [N,d], w [C,d] -> gating weights in (0,1)^[N,C].
template <typename T>
Var<T> gating_weights(Var<T> v, Var<T> w);

/// Channel-wise recalibration; w must have one weight per channel of x.
template <typename T>
Var<T> recalibrate(Var<T> x, Var<T> w);

/// Per-hooked-layer linear maps from the embedding to channel gates.
/// Weights start at zero, so initial gates are exactly 0.5 everywhere.
template <typename T>
class CondenserHead {
public:
    CondenserHead(const std::vector<std::pair<std::string, int>>& hooks, int embed_dim);

    /// v: [N, embed_dim] embedding batch -> one [N, C_l] gate batch per hook.
    std::vector<Var<T>> gating(Tape<T>& tape, Var<T> v, bool frozen = false) const;

    ParamStore<T>& params() { return params_; }
    const ParamStore<T>& params() const { return params_; }
    int embed_dim() const { return dim_; }

private:
    int dim_;
    std::vector<std::pair<std::string, int>> hooks_;
    ParamStore<T> params_;
};

} // namespace cpnet
