// Copyright (c) 2026 The CPNet Authors
// SPDX-License-Identifier: Apache-2.0

#pragma once

#include <span>
#include <string>
#include <utility>
#include <vector>

#include "cpnet/data_pipeline.hpp"
#include "cpnet/nn.hpp"
#include "cpnet/ops.hpp"
#include "cpnet/rng.hpp"
#include "cpnet/tape.hpp"

namespace cpnet {

struct GeneratorConfig {
    int input_channels = 7;  // 7 landmark maps; +9 when prior RGB is appended
    int base_width = 32;
    int encoder_levels = 4;
    int transition_blocks = 3;
    int output_channels = 3;
    int resolution = 64;
    bool dense_fusion = true;

    /// Encoder width at level i (1-based), capped at 4x the base width.
    int channels_at(int level) const;
    /// Decoder output width at stage k (1-based); the last stage halves the base.
    int decoder_out_at(int stage) const;
    void validate() const; // throws ConfigError
};

/// First three encoder feature maps, reused by every fusion site.
template <typename T>
struct FeatureMapSet {
    Var<T> e1, e2, e3;
};

/// Adds channel-projected, spatially-matched copies of e1..e3 onto x.
/// projections holds one (w [C,Ci,1,1], b [C]) pair per feature map. The 1x1
/// projection commutes with average pooling and bilinear resizing, so the
/// cheaper order is used per map: pool-then-project when shrinking,
/// project-then-resize when growing.
template <typename T>
Var<T> dense_fuse(Tape<T>& tape, Var<T> x, const FeatureMapSet<T>& features,
                  std::span<const std::pair<Var<T>, Var<T>>> projections);

/// Encoder/decoder generator with residual transition blocks. Eight hook
/// points (the inputs of t1..t3, d1..d4, and the output conv) each receive
/// dense skip fusion followed by optional channel gating.
template <typename T>
class Generator {
public:
    Generator(const GeneratorConfig& config, Rng& rng);

    const GeneratorConfig& config() const { return cfg_; }
    /// Hook names with their channel widths, in application order.
    const std::vector<std::pair<std::string, int>>& hooks() const { return hooks_; }

    /// x: [N,input_channels,H,W]. gates, when given, holds one [N,C] tensor
    /// per hook (same order as hooks()). Returns [N,output_channels,H,W].
    Var<T> forward(Tape<T>& tape, Var<T> x,
                   const std::vector<Var<T>>* gates = nullptr,
                   bool frozen = false) const;

    /// Encoder only; exposes e1..e3 and the bottleneck for shape checks.
    struct Encoded {
        FeatureMapSet<T> features;
        Var<T> bottleneck;
    };
    Encoded encode(Tape<T>& tape, Var<T> x, bool frozen = false) const;

    ParamStore<T>& params() { return params_; }
    const ParamStore<T>& params() const { return params_; }

private:
    Var<T> bind(Tape<T>& tape, const std::string& name, bool frozen) const;

    GeneratorConfig cfg_;
    ParamStore<T> params_;
    std::vector<std::pair<std::string, int>> hooks_;
};

/// Stacks conditioning windows into a generator input batch
/// [N, 7(+9), H, W]: landmark channels first, then prior RGB frames in time
/// order. All windows must agree on channel count and spatial size.
template <typename T>
Tensor<T> window_batch(std::span<const ConditioningWindow> windows);

} // namespace cpnet
