// Copyright (c) 2026 The CPNet Authors
// SPDX-License-Identifier: Apache-2.0

#pragma once

#include <span>
#include <string>
#include <vector>

#include "cpnet/nn.hpp"
#include "cpnet/ops.hpp"
#include "cpnet/rng.hpp"
#include "cpnet/tape.hpp"

namespace cpnet {

/// Strided patch critic: conv4x4/s2 stages (instance norm from stage 2,
/// LeakyReLU 0.2) followed by a 3x3 head producing one score per patch.
/// A 64x64 input with three stages yields an 8x8 score grid.
template <typename T>
class PatchDiscriminator {
public:
    PatchDiscriminator(int in_channels, int base_width, int levels, Rng& rng);

    int in_channels() const { return in_channels_; }
    /// x: [N,in_channels,H,W] -> [N,1,H/2^levels,W/2^levels].
    Var<T> forward(Tape<T>& tape, Var<T> x, bool frozen = false) const;

    ParamStore<T>& params() { return params_; }
    const ParamStore<T>& params() const { return params_; }

private:
    int in_channels_;
    int levels_;
    std::vector<int> widths_;
    ParamStore<T> params_;
};

/// Frame critic input: landmark window [N,7,H,W] || candidate [N,3,H,W].
template <typename T>
Var<T> frame_disc_input(Tape<T>& tape, Var<T> landmark_window, Var<T> candidate);

/// Sequence critic input: per-frame window||candidate pairs concatenated in
/// time order, [N, 10*T, H, W].
template <typename T>
Var<T> sequence_disc_input(Tape<T>& tape, std::span<const Var<T>> landmark_windows,
                           std::span<const Var<T>> candidates);

} // namespace cpnet
