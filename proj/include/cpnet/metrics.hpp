// Copyright (c) 2026 The CPNet Authors
// SPDX-License-Identifier: Apache-2.0

#pragma once

#include <optional>
#include <span>
#include <string>
#include <vector>

#include "cpnet/data_pipeline.hpp"
#include "cpnet/tensor.hpp"

namespace cpnet {

/// Peak signal-to-noise ratio in dB over all elements; MSE accumulates in
/// double. Near-identical inputs (MSE < max^2 * 1e-10) report the 100 dB cap.
template <typename T>
double psnr(const Tensor<T>& a, const Tensor<T>& b, double max_value = 1.0);

/// Mean structural similarity: 11x11 Gaussian window (sigma 1.5), K1=0.01,
/// K2=0.03, valid windows only, averaged over channels. Inputs are [C,H,W]
/// or [H,W] with H,W >= 11.
template <typename T>
double ssim(const Tensor<T>& a, const Tensor<T>& b, double max_value = 1.0);

struct ClipMetrics {
    std::string name;
    int frames = 0;
    double psnr = 0.0;
    double ssim = 0.0;
};

/// Corpus-level report. FVD and the lip-sync scores need external models, so
/// they stay unset here and render as "n/a".
struct MetricReport {
    std::string method;
    std::vector<ClipMetrics> clips;
    double mean_psnr = 0.0;
    double mean_ssim = 0.0;
    std::optional<double> fvd;
    std::optional<double> lse_c;
    std::optional<double> lse_d;

    std::string to_csv() const;
    std::string to_table() const;
};

/// Produces the evaluation frames for one clip: targets t = 3 .. len-4, in
/// order, so result[k] corresponds to source frame k+3.
class VideoSynthesizer {
public:
    virtual ~VideoSynthesizer() = default;
    virtual std::vector<Tensor<float>> synthesize(const FrameClip& clip) = 0;
};

/// Runs the synthesizer over every clip and scores frames against ground
/// truth, skipping the first and last three frames of each clip.
MetricReport evaluate_corpus(VideoSynthesizer& synthesizer, std::span<const FrameClip> clips,
                             const std::string& method);

} // namespace cpnet
