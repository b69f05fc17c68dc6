// Copyright (c) 2026 The CPNet Authors
// SPDX-License-Identifier: Apache-2.0

#pragma once

#include <array>
#include <optional>
#include <string>
#include <vector>

#include "cpnet/rng.hpp"
#include "cpnet/tensor.hpp"

namespace cpnet {

/// Facial landmarks as normalized (x, y) coordinates in [0,1]^2.
struct LandmarkSet {
    std::vector<std::array<double, 2>> points;

    std::size_t size() const { return points.size(); }
};

/// An ordered sequence of RGB frames with per-frame landmarks.
struct FrameClip {
    std::vector<Tensor<float>> frames; // each [3,H,W], values in [0,1]
    std::vector<LandmarkSet> landmarks;
    double frame_rate = 25.0;

    int size() const { return static_cast<int>(frames.size()); }
    int height() const { return frames.empty() ? 0 : frames.front().dim(1); }
    int width() const { return frames.empty() ? 0 : frames.front().dim(2); }
    void validate() const; // throws ShapeError on broken invariants
};

/// Conditioning input for one target frame: seven rasterized landmark images
/// covering t-3..t+3, plus optional prior RGB frames for teacher forcing.
struct ConditioningWindow {
    std::vector<Tensor<float>> landmark_images; // 7 x [1,H,W]
    int target_index = 0;                       // t within the source clip
    std::vector<Tensor<float>> prior_rgb;       // empty, or 3 x [3,H,W] (t-3..t-1)

    int channel_count() const {
        return static_cast<int>(landmark_images.size() + 3 * prior_rgb.size());
    }
};

constexpr int kWindowRadius = 3;
constexpr int kWindowSize = 2 * kWindowRadius + 1;
constexpr int kToyLandmarkCount = 28; // 20 mouth contour + 8 head outline

/// Deterministic procedural clips: gradient background, static head ellipse,
/// and a mouth ellipse whose opening follows a smooth seeded signal.
std::vector<FrameClip> make_toy_dataset(std::uint64_t seed, int num_clips, int frames_per_clip,
                                        int resolution);

/// Dot-count image: +1.0 at round(y*(H-1)), round(x*(W-1)) per landmark
/// (coordinates clamped to [0,1] first), 0 elsewhere. Landmarks that round
/// to the same pixel stack, so the image total always equals the landmark
/// count.
template <typename T>
Tensor<T> rasterize_landmarks(const LandmarkSet& lms, int height, int width);

/// Window for target frame t. Requires 3 <= t <= clip.size()-4.
ConditioningWindow build_window(const FrameClip& clip, int t, bool teacher_forcing);

/// Centered square crop. The window centers on `center` (pixel coordinates,
/// row/col) when given, else on the image center; it is clamped to stay
/// inside the image.
template <typename T>
Tensor<T> center_crop(const Tensor<T>& image, int size,
                      std::optional<std::array<double, 2>> center = std::nullopt);

/// Crops every frame around the clip-mean landmark centroid and remaps the
/// landmark coordinates into the crop.
FrameClip center_crop_clip(const FrameClip& clip, int size);

/// Clip directory I/O. Layout: <dir>/clip_0000/frame_00000.png ... plus
/// landmarks.csv rows "frame_index,x1,y1,...".
void save_clips(const std::string& dir, const std::vector<FrameClip>& clips);
std::vector<FrameClip> load_clips(const std::string& dir);

} // namespace cpnet
