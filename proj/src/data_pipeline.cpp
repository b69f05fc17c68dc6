// Copyright (c) 2026 The CPNet Authors
// SPDX-License-Identifier: Apache-2.0

#include "cpnet/data_pipeline.hpp"

#include <algorithm>
#include <cmath>
#include <cstdio>
#include <filesystem>
#include <fstream>
#include <numbers>
#include <sstream>

#include "cpnet/errors.hpp"
#include "cpnet/image_io.hpp"

namespace fs = std::filesystem;

namespace cpnet {

void FrameClip::validate() const {
    if (frames.size() != landmarks.size()) throw ShapeError("clip frame/landmark count mismatch");
    if (frames.size() < kWindowSize) throw ShapeError("clip shorter than the conditioning window");
    for (const auto& f : frames) {
        if (f.rank() != 3 || f.dim(0) != 3 || f.dim(1) != height() || f.dim(2) != width()) {
            throw ShapeError("clip frames disagree in shape");
        }
    }
}

namespace {

struct ToyScene {
    double bg[3][3];          // per-channel: offset, x slope, y slope
    double head_cx, head_cy, head_rx, head_ry;
    double head_color[3];
    double mouth_cx, mouth_cy, mouth_rx;
    double lip_color[3];
    // Mouth opening a(t): two seeded sinusoids, clamped to [0.02, 0.12].
    double a1, f1, p1, a2, f2, p2;

    double opening(int t, int len) const {
        const double tau = 2.0 * std::numbers::pi * t / len;
        const double a = 0.07 + a1 * std::sin(f1 * tau + p1) + a2 * std::sin(f2 * tau + p2);
        return std::clamp(a, 0.02, 0.12);
    }
};

ToyScene make_scene(Rng& rng) {
    ToyScene s;
    for (int c = 0; c < 3; ++c) {
        s.bg[c][0] = rng.uniform(0.1, 0.45);
        s.bg[c][1] = rng.uniform(-0.15, 0.15);
        s.bg[c][2] = rng.uniform(-0.15, 0.15);
    }
    s.head_cx = rng.uniform(0.47, 0.53);
    s.head_cy = rng.uniform(0.42, 0.48);
    s.head_rx = rng.uniform(0.26, 0.30);
    s.head_ry = rng.uniform(0.36, 0.40);
    s.head_color[0] = rng.uniform(0.75, 0.9);
    s.head_color[1] = rng.uniform(0.55, 0.7);
    s.head_color[2] = rng.uniform(0.45, 0.6);
    s.mouth_cx = s.head_cx;
    s.mouth_cy = s.head_cy + rng.uniform(0.16, 0.20);
    s.mouth_rx = rng.uniform(0.09, 0.11);
    s.lip_color[0] = rng.uniform(0.4, 0.55);
    s.lip_color[1] = rng.uniform(0.05, 0.12);
    s.lip_color[2] = rng.uniform(0.08, 0.16);
    s.a1 = rng.uniform(0.02, 0.035);
    s.f1 = 1.0 + rng.below(3);
    s.p1 = rng.uniform(0.0, 2.0 * std::numbers::pi);
    s.a2 = rng.uniform(0.005, 0.015);
    s.f2 = 3.0 + rng.below(4);
    s.p2 = rng.uniform(0.0, 2.0 * std::numbers::pi);
    return s;
}

Tensor<float> render_frame(const ToyScene& s, double a, int res) {
    Tensor<float> img({3, res, res});
    for (int h = 0; h < res; ++h) {
        const double y = static_cast<double>(h) / (res - 1);
        for (int w = 0; w < res; ++w) {
            const double x = static_cast<double>(w) / (res - 1);
            const double hx = (x - s.head_cx) / s.head_rx;
            const double hy = (y - s.head_cy) / s.head_ry;
            const bool in_head = hx * hx + hy * hy <= 1.0;
            const double mx = (x - s.mouth_cx) / s.mouth_rx;
            const double my = (y - s.mouth_cy) / a;
            const bool in_mouth = in_head && mx * mx + my * my <= 1.0;
            for (int c = 0; c < 3; ++c) {
                double v;
                if (in_mouth) {
                    v = s.lip_color[c];
                } else if (in_head) {
                    v = s.head_color[c];
                } else {
                    v = s.bg[c][0] + s.bg[c][1] * x + s.bg[c][2] * y;
                }
                img.at(c, h, w) = static_cast<float>(std::clamp(v, 0.0, 1.0));
            }
        }
    }
    return img;
}

LandmarkSet scene_landmarks(const ToyScene& s, double a) {
    LandmarkSet lms;
    lms.points.reserve(kToyLandmarkCount);
    for (int k = 0; k < 20; ++k) {
        const double th = 2.0 * std::numbers::pi * k / 20;
        lms.points.push_back({std::clamp(s.mouth_cx + s.mouth_rx * std::cos(th), 0.0, 1.0),
                              std::clamp(s.mouth_cy + a * std::sin(th), 0.0, 1.0)});
    }
    for (int k = 0; k < 8; ++k) {
        const double th = 2.0 * std::numbers::pi * k / 8;
        lms.points.push_back({std::clamp(s.head_cx + s.head_rx * std::cos(th), 0.0, 1.0),
                              std::clamp(s.head_cy + s.head_ry * std::sin(th), 0.0, 1.0)});
    }
    return lms;
}

} // namespace

std::vector<FrameClip> make_toy_dataset(std::uint64_t seed, int num_clips, int frames_per_clip,
                                        int resolution) {
    if (resolution < 32) throw ConfigError("toy resolution must be >= 32");
    if (frames_per_clip < kWindowSize) throw ConfigError("toy clips need at least 7 frames");
    if (num_clips < 1) throw ConfigError("toy dataset needs at least one clip");
    std::vector<FrameClip> clips;
    clips.reserve(static_cast<std::size_t>(num_clips));
    for (int k = 0; k < num_clips; ++k) {
        Rng rng(seed * 1000003ULL + static_cast<std::uint64_t>(k));
        const ToyScene scene = make_scene(rng);
        FrameClip clip;
        clip.frames.reserve(static_cast<std::size_t>(frames_per_clip));
        clip.landmarks.reserve(static_cast<std::size_t>(frames_per_clip));
        for (int t = 0; t < frames_per_clip; ++t) {
            const double a = scene.opening(t, frames_per_clip);
            clip.frames.push_back(render_frame(scene, a, resolution));
            clip.landmarks.push_back(scene_landmarks(scene, a));
        }
        clips.push_back(std::move(clip));
    }
    return clips;
}

template <typename T>
Tensor<T> rasterize_landmarks(const LandmarkSet& lms, int height, int width) {
    if (height < 1 || width < 1) throw ShapeError("rasterize_landmarks needs positive size");
    Tensor<T> img({1, height, width});
    for (const auto& p : lms.points) {
        const double x = std::clamp(p[0], 0.0, 1.0);
        const double y = std::clamp(p[1], 0.0, 1.0);
        const int col = static_cast<int>(std::lround(x * (width - 1)));
        const int row = static_cast<int>(std::lround(y * (height - 1)));
        img.at(0, row, col) += T(1);
    }
    return img;
}

ConditioningWindow build_window(const FrameClip& clip, int t, bool teacher_forcing) {
    const int len = clip.size();
    if (t < kWindowRadius || t > len - kWindowRadius - 1) {
        throw ShapeError("window target out of range: t=" + std::to_string(t) +
                         " len=" + std::to_string(len));
    }
    ConditioningWindow w;
    w.target_index = t;
    w.landmark_images.reserve(kWindowSize);
    for (int k = t - kWindowRadius; k <= t + kWindowRadius; ++k) {
        w.landmark_images.push_back(
            rasterize_landmarks<float>(clip.landmarks[static_cast<std::size_t>(k)],
                                       clip.height(), clip.width()));
    }
    if (teacher_forcing) {
        for (int k = t - kWindowRadius; k < t; ++k) {
            w.prior_rgb.push_back(clip.frames[static_cast<std::size_t>(k)]);
        }
    }
    return w;
}

template <typename T>
Tensor<T> center_crop(const Tensor<T>& image, int size,
                      std::optional<std::array<double, 2>> center) {
    if (image.rank() != 3) throw ShapeError("center_crop expects [C,H,W]");
    const int C = image.dim(0), H = image.dim(1), W = image.dim(2);
    if (size < 1 || size > H || size > W) throw ShapeError("crop size exceeds image");
    double cy = center ? (*center)[0] : (H - 1) / 2.0;
    double cx = center ? (*center)[1] : (W - 1) / 2.0;
    int top = static_cast<int>(std::lround(cy - (size - 1) / 2.0));
    int left = static_cast<int>(std::lround(cx - (size - 1) / 2.0));
    top = std::clamp(top, 0, H - size);
    left = std::clamp(left, 0, W - size);
    Tensor<T> out({C, size, size});
    for (int c = 0; c < C; ++c) {
        for (int h = 0; h < size; ++h) {
            for (int w = 0; w < size; ++w) out.at(c, h, w) = image.at(c, top + h, left + w);
        }
    }
    return out;
}

FrameClip center_crop_clip(const FrameClip& clip, int size) {
    clip.validate();
    const int H = clip.height(), W = clip.width();
    if (size > H || size > W) throw ShapeError("crop size exceeds clip resolution");
    if (size == H && size == W) return clip;
    // One crop window for the whole clip, centered on the mean landmark
    // centroid, so the crop is temporally stable.
    double sy = 0.0, sx = 0.0;
    std::int64_t n = 0;
    for (const auto& lms : clip.landmarks) {
        for (const auto& p : lms.points) {
            sx += p[0];
            sy += p[1];
            ++n;
        }
    }
    const double cy = n ? sy / n * (H - 1) : (H - 1) / 2.0;
    const double cx = n ? sx / n * (W - 1) : (W - 1) / 2.0;
    int top = static_cast<int>(std::lround(cy - (size - 1) / 2.0));
    int left = static_cast<int>(std::lround(cx - (size - 1) / 2.0));
    top = std::clamp(top, 0, H - size);
    left = std::clamp(left, 0, W - size);

    FrameClip out;
    out.frame_rate = clip.frame_rate;
    out.frames.reserve(clip.frames.size());
    out.landmarks.reserve(clip.landmarks.size());
    for (int t = 0; t < clip.size(); ++t) {
        out.frames.push_back(center_crop(clip.frames[static_cast<std::size_t>(t)], size,
                                         std::array<double, 2>{cy, cx}));
        LandmarkSet lms;
        lms.points.reserve(clip.landmarks[static_cast<std::size_t>(t)].points.size());
        for (const auto& p : clip.landmarks[static_cast<std::size_t>(t)].points) {
            lms.points.push_back({std::clamp((p[0] * (W - 1) - left) / (size - 1), 0.0, 1.0),
                                  std::clamp((p[1] * (H - 1) - top) / (size - 1), 0.0, 1.0)});
        }
        out.landmarks.push_back(std::move(lms));
    }
    return out;
}

void save_clips(const std::string& dir, const std::vector<FrameClip>& clips) {
    fs::create_directories(dir);
    char name[32];
    for (std::size_t k = 0; k < clips.size(); ++k) {
        const FrameClip& clip = clips[k];
        clip.validate();
        std::snprintf(name, sizeof(name), "clip_%04zu", k);
        const fs::path cdir = fs::path(dir) / name;
        fs::create_directories(cdir);
        for (int t = 0; t < clip.size(); ++t) {
            std::snprintf(name, sizeof(name), "frame_%05d.png", t);
            write_image_rgb((cdir / name).string(), clip.frames[static_cast<std::size_t>(t)]);
        }
        std::ofstream csv(cdir / "landmarks.csv");
        if (!csv) throw IoError("cannot write " + (cdir / "landmarks.csv").string());
        csv.precision(17);
        for (int t = 0; t < clip.size(); ++t) {
            csv << t;
            for (const auto& p : clip.landmarks[static_cast<std::size_t>(t)].points) {
                csv << ',' << p[0] << ',' << p[1];
            }
            csv << '\n';
        }
    }
}

std::vector<FrameClip> load_clips(const std::string& dir) {
    if (!fs::is_directory(dir)) throw IoError("not a directory: " + dir);
    std::vector<fs::path> clip_dirs;
    for (const auto& e : fs::directory_iterator(dir)) {
        if (e.is_directory() && e.path().filename().string().rfind("clip_", 0) == 0) {
            clip_dirs.push_back(e.path());
        }
    }
    std::sort(clip_dirs.begin(), clip_dirs.end());
    if (clip_dirs.empty()) throw IoError("no clip_* directories in " + dir);

    std::vector<FrameClip> clips;
    clips.reserve(clip_dirs.size());
    for (const auto& cdir : clip_dirs) {
        FrameClip clip;
        std::ifstream csv(cdir / "landmarks.csv");
        if (!csv) throw IoError("missing landmarks.csv in " + cdir.string());
        std::string line;
        while (std::getline(csv, line)) {
            if (line.empty()) continue;
            std::stringstream ss(line);
            std::string cell;
            if (!std::getline(ss, cell, ',')) throw IoError("bad landmarks row in " + cdir.string());
            const int t = std::stoi(cell);
            if (t != static_cast<int>(clip.landmarks.size())) {
                throw IoError("non-sequential frame index in " + cdir.string());
            }
            LandmarkSet lms;
            std::vector<double> vals;
            while (std::getline(ss, cell, ',')) vals.push_back(std::stod(cell));
            if (vals.size() % 2 != 0) throw IoError("odd landmark coordinate count in " + cdir.string());
            for (std::size_t i = 0; i < vals.size(); i += 2) {
                if (!std::isfinite(vals[i]) || !std::isfinite(vals[i + 1])) {
                    throw IoError("non-finite landmark in " + cdir.string());
                }
                lms.points.push_back({vals[i], vals[i + 1]});
            }
            clip.landmarks.push_back(std::move(lms));
        }
        char name[32];
        for (std::size_t t = 0; t < clip.landmarks.size(); ++t) {
            std::snprintf(name, sizeof(name), "frame_%05zu.png", t);
            const fs::path fpath = cdir / name;
            if (!fs::exists(fpath)) throw IoError("missing frame: " + fpath.string());
            clip.frames.push_back(read_image_rgb(fpath.string()));
        }
        clip.validate();
        clips.push_back(std::move(clip));
    }
    return clips;
}

template Tensor<float> rasterize_landmarks<float>(const LandmarkSet&, int, int);
template Tensor<double> rasterize_landmarks<double>(const LandmarkSet&, int, int);
template Tensor<float> center_crop<float>(const Tensor<float>&, int, std::optional<std::array<double, 2>>);
template Tensor<double> center_crop<double>(const Tensor<double>&, int, std::optional<std::array<double, 2>>);

} // namespace cpnet
