// Copyright (c) 2026 The CPNet Authors
// SPDX-License-Identifier: Apache-2.0

#include "cpnet/generator.hpp"

#include <algorithm>

#include "cpnet/errors.hpp"

namespace cpnet {

int GeneratorConfig::channels_at(int level) const {
    return std::min(base_width << (level - 1), 4 * base_width);
}

int GeneratorConfig::decoder_out_at(int stage) const {
    if (stage == encoder_levels) return base_width / 2;
    return channels_at(encoder_levels - stage);
}

void GeneratorConfig::validate() const {
    if (input_channels < 1) throw ConfigError("generator: input_channels must be positive");
    if (output_channels < 1) throw ConfigError("generator: output_channels must be positive");
    if (encoder_levels < 3) throw ConfigError("generator: need at least 3 encoder levels");
    if (transition_blocks < 1) throw ConfigError("generator: need at least 1 transition block");
    if (base_width < 2 || base_width % 2 != 0)
        throw ConfigError("generator: base_width must be even and >= 2");
    const int stride_total = 1 << encoder_levels;
    if (resolution < stride_total || resolution % stride_total != 0)
        throw ConfigError("generator: resolution must be a positive multiple of 2^levels");
}

template <typename T>
Var<T> dense_fuse(Tape<T>& tape, Var<T> x, const FeatureMapSet<T>& features,
                  std::span<const std::pair<Var<T>, Var<T>>> projections) {
    if (projections.size() != 3) throw ShapeError("dense_fuse: expected 3 projections");
    const auto& xs = tape.value_of(x).shape();
    const int th = xs[2], tw = xs[3];
    const Var<T> maps[3] = {features.e1, features.e2, features.e3};
    Var<T> acc = x;
    for (int i = 0; i < 3; ++i) {
        Var<T> e = maps[i];
        const auto& es = tape.value_of(e).shape();
        Var<T> proj;
        if (es[2] > th || es[3] > tw) {
            Var<T> pooled = adaptive_avg_pool(e, th, tw);
            proj = conv2d(pooled, projections[i].first, projections[i].second, 1, 0);
        } else if (es[2] < th || es[3] < tw) {
            proj = conv2d(e, projections[i].first, projections[i].second, 1, 0);
            proj = bilinear_resize(proj, th, tw);
        } else {
            proj = conv2d(e, projections[i].first, projections[i].second, 1, 0);
        }
        acc = add(acc, proj);
    }
    return acc;
}

template <typename T>
Generator<T>::Generator(const GeneratorConfig& config, Rng& rng) : cfg_(config) {
    cfg_.validate();
    const int L = cfg_.encoder_levels;

    int in_ch = cfg_.input_channels;
    for (int i = 1; i <= L; ++i) {
        const int out_ch = cfg_.channels_at(i);
        const std::string p = "enc" + std::to_string(i);
        Tensor<T> w = he_normal<T>(rng, {out_ch, in_ch, 4, 4});
        params_.add(p + "/w", w);
        params_.add(p + "/b", Tensor<T>({out_ch}, T(0)));
        if (i >= 2) {
            params_.add(p + "/in/gamma", Tensor<T>({out_ch}, T(1)));
            params_.add(p + "/in/beta", Tensor<T>({out_ch}, T(0)));
        }
        in_ch = out_ch;
    }

    const int bott = cfg_.channels_at(L);
    for (int k = 1; k <= cfg_.transition_blocks; ++k) {
        const std::string p = "trans" + std::to_string(k);
        for (const char* half : {"1", "2"}) {
            Tensor<T> w = he_normal<T>(rng, {bott, bott, 3, 3});
            params_.add(p + "/conv" + half + "/w", w);
            params_.add(p + "/conv" + half + "/b", Tensor<T>({bott}, T(0)));
            params_.add(p + "/in" + half + "/gamma", Tensor<T>({bott}, T(1)));
            params_.add(p + "/in" + half + "/beta", Tensor<T>({bott}, T(0)));
        }
        hooks_.emplace_back("t" + std::to_string(k), bott);
    }

    in_ch = bott;
    for (int k = 1; k <= L; ++k) {
        const int out_ch = cfg_.decoder_out_at(k);
        const std::string p = "dec" + std::to_string(k);
        Tensor<T> w = he_normal<T>(rng, {out_ch, in_ch, 3, 3});
        params_.add(p + "/w", w);
        params_.add(p + "/b", Tensor<T>({out_ch}, T(0)));
        params_.add(p + "/in/gamma", Tensor<T>({out_ch}, T(1)));
        params_.add(p + "/in/beta", Tensor<T>({out_ch}, T(0)));
        hooks_.emplace_back("d" + std::to_string(k), in_ch);
        in_ch = out_ch;
    }

    {
        Tensor<T> w = he_normal<T>(rng, {cfg_.output_channels, in_ch, 3, 3});
        params_.add("out/w", w);
        params_.add("out/b", Tensor<T>({cfg_.output_channels}, T(0)));
        hooks_.emplace_back("out", in_ch);
    }

    // Zero-init skip projections: fusion starts as the exact identity.
    for (const auto& [hook, width] : hooks_) {
        for (int i = 1; i <= 3; ++i) {
            const std::string p = "fuse/" + hook + "/e" + std::to_string(i);
            params_.add(p + "/w", Tensor<T>({width, cfg_.channels_at(i), 1, 1}, T(0)));
            params_.add(p + "/b", Tensor<T>({width}, T(0)));
        }
    }
}

template <typename T>
Var<T> Generator<T>::bind(Tape<T>& tape, const std::string& name, bool frozen) const {
    return frozen ? params_.use_frozen(tape, name) : params_.use(tape, name);
}

template <typename T>
typename Generator<T>::Encoded Generator<T>::encode(Tape<T>& tape, Var<T> x,
                                                    bool frozen) const {
    const int L = cfg_.encoder_levels;
    std::vector<Var<T>> encs;
    Var<T> cur = x;
    for (int i = 1; i <= L; ++i) {
        const std::string p = "enc" + std::to_string(i);
        cur = conv2d(cur, bind(tape, p + "/w", frozen), bind(tape, p + "/b", frozen), 2, 1);
        if (i >= 2)
            cur = instance_norm(cur, bind(tape, p + "/in/gamma", frozen),
                                bind(tape, p + "/in/beta", frozen));
        cur = leaky_relu(cur, T(0.2));
        encs.push_back(cur);
    }
    return Encoded{FeatureMapSet<T>{encs[0], encs[1], encs[2]}, cur};
}

template <typename T>
Var<T> Generator<T>::forward(Tape<T>& tape, Var<T> x,
                             const std::vector<Var<T>>* gates, bool frozen) const {
    const auto& xs = tape.value_of(x).shape();
    if (xs.size() != 4 || xs[1] != cfg_.input_channels)
        throw ShapeError("generator: input must be [N," + std::to_string(cfg_.input_channels) +
                         ",H,W], got " + shape_str(xs));
    if (gates && gates->size() != hooks_.size())
        throw ShapeError("generator: expected one gate per hook");

    Encoded enc = encode(tape, x, frozen);
    Var<T> cur = enc.bottleneck;

    std::size_t h = 0;
    auto at_hook = [&](Var<T> v) {
        const std::string& hook = hooks_[h].first;
        if (cfg_.dense_fusion) {
            std::vector<std::pair<Var<T>, Var<T>>> proj;
            proj.reserve(3);
            for (int i = 1; i <= 3; ++i) {
                const std::string p = "fuse/" + hook + "/e" + std::to_string(i);
                proj.emplace_back(bind(tape, p + "/w", frozen), bind(tape, p + "/b", frozen));
            }
            v = dense_fuse<T>(tape, v, enc.features, proj);
        }
        if (gates) v = scale_channels(v, (*gates)[h]);
        ++h;
        return v;
    };

    for (int k = 1; k <= cfg_.transition_blocks; ++k) {
        const std::string p = "trans" + std::to_string(k);
        cur = at_hook(cur);
        Var<T> skip = cur;
        Var<T> y = conv2d(cur, bind(tape, p + "/conv1/w", frozen),
                          bind(tape, p + "/conv1/b", frozen), 1, 1);
        y = instance_norm(y, bind(tape, p + "/in1/gamma", frozen),
                          bind(tape, p + "/in1/beta", frozen));
        y = relu(y);
        y = conv2d(y, bind(tape, p + "/conv2/w", frozen),
                   bind(tape, p + "/conv2/b", frozen), 1, 1);
        y = instance_norm(y, bind(tape, p + "/in2/gamma", frozen),
                          bind(tape, p + "/in2/beta", frozen));
        cur = relu(add(y, skip));
    }

    for (int k = 1; k <= cfg_.encoder_levels; ++k) {
        const std::string p = "dec" + std::to_string(k);
        cur = at_hook(cur);
        cur = upsample_nearest2x(cur);
        cur = conv2d(cur, bind(tape, p + "/w", frozen), bind(tape, p + "/b", frozen), 1, 1);
        cur = instance_norm(cur, bind(tape, p + "/in/gamma", frozen),
                            bind(tape, p + "/in/beta", frozen));
        cur = relu(cur);
    }

    cur = at_hook(cur);
    cur = conv2d(cur, bind(tape, "out/w", frozen), bind(tape, "out/b", frozen), 1, 1);
    return sigmoid(cur);
}

template <typename T>
Tensor<T> window_batch(std::span<const ConditioningWindow> windows) {
    if (windows.empty()) throw ShapeError("window_batch: no windows");
    const int ch = windows[0].channel_count();
    const auto& first = windows[0].landmark_images.at(0);
    const int hh = first.dim(1), ww = first.dim(2);
    const int n = static_cast<int>(windows.size());

    Tensor<T> out({n, ch, hh, ww});
    for (int b = 0; b < n; ++b) {
        const auto& win = windows[b];
        if (win.channel_count() != ch)
            throw ShapeError("window_batch: windows disagree on channel count");
        int c = 0;
        auto copy_plane = [&](const Tensor<float>& src, int src_c) {
            if (src.dim(src.rank() - 2) != hh || src.dim(src.rank() - 1) != ww)
                throw ShapeError("window_batch: windows disagree on spatial size");
            for (int y = 0; y < hh; ++y)
                for (int x = 0; x < ww; ++x)
                    out.at(b, c, y, x) = static_cast<T>(src.at(src_c, y, x));
            ++c;
        };
        for (const auto& lm : win.landmark_images) copy_plane(lm, 0);
        for (const auto& rgb : win.prior_rgb)
            for (int k = 0; k < 3; ++k) copy_plane(rgb, k);
    }
    return out;
}

template struct FeatureMapSet<float>;
template struct FeatureMapSet<double>;
template Var<float> dense_fuse<float>(Tape<float>&, Var<float>, const FeatureMapSet<float>&,
                                      std::span<const std::pair<Var<float>, Var<float>>>);
template Var<double> dense_fuse<double>(Tape<double>&, Var<double>, const FeatureMapSet<double>&,
                                        std::span<const std::pair<Var<double>, Var<double>>>);
template class Generator<float>;
template class Generator<double>;
template Tensor<float> window_batch<float>(std::span<const ConditioningWindow>);
template Tensor<double> window_batch<double>(std::span<const ConditioningWindow>);

} // namespace cpnet
