// Copyright (c) 2026 The CPNet Authors
// SPDX-License-Identifier: Apache-2.0

#include "cpnet/discriminators.hpp"

#include <algorithm>

#include "cpnet/errors.hpp"

namespace cpnet {

template <typename T>
PatchDiscriminator<T>::PatchDiscriminator(int in_channels, int base_width, int levels,
                                          Rng& rng)
    : in_channels_(in_channels), levels_(levels) {
    if (in_channels < 1) throw ConfigError("discriminator: in_channels must be positive");
    if (base_width < 2) throw ConfigError("discriminator: base_width must be >= 2");
    if (levels < 1) throw ConfigError("discriminator: need at least one level");

    int in_ch = in_channels;
    for (int i = 1; i <= levels; ++i) {
        const int out_ch = std::min(base_width << (i - 1), 8 * base_width);
        widths_.push_back(out_ch);
        const std::string p = "lvl" + std::to_string(i);
        Tensor<T> w = he_normal<T>(rng, {out_ch, in_ch, 4, 4});
        params_.add(p + "/w", w);
        params_.add(p + "/b", Tensor<T>({out_ch}, T(0)));
        if (i >= 2) {
            params_.add(p + "/in/gamma", Tensor<T>({out_ch}, T(1)));
            params_.add(p + "/in/beta", Tensor<T>({out_ch}, T(0)));
        }
        in_ch = out_ch;
    }
    Tensor<T> w = he_normal<T>(rng, {1, in_ch, 3, 3});
    params_.add("out/w", w);
    params_.add("out/b", Tensor<T>({1}, T(0)));
}

template <typename T>
Var<T> PatchDiscriminator<T>::forward(Tape<T>& tape, Var<T> x, bool frozen) const {
    const auto& xs = tape.value_of(x).shape();
    if (xs.size() != 4 || xs[1] != in_channels_)
        throw ShapeError("discriminator: input must be [N," + std::to_string(in_channels_) +
                         ",H,W], got " + shape_str(xs));
    auto bind = [&](const std::string& n) {
        return frozen ? params_.use_frozen(tape, n) : params_.use(tape, n);
    };
    Var<T> cur = x;
    for (int i = 1; i <= levels_; ++i) {
        const std::string p = "lvl" + std::to_string(i);
        cur = conv2d(cur, bind(p + "/w"), bind(p + "/b"), 2, 1);
        if (i >= 2) cur = instance_norm(cur, bind(p + "/in/gamma"), bind(p + "/in/beta"));
        cur = leaky_relu(cur, T(0.2));
    }
    return conv2d(cur, bind("out/w"), bind("out/b"), 1, 1);
}

template <typename T>
Var<T> frame_disc_input(Tape<T>& tape, Var<T> landmark_window, Var<T> candidate) {
    (void)tape;
    const Var<T> parts[2] = {landmark_window, candidate};
    return concat_channels(std::span<const Var<T>>(parts, 2));
}

template <typename T>
Var<T> sequence_disc_input(Tape<T>& tape, std::span<const Var<T>> landmark_windows,
                           std::span<const Var<T>> candidates) {
    (void)tape;
    if (landmark_windows.size() != candidates.size() || landmark_windows.empty())
        throw ShapeError("sequence_disc_input: need matching, non-empty frame lists");
    std::vector<Var<T>> parts;
    parts.reserve(2 * landmark_windows.size());
    for (std::size_t t = 0; t < landmark_windows.size(); ++t) {
        parts.push_back(landmark_windows[t]);
        parts.push_back(candidates[t]);
    }
    return concat_channels(std::span<const Var<T>>(parts.data(), parts.size()));
}

template class PatchDiscriminator<float>;
template class PatchDiscriminator<double>;
template Var<float> frame_disc_input<float>(Tape<float>&, Var<float>, Var<float>);
template Var<double> frame_disc_input<double>(Tape<double>&, Var<double>, Var<double>);
template Var<float> sequence_disc_input<float>(Tape<float>&, std::span<const Var<float>>,
                                               std::span<const Var<float>>);
template Var<double> sequence_disc_input<double>(Tape<double>&, std::span<const Var<double>>,
                                                 std::span<const Var<double>>);

} // namespace cpnet
