// Copyright (c) 2026 The CPNet Authors
// SPDX-License-Identifier: Apache-2.0

#include "cpnet/perceptual.hpp"

#include <array>

#include "cpnet/archive.hpp"
#include "cpnet/errors.hpp"
#include "cpnet/ops.hpp"
#include "cpnet/rng.hpp"

namespace cpnet {

template <typename T>
StubPerceptualExtractor<T>::StubPerceptualExtractor(std::uint64_t seed, int num_layers)
    : layers_(num_layers) {
    if (num_layers < 1) throw ConfigError("stub extractor needs at least one layer");
    Rng rng(seed);
    int in_ch = 3;
    // Layer 1 is the identity; every further layer gets a fixed random conv.
    for (int l = 2; l <= layers_; ++l) {
        const int out_ch = 8;
        Tensor<T> w = normal_init<T>(rng, {out_ch, in_ch, 3, 3}, std::sqrt(2.0 / (in_ch * 9)));
        params_.add("conv" + std::to_string(l) + "/w", w, false);
        params_.add("conv" + std::to_string(l) + "/b", Tensor<T>({out_ch}, T(0)), false);
        in_ch = out_ch;
    }
}

template <typename T>
std::vector<Var<T>> StubPerceptualExtractor<T>::extract(Tape<T>& tape, Var<T> image) const {
    std::vector<Var<T>> feats;
    feats.push_back(image);
    Var<T> x = image;
    for (int l = 2; l <= layers_; ++l) {
        const std::string p = "conv" + std::to_string(l);
        x = conv2d(x, params_.use(tape, p + "/w"), params_.use(tape, p + "/b"), 1, 1);
        x = leaky_relu(x, T(0.2));
        if (l % 2 == 0 && tape.value_of(x).dim(2) >= 2 && tape.value_of(x).dim(3) >= 2)
            x = max_pool2x2(x);
        feats.push_back(x);
    }
    return feats;
}

namespace {

struct VggLayer {
    const char* name;
    int in_ch;
    int out_ch;
    bool pool_before; // maxpool between blocks precedes this conv
};

// VGG16 trunk through conv4_3. Feature taps follow convolutions 2, 4, 7, 10.
constexpr std::array<VggLayer, 10> kVggLayers = {{
    {"conv1_1", 3, 64, false},
    {"conv1_2", 64, 64, false},
    {"conv2_1", 64, 128, true},
    {"conv2_2", 128, 128, false},
    {"conv3_1", 128, 256, true},
    {"conv3_2", 256, 256, false},
    {"conv3_3", 256, 256, false},
    {"conv4_1", 256, 512, true},
    {"conv4_2", 512, 512, false},
    {"conv4_3", 512, 512, false},
}};

constexpr std::array<int, 4> kVggTaps = {2, 4, 7, 10}; // 1-based conv indices

} // namespace

template <typename T>
VggExtractor<T>::VggExtractor(const std::string& weights_path) {
    std::unique_ptr<ArchiveReader> reader;
    try {
        reader = std::make_unique<ArchiveReader>(weights_path);
    } catch (const IoError& e) {
        throw ExtractorLoadError(std::string("vgg16 weights: ") + e.what());
    }
    for (const auto& layer : kVggLayers) {
        const std::string wn = std::string(layer.name) + "/w";
        const std::string bn = std::string(layer.name) + "/b";
        if (!reader->contains(wn) || !reader->contains(bn))
            throw ExtractorLoadError("vgg16 weights: missing array " + wn);
        Tensor<T> w, b;
        try {
            w = reader->template get<T>(wn);
            b = reader->template get<T>(bn);
        } catch (const IoError& e) {
            throw ExtractorLoadError(std::string("vgg16 weights: ") + e.what());
        }
        if (w.rank() != 4 || w.dim(0) != layer.out_ch || w.dim(1) != layer.in_ch ||
            w.dim(2) != 3 || w.dim(3) != 3)
            throw ExtractorLoadError("vgg16 weights: " + wn + " has shape " +
                                     shape_str(w.shape()) + ", expected [" +
                                     std::to_string(layer.out_ch) + "," +
                                     std::to_string(layer.in_ch) + ",3,3]");
        if (b.rank() != 1 || b.dim(0) != layer.out_ch)
            throw ExtractorLoadError("vgg16 weights: " + bn + " has shape " +
                                     shape_str(b.shape()));
        params_.add(wn, w, false);
        params_.add(bn, b, false);
    }
}

template <typename T>
std::vector<Var<T>> VggExtractor<T>::extract(Tape<T>& tape, Var<T> image) const {
    std::vector<Var<T>> feats;
    Var<T> x = image;
    int conv_index = 0;
    std::size_t tap = 0;
    for (const auto& layer : kVggLayers) {
        if (layer.pool_before) x = max_pool2x2(x);
        x = conv2d(x, params_.use(tape, std::string(layer.name) + "/w"),
                   params_.use(tape, std::string(layer.name) + "/b"), 1, 1);
        x = relu(x);
        ++conv_index;
        if (tap < kVggTaps.size() && conv_index == kVggTaps[tap]) {
            feats.push_back(x);
            ++tap;
        }
    }
    return feats;
}

template <typename T>
std::unique_ptr<PerceptualExtractor<T>> make_perceptual_extractor(const std::string& backend,
                                                                  std::uint64_t seed,
                                                                  const std::string& weights_path) {
    if (backend == "stub") return std::make_unique<StubPerceptualExtractor<T>>(seed);
    if (backend == "vgg16") {
        if (weights_path.empty())
            throw ConfigError("perceptual backend 'vgg16' requires a weights path");
        return std::make_unique<VggExtractor<T>>(weights_path);
    }
    throw ConfigError("unknown perceptual backend '" + backend + "'");
}

template class StubPerceptualExtractor<float>;
template class StubPerceptualExtractor<double>;
template class VggExtractor<float>;
template class VggExtractor<double>;
template std::unique_ptr<PerceptualExtractor<float>>
make_perceptual_extractor<float>(const std::string&, std::uint64_t, const std::string&);
template std::unique_ptr<PerceptualExtractor<double>>
make_perceptual_extractor<double>(const std::string&, std::uint64_t, const std::string&);

} // namespace cpnet
