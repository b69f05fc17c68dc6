// Copyright (c) 2026 The CPNet Authors
// SPDX-License-Identifier: Apache-2.0

#include "cpnet/probability_map.hpp"

#include <cmath>

#include "cpnet/ops.hpp"

namespace cpnet {

GaussianKernel build_gaussian_kernel(int size, double sigma) {
    if (size < 1 || size % 2 == 0) throw ConfigError("Gaussian kernel size must be odd and >= 1");
    if (sigma <= 0) throw ConfigError("Gaussian kernel sigma must be > 0");
    GaussianKernel k;
    k.size = size;
    k.sigma = sigma;
    k.weights = Tensor<double>({size, size});
    const int c = (size - 1) / 2;
    double sum = 0.0;
    for (int i = 0; i < size; ++i) {
        for (int j = 0; j < size; ++j) {
            const double d2 = static_cast<double>((i - c) * (i - c) + (j - c) * (j - c));
            const double w = std::exp(-d2 / (2.0 * sigma * sigma));
            k.weights.at(i, j) = w;
            sum += w;
        }
    }
    for (double& w : k.weights.flat()) w /= sum;
    return k;
}

template <typename T>
Tensor<T> make_probability_map(const LandmarkSet& lms, int height, int width,
                               const GaussianKernel& kernel) {
    if (kernel.size > height || kernel.size > width) {
        throw ShapeError("kernel footprint exceeds the map size");
    }
    const Tensor<double> dots = rasterize_landmarks<double>(lms, height, width);
    Tensor<double> map({1, height, width});
    const int r = (kernel.size - 1) / 2;
    // The dot image is sparse, so scatter each dot's kernel instead of a
    // dense convolution. Zero padding == plain clipping at the borders.
    for (int h = 0; h < height; ++h) {
        for (int w = 0; w < width; ++w) {
            const double count = dots.at(0, h, w);
            if (count == 0.0) continue;
            for (int i = -r; i <= r; ++i) {
                const int hh = h + i;
                if (hh < 0 || hh >= height) continue;
                for (int j = -r; j <= r; ++j) {
                    const int ww = w + j;
                    if (ww < 0 || ww >= width) continue;
                    map.at(0, hh, ww) += count * kernel.weights.at(i + r, j + r);
                }
            }
        }
    }
    if constexpr (std::is_same_v<T, double>) return map;
    else return map.template cast<T>();
}

template <typename T>
MapPredictor<T>::MapPredictor(int resolution, int base_width, Rng& rng)
    : resolution_(resolution), base_(base_width) {
    if (resolution < 8 || resolution % 8 != 0) {
        throw ConfigError("map predictor resolution must be a positive multiple of 8");
    }
    if (base_width < 4) throw ConfigError("map predictor base width must be >= 4");
    const int b = base_width;
    auto conv = [&](const std::string& name, int co, int ci, int k) {
        params_.add(name + "/w", he_normal<T>(rng, {co, ci, k, k}));
        params_.add(name + "/b", Tensor<T>::zeros({co}));
    };
    auto norm = [&](const std::string& name, int c) {
        params_.add(name + "/gamma", Tensor<T>::full({c}, T(1)));
        params_.add(name + "/beta", Tensor<T>::zeros({c}));
    };
    conv("enc1", b, 3, 4);
    conv("enc2", 2 * b, b, 4);
    norm("enc2/in", 2 * b);
    conv("enc3", 4 * b, 2 * b, 4);
    norm("enc3/in", 4 * b);
    conv("dec1", 2 * b, 4 * b, 3);
    norm("dec1/in", 2 * b);
    conv("dec2", b, 2 * b, 3);
    norm("dec2/in", b);
    conv("dec3", b, b, 3);
    norm("dec3/in", b);
    conv("out", 1, b, 3);
}

template <typename T>
Var<T> MapPredictor<T>::forward(Tape<T>& tape, Var<T> x, bool frozen) const {
    const Tensor<T>& xv = x.val();
    if (xv.rank() != 4 || xv.dim(1) != 3 || xv.dim(2) != resolution_ || xv.dim(3) != resolution_) {
        throw ShapeError("map predictor expects [N,3," + std::to_string(resolution_) + "," +
                         std::to_string(resolution_) + "], got " + shape_str(xv.shape()));
    }
    auto p = [&](const std::string& name) {
        return frozen ? params_.use_frozen(tape, name) : params_.use(tape, name);
    };
    const T slope = T(0.2);
    Var<T> h = leaky_relu(conv2d(x, p("enc1/w"), p("enc1/b"), 2, 1), slope);
    h = conv2d(h, p("enc2/w"), p("enc2/b"), 2, 1);
    h = leaky_relu(instance_norm(h, p("enc2/in/gamma"), p("enc2/in/beta")), slope);
    h = conv2d(h, p("enc3/w"), p("enc3/b"), 2, 1);
    h = leaky_relu(instance_norm(h, p("enc3/in/gamma"), p("enc3/in/beta")), slope);
    h = conv2d(upsample_nearest2x(h), p("dec1/w"), p("dec1/b"), 1, 1);
    h = relu(instance_norm(h, p("dec1/in/gamma"), p("dec1/in/beta")));
    h = conv2d(upsample_nearest2x(h), p("dec2/w"), p("dec2/b"), 1, 1);
    h = relu(instance_norm(h, p("dec2/in/gamma"), p("dec2/in/beta")));
    h = conv2d(upsample_nearest2x(h), p("dec3/w"), p("dec3/b"), 1, 1);
    h = relu(instance_norm(h, p("dec3/in/gamma"), p("dec3/in/beta")));
    return softplus(conv2d(h, p("out/w"), p("out/b"), 1, 1));
}

template <typename T>
Tensor<T> MapPredictor<T>::predict(const Tensor<T>& image) const {
    if (image.rank() != 3) throw ShapeError("predict expects [3,H,W]");
    Tape<T> tape;
    Var<T> x = tape.leaf(image.reshaped({1, image.dim(0), image.dim(1), image.dim(2)}), false);
    Var<T> y = forward(tape, x, true);
    return y.val().reshaped({1, image.dim(1), image.dim(2)});
}

template <typename T>
Var<T> predictor_loss(Var<T> pred_real, Var<T> target, Var<T> pred_fake, T lambda_dmp) {
    if (lambda_dmp < T(0)) throw ConfigError("lambda_dmp must be >= 0");
    if (!pred_real.val().same_shape(target.val()) || !pred_real.val().same_shape(pred_fake.val())) {
        throw ShapeError("predictor_loss maps must share shape");
    }
    Var<T> fit = per_sample_euclidean_norm_mean(sub(pred_real, target));
    Var<T> sep = per_sample_euclidean_norm_mean(sub(pred_fake, pred_real));
    return sub(fit, scale(sep, lambda_dmp));
}

template class MapPredictor<float>;
template class MapPredictor<double>;
template Tensor<float> make_probability_map<float>(const LandmarkSet&, int, int, const GaussianKernel&);
template Tensor<double> make_probability_map<double>(const LandmarkSet&, int, int, const GaussianKernel&);
template Var<float> predictor_loss<float>(Var<float>, Var<float>, Var<float>, float);
template Var<double> predictor_loss<double>(Var<double>, Var<double>, Var<double>, double);

} // namespace cpnet
