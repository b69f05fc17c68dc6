// Copyright (c) 2026 The CPNet Authors
// SPDX-License-Identifier: Apache-2.0

#include "cpnet/condenser.hpp"

#include <Eigen/Dense>
#include <cmath>

#include "cpnet/archive.hpp"
#include "cpnet/ops.hpp"

namespace cpnet {

namespace {

using MatF = Eigen::Matrix<float, Eigen::Dynamic, Eigen::Dynamic, Eigen::RowMajor>;
using VecF = Eigen::VectorXf;

/// Plain (tape-free) adaptive average downsample of a [1,H,W] image.
Tensor<double> downsample(const Tensor<double>& img, int out) {
    const int H = img.dim(1), W = img.dim(2);
    Tensor<double> o({1, out, out});
    for (int i = 0; i < out; ++i) {
        const int h0 = i * H / out, h1 = ((i + 1) * H + out - 1) / out;
        for (int j = 0; j < out; ++j) {
            const int w0 = j * W / out, w1 = ((j + 1) * W + out - 1) / out;
            double acc = 0.0;
            for (int h = h0; h < h1; ++h)
                for (int w = w0; w < w1; ++w) acc += img.at(0, h, w);
            o.at(0, i, j) = acc / ((h1 - h0) * (w1 - w0));
        }
    }
    return o;
}

/// Bilinear resize of a [1,H,W] image (half-pixel centers), tape-free.
Tensor<double> resize_any(const Tensor<double>& img, int out) {
    const int H = img.dim(1), W = img.dim(2);
    if (H == out && W == out) return img;
    Tensor<double> o({1, out, out});
    auto axis = [](int in, int outn, int i) {
        double src = (i + 0.5) * static_cast<double>(in) / outn - 0.5;
        src = std::max(0.0, std::min(src, static_cast<double>(in - 1)));
        const int lo = std::min(static_cast<int>(src), in - 1);
        return std::pair<int, double>{lo, src - lo};
    };
    for (int i = 0; i < out; ++i) {
        const auto [h0, fy] = axis(H, out, i);
        const int h1 = std::min(h0 + 1, H - 1);
        for (int j = 0; j < out; ++j) {
            const auto [w0, fx] = axis(W, out, j);
            const int w1 = std::min(w0 + 1, W - 1);
            const double top = img.at(0, h0, w0) + fx * (img.at(0, h0, w1) - img.at(0, h0, w0));
            const double bot = img.at(0, h1, w0) + fx * (img.at(0, h1, w1) - img.at(0, h1, w0));
            o.at(0, i, j) = top + fy * (bot - top);
        }
    }
    return o;
}

void layer_norm_rows(MatF& x, const Tensor<float>& gamma, const Tensor<float>& beta) {
    const int d = static_cast<int>(x.cols());
    for (Eigen::Index r = 0; r < x.rows(); ++r) {
        double mu = 0.0, var = 0.0;
        for (int c = 0; c < d; ++c) mu += x(r, c);
        mu /= d;
        for (int c = 0; c < d; ++c) {
            const double e = x(r, c) - mu;
            var += e * e;
        }
        var /= d;
        const double inv = 1.0 / std::sqrt(var + 1e-5);
        for (int c = 0; c < d; ++c) {
            x(r, c) = static_cast<float>((x(r, c) - mu) * inv * gamma[c] + beta[c]);
        }
    }
}

float gelu(float v) {
    return 0.5f * v * (1.0f + std::erf(v / std::sqrt(2.0f)));
}

} // namespace

StubEmbeddingProvider::StubEmbeddingProvider(std::uint64_t seed, int dim) : dim_(dim) {
    if (dim < 1) throw ConfigError("stub embedding dimension must be >= 1");
    Rng rng(seed);
    projection_ = Tensor<double>({dim, 32 * 32});
    const double s = 1.0 / std::sqrt(32.0 * 32.0);
    for (double& v : projection_.flat()) v = rng.normal() * s;
}

std::vector<double> StubEmbeddingProvider::embed(const Tensor<double>& landmark_image) const {
    if (landmark_image.rank() != 3 || landmark_image.dim(0) != 1) {
        throw ShapeError("embed expects [1,H,W]");
    }
    const Tensor<double> small = downsample(landmark_image, 32);
    std::vector<double> out(static_cast<std::size_t>(dim_), 0.0);
    for (int i = 0; i < dim_; ++i) {
        double acc = 0.0;
        for (int j = 0; j < 32 * 32; ++j) acc += projection_.at(i, j) * small[j];
        out[static_cast<std::size_t>(i)] = acc;
    }
    double norm = 0.0;
    for (double v : out) norm += v * v;
    norm = std::sqrt(norm);
    if (norm > 1e-12) {
        for (double& v : out) v /= norm;
    }
    return out;
}

struct ClipVitProvider::Block {
    Tensor<float> ln1_g, ln1_b, qkv_w, qkv_b, out_w, out_b;
    Tensor<float> ln2_g, ln2_b, fc1_w, fc1_b, fc2_w, fc2_b;
};

ClipVitProvider::~ClipVitProvider() = default;

ClipVitProvider::ClipVitProvider(const std::string& weights_path) {
    std::unique_ptr<ArchiveReader> ar;
    try {
        ar = std::make_unique<ArchiveReader>(weights_path);
    } catch (const IoError& e) {
        throw ProviderLoadError(std::string("cannot load ViT weights: ") + e.what());
    }
    const nlohmann::json& meta = ar->meta();
    if (!meta.is_object() || meta.value("kind", "") != "clip_vit") {
        throw ProviderLoadError("weight archive is not a clip_vit bundle: " + weights_path);
    }
    try {
        image_size_ = meta.at("image_size").get<int>();
        patch_size_ = meta.at("patch_size").get<int>();
        width_ = meta.at("width").get<int>();
        heads_ = meta.at("heads").get<int>();
        embed_dim_ = meta.at("embed_dim").get<int>();
        variant_ = meta.value("variant", "B/32");
        const int layers = meta.at("layers").get<int>();
        if (image_size_ < patch_size_ || patch_size_ < 1 || image_size_ % patch_size_ != 0 ||
            width_ < 1 || heads_ < 1 || width_ % heads_ != 0 || layers < 1 || embed_dim_ < 1) {
            throw ProviderLoadError("inconsistent ViT dimensions in " + weights_path);
        }
        const int tokens = (image_size_ / patch_size_) * (image_size_ / patch_size_) + 1;
        auto need = [&](const std::string& name, std::vector<int> shape) {
            const Tensor<float>& t = ar->get<float>(name);
            if (t.shape() != shape) {
                throw ProviderLoadError("ViT array " + name + " has shape " + shape_str(t.shape()) +
                                        ", expected " + shape_str(shape));
            }
            return t;
        };
        patch_w_ = need("patch/w", {width_, 3, patch_size_, patch_size_});
        cls_ = need("cls", {width_});
        pos_ = need("pos", {tokens, width_});
        ln_pre_g_ = need("ln_pre/gamma", {width_});
        ln_pre_b_ = need("ln_pre/beta", {width_});
        ln_post_g_ = need("ln_post/gamma", {width_});
        ln_post_b_ = need("ln_post/beta", {width_});
        proj_ = need("proj", {width_, embed_dim_});
        blocks_.resize(static_cast<std::size_t>(layers));
        for (int l = 0; l < layers; ++l) {
            Block& b = blocks_[static_cast<std::size_t>(l)];
            const std::string p = "blk" + std::to_string(l) + "/";
            b.ln1_g = need(p + "ln1/gamma", {width_});
            b.ln1_b = need(p + "ln1/beta", {width_});
            b.qkv_w = need(p + "attn/qkv_w", {3 * width_, width_});
            b.qkv_b = need(p + "attn/qkv_b", {3 * width_});
            b.out_w = need(p + "attn/out_w", {width_, width_});
            b.out_b = need(p + "attn/out_b", {width_});
            b.ln2_g = need(p + "ln2/gamma", {width_});
            b.ln2_b = need(p + "ln2/beta", {width_});
            b.fc1_w = need(p + "mlp/fc1_w", {4 * width_, width_});
            b.fc1_b = need(p + "mlp/fc1_b", {4 * width_});
            b.fc2_w = need(p + "mlp/fc2_w", {width_, 4 * width_});
            b.fc2_b = need(p + "mlp/fc2_b", {width_});
        }
    } catch (const IoError& e) {
        throw ProviderLoadError(std::string("incomplete ViT bundle: ") + e.what());
    }
}

std::vector<double> ClipVitProvider::embed(const Tensor<double>& landmark_image) const {
    if (landmark_image.rank() != 3 || landmark_image.dim(0) != 1) {
        throw ShapeError("embed expects [1,H,W]");
    }
    const Tensor<double> img = resize_any(landmark_image, image_size_);

    // CLIP preprocessing statistics; the single landmark channel is
    // replicated across RGB.
    constexpr double kMean[3] = {0.48145466, 0.4578275, 0.40821073};
    constexpr double kStd[3] = {0.26862954, 0.26130258, 0.27577711};
    const int np = image_size_ / patch_size_;
    const int tokens = np * np + 1;
    const int pch = 3 * patch_size_ * patch_size_;

    // Patchify into [np*np, 3*ps*ps], then embed with one GEMM.
    MatF patches(np * np, pch);
    for (int pi = 0; pi < np; ++pi) {
        for (int pj = 0; pj < np; ++pj) {
            float* row = patches.row(pi * np + pj).data();
            for (int c = 0; c < 3; ++c) {
                for (int i = 0; i < patch_size_; ++i) {
                    for (int j = 0; j < patch_size_; ++j) {
                        const double v = img.at(0, pi * patch_size_ + i, pj * patch_size_ + j);
                        row[(c * patch_size_ + i) * patch_size_ + j] =
                            static_cast<float>((v - kMean[c]) / kStd[c]);
                    }
                }
            }
        }
    }
    MatF x(tokens, width_);
    x.bottomRows(np * np).noalias() =
        patches * Eigen::Map<const MatF>(patch_w_.data(), width_, pch).transpose();
    for (int c = 0; c < width_; ++c) x(0, c) = cls_[c];
    x += Eigen::Map<const MatF>(pos_.data(), tokens, width_);

    layer_norm_rows(x, ln_pre_g_, ln_pre_b_);

    const int dh = width_ / heads_;
    const float att_scale = 1.0f / std::sqrt(static_cast<float>(dh));
    for (const Block& b : blocks_) {
        MatF h = x;
        layer_norm_rows(h, b.ln1_g, b.ln1_b);
        MatF qkv = h * Eigen::Map<const MatF>(b.qkv_w.data(), 3 * width_, width_).transpose();
        qkv.rowwise() += Eigen::Map<const VecF>(b.qkv_b.data(), 3 * width_).transpose();
        MatF attn_out(tokens, width_);
        for (int hd = 0; hd < heads_; ++hd) {
            const auto q = qkv.middleCols(hd * dh, dh);
            const auto k = qkv.middleCols(width_ + hd * dh, dh);
            const auto v = qkv.middleCols(2 * width_ + hd * dh, dh);
            MatF scores = (q * k.transpose()) * att_scale;
            for (Eigen::Index r = 0; r < scores.rows(); ++r) {
                const float mx = scores.row(r).maxCoeff();
                double sum = 0.0;
                for (Eigen::Index c2 = 0; c2 < scores.cols(); ++c2) {
                    scores(r, c2) = std::exp(scores(r, c2) - mx);
                    sum += scores(r, c2);
                }
                scores.row(r) /= static_cast<float>(sum);
            }
            attn_out.middleCols(hd * dh, dh).noalias() = scores * v;
        }
        MatF proj = attn_out * Eigen::Map<const MatF>(b.out_w.data(), width_, width_).transpose();
        proj.rowwise() += Eigen::Map<const VecF>(b.out_b.data(), width_).transpose();
        x += proj;

        h = x;
        layer_norm_rows(h, b.ln2_g, b.ln2_b);
        MatF mid = h * Eigen::Map<const MatF>(b.fc1_w.data(), 4 * width_, width_).transpose();
        mid.rowwise() += Eigen::Map<const VecF>(b.fc1_b.data(), 4 * width_).transpose();
        for (Eigen::Index i = 0; i < mid.size(); ++i) mid.data()[i] = gelu(mid.data()[i]);
        MatF out = mid * Eigen::Map<const MatF>(b.fc2_w.data(), width_, 4 * width_).transpose();
        out.rowwise() += Eigen::Map<const VecF>(b.fc2_b.data(), width_).transpose();
        x += out;
    }

    MatF cls_tok = x.topRows(1);
    layer_norm_rows(cls_tok, ln_post_g_, ln_post_b_);
    Eigen::RowVectorXf em = cls_tok * Eigen::Map<const MatF>(proj_.data(), width_, embed_dim_);
    std::vector<double> out(static_cast<std::size_t>(embed_dim_));
    for (int i = 0; i < embed_dim_; ++i) {
        const double v = static_cast<double>(em(i));
        if (!std::isfinite(v)) throw ProviderLoadError("ViT produced a non-finite embedding");
        out[static_cast<std::size_t>(i)] = v;
    }
    return out;
}

std::unique_ptr<EmbeddingProvider> make_embedding_provider(const std::string& kind,
                                                           std::uint64_t seed, int stub_dim,
                                                           const std::string& weights_path) {
    if (kind == "stub") return std::make_unique<StubEmbeddingProvider>(seed, stub_dim);
    if (kind == "clip_vit") {
        if (weights_path.empty()) throw ConfigError("condenser.provider=clip_vit needs a weights path");
        return std::make_unique<ClipVitProvider>(weights_path);
    }
    throw ConfigError("unknown embedding provider: " + kind);
}

template <typename T>
Var<T> gating_weights(Var<T> v, Var<T> w) {
    return sigmoid(linear(v, w, Var<T>{}));
}

template <typename T>
Var<T> recalibrate(Var<T> x, Var<T> w) {
    return scale_channels(x, w);
}

template <typename T>
CondenserHead<T>::CondenserHead(const std::vector<std::pair<std::string, int>>& hooks,
                                int embed_dim)
    : dim_(embed_dim), hooks_(hooks) {
    if (embed_dim < 1) throw ConfigError("condenser embedding dimension must be >= 1");
    for (const auto& [name, channels] : hooks_) {
        if (channels < 1) throw ConfigError("condenser hook with non-positive channel count");
        params_.add("head/" + name + "/w", Tensor<T>::zeros({channels, embed_dim}));
    }
}

template <typename T>
std::vector<Var<T>> CondenserHead<T>::gating(Tape<T>& tape, Var<T> v, bool frozen) const {
    const Tensor<T>& vv = v.val();
    if (vv.rank() != 2 || vv.dim(1) != dim_) {
        throw ShapeError("embedding batch must be [N," + std::to_string(dim_) + "], got " +
                         shape_str(vv.shape()));
    }
    std::vector<Var<T>> gates;
    gates.reserve(hooks_.size());
    for (const auto& [name, channels] : hooks_) {
        Var<T> w = frozen ? params_.use_frozen(tape, "head/" + name + "/w")
                          : params_.use(tape, "head/" + name + "/w");
        gates.push_back(gating_weights(v, w));
    }
    return gates;
}

template class CondenserHead<float>;
template class CondenserHead<double>;
template Var<float> gating_weights<float>(Var<float>, Var<float>);
template Var<double> gating_weights<double>(Var<double>, Var<double>);
template Var<float> recalibrate<float>(Var<float>, Var<float>);
template Var<double> recalibrate<double>(Var<double>, Var<double>);

} // namespace cpnet
