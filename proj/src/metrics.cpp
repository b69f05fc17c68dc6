// Copyright (c) 2026 The CPNet Authors
// SPDX-License-Identifier: Apache-2.0

#include "cpnet/metrics.hpp"

#include <cmath>
#include <iomanip>
#include <sstream>

#include "cpnet/errors.hpp"

namespace cpnet {

namespace {

constexpr int kSsimWindow = 11;
constexpr double kSsimSigma = 1.5;

std::vector<double> ssim_window_weights() {
    std::vector<double> w(kSsimWindow * kSsimWindow);
    const int r = kSsimWindow / 2;
    double sum = 0.0;
    for (int i = 0; i < kSsimWindow; ++i)
        for (int j = 0; j < kSsimWindow; ++j) {
            const double d2 = double((i - r) * (i - r) + (j - r) * (j - r));
            w[i * kSsimWindow + j] = std::exp(-d2 / (2.0 * kSsimSigma * kSsimSigma));
            sum += w[i * kSsimWindow + j];
        }
    for (double& v : w) v /= sum;
    return w;
}

std::string fmt(double v) {
    std::ostringstream os;
    os << std::fixed << std::setprecision(4) << v;
    return os.str();
}

std::string fmt_opt(const std::optional<double>& v) { return v ? fmt(*v) : "n/a"; }

} // namespace

template <typename T>
double psnr(const Tensor<T>& a, const Tensor<T>& b, double max_value) {
    if (!a.same_shape(b)) throw ShapeError("psnr: shapes differ");
    if (a.empty()) throw ShapeError("psnr: empty input");
    if (max_value <= 0.0) throw ConfigError("psnr: max_value must be positive");
    double se = 0.0;
    for (std::int64_t i = 0; i < a.numel(); ++i) {
        const double d = double(a[i]) - double(b[i]);
        se += d * d;
    }
    const double mse = se / double(a.numel());
    const double peak = max_value * max_value;
    if (mse < peak * 1e-10) return 100.0;
    return 10.0 * std::log10(peak / mse);
}

template <typename T>
double ssim(const Tensor<T>& a, const Tensor<T>& b, double max_value) {
    if (!a.same_shape(b)) throw ShapeError("ssim: shapes differ");
    if (a.rank() != 2 && a.rank() != 3) throw ShapeError("ssim: input must be [C,H,W] or [H,W]");
    if (max_value <= 0.0) throw ConfigError("ssim: max_value must be positive");
    const int channels = a.rank() == 3 ? a.dim(0) : 1;
    const int hh = a.dim(a.rank() - 2);
    const int ww = a.dim(a.rank() - 1);
    if (hh < kSsimWindow || ww < kSsimWindow)
        throw ShapeError("ssim: input smaller than the 11x11 window");

    static const std::vector<double> win = ssim_window_weights();
    const double c1 = (0.01 * max_value) * (0.01 * max_value);
    const double c2 = (0.03 * max_value) * (0.03 * max_value);

    double total = 0.0;
    for (int c = 0; c < channels; ++c) {
        const T* pa = a.data() + std::size_t(c) * hh * ww;
        const T* pb = b.data() + std::size_t(c) * hh * ww;
        double channel_sum = 0.0;
        std::size_t count = 0;
        for (int y = 0; y + kSsimWindow <= hh; ++y) {
            for (int x = 0; x + kSsimWindow <= ww; ++x) {
                double mx = 0, my = 0, mxx = 0, myy = 0, mxy = 0;
                for (int i = 0; i < kSsimWindow; ++i) {
                    const T* ra = pa + std::size_t(y + i) * ww + x;
                    const T* rb = pb + std::size_t(y + i) * ww + x;
                    const double* rw = win.data() + std::size_t(i) * kSsimWindow;
                    for (int j = 0; j < kSsimWindow; ++j) {
                        const double va = double(ra[j]), vb = double(rb[j]);
                        mx += rw[j] * va;
                        my += rw[j] * vb;
                        mxx += rw[j] * va * va;
                        myy += rw[j] * vb * vb;
                        mxy += rw[j] * va * vb;
                    }
                }
                const double vx = mxx - mx * mx;
                const double vy = myy - my * my;
                const double cov = mxy - mx * my;
                const double num = (2.0 * mx * my + c1) * (2.0 * cov + c2);
                const double den = (mx * mx + my * my + c1) * (vx + vy + c2);
                channel_sum += num / den;
                ++count;
            }
        }
        total += channel_sum / double(count);
    }
    return total / double(channels);
}

std::string MetricReport::to_csv() const {
    std::ostringstream os;
    os << "clip,frames,psnr,ssim\n";
    for (const auto& c : clips)
        os << c.name << ',' << c.frames << ',' << fmt(c.psnr) << ',' << fmt(c.ssim) << '\n';
    os << "mean,," << fmt(mean_psnr) << ',' << fmt(mean_ssim) << '\n';
    return os.str();
}

std::string MetricReport::to_table() const {
    std::ostringstream os;
    os << "Method | PSNR | SSIM | FVD | LSE-C | LSE-D\n";
    os << method << " | " << fmt(mean_psnr) << " | " << fmt(mean_ssim) << " | "
       << fmt_opt(fvd) << " | " << fmt_opt(lse_c) << " | " << fmt_opt(lse_d) << '\n';
    return os.str();
}

MetricReport evaluate_corpus(VideoSynthesizer& synthesizer, std::span<const FrameClip> clips,
                             const std::string& method) {
    if (clips.empty()) throw ConfigError("evaluate_corpus: no clips");
    MetricReport report;
    report.method = method;
    double psnr_sum = 0.0, ssim_sum = 0.0;
    for (std::size_t k = 0; k < clips.size(); ++k) {
        const FrameClip& clip = clips[k];
        if (clip.size() < kWindowSize)
            throw ShapeError("evaluate_corpus: clip shorter than the conditioning window");
        std::vector<Tensor<float>> frames = synthesizer.synthesize(clip);
        const std::size_t expected = clip.size() - std::size_t(kWindowSize - 1);
        if (frames.size() != expected)
            throw ShapeError("evaluate_corpus: synthesizer returned " +
                             std::to_string(frames.size()) + " frames, expected " +
                             std::to_string(expected));
        ClipMetrics cm;
        cm.name = "clip_" + std::to_string(k);
        cm.frames = static_cast<int>(frames.size());
        double ps = 0.0, ss = 0.0;
        for (std::size_t i = 0; i < frames.size(); ++i) {
            const Tensor<float>& gt = clip.frames[i + kWindowRadius];
            ps += psnr(frames[i], gt, 1.0);
            ss += ssim(frames[i], gt, 1.0);
        }
        cm.psnr = ps / double(frames.size());
        cm.ssim = ss / double(frames.size());
        psnr_sum += cm.psnr;
        ssim_sum += cm.ssim;
        report.clips.push_back(std::move(cm));
    }
    report.mean_psnr = psnr_sum / double(clips.size());
    report.mean_ssim = ssim_sum / double(clips.size());
    return report;
}

template double psnr<float>(const Tensor<float>&, const Tensor<float>&, double);
template double psnr<double>(const Tensor<double>&, const Tensor<double>&, double);
template double ssim<float>(const Tensor<float>&, const Tensor<float>&, double);
template double ssim<double>(const Tensor<double>&, const Tensor<double>&, double);

} // namespace cpnet
