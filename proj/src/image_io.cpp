// Copyright (c) 2026 The CPNet Authors
// SPDX-License-Identifier: Apache-2.0

#include "cpnet/image_io.hpp"

#include <algorithm>
#include <cmath>

#include <opencv2/imgcodecs.hpp>

#include "cpnet/errors.hpp"

namespace cpnet {

Tensor<float> read_image_rgb(const std::string& path) {
    cv::Mat bgr = cv::imread(path, cv::IMREAD_COLOR);
    if (bgr.empty()) throw IoError("cannot read image: " + path);
    Tensor<float> out({3, bgr.rows, bgr.cols});
    for (int h = 0; h < bgr.rows; ++h) {
        const cv::Vec3b* row = bgr.ptr<cv::Vec3b>(h);
        for (int w = 0; w < bgr.cols; ++w) {
            out.at(0, h, w) = static_cast<float>(row[w][2]) / 255.0f;
            out.at(1, h, w) = static_cast<float>(row[w][1]) / 255.0f;
            out.at(2, h, w) = static_cast<float>(row[w][0]) / 255.0f;
        }
    }
    return out;
}

void write_image_rgb(const std::string& path, const Tensor<float>& img) {
    if (img.rank() != 3 || img.dim(0) != 3) throw ShapeError("write_image_rgb expects [3,H,W]");
    const int H = img.dim(1), W = img.dim(2);
    cv::Mat bgr(H, W, CV_8UC3);
    auto to_byte = [](float v) {
        const float c = std::clamp(v, 0.0f, 1.0f);
        return static_cast<unsigned char>(std::lround(c * 255.0f));
    };
    for (int h = 0; h < H; ++h) {
        cv::Vec3b* row = bgr.ptr<cv::Vec3b>(h);
        for (int w = 0; w < W; ++w) {
            row[w][2] = to_byte(img.at(0, h, w));
            row[w][1] = to_byte(img.at(1, h, w));
            row[w][0] = to_byte(img.at(2, h, w));
        }
    }
    if (!cv::imwrite(path, bgr)) throw IoError("cannot write image: " + path);
}

void write_image_gray16(const std::string& path, const Tensor<double>& img, double max_value) {
    if (max_value <= 0) throw ShapeError("write_image_gray16 max_value must be > 0");
    const bool chw = img.rank() == 3 && img.dim(0) == 1;
    if (!chw && img.rank() != 2) throw ShapeError("write_image_gray16 expects [1,H,W] or [H,W]");
    const int H = chw ? img.dim(1) : img.dim(0);
    const int W = chw ? img.dim(2) : img.dim(1);
    cv::Mat gray(H, W, CV_16UC1);
    const double* p = img.data();
    for (int h = 0; h < H; ++h) {
        auto* row = gray.ptr<std::uint16_t>(h);
        for (int w = 0; w < W; ++w) {
            const double v = std::clamp(p[static_cast<std::int64_t>(h) * W + w] / max_value, 0.0, 1.0);
            row[w] = static_cast<std::uint16_t>(std::lround(v * 65535.0));
        }
    }
    if (!cv::imwrite(path, gray)) throw IoError("cannot write image: " + path);
}

Tensor<double> read_image_gray16(const std::string& path, double max_value) {
    if (max_value <= 0) throw ShapeError("read_image_gray16 max_value must be > 0");
    cv::Mat gray = cv::imread(path, cv::IMREAD_UNCHANGED);
    if (gray.empty()) throw IoError("cannot read image: " + path);
    if (gray.type() != CV_16UC1) throw IoError("not a 16-bit grayscale image: " + path);
    Tensor<double> out({1, gray.rows, gray.cols});
    for (int h = 0; h < gray.rows; ++h) {
        const auto* row = gray.ptr<std::uint16_t>(h);
        for (int w = 0; w < gray.cols; ++w) {
            out.at(0, h, w) = static_cast<double>(row[w]) / 65535.0 * max_value;
        }
    }
    return out;
}

} // namespace cpnet
