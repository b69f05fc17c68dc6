// Copyright (c) 2026 The CPNet Authors
// SPDX-License-Identifier: Apache-2.0

#pragma once

#include <string>

#include "cpnet/tensor.hpp"

namespace cpnet {

/// PNG I/O. RGB images are CHW float tensors with values in [0,1].

Tensor<float> read_image_rgb(const std::string& path);
void write_image_rgb(const std::string& path, const Tensor<float>& img);

/// 16-bit grayscale export for probability maps: stored value is
/// round(v / max_value * 65535), clamped. max_value must be > 0.
void write_image_gray16(const std::string& path, const Tensor<double>& img, double max_value);
Tensor<double> read_image_gray16(const std::string& path, double max_value);

} // namespace cpnet
