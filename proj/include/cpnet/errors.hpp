// Copyright (c) 2026 The CPNet Authors
// SPDX-License-Identifier: Apache-2.0

#pragma once

#include <stdexcept>
#include <string>

namespace cpnet {

/// Invalid tensor/argument shapes or out-of-range indices.
class ShapeError : public std::invalid_argument {
public:
    explicit ShapeError(const std::string& msg) : std::invalid_argument(msg) {}
};

/// Bad configuration file or CLI arguments. Mapped to exit code 2.
class ConfigError : public std::runtime_error {
public:
    explicit ConfigError(const std::string& msg) : std::runtime_error(msg) {}
};

/// Filesystem problems (missing files, failed writes). Carries the path.
class IoError : public std::runtime_error {
public:
    explicit IoError(const std::string& msg) : std::runtime_error(msg) {}
};

/// An embedding provider could not load its pretrained weights.
/// Distinct from runtime shape errors by contract.
class ProviderLoadError : public std::runtime_error {
public:
    explicit ProviderLoadError(const std::string& msg) : std::runtime_error(msg) {}
};

/// A perceptual-extractor backend could not load its weights.
class ExtractorLoadError : public std::runtime_error {
public:
    explicit ExtractorLoadError(const std::string& msg) : std::runtime_error(msg) {}
};

/// Training aborted (non-finite loss, etc.). Mapped to exit code 3.
class TrainingError : public std::runtime_error {
public:
    explicit TrainingError(const std::string& msg) : std::runtime_error(msg) {}
};

} // namespace cpnet
