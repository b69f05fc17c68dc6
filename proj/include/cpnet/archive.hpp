// Copyright (c) 2026 The CPNet Authors
// SPDX-License-Identifier: Apache-2.0

#pragma once

#include <cstdint>
#include <map>
#include <string>
#include <variant>

#include <nlohmann/json.hpp>

#include "cpnet/tensor.hpp"

namespace cpnet {

/// Binary container of named tensors plus a JSON metadata block.
/// Layout (little-endian): magic, format version, metadata, then the arrays
/// sorted by name, each as (name, dtype, shape, raw data). Writing the same
/// content twice produces byte-identical files.
class ArchiveWriter {
public:
    void add(const std::string& name, const Tensor<float>& t);
    void add(const std::string& name, const Tensor<double>& t);

    void write(const std::string& path, const nlohmann::json& meta) const;

private:
    std::map<std::string, std::variant<Tensor<float>, Tensor<double>>> arrays_;
};

class ArchiveReader {
public:
    explicit ArchiveReader(const std::string& path);

    const nlohmann::json& meta() const { return meta_; }
    bool contains(const std::string& name) const { return arrays_.count(name) != 0; }
    std::vector<std::string> names() const;

    /// Fetch by name. Throws IoError on a missing name or a dtype mismatch.
    template <typename T>
    const Tensor<T>& get(const std::string& name) const;

private:
    nlohmann::json meta_;
    std::map<std::string, std::variant<Tensor<float>, Tensor<double>>> arrays_;
};

} // namespace cpnet
