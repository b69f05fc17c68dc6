// Copyright (c) 2026 The CPNet Authors
// SPDX-License-Identifier: Apache-2.0

#pragma once

#include <cassert>
#include <cstdint>
#include <initializer_list>
#include <numeric>
#include <span>
#include <string>
#include <vector>

#include "cpnet/errors.hpp"

namespace cpnet {

/// Dense row-major tensor. Rank is dynamic; network code uses NCHW order.
template <typename T>
class Tensor {
public:
    using value_type = T;

    Tensor() = default;

    explicit Tensor(std::vector<int> shape) : shape_(std::move(shape)) {
        data_.assign(count(shape_), T(0));
    }

    Tensor(std::vector<int> shape, T fill) : shape_(std::move(shape)) {
        data_.assign(count(shape_), fill);
    }

    Tensor(std::vector<int> shape, std::vector<T> data)
        : shape_(std::move(shape)), data_(std::move(data)) {
        if (static_cast<std::int64_t>(data_.size()) != count(shape_)) {
            throw ShapeError("tensor data size does not match shape");
        }
    }

    static Tensor zeros(std::vector<int> shape) { return Tensor(std::move(shape)); }
    static Tensor full(std::vector<int> shape, T v) { return Tensor(std::move(shape), v); }

    static Tensor scalar(T v) { return Tensor({1}, std::vector<T>{v}); }

    const std::vector<int>& shape() const { return shape_; }
    int rank() const { return static_cast<int>(shape_.size()); }
    int dim(int i) const {
        assert(i >= 0 && i < rank());
        return shape_[static_cast<std::size_t>(i)];
    }
    std::int64_t numel() const { return static_cast<std::int64_t>(data_.size()); }
    bool empty() const { return data_.empty(); }

    T* data() { return data_.data(); }
    const T* data() const { return data_.data(); }
    std::span<T> flat() { return {data_.data(), data_.size()}; }
    std::span<const T> flat() const { return {data_.data(), data_.size()}; }

    T& operator[](std::int64_t i) { return data_[static_cast<std::size_t>(i)]; }
    const T& operator[](std::int64_t i) const { return data_[static_cast<std::size_t>(i)]; }

    // NCHW accessors.
    T& at(int n, int c, int h, int w) {
        return data_[static_cast<std::size_t>(((static_cast<std::int64_t>(n) * shape_[1] + c) * shape_[2] + h) * shape_[3] + w)];
    }
    const T& at(int n, int c, int h, int w) const {
        return data_[static_cast<std::size_t>(((static_cast<std::int64_t>(n) * shape_[1] + c) * shape_[2] + h) * shape_[3] + w)];
    }
    T& at(int c, int h, int w) {
        return data_[static_cast<std::size_t>((static_cast<std::int64_t>(c) * shape_[1] + h) * shape_[2] + w)];
    }
    const T& at(int c, int h, int w) const {
        return data_[static_cast<std::size_t>((static_cast<std::int64_t>(c) * shape_[1] + h) * shape_[2] + w)];
    }
    T& at(int i, int j) { return data_[static_cast<std::size_t>(static_cast<std::int64_t>(i) * shape_[1] + j)]; }
    const T& at(int i, int j) const { return data_[static_cast<std::size_t>(static_cast<std::int64_t>(i) * shape_[1] + j)]; }

    bool same_shape(const Tensor& other) const { return shape_ == other.shape_; }

    Tensor reshaped(std::vector<int> new_shape) const {
        if (count(new_shape) != numel()) {
            throw ShapeError("reshape changes element count");
        }
        Tensor out;
        out.shape_ = std::move(new_shape);
        out.data_ = data_;
        return out;
    }

    template <typename U>
    Tensor<U> cast() const {
        std::vector<U> d(data_.size());
        for (std::size_t i = 0; i < data_.size(); ++i) d[i] = static_cast<U>(data_[i]);
        return Tensor<U>(shape_, std::move(d));
    }

    static std::int64_t count(const std::vector<int>& shape) {
        std::int64_t n = 1;
        for (int d : shape) {
            if (d < 0) throw ShapeError("negative dimension");
            n *= d;
        }
        return shape.empty() ? 0 : n;
    }

private:
    std::vector<int> shape_;
    std::vector<T> data_;
};

inline std::string shape_str(const std::vector<int>& s) {
    std::string out = "[";
    for (std::size_t i = 0; i < s.size(); ++i) {
        if (i) out += ",";
        out += std::to_string(s[i]);
    }
    return out + "]";
}

} // namespace cpnet
