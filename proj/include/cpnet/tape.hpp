// Copyright (c) 2026 The CPNet Authors
// SPDX-License-Identifier: Apache-2.0

#pragma once

#include <functional>
#include <unordered_map>
#include <utility>
#include <vector>

#include "cpnet/tensor.hpp"

namespace cpnet {

template <typename T>
class Tape;

/// Handle to a node on a tape. Cheap to copy; invalid once the tape is cleared.
template <typename T>
struct Var {
    Tape<T>* tape = nullptr;
    int id = -1;

    bool defined() const { return tape != nullptr && id >= 0; }
    const Tensor<T>& val() const { return tape->value_of(*this); }
    const std::vector<int>& shape() const { return val().shape(); }
};

/// Reverse-mode autodiff tape. Nodes are appended in evaluation order, which
/// is a valid topological order, so backward is a single reverse sweep.
/// Gradients are allocated lazily; subgraphs that never receive a gradient
/// are skipped entirely.
template <typename T>
class Tape {
public:
    struct Node {
        Tensor<T> value;
        Tensor<T> grad; // empty until first accumulation
        bool requires_grad = false;
        std::function<void(Tape&, int)> backward; // null for leaves
    };

    Var<T> leaf(Tensor<T> value, bool requires_grad = false) {
        nodes_.push_back(Node{std::move(value), {}, requires_grad, nullptr});
        return {this, static_cast<int>(nodes_.size()) - 1};
    }

    /// Leaf memoized on an arbitrary key (one node per key per tape). Used to
    /// make repeated uses of the same parameter share a gradient accumulator.
    Var<T> memo_leaf(const void* key, const Tensor<T>& value, bool requires_grad) {
        auto it = memo_.find(key);
        if (it != memo_.end()) return {this, it->second};
        Var<T> v = leaf(value, requires_grad);
        memo_.emplace(key, v.id);
        return v;
    }

    int lookup(const void* key) const {
        auto it = memo_.find(key);
        return it == memo_.end() ? -1 : it->second;
    }

    Var<T> push(Tensor<T> value, bool requires_grad, std::function<void(Tape&, int)> backward) {
        nodes_.push_back(Node{std::move(value), {}, requires_grad, std::move(backward)});
        return {this, static_cast<int>(nodes_.size()) - 1};
    }

    const Tensor<T>& value_of(Var<T> v) const { return nodes_[static_cast<std::size_t>(v.id)].value; }
    Tensor<T>& value_of(Var<T> v) { return nodes_[static_cast<std::size_t>(v.id)].value; }

    bool requires_grad(Var<T> v) const { return nodes_[static_cast<std::size_t>(v.id)].requires_grad; }

    /// Gradient buffer of a node, allocated as zeros on first use.
    Tensor<T>& grad_buf(int id) {
        Node& n = nodes_[static_cast<std::size_t>(id)];
        if (n.grad.empty()) n.grad = Tensor<T>::zeros(n.value.shape());
        return n.grad;
    }

    /// Gradient of a node; empty tensor if it never received one.
    const Tensor<T>& grad_of(Var<T> v) const { return nodes_[static_cast<std::size_t>(v.id)].grad; }

    bool has_grad(Var<T> v) const { return !nodes_[static_cast<std::size_t>(v.id)].grad.empty(); }

    /// Backpropagate from a scalar node. May be called repeatedly on one tape
    /// (gradients accumulate).
    void backward(Var<T> loss) {
        if (loss.tape != this) throw ShapeError("backward on foreign tape");
        const Tensor<T>& lv = value_of(loss);
        if (lv.numel() != 1) throw ShapeError("backward source must be scalar");
        grad_buf(loss.id)[0] += T(1);
        for (int id = loss.id; id >= 0; --id) {
            Node& n = nodes_[static_cast<std::size_t>(id)];
            if (!n.requires_grad || n.grad.empty() || !n.backward) continue;
            n.backward(*this, id);
        }
    }

    void clear() {
        nodes_.clear();
        memo_.clear();
    }

    std::size_t size() const { return nodes_.size(); }

private:
    std::vector<Node> nodes_;
    std::unordered_map<const void*, int> memo_;
};

} // namespace cpnet
