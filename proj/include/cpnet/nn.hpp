// Copyright (c) 2026 The CPNet Authors
// SPDX-License-Identifier: Apache-2.0

#pragma once

#include <cstdint>
#include <map>
#include <string>

#include "cpnet/rng.hpp"
#include "cpnet/tape.hpp"
#include "cpnet/tensor.hpp"

namespace cpnet {

/// Named trainable array plus its Adam moments.
template <typename T>
struct Param {
    Tensor<T> value;
    Tensor<T> m, v;
    bool trainable = true;
};

/// Parameters of one network, keyed by name. The map is ordered, so update
/// order and checkpoint layout follow lexicographic name order.
template <typename T>
class ParamStore {
public:
    Param<T>& add(const std::string& name, Tensor<T> init, bool trainable = true) {
        auto [it, inserted] = params_.try_emplace(name);
        if (!inserted) throw ConfigError("duplicate parameter: " + name);
        Param<T>& p = it->second;
        p.m = Tensor<T>::zeros(init.shape());
        p.v = Tensor<T>::zeros(init.shape());
        p.value = std::move(init);
        p.trainable = trainable;
        return p;
    }

    Param<T>& at(const std::string& name) {
        auto it = params_.find(name);
        if (it == params_.end()) throw ConfigError("unknown parameter: " + name);
        return it->second;
    }
    const Param<T>& at(const std::string& name) const {
        auto it = params_.find(name);
        if (it == params_.end()) throw ConfigError("unknown parameter: " + name);
        return it->second;
    }
    bool contains(const std::string& name) const { return params_.count(name) != 0; }

    std::map<std::string, Param<T>>& entries() { return params_; }
    const std::map<std::string, Param<T>>& entries() const { return params_; }

    std::int64_t parameter_count() const {
        std::int64_t n = 0;
        for (const auto& [k, p] : params_) n += p.value.numel();
        return n;
    }

    /// Bind a parameter onto a tape. Repeated calls on one tape return the
    /// same node, so all uses share one gradient accumulator.
    Var<T> use(Tape<T>& tape, const std::string& name) const {
        const Param<T>& p = at(name);
        return tape.memo_leaf(&p.value, p.value, p.trainable);
    }

    /// Bind with gradients disabled regardless of trainability. Keyed apart
    /// from use() so one tape may hold both bindings.
    Var<T> use_frozen(Tape<T>& tape, const std::string& name) const {
        const Param<T>& p = at(name);
        return tape.memo_leaf(&p.m, p.value, false);
    }

    /// Gradient accumulated for a parameter on this tape; empty if none.
    const Tensor<T>& grad_on(Tape<T>& tape, const std::string& name) const {
        const Param<T>& p = at(name);
        static const Tensor<T> none;
        const int id = tape.lookup(&p.value);
        if (id < 0) return none;
        return tape.grad_of(Var<T>{&tape, id});
    }

private:
    std::map<std::string, Param<T>> params_;
};

template <typename T>
struct AdamConfig {
    T lr = T(1e-4);
    T beta1 = T(0.5);
    T beta2 = T(0.999);
    T eps = T(1e-8);
};

/// Adam with bias correction. One instance per network; the step counter is
/// shared by the group and serialized with checkpoints.
template <typename T>
class Adam {
public:
    Adam() = default;
    explicit Adam(AdamConfig<T> cfg) : cfg_(cfg) {}

    /// Applies one update using the gradients accumulated on `tape`.
    /// Parameters that received no gradient are left untouched.
    void step(ParamStore<T>& params, Tape<T>& tape);

    std::int64_t steps() const { return t_; }
    void set_steps(std::int64_t t) { t_ = t; }
    const AdamConfig<T>& config() const { return cfg_; }

private:
    AdamConfig<T> cfg_;
    std::int64_t t_ = 0;
};

/// He-normal fan-in initialization. For conv [Co,Ci,kh,kw] and linear [O,D]
/// weights fan_in is numel / dim(0).
template <typename T>
Tensor<T> he_normal(Rng& rng, std::vector<int> shape);

template <typename T>
Tensor<T> normal_init(Rng& rng, std::vector<int> shape, double stddev);

} // namespace cpnet
