// Copyright (c) 2026 The CPNet Authors
// SPDX-License-Identifier: Apache-2.0

#include "cpnet/nn.hpp"

#include <cmath>

namespace cpnet {

template <typename T>
void Adam<T>::step(ParamStore<T>& params, Tape<T>& tape) {
    ++t_;
    const double bc1 = 1.0 - std::pow(static_cast<double>(cfg_.beta1), static_cast<double>(t_));
    const double bc2 = 1.0 - std::pow(static_cast<double>(cfg_.beta2), static_cast<double>(t_));
    for (auto& [name, p] : params.entries()) {
        if (!p.trainable) continue;
        const int id = tape.lookup(&p.value);
        if (id < 0) continue;
        const Tensor<T>& g = tape.grad_of(Var<T>{&tape, id});
        if (g.empty()) continue;
        const std::int64_t n = p.value.numel();
        T* vp = p.value.data();
        T* mp = p.m.data();
        T* sp = p.v.data();
        const T* gp = g.data();
        const double b1 = static_cast<double>(cfg_.beta1), b2 = static_cast<double>(cfg_.beta2);
        const double lr = static_cast<double>(cfg_.lr), eps = static_cast<double>(cfg_.eps);
        for (std::int64_t i = 0; i < n; ++i) {
            const double gi = static_cast<double>(gp[i]);
            const double m = b1 * static_cast<double>(mp[i]) + (1.0 - b1) * gi;
            const double v = b2 * static_cast<double>(sp[i]) + (1.0 - b2) * gi * gi;
            mp[i] = static_cast<T>(m);
            sp[i] = static_cast<T>(v);
            vp[i] = static_cast<T>(static_cast<double>(vp[i]) -
                                   lr * (m / bc1) / (std::sqrt(v / bc2) + eps));
        }
    }
}

template <typename T>
Tensor<T> he_normal(Rng& rng, std::vector<int> shape) {
    if (shape.empty() || shape[0] <= 0) throw ShapeError("he_normal needs a leading output dimension");
    Tensor<T> t(shape);
    const double fan_in = static_cast<double>(t.numel() / shape[0]);
    const double stddev = std::sqrt(2.0 / fan_in);
    for (T& v : t.flat()) v = static_cast<T>(rng.normal() * stddev);
    return t;
}

template <typename T>
Tensor<T> normal_init(Rng& rng, std::vector<int> shape, double stddev) {
    Tensor<T> t(std::move(shape));
    for (T& v : t.flat()) v = static_cast<T>(rng.normal() * stddev);
    return t;
}

template class Adam<float>;
template class Adam<double>;
template Tensor<float> he_normal<float>(Rng&, std::vector<int>);
template Tensor<double> he_normal<double>(Rng&, std::vector<int>);
template Tensor<float> normal_init<float>(Rng&, std::vector<int>, double);
template Tensor<double> normal_init<double>(Rng&, std::vector<int>, double);

} // namespace cpnet
