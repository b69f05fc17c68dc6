// Copyright (c) 2026 The CPNet Authors
// SPDX-License-Identifier: Apache-2.0

#pragma once

#include <cmath>
#include <cstdint>
#include <random>
#include <sstream>
#include <string>

namespace cpnet {

// Deterministic RNG built on mt19937. The standard distributions are not
// bit-stable across library implementations, so uniform/normal are derived
// from raw engine output with explicit arithmetic.
class Rng {
public:
    Rng() : engine_(0) {}
    explicit Rng(std::uint32_t seed) : engine_(seed) {}

    std::uint32_t next_u32() { return engine_(); }

    /// Uniform in [0, 1).
    double uniform() {
        return static_cast<double>(engine_()) * (1.0 / 4294967296.0);
    }

    /// Uniform in [lo, hi).
    double uniform(double lo, double hi) { return lo + (hi - lo) * uniform(); }

    /// Integer in [0, n). n must be > 0.
    std::uint32_t below(std::uint32_t n) { return engine_() % n; }

    /// Standard normal via Box-Muller. The sine half is discarded so the
    /// generator carries no state beyond the engine itself.
    double normal() {
        // u1 in (0, 1], u2 in [0, 1)
        double u1 = (static_cast<double>(engine_()) + 1.0) * (1.0 / 4294967296.0);
        double u2 = static_cast<double>(engine_()) * (1.0 / 4294967296.0);
        double r = std::sqrt(-2.0 * std::log(u1));
        double a = 6.283185307179586476925286766559 * u2;
        return r * std::cos(a);
    }

    double normal(double mean, double stddev) { return mean + stddev * normal(); }

    /// Serialized engine state (mt19937 stream format).
    std::string state() const {
        std::ostringstream os;
        os << engine_;
        return os.str();
    }

    void set_state(const std::string& s) {
        std::istringstream is(s);
        is >> engine_;
    }

private:
    std::mt19937 engine_;
};

} // namespace cpnet
