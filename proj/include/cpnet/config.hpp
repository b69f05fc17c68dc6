// Copyright (c) 2026 The CPNet Authors
// SPDX-License-Identifier: Apache-2.0

#pragma once

#include <cstdint>
#include <string>

#include <nlohmann/json.hpp>

#include "cpnet/losses.hpp"

namespace cpnet {

/// Full training/inference configuration. JSON round-trips losslessly so a
/// checkpoint can embed the exact configuration it was trained with.
struct TrainConfig {
    std::string data_dir;
    std::string out_dir = "out";

    double learning_rate = 1e-4;
    double beta1 = 0.5;
    double beta2 = 0.999;
    int iterations = 2000;
    int batch_size = 4;
    int crop_size = 64;
    int sequence_length = 5;
    int base_width = 32;
    int predictor_base_width = 16;

    LossWeights weights;

    bool dense_fusion = true;
    bool condenser = true;
    bool prob_map = true;
    bool teacher_forcing = true;
    bool use_analytic_target = false; // compare generated maps to analytic targets

    std::uint64_t seed = 1;
    int checkpoint_interval = 500;
    int log_interval = 10;
    int threads = 0; // 0 keeps the library default

    std::string condenser_provider = "stub"; // "stub" | "clip_vit"
    std::string clip_weights;
    int embed_dim = 64; // stub provider width
    std::string perceptual_backend = "stub"; // "stub" | "vgg16"
    std::string vgg_weights;

    void validate() const; // throws ConfigError
};

nlohmann::json to_json(const TrainConfig& cfg);
/// Rejects unknown keys; missing keys keep their defaults.
TrainConfig train_config_from_json(const nlohmann::json& j);

TrainConfig load_train_config(const std::string& path);
void save_train_config(const TrainConfig& cfg, const std::string& path);

} // namespace cpnet
