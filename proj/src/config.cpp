// Copyright (c) 2026 The CPNet Authors
// SPDX-License-Identifier: Apache-2.0

#include "cpnet/config.hpp"

#include <fstream>
#include <set>

#include "cpnet/errors.hpp"

namespace cpnet {

void TrainConfig::validate() const {
    if (learning_rate <= 0.0) throw ConfigError("config: learning_rate must be positive");
    if (beta1 < 0.0 || beta1 >= 1.0 || beta2 < 0.0 || beta2 >= 1.0)
        throw ConfigError("config: betas must lie in [0,1)");
    if (iterations < 1) throw ConfigError("config: iterations must be >= 1");
    if (batch_size < 1) throw ConfigError("config: batch_size must be >= 1");
    if (crop_size < 32 || crop_size % 16 != 0)
        throw ConfigError("config: crop_size must be a multiple of 16, >= 32");
    if (sequence_length < 2) throw ConfigError("config: sequence_length must be >= 2");
    if (base_width < 8 || base_width % 2 != 0)
        throw ConfigError("config: base_width must be even and >= 8");
    if (predictor_base_width < 4)
        throw ConfigError("config: predictor_base_width must be >= 4");
    if (weights.adversarial < 0 || weights.reconstruction < 0 || weights.temporal < 0 ||
        weights.probability < 0 || weights.lambda_dmp < 0)
        throw ConfigError("config: loss weights must be non-negative");
    if (weights.probability != 0.0 && !prob_map)
        throw ConfigError("config: probability weight requires prob_map");
    if (checkpoint_interval < 0) throw ConfigError("config: checkpoint_interval must be >= 0");
    if (log_interval < 1) throw ConfigError("config: log_interval must be >= 1");
    if (threads < 0) throw ConfigError("config: threads must be >= 0");
    if (embed_dim < 1) throw ConfigError("config: embed_dim must be >= 1");
    if (condenser_provider != "stub" && condenser_provider != "clip_vit")
        throw ConfigError("config: condenser_provider must be 'stub' or 'clip_vit'");
    if (condenser && condenser_provider == "clip_vit" && clip_weights.empty())
        throw ConfigError("config: clip_vit provider requires clip_weights");
    if (perceptual_backend != "stub" && perceptual_backend != "vgg16")
        throw ConfigError("config: perceptual_backend must be 'stub' or 'vgg16'");
    if (weights.reconstruction != 0.0 && perceptual_backend == "vgg16" && vgg_weights.empty())
        throw ConfigError("config: vgg16 backend requires vgg_weights");
}

nlohmann::json to_json(const TrainConfig& c) {
    return nlohmann::json{
        {"data_dir", c.data_dir},
        {"out_dir", c.out_dir},
        {"learning_rate", c.learning_rate},
        {"beta1", c.beta1},
        {"beta2", c.beta2},
        {"iterations", c.iterations},
        {"batch_size", c.batch_size},
        {"crop_size", c.crop_size},
        {"sequence_length", c.sequence_length},
        {"base_width", c.base_width},
        {"predictor_base_width", c.predictor_base_width},
        {"weights",
         {{"adversarial", c.weights.adversarial},
          {"reconstruction", c.weights.reconstruction},
          {"temporal", c.weights.temporal},
          {"probability", c.weights.probability},
          {"lambda_dmp", c.weights.lambda_dmp}}},
        {"dense_fusion", c.dense_fusion},
        {"condenser", c.condenser},
        {"prob_map", c.prob_map},
        {"teacher_forcing", c.teacher_forcing},
        {"use_analytic_target", c.use_analytic_target},
        {"seed", c.seed},
        {"checkpoint_interval", c.checkpoint_interval},
        {"log_interval", c.log_interval},
        {"threads", c.threads},
        {"condenser_provider", c.condenser_provider},
        {"clip_weights", c.clip_weights},
        {"embed_dim", c.embed_dim},
        {"perceptual_backend", c.perceptual_backend},
        {"vgg_weights", c.vgg_weights},
    };
}

namespace {

template <typename T>
void read_key(const nlohmann::json& j, const char* key, T& out) {
    if (!j.contains(key)) return;
    try {
        out = j.at(key).get<T>();
    } catch (const nlohmann::json::exception& e) {
        throw ConfigError(std::string("config: bad value for '") + key + "': " + e.what());
    }
}

void check_known_keys(const nlohmann::json& j, const std::set<std::string>& known,
                      const std::string& scope) {
    for (const auto& [key, _] : j.items())
        if (!known.count(key))
            throw ConfigError("config: unknown key '" + scope + key + "'");
}

} // namespace

TrainConfig train_config_from_json(const nlohmann::json& j) {
    if (!j.is_object()) throw ConfigError("config: root must be a JSON object");
    static const std::set<std::string> known = {
        "data_dir", "out_dir", "learning_rate", "beta1", "beta2", "iterations",
        "batch_size", "crop_size", "sequence_length", "base_width", "predictor_base_width",
        "weights", "dense_fusion", "condenser", "prob_map", "teacher_forcing",
        "use_analytic_target", "seed", "checkpoint_interval", "log_interval", "threads",
        "condenser_provider", "clip_weights", "embed_dim", "perceptual_backend", "vgg_weights"};
    check_known_keys(j, known, "");

    TrainConfig c;
    read_key(j, "data_dir", c.data_dir);
    read_key(j, "out_dir", c.out_dir);
    read_key(j, "learning_rate", c.learning_rate);
    read_key(j, "beta1", c.beta1);
    read_key(j, "beta2", c.beta2);
    read_key(j, "iterations", c.iterations);
    read_key(j, "batch_size", c.batch_size);
    read_key(j, "crop_size", c.crop_size);
    read_key(j, "sequence_length", c.sequence_length);
    read_key(j, "base_width", c.base_width);
    read_key(j, "predictor_base_width", c.predictor_base_width);
    if (j.contains("weights")) {
        const auto& w = j.at("weights");
        if (!w.is_object()) throw ConfigError("config: 'weights' must be an object");
        static const std::set<std::string> wkeys = {"adversarial", "reconstruction", "temporal",
                                                    "probability", "lambda_dmp"};
        check_known_keys(w, wkeys, "weights.");
        read_key(w, "adversarial", c.weights.adversarial);
        read_key(w, "reconstruction", c.weights.reconstruction);
        read_key(w, "temporal", c.weights.temporal);
        read_key(w, "probability", c.weights.probability);
        read_key(w, "lambda_dmp", c.weights.lambda_dmp);
    }
    read_key(j, "dense_fusion", c.dense_fusion);
    read_key(j, "condenser", c.condenser);
    read_key(j, "prob_map", c.prob_map);
    read_key(j, "teacher_forcing", c.teacher_forcing);
    read_key(j, "use_analytic_target", c.use_analytic_target);
    read_key(j, "seed", c.seed);
    read_key(j, "checkpoint_interval", c.checkpoint_interval);
    read_key(j, "log_interval", c.log_interval);
    read_key(j, "threads", c.threads);
    read_key(j, "condenser_provider", c.condenser_provider);
    read_key(j, "clip_weights", c.clip_weights);
    read_key(j, "embed_dim", c.embed_dim);
    read_key(j, "perceptual_backend", c.perceptual_backend);
    read_key(j, "vgg_weights", c.vgg_weights);
    return c;
}

TrainConfig load_train_config(const std::string& path) {
    std::ifstream in(path);
    if (!in) throw IoError("config: cannot open " + path);
    nlohmann::json j;
    try {
        in >> j;
    } catch (const nlohmann::json::exception& e) {
        throw ConfigError("config: parse error in " + path + ": " + e.what());
    }
    return train_config_from_json(j);
}

void save_train_config(const TrainConfig& cfg, const std::string& path) {
    std::ofstream out(path);
    if (!out) throw IoError("config: cannot write " + path);
    out << to_json(cfg).dump(2) << '\n';
}

} // namespace cpnet
