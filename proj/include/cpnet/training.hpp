// Copyright (c) 2026 The CPNet Authors
// SPDX-License-Identifier: Apache-2.0

#pragma once

#include <map>
#include <memory>
#include <string>
#include <utility>
#include <vector>

#include "cpnet/condenser.hpp"
#include "cpnet/config.hpp"
#include "cpnet/data_pipeline.hpp"
#include "cpnet/discriminators.hpp"
#include "cpnet/generator.hpp"
#include "cpnet/losses.hpp"
#include "cpnet/metrics.hpp"
#include "cpnet/perceptual.hpp"
#include "cpnet/probability_map.hpp"

namespace cpnet {

/// Every network in the system plus the frozen helpers (embedding provider,
/// perceptual extractor). Construction is deterministic in cfg.seed.
struct Networks {
    explicit Networks(const TrainConfig& cfg);

    GeneratorConfig generator_config;
    std::unique_ptr<EmbeddingProvider> provider; // null when the condenser is off
    Generator<float> generator;
    CondenserHead<float> condenser;
    MapPredictor<float> predictor;
    PatchDiscriminator<float> disc_frame;
    PatchDiscriminator<float> disc_seq;
    std::unique_ptr<PerceptualExtractor<float>> extractor;
};

/// Checkpoint metadata; parameter payloads live in the same archive under
/// namespaces generator/, condenser/, disc_frame/, disc_seq/, predictor/.
struct CheckpointState {
    int format_version = 0;
    int iteration = 0;
    std::string rng_state;
    nlohmann::json config;
    std::map<std::string, std::int64_t> adam_steps;
};

void save_checkpoint(const std::string& path, const Networks& nets,
                     const std::map<std::string, std::int64_t>& adam_steps, int iteration,
                     const TrainConfig& cfg, const std::string& rng_state);
/// Metadata only, without needing matching networks.
CheckpointState peek_checkpoint(const std::string& path);
/// Restores parameters and optimizer moments into `nets`; throws IoError
/// naming the network whose arrays are missing or mismatched.
CheckpointState load_checkpoint(const std::string& path, Networks& nets);

/// Deterministic per-clip split: roughly one clip in ten validates, always
/// leaving at least one training clip. Returns {train, val}.
std::pair<std::vector<FrameClip>, std::vector<FrameClip>> split_clips(
    std::vector<FrameClip> clips);

/// Autoregressive synthesis over one clip already at generator resolution.
/// Produces frames for targets 3..len-4; early targets borrow ground-truth
/// priors, later ones consume previously generated frames.
std::vector<Tensor<float>> generate_video(const Networks& nets, const FrameClip& clip);

class NetSynthesizer final : public VideoSynthesizer {
public:
    explicit NetSynthesizer(const Networks& nets) : nets_(nets) {}
    std::vector<Tensor<float>> synthesize(const FrameClip& clip) override {
        return generate_video(nets_, clip);
    }

private:
    const Networks& nets_;
};

struct TrainStats {
    int iteration = 0;
    double loss_adv = 0.0;
    double loss_rec = 0.0;
    double loss_temporal = 0.0;
    double loss_prob = 0.0;
    double loss_dmp = 0.0; // map predictor objective
    double total = 0.0;    // weighted generator objective
    double loss_disc_frame = 0.0;
    double loss_disc_seq = 0.0;
};

/// Alternating optimization: frame critic, sequence critic, map predictor,
/// then the generator (with condenser head) against the frozen critics.
class Trainer {
public:
    explicit Trainer(const TrainConfig& cfg);
    /// Resumes state (parameters, moments, iteration, sampling RNG) from a
    /// checkpoint; cfg supplies everything else, including the new horizon.
    Trainer(const TrainConfig& cfg, const std::string& resume_path);

    TrainStats step();
    /// Runs to cfg.iterations, appending the loss log and writing periodic
    /// checkpoints plus a final one.
    void train();
    void save(const std::string& path) const;

    int iteration() const { return iteration_; }
    const TrainConfig& config() const { return cfg_; }
    Networks& networks() { return nets_; }
    const std::vector<FrameClip>& val_clips() const { return val_clips_; }
    std::vector<FrameClip> train_clip_copies() const;

private:
    struct ClipCache {
        FrameClip clip; // cropped
        std::vector<ConditioningWindow> windows; // target t = index + 3
        std::vector<Tensor<float>> maps;         // analytic map per target
        std::vector<Tensor<float>> embeddings;   // provider output per target
    };
    struct BatchData;

    void build_caches(std::vector<FrameClip> train);
    BatchData sample_batch();

    TrainConfig cfg_;
    Networks nets_;
    Adam<float> adam_g_, adam_c_, adam_df_, adam_ds_, adam_p_;
    Rng data_rng_;
    std::vector<ClipCache> cache_;
    std::vector<std::size_t> usable_; // cache indices long enough to sample
    std::vector<FrameClip> val_clips_;
    int iteration_ = 0;
};

struct AblationRow {
    std::string table; // "table2" | "table3" | "table4"
    std::string label;
    bool ok = false;
    std::string error;
    double psnr = 0.0;
    double ssim = 0.0;
};

/// Trains and scores the twelve standard variants: component stack
/// (none, I, I+II, I+II+III), loss stack (L_adv, +L_r, +L_t, +L_p), and the
/// map-consistency weight grid (1.0, 0.5, 0.1, 0.05). Rows that fail are
/// reported, not fatal. `table` selects one group ("2", "3", "4") or "all".
std::vector<AblationRow> run_ablation_suite(const TrainConfig& base,
                                            const std::string& out_dir,
                                            const std::string& table = "all");
void write_ablation_tables(const std::vector<AblationRow>& rows, const std::string& out_dir);

} // namespace cpnet
