// Copyright (c) 2026 The CPNet Authors
// SPDX-License-Identifier: Apache-2.0

#include "cpnet/training.hpp"

#include <algorithm>
#include <cctype>
#include <cmath>
#include <cstdio>
#include <filesystem>
#include <fstream>
#include <set>

#include "cpnet/archive.hpp"
#include "cpnet/errors.hpp"

namespace fs = std::filesystem;

namespace cpnet {

namespace {

constexpr int kCheckpointVersion = 1;
// The frozen helper networks stand in for pretrained models, so their seeds
// are fixed constants rather than functions of the run seed.
constexpr std::uint64_t kStubProviderSeed = 0x5eedc11bULL;
constexpr std::uint64_t kStubExtractorSeed = 0x5eedfea7ULL;

std::uint64_t net_seed(std::uint64_t seed, std::uint64_t k) {
    return seed * 0x9e3779b97f4a7c15ULL + k;
}

GeneratorConfig make_generator_config(const TrainConfig& c) {
    GeneratorConfig g;
    g.input_channels = kWindowSize + (c.teacher_forcing ? 3 * kWindowRadius : 0);
    g.base_width = c.base_width;
    g.resolution = c.crop_size;
    g.dense_fusion = c.dense_fusion;
    return g;
}

template <typename F>
auto with_rng(std::uint64_t seed, F&& f) {
    Rng rng(seed);
    return f(rng);
}

AdamConfig<float> adam_config(const TrainConfig& c) {
    return AdamConfig<float>{float(c.learning_rate), float(c.beta1), float(c.beta2), 1e-8f};
}

TrainConfig validated(TrainConfig c) {
    c.validate();
    return c;
}

/// First n samples of an [N,...] tensor.
Tensor<float> take_first(const Tensor<float>& x, int n) {
    std::vector<int> shape = x.shape();
    shape[0] = n;
    Tensor<float> out(shape);
    std::copy(x.data(), x.data() + out.numel(), out.data());
    return out;
}

/// Sample i of an [N,...] tensor as [1,...].
Tensor<float> sample_slice(const Tensor<float>& x, int i) {
    std::vector<int> shape = x.shape();
    shape[0] = 1;
    Tensor<float> out(shape);
    std::copy(x.data() + std::size_t(i) * out.numel(), x.data() + std::size_t(i + 1) * out.numel(),
              out.data());
    return out;
}

Tensor<float> stack_frames(const FrameClip& clip, int t0, int n) {
    const int hh = clip.height(), ww = clip.width();
    Tensor<float> out({n, 3, hh, ww});
    for (int j = 0; j < n; ++j)
        std::copy(clip.frames[t0 + j].data(), clip.frames[t0 + j].data() + std::size_t(3) * hh * ww,
                  out.data() + std::size_t(j) * 3 * hh * ww);
    return out;
}

/// Landmark channels only, [N,7,H,W].
Tensor<float> landmark_batch(std::span<const ConditioningWindow> windows) {
    const auto& first = windows[0].landmark_images.at(0);
    const int hh = first.dim(1), ww = first.dim(2);
    Tensor<float> out({int(windows.size()), kWindowSize, hh, ww});
    float* dst = out.data();
    for (const ConditioningWindow& win : windows) {
        if (int(win.landmark_images.size()) != kWindowSize)
            throw ShapeError("landmark_batch: window does not hold 7 landmark images");
        for (const Tensor<float>& lm : win.landmark_images) {
            std::copy(lm.data(), lm.data() + std::size_t(hh) * ww, dst);
            dst += std::size_t(hh) * ww;
        }
    }
    return out;
}

std::string csv_num(double v) {
    char buf[40];
    std::snprintf(buf, sizeof buf, "%.8g", v);
    return buf;
}

void dump_store(ArchiveWriter& w, const std::string& ns, const ParamStore<float>& ps) {
    for (const auto& [name, p] : ps.entries()) {
        w.add(ns + "/" + name, p.value);
        w.add(ns + "/" + name + ".m", p.m);
        w.add(ns + "/" + name + ".v", p.v);
    }
}

void load_store(ArchiveReader& r, const std::string& ns, ParamStore<float>& ps) {
    std::vector<std::string> missing;
    for (auto& [name, p] : ps.entries()) {
        const std::string base = ns + "/" + name;
        const char* suffix[3] = {"", ".m", ".v"};
        Tensor<float>* dst[3] = {&p.value, &p.m, &p.v};
        for (int i = 0; i < 3; ++i) {
            const std::string full = base + suffix[i];
            if (!r.contains(full)) {
                missing.push_back(full);
                continue;
            }
            const Tensor<float>& t = r.get<float>(full);
            if (!t.same_shape(*dst[i]))
                throw IoError("checkpoint: shape mismatch for " + full + ": archive has " +
                              shape_str(t.shape()) + ", network expects " +
                              shape_str(dst[i]->shape()));
            *dst[i] = t;
        }
    }
    if (!missing.empty())
        throw IoError("checkpoint: network '" + ns + "' is missing " +
                      std::to_string(missing.size()) + " arrays (first: " + missing.front() + ")");
}

CheckpointState parse_checkpoint_meta(const nlohmann::json& meta, const std::string& path) {
    try {
        if (!meta.is_object() || meta.value("kind", std::string()) != "cpnet_checkpoint")
            throw IoError(path + " is not a checkpoint");
        CheckpointState st;
        st.format_version = meta.value("format_version", 0);
        if (st.format_version != kCheckpointVersion)
            throw IoError("checkpoint: unsupported format version " +
                          std::to_string(st.format_version));
        st.iteration = meta.value("iteration", 0);
        st.rng_state = meta.value("rng_state", std::string());
        st.config = meta.value("config", nlohmann::json::object());
        if (meta.contains("adam_steps"))
            st.adam_steps = meta.at("adam_steps").get<std::map<std::string, std::int64_t>>();
        return st;
    } catch (const nlohmann::json::exception&) {
        throw IoError("checkpoint: corrupt metadata in " + path);
    }
}

} // namespace

Networks::Networks(const TrainConfig& cfg)
    : generator_config(make_generator_config(cfg)),
      provider(cfg.condenser
                   ? make_embedding_provider(cfg.condenser_provider, kStubProviderSeed,
                                             cfg.embed_dim, cfg.clip_weights)
                   : nullptr),
      generator(with_rng(net_seed(cfg.seed, 1),
                         [&](Rng& r) { return Generator<float>(generator_config, r); })),
      condenser(generator.hooks(), provider ? provider->dim() : cfg.embed_dim),
      predictor(with_rng(net_seed(cfg.seed, 2),
                         [&](Rng& r) {
                             return MapPredictor<float>(cfg.crop_size, cfg.predictor_base_width,
                                                        r);
                         })),
      disc_frame(with_rng(net_seed(cfg.seed, 3),
                          [&](Rng& r) {
                              return PatchDiscriminator<float>(kWindowSize + 3, cfg.base_width,
                                                               3, r);
                          })),
      disc_seq(with_rng(net_seed(cfg.seed, 4),
                        [&](Rng& r) {
                            return PatchDiscriminator<float>(
                                (kWindowSize + 3) * cfg.sequence_length, cfg.base_width, 3, r);
                        })),
      extractor(make_perceptual_extractor<float>(cfg.perceptual_backend, kStubExtractorSeed,
                                                 cfg.vgg_weights)) {}

void save_checkpoint(const std::string& path, const Networks& nets,
                     const std::map<std::string, std::int64_t>& adam_steps, int iteration,
                     const TrainConfig& cfg, const std::string& rng_state) {
    ArchiveWriter w;
    dump_store(w, "generator", nets.generator.params());
    dump_store(w, "condenser", nets.condenser.params());
    dump_store(w, "disc_frame", nets.disc_frame.params());
    dump_store(w, "disc_seq", nets.disc_seq.params());
    dump_store(w, "predictor", nets.predictor.params());
    // The stored config describes the model, not the run location, so the
    // path fields are reset; checkpoints stay byte-identical across runs
    // that differ only in where they read or write.
    TrainConfig stored = cfg;
    stored.data_dir.clear();
    stored.out_dir = TrainConfig{}.out_dir;
    const nlohmann::json meta{
        {"kind", "cpnet_checkpoint"}, {"format_version", kCheckpointVersion},
        {"iteration", iteration},     {"config", to_json(stored)},
        {"rng_state", rng_state},     {"adam_steps", adam_steps},
    };
    w.write(path, meta);
}

CheckpointState peek_checkpoint(const std::string& path) {
    ArchiveReader r(path);
    return parse_checkpoint_meta(r.meta(), path);
}

CheckpointState load_checkpoint(const std::string& path, Networks& nets) {
    ArchiveReader r(path);
    CheckpointState st = parse_checkpoint_meta(r.meta(), path);

    std::set<std::string> expected;
    auto expect = [&](const std::string& ns, const ParamStore<float>& ps) {
        for (const auto& [name, _] : ps.entries())
            for (const char* sfx : {"", ".m", ".v"})
                expected.insert(ns + "/" + name + sfx);
    };
    expect("generator", nets.generator.params());
    expect("condenser", nets.condenser.params());
    expect("disc_frame", nets.disc_frame.params());
    expect("disc_seq", nets.disc_seq.params());
    expect("predictor", nets.predictor.params());
    for (const std::string& name : r.names())
        if (!expected.count(name))
            throw IoError("checkpoint: unexpected array '" + name +
                          "' (architecture does not match the configuration)");

    load_store(r, "generator", nets.generator.params());
    load_store(r, "condenser", nets.condenser.params());
    load_store(r, "disc_frame", nets.disc_frame.params());
    load_store(r, "disc_seq", nets.disc_seq.params());
    load_store(r, "predictor", nets.predictor.params());
    return st;
}

std::pair<std::vector<FrameClip>, std::vector<FrameClip>> split_clips(
    std::vector<FrameClip> clips) {
    const std::size_t n = clips.size();
    std::size_t n_val = 0;
    if (n >= 10) n_val = n / 10;
    else if (n >= 2) n_val = 1;
    std::vector<FrameClip> train, val;
    train.reserve(n - n_val);
    val.reserve(n_val);
    for (std::size_t i = 0; i < n; ++i)
        (i < n - n_val ? train : val).push_back(std::move(clips[i]));
    return {std::move(train), std::move(val)};
}

std::vector<Tensor<float>> generate_video(const Networks& nets, const FrameClip& clip) {
    clip.validate();
    const GeneratorConfig& g = nets.generator.config();
    if (clip.height() != g.resolution || clip.width() != g.resolution)
        throw ShapeError("generate_video: clip is " + std::to_string(clip.height()) + "x" +
                         std::to_string(clip.width()) + ", generator expects " +
                         std::to_string(g.resolution));
    const int len = int(clip.size());
    if (len < kWindowSize) throw ShapeError("generate_video: clip shorter than the window");
    const bool teacher_forcing = g.input_channels > kWindowSize;

    std::vector<Tensor<float>> out;
    out.reserve(std::size_t(len - (kWindowSize - 1)));
    for (int t = kWindowRadius; t <= len - kWindowRadius - 1; ++t) {
        ConditioningWindow win = build_window(clip, t, teacher_forcing);
        if (teacher_forcing) {
            for (int j = t - kWindowRadius; j < t; ++j)
                if (j >= kWindowRadius) win.prior_rgb[j - (t - kWindowRadius)] = out[j - kWindowRadius];
        }
        Tape<float> tape;
        const ConditioningWindow one[1] = {std::move(win)};
        Var<float> x =
            tape.leaf(window_batch<float>(std::span<const ConditioningWindow>(one, 1)), false);
        std::vector<Var<float>> gates;
        const std::vector<Var<float>>* gate_ptr = nullptr;
        if (nets.provider) {
            const std::vector<double> e =
                nets.provider->embed(one[0].landmark_images[kWindowRadius].cast<double>());
            Tensor<float> emb({1, int(e.size())});
            for (std::size_t i = 0; i < e.size(); ++i) emb[std::int64_t(i)] = float(e[i]);
            gates = nets.condenser.gating(tape, tape.leaf(emb, false), true);
            gate_ptr = &gates;
        }
        Var<float> y = nets.generator.forward(tape, x, gate_ptr, true);
        out.push_back(tape.value_of(y).reshaped({3, g.resolution, g.resolution}));
    }
    return out;
}

struct Trainer::BatchData {
    int t0 = 0;
    int W = 0, B = 0, T = 0;
    Tensor<float> input;    // [W,Cin,S,S]
    Tensor<float> input_lm; // [W,7,S,S]
    Tensor<float> targets;  // [W,3,S,S]
    Tensor<float> maps_b;   // [B,1,S,S] when prob_map
    Tensor<float> embeds;   // [W,d] when condenser
};

Trainer::Trainer(const TrainConfig& cfg)
    : cfg_(validated(cfg)),
      nets_(cfg_),
      adam_g_(adam_config(cfg_)),
      adam_c_(adam_config(cfg_)),
      adam_df_(adam_config(cfg_)),
      adam_ds_(adam_config(cfg_)),
      adam_p_(adam_config(cfg_)),
      data_rng_(net_seed(cfg_.seed, 77)) {
    if (cfg_.threads > 0) set_num_threads(cfg_.threads);
    auto [train, val] = split_clips(load_clips(cfg_.data_dir));
    for (FrameClip& c : val) val_clips_.push_back(center_crop_clip(c, cfg_.crop_size));
    build_caches(std::move(train));
}

Trainer::Trainer(const TrainConfig& cfg, const std::string& resume_path) : Trainer(cfg) {
    CheckpointState st = load_checkpoint(resume_path, nets_);
    if (st.iteration > cfg_.iterations)
        throw ConfigError("resume: checkpoint is already past the configured iterations");
    iteration_ = st.iteration;
    if (!st.rng_state.empty()) data_rng_.set_state(st.rng_state);
    auto steps_of = [&](const char* key) {
        auto it = st.adam_steps.find(key);
        if (it == st.adam_steps.end())
            throw IoError(std::string("checkpoint: missing optimizer steps for ") + key);
        return it->second;
    };
    adam_g_.set_steps(steps_of("generator"));
    adam_c_.set_steps(steps_of("condenser"));
    adam_df_.set_steps(steps_of("disc_frame"));
    adam_ds_.set_steps(steps_of("disc_seq"));
    adam_p_.set_steps(steps_of("predictor"));
}

std::vector<FrameClip> Trainer::train_clip_copies() const {
    std::vector<FrameClip> out;
    out.reserve(cache_.size());
    for (const ClipCache& cc : cache_) out.push_back(cc.clip);
    return out;
}

void Trainer::build_caches(std::vector<FrameClip> train) {
    if (train.empty()) throw ConfigError("training data: no clips in " + cfg_.data_dir);
    const int S = cfg_.crop_size;
    const int W = std::max(cfg_.batch_size, cfg_.sequence_length);
    const GaussianKernel kernel = build_gaussian_kernel(25, 5.0);
    for (FrameClip& source : train) {
        ClipCache cc;
        cc.clip = center_crop_clip(source, S);
        const int len = int(cc.clip.size());
        for (int t = kWindowRadius; t <= len - kWindowRadius - 1; ++t) {
            cc.windows.push_back(build_window(cc.clip, t, cfg_.teacher_forcing));
            if (cfg_.prob_map)
                cc.maps.push_back(
                    make_probability_map<float>(cc.clip.landmarks[t], S, S, kernel));
            if (cfg_.condenser) {
                const std::vector<double> e = nets_.provider->embed(
                    cc.windows.back().landmark_images[kWindowRadius].cast<double>());
                Tensor<float> emb({int(e.size())});
                for (std::size_t i = 0; i < e.size(); ++i) emb[std::int64_t(i)] = float(e[i]);
                cc.embeddings.push_back(std::move(emb));
            }
        }
        if (len >= W + 2 * kWindowRadius) usable_.push_back(cache_.size());
        cache_.push_back(std::move(cc));
    }
    if (usable_.empty())
        throw ConfigError(
            "training data: no clip is long enough for the batch/sequence settings");
}

Trainer::BatchData Trainer::sample_batch() {
    BatchData b;
    b.B = cfg_.batch_size;
    b.T = cfg_.sequence_length;
    b.W = std::max(b.B, b.T);
    const ClipCache& cc = cache_[usable_[std::size_t(data_rng_.below(usable_.size()))]];
    const int len = int(cc.clip.size());
    const int hi = len - (kWindowRadius + 1) - (b.W - 1);
    b.t0 = kWindowRadius + int(data_rng_.below(std::uint64_t(hi - kWindowRadius + 1)));

    const int base = b.t0 - kWindowRadius; // cache index of the first window
    std::span<const ConditioningWindow> wins(cc.windows.data() + base, std::size_t(b.W));
    b.input = window_batch<float>(wins);
    b.input_lm = landmark_batch(wins);
    b.targets = stack_frames(cc.clip, b.t0, b.W);
    if (cfg_.prob_map) {
        const int S = cfg_.crop_size;
        b.maps_b = Tensor<float>({b.B, 1, S, S});
        for (int j = 0; j < b.B; ++j)
            std::copy(cc.maps[base + j].data(), cc.maps[base + j].data() + std::size_t(S) * S,
                      b.maps_b.data() + std::size_t(j) * S * S);
    }
    if (cfg_.condenser) {
        const int d = int(cc.embeddings[0].numel());
        b.embeds = Tensor<float>({b.W, d});
        for (int j = 0; j < b.W; ++j)
            std::copy(cc.embeddings[base + j].data(), cc.embeddings[base + j].data() + d,
                      b.embeds.data() + std::size_t(j) * d);
    }
    return b;
}

TrainStats Trainer::step() {
    ++iteration_;
    TrainStats st;
    st.iteration = iteration_;
    const LossWeights& w = cfg_.weights;
    BatchData b = sample_batch();

    auto finite = [&](double v, const char* term) {
        if (!std::isfinite(v))
            throw TrainingError(std::string("non-finite ") + term + " loss at iteration " +
                                std::to_string(iteration_));
        return v;
    };
    auto scalar = [](Tape<float>& t, Var<float> v) { return double(t.value_of(v)[0]); };

    // One synthesis pass with gradients; critics see a detached copy.
    Tape<float> tg;
    Var<float> gin = tg.leaf(b.input, false);
    std::vector<Var<float>> gates;
    const std::vector<Var<float>>* gate_ptr = nullptr;
    if (cfg_.condenser) {
        gates = nets_.condenser.gating(tg, tg.leaf(b.embeds, false), false);
        gate_ptr = &gates;
    }
    Var<float> fake = nets_.generator.forward(tg, gin, gate_ptr, false);
    const Tensor<float> fake_val = tg.value_of(fake);

    const Tensor<float> lm_b = take_first(b.input_lm, b.B);
    const Tensor<float> tgt_b = take_first(b.targets, b.B);
    const Tensor<float> fake_b_val = take_first(fake_val, b.B);

    {
        Tape<float> td;
        Var<float> lm = td.leaf(lm_b, false);
        Var<float> real_in = frame_disc_input(td, lm, td.leaf(tgt_b, false));
        Var<float> fake_in = frame_disc_input(td, lm, td.leaf(fake_b_val, false));
        Var<float> loss = lsgan_discriminator_loss(td, nets_.disc_frame.forward(td, real_in),
                                                   nets_.disc_frame.forward(td, fake_in));
        st.loss_disc_frame = finite(scalar(td, loss), "frame critic");
        td.backward(loss);
        adam_df_.step(nets_.disc_frame.params(), td);
    }

    if (w.temporal != 0.0) {
        Tape<float> ts;
        std::vector<Var<float>> wins, reals, fakes;
        for (int t = 0; t < b.T; ++t) {
            wins.push_back(ts.leaf(sample_slice(b.input_lm, t), false));
            reals.push_back(ts.leaf(sample_slice(b.targets, t), false));
            fakes.push_back(ts.leaf(sample_slice(fake_val, t), false));
        }
        Var<float> real_in = sequence_disc_input(ts, std::span<const Var<float>>(wins),
                                                 std::span<const Var<float>>(reals));
        Var<float> fake_in = sequence_disc_input(ts, std::span<const Var<float>>(wins),
                                                 std::span<const Var<float>>(fakes));
        Var<float> loss = lsgan_discriminator_loss(ts, nets_.disc_seq.forward(ts, real_in),
                                                   nets_.disc_seq.forward(ts, fake_in));
        st.loss_disc_seq = finite(scalar(ts, loss), "sequence critic");
        ts.backward(loss);
        adam_ds_.step(nets_.disc_seq.params(), ts);
    }

    if (cfg_.prob_map) {
        Tape<float> tp;
        Var<float> pred_real = nets_.predictor.forward(tp, tp.leaf(tgt_b, false));
        Var<float> pred_fake = nets_.predictor.forward(tp, tp.leaf(fake_b_val, false));
        Var<float> loss = predictor_loss(pred_real, tp.leaf(b.maps_b, false), pred_fake,
                                         float(w.lambda_dmp));
        st.loss_dmp = finite(scalar(tp, loss), "map predictor");
        tp.backward(loss);
        adam_p_.step(nets_.predictor.params(), tp);
    }

    {
        Var<float> fake_b = slice_batch(fake, 0, b.B);
        Var<float> gt_b = tg.leaf(tgt_b, false);
        Var<float> adv, rec, temporal, prob;
        if (w.adversarial != 0.0) {
            Var<float> lm = tg.leaf(lm_b, false);
            Var<float> scores =
                nets_.disc_frame.forward(tg, frame_disc_input(tg, lm, fake_b), true);
            adv = lsgan_generator_loss(tg, scores);
            st.loss_adv = finite(scalar(tg, adv), "adversarial");
        }
        if (w.reconstruction != 0.0) {
            rec = perceptual_loss(*nets_.extractor, tg, fake_b, gt_b);
            st.loss_rec = finite(scalar(tg, rec), "reconstruction");
        }
        if (w.temporal != 0.0) {
            std::vector<Var<float>> wins, cands;
            for (int t = 0; t < b.T; ++t) {
                wins.push_back(tg.leaf(sample_slice(b.input_lm, t), false));
                cands.push_back(slice_batch(fake, t, t + 1));
            }
            Var<float> scores = nets_.disc_seq.forward(
                tg,
                sequence_disc_input(tg, std::span<const Var<float>>(wins),
                                    std::span<const Var<float>>(cands)),
                true);
            temporal = lsgan_generator_loss(tg, scores);
            st.loss_temporal = finite(scalar(tg, temporal), "temporal");
        }
        if (cfg_.prob_map && w.probability != 0.0) {
            prob = cfg_.use_analytic_target
                       ? probability_consistency_loss(nets_.predictor, tg, fake_b, b.maps_b)
                       : probability_consistency_loss(nets_.predictor, tg, fake_b, gt_b);
            st.loss_prob = finite(scalar(tg, prob), "map consistency");
        }
        Var<float> total = total_generator_loss(tg, w, adv, rec, temporal, prob);
        st.total = finite(
            total_generator_loss(w, st.loss_adv, st.loss_rec, st.loss_temporal, st.loss_prob),
            "total generator");
        tg.backward(total);
        adam_g_.step(nets_.generator.params(), tg);
        if (cfg_.condenser) adam_c_.step(nets_.condenser.params(), tg);
    }
    return st;
}

void Trainer::save(const std::string& path) const {
    const std::map<std::string, std::int64_t> steps = {
        {"generator", adam_g_.steps()},   {"condenser", adam_c_.steps()},
        {"disc_frame", adam_df_.steps()}, {"disc_seq", adam_ds_.steps()},
        {"predictor", adam_p_.steps()},
    };
    save_checkpoint(path, nets_, steps, iteration_, cfg_, data_rng_.state());
}

void Trainer::train() {
    fs::create_directories(cfg_.out_dir);
    const std::string log_path = cfg_.out_dir + "/train_log.csv";
    std::ofstream log(log_path, iteration_ > 0 ? std::ios::out | std::ios::app : std::ios::out);
    if (!log) throw IoError("cannot write " + log_path);
    if (iteration_ == 0) log << "iteration,L_adv,L_r,L_t,L_p,l_dmp,total\n" << std::flush;
    while (iteration_ < cfg_.iterations) {
        TrainStats st = step();
        if (st.iteration % cfg_.log_interval == 0 || st.iteration == cfg_.iterations) {
            log << st.iteration << ',' << csv_num(st.loss_adv) << ',' << csv_num(st.loss_rec)
                << ',' << csv_num(st.loss_temporal) << ',' << csv_num(st.loss_prob) << ','
                << csv_num(st.loss_dmp) << ',' << csv_num(st.total) << '\n'
                << std::flush;
        }
        if (cfg_.checkpoint_interval > 0 && st.iteration % cfg_.checkpoint_interval == 0 &&
            st.iteration < cfg_.iterations) {
            char name[40];
            std::snprintf(name, sizeof name, "checkpoint_%06d.bin", st.iteration);
            save(cfg_.out_dir + "/" + name);
        }
    }
    save(cfg_.out_dir + "/checkpoint_final.bin");
}

namespace {

std::string sanitize_label(std::string s) {
    for (char& c : s)
        if (!std::isalnum(static_cast<unsigned char>(c))) c = '_';
    return s;
}

AblationRow run_ablation_row(const TrainConfig& cfg, const std::string& table,
                             const std::string& label) {
    AblationRow row;
    row.table = table;
    row.label = label;
    try {
        Trainer trainer(cfg);
        trainer.train();
        std::vector<FrameClip> eval_clips = trainer.val_clips();
        if (eval_clips.empty()) eval_clips = trainer.train_clip_copies();
        NetSynthesizer synth(trainer.networks());
        MetricReport report = evaluate_corpus(synth, eval_clips, label);
        row.psnr = report.mean_psnr;
        row.ssim = report.mean_ssim;
        row.ok = true;
    } catch (const std::exception& e) {
        row.error = e.what();
    }
    return row;
}

} // namespace

std::vector<AblationRow> run_ablation_suite(const TrainConfig& base,
                                            const std::string& out_dir,
                                            const std::string& table) {
    if (table != "all" && table != "2" && table != "3" && table != "4")
        throw ConfigError("unknown ablation table '" + table + "' (expected 2, 3, 4, or all)");
    const bool want2 = table == "all" || table == "2";
    const bool want3 = table == "all" || table == "3";
    const bool want4 = table == "all" || table == "4";

    std::vector<AblationRow> rows;
    auto run = [&](const std::string& table_id, const std::string& label, auto&& mutate) {
        TrainConfig c = base;
        c.out_dir = out_dir + "/" + table_id + "_" + sanitize_label(label);
        c.checkpoint_interval = 0;
        mutate(c);
        rows.push_back(run_ablation_row(c, table_id, label));
    };

    // Component stack.
    if (want2) {
        run("table2", "none", [](TrainConfig& c) {
            c.dense_fusion = false;
            c.condenser = false;
            c.prob_map = false;
            c.weights.probability = 0.0;
        });
        run("table2", "I", [](TrainConfig& c) {
            c.dense_fusion = true;
            c.condenser = false;
            c.prob_map = false;
            c.weights.probability = 0.0;
        });
        run("table2", "I+II", [](TrainConfig& c) {
            c.dense_fusion = true;
            c.condenser = true;
            c.prob_map = false;
            c.weights.probability = 0.0;
        });
        run("table2", "I+II+III", [](TrainConfig& c) {
            c.dense_fusion = true;
            c.condenser = true;
            c.prob_map = true;
            if (c.weights.probability == 0.0) c.weights.probability = 0.1;
        });
    }

    // Loss stack.
    if (want3) {
        const double dmp = base.weights.lambda_dmp;
        run("table3", "L_adv", [&](TrainConfig& c) {
            c.weights = LossWeights{1.0, 0.0, 0.0, 0.0, dmp};
            c.prob_map = false;
        });
        run("table3", "+L_r", [&](TrainConfig& c) {
            c.weights = LossWeights{1.0, 5.0, 0.0, 0.0, dmp};
            c.prob_map = false;
        });
        run("table3", "+L_t", [&](TrainConfig& c) {
            c.weights = LossWeights{1.0, 5.0, 1.0, 0.0, dmp};
            c.prob_map = false;
        });
        run("table3", "+L_p", [&](TrainConfig& c) {
            c.weights = LossWeights{1.0, 5.0, 1.0, 0.1, dmp};
            c.prob_map = true;
        });
    }

    // Map-consistency weight grid.
    if (want4) {
        for (double lp : {1.0, 0.5, 0.1, 0.05}) {
            char label[40];
            std::snprintf(label, sizeof label, "lambda_p=%.2f", lp);
            run("table4", label, [lp](TrainConfig& c) {
                c.prob_map = true;
                c.weights.probability = lp;
            });
        }
    }
    return rows;
}

void write_ablation_tables(const std::vector<AblationRow>& rows, const std::string& out_dir) {
    fs::create_directories(out_dir);
    for (const char* table : {"table2", "table3", "table4"}) {
        const bool any = std::any_of(rows.begin(), rows.end(),
                                     [&](const AblationRow& r) { return r.table == table; });
        if (!any) continue; // filtered suites emit only the tables they ran
        const std::string path = out_dir + "/" + std::string(table) + ".csv";
        std::ofstream out(path);
        if (!out) throw IoError("cannot write " + path);
        out << "row,psnr,ssim,status\n";
        for (const AblationRow& r : rows) {
            if (r.table != table) continue;
            std::string status = r.ok ? "ok" : "failed: " + r.error;
            for (char& c : status)
                if (c == ',' || c == '\n') c = ';';
            if (r.ok)
                out << r.label << ',' << csv_num(r.psnr) << ',' << csv_num(r.ssim) << ','
                    << status << '\n';
            else
                out << r.label << ",,," << status << '\n';
        }
    }
}

} // namespace cpnet
