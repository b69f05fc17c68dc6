// Copyright (c) 2026 The CPNet Authors
// SPDX-License-Identifier: Apache-2.0

#include <cstdio>
#include <filesystem>
#include <fstream>
#include <iostream>
#include <memory>
#include <string>

#include <CLI11.hpp>

#include "cpnet/config.hpp"
#include "cpnet/data_pipeline.hpp"
#include "cpnet/errors.hpp"
#include "cpnet/image_io.hpp"
#include "cpnet/metrics.hpp"
#include "cpnet/training.hpp"

namespace fs = std::filesystem;

namespace {

struct NetworkBundle {
    cpnet::TrainConfig cfg;
    std::unique_ptr<cpnet::Networks> nets;
};

NetworkBundle load_networks(const std::string& checkpoint) {
    NetworkBundle b;
    cpnet::CheckpointState st = cpnet::peek_checkpoint(checkpoint);
    b.cfg = cpnet::train_config_from_json(st.config);
    b.nets = std::make_unique<cpnet::Networks>(b.cfg);
    cpnet::load_checkpoint(checkpoint, *b.nets);
    return b;
}

void cmd_make_toy_data(const std::string& out, std::uint64_t seed, int clips, int frames,
                       int resolution) {
    const auto data = cpnet::make_toy_dataset(seed, clips, frames, resolution);
    cpnet::save_clips(out, data);
    std::cout << "wrote " << data.size() << " clips (" << frames << " frames, " << resolution
              << "x" << resolution << ") to " << out << "\n";
}

void cmd_train(const cpnet::TrainConfig& cfg, const std::string& resume) {
    std::unique_ptr<cpnet::Trainer> trainer;
    if (resume.empty()) trainer = std::make_unique<cpnet::Trainer>(cfg);
    else trainer = std::make_unique<cpnet::Trainer>(cfg, resume);
    std::cout << "training from iteration " << trainer->iteration() << " to "
              << cfg.iterations << "\n";
    trainer->train();
    std::cout << "done; final checkpoint: " << cfg.out_dir << "/checkpoint_final.bin\n";
}

void cmd_generate(const std::string& checkpoint, const std::string& data_dir, int clip_index,
                  const std::string& out_dir) {
    NetworkBundle b = load_networks(checkpoint);
    auto clips = cpnet::load_clips(data_dir);
    if (clip_index < 0 || std::size_t(clip_index) >= clips.size())
        throw cpnet::ConfigError("generate: clip index " + std::to_string(clip_index) +
                                 " out of range (" + std::to_string(clips.size()) + " clips)");
    const cpnet::FrameClip cropped =
        cpnet::center_crop_clip(clips[std::size_t(clip_index)], b.cfg.crop_size);
    const auto frames = cpnet::generate_video(*b.nets, cropped);

    fs::create_directories(out_dir);
    double psnr_sum = 0.0, ssim_sum = 0.0;
    for (std::size_t i = 0; i < frames.size(); ++i) {
        char name[48];
        std::snprintf(name, sizeof name, "gen_%05zu.png", i);
        cpnet::write_image_rgb(out_dir + "/" + name, frames[i]);
        std::snprintf(name, sizeof name, "ref_%05zu.png", i);
        const cpnet::Tensor<float>& gt = cropped.frames[i + cpnet::kWindowRadius];
        cpnet::write_image_rgb(out_dir + "/" + name, gt);
        psnr_sum += cpnet::psnr(frames[i], gt, 1.0);
        ssim_sum += cpnet::ssim(frames[i], gt, 1.0);
    }
    std::cout << "generated " << frames.size() << " frames to " << out_dir << " (psnr "
              << psnr_sum / double(frames.size()) << ", ssim "
              << ssim_sum / double(frames.size()) << ")\n";
}

void cmd_evaluate(const std::string& checkpoint, const std::string& data_dir,
                  const std::string& split, const std::string& out_csv) {
    NetworkBundle b = load_networks(checkpoint);
    auto [train, val] = cpnet::split_clips(cpnet::load_clips(data_dir));
    std::vector<cpnet::FrameClip> chosen;
    if (split == "train") chosen = std::move(train);
    else if (split == "val") chosen = std::move(val);
    else {
        chosen = std::move(train);
        for (auto& c : val) chosen.push_back(std::move(c));
    }
    if (chosen.empty()) throw cpnet::ConfigError("evaluate: split '" + split + "' is empty");
    for (auto& c : chosen) c = cpnet::center_crop_clip(c, b.cfg.crop_size);

    cpnet::NetSynthesizer synth(*b.nets);
    const cpnet::MetricReport report = cpnet::evaluate_corpus(synth, chosen, "cpnet");
    std::cout << report.to_table();
    if (!out_csv.empty()) {
        std::ofstream out(out_csv);
        if (!out) throw cpnet::IoError("cannot write " + out_csv);
        out << report.to_csv();
        std::cout << "wrote " << out_csv << "\n";
    }
}

void cmd_ablate(const cpnet::TrainConfig& base, const std::string& out_dir,
                const std::string& table) {
    const auto rows = cpnet::run_ablation_suite(base, out_dir, table);
    cpnet::write_ablation_tables(rows, out_dir);
    std::size_t failed = 0;
    for (const auto& r : rows) {
        if (r.ok)
            std::cout << r.table << " | " << r.label << " | psnr " << r.psnr << " | ssim "
                      << r.ssim << "\n";
        else {
            std::cout << r.table << " | " << r.label << " | FAILED: " << r.error << "\n";
            ++failed;
        }
    }
    std::cout << "tables written to " << out_dir << "\n";
    if (failed == rows.size())
        throw cpnet::TrainingError("ablation: every variant failed");
}

} // namespace

int main(int argc, char** argv) {
    CLI::App app{"landmark-conditioned talking-face video generator"};
    app.require_subcommand(1);

    // make-toy-data
    auto* mk = app.add_subcommand("make-toy-data", "render a procedural clip dataset");
    std::string mk_out;
    std::uint64_t mk_seed = 1;
    int mk_clips = 10, mk_frames = 30, mk_res = 64;
    mk->add_option("--out", mk_out, "output directory")->required();
    mk->add_option("--seed", mk_seed, "dataset seed");
    mk->add_option("--clips", mk_clips, "number of clips");
    mk->add_option("--frames", mk_frames, "frames per clip");
    mk->add_option("--resolution", mk_res, "frame resolution");

    // train
    auto* tr = app.add_subcommand("train", "train the generator and critics");
    std::string tr_config, tr_resume, tr_data, tr_out;
    int tr_iterations = -1;
    std::int64_t tr_seed = -1;
    tr->add_option("--config", tr_config, "JSON config file")->required();
    tr->add_option("--resume", tr_resume, "checkpoint to resume from");
    tr->add_option("--data", tr_data, "override data_dir");
    tr->add_option("--out", tr_out, "override out_dir");
    tr->add_option("--iterations", tr_iterations, "override iterations");
    tr->add_option("--seed", tr_seed, "override seed");

    // generate
    auto* gen = app.add_subcommand("generate", "synthesize a clip from a checkpoint");
    std::string gen_ckpt, gen_data, gen_out;
    int gen_clip = 0;
    gen->add_option("--checkpoint", gen_ckpt, "checkpoint file")->required();
    gen->add_option("--data", gen_data, "clip dataset directory")->required();
    gen->add_option("--clip", gen_clip, "clip index");
    gen->add_option("--out", gen_out, "output directory")->required();

    // evaluate
    auto* ev = app.add_subcommand("evaluate", "score a checkpoint on a dataset");
    std::string ev_ckpt, ev_data, ev_split = "val", ev_csv;
    ev->add_option("--checkpoint", ev_ckpt, "checkpoint file")->required();
    ev->add_option("--data", ev_data, "clip dataset directory")->required();
    ev->add_option("--split", ev_split, "train|val|all")
        ->check(CLI::IsMember({"train", "val", "all"}));
    ev->add_option("--csv", ev_csv, "also write per-clip CSV here");

    // ablate
    auto* ab = app.add_subcommand("ablate", "train and score the standard variants");
    std::string ab_config, ab_out, ab_table = "all";
    int ab_iterations = -1;
    ab->add_option("--config", ab_config, "JSON config file")->required();
    ab->add_option("--out", ab_out, "output directory")->required();
    ab->add_option("--iterations", ab_iterations, "override iterations per variant");
    ab->add_option("--table", ab_table, "which variant group to run")
        ->check(CLI::IsMember({"2", "3", "4", "all"}));

    try {
        app.parse(argc, argv);
        if (mk->parsed()) {
            cmd_make_toy_data(mk_out, mk_seed, mk_clips, mk_frames, mk_res);
        } else if (tr->parsed()) {
            cpnet::TrainConfig cfg = cpnet::load_train_config(tr_config);
            if (!tr_data.empty()) cfg.data_dir = tr_data;
            if (!tr_out.empty()) cfg.out_dir = tr_out;
            if (tr_iterations >= 0) cfg.iterations = tr_iterations;
            if (tr_seed >= 0) cfg.seed = std::uint64_t(tr_seed);
            cfg.validate();
            cmd_train(cfg, tr_resume);
        } else if (gen->parsed()) {
            cmd_generate(gen_ckpt, gen_data, gen_clip, gen_out);
        } else if (ev->parsed()) {
            cmd_evaluate(ev_ckpt, ev_data, ev_split, ev_csv);
        } else if (ab->parsed()) {
            cpnet::TrainConfig cfg = cpnet::load_train_config(ab_config);
            if (ab_iterations >= 0) cfg.iterations = ab_iterations;
            cfg.validate();
            cmd_ablate(cfg, ab_out, ab_table);
        }
    } catch (const CLI::ParseError& e) {
        const int rc = app.exit(e);
        return rc == 0 ? 0 : 2;
    } catch (const cpnet::ConfigError& e) {
        std::cerr << "config error: " << e.what() << "\n";
        return 2;
    } catch (const std::exception& e) {
        std::cerr << "error: " << e.what() << "\n";
        return 3;
    }
    return 0;
}
