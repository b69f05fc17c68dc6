// Copyright (c) 2026 The CPNet Authors
// SPDX-License-Identifier: Apache-2.0
//
// Release gate. Runs the eight shipping criteria end to end and prints one
// [PASS]/[FAIL] line per gate; the exit status is the number of failures.
// Gates 6-8 drive the installed CLI, so the cpnet binary path must be given
// as argv[1]. Everything runs against scratch directories under the system
// temp root and cleans up after itself.

#include <array>
#include <chrono>
#include <cmath>
#include <cstdio>
#include <cstdlib>
#include <filesystem>
#include <fstream>
#include <sstream>
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
#include "cpnet/training.hpp"

#include "test_support.hpp"

namespace fs = std::filesystem;

namespace {

struct GateResult {
    bool ok = false;
    std::string note;
};

struct Ctx {
    std::string bin;         // cpnet CLI binary
    testsup::TempDir* tmp;   // scratch root shared by the CLI gates
};

double seconds_since(std::chrono::steady_clock::time_point t0) {
    return std::chrono::duration<double>(std::chrono::steady_clock::now() - t0).count();
}

std::string fmt(double v) {
    char buf[48];
    std::snprintf(buf, sizeof buf, "%.6g", v);
    return buf;
}

// ---- CLI plumbing ----------------------------------------------------------

int run_cmd(const std::string& cmd, const std::string& log_path) {
    return std::system((cmd + " > " + log_path + " 2>&1").c_str());
}

std::string read_file(const std::string& path) {
    std::ifstream in(path, std::ios::binary);
    std::ostringstream os;
    os << in.rdbuf();
    return os.str();
}

std::string log_tail(const std::string& log_path, std::size_t n = 300) {
    std::string s = read_file(log_path);
    while (!s.empty() && s.back() == '\n') s.pop_back();
    for (char& c : s)
        if (c == '\n') c = ' ';
    return s.size() <= n ? s : "..." + s.substr(s.size() - n);
}

bool parse_mean_row(const std::string& csv, double& psnr_out, double& ssim_out) {
    std::istringstream in(csv);
    std::string line;
    while (std::getline(in, line)) {
        if (line.rfind("mean,,", 0) != 0) continue;
        const std::string rest = line.substr(6);
        const auto comma = rest.find(',');
        if (comma == std::string::npos) return false;
        psnr_out = std::stod(rest.substr(0, comma));
        ssim_out = std::stod(rest.substr(comma + 1));
        return true;
    }
    return false;
}

struct TableRow {
    std::string label;
    double psnr = 0.0;
    double ssim = 0.0;
    bool ok = false;
};

std::vector<TableRow> parse_table_csv(const std::string& path) {
    std::vector<TableRow> rows;
    std::istringstream in(read_file(path));
    std::string line;
    std::getline(in, line); // header
    while (std::getline(in, line)) {
        if (line.empty()) continue;
        std::vector<std::string> cells;
        std::size_t pos = 0;
        while (cells.size() < 3) {
            const auto comma = line.find(',', pos);
            if (comma == std::string::npos) break;
            cells.push_back(line.substr(pos, comma - pos));
            pos = comma + 1;
        }
        if (cells.size() < 3) continue;
        cells.push_back(line.substr(pos));
        TableRow r;
        r.label = cells[0];
        r.ok = cells[3] == "ok";
        if (r.ok) {
            r.psnr = std::stod(cells[1]);
            r.ssim = std::stod(cells[2]);
        }
        rows.push_back(std::move(r));
    }
    return rows;
}

cpnet::TrainConfig tiny_config(const std::string& data_dir, const std::string& out_dir) {
    cpnet::TrainConfig cfg;
    cfg.data_dir = data_dir;
    cfg.out_dir = out_dir;
    cfg.learning_rate = 2e-4;
    cfg.iterations = 8;
    cfg.batch_size = 2;
    cfg.crop_size = 32;
    cfg.sequence_length = 2;
    cfg.base_width = 8;
    cfg.predictor_base_width = 4;
    cfg.embed_dim = 16;
    cfg.checkpoint_interval = 0;
    cfg.log_interval = 4;
    cfg.seed = 5;
    return cfg;
}

void write_config(const cpnet::TrainConfig& cfg, const std::string& path) {
    std::ofstream out(path);
    out << cpnet::to_json(cfg).dump(2) << '\n';
}

// ---- gate 1: probability-map mass conservation -----------------------------

GateResult gate_mass_conservation(const Ctx&) {
    const auto t0 = std::chrono::steady_clock::now();
    const int size = 64, margin = 12, count = 100;
    cpnet::Rng rng(20260819);
    cpnet::LandmarkSet lms;
    for (int i = 0; i < count; ++i) {
        const int row = margin + int(rng.below(std::uint32_t(size - 2 * margin)));
        const int col = margin + int(rng.below(std::uint32_t(size - 2 * margin)));
        lms.points.push_back({double(col) / (size - 1), double(row) / (size - 1)});
    }
    const cpnet::GaussianKernel kernel = cpnet::build_gaussian_kernel(25, 5.0);
    const cpnet::Tensor<double> map = cpnet::make_probability_map<double>(lms, size, size, kernel);
    double sum = 0.0;
    for (std::int64_t i = 0; i < map.numel(); ++i) sum += map[i];
    const double elapsed = seconds_since(t0);
    const double err = std::abs(sum - double(count));
    GateResult r;
    r.ok = err <= 1e-6 && elapsed < 5.0;
    r.note = "100 interior landmarks, |sum-100| = " + fmt(err) + ", " + fmt(elapsed) + " s";
    return r;
}

// ---- gate 2: fusion / recalibration identity ablations ----------------------

GateResult gate_identity_ablations(const Ctx&) {
    using cpnet::Tensor;
    using cpnet::Var;
    cpnet::Rng rng(4242);
    Tensor<float> e1({2, 4, 32, 32}), e2({2, 6, 16, 16}), e3({2, 8, 8, 8});
    Tensor<float> x({2, 8, 16, 16});
    testsup::fill_uniform(e1, rng, -1.0, 1.0);
    testsup::fill_uniform(e2, rng, -1.0, 1.0);
    testsup::fill_uniform(e3, rng, -1.0, 1.0);
    testsup::fill_uniform(x, rng, -2.0, 2.0);

    cpnet::Tape<float> tape;
    const Var<float> xv = tape.leaf(x, false);
    const cpnet::FeatureMapSet<float> feats{tape.leaf(e1, false), tape.leaf(e2, false),
                                            tape.leaf(e3, false)};
    std::vector<std::pair<Var<float>, Var<float>>> proj;
    for (int ci : {4, 6, 8})
        proj.emplace_back(tape.leaf(Tensor<float>::zeros({8, ci, 1, 1}), false),
                          tape.leaf(Tensor<float>::zeros({8}), false));
    const Var<float> fused =
        cpnet::dense_fuse(tape, xv, feats, std::span<const std::pair<Var<float>, Var<float>>>(proj));
    const double fuse_err = testsup::max_abs_diff(tape.value_of(fused), x);

    const Var<float> gates = tape.leaf(Tensor<float>({2, 8}, 1.0f), false);
    const Var<float> scaled = cpnet::recalibrate(xv, gates);
    const double gate_err = testsup::max_abs_diff(tape.value_of(scaled), x);

    GateResult r;
    r.ok = fuse_err <= 1e-6 && gate_err <= 1e-6;
    r.note = "zero-projection fuse err " + fmt(fuse_err) + ", unit-gate err " + fmt(gate_err);
    return r;
}

// ---- gate 3: objective gradient suite ---------------------------------------

GateResult gate_gradient_suite(const Ctx&) {
    using cpnet::Tape;
    using cpnet::Tensor;
    using cpnet::Var;
    const auto t0 = std::chrono::steady_clock::now();

    cpnet::Rng rng(314159);
    auto filled = [&](std::vector<int> shape, double lo, double hi) {
        Tensor<double> t(std::move(shape));
        testsup::fill_uniform(t, rng, lo, hi);
        return t;
    };

    cpnet::Rng net_rng(7101);
    const cpnet::PatchDiscriminator<double> critic(3, 8, 2, net_rng);
    const cpnet::PatchDiscriminator<double> seq_critic(6, 8, 2, net_rng);
    const cpnet::StubPerceptualExtractor<double> stub(991, 2);
    const cpnet::MapPredictor<double> predictor(8, 4, net_rng);

    std::vector<std::pair<std::string, double>> terms;
    auto record = [&](const std::string& name, const testsup::GradCheckResult& res) {
        terms.emplace_back(name, res.max_rel);
    };

    { // map-predictor objective, all three inputs (values kept apart to dodge norm kinks)
        std::vector<Tensor<double>> v{filled({2, 1, 8, 8}, 0.5, 1.5), filled({2, 1, 8, 8}, -0.5, 0.4),
                                      filled({2, 1, 8, 8}, 2.0, 3.0)};
        record("predictor", testsup::check_gradients(
                                [](Tape<double>&, std::vector<Var<double>>& a) {
                                    return cpnet::predictor_loss(a[0], a[1], a[2], 0.25);
                                },
                                v, 1e-5, 16));
    }
    { // frame adversarial loss, critic side, through the critic to both frames
        std::vector<Tensor<double>> v{filled({1, 3, 8, 8}, 0.1, 0.9), filled({1, 3, 8, 8}, 0.1, 0.9)};
        record("adversarial D", testsup::check_gradients(
                                    [&](Tape<double>& t, std::vector<Var<double>>& a) {
                                        return cpnet::lsgan_discriminator_loss(
                                            t, critic.forward(t, a[0]), critic.forward(t, a[1]));
                                    },
                                    v, 1e-5, 16));
    }
    { // frame adversarial loss, generator side
        std::vector<Tensor<double>> v{filled({1, 3, 8, 8}, 0.1, 0.9)};
        record("adversarial G", testsup::check_gradients(
                                    [&](Tape<double>& t, std::vector<Var<double>>& a) {
                                        return cpnet::lsgan_generator_loss(t, critic.forward(t, a[0]));
                                    },
                                    v, 1e-5, 16));
    }
    { // feature reconstruction, both frames
        std::vector<Tensor<double>> v{filled({1, 3, 8, 8}, 0.1, 0.9), filled({1, 3, 8, 8}, 0.1, 0.9)};
        record("reconstruction", testsup::check_gradients(
                                     [&](Tape<double>& t, std::vector<Var<double>>& a) {
                                         return cpnet::perceptual_loss(stub, t, a[0], a[1]);
                                     },
                                     v, 1e-6, 16));
    }
    { // temporal adversarial loss over a two-frame stack, both sides
        const Tensor<double> r0 = filled({1, 3, 8, 8}, 0.1, 0.9);
        const Tensor<double> r1 = filled({1, 3, 8, 8}, 0.1, 0.9);
        std::vector<Tensor<double>> v{filled({1, 3, 8, 8}, 0.1, 0.9), filled({1, 3, 8, 8}, 0.1, 0.9)};
        record("temporal D", testsup::check_gradients(
                                 [&](Tape<double>& t, std::vector<Var<double>>& a) {
                                     const std::array<Var<double>, 2> real{t.leaf(r0, false),
                                                                           t.leaf(r1, false)};
                                     const std::array<Var<double>, 2> fake{a[0], a[1]};
                                     return cpnet::lsgan_discriminator_loss(
                                         t, seq_critic.forward(t, cpnet::concat_channels<double>(real)),
                                         seq_critic.forward(t, cpnet::concat_channels<double>(fake)));
                                 },
                                 v, 1e-5, 16));
        std::vector<Tensor<double>> vg{v[0], v[1]};
        record("temporal G", testsup::check_gradients(
                                 [&](Tape<double>& t, std::vector<Var<double>>& a) {
                                     const std::array<Var<double>, 2> fake{a[0], a[1]};
                                     return cpnet::lsgan_generator_loss(
                                         t, seq_critic.forward(t, cpnet::concat_channels<double>(fake)));
                                 },
                                 vg, 1e-5, 16));
    }
    // frozen target maps for the consistency term
    const Tensor<double> tgt2 = filled({2, 3, 8, 8}, 0.1, 0.9);
    Tensor<double> tgt_maps2;
    {
        Tape<double> t;
        tgt_maps2 = t.value_of(predictor.forward(t, t.leaf(tgt2, false), true));
    }
    { // map-consistency term, gradient w.r.t. the generated frames
        std::vector<Tensor<double>> v{filled({2, 3, 8, 8}, 0.1, 0.9)};
        record("consistency", testsup::check_gradients(
                                  [&](Tape<double>& t, std::vector<Var<double>>& a) {
                                      return cpnet::probability_consistency_loss(predictor, t, a[0],
                                                                                 tgt_maps2);
                                  },
                                  v, 1e-5, 16));
    }
    { // full composite objective through every term from one generated frame
        const Tensor<double> tgt = filled({1, 3, 8, 8}, 0.1, 0.9);
        const Tensor<double> prev = filled({1, 3, 8, 8}, 0.1, 0.9);
        Tensor<double> tgt_map;
        {
            Tape<double> t;
            tgt_map = t.value_of(predictor.forward(t, t.leaf(tgt, false), true));
        }
        const cpnet::LossWeights weights{1.0, 5.0, 1.0, 0.1, 0.1};
        std::vector<Tensor<double>> v{filled({1, 3, 8, 8}, 0.1, 0.9)};
        record("composite", testsup::check_gradients(
                                [&](Tape<double>& t, std::vector<Var<double>>& a) {
                                    const Var<double> adv =
                                        cpnet::lsgan_generator_loss(t, critic.forward(t, a[0]));
                                    const Var<double> rec =
                                        cpnet::perceptual_loss(stub, t, a[0], t.leaf(tgt, false));
                                    const std::array<Var<double>, 2> span{t.leaf(prev, false), a[0]};
                                    const Var<double> tmp = cpnet::lsgan_generator_loss(
                                        t, seq_critic.forward(t, cpnet::concat_channels<double>(span)));
                                    const Var<double> prb =
                                        cpnet::probability_consistency_loss(predictor, t, a[0], tgt_map);
                                    return cpnet::total_generator_loss(t, weights, adv, rec, tmp, prb);
                                },
                                v, 1e-5, 24));
    }

    double max_rel = 0.0;
    std::string worst_term = "-";
    for (const auto& [name, rel] : terms)
        if (rel > max_rel) {
            max_rel = rel;
            worst_term = name;
        }
    const double elapsed = seconds_since(t0);
    GateResult r;
    r.ok = max_rel <= 1e-3 && elapsed < 60.0;
    r.note = std::to_string(terms.size()) + " terms, worst rel " + fmt(max_rel) + " (" + worst_term +
             "), " + fmt(elapsed) + " s";
    return r;
}

// ---- gate 4: loss arithmetic oracle -----------------------------------------

GateResult gate_loss_arithmetic(const Ctx&) {
    using cpnet::Tensor;
    cpnet::Tape<double> tape;
    auto scores = [&](double v) { return tape.leaf(Tensor<double>({1, 1, 3, 3}, v), false); };
    const double perfect =
        tape.value_of(cpnet::lsgan_discriminator_loss(tape, scores(1.0), scores(0.0)))[0];
    const double inverted =
        tape.value_of(cpnet::lsgan_discriminator_loss(tape, scores(0.0), scores(1.0)))[0];
    const double undecided =
        tape.value_of(cpnet::lsgan_discriminator_loss(tape, scores(0.5), scores(0.5)))[0];

    const cpnet::LossWeights weights{1.0, 5.0, 1.0, 0.1, 0.1};
    const double total = cpnet::total_generator_loss(weights, 1.0, 1.0, 1.0, 1.0);
    const auto one = tape.leaf(Tensor<double>::scalar(1.0), false);
    const double total_var =
        tape.value_of(cpnet::total_generator_loss(tape, weights, one, one, one, one))[0];

    GateResult r;
    r.ok = perfect == 0.0 && inverted == 2.0 && undecided == 0.5 &&
           std::abs(total - 7.1) <= 1e-12 && std::abs(total_var - 7.1) <= 1e-12;
    r.note = "critic at (1,0)/(0,1)/(0.5,0.5) -> " + fmt(perfect) + "/" + fmt(inverted) + "/" +
             fmt(undecided) + ", unit composite " + fmt(total);
    return r;
}

// ---- gate 5: metric oracles --------------------------------------------------

GateResult gate_metric_oracles(const Ctx&) {
    using cpnet::Tensor;
    cpnet::Rng rng(5150);
    double worst_psnr = 0.0, worst_ssim = 0.0;
    for (int k = 0; k < 50; ++k) {
        const int h = 12 + int(rng.below(21));
        const int w = 12 + int(rng.below(21));
        Tensor<float> a({3, h, w}), b({3, h, w});
        testsup::fill_uniform(a, rng, 0.0, 1.0);
        for (std::int64_t i = 0; i < b.numel(); ++i)
            b[i] = float(std::clamp(double(a[i]) + rng.uniform(-0.15, 0.15), 0.0, 1.0));
        worst_psnr = std::max(worst_psnr,
                              std::abs(cpnet::psnr(a, b) - testsup::naive_psnr(a, b, 1.0)));
        worst_ssim = std::max(worst_ssim,
                              std::abs(cpnet::ssim(a, b) - testsup::naive_ssim(a, b, 1.0)));
    }
    Tensor<float> u({3, 16, 16});
    testsup::fill_uniform(u, rng, 0.0, 1.0);
    const double self_ssim = cpnet::ssim(u, u);
    const Tensor<double> zero({3, 16, 16}, 0.0);
    const Tensor<double> offset({3, 16, 16}, 0.1);
    const double twenty = cpnet::psnr(zero, offset);

    GateResult r;
    r.ok = worst_psnr <= 1e-6 && worst_ssim <= 1e-6 && std::abs(self_ssim - 1.0) <= 1e-12 &&
           std::abs(twenty - 20.0) <= 1e-9;
    r.note = "50 pairs, max |dpsnr| " + fmt(worst_psnr) + ", max |dssim| " + fmt(worst_ssim) +
             ", ssim(a,a) " + fmt(self_ssim) + ", uniform-0.1 psnr " + fmt(twenty);
    return r;
}

// ---- gate 6: single-clip overfit smoke (cli) ---------------------------------

GateResult gate_overfit_smoke(const Ctx& ctx) {
    GateResult r;
    const std::string root = ctx.tmp->sub("smoke");
    fs::create_directories(root);
    const std::string log = root + "/cli.log";

    if (run_cmd(ctx.bin + " make-toy-data --out " + root + "/data --seed 1 --clips 1 --frames 30" +
                    " --resolution 64",
                log) != 0) {
        r.note = "make-toy-data failed: " + log_tail(log);
        return r;
    }

    cpnet::TrainConfig cfg;
    cfg.data_dir = root + "/data";
    cfg.out_dir = root + "/run";
    cfg.learning_rate = 2e-4;
    cfg.iterations = 2000;
    cfg.batch_size = 4;
    cfg.crop_size = 64;
    cfg.sequence_length = 5;
    cfg.base_width = 32;
    cfg.predictor_base_width = 16;
    cfg.embed_dim = 64;
    cfg.checkpoint_interval = 0;
    cfg.log_interval = 250;
    cfg.seed = 1;
    write_config(cfg, root + "/train.json");

    const auto t0 = std::chrono::steady_clock::now();
    if (run_cmd(ctx.bin + " train --config " + root + "/train.json", log) != 0) {
        r.note = "train failed: " + log_tail(log);
        return r;
    }
    const double train_s = seconds_since(t0);

    if (run_cmd(ctx.bin + " evaluate --checkpoint " + root + "/run/checkpoint_final.bin --data " +
                    root + "/data --split train --csv " + root + "/eval.csv",
                log) != 0) {
        r.note = "evaluate failed: " + log_tail(log);
        return r;
    }
    double mean_psnr = 0.0, mean_ssim = 0.0;
    if (!parse_mean_row(read_file(root + "/eval.csv"), mean_psnr, mean_ssim)) {
        r.note = "missing mean row in eval.csv";
        return r;
    }
    r.ok = mean_psnr >= 28.0 && mean_ssim >= 0.90 && train_s <= 900.0;
    r.note = "2000 iterations in " + fmt(train_s) + " s, train psnr " + fmt(mean_psnr) +
             " dB, ssim " + fmt(mean_ssim);
    return r;
}

// ---- gate 7: ablation table harness (cli) ------------------------------------

GateResult gate_ablation_harness(const Ctx& ctx) {
    GateResult r;
    const std::string root = ctx.tmp->sub("ablate");
    fs::create_directories(root);
    const std::string log = root + "/cli.log";

    if (run_cmd(ctx.bin + " make-toy-data --out " + root + "/data --seed 3 --clips 2 --frames 12" +
                    " --resolution 32",
                log) != 0) {
        r.note = "make-toy-data failed: " + log_tail(log);
        return r;
    }
    write_config(tiny_config(root + "/data", root + "/unused"), root + "/ablate.json");

    struct TableSpec {
        const char* flag;
        const char* csv;
        std::vector<std::string> expect; // substring per row, in order
    };
    const std::vector<TableSpec> tables{
        {"4", "table4.csv", {"1.00", "0.50", "0.10", "0.05"}},
        {"2", "table2.csv", {"none", "I", "I+II", "I+II+III"}},
        {"3", "table3.csv", {"L_adv", "+L_r", "+L_t", "+L_p"}},
    };
    std::string summary;
    for (const TableSpec& spec : tables) {
        const std::string out = root + "/t" + spec.flag;
        if (run_cmd(ctx.bin + " ablate --config " + root + "/ablate.json --out " + out +
                        " --table " + spec.flag,
                    log) != 0) {
            r.note = std::string("ablate --table ") + spec.flag + " failed: " + log_tail(log);
            return r;
        }
        const auto rows = parse_table_csv(out + "/" + spec.csv);
        if (rows.size() != spec.expect.size()) {
            r.note = std::string(spec.csv) + ": expected 4 rows, got " + std::to_string(rows.size());
            return r;
        }
        for (std::size_t i = 0; i < rows.size(); ++i) {
            const TableRow& row = rows[i];
            if (!row.ok || !std::isfinite(row.psnr) || !std::isfinite(row.ssim) ||
                row.label.find(spec.expect[i]) == std::string::npos) {
                r.note = std::string(spec.csv) + " row '" + row.label + "': not finite/ok";
                return r;
            }
        }
        // the filter must not leak sibling tables into the run directory
        for (const TableSpec& other : tables)
            if (other.flag != spec.flag && fs::exists(out + "/" + other.csv)) {
                r.note = std::string("--table ") + spec.flag + " also wrote " + other.csv;
                return r;
            }
        summary += std::string(summary.empty() ? "" : "; ") + "t" + spec.flag + " psnr";
        for (const TableRow& row : rows) summary += " " + fmt(row.psnr);
    }
    r.ok = true;
    r.note = "12 rows finite (" + summary + ")";
    return r;
}

// ---- gate 8: determinism and checkpointing (cli + in-process) ----------------

GateResult gate_determinism(const Ctx& ctx) {
    GateResult r;
    const std::string root = ctx.tmp->sub("determinism");
    fs::create_directories(root);
    const std::string log = root + "/cli.log";

    if (run_cmd(ctx.bin + " make-toy-data --out " + root + "/data --seed 11 --clips 2 --frames 12" +
                    " --resolution 32",
                log) != 0) {
        r.note = "make-toy-data failed: " + log_tail(log);
        return r;
    }
    cpnet::TrainConfig base = tiny_config(root + "/data", root + "/a");
    base.seed = 9;
    base.iterations = 4;
    base.log_interval = 1;

    auto train_to = [&](const std::string& out_dir, int iterations, int interval,
                        const std::string& resume) {
        cpnet::TrainConfig cfg = base;
        cfg.out_dir = out_dir;
        cfg.iterations = iterations;
        cfg.checkpoint_interval = interval;
        const std::string path = out_dir + ".json";
        write_config(cfg, path);
        std::string cmd = ctx.bin + " train --config " + path;
        if (!resume.empty()) cmd += " --resume " + resume;
        return run_cmd(cmd, log);
    };

    if (train_to(root + "/a", 4, 0, "") != 0 || train_to(root + "/b", 4, 0, "") != 0) {
        r.note = "seeded runs failed: " + log_tail(log);
        return r;
    }
    const std::string final_a = read_file(root + "/a/checkpoint_final.bin");
    const bool repeat_equal = !final_a.empty() && final_a == read_file(root + "/b/checkpoint_final.bin");

    if (train_to(root + "/half", 2, 0, "") != 0 ||
        train_to(root + "/resumed", 4, 0, root + "/half/checkpoint_final.bin") != 0) {
        r.note = "resume runs failed: " + log_tail(log);
        return r;
    }
    const bool resume_equal = final_a == read_file(root + "/resumed/checkpoint_final.bin");

    // save -> load -> save must reproduce the archive byte for byte
    cpnet::TrainConfig net_cfg = base;
    net_cfg.checkpoint_interval = 0;
    const cpnet::Networks nets(net_cfg);
    const std::map<std::string, std::int64_t> steps{
        {"generator", 3}, {"condenser", 3}, {"disc_frame", 2}, {"disc_seq", 2}, {"predictor", 1}};
    const std::string p1 = root + "/trip1.bin", p2 = root + "/trip2.bin";
    cpnet::save_checkpoint(p1, nets, steps, 7, net_cfg, "rng-blob");
    cpnet::TrainConfig other_cfg = net_cfg;
    other_cfg.seed = 77;
    cpnet::Networks reloaded(other_cfg);
    const cpnet::CheckpointState state = cpnet::load_checkpoint(p1, reloaded);
    cpnet::save_checkpoint(p2, reloaded, state.adam_steps, state.iteration,
                           cpnet::train_config_from_json(state.config), state.rng_state);
    const bool trip_equal = read_file(p1) == read_file(p2);

    r.ok = repeat_equal && resume_equal && trip_equal;
    r.note = std::string("same-seed finals ") + (repeat_equal ? "equal" : "DIFFER") +
             ", resumed final " + (resume_equal ? "equal" : "DIFFERS") + ", save/load/save " +
             (trip_equal ? "byte-identical" : "DIFFERS");
    return r;
}

} // namespace

int main(int argc, char** argv) {
    if (argc < 2) {
        std::fprintf(stderr, "usage: %s <cpnet-binary>\n", argv[0]);
        return 2;
    }
    testsup::TempDir tmp("acceptance");
    const Ctx ctx{argv[1], &tmp};

    struct Gate {
        const char* name;
        GateResult (*run)(const Ctx&);
    };
    const std::vector<Gate> gates{
        {"probability-map mass conservation", gate_mass_conservation},
        {"fusion and recalibration identity ablations", gate_identity_ablations},
        {"objective gradient suite", gate_gradient_suite},
        {"loss arithmetic oracle", gate_loss_arithmetic},
        {"metric oracles", gate_metric_oracles},
        {"single-clip overfit smoke", gate_overfit_smoke},
        {"ablation table harness", gate_ablation_harness},
        {"determinism and checkpointing", gate_determinism},
    };

    int failures = 0;
    for (const Gate& gate : gates) {
        GateResult result;
        try {
            result = gate.run(ctx);
        } catch (const std::exception& e) {
            result.ok = false;
            result.note = std::string("exception: ") + e.what();
        }
        std::printf("[%s] %s (%s)\n", result.ok ? "PASS" : "FAIL", gate.name, result.note.c_str());
        std::fflush(stdout);
        if (!result.ok) ++failures;
    }
    std::printf("%zu/%zu gates passed\n", gates.size() - std::size_t(failures), gates.size());
    return failures;
}
