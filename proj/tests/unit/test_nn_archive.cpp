// Copyright (c) 2026 The CPNet Authors
// SPDX-License-Identifier: Apache-2.0

#include <doctest.h>

#include <cmath>
#include <fstream>

#include "cpnet/archive.hpp"
#include "cpnet/errors.hpp"
#include "cpnet/nn.hpp"
#include "cpnet/ops.hpp"
#include "cpnet/rng.hpp"
#include "test_support.hpp"

using namespace cpnet;

TEST_CASE("param store add/at/duplicate/contains") {
    ParamStore<double> store;
    store.add("b", Tensor<double>::full({2}, 1.0));
    store.add("a", Tensor<double>::full({3}, 2.0), /*trainable=*/false);
    CHECK(store.contains("a"));
    CHECK_FALSE(store.contains("c"));
    CHECK(store.parameter_count() == 5);
    CHECK(store.at("a").trainable == false);
    CHECK(store.at("b").m.same_shape(store.at("b").value));
    CHECK_THROWS_AS(store.add("a", Tensor<double>::full({1}, 0.0)), ConfigError);
    CHECK_THROWS_AS(store.at("missing"), ConfigError);

    // entries() iterates in name order
    std::vector<std::string> names;
    for (const auto& [k, p] : store.entries()) names.push_back(k);
    CHECK(names == std::vector<std::string>({"a", "b"}));
}

TEST_CASE("use() memoizes one node per parameter per tape") {
    ParamStore<double> store;
    store.add("w", Tensor<double>::full({2, 2}, 0.5));
    Tape<double> tape;
    Var<double> u1 = store.use(tape, "w");
    Var<double> u2 = store.use(tape, "w");
    CHECK(u1.id == u2.id);

    // Both uses accumulate into one gradient buffer.
    Var<double> loss = add(sum_all(u1), sum_all(square(u2)));
    tape.backward(loss);
    const Tensor<double>& g = store.grad_on(tape, "w");
    REQUIRE_FALSE(g.empty());
    CHECK(g[0] == doctest::Approx(1.0 + 2.0 * 0.5).epsilon(1e-12));
}

TEST_CASE("use_frozen carries values but never gradients") {
    ParamStore<double> store;
    store.add("w", Tensor<double>::full({2}, 3.0));
    Tape<double> tape;
    Var<double> live = store.use(tape, "w");
    Var<double> frozen = store.use_frozen(tape, "w");
    CHECK(live.id != frozen.id);
    CHECK(tape.value_of(frozen)[0] == 3.0);

    Var<double> loss = sum_all(square(frozen));
    tape.backward(loss);
    CHECK_FALSE(tape.has_grad(frozen));
    CHECK(store.grad_on(tape, "w").empty());

    // Freezing snapshots the value at binding time.
    store.at("w").value[0] = -7.0;
    Tape<double> tape2;
    CHECK(tape2.value_of(store.use_frozen(tape2, "w"))[0] == -7.0);
    CHECK(tape.value_of(frozen)[0] == 3.0);
}

TEST_CASE("adam single step matches the hand formula") {
    ParamStore<double> store;
    store.add("w", Tensor<double>::scalar(1.0));
    store.add("frozen", Tensor<double>::scalar(2.0), /*trainable=*/false);

    AdamConfig<double> cfg;
    cfg.lr = 0.1;
    cfg.beta1 = 0.9;
    cfg.beta2 = 0.999;
    cfg.eps = 1e-8;
    Adam<double> opt(cfg);

    Tape<double> tape;
    Var<double> w = store.use(tape, "w");
    Var<double> f = store.use(tape, "frozen");
    Var<double> loss = add(sum_all(square(w)), sum_all(f)); // dL/dw = 2w = 2
    tape.backward(loss);
    opt.step(store, tape);
    CHECK(opt.steps() == 1);

    const double g = 2.0;
    const double m = (1 - cfg.beta1) * g;
    const double v = (1 - cfg.beta2) * g * g;
    const double mhat = m / (1 - cfg.beta1);
    const double vhat = v / (1 - cfg.beta2);
    const double expect = 1.0 - cfg.lr * mhat / (std::sqrt(vhat) + cfg.eps);
    CHECK(store.at("w").value[0] == doctest::Approx(expect).epsilon(1e-12));
    CHECK(store.at("w").m[0] == doctest::Approx(m).epsilon(1e-12));
    CHECK(store.at("w").v[0] == doctest::Approx(v).epsilon(1e-12));
    // Non-trainable parameters never move.
    CHECK(store.at("frozen").value[0] == 2.0);

    // A parameter absent from the tape is untouched on later steps.
    Tape<double> tape2;
    Var<double> w2 = store.use(tape2, "w");
    tape2.backward(sum_all(square(w2)));
    const double before_frozen = store.at("frozen").value[0];
    opt.step(store, tape2);
    CHECK(opt.steps() == 2);
    CHECK(store.at("frozen").value[0] == before_frozen);
}

TEST_CASE("initializers are seeded and scaled") {
    Rng a(5), b(5);
    Tensor<float> w1 = he_normal<float>(a, {16, 8, 3, 3});
    Tensor<float> w2 = he_normal<float>(b, {16, 8, 3, 3});
    CHECK(testsup::max_abs_diff(w1, w2) == 0.0);

    // Sample std should be near sqrt(2 / fan_in), fan_in = 8*3*3.
    double sq = 0;
    for (std::int64_t i = 0; i < w1.numel(); ++i) sq += double(w1[i]) * w1[i];
    const double sd = std::sqrt(sq / double(w1.numel()));
    CHECK(sd == doctest::Approx(std::sqrt(2.0 / 72.0)).epsilon(0.15));

    Rng c(6);
    Tensor<double> n = normal_init<double>(c, {1000}, 0.02);
    double nsq = 0;
    for (std::int64_t i = 0; i < n.numel(); ++i) nsq += n[i] * n[i];
    CHECK(std::sqrt(nsq / 1000.0) == doctest::Approx(0.02).epsilon(0.15));
}

TEST_CASE("archive round-trips tensors and metadata") {
    testsup::TempDir dir("archive");
    const std::string path = dir.sub("weights.bin");

    Rng rng(8);
    Tensor<float> tf({2, 3, 4, 5});
    testsup::fill_uniform(tf, rng, -2.0, 2.0);
    Tensor<double> td({7});
    testsup::fill_uniform(td, rng, -1.0, 1.0);

    ArchiveWriter w;
    w.add("conv/w", tf);
    w.add("bias", td);
    nlohmann::json meta;
    meta["kind"] = "test_archive";
    meta["iteration"] = 12;
    w.write(path, meta);

    ArchiveReader r(path);
    CHECK(r.meta().at("kind") == "test_archive");
    CHECK(r.meta().at("iteration") == 12);
    CHECK(r.contains("conv/w"));
    CHECK(r.contains("bias"));
    CHECK_FALSE(r.contains("nope"));
    CHECK(r.names() == std::vector<std::string>({"bias", "conv/w"}));

    const Tensor<float>& tf2 = r.get<float>("conv/w");
    REQUIRE(tf2.same_shape(tf));
    CHECK(testsup::max_abs_diff(tf2, tf) == 0.0);
    const Tensor<double>& td2 = r.get<double>("bias");
    CHECK(testsup::max_abs_diff(td2, td) == 0.0);

    CHECK_THROWS_AS(r.get<float>("missing"), IoError);
    CHECK_THROWS_AS(r.get<double>("conv/w"), IoError); // dtype mismatch
}

TEST_CASE("archive writes are byte-identical for identical content") {
    testsup::TempDir dir("archive_det");
    Rng rng(9);
    Tensor<float> t({3, 3});
    testsup::fill_uniform(t, rng, -1.0, 1.0);

    auto write_one = [&](const std::string& path) {
        ArchiveWriter w;
        w.add("zz", t);
        w.add("aa", t);
        nlohmann::json meta;
        meta["b"] = 1;
        meta["a"] = 2;
        w.write(path, meta);
    };
    write_one(dir.sub("one.bin"));
    write_one(dir.sub("two.bin"));

    std::ifstream f1(dir.sub("one.bin"), std::ios::binary);
    std::ifstream f2(dir.sub("two.bin"), std::ios::binary);
    std::string s1((std::istreambuf_iterator<char>(f1)), std::istreambuf_iterator<char>());
    std::string s2((std::istreambuf_iterator<char>(f2)), std::istreambuf_iterator<char>());
    REQUIRE_FALSE(s1.empty());
    CHECK(s1 == s2);
}

TEST_CASE("archive reader rejects damaged files") {
    testsup::TempDir dir("archive_bad");

    SUBCASE("missing file") {
        CHECK_THROWS_AS(ArchiveReader(dir.sub("absent.bin")), IoError);
    }
    SUBCASE("wrong magic") {
        std::ofstream out(dir.sub("junk.bin"), std::ios::binary);
        out << "NOTANARCHIVE____________________";
        out.close();
        CHECK_THROWS_AS(ArchiveReader(dir.sub("junk.bin")), IoError);
    }
    SUBCASE("truncated payload") {
        const std::string path = dir.sub("trunc.bin");
        {
            ArchiveWriter w;
            Tensor<float> t({64});
            w.add("x", t);
            w.write(path, nlohmann::json::object());
        }
        std::ifstream in(path, std::ios::binary);
        std::string bytes((std::istreambuf_iterator<char>(in)), std::istreambuf_iterator<char>());
        in.close();
        bytes.resize(bytes.size() - 40);
        std::ofstream out(path, std::ios::binary | std::ios::trunc);
        out.write(bytes.data(), std::streamsize(bytes.size()));
        out.close();
        CHECK_THROWS_AS(ArchiveReader{path}, IoError);
    }
}
