// Copyright (c) 2026 The CPNet Authors
// SPDX-License-Identifier: Apache-2.0

#include <doctest.h>

#include "cpnet/discriminators.hpp"
#include "cpnet/errors.hpp"
#include "test_support.hpp"

using namespace cpnet;

TEST_CASE("patch discriminator score grid shape") {
    Rng rng(20);
    PatchDiscriminator<float> d(10, 32, 3, rng);
    CHECK(d.in_channels() == 10);

    Tensor<float> x({2, 10, 64, 64});
    testsup::fill_uniform(x, rng, 0.0, 1.0);
    Tape<float> tape;
    Var<float> s = d.forward(tape, tape.leaf(x, false));
    CHECK(tape.value_of(s).shape() == std::vector<int>({2, 1, 8, 8}));

    Tensor<float> wrong({2, 7, 64, 64});
    CHECK_THROWS_AS(d.forward(tape, tape.leaf(wrong, false)), ShapeError);

    // Two stages on 32x32 input halve twice.
    PatchDiscriminator<float> d2(3, 16, 2, rng);
    Tensor<float> y({1, 3, 32, 32});
    Tape<float> t2;
    CHECK(t2.value_of(d2.forward(t2, t2.leaf(y, false))).shape() ==
          std::vector<int>({1, 1, 8, 8}));
}

TEST_CASE("frame critic input stacks window then candidate") {
    Tape<float> tape;
    Tensor<float> win({2, 7, 4, 4}, 0.25f);
    Tensor<float> cand({2, 3, 4, 4}, 0.75f);
    Var<float> joined = frame_disc_input(tape, tape.leaf(win, false), tape.leaf(cand, false));
    const Tensor<float>& v = tape.value_of(joined);
    REQUIRE(v.shape() == std::vector<int>({2, 10, 4, 4}));
    CHECK(v.at(0, 0, 0, 0) == 0.25f);
    CHECK(v.at(0, 6, 3, 3) == 0.25f);
    CHECK(v.at(0, 7, 0, 0) == 0.75f);
    CHECK(v.at(1, 9, 2, 2) == 0.75f);

    Tensor<float> bad({1, 3, 4, 4}, 0.0f);
    CHECK_THROWS_AS(frame_disc_input(tape, tape.leaf(win, false), tape.leaf(bad, false)),
                    ShapeError);
}

TEST_CASE("sequence critic input interleaves frames in time order") {
    Tape<float> tape;
    std::vector<Var<float>> wins, cands;
    for (int t = 0; t < 3; ++t) {
        wins.push_back(tape.leaf(Tensor<float>({1, 7, 4, 4}, float(t)), false));
        cands.push_back(tape.leaf(Tensor<float>({1, 3, 4, 4}, float(10 + t)), false));
    }
    Var<float> joined = sequence_disc_input<float>(tape, wins, cands);
    const Tensor<float>& v = tape.value_of(joined);
    REQUIRE(v.shape() == std::vector<int>({1, 30, 4, 4}));
    // Layout is (win_0 | cand_0 | win_1 | cand_1 | win_2 | cand_2).
    CHECK(v.at(0, 0, 0, 0) == 0.0f);
    CHECK(v.at(0, 7, 0, 0) == 10.0f);
    CHECK(v.at(0, 10, 0, 0) == 1.0f);
    CHECK(v.at(0, 17, 0, 0) == 11.0f);
    CHECK(v.at(0, 20, 0, 0) == 2.0f);
    CHECK(v.at(0, 29, 3, 3) == 12.0f);

    std::vector<Var<float>> fewer(cands.begin(), cands.end() - 1);
    CHECK_THROWS_AS(sequence_disc_input<float>(tape, wins, fewer), ShapeError);
}

TEST_CASE("frozen discriminator forward leaves no parameter gradients") {
    Rng rng(21);
    PatchDiscriminator<double> d(4, 8, 2, rng);
    Tensor<double> x({1, 4, 16, 16});
    testsup::fill_uniform(x, rng, 0.0, 1.0);

    Tape<double> tape;
    Var<double> s = d.forward(tape, tape.leaf(x, false), /*frozen=*/true);
    tape.backward(sum_all(s));
    for (const auto& [name, p] : d.params().entries())
        CHECK(d.params().grad_on(tape, name).empty());
}

TEST_CASE("discriminator gradients match finite differences") {
    Rng rng(22);
    PatchDiscriminator<double> d(3, 8, 2, rng);
    Tensor<double> x({1, 3, 8, 8});
    testsup::fill_uniform(x, rng, 0.1, 0.9);

    SUBCASE("input gradient") {
        std::vector<Tensor<double>> vals = {x};
        auto res = testsup::check_gradients(
            [&](Tape<double>& tape, std::vector<Var<double>>& v) {
                (void)tape;
                return mean_all(square(d.forward(tape, v[0])));
            },
            vals, 1e-5, /*max_per_tensor=*/24);
        INFO(res.worst);
        CHECK(res.max_rel < 1e-4);
    }
    SUBCASE("parameter gradients") {
        std::vector<std::string> names;
        for (const auto& [name, p] : d.params().entries()) names.push_back(name);
        auto res = testsup::check_param_gradients(
            d.params(), names,
            [&](Tape<double>& tape) {
                return mean_all(square(d.forward(tape, tape.leaf(x, false))));
            },
            1e-5, /*max_per_tensor=*/5);
        INFO(res.worst);
        CHECK(res.max_rel < 1e-4);
    }
}
