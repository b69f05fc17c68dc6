// Copyright (c) 2026 The CPNet Authors
// SPDX-License-Identifier: Apache-2.0

#include <doctest.h>

#include <cmath>
#include <vector>

#include "cpnet/errors.hpp"
#include "cpnet/ops.hpp"
#include "cpnet/rng.hpp"
#include "cpnet/tape.hpp"
#include "cpnet/tensor.hpp"
#include "test_support.hpp"

using namespace cpnet;
using testsup::check_gradients;
using testsup::fill_uniform;
using testsup::max_abs_diff;

namespace {

template <typename T>
Tensor<T> random_tensor(Rng& rng, std::vector<int> shape, double lo = -1.0, double hi = 1.0) {
    Tensor<T> t(std::move(shape));
    fill_uniform(t, rng, lo, hi);
    return t;
}

} // namespace

TEST_CASE("conv2d matches a naive loop implementation") {
    Rng rng(11);
    struct Case {
        std::vector<int> x, w;
        int stride, pad;
    };
    const Case cases[] = {
        {{2, 3, 8, 8}, {5, 3, 3, 3}, 1, 1},
        {{1, 4, 9, 7}, {2, 4, 4, 4}, 2, 1},
        {{2, 6, 5, 5}, {3, 6, 1, 1}, 1, 0}, // pointwise fast path
        {{1, 2, 6, 6}, {4, 2, 3, 3}, 2, 0},
    };
    for (const Case& c : cases) {
        Tensor<float> x = random_tensor<float>(rng, c.x);
        Tensor<float> w = random_tensor<float>(rng, c.w);
        Tensor<float> b = random_tensor<float>(rng, {c.w[0]});
        Tape<float> tape;
        Var<float> y = conv2d(tape.leaf(x, false), tape.leaf(w, false), tape.leaf(b, false),
                              c.stride, c.pad);
        Tensor<float> ref = testsup::naive_conv2d(x, w, b, c.stride, c.pad);
        REQUIRE(tape.value_of(y).same_shape(ref));
        CHECK(max_abs_diff(tape.value_of(y), ref) < 1e-4);
    }
}

TEST_CASE("conv2d without bias and shape validation") {
    Rng rng(12);
    Tensor<float> x = random_tensor<float>(rng, {1, 3, 4, 4});
    Tensor<float> w = random_tensor<float>(rng, {2, 3, 3, 3});
    Tape<float> tape;
    Var<float> y = conv2d(tape.leaf(x, false), tape.leaf(w, false), Var<float>{}, 1, 1);
    Tensor<float> ref = testsup::naive_conv2d(x, w, Tensor<float>{}, 1, 1);
    CHECK(max_abs_diff(tape.value_of(y), ref) < 1e-4);

    Tensor<float> bad_w = random_tensor<float>(rng, {2, 4, 3, 3});
    CHECK_THROWS_AS(conv2d(tape.leaf(x, false), tape.leaf(bad_w, false), Var<float>{}, 1, 1),
                    ShapeError);
}

TEST_CASE("linear matches hand computation") {
    Tape<double> tape;
    Tensor<double> x({2, 3}, std::vector<double>{1, 2, 3, -1, 0, 2});
    Tensor<double> w({2, 3}, std::vector<double>{0.5, -1, 2, 1, 1, 1});
    Tensor<double> b({2}, std::vector<double>{0.25, -0.5});
    Var<double> y = linear(tape.leaf(x, false), tape.leaf(w, false), tape.leaf(b, false));
    const Tensor<double>& v = tape.value_of(y);
    REQUIRE(v.shape() == std::vector<int>({2, 2}));
    CHECK(v.at(0, 0) == doctest::Approx(0.5 - 2 + 6 + 0.25).epsilon(1e-12));
    CHECK(v.at(0, 1) == doctest::Approx(1 + 2 + 3 - 0.5).epsilon(1e-12));
    CHECK(v.at(1, 0) == doctest::Approx(-0.5 + 4 + 0.25).epsilon(1e-12));
    CHECK(v.at(1, 1) == doctest::Approx(-1 + 2 - 0.5).epsilon(1e-12));
}

TEST_CASE("instance_norm matches a naive implementation") {
    Rng rng(13);
    Tensor<double> x = random_tensor<double>(rng, {2, 3, 5, 6});
    Tensor<double> gamma = random_tensor<double>(rng, {3}, 0.5, 1.5);
    Tensor<double> beta = random_tensor<double>(rng, {3});
    Tape<double> tape;
    Var<double> y = instance_norm(tape.leaf(x, false), tape.leaf(gamma, false),
                                  tape.leaf(beta, false));
    Tensor<double> ref = testsup::naive_instance_norm(x, gamma, beta);
    CHECK(max_abs_diff(tape.value_of(y), ref) < 1e-10);
}

TEST_CASE("pooling and resampling forward behavior") {
    Tape<double> tape;
    Tensor<double> x({1, 1, 4, 4});
    for (int i = 0; i < 16; ++i) x[i] = i;

    SUBCASE("max_pool2x2 picks block maxima") {
        Var<double> y = max_pool2x2(tape.leaf(x, false));
        const Tensor<double>& v = tape.value_of(y);
        REQUIRE(v.shape() == std::vector<int>({1, 1, 2, 2}));
        CHECK(v[0] == 5);
        CHECK(v[1] == 7);
        CHECK(v[2] == 13);
        CHECK(v[3] == 15);
    }
    SUBCASE("adaptive_avg_pool to 1x1 is the mean") {
        Var<double> y = adaptive_avg_pool(tape.leaf(x, false), 1, 1);
        CHECK(tape.value_of(y)[0] == doctest::Approx(7.5).epsilon(1e-12));
    }
    SUBCASE("adaptive_avg_pool to 2x2 averages quadrants") {
        Var<double> y = adaptive_avg_pool(tape.leaf(x, false), 2, 2);
        const Tensor<double>& v = tape.value_of(y);
        CHECK(v[0] == doctest::Approx((0 + 1 + 4 + 5) / 4.0));
        CHECK(v[3] == doctest::Approx((10 + 11 + 14 + 15) / 4.0));
    }
    SUBCASE("upsample_nearest2x replicates pixels") {
        Tensor<double> s({1, 1, 2, 2}, std::vector<double>{1, 2, 3, 4});
        Var<double> y = upsample_nearest2x(tape.leaf(s, false));
        const Tensor<double>& v = tape.value_of(y);
        REQUIRE(v.shape() == std::vector<int>({1, 1, 4, 4}));
        CHECK(v.at(0, 0, 0, 0) == 1);
        CHECK(v.at(0, 0, 0, 1) == 1);
        CHECK(v.at(0, 0, 1, 1) == 1);
        CHECK(v.at(0, 0, 0, 2) == 2);
        CHECK(v.at(0, 0, 3, 3) == 4);
    }
    SUBCASE("bilinear_resize is identity at equal size and interpolates at 2x") {
        Tensor<double> s({1, 1, 2, 2}, std::vector<double>{0, 1, 2, 3});
        Var<double> same = bilinear_resize(tape.leaf(s, false), 2, 2);
        CHECK(max_abs_diff(tape.value_of(same), s) < 1e-12);
        Var<double> up = bilinear_resize(tape.leaf(s, false), 4, 4);
        const Tensor<double>& v = tape.value_of(up);
        // Half-pixel centers: source coordinate for output 0 is -0.25 (clamped).
        CHECK(v.at(0, 0, 0, 0) == doctest::Approx(0.0));
        CHECK(v.at(0, 0, 0, 3) == doctest::Approx(1.0));
        CHECK(v.at(0, 0, 3, 0) == doctest::Approx(2.0));
        // src = (dst + 0.5) / 2 - 0.5, so dst 1 blends with weights 0.75/0.25.
        CHECK(v.at(0, 0, 1, 1) == doctest::Approx(0.75).epsilon(1e-12));
        CHECK(v.at(0, 0, 0, 1) == doctest::Approx(0.25).epsilon(1e-12));
    }
}

TEST_CASE("activation values") {
    Tape<double> tape;
    Tensor<double> x({1, 4}, std::vector<double>{-2.0, -0.5, 0.0, 1.5});
    Var<double> xs = tape.leaf(x, false);

    const Tensor<double>& lr = tape.value_of(leaky_relu(xs, 0.2));
    CHECK(lr[0] == doctest::Approx(-0.4));
    CHECK(lr[1] == doctest::Approx(-0.1));
    CHECK(lr[3] == doctest::Approx(1.5));

    const Tensor<double>& r = tape.value_of(relu(xs));
    CHECK(r[0] == 0.0);
    CHECK(r[3] == 1.5);

    const Tensor<double>& sg = tape.value_of(sigmoid(xs));
    CHECK(sg[2] == doctest::Approx(0.5).epsilon(1e-15));
    CHECK(sg[3] == doctest::Approx(1.0 / (1.0 + std::exp(-1.5))).epsilon(1e-12));

    const Tensor<double>& sp = tape.value_of(softplus(xs));
    CHECK(sp[2] == doctest::Approx(std::log(2.0)).epsilon(1e-12));
    CHECK(sp[0] == doctest::Approx(std::log(1.0 + std::exp(-2.0))).epsilon(1e-12));
}

TEST_CASE("reductions and elementwise arithmetic") {
    Tape<double> tape;
    Tensor<double> x({2, 3}, std::vector<double>{1, -2, 2, 3, 0, -4});
    Var<double> xs = tape.leaf(x, false);

    CHECK(tape.value_of(sum_all(xs))[0] == doctest::Approx(0.0));
    CHECK(tape.value_of(mean_all(xs))[0] == doctest::Approx(0.0));
    CHECK(tape.value_of(euclidean_norm(xs))[0] ==
          doctest::Approx(std::sqrt(1 + 4 + 4 + 9 + 0 + 16)).epsilon(1e-12));
    CHECK(tape.value_of(per_sample_euclidean_norm_mean(xs))[0] ==
          doctest::Approx(0.5 * (3.0 + 5.0)).epsilon(1e-12));
    CHECK(tape.value_of(per_sample_l1_sum_mean(xs))[0] ==
          doctest::Approx(0.5 * (5.0 + 7.0)).epsilon(1e-12));

    const Tensor<double>& sq = tape.value_of(square(xs));
    CHECK(sq[5] == 16.0);
    const Tensor<double>& ab = tape.value_of(abs_val(xs));
    CHECK(ab[1] == 2.0);
    const Tensor<double>& sc = tape.value_of(scale(xs, 3.0));
    CHECK(sc[3] == 9.0);
    const Tensor<double>& as = tape.value_of(add_scalar(xs, -1.0));
    CHECK(as[0] == 0.0);
    const Tensor<double>& su = tape.value_of(sub(xs, xs));
    CHECK(max_abs_diff(su, Tensor<double>({2, 3})) == 0.0);
}

TEST_CASE("concat, slice, reshape, scale_channels layouts") {
    Tape<double> tape;
    Tensor<double> a({2, 1, 2, 2}, 1.0);
    Tensor<double> b({2, 2, 2, 2}, 2.0);
    std::vector<Var<double>> parts = {tape.leaf(a, false), tape.leaf(b, false)};
    Var<double> cat = concat_channels<double>(parts);
    const Tensor<double>& cv = tape.value_of(cat);
    REQUIRE(cv.shape() == std::vector<int>({2, 3, 2, 2}));
    CHECK(cv.at(0, 0, 0, 0) == 1.0);
    CHECK(cv.at(0, 1, 1, 1) == 2.0);
    CHECK(cv.at(1, 2, 0, 1) == 2.0);

    Var<double> sl = slice_batch(cat, 1, 2);
    REQUIRE(tape.value_of(sl).shape() == std::vector<int>({1, 3, 2, 2}));
    CHECK(tape.value_of(sl).at(0, 2, 1, 0) == 2.0);
    CHECK_THROWS_AS(slice_batch(cat, 1, 3), ShapeError);

    Var<double> rs = reshape(cat, {2, 12});
    REQUIRE(tape.value_of(rs).shape() == std::vector<int>({2, 12}));
    CHECK_THROWS_AS(reshape(cat, {5, 5}), ShapeError);

    Tensor<double> g({2, 3}, std::vector<double>{1, 2, 3, 4, 5, 6});
    Var<double> scl = scale_channels(cat, tape.leaf(g, false));
    CHECK(tape.value_of(scl).at(0, 0, 0, 0) == 1.0);
    CHECK(tape.value_of(scl).at(0, 1, 0, 0) == 4.0);
    CHECK(tape.value_of(scl).at(1, 2, 1, 1) == 12.0);
    Tensor<double> bad_g({2, 2}, 1.0);
    CHECK_THROWS_AS(scale_channels(cat, tape.leaf(bad_g, false)), ShapeError);
}

TEST_CASE("detach blocks gradient flow") {
    Tape<double> tape;
    Tensor<double> x({1, 2}, std::vector<double>{1.0, 2.0});
    Var<double> xs = tape.leaf(x, true);
    Var<double> loss = sum_all(square(detach(xs)));
    tape.backward(loss);
    CHECK_FALSE(tape.has_grad(xs));
}

TEST_CASE("gradients match finite differences (smooth ops)") {
    Rng rng(21);
    SUBCASE("conv2d stride 2 pad 1") {
        std::vector<Tensor<double>> vals = {random_tensor<double>(rng, {2, 2, 5, 5}),
                                            random_tensor<double>(rng, {3, 2, 3, 3}),
                                            random_tensor<double>(rng, {3})};
        auto res = check_gradients(
            [](Tape<double>& t, std::vector<Var<double>>& v) {
                (void)t;
                return mean_all(square(conv2d(v[0], v[1], v[2], 2, 1)));
            },
            vals);
        INFO(res.worst);
        CHECK(res.max_rel < 1e-6);
    }
    SUBCASE("linear") {
        std::vector<Tensor<double>> vals = {random_tensor<double>(rng, {3, 4}),
                                            random_tensor<double>(rng, {2, 4}),
                                            random_tensor<double>(rng, {2})};
        auto res = check_gradients(
            [](Tape<double>& t, std::vector<Var<double>>& v) {
                (void)t;
                return mean_all(square(linear(v[0], v[1], v[2])));
            },
            vals);
        INFO(res.worst);
        CHECK(res.max_rel < 1e-6);
    }
    SUBCASE("instance_norm") {
        std::vector<Tensor<double>> vals = {random_tensor<double>(rng, {2, 2, 4, 4}),
                                            random_tensor<double>(rng, {2}, 0.5, 1.5),
                                            random_tensor<double>(rng, {2})};
        auto res = check_gradients(
            [](Tape<double>& t, std::vector<Var<double>>& v) {
                (void)t;
                return mean_all(square(instance_norm(v[0], v[1], v[2])));
            },
            vals);
        INFO(res.worst);
        CHECK(res.max_rel < 1e-5);
    }
    SUBCASE("sigmoid softplus square") {
        std::vector<Tensor<double>> vals = {random_tensor<double>(rng, {2, 3, 3, 3})};
        auto res = check_gradients(
            [](Tape<double>& t, std::vector<Var<double>>& v) {
                (void)t;
                return sum_all(square(softplus(sigmoid(v[0]))));
            },
            vals);
        INFO(res.worst);
        CHECK(res.max_rel < 1e-7);
    }
    SUBCASE("bilinear and adaptive pooling") {
        std::vector<Tensor<double>> vals = {random_tensor<double>(rng, {1, 2, 5, 4})};
        auto res = check_gradients(
            [](Tape<double>& t, std::vector<Var<double>>& v) {
                (void)t;
                Var<double> up = bilinear_resize(v[0], 7, 9);
                Var<double> down = adaptive_avg_pool(up, 3, 3);
                return mean_all(square(down));
            },
            vals);
        INFO(res.worst);
        CHECK(res.max_rel < 1e-6);
    }
    SUBCASE("upsample_nearest2x") {
        std::vector<Tensor<double>> vals = {random_tensor<double>(rng, {1, 2, 3, 3})};
        auto res = check_gradients(
            [](Tape<double>& t, std::vector<Var<double>>& v) {
                (void)t;
                return sum_all(square(upsample_nearest2x(v[0])));
            },
            vals);
        INFO(res.worst);
        CHECK(res.max_rel < 1e-7);
    }
    SUBCASE("norm reductions away from zero") {
        std::vector<Tensor<double>> vals = {random_tensor<double>(rng, {3, 2, 2, 2}, 0.5, 1.5)};
        auto res = check_gradients(
            [](Tape<double>& t, std::vector<Var<double>>& v) {
                (void)t;
                return add(add(euclidean_norm(v[0]), per_sample_euclidean_norm_mean(v[0])),
                           per_sample_l1_sum_mean(v[0]));
            },
            vals);
        INFO(res.worst);
        CHECK(res.max_rel < 1e-6);
    }
    SUBCASE("concat slice scale_channels") {
        std::vector<Tensor<double>> vals = {random_tensor<double>(rng, {2, 2, 3, 3}),
                                            random_tensor<double>(rng, {2, 1, 3, 3}),
                                            random_tensor<double>(rng, {2, 3}, 0.5, 1.5)};
        auto res = check_gradients(
            [](Tape<double>& t, std::vector<Var<double>>& v) {
                (void)t;
                std::vector<Var<double>> parts = {v[0], v[1]};
                Var<double> cat = concat_channels<double>(parts);
                Var<double> scaled = scale_channels(cat, v[2]);
                return mean_all(square(slice_batch(scaled, 0, 2)));
            },
            vals);
        INFO(res.worst);
        CHECK(res.max_rel < 1e-6);
    }
}

TEST_CASE("gradients match finite differences (piecewise ops, points off the kinks)") {
    // Values are spaced so no input sits within the FD step of a kink or tie.
    Tensor<double> x({1, 1, 4, 4});
    const double seq[16] = {0.31, -0.72, 0.55, 0.91,  -0.13, 0.47, -0.88, 0.22,
                            0.64, -0.39, 0.18, -0.57, 0.76,  0.05, -0.26, 0.99};
    for (int i = 0; i < 16; ++i) x[i] = seq[i];

    SUBCASE("leaky_relu relu abs") {
        std::vector<Tensor<double>> vals = {x};
        auto res = check_gradients(
            [](Tape<double>& t, std::vector<Var<double>>& v) {
                (void)t;
                return sum_all(
                    add(abs_val(v[0]), add(relu(v[0]), leaky_relu(v[0], 0.2))));
            },
            vals);
        INFO(res.worst);
        CHECK(res.max_rel < 1e-7);
    }
    SUBCASE("max_pool2x2") {
        std::vector<Tensor<double>> vals = {x};
        auto res = check_gradients(
            [](Tape<double>& t, std::vector<Var<double>>& v) {
                (void)t;
                return sum_all(square(max_pool2x2(v[0])));
            },
            vals);
        INFO(res.worst);
        CHECK(res.max_rel < 1e-7);
    }
}

TEST_CASE("results are identical across thread counts") {
    Rng rng(31);
    Tensor<float> x = random_tensor<float>(rng, {2, 4, 16, 16});
    Tensor<float> w = random_tensor<float>(rng, {8, 4, 3, 3});
    Tensor<float> b = random_tensor<float>(rng, {8});
    Tensor<float> gamma = random_tensor<float>(rng, {8}, 0.5, 1.5);
    Tensor<float> beta = random_tensor<float>(rng, {8});

    auto run = [&]() {
        Tape<float> tape;
        Var<float> y = conv2d(tape.leaf(x, false), tape.leaf(w, false), tape.leaf(b, false), 1, 1);
        y = instance_norm(tape.leaf(tape.value_of(y), false), tape.leaf(gamma, false),
                          tape.leaf(beta, false));
        y = bilinear_resize(leaky_relu(y, 0.2f), 9, 9);
        return tape.value_of(y);
    };

    const int saved = num_threads();
    set_num_threads(1);
    Tensor<float> one = run();
    set_num_threads(4);
    Tensor<float> four = run();
    set_num_threads(saved);
    REQUIRE(one.same_shape(four));
    for (std::int64_t i = 0; i < one.numel(); ++i) CHECK(one[i] == four[i]);
}
