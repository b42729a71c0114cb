#include <doctest.h>

#include <random>

#include "rtcs/grad_check.hpp"
#include "rtcs/ops.hpp"

using namespace rtcs;

namespace {

TensorD randn(const Shape4& s, std::uint64_t seed) {
    TensorD t(s);
    std::mt19937_64 rng(seed);
    std::normal_distribution<double> d(0.0, 1.0);
    for (auto& v : t.data) v = d(rng);
    return t;
}

/// Sum-of-squares readout so every output coordinate feeds the loss
/// nonlinearly (catches transposed/misrouted gradients).
TensorD sq_sum(const TensorD& y, Tape<double>& tape) {
    return reduce(mul(y, y, &tape), ReduceKind::Sum, &tape);
}

/// Direct-loop convolution oracle, independent of im2col.
TensorD conv_ref(const TensorD& x, const TensorD& w, Extent2 stride, Extent2 pad, int groups) {
    const std::int64_t oh = (x.shape.h + 2 * pad.h - w.shape.h) / stride.h + 1;
    const std::int64_t ow = (x.shape.w + 2 * pad.w - w.shape.w) / stride.w + 1;
    const std::int64_t oc_per_g = w.shape.n / groups;
    const std::int64_t ic_per_g = w.shape.c;
    TensorD y(Shape4{x.shape.n, w.shape.n, oh, ow});
    for (std::int64_t n = 0; n < x.shape.n; ++n) {
        for (std::int64_t oc = 0; oc < w.shape.n; ++oc) {
            const std::int64_t g = oc / oc_per_g;
            for (std::int64_t oy = 0; oy < oh; ++oy) {
                for (std::int64_t ox = 0; ox < ow; ++ox) {
                    double acc = 0;
                    for (std::int64_t ic = 0; ic < ic_per_g; ++ic) {
                        for (std::int64_t ky = 0; ky < w.shape.h; ++ky) {
                            const std::int64_t iy = oy * stride.h - pad.h + ky;
                            if (iy < 0 || iy >= x.shape.h) continue;
                            for (std::int64_t kx = 0; kx < w.shape.w; ++kx) {
                                const std::int64_t ix = ox * stride.w - pad.w + kx;
                                if (ix < 0 || ix >= x.shape.w) continue;
                                acc += x.at(n, g * ic_per_g + ic, iy, ix) * w.at(oc, ic, ky, kx);
                            }
                        }
                    }
                    y.at(n, oc, oy, ox) = acc;
                }
            }
        }
    }
    return y;
}

}  // namespace

TEST_CASE("tape: second backward throws, non-scalar loss throws") {
    Tape<double> tape;
    TensorD a = tape.watch(TensorD::scalar(2.0));
    TensorD y = mul(a, a, &tape);
    CHECK_THROWS_AS(tape.backward(randn({1, 1, 2, 2}, 0)), std::logic_error);  // not attached
    tape.backward(y);
    CHECK(tape.grad(a.node).data[0] == doctest::Approx(4.0));
    CHECK_THROWS_AS(tape.backward(y), std::logic_error);  // already consumed
}

TEST_CASE("tape: nodes unreachable from the loss get zero gradients") {
    Tape<double> tape;
    TensorD a = tape.watch(TensorD::scalar(2.0));
    TensorD b = tape.watch(TensorD::scalar(3.0));
    TensorD unused = mul(b, b, &tape);
    (void)unused;
    TensorD y = mul(a, a, &tape);
    tape.backward(y);
    CHECK(tape.grad(b.node).data[0] == 0.0);
}

TEST_CASE("conv2d matches the direct-loop oracle across kernel/stride/pad") {
    std::uint64_t seed = 11;
    for (int k : {1, 2, 3}) {
        for (int s : {1, 2, 4}) {
            for (int p : {0, 1, 4}) {
                const std::int64_t H = 8, W = 8;
                if (H + 2 * p < k) continue;
                TensorD x = randn({2, 3, H, W}, seed++);
                TensorD w = randn({4, 3, k, k}, seed++);
                TensorD got = conv2d(x, w, Extent2{s, s}, Extent2{p, p}, 1);
                TensorD want = conv_ref(x, w, Extent2{s, s}, Extent2{p, p}, 1);
                REQUIRE(got.shape == want.shape);
                for (std::size_t i = 0; i < got.data.size(); ++i) {
                    REQUIRE(got.data[i] == doctest::Approx(want.data[i]).epsilon(1e-12));
                }
            }
        }
    }
}

TEST_CASE("conv2d grouped matches the oracle") {
    TensorD x = randn({1, 6, 7, 5}, 3);
    TensorD w = randn({4, 3, 3, 3}, 4);  // groups=2: 4 out, 6 in
    TensorD got = conv2d(x, w, Extent2{1, 1}, Extent2{1, 1}, 2);
    TensorD want = conv_ref(x, w, Extent2{1, 1}, Extent2{1, 1}, 2);
    for (std::size_t i = 0; i < got.data.size(); ++i) {
        CHECK(got.data[i] == doctest::Approx(want.data[i]).epsilon(1e-12));
    }
}

TEST_CASE("conv2d validates shapes and groups") {
    TensorD x = randn({1, 4, 5, 5}, 5);
    CHECK_THROWS_AS(conv2d(x, randn({2, 3, 3, 3}, 6), Extent2{1, 1}, Extent2{0, 0}, 1),
                    std::invalid_argument);  // in_c mismatch
    CHECK_THROWS_AS(conv2d(x, randn({3, 2, 3, 3}, 7), Extent2{1, 1}, Extent2{0, 0}, 2),
                    std::invalid_argument);  // out_c not divisible by groups
    CHECK_THROWS_AS(conv2d(x, randn({2, 4, 7, 7}, 8), Extent2{1, 1}, Extent2{0, 0}, 1),
                    std::invalid_argument);  // kernel larger than padded input
}

TEST_CASE("gradients: conv2d plain, strided, padded, grouped") {
    auto check = [](Shape4 xs, Shape4 ws, Extent2 stride, Extent2 pad, int groups) {
        const double err = grad_check(
            [=](Tape<double>& t, std::vector<TensorD>& in) {
                return sq_sum(conv2d(in[0], in[1], stride, pad, groups, &t), t);
            },
            {randn(xs, 21), randn(ws, 22)});
        CHECK(err < 1e-4);
    };
    check({1, 2, 5, 4}, {3, 2, 3, 3}, {1, 1}, {1, 1}, 1);
    check({2, 3, 6, 6}, {2, 3, 2, 2}, {2, 2}, {0, 0}, 1);
    check({1, 4, 6, 4}, {4, 2, 3, 1}, {2, 1}, {1, 0}, 2);
    check({1, 3, 9, 2}, {2, 3, 9, 1}, {4, 2}, {4, 0}, 1);  // encoder geometry
}

TEST_CASE("bilinear_upsample2x: frozen 2x2 -> 4x4 oracle") {
    TensorD x(Shape4{1, 1, 2, 2}, {0.0, 1.0, 2.0, 3.0});
    TensorD y = bilinear_upsample2x(x);
    REQUIRE((y.shape == Shape4{1, 1, 4, 4}));
    // half-pixel source rows {0, 0, 0.5, 1} fractions and columns likewise:
    // row values r in {0, 0.5, 1.5, 2} over x-interpolation {0, 0.25, 0.75, 1}
    const double rows[4] = {0.0, 0.5, 1.5, 2.0};
    const double cols[4] = {0.0, 0.25, 0.75, 1.0};
    for (int i = 0; i < 4; ++i) {
        for (int j = 0; j < 4; ++j) {
            CHECK(y.at(0, 0, i, j) == doctest::Approx(rows[i] + cols[j]).epsilon(1e-12));
        }
    }
}

TEST_CASE("bilinear_upsample2x: size-1 axis replicates") {
    TensorD x(Shape4{1, 1, 1, 2}, {1.0, 3.0});
    TensorD y = bilinear_upsample2x(x);
    REQUIRE((y.shape == Shape4{1, 1, 2, 4}));
    CHECK(y.at(0, 0, 0, 0) == doctest::Approx(1.0));
    CHECK(y.at(0, 0, 1, 0) == doctest::Approx(1.0));
    CHECK(y.at(0, 0, 0, 3) == doctest::Approx(3.0));
}

TEST_CASE("gradients: bilinear, leaky_relu, concat, elementwise, reductions, bias") {
    const Shape4 s{2, 3, 4, 3};
    auto one_input = [&](auto op) {
        return grad_check(
            [=](Tape<double>& t, std::vector<TensorD>& in) { return sq_sum(op(in[0], t), t); },
            {randn(s, 31)});
    };
    CHECK(one_input([](const TensorD& x, Tape<double>& t) { return bilinear_upsample2x(x, &t); }) < 1e-4);
    CHECK(one_input([](const TensorD& x, Tape<double>& t) { return leaky_relu(x, 0.2, &t); }) < 1e-4);
    CHECK(one_input([](const TensorD& x, Tape<double>& t) { return scale(x, 0.7, &t); }) < 1e-4);
    CHECK(one_input([](const TensorD& x, Tape<double>& t) {
              return reduce(x, ReduceKind::Mean, &t);
          }) < 1e-4);

    auto two_inputs = [&](EwKind kind) {
        return grad_check(
            [=](Tape<double>& t, std::vector<TensorD>& in) {
                return sq_sum(elementwise(in[0], in[1], kind, &t), t);
            },
            {randn(s, 32), randn(s, 33)});
    };
    CHECK(two_inputs(EwKind::Add) < 1e-4);
    CHECK(two_inputs(EwKind::Sub) < 1e-4);
    CHECK(two_inputs(EwKind::Mul) < 1e-4);

    CHECK(grad_check(
              [&](Tape<double>& t, std::vector<TensorD>& in) {
                  return sq_sum(concat_channels(in[0], in[1], &t), t);
              },
              {randn(s, 34), randn({2, 2, 4, 3}, 35)}) < 1e-4);

    CHECK(grad_check(
              [&](Tape<double>& t, std::vector<TensorD>& in) {
                  return sq_sum(bias_add(in[0], in[1], &t), t);
              },
              {randn(s, 36), randn({1, 3, 1, 1}, 37)}) < 1e-4);
}

TEST_CASE("leaky_relu values and clamp01") {
    TensorD x(Shape4{1, 1, 1, 4}, {-2.0, -0.5, 0.0, 3.0});
    TensorD y = leaky_relu(x, 0.1);
    CHECK(y.data[0] == doctest::Approx(-0.2));
    CHECK(y.data[1] == doctest::Approx(-0.05));
    CHECK(y.data[2] == 0.0);
    CHECK(y.data[3] == 3.0);
    CHECK_THROWS_AS(leaky_relu(x, -0.1), std::invalid_argument);

    TensorD z = clamp01(TensorD(Shape4{1, 1, 1, 3}, {-0.5, 0.25, 1.5}));
    CHECK(z.data[0] == 0.0);
    CHECK(z.data[1] == 0.25);
    CHECK(z.data[2] == 1.0);
}
