#include <doctest.h>

#include <cmath>
#include <random>

#include "rtcs/degradation.hpp"

using namespace rtcs;

namespace {

MaskSpec spec(MaskKind k, std::int64_t lo, std::int64_t hi, std::uint64_t seed) {
    MaskSpec s;
    s.kind = k;
    s.band_lo = lo;
    s.band_hi = hi;
    s.seed = seed;
    return s;
}

}  // namespace

TEST_CASE("mask kind names round-trip") {
    for (MaskKind k : {MaskKind::PM, MaskKind::BM, MaskKind::CM}) {
        CHECK(mask_kind_from_string(to_string(k)) == k);
    }
    CHECK_THROWS_AS(mask_kind_from_string("xm"), std::invalid_argument);
}

TEST_CASE("CM zeroes the whole band range, other bands untouched") {
    Mask m = gen_mask(spec(MaskKind::CM, 2, 4, 1), 8, 16, 4);
    for (std::int64_t b = 0; b < 8; ++b) {
        for (std::int64_t y = 0; y < 16; ++y) {
            for (std::int64_t x = 0; x < 4; ++x) {
                const float want = (b >= 2 && b <= 4) ? 0.0f : 1.0f;
                CHECK(m.at(0, b, y, x) == want);
            }
        }
    }
}

TEST_CASE("BM drops every other spatial column inside the band range") {
    Mask m = gen_mask(spec(MaskKind::BM, 0, 7, 2), 8, 8, 4);
    for (std::int64_t b = 0; b < 8; ++b) {
        for (std::int64_t y = 0; y < 8; ++y) {
            for (std::int64_t x = 0; x < 4; ++x) {
                // period-2 column pattern: one parity present, the other gone
                CHECK(m.at(0, b, y, x) == ((x % 2 == 0) ? m.at(0, b, y, 0) : m.at(0, b, y, 1)));
            }
        }
    }
    // exactly half the columns inside the range are zero
    double zeros = 0;
    for (float v : m.data) zeros += (v == 0.0f);
    CHECK(zeros == doctest::Approx(m.data.size() / 2.0));
}

TEST_CASE("PM zeroes whole rows: about half, random per band range, seeded") {
    Mask m = gen_mask(spec(MaskKind::PM, 0, 15, 3), 16, 64, 4);
    std::int64_t zero_rows = 0, mixed_rows = 0;
    for (std::int64_t b = 0; b < 16; ++b) {
        for (std::int64_t y = 0; y < 64; ++y) {
            float first = m.at(0, b, y, 0);
            bool uniform = true;
            for (std::int64_t x = 1; x < 4; ++x) uniform &= (m.at(0, b, y, x) == first);
            mixed_rows += !uniform;
            zero_rows += uniform && first == 0.0f;
        }
    }
    CHECK(mixed_rows == 0);  // rows are all-or-nothing
    CHECK(zero_rows > 16 * 64 / 4);
    CHECK(zero_rows < 16 * 64 * 3 / 4);

    Mask again = gen_mask(spec(MaskKind::PM, 0, 15, 3), 16, 64, 4);
    CHECK(m.data == again.data);
    Mask other = gen_mask(spec(MaskKind::PM, 0, 15, 4), 16, 64, 4);
    CHECK(m.data != other.data);
}

TEST_CASE("gen_mask validates the band range") {
    CHECK_THROWS_AS(gen_mask(spec(MaskKind::CM, 5, 3, 0), 8, 8, 4), std::invalid_argument);
    CHECK_THROWS_AS(gen_mask(spec(MaskKind::CM, 0, 8, 0), 8, 8, 4), std::invalid_argument);
}

TEST_CASE("draw_training_mask: rate ~ p, span <= floor(0.2 B), PM/CM only") {
    const std::int64_t B = 32, H = 16, W = 4;
    std::mt19937_64 rng(7);
    int drawn = 0;
    const int trials = 4000;
    for (int i = 0; i < trials; ++i) {
        auto m = draw_training_mask(B, H, W, rng);
        if (!m) continue;
        ++drawn;
        // find the affected band run and check its structure
        std::int64_t affected = 0;
        for (std::int64_t b = 0; b < B; ++b) {
            bool any_zero = false;
            for (std::int64_t y = 0; y < H && !any_zero; ++y) {
                for (std::int64_t x = 0; x < W; ++x) any_zero |= (m->at(0, b, y, x) == 0.0f);
            }
            affected += any_zero;
        }
        CHECK(affected >= 1);
        CHECK(affected <= B / 5);  // floor(0.2 * 32) = 6
        // every zero must belong to a full row (PM) or full band (CM) — in
        // both cases a zero implies its whole spatial row is zero
        for (std::int64_t b = 0; b < B; ++b) {
            for (std::int64_t y = 0; y < H; ++y) {
                bool any0 = false, all0 = true;
                for (std::int64_t x = 0; x < W; ++x) {
                    any0 |= (m->at(0, b, y, x) == 0.0f);
                    all0 &= (m->at(0, b, y, x) == 0.0f);
                }
                if (any0) CHECK(all0);
            }
        }
    }
    CHECK(drawn > trials * 0.15);
    CHECK(drawn < trials * 0.25);
}

TEST_CASE("apply_mask multiplies element-wise") {
    TensorF x(Shape4{1, 2, 2, 2}, {1, 2, 3, 4, 5, 6, 7, 8});
    Mask m(Shape4{1, 2, 2, 2}, {1, 0, 1, 0, 0, 1, 0, 1});
    TensorF y = apply_mask(x, m);
    CHECK(y.data == std::vector<float>{1, 0, 3, 0, 0, 6, 0, 8});
    CHECK_THROWS_AS(apply_mask(x, Mask(Shape4{1, 1, 2, 2})), std::invalid_argument);
}

TEST_CASE("add_awgn hits the target SNR; infinite SNR is the identity") {
    TensorF z(Shape4{1, 8, 64, 8});
    std::mt19937_64 rng(11);
    std::uniform_real_distribution<float> d(-1.0f, 1.0f);
    for (auto& v : z.data) v = d(rng);

    NoiseSpec inf_spec;  // default: infinite SNR
    TensorF same = add_awgn(z, inf_spec);
    CHECK(same.data == z.data);

    for (double target : {10.0, 30.0}) {
        NoiseSpec spec;
        spec.snr_db = target;
        spec.seed = 13;
        TensorF noisy = add_awgn(z, spec);
        double sig = 0, noise = 0;
        for (std::size_t i = 0; i < z.data.size(); ++i) {
            sig += static_cast<double>(z.data[i]) * z.data[i];
            const double n = static_cast<double>(noisy.data[i]) - z.data[i];
            noise += n * n;
        }
        const double measured = 10.0 * std::log10(sig / noise);
        CHECK(measured == doctest::Approx(target).epsilon(0.05));

        TensorF again = add_awgn(z, spec);
        CHECK(noisy.data == again.data);  // seeded determinism
    }
}
