#include "rtcs/degradation.hpp"

#include <cmath>
#include <stdexcept>

namespace rtcs {

std::string to_string(MaskKind k) {
    switch (k) {
        case MaskKind::PM: return "PM";
        case MaskKind::BM: return "BM";
        case MaskKind::CM: return "CM";
    }
    return "?";
}

MaskKind mask_kind_from_string(const std::string& s) {
    if (s == "PM") return MaskKind::PM;
    if (s == "BM") return MaskKind::BM;
    if (s == "CM") return MaskKind::CM;
    throw std::invalid_argument("unknown mask kind '" + s + "' (expected PM, BM or CM)");
}

Mask gen_mask(const MaskSpec& spec, std::int64_t B, std::int64_t H_s, std::int64_t W_s) {
    if (spec.band_lo < 0 || spec.band_lo > spec.band_hi || spec.band_hi >= B) {
        throw std::invalid_argument("gen_mask: invalid band range [" + std::to_string(spec.band_lo) +
                                    ", " + std::to_string(spec.band_hi) + "] for B=" + std::to_string(B));
    }
    Mask m(Shape4{1, B, H_s, W_s});
    std::fill(m.data.begin(), m.data.end(), 1.0f);
    std::mt19937_64 rng(spec.seed);

    switch (spec.kind) {
        case MaskKind::CM:
            for (std::int64_t b = spec.band_lo; b <= spec.band_hi; ++b) {
                for (std::int64_t y = 0; y < H_s; ++y) {
                    for (std::int64_t x = 0; x < W_s; ++x) m.at(0, b, y, x) = 0.0f;
                }
            }
            break;
        case MaskKind::BM:
            // regular period-2 spatial-column pattern within the band range
            // (even parity, so the pattern always intersects column 0)
            for (std::int64_t b = spec.band_lo; b <= spec.band_hi; ++b) {
                for (std::int64_t y = 0; y < H_s; ++y) {
                    for (std::int64_t x = 0; x < W_s; x += 2) m.at(0, b, y, x) = 0.0f;
                }
            }
            break;
        case MaskKind::PM: {
            // random 50% subset of spatial rows, shared across the band range
            std::vector<bool> drop(static_cast<std::size_t>(H_s), false);
            for (std::int64_t y = 0; y < H_s; ++y) {
                drop[static_cast<std::size_t>(y)] = (rng() & 1u) != 0;
            }
            for (std::int64_t b = spec.band_lo; b <= spec.band_hi; ++b) {
                for (std::int64_t y = 0; y < H_s; ++y) {
                    if (!drop[static_cast<std::size_t>(y)]) continue;
                    for (std::int64_t x = 0; x < W_s; ++x) m.at(0, b, y, x) = 0.0f;
                }
            }
            break;
        }
    }
    return m;
}

std::optional<Mask> draw_training_mask(std::int64_t B, std::int64_t H_s, std::int64_t W_s,
                                       std::mt19937_64& rng, double p_affect, double max_band_frac) {
    std::uniform_real_distribution<double> u01(0.0, 1.0);
    if (u01(rng) >= p_affect) return std::nullopt;
    const std::int64_t max_len = static_cast<std::int64_t>(std::floor(max_band_frac * static_cast<double>(B)));
    if (max_len < 1) return std::nullopt;
    MaskSpec spec;
    spec.kind = (rng() & 1u) ? MaskKind::PM : MaskKind::CM;  // BM is test-only
    std::uniform_int_distribution<std::int64_t> len_dist(1, max_len);
    const std::int64_t len = len_dist(rng);
    std::uniform_int_distribution<std::int64_t> start_dist(0, B - len);
    spec.band_lo = start_dist(rng);
    spec.band_hi = spec.band_lo + len - 1;
    spec.seed = rng();
    return gen_mask(spec, B, H_s, W_s);
}

TensorF apply_mask(const TensorF& x, const Mask& m) {
    if (x.shape != m.shape) {
        throw std::invalid_argument("apply_mask: shape mismatch " + x.shape.str() + " vs " + m.shape.str());
    }
    TensorF y(x.shape);
    for (std::size_t i = 0; i < x.data.size(); ++i) y.data[i] = x.data[i] * m.data[i];
    return y;
}

TensorF add_awgn(const TensorF& z, const NoiseSpec& spec) {
    if (!z.all_finite()) throw std::invalid_argument("add_awgn: input must be finite");
    if (std::isinf(spec.snr_db)) return z;
    if (!(spec.snr_db > 0)) throw std::invalid_argument("add_awgn: snr_db must be positive or infinite");
    double power = 0;
    for (float v : z.data) power += static_cast<double>(v) * static_cast<double>(v);
    power /= static_cast<double>(z.numel());
    const double sigma = std::sqrt(power / std::pow(10.0, spec.snr_db / 10.0));
    std::mt19937_64 rng(spec.seed);
    std::normal_distribution<double> dist(0.0, sigma);
    TensorF y = z;
    for (auto& v : y.data) v = static_cast<float>(v + dist(rng));
    return y;
}

}  // namespace rtcs
