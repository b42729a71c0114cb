#pragma once

#include <cstdint>
#include <optional>
#include <random>
#include <string>

#include "rtcs/tensor.hpp"

namespace rtcs {

enum class MaskKind { PM, BM, CM };

std::string to_string(MaskKind k);
MaskKind mask_kind_from_string(const std::string& s);

/// Stripe-effect descriptor. PM zeroes a random subset of spatial rows within
/// the band range, BM a period-2 spatial-column pattern, CM everything.
struct MaskSpec {
    MaskKind kind = MaskKind::CM;
    std::int64_t band_lo = 0;
    std::int64_t band_hi = 0;  // inclusive
    double p_affect = 0.2;
    double max_band_frac = 0.2;
    std::uint64_t seed = 0;
};

/// Binary mask (1 = present, 0 = missing) over a (B, H_s, W_s) stripe,
/// stored as a (1, B, H_s, W_s) tensor.
using Mask = TensorF;

struct NoiseSpec {
    double snr_db = std::numeric_limits<double>::infinity();
    std::uint64_t seed = 0;
};

/// Deterministic mask generation for a stripe of the given geometry.
Mask gen_mask(const MaskSpec& spec, std::int64_t B, std::int64_t H_s, std::int64_t W_s);

/// Training-time draw: with probability p=0.2 emits a PM or CM mask over a
/// contiguous band run of length <= floor(0.2*B); otherwise nullopt (clean
/// sample). BM is never drawn in training.
std::optional<Mask> draw_training_mask(std::int64_t B, std::int64_t H_s, std::int64_t W_s,
                                       std::mt19937_64& rng,
                                       double p_affect = 0.2, double max_band_frac = 0.2);

/// X_mask = X (element-wise) M. Shapes must match.
TensorF apply_mask(const TensorF& x, const Mask& m);

/// Additive white Gaussian noise at a target SNR measured against the mean
/// squared value of `z`. Infinite SNR returns `z` unchanged.
TensorF add_awgn(const TensorF& z, const NoiseSpec& spec);

}  // namespace rtcs
