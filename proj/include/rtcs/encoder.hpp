#pragma once

#include <Eigen/Core>
#include <cstdint>
#include <random>

#include "rtcs/ops.hpp"

namespace rtcs {

/// Measurement-operator configuration: a single strided 9x1 convolution
/// projecting a (B, H_s, W_s) stripe to (b, h, w).
struct EncoderConfig {
    std::int64_t B = 0;     // input bands
    std::int64_t H_s = 0;   // stripe rows
    std::int64_t W_s = 0;   // stripe columns
    int k_h = 9;
    int k_w = 1;
    Extent2 stride{4, 4};
    Extent2 padding{4, 0};
    std::int64_t b = 0;     // output channels
    double s_r = 0;         // target sampling rate

    std::int64_t out_h() const { return (H_s + 2 * padding.h - k_h) / stride.h + 1; }
    std::int64_t out_w() const { return (W_s + 2 * padding.w - k_w) / stride.w + 1; }
    int upsample_stages() const { return stride.h == 4 ? 2 : 1; }
    double achieved_rate() const {
        return static_cast<double>(b * out_h() * out_w()) / static_cast<double>(B * H_s * W_s);
    }
};

/// Shape arithmetic for a target sampling rate: stride (4,4) with 1/16 spatial
/// reduction for s_r <= 1%, stride (2,2) with 1/4 reduction above; padding is
/// derived so out_h = ceil(H_s / stride).
EncoderConfig shape_for_rate(std::int64_t B, std::int64_t H_s, std::int64_t W_s, double s_r);

/// Fresh measurement weights, i.i.d. Gaussian with variance 1/(B*k_h*k_w).
TensorF init_encoder_weights(const EncoderConfig& cfg, std::uint64_t seed);

/// Compressed stripe Z. `int8_tagged` marks values produced by the integer
/// path (still held dequantized in f32).
struct CompressedStripe {
    TensorF data;  // (1, b, h, w)
    bool int8_tagged = false;
    std::int64_t src_B = 0, src_H = 0, src_W = 0;
};

/// Z = conv(stripe, weights): purely linear, no bias, no activation.
/// `stripe` is (1, B, H_s, W_s) or (B, H_s, W_s) packed as n=1.
CompressedStripe encode(const TensorF& stripe, const TensorF& weights, const EncoderConfig& cfg);

/// Tape-recorded encoder forward for training (batched input allowed).
TensorF encode_forward(const TensorF& stripes, const TensorF& weights, const EncoderConfig& cfg,
                       Tape<float>* tape);

/// Explicit dense measurement matrix: (b*h*w) x (B*H_s*W_s), row r holding the
/// kernel taps of output coordinate r at its receptive-field positions.
Eigen::MatrixXf as_measurement_matrix(const TensorF& weights, const EncoderConfig& cfg);

/// Multiply-accumulate count of one stripe encode: b*B*k_h*k_w*h*w.
std::int64_t mac_count(const EncoderConfig& cfg);

/// Cost of forming the Gram matrix U = Xv Xv^T for a (B, H_s, W_s) stripe:
/// (W_s*H_s)^2 * B.
std::int64_t gram_cost(std::int64_t H_s, std::int64_t W_s, std::int64_t B);

/// Per-tensor symmetric int8 weights, zero-point 0.
struct QuantizedEncoder {
    std::vector<std::int8_t> weights_i8;  // (b, B, k_h, k_w) row-major
    Shape4 shape;
    double scale = 1.0;

    TensorF dequantized() const;
};

/// Post-quantization: scale = max|w|/127 (1.0 for all-zero weights),
/// codes = round(w/scale) clamped to [-127, 127].
QuantizedEncoder quantize_pq(const TensorF& weights);

/// Signal-to-quantization-noise ratio (dB) of the dequantized weights.
double sqnr_db(const TensorF& reference, const TensorF& quantized);

/// Integer-8 encode: stripe quantized to uint8 (scale 1/255), int32
/// accumulation, dequantized by scale_w/255. Bit-exact for identical inputs.
CompressedStripe encode_int8(const TensorF& stripe, const QuantizedEncoder& q, const EncoderConfig& cfg);

/// QAT forward: weights fake-quantized (quantize -> dequantize) with the scale
/// recomputed from the current max|w|; gradients pass straight through.
TensorF qat_forward(const TensorF& stripes, const TensorF& weights, const EncoderConfig& cfg,
                    Tape<float>* tape);

}  // namespace rtcs
