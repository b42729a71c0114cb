#include "rtcs/encoder.hpp"

#include <cmath>

namespace rtcs {

namespace {

TensorF as_batched(const TensorF& stripe, std::int64_t bands) {
    // Accepts (1,B,H,W) or a (B,H,W) cube packed with n=B (from hsi_data);
    // normalizes to n=1 layout.
    if (stripe.shape.n == 1 && stripe.shape.c == bands) return stripe;
    if (stripe.shape.n == bands && stripe.shape.c == 1) {
        return TensorF(Shape4{1, bands, stripe.shape.h, stripe.shape.w}, stripe.data);
    }
    throw std::invalid_argument("encode: stripe band count does not match encoder config (want " +
                                std::to_string(bands) + " bands, got shape " + stripe.shape.str() + ")");
}

}  // namespace

EncoderConfig shape_for_rate(std::int64_t B, std::int64_t H_s, std::int64_t W_s, double s_r) {
    if (!(s_r > 0 && s_r <= 0.25)) {
        throw std::invalid_argument("shape_for_rate: sampling rate must be in (0, 0.25]");
    }
    if (H_s < 1 || W_s < 1 || B < 1) {
        throw std::invalid_argument("shape_for_rate: dimensions must be >= 1");
    }
    EncoderConfig cfg;
    cfg.B = B;
    cfg.H_s = H_s;
    cfg.W_s = W_s;
    cfg.s_r = s_r;
    const bool low_rate = s_r <= 0.01;
    const int s = low_rate ? 4 : 2;
    cfg.stride = {s, s};
    cfg.b = static_cast<std::int64_t>(std::floor(static_cast<double>(B) * s_r * (low_rate ? 16.0 : 4.0)));
    if (cfg.b < 1) {
        throw std::invalid_argument("shape_for_rate: rate " + std::to_string(s_r) +
                                    " yields zero output channels for B=" + std::to_string(B));
    }
    if (H_s % s != 0 || W_s % s != 0) {
        throw std::invalid_argument("shape_for_rate: stripe geometry " + std::to_string(H_s) + "x" +
                                    std::to_string(W_s) + " must be divisible by stride " + std::to_string(s));
    }
    // pad so out_h = ceil(H_s / s); for k_h=9 and divisible H_s this is 4
    const std::int64_t target_h = (H_s + s - 1) / s;
    cfg.padding.h = static_cast<int>((s * target_h + cfg.k_h - H_s - 1) / 2);
    cfg.padding.w = 0;
    if (cfg.out_h() != target_h) {
        throw std::logic_error("shape_for_rate: internal padding derivation failed");
    }
    return cfg;
}

TensorF init_encoder_weights(const EncoderConfig& cfg, std::uint64_t seed) {
    TensorF w(Shape4{cfg.b, cfg.B, cfg.k_h, cfg.k_w});
    std::mt19937_64 rng(seed);
    std::normal_distribution<double> dist(0.0, std::sqrt(1.0 / static_cast<double>(cfg.B * cfg.k_h * cfg.k_w)));
    for (auto& v : w.data) v = static_cast<float>(dist(rng));
    return w;
}

TensorF encode_forward(const TensorF& stripes, const TensorF& weights, const EncoderConfig& cfg,
                       Tape<float>* tape) {
    if (stripes.shape.c != cfg.B) {
        throw std::invalid_argument("encode: band count mismatch, config B=" + std::to_string(cfg.B) +
                                    " but input has " + std::to_string(stripes.shape.c));
    }
    return conv2d(stripes, weights, cfg.stride, cfg.padding, 1, tape);
}

CompressedStripe encode(const TensorF& stripe, const TensorF& weights, const EncoderConfig& cfg) {
    TensorF x = as_batched(stripe, cfg.B);
    CompressedStripe z;
    z.data = encode_forward(x, weights, cfg, nullptr);
    z.src_B = cfg.B;
    z.src_H = x.shape.h;
    z.src_W = x.shape.w;
    return z;
}

Eigen::MatrixXf as_measurement_matrix(const TensorF& weights, const EncoderConfig& cfg) {
    const std::int64_t oh = cfg.out_h(), ow = cfg.out_w();
    const std::int64_t rows = cfg.b * oh * ow;
    const std::int64_t cols = cfg.B * cfg.H_s * cfg.W_s;
    if (rows * cols > 100'000'000) {
        throw std::invalid_argument("as_measurement_matrix: " + std::to_string(rows) + "x" +
                                    std::to_string(cols) + " exceeds the desk-scale size guard");
    }
    Eigen::MatrixXf psi = Eigen::MatrixXf::Zero(rows, cols);
    for (std::int64_t oc = 0; oc < cfg.b; ++oc) {
        for (std::int64_t oy = 0; oy < oh; ++oy) {
            for (std::int64_t ox = 0; ox < ow; ++ox) {
                const std::int64_t row = (oc * oh + oy) * ow + ox;
                for (std::int64_t ic = 0; ic < cfg.B; ++ic) {
                    for (int ky = 0; ky < cfg.k_h; ++ky) {
                        const std::int64_t iy = oy * cfg.stride.h - cfg.padding.h + ky;
                        if (iy < 0 || iy >= cfg.H_s) continue;
                        for (int kx = 0; kx < cfg.k_w; ++kx) {
                            const std::int64_t ix = ox * cfg.stride.w - cfg.padding.w + kx;
                            if (ix < 0 || ix >= cfg.W_s) continue;
                            const std::int64_t col = (ic * cfg.H_s + iy) * cfg.W_s + ix;
                            psi(row, col) = weights.at(oc, ic, ky, kx);
                        }
                    }
                }
            }
        }
    }
    return psi;
}

std::int64_t mac_count(const EncoderConfig& cfg) {
    return cfg.b * cfg.B * cfg.k_h * cfg.k_w * cfg.out_h() * cfg.out_w();
}

std::int64_t gram_cost(std::int64_t H_s, std::int64_t W_s, std::int64_t B) {
    const std::int64_t hw = H_s * W_s;
    return hw * hw * B;
}

TensorF QuantizedEncoder::dequantized() const {
    TensorF w(shape);
    for (std::size_t i = 0; i < weights_i8.size(); ++i) {
        w.data[i] = static_cast<float>(weights_i8[i] * scale);
    }
    return w;
}

QuantizedEncoder quantize_pq(const TensorF& weights) {
    if (!weights.all_finite()) throw std::invalid_argument("quantize_pq: weights must be finite");
    double max_abs = 0;
    for (float v : weights.data) max_abs = std::max(max_abs, std::abs(static_cast<double>(v)));
    QuantizedEncoder q;
    q.shape = weights.shape;
    q.scale = (max_abs == 0) ? 1.0 : max_abs / 127.0;
    q.weights_i8.resize(weights.data.size());
    for (std::size_t i = 0; i < weights.data.size(); ++i) {
        const double code = std::round(static_cast<double>(weights.data[i]) / q.scale);
        q.weights_i8[i] = static_cast<std::int8_t>(std::clamp(code, -127.0, 127.0));
    }
    return q;
}

double sqnr_db(const TensorF& reference, const TensorF& quantized) {
    double sig = 0, noise = 0;
    for (std::size_t i = 0; i < reference.data.size(); ++i) {
        const double r = reference.data[i];
        const double d = r - static_cast<double>(quantized.data[i]);
        sig += r * r;
        noise += d * d;
    }
    if (noise == 0) return 99.0;
    return 10.0 * std::log10(sig / noise);
}

CompressedStripe encode_int8(const TensorF& stripe, const QuantizedEncoder& q, const EncoderConfig& cfg) {
    // accumulator bound: 255 * 127 * B * k_h * k_w < 2^31
    const std::int64_t bound = 255LL * 127LL * cfg.B * cfg.k_h * cfg.k_w;
    if (bound >= (1LL << 31)) {
        throw std::invalid_argument("encode_int8: accumulator bound exceeded for B=" + std::to_string(cfg.B));
    }
    TensorF x = as_batched(stripe, cfg.B);
    std::vector<std::uint8_t> xq(x.data.size());
    for (std::size_t i = 0; i < x.data.size(); ++i) {
        const float v = std::clamp(x.data[i], 0.0f, 1.0f);
        xq[i] = static_cast<std::uint8_t>(std::lround(v * 255.0f));
    }
    const std::int64_t oh = cfg.out_h(), ow = cfg.out_w();
    const std::int64_t H = x.shape.h, W = x.shape.w;
    CompressedStripe z;
    z.data = TensorF(Shape4{1, cfg.b, oh, ow});
    z.int8_tagged = true;
    z.src_B = cfg.B;
    z.src_H = H;
    z.src_W = W;
    const double out_scale = q.scale / 255.0;
    for (std::int64_t oc = 0; oc < cfg.b; ++oc) {
        for (std::int64_t oy = 0; oy < oh; ++oy) {
            for (std::int64_t ox = 0; ox < ow; ++ox) {
                std::int32_t acc = 0;
                for (std::int64_t ic = 0; ic < cfg.B; ++ic) {
                    for (int ky = 0; ky < cfg.k_h; ++ky) {
                        const std::int64_t iy = oy * cfg.stride.h - cfg.padding.h + ky;
                        if (iy < 0 || iy >= H) continue;
                        for (int kx = 0; kx < cfg.k_w; ++kx) {
                            const std::int64_t ix = ox * cfg.stride.w - cfg.padding.w + kx;
                            if (ix < 0 || ix >= W) continue;
                            const std::int32_t wv =
                                q.weights_i8[static_cast<std::size_t>(((oc * cfg.B + ic) * cfg.k_h + ky) * cfg.k_w + kx)];
                            const std::int32_t xv = xq[static_cast<std::size_t>((ic * H + iy) * W + ix)];
                            acc += wv * xv;
                        }
                    }
                }
                z.data.at(0, oc, oy, ox) = static_cast<float>(acc * out_scale);
            }
        }
    }
    return z;
}

TensorF qat_forward(const TensorF& stripes, const TensorF& weights, const EncoderConfig& cfg,
                    Tape<float>* tape) {
    // fake-quantize the input exactly as the integer path does (uint8 steps);
    // the input is data, not a parameter, so this stays off the tape
    TensorF xq(stripes.shape);
    for (std::size_t i = 0; i < stripes.data.size(); ++i) {
        const float v = std::clamp(stripes.data[i], 0.0f, 1.0f);
        xq.data[i] = static_cast<float>(std::lround(v * 255.0f)) / 255.0f;
    }
    QuantizedEncoder q = quantize_pq(weights);
    TensorF wq = q.dequantized();
    if (tape && weights.node >= 0) {
        // straight-through: forward uses the fake-quantized values, backward is identity
        const int wn = weights.node;
        wq.node = tape->add_node(wq.shape, {wn}, [wn](const TensorF& gy, Tape<float>& tp) {
            tp.accumulate(wn, gy);
        });
    }
    return encode_forward(xq, wq, cfg, tape);
}

}  // namespace rtcs
