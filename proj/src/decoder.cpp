#include "rtcs/decoder.hpp"

#include <Eigen/QR>
#include <cmath>

namespace rtcs {

void DecoderConfig::validate() const {
    if (n_f < 0) throw std::invalid_argument("DecoderConfig: n_f must be >= 0");
    if (N_base < 1 || c_s < 1 || frdb_width < 1 || frdb_growth < 1) {
        throw std::invalid_argument("DecoderConfig: widths must be >= 1");
    }
    if (c_g < 1 || frdb_width % c_g != 0) {
        throw std::invalid_argument("DecoderConfig: frdb_width must be divisible by c_g");
    }
    if ((frdb_width + 2 * frdb_growth) % c_g != 0) {
        throw std::invalid_argument("DecoderConfig: FRDB stack width (frdb_width + 2*frdb_growth) "
                                    "must be divisible by c_g");
    }
    if (upsample_stages < 1 || upsample_stages > 2) {
        throw std::invalid_argument("DecoderConfig: upsample_stages must be 1 or 2");
    }
    if (B_out < 1) throw std::invalid_argument("DecoderConfig: B_out must be >= 1");
}

namespace {

std::int64_t conv_params(std::int64_t out_c, std::int64_t in_c, int kh, int kw, int groups = 1) {
    return out_c * (in_c / groups) * kh * kw + out_c;  // weights + bias
}

}  // namespace

std::int64_t param_count(const DecoderConfig& cfg, const EncoderConfig& enc) {
    cfg.validate();
    const std::int64_t b = enc.b;
    const int k = cfg.k_imfa, K = cfg.k_frdb;
    std::int64_t total = enc.b * enc.B * enc.k_h * enc.k_w;  // encoder: no bias
    total += conv_params(cfg.N_base, b, k, k);               // stem_imfa
    total += conv_params(cfg.frdb_width, b, k, k);           // stem_frdb
    const std::int64_t imfa_base = conv_params(cfg.c_s, cfg.N_base, k, k) +
                                   conv_params(cfg.N_base, cfg.N_base + cfg.c_s, 1, 1);
    total += 3LL * cfg.n_f * imfa_base;
    total += conv_params(cfg.frdb_width, cfg.N_base, 1, 1);  // f_u
    const std::int64_t g = cfg.frdb_growth, fw = cfg.frdb_width;
    const std::int64_t frdb_base = conv_params(g, fw, K, K) +
                                   conv_params(g, fw + g, K, K) +
                                   conv_params(fw, fw + 2 * g, K, K, cfg.c_g);
    total += 3LL * cfg.n_f * frdb_base;
    total += cfg.upsample_stages * conv_params(fw, fw, k, k);  // spatial upsamplers
    total += conv_params(cfg.B_out, fw, k, k);                 // f_rec
    return total;
}

CsfNet::CsfNet(const DecoderConfig& cfg, const EncoderConfig& enc, std::uint64_t seed)
    : cfg_(cfg), in_channels_(enc.b) {
    cfg_.validate();
    if (cfg.upsample_stages != enc.upsample_stages()) {
        throw std::invalid_argument("CsfNet: upsample_stages=" + std::to_string(cfg.upsample_stages) +
                                    " inconsistent with encoder stride " + std::to_string(enc.stride.h));
    }
    std::mt19937_64 rng(seed);
    auto add_conv = [&](const std::string& name, std::int64_t out_c, std::int64_t in_c, int kh, int kw,
                        int groups = 1) {
        TensorF w(Shape4{out_c, in_c / groups, kh, kw});
        const double fan_in = static_cast<double>((in_c / groups) * kh * kw);
        const double slope = cfg_.lrelu_slope;
        std::normal_distribution<double> dist(0.0, std::sqrt(2.0 / ((1.0 + slope * slope) * fan_in)));
        for (auto& v : w.data) v = static_cast<float>(dist(rng));
        params_.emplace_back(name + ".w", std::move(w));
        params_.emplace_back(name + ".b", TensorF(Shape4{1, out_c, 1, 1}));
    };

    const int k = cfg_.k_imfa, K = cfg_.k_frdb;
    add_conv("stem_imfa", cfg_.N_base, in_channels_, k, k);
    add_conv("stem_frdb", cfg_.frdb_width, in_channels_, k, k);
    for (int blk = 0; blk < cfg_.n_f; ++blk) {
        for (int base = 0; base < 3; ++base) {
            const std::string pre = "imfa." + std::to_string(blk) + "." + std::to_string(base);
            add_conv(pre + ".reduce", cfg_.c_s, cfg_.N_base, k, k);
            add_conv(pre + ".fuse", cfg_.N_base, cfg_.N_base + cfg_.c_s, 1, 1);
        }
    }
    add_conv("f_u", cfg_.frdb_width, cfg_.N_base, 1, 1);
    for (int blk = 0; blk < cfg_.n_f; ++blk) {
        for (int base = 0; base < 3; ++base) {
            const std::string pre = "frdb." + std::to_string(blk) + "." + std::to_string(base);
            add_conv(pre + ".g1", cfg_.frdb_growth, cfg_.frdb_width, K, K);
            add_conv(pre + ".g2", cfg_.frdb_growth, cfg_.frdb_width + cfg_.frdb_growth, K, K);
            add_conv(pre + ".fuse", cfg_.frdb_width, cfg_.frdb_width + 2 * cfg_.frdb_growth, K, K, cfg_.c_g);
        }
    }
    for (int s = 0; s < cfg_.upsample_stages; ++s) {
        add_conv("up." + std::to_string(s), cfg_.frdb_width, cfg_.frdb_width, k, k);
    }
    add_conv("f_rec", cfg_.B_out, cfg_.frdb_width, k, k);
}

std::int64_t CsfNet::actual_param_count() const {
    std::int64_t total = 0;
    for (const auto& p : params_) total += p.value.numel();
    return total;
}

TapeBinding CsfNet::bind(Tape<float>& tape) const {
    TapeBinding b;
    b.watched.reserve(params_.size());
    for (const auto& p : params_) b.watched.push_back(tape.watch(p.value));
    return b;
}

void CsfNet::collect_grads(Tape<float>& tape, const TapeBinding& binding) {
    for (std::size_t i = 0; i < params_.size(); ++i) {
        const TensorF& g = tape.grad(binding.watched[i].node);
        for (std::size_t j = 0; j < g.data.size(); ++j) params_[i].grad.data[j] += g.data[j];
    }
}

TensorF CsfNet::forward(const TensorF& z, Tape<float>* tape, const TapeBinding* binding) const {
    if (z.shape.c != in_channels_) {
        throw std::invalid_argument("CsfNet::forward: expected " + std::to_string(in_channels_) +
                                    " input channels, got " + z.shape.str());
    }
    const float slope = cfg_.lrelu_slope;
    std::size_t cur = 0;  // consumes params_ in construction order
    auto conv = [&](const TensorF& x, Extent2 pad, int groups = 1) {
        const TensorF& w = p(cur++, binding);
        const TensorF& b = p(cur++, binding);
        return bias_add(conv2d(x, w, Extent2{1, 1}, pad, groups, tape), b, tape);
    };
    auto act = [&](const TensorF& x) { return leaky_relu(x, slope, tape); };
    const Extent2 pad1{1, 1};
    const Extent2 padK{cfg_.k_frdb / 2, cfg_.k_frdb / 2};

    TensorF imfa = act(conv(z, pad1));
    TensorF frdb_stem = act(conv(z, pad1));

    for (int blk = 0; blk < cfg_.n_f; ++blk) {
        TensorF x = imfa;
        for (int base = 0; base < 3; ++base) {
            TensorF grown = conv(act(x), pad1);
            x = conv(concat_channels(x, grown, tape), Extent2{0, 0});
        }
        imfa = add(imfa, x, tape);  // block shortcut
    }
    TensorF fused_imfa = conv(imfa, Extent2{0, 0});  // f_u projection

    TensorF frdb = frdb_stem;
    for (int blk = 0; blk < cfg_.n_f; ++blk) {
        TensorF x = frdb;
        for (int base = 0; base < 3; ++base) {
            TensorF d1 = act(conv(x, padK));
            TensorF s1 = concat_channels(x, d1, tape);
            TensorF d2 = act(conv(s1, padK));
            TensorF s2 = concat_channels(s1, d2, tape);
            x = conv(s2, padK, cfg_.c_g);
        }
        frdb = add(frdb, x, tape);
    }

    TensorF zm = add(fused_imfa, frdb, tape);  // MFF: element-wise addition
    for (int s = 0; s < cfg_.upsample_stages; ++s) {
        zm = act(conv(bilinear_upsample2x(zm, tape), pad1));
    }
    TensorF out = conv(zm, pad1);  // spectral reconstructor
    if (cur != params_.size()) throw std::logic_error("CsfNet::forward: parameter walk out of sync");
    if (!tape) out = clamp01(out);
    return out;
}

TensorF decode(const CsfNet& net, const CompressedStripe& z) {
    TensorF out = net.forward(z.data, nullptr, nullptr);
    if (z.src_H > 0 && (out.shape.h != z.src_H || out.shape.w != z.src_W)) {
        throw std::invalid_argument("decode: reconstructed " + out.shape.str() + " does not match source stripe " +
                                    std::to_string(z.src_H) + "x" + std::to_string(z.src_W));
    }
    return out;
}

Eigen::MatrixXf pseudo_inverse(const Eigen::MatrixXf& psi) {
    return psi.completeOrthogonalDecomposition().pseudoInverse();
}

TensorF pinv_decode(const Eigen::MatrixXf& psi_pinv, const CompressedStripe& z, const EncoderConfig& cfg) {
    Eigen::Map<const Eigen::VectorXf> zv(z.data.data.data(), z.data.numel());
    if (psi_pinv.cols() != zv.size()) {
        throw std::invalid_argument("pinv_decode: pseudo-inverse/measurement size mismatch");
    }
    Eigen::VectorXf xv = psi_pinv * zv;
    TensorF out(Shape4{1, cfg.B, cfg.H_s, cfg.W_s},
                std::vector<float>(xv.data(), xv.data() + xv.size()));
    return clamp01(out);
}

}  // namespace rtcs
