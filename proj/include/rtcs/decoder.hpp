#pragma once

#include <vector>

#include "rtcs/encoder.hpp"
#include "rtcs/optimizer.hpp"

namespace rtcs {

/// Two-stream decoder configuration. fuse_width (the f_rec input width)
/// equals frdb_width so the element-wise fusion of the two branches is
/// shape-compatible; at the full profile defaults it is 96.
struct DecoderConfig {
    int n_f = 8;            // blocks per branch
    int N_base = 64;        // IMFA branch width
    int c_s = 16;           // IMFA bottleneck growth channels
    int frdb_width = 96;    // FRDB branch width (= fusion width)
    int frdb_growth = 4;    // FRDB dense-growth channels
    int c_g = 4;            // FRDB grouped-conv groups
    int k_imfa = 3;
    int k_frdb = 9;
    int upsample_stages = 2;
    std::int64_t B_out = 0;
    float lrelu_slope = 0.2f;

    void validate() const;
};

/// Closed-form parameter total of encoder + decoder for the given configs.
std::int64_t param_count(const DecoderConfig& cfg, const EncoderConfig& enc);

/// Tape binding of a parameter set: watched copies plus their node ids.
struct TapeBinding {
    std::vector<TensorF> watched;
};

/// CSF-Net: IMFA branch (3x3 kernels), FRDB branch (9x9 grouped kernels),
/// element-wise fusion, bilinear upsampling stages, spectral reconstructor.
class CsfNet {
 public:
    CsfNet(const DecoderConfig& cfg, const EncoderConfig& enc, std::uint64_t seed);

    const DecoderConfig& config() const { return cfg_; }
    std::vector<Parameter<float>>& params() { return params_; }
    const std::vector<Parameter<float>>& params() const { return params_; }
    std::int64_t actual_param_count() const;

    /// Watches every parameter on the tape (call once per tape, before forward).
    TapeBinding bind(Tape<float>& tape) const;

    /// Adds the tape's gradients for a bound forward into each Parameter.grad.
    void collect_grads(Tape<float>& tape, const TapeBinding& binding);

    /// Forward pass. With a tape, pass the binding from bind(); output is left
    /// unclamped so training losses see raw values. Without a tape the output
    /// is clamped to [0,1].
    TensorF forward(const TensorF& z, Tape<float>* tape = nullptr,
                    const TapeBinding* binding = nullptr) const;

 private:
    DecoderConfig cfg_;
    std::int64_t in_channels_;
    std::vector<Parameter<float>> params_;

    const TensorF& p(std::size_t i, const TapeBinding* b) const {
        return b ? b->watched[i] : params_[i].value;
    }
};

/// Runs the decoder on a compressed stripe and checks the shape contract.
TensorF decode(const CsfNet& net, const CompressedStripe& z);

/// Minimum-norm least-squares pseudo-inverse of a measurement matrix.
Eigen::MatrixXf pseudo_inverse(const Eigen::MatrixXf& psi);

/// Linear-decoder baseline: X = pinv(Psi) * vec(Z), clamped to [0,1].
/// `psi_pinv` comes from pseudo_inverse(as_measurement_matrix(...)).
TensorF pinv_decode(const Eigen::MatrixXf& psi_pinv, const CompressedStripe& z, const EncoderConfig& cfg);

}  // namespace rtcs
