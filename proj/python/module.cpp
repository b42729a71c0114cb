#include <pybind11/numpy.h>
#include <pybind11/pybind11.h>
#include <pybind11/stl.h>

#include "rtcs/decoder.hpp"
#include "rtcs/degradation.hpp"
#include "rtcs/encoder.hpp"
#include "rtcs/hsi_data.hpp"
#include "rtcs/metrics.hpp"

namespace py = pybind11;
using rtcs::EncoderConfig;
using rtcs::TensorF;

namespace {

using FloatArray = py::array_t<float, py::array::c_style | py::array::forcecast>;

/// Accepts (C,H,W) or (N,C,H,W) float arrays.
TensorF to_tensor(const FloatArray& a) {
    const auto ndim = a.ndim();
    rtcs::Shape4 s;
    if (ndim == 3) {
        s = {1, a.shape(0), a.shape(1), a.shape(2)};
    } else if (ndim == 4) {
        s = {a.shape(0), a.shape(1), a.shape(2), a.shape(3)};
    } else {
        throw std::invalid_argument("expected a 3-D (C,H,W) or 4-D (N,C,H,W) array");
    }
    TensorF t(s);
    std::copy(a.data(), a.data() + t.numel(), t.data.begin());
    return t;
}

py::array_t<float> from_tensor(const TensorF& t, bool squeeze_batch = true) {
    std::vector<py::ssize_t> dims;
    if (!(squeeze_batch && t.shape.n == 1)) dims.push_back(t.shape.n);
    dims.insert(dims.end(), {static_cast<py::ssize_t>(t.shape.c), static_cast<py::ssize_t>(t.shape.h),
                             static_cast<py::ssize_t>(t.shape.w)});
    py::array_t<float> out(dims);
    std::copy(t.data.begin(), t.data.end(), out.mutable_data());
    return out;
}

}  // namespace

PYBIND11_MODULE(_rtcs, m) {
    m.doc() = "RTCS hyperspectral compressed-sensing core";

    py::class_<EncoderConfig>(m, "EncoderConfig")
        .def_readonly("B", &EncoderConfig::B)
        .def_readonly("H_s", &EncoderConfig::H_s)
        .def_readonly("W_s", &EncoderConfig::W_s)
        .def_readonly("b", &EncoderConfig::b)
        .def_property_readonly("stride", [](const EncoderConfig& c) { return c.stride.h; })
        .def_property_readonly("padding", [](const EncoderConfig& c) { return c.padding.h; })
        .def_property_readonly("out_h", [](const EncoderConfig& c) { return c.out_h(); })
        .def_property_readonly("out_w", [](const EncoderConfig& c) { return c.out_w(); })
        .def_property_readonly("achieved_rate",
                               [](const EncoderConfig& c) { return c.achieved_rate(); })
        .def("__repr__", [](const EncoderConfig& c) {
            return "EncoderConfig(b=" + std::to_string(c.b) + ", out_h=" + std::to_string(c.out_h()) +
                   ", out_w=" + std::to_string(c.out_w()) + ")";
        });

    m.def("shape_for_rate", &rtcs::shape_for_rate, py::arg("B"), py::arg("H_s"), py::arg("W_s"),
          py::arg("s_r"), "Measurement geometry for a target sampling rate");
    m.def("mac_count", &rtcs::mac_count);
    m.def("gram_cost", &rtcs::gram_cost, py::arg("H_s"), py::arg("W_s"), py::arg("B"));

    m.def(
        "init_encoder_weights",
        [](const EncoderConfig& cfg, std::uint64_t seed) {
            return from_tensor(rtcs::init_encoder_weights(cfg, seed), false);
        },
        py::arg("cfg"), py::arg("seed"));

    m.def(
        "encode",
        [](const FloatArray& stripe, const FloatArray& weights, const EncoderConfig& cfg) {
            return from_tensor(rtcs::encode(to_tensor(stripe), to_tensor(weights), cfg).data);
        },
        py::arg("stripe"), py::arg("weights"), py::arg("cfg"),
        "Z = Psi X as a strided 9x1 convolution");

    m.def(
        "as_measurement_matrix",
        [](const FloatArray& weights, const EncoderConfig& cfg) {
            const Eigen::MatrixXf psi = rtcs::as_measurement_matrix(to_tensor(weights), cfg);
            py::array_t<float> out({static_cast<py::ssize_t>(psi.rows()),
                                    static_cast<py::ssize_t>(psi.cols())});
            for (Eigen::Index r = 0; r < psi.rows(); ++r) {
                for (Eigen::Index c = 0; c < psi.cols(); ++c) {
                    out.mutable_at(r, c) = psi(r, c);
                }
            }
            return out;
        },
        py::arg("weights"), py::arg("cfg"));

    m.def(
        "synth_scene",
        [](int K, std::int64_t B, std::int64_t H, std::int64_t W, std::uint64_t seed) {
            return from_tensor(rtcs::synth_scene(K, B, H, W, seed).as_tensor());
        },
        py::arg("K"), py::arg("B"), py::arg("H"), py::arg("W"), py::arg("seed"));

    m.def(
        "gen_mask",
        [](const std::string& kind, std::int64_t lo, std::int64_t hi, std::int64_t B, std::int64_t H,
           std::int64_t W, std::uint64_t seed) {
            rtcs::MaskSpec spec;
            spec.kind = rtcs::mask_kind_from_string(kind);
            spec.band_lo = lo;
            spec.band_hi = hi;
            spec.seed = seed;
            return from_tensor(rtcs::gen_mask(spec, B, H, W));
        },
        py::arg("kind"), py::arg("band_lo"), py::arg("band_hi"), py::arg("B"), py::arg("H"),
        py::arg("W"), py::arg("seed") = 0);

    m.def(
        "add_awgn",
        [](const FloatArray& z, double snr_db, std::uint64_t seed) {
            return from_tensor(rtcs::add_awgn(to_tensor(z), rtcs::NoiseSpec{snr_db, seed}));
        },
        py::arg("z"), py::arg("snr_db"), py::arg("seed") = 0);

    m.def("psnr", [](const FloatArray& x, const FloatArray& xs) {
        return rtcs::psnr(to_tensor(x), to_tensor(xs));
    });
    m.def(
        "rmse",
        [](const FloatArray& x, const FloatArray& xs, double native_scale) {
            return rtcs::rmse(to_tensor(x), to_tensor(xs), native_scale);
        },
        py::arg("x"), py::arg("xs"), py::arg("native_scale") = 1.0);
    m.def("sam", [](const FloatArray& x, const FloatArray& xs) {
        return rtcs::sam_metric(to_tensor(x), to_tensor(xs));
    });

    m.def(
        "quantize_pq",
        [](const FloatArray& weights) {
            const rtcs::QuantizedEncoder q = rtcs::quantize_pq(to_tensor(weights));
            py::array_t<std::int8_t> codes({static_cast<py::ssize_t>(q.shape.n),
                                            static_cast<py::ssize_t>(q.shape.c),
                                            static_cast<py::ssize_t>(q.shape.h),
                                            static_cast<py::ssize_t>(q.shape.w)});
            std::copy(q.weights_i8.begin(), q.weights_i8.end(), codes.mutable_data());
            return py::make_tuple(codes, q.scale);
        },
        py::arg("weights"), "Symmetric per-tensor int8 codes and their scale");
}
