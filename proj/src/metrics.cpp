#include "rtcs/metrics.hpp"

#include <cmath>
#include <stdexcept>

#include "rtcs/losses.hpp"

namespace rtcs {

namespace {
double rms_error(const TensorF& x, const TensorF& xs) {
    if (x.shape != xs.shape) {
        throw std::invalid_argument("metrics: shape mismatch " + x.shape.str() + " vs " + xs.shape.str());
    }
    double acc = 0;
    for (std::size_t i = 0; i < x.data.size(); ++i) {
        const double d = static_cast<double>(x.data[i]) - static_cast<double>(xs.data[i]);
        acc += d * d;
    }
    return std::sqrt(acc / static_cast<double>(x.numel()));
}
}  // namespace

double psnr(const TensorF& x, const TensorF& xs) {
    const double rms = rms_error(x, xs);
    if (rms == 0) return 99.0;
    return std::min(99.0, 20.0 * std::log10(1.0 / rms));
}

double rmse(const TensorF& x, const TensorF& xs, double native_scale) {
    if (!(native_scale > 0)) throw std::invalid_argument("rmse: native_scale must be positive");
    return rms_error(x, xs) * native_scale;
}

double sam_metric(const TensorF& x, const TensorF& xs) {
    if (x.shape != xs.shape) {
        throw std::invalid_argument("sam_metric: shape mismatch " + x.shape.str() + " vs " + xs.shape.str());
    }
    const double radians = detail::sam_forward(x, xs, 1e-8);
    return radians * 180.0 / M_PI;
}

MetricsReport compute_metrics(const TensorF& x, const TensorF& xs, double native_scale) {
    return MetricsReport{psnr(x, xs), rmse(x, xs, native_scale), sam_metric(x, xs)};
}

}  // namespace rtcs
