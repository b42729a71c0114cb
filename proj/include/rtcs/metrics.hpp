#pragma once

#include <span>

#include "rtcs/tensor.hpp"

namespace rtcs {

/// PSNR in dB (peak 1 on normalized data, capped at 99), RMSE rescaled to the
/// cube's native range, mean spectral angle in degrees.
struct MetricsReport {
    double psnr = 0;
    double rmse = 0;
    double sam = 0;
};

/// PSNR on [0,1]-normalized data, 99 dB cap for identical inputs.
double psnr(const TensorF& x, const TensorF& xs);

/// Root-mean-square error scaled back to the native data range.
double rmse(const TensorF& x, const TensorF& xs, double native_scale);

/// Mean per-pixel spectral angle in degrees (channel axis is spectral).
double sam_metric(const TensorF& x, const TensorF& xs);

MetricsReport compute_metrics(const TensorF& x, const TensorF& xs, double native_scale);

}  // namespace rtcs
