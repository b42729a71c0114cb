#pragma once

#include <cmath>

#include "rtcs/ops.hpp"

namespace rtcs {

struct LossConfig {
    double alpha = 0.1;  // SAM-loss weight
    double eps = 1e-8;

    void validate() const {
        if (alpha < 0) throw std::invalid_argument("LossConfig: alpha must be >= 0");
        if (!(eps > 0)) throw std::invalid_argument("LossConfig: eps must be positive");
    }
};

/// Mean absolute error over all voxels. Subgradient 0 at ties.
template <typename T>
Tensor<T> l1_loss(const Tensor<T>& x, const Tensor<T>& xs, Tape<T>* tape = nullptr) {
    if (x.shape != xs.shape) {
        throw std::invalid_argument("l1_loss: shape mismatch " + x.shape.str() + " vs " + xs.shape.str());
    }
    double acc = 0;
    for (std::size_t i = 0; i < x.data.size(); ++i) acc += std::abs(static_cast<double>(x.data[i] - xs.data[i]));
    Tensor<T> y = Tensor<T>::scalar(static_cast<T>(acc / static_cast<double>(x.numel())));
    if (tape && (x.node >= 0 || xs.node >= 0)) {
        const int xn = x.node, sn = xs.node;
        Tensor<T> dx(x.shape);
        for (std::size_t i = 0; i < x.data.size(); ++i) {
            const T d = x.data[i] - xs.data[i];
            dx.data[i] = (d > T(0)) ? T(1) : (d < T(0) ? T(-1) : T(0));
        }
        const T inv_count = T(1) / static_cast<T>(x.numel());
        y.node = tape->add_node(y.shape, {xn, sn}, [xn, sn, dx, inv_count](const Tensor<T>& gy, Tape<T>& tp) {
            const T g = gy.data[0] * inv_count;
            if (xn >= 0) {
                Tensor<T>& gx = tp.grad_buffer(xn);
                for (std::size_t i = 0; i < dx.data.size(); ++i) gx.data[i] += g * dx.data[i];
            }
            if (sn >= 0) {
                Tensor<T>& gs = tp.grad_buffer(sn);
                for (std::size_t i = 0; i < dx.data.size(); ++i) gs.data[i] -= g * dx.data[i];
            }
        });
    }
    return y;
}

namespace detail {

/// Shared SAM forward over spectral vectors (channel axis), one angle per
/// (n, h, w) position. Returns the mean angle in radians.
template <typename T>
double sam_forward(const Tensor<T>& x, const Tensor<T>& xs, double eps,
                   std::vector<double>* saved_t = nullptr) {
    const std::int64_t C = x.shape.c, plane = x.shape.h * x.shape.w;
    const std::int64_t positions = x.shape.n * plane;
    double acc = 0;
    for (std::int64_t nn = 0; nn < x.shape.n; ++nn) {
        for (std::int64_t p = 0; p < plane; ++p) {
            double dot = 0, nx = 0, ns = 0;
            const std::int64_t base = nn * C * plane + p;
            for (std::int64_t c = 0; c < C; ++c) {
                const double a = x.data[static_cast<std::size_t>(base + c * plane)];
                const double b = xs.data[static_cast<std::size_t>(base + c * plane)];
                dot += a * b;
                nx += a * a;
                ns += b * b;
            }
            double t = (dot + eps) / (std::sqrt(nx) * std::sqrt(ns) + eps);
            t = std::clamp(t, -1.0, 1.0);
            if (saved_t) saved_t->push_back(t);
            acc += std::acos(t);
        }
    }
    return acc / static_cast<double>(positions);
}

}  // namespace detail

/// Spectral-angle loss in radians: mean over spatial positions of
/// acos(clip((<x,xs>+eps)/(|x||xs|+eps), -1, 1)).
template <typename T>
Tensor<T> sam_loss(const Tensor<T>& x, const Tensor<T>& xs, double eps = 1e-8, Tape<T>* tape = nullptr) {
    if (x.shape != xs.shape) {
        throw std::invalid_argument("sam_loss: shape mismatch " + x.shape.str() + " vs " + xs.shape.str());
    }
    Tensor<T> y = Tensor<T>::scalar(static_cast<T>(detail::sam_forward(x, xs, eps)));
    if (tape && (x.node >= 0 || xs.node >= 0)) {
        const int xn = x.node, sn = xs.node;
        Tensor<T> xv = x, sv = xs;
        y.node = tape->add_node(y.shape, {xn, sn}, [xn, sn, xv, sv, eps](const Tensor<T>& gy, Tape<T>& tp) {
            const std::int64_t C = xv.shape.c, plane = xv.shape.h * xv.shape.w;
            const std::int64_t positions = xv.shape.n * plane;
            const double gout = static_cast<double>(gy.data[0]) / static_cast<double>(positions);
            Tensor<T>* gx = (xn >= 0) ? &tp.grad_buffer(xn) : nullptr;
            Tensor<T>* gs = (sn >= 0) ? &tp.grad_buffer(sn) : nullptr;
            for (std::int64_t nn = 0; nn < xv.shape.n; ++nn) {
                for (std::int64_t p = 0; p < plane; ++p) {
                    double dot = 0, nx2 = 0, ns2 = 0;
                    const std::int64_t base = nn * C * plane + p;
                    for (std::int64_t c = 0; c < C; ++c) {
                        const double a = xv.data[static_cast<std::size_t>(base + c * plane)];
                        const double b = sv.data[static_cast<std::size_t>(base + c * plane)];
                        dot += a * b;
                        nx2 += a * a;
                        ns2 += b * b;
                    }
                    const double nx = std::sqrt(nx2), ns = std::sqrt(ns2);
                    const double denom = nx * ns + eps;
                    double t = (dot + eps) / denom;
                    if (t <= -1.0 || t >= 1.0) continue;  // clip active: zero derivative
                    const double dacos = -1.0 / std::sqrt(1.0 - t * t);
                    for (std::int64_t c = 0; c < C; ++c) {
                        const std::size_t idx = static_cast<std::size_t>(base + c * plane);
                        const double a = xv.data[idx], b = sv.data[idx];
                        if (gx) {
                            const double dt_da = (b - t * ns * (nx > 0 ? a / nx : 0.0)) / denom;
                            gx->data[idx] += static_cast<T>(gout * dacos * dt_da);
                        }
                        if (gs) {
                            const double dt_db = (a - t * nx * (ns > 0 ? b / ns : 0.0)) / denom;
                            gs->data[idx] += static_cast<T>(gout * dacos * dt_db);
                        }
                    }
                }
            }
        });
    }
    return y;
}

/// Eq-style total loss: mean-L1 plus alpha-weighted SAM term.
template <typename T>
Tensor<T> total_loss(const Tensor<T>& x, const Tensor<T>& xs, const LossConfig& cfg, Tape<T>* tape = nullptr) {
    cfg.validate();
    Tensor<T> l1 = l1_loss(x, xs, tape);
    if (cfg.alpha == 0) return l1;
    Tensor<T> sam = sam_loss(x, xs, cfg.eps, tape);
    return add(l1, scale(sam, static_cast<T>(cfg.alpha), tape), tape);
}

/// Mask-augmented loss: the clean branch pays the total loss against X, and
/// the masked branch is supervised against the complete X as well (the net
/// restores holes rather than reproducing them). `literal` switches to
/// supervising the masked branch against X*mask instead.
template <typename T>
Tensor<T> aug_loss(const Tensor<T>& x, const Tensor<T>& xs_clean, const Tensor<T>& xs_masked,
                   const Tensor<T>& mask, const LossConfig& cfg, Tape<T>* tape = nullptr,
                   bool literal = false) {
    if (mask.shape != x.shape) {
        throw std::invalid_argument("aug_loss: mask shape mismatch " + mask.shape.str() + " vs " + x.shape.str());
    }
    Tensor<T> clean_term = total_loss(x, xs_clean, cfg, tape);
    Tensor<T> masked_term;
    if (literal) {
        Tensor<T> target = mul(x, mask);  // constant target, off tape
        masked_term = total_loss(target, xs_masked, cfg, tape);
    } else {
        masked_term = total_loss(x, xs_masked, cfg, tape);
    }
    return add(clean_term, masked_term, tape);
}

}  // namespace rtcs
