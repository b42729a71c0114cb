#pragma once

#include <Eigen/Core>
#include <algorithm>
#include <cmath>
#include <utility>

#include "rtcs/tape.hpp"
#include "rtcs/tensor.hpp"

namespace rtcs {

struct Extent2 {
    int h = 0;
    int w = 0;
};

namespace detail {

template <typename T>
using MatRM = Eigen::Matrix<T, Eigen::Dynamic, Eigen::Dynamic, Eigen::RowMajor>;

inline std::int64_t conv_out_dim(std::int64_t in, int pad, int k, int stride) {
    return (in + 2 * pad - k) / stride + 1;
}

/// Gathers the receptive fields of one (sample, group) slice into a
/// (c_per_g*kh*kw) x (oh*ow) row-major column buffer. Zero padding.
template <typename T>
void im2col(const Tensor<T>& x, std::int64_t sample, std::int64_t c0, std::int64_t c_per_g,
            int kh, int kw, int sh, int sw, int ph, int pw,
            std::int64_t oh, std::int64_t ow, T* cols) {
    const std::int64_t H = x.shape.h, W = x.shape.w;
    std::int64_t row = 0;
    for (std::int64_t c = 0; c < c_per_g; ++c) {
        const T* plane = x.data.data() + (((sample * x.shape.c) + c0 + c) * H) * W;
        for (int ky = 0; ky < kh; ++ky) {
            for (int kx = 0; kx < kw; ++kx, ++row) {
                T* dst = cols + row * (oh * ow);
                for (std::int64_t oy = 0; oy < oh; ++oy) {
                    const std::int64_t iy = oy * sh - ph + ky;
                    if (iy < 0 || iy >= H) {
                        for (std::int64_t ox = 0; ox < ow; ++ox) dst[oy * ow + ox] = T(0);
                        continue;
                    }
                    const T* src_row = plane + iy * W;
                    for (std::int64_t ox = 0; ox < ow; ++ox) {
                        const std::int64_t ix = ox * sw - pw + kx;
                        dst[oy * ow + ox] = (ix >= 0 && ix < W) ? src_row[ix] : T(0);
                    }
                }
            }
        }
    }
}

/// Scatter-add transpose of im2col: accumulates the column buffer back into
/// the (sample, group) slice of `gx`.
template <typename T>
void col2im_add(Tensor<T>& gx, std::int64_t sample, std::int64_t c0, std::int64_t c_per_g,
                int kh, int kw, int sh, int sw, int ph, int pw,
                std::int64_t oh, std::int64_t ow, const T* cols) {
    const std::int64_t H = gx.shape.h, W = gx.shape.w;
    std::int64_t row = 0;
    for (std::int64_t c = 0; c < c_per_g; ++c) {
        T* plane = gx.data.data() + (((sample * gx.shape.c) + c0 + c) * H) * W;
        for (int ky = 0; ky < kh; ++ky) {
            for (int kx = 0; kx < kw; ++kx, ++row) {
                const T* src = cols + row * (oh * ow);
                for (std::int64_t oy = 0; oy < oh; ++oy) {
                    const std::int64_t iy = oy * sh - ph + ky;
                    if (iy < 0 || iy >= H) continue;
                    T* dst_row = plane + iy * W;
                    for (std::int64_t ox = 0; ox < ow; ++ox) {
                        const std::int64_t ix = ox * sw - pw + kx;
                        if (ix >= 0 && ix < W) dst_row[ix] += src[oy * ow + ox];
                    }
                }
            }
        }
    }
}

template <typename T>
Tensor<T> conv2d_forward(const Tensor<T>& x, const Tensor<T>& w,
                         Extent2 stride, Extent2 pad, int groups) {
    const std::int64_t oc = w.shape.n, icg = w.shape.c;
    const int kh = static_cast<int>(w.shape.h), kw = static_cast<int>(w.shape.w);
    const std::int64_t oh = conv_out_dim(x.shape.h, pad.h, kh, stride.h);
    const std::int64_t ow = conv_out_dim(x.shape.w, pad.w, kw, stride.w);
    const std::int64_t ocg = oc / groups;
    const std::int64_t K = icg * kh * kw, M = oh * ow;

    Tensor<T> y(Shape4{x.shape.n, oc, oh, ow});
    std::vector<T> cols(static_cast<std::size_t>(K * M));
    for (std::int64_t nn = 0; nn < x.shape.n; ++nn) {
        for (int g = 0; g < groups; ++g) {
            im2col(x, nn, g * icg, icg, kh, kw, stride.h, stride.w, pad.h, pad.w, oh, ow, cols.data());
            Eigen::Map<const MatRM<T>> Wg(w.data.data() + g * ocg * K, ocg, K);
            Eigen::Map<const MatRM<T>> C(cols.data(), K, M);
            Eigen::Map<MatRM<T>> Y(y.data.data() + ((nn * oc) + g * ocg) * M, ocg, M);
            Y.noalias() = Wg * C;
        }
    }
    return y;
}

}  // namespace detail

/// 2-D convolution with zero padding and channel groups.
/// weight shape: (out_c, in_c/groups, k_h, k_w).
template <typename T>
Tensor<T> conv2d(const Tensor<T>& x, const Tensor<T>& w,
                 Extent2 stride, Extent2 pad, int groups = 1, Tape<T>* tape = nullptr) {
    if (groups < 1) throw std::invalid_argument("conv2d: groups must be >= 1");
    if (stride.h < 1 || stride.w < 1) throw std::invalid_argument("conv2d: stride must be >= 1");
    if (pad.h < 0 || pad.w < 0) throw std::invalid_argument("conv2d: padding must be >= 0");
    if (x.shape.c % groups != 0 || w.shape.n % groups != 0) {
        throw std::invalid_argument("conv2d: channel counts not divisible by groups (in_c=" +
                                    std::to_string(x.shape.c) + ", out_c=" + std::to_string(w.shape.n) +
                                    ", groups=" + std::to_string(groups) + ")");
    }
    if (w.shape.c != x.shape.c / groups) {
        throw std::invalid_argument("conv2d: weight expects in_c/groups=" + std::to_string(w.shape.c) +
                                    " channels but input has in_c=" + std::to_string(x.shape.c) +
                                    " with groups=" + std::to_string(groups));
    }
    if (x.shape.h + 2 * pad.h < w.shape.h || x.shape.w + 2 * pad.w < w.shape.w) {
        throw std::invalid_argument("conv2d: kernel " + std::to_string(w.shape.h) + "x" +
                                    std::to_string(w.shape.w) + " larger than padded input " +
                                    x.shape.str());
    }

    Tensor<T> y = detail::conv2d_forward(x, w, stride, pad, groups);

    if (tape && (x.node >= 0 || w.node >= 0)) {
        const int xn = x.node, wn = w.node;
        Tensor<T> xs = x, ws = w;  // saved activations
        y.node = tape->add_node(
            y.shape, {xn, wn},
            [xs, ws, stride, pad, groups, xn, wn](const Tensor<T>& gy, Tape<T>& tp) {
                const std::int64_t oc = ws.shape.n, icg = ws.shape.c;
                const int kh = static_cast<int>(ws.shape.h), kw = static_cast<int>(ws.shape.w);
                const std::int64_t oh = gy.shape.h, ow = gy.shape.w;
                const std::int64_t ocg = oc / groups;
                const std::int64_t K = icg * kh * kw, M = oh * ow;
                std::vector<T> cols(static_cast<std::size_t>(K * M));
                Tensor<T>* gw = (wn >= 0) ? &tp.grad_buffer(wn) : nullptr;
                Tensor<T>* gx = (xn >= 0) ? &tp.grad_buffer(xn) : nullptr;
                for (std::int64_t nn = 0; nn < xs.shape.n; ++nn) {
                    for (int g = 0; g < groups; ++g) {
                        Eigen::Map<const detail::MatRM<T>> GY(
                            gy.data.data() + ((nn * oc) + g * ocg) * M, ocg, M);
                        if (gw) {
                            detail::im2col(xs, nn, g * icg, icg, kh, kw, stride.h, stride.w,
                                           pad.h, pad.w, oh, ow, cols.data());
                            Eigen::Map<const detail::MatRM<T>> C(cols.data(), K, M);
                            Eigen::Map<detail::MatRM<T>> GW(gw->data.data() + g * ocg * K, ocg, K);
                            GW.noalias() += GY * C.transpose();
                        }
                        if (gx) {
                            Eigen::Map<const detail::MatRM<T>> Wg(ws.data.data() + g * ocg * K, ocg, K);
                            Eigen::Map<detail::MatRM<T>> GC(cols.data(), K, M);
                            GC.noalias() = Wg.transpose() * GY;
                            detail::col2im_add(*gx, nn, g * icg, icg, kh, kw, stride.h, stride.w,
                                               pad.h, pad.w, oh, ow, cols.data());
                        }
                    }
                }
            });
    }
    return y;
}

namespace detail {

/// Half-pixel-center sample positions for a 2x upsample of a size-`in` axis.
/// A size-1 source axis replicates.
struct LerpTap {
    std::int64_t i0, i1;
    double t;  // weight on i1
};

inline std::vector<LerpTap> upsample2x_taps(std::int64_t in) {
    std::vector<LerpTap> taps(static_cast<std::size_t>(2 * in));
    for (std::int64_t o = 0; o < 2 * in; ++o) {
        double s = (static_cast<double>(o) + 0.5) / 2.0 - 0.5;
        if (s < 0) s = 0;
        if (s > static_cast<double>(in - 1)) s = static_cast<double>(in - 1);
        std::int64_t i0 = static_cast<std::int64_t>(std::floor(s));
        if (i0 > in - 2) i0 = std::max<std::int64_t>(in - 2, 0);
        std::int64_t i1 = std::min(i0 + 1, in - 1);
        taps[static_cast<std::size_t>(o)] = {i0, i1, s - static_cast<double>(i0)};
    }
    return taps;
}

}  // namespace detail

/// Bilinear 2x spatial upsampling with half-pixel centers (align-corners false).
template <typename T>
Tensor<T> bilinear_upsample2x(const Tensor<T>& x, Tape<T>* tape = nullptr) {
    const auto ty = detail::upsample2x_taps(x.shape.h);
    const auto tx = detail::upsample2x_taps(x.shape.w);
    Tensor<T> y(Shape4{x.shape.n, x.shape.c, 2 * x.shape.h, 2 * x.shape.w});
    const std::int64_t planes = x.shape.n * x.shape.c;
    const std::int64_t H = x.shape.h, W = x.shape.w;
    for (std::int64_t p = 0; p < planes; ++p) {
        const T* src = x.data.data() + p * H * W;
        T* dst = y.data.data() + p * 4 * H * W;
        for (std::int64_t oy = 0; oy < 2 * H; ++oy) {
            const auto& a = ty[static_cast<std::size_t>(oy)];
            for (std::int64_t ox = 0; ox < 2 * W; ++ox) {
                const auto& b = tx[static_cast<std::size_t>(ox)];
                const double v00 = src[a.i0 * W + b.i0], v01 = src[a.i0 * W + b.i1];
                const double v10 = src[a.i1 * W + b.i0], v11 = src[a.i1 * W + b.i1];
                const double top = v00 + (v01 - v00) * b.t;
                const double bot = v10 + (v11 - v10) * b.t;
                dst[oy * 2 * W + ox] = static_cast<T>(top + (bot - top) * a.t);
            }
        }
    }
    if (tape && x.node >= 0) {
        const int xn = x.node;
        const Shape4 xshape = x.shape;
        y.node = tape->add_node(y.shape, {xn}, [xn, xshape, ty, tx](const Tensor<T>& gy, Tape<T>& tp) {
            Tensor<T>& gx = tp.grad_buffer(xn);
            const std::int64_t planes = xshape.n * xshape.c, H = xshape.h, W = xshape.w;
            for (std::int64_t p = 0; p < planes; ++p) {
                T* dst = gx.data.data() + p * H * W;
                const T* src = gy.data.data() + p * 4 * H * W;
                for (std::int64_t oy = 0; oy < 2 * H; ++oy) {
                    const auto& a = ty[static_cast<std::size_t>(oy)];
                    for (std::int64_t ox = 0; ox < 2 * W; ++ox) {
                        const auto& b = tx[static_cast<std::size_t>(ox)];
                        const double g = src[oy * 2 * W + ox];
                        dst[a.i0 * W + b.i0] += static_cast<T>(g * (1 - a.t) * (1 - b.t));
                        dst[a.i0 * W + b.i1] += static_cast<T>(g * (1 - a.t) * b.t);
                        dst[a.i1 * W + b.i0] += static_cast<T>(g * a.t * (1 - b.t));
                        dst[a.i1 * W + b.i1] += static_cast<T>(g * a.t * b.t);
                    }
                }
            }
        });
    }
    return y;
}

/// y = x for x >= 0, slope*x otherwise. Subgradient at 0 is `slope`.
template <typename T>
Tensor<T> leaky_relu(const Tensor<T>& x, T slope, Tape<T>* tape = nullptr) {
    if (!(slope >= T(0) && slope < T(1))) throw std::invalid_argument("leaky_relu: slope must be in [0,1)");
    Tensor<T> y(x.shape);
    for (std::size_t i = 0; i < x.data.size(); ++i) {
        y.data[i] = x.data[i] >= T(0) ? x.data[i] : slope * x.data[i];
    }
    if (tape && x.node >= 0) {
        const int xn = x.node;
        Tensor<T> xs = x;
        y.node = tape->add_node(y.shape, {xn}, [xn, xs, slope](const Tensor<T>& gy, Tape<T>& tp) {
            Tensor<T>& gx = tp.grad_buffer(xn);
            for (std::size_t i = 0; i < gy.data.size(); ++i) {
                gx.data[i] += gy.data[i] * (xs.data[i] > T(0) ? T(1) : slope);
            }
        });
    }
    return y;
}

/// Channel concatenation, a's channels first. Spatial/batch dims must agree.
template <typename T>
Tensor<T> concat_channels(const Tensor<T>& a, const Tensor<T>& b, Tape<T>* tape = nullptr) {
    if (a.shape.n != b.shape.n || a.shape.h != b.shape.h || a.shape.w != b.shape.w) {
        throw std::invalid_argument("concat_channels: batch/spatial mismatch " + a.shape.str() +
                                    " vs " + b.shape.str());
    }
    Tensor<T> y(Shape4{a.shape.n, a.shape.c + b.shape.c, a.shape.h, a.shape.w});
    const std::int64_t plane = a.shape.h * a.shape.w;
    for (std::int64_t nn = 0; nn < a.shape.n; ++nn) {
        std::copy_n(a.data.data() + nn * a.shape.c * plane, a.shape.c * plane,
                    y.data.data() + nn * y.shape.c * plane);
        std::copy_n(b.data.data() + nn * b.shape.c * plane, b.shape.c * plane,
                    y.data.data() + (nn * y.shape.c + a.shape.c) * plane);
    }
    if (tape && (a.node >= 0 || b.node >= 0)) {
        const int an = a.node, bn = b.node;
        const Shape4 as = a.shape, bs = b.shape;
        y.node = tape->add_node(y.shape, {an, bn}, [an, bn, as, bs](const Tensor<T>& gy, Tape<T>& tp) {
            const std::int64_t plane = as.h * as.w;
            const std::int64_t yc = as.c + bs.c;
            if (an >= 0) {
                Tensor<T>& ga = tp.grad_buffer(an);
                for (std::int64_t nn = 0; nn < as.n; ++nn) {
                    const T* src = gy.data.data() + nn * yc * plane;
                    T* dst = ga.data.data() + nn * as.c * plane;
                    for (std::int64_t i = 0; i < as.c * plane; ++i) dst[i] += src[i];
                }
            }
            if (bn >= 0) {
                Tensor<T>& gb = tp.grad_buffer(bn);
                for (std::int64_t nn = 0; nn < bs.n; ++nn) {
                    const T* src = gy.data.data() + (nn * yc + as.c) * plane;
                    T* dst = gb.data.data() + nn * bs.c * plane;
                    for (std::int64_t i = 0; i < bs.c * plane; ++i) dst[i] += src[i];
                }
            }
        });
    }
    return y;
}

enum class EwKind { Add, Sub, Mul };

template <typename T>
Tensor<T> elementwise(const Tensor<T>& a, const Tensor<T>& b, EwKind kind, Tape<T>* tape = nullptr) {
    if (a.shape != b.shape) {
        throw std::invalid_argument("elementwise: shape mismatch " + a.shape.str() + " vs " + b.shape.str());
    }
    Tensor<T> y(a.shape);
    for (std::size_t i = 0; i < a.data.size(); ++i) {
        switch (kind) {
            case EwKind::Add: y.data[i] = a.data[i] + b.data[i]; break;
            case EwKind::Sub: y.data[i] = a.data[i] - b.data[i]; break;
            case EwKind::Mul: y.data[i] = a.data[i] * b.data[i]; break;
        }
    }
    if (tape && (a.node >= 0 || b.node >= 0)) {
        const int an = a.node, bn = b.node;
        Tensor<T> as, bs;
        if (kind == EwKind::Mul) { as = a; bs = b; }
        y.node = tape->add_node(y.shape, {an, bn}, [an, bn, as, bs, kind](const Tensor<T>& gy, Tape<T>& tp) {
            if (an >= 0) {
                Tensor<T>& ga = tp.grad_buffer(an);
                for (std::size_t i = 0; i < gy.data.size(); ++i) {
                    ga.data[i] += (kind == EwKind::Mul) ? gy.data[i] * bs.data[i] : gy.data[i];
                }
            }
            if (bn >= 0) {
                Tensor<T>& gb = tp.grad_buffer(bn);
                for (std::size_t i = 0; i < gy.data.size(); ++i) {
                    switch (kind) {
                        case EwKind::Add: gb.data[i] += gy.data[i]; break;
                        case EwKind::Sub: gb.data[i] -= gy.data[i]; break;
                        case EwKind::Mul: gb.data[i] += gy.data[i] * as.data[i]; break;
                    }
                }
            }
        });
    }
    return y;
}

template <typename T>
Tensor<T> add(const Tensor<T>& a, const Tensor<T>& b, Tape<T>* tape = nullptr) {
    return elementwise(a, b, EwKind::Add, tape);
}
template <typename T>
Tensor<T> sub(const Tensor<T>& a, const Tensor<T>& b, Tape<T>* tape = nullptr) {
    return elementwise(a, b, EwKind::Sub, tape);
}
template <typename T>
Tensor<T> mul(const Tensor<T>& a, const Tensor<T>& b, Tape<T>* tape = nullptr) {
    return elementwise(a, b, EwKind::Mul, tape);
}

enum class ReduceKind { Sum, Mean };

template <typename T>
Tensor<T> reduce(const Tensor<T>& x, ReduceKind kind, Tape<T>* tape = nullptr) {
    double acc = 0;
    for (T v : x.data) acc += static_cast<double>(v);
    const T denom = (kind == ReduceKind::Mean) ? static_cast<T>(x.numel()) : T(1);
    Tensor<T> y = Tensor<T>::scalar(static_cast<T>(acc) / denom);
    if (tape && x.node >= 0) {
        const int xn = x.node;
        y.node = tape->add_node(y.shape, {xn}, [xn, denom](const Tensor<T>& gy, Tape<T>& tp) {
            Tensor<T>& gx = tp.grad_buffer(xn);
            const T g = gy.data[0] / denom;
            for (auto& v : gx.data) v += g;
        });
    }
    return y;
}

/// y = c * x for a compile-time-constant scalar c (not differentiated w.r.t. c).
template <typename T>
Tensor<T> scale(const Tensor<T>& x, T c, Tape<T>* tape = nullptr) {
    Tensor<T> y(x.shape);
    for (std::size_t i = 0; i < x.data.size(); ++i) y.data[i] = c * x.data[i];
    if (tape && x.node >= 0) {
        const int xn = x.node;
        y.node = tape->add_node(y.shape, {xn}, [xn, c](const Tensor<T>& gy, Tape<T>& tp) {
            Tensor<T>& gx = tp.grad_buffer(xn);
            for (std::size_t i = 0; i < gy.data.size(); ++i) gx.data[i] += c * gy.data[i];
        });
    }
    return y;
}

/// Per-channel bias add; bias shape (1, C, 1, 1).
template <typename T>
Tensor<T> bias_add(const Tensor<T>& x, const Tensor<T>& b, Tape<T>* tape = nullptr) {
    if (b.shape.n != 1 || b.shape.h != 1 || b.shape.w != 1 || b.shape.c != x.shape.c) {
        throw std::invalid_argument("bias_add: bias must be (1,C,1,1) with C=" + std::to_string(x.shape.c));
    }
    Tensor<T> y(x.shape);
    const std::int64_t plane = x.shape.h * x.shape.w;
    for (std::int64_t nn = 0; nn < x.shape.n; ++nn) {
        for (std::int64_t c = 0; c < x.shape.c; ++c) {
            const T bc = b.data[static_cast<std::size_t>(c)];
            const T* src = x.data.data() + (nn * x.shape.c + c) * plane;
            T* dst = y.data.data() + (nn * x.shape.c + c) * plane;
            for (std::int64_t i = 0; i < plane; ++i) dst[i] = src[i] + bc;
        }
    }
    if (tape && (x.node >= 0 || b.node >= 0)) {
        const int xn = x.node, bnode = b.node;
        const Shape4 xs = x.shape;
        y.node = tape->add_node(y.shape, {xn, bnode}, [xn, bnode, xs](const Tensor<T>& gy, Tape<T>& tp) {
            const std::int64_t plane = xs.h * xs.w;
            if (xn >= 0) {
                Tensor<T>& gx = tp.grad_buffer(xn);
                for (std::size_t i = 0; i < gy.data.size(); ++i) gx.data[i] += gy.data[i];
            }
            if (bnode >= 0) {
                Tensor<T>& gb = tp.grad_buffer(bnode);
                for (std::int64_t nn = 0; nn < xs.n; ++nn) {
                    for (std::int64_t c = 0; c < xs.c; ++c) {
                        const T* src = gy.data.data() + (nn * xs.c + c) * plane;
                        double acc = 0;
                        for (std::int64_t i = 0; i < plane; ++i) acc += static_cast<double>(src[i]);
                        gb.data[static_cast<std::size_t>(c)] += static_cast<T>(acc);
                    }
                }
            }
        });
    }
    return y;
}

/// Clamps to [0,1]; inference-side only (no tape overload).
template <typename T>
Tensor<T> clamp01(const Tensor<T>& x) {
    Tensor<T> y(x.shape);
    for (std::size_t i = 0; i < x.data.size(); ++i) y.data[i] = std::clamp(x.data[i], T(0), T(1));
    return y;
}

}  // namespace rtcs
