#pragma once

#include <cmath>
#include <cstdint>
#include <limits>
#include <sstream>
#include <stdexcept>
#include <string>
#include <vector>

namespace rtcs {

/// Dense 4-D shape in (batch, channel, row, column) order.
struct Shape4 {
    std::int64_t n = 1;
    std::int64_t c = 1;
    std::int64_t h = 1;
    std::int64_t w = 1;

    std::int64_t numel() const { return n * c * h * w; }

    bool operator==(const Shape4& o) const {
        return n == o.n && c == o.c && h == o.h && w == o.w;
    }
    bool operator!=(const Shape4& o) const { return !(*this == o); }

    std::string str() const {
        std::ostringstream os;
        os << "(" << n << "," << c << "," << h << "," << w << ")";
        return os.str();
    }
};

inline void check_shape_valid(const Shape4& s, const char* what) {
    if (s.n < 1 || s.c < 1 || s.h < 1 || s.w < 1) {
        throw std::invalid_argument(std::string(what) + ": all dimensions must be >= 1, got " + s.str());
    }
    // overflow guard on the element count
    const std::int64_t limit = std::numeric_limits<std::int64_t>::max();
    std::int64_t p = 1;
    for (std::int64_t d : {s.n, s.c, s.h, s.w}) {
        if (d != 0 && p > limit / d) {
            throw std::invalid_argument(std::string(what) + ": element count overflows for " + s.str());
        }
        p *= d;
    }
}

/// Dense row-major 4-D tensor. `node` links the tensor to a Tape when the
/// value participates in a recorded forward pass (-1 means not recorded).
template <typename T>
struct Tensor {
    Shape4 shape;
    std::vector<T> data;
    int node = -1;

    Tensor() = default;
    explicit Tensor(const Shape4& s) : shape(s), data(static_cast<std::size_t>(s.numel()), T(0)) {
        check_shape_valid(s, "Tensor");
    }
    Tensor(const Shape4& s, std::vector<T> values) : shape(s), data(std::move(values)) {
        check_shape_valid(s, "Tensor");
        if (static_cast<std::int64_t>(data.size()) != s.numel()) {
            throw std::invalid_argument("Tensor: data length " + std::to_string(data.size()) +
                                        " does not match shape " + s.str());
        }
    }

    static Tensor scalar(T v) {
        Tensor t(Shape4{1, 1, 1, 1});
        t.data[0] = v;
        return t;
    }

    std::int64_t numel() const { return shape.numel(); }

    T& at(std::int64_t n, std::int64_t c, std::int64_t y, std::int64_t x) {
        return data[static_cast<std::size_t>(((n * shape.c + c) * shape.h + y) * shape.w + x)];
    }
    T at(std::int64_t n, std::int64_t c, std::int64_t y, std::int64_t x) const {
        return data[static_cast<std::size_t>(((n * shape.c + c) * shape.h + y) * shape.w + x)];
    }

    T item() const {
        if (numel() != 1) throw std::logic_error("item(): tensor is not scalar, shape " + shape.str());
        return data[0];
    }

    bool all_finite() const {
        for (T v : data) {
            if (!std::isfinite(static_cast<double>(v))) return false;
        }
        return true;
    }

    template <typename U>
    Tensor<U> cast() const {
        Tensor<U> out(shape);
        for (std::size_t i = 0; i < data.size(); ++i) out.data[i] = static_cast<U>(data[i]);
        return out;
    }
};

using TensorF = Tensor<float>;
using TensorD = Tensor<double>;

}  // namespace rtcs
