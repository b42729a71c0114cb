#pragma once

#include <functional>
#include <vector>

#include "rtcs/tape.hpp"
#include "rtcs/tensor.hpp"

namespace rtcs {

/// Central-finite-difference check of a scalar-valued closure at 64-bit
/// precision. The closure receives tape-watched copies of `inputs` and must
/// return a scalar tensor recorded on the tape.
///
/// Returns max over all input coordinates of
///   |analytic - numeric| / max(1e-8, |analytic| + |numeric|).
inline double grad_check(
    const std::function<Tensor<double>(Tape<double>&, std::vector<Tensor<double>>&)>& f,
    std::vector<Tensor<double>> inputs, double step = 1e-5) {
    // analytic gradients
    Tape<double> tape;
    std::vector<Tensor<double>> watched;
    watched.reserve(inputs.size());
    for (const auto& in : inputs) watched.push_back(tape.watch(in));
    Tensor<double> loss = f(tape, watched);
    tape.backward(loss);

    double max_err = 0.0;
    for (std::size_t k = 0; k < inputs.size(); ++k) {
        const Tensor<double>& analytic = tape.grad(watched[k].node);
        for (std::size_t i = 0; i < inputs[k].data.size(); ++i) {
            auto eval = [&](double delta) {
                std::vector<Tensor<double>> pert = inputs;
                pert[k].data[i] += delta;
                Tape<double> t2;
                std::vector<Tensor<double>> w2;
                for (const auto& in : pert) w2.push_back(t2.watch(in));
                return f(t2, w2).item();
            };
            const double numeric = (eval(step) - eval(-step)) / (2.0 * step);
            const double a = analytic.data[i];
            const double err = std::abs(a - numeric) / std::max(1e-8, std::abs(a) + std::abs(numeric));
            if (err > max_err) max_err = err;
        }
    }
    return max_err;
}

}  // namespace rtcs
