#pragma once

#include <cmath>
#include <span>
#include <string>

#include "rtcs/tensor.hpp"

namespace rtcs {

/// Learnable tensor with gradient and AdamW moment state.
template <typename T>
struct Parameter {
    std::string name;
    Tensor<T> value;
    Tensor<T> grad;
    Tensor<T> m;  // first-moment estimate
    Tensor<T> v;  // second-moment estimate
    std::int64_t step = 0;

    Parameter() = default;
    Parameter(std::string n, Tensor<T> val)
        : name(std::move(n)), value(std::move(val)),
          grad(value.shape), m(value.shape), v(value.shape) {}

    void zero_grad() { std::fill(grad.data.begin(), grad.data.end(), T(0)); }
};

struct AdamWConfig {
    double lr = 1e-4;
    double beta1 = 0.9;
    double beta2 = 0.999;
    double eps = 1e-8;
    double weight_decay = 0.0;
    // step-wise schedule: lr is halved every `decay_epochs` epochs
    std::int64_t decay_epochs = 1000;

    void validate() const {
        if (!(lr > 0)) throw std::invalid_argument("AdamWConfig: lr must be positive");
        if (!(beta1 >= 0 && beta1 < 1) || !(beta2 >= 0 && beta2 < 1)) {
            throw std::invalid_argument("AdamWConfig: betas must be in [0,1)");
        }
        if (!(eps > 0)) throw std::invalid_argument("AdamWConfig: eps must be positive");
        if (weight_decay < 0) throw std::invalid_argument("AdamWConfig: weight_decay must be >= 0");
    }
};

/// Learning rate at a given epoch under the halve-every-decay_epochs schedule.
inline double scheduled_lr(const AdamWConfig& cfg, std::int64_t epoch) {
    return cfg.lr * std::pow(0.5, static_cast<double>(epoch / cfg.decay_epochs));
}

/// One AdamW update: bias-corrected moments, decoupled weight decay applied to
/// the value directly (never to the moments).
template <typename T>
void adamw_step(std::span<Parameter<T>*> params, const AdamWConfig& cfg, double lr_override = -1.0) {
    cfg.validate();
    const double lr = lr_override > 0 ? lr_override : cfg.lr;
    for (Parameter<T>* p : params) {
        p->step += 1;
        const double bc1 = 1.0 - std::pow(cfg.beta1, static_cast<double>(p->step));
        const double bc2 = 1.0 - std::pow(cfg.beta2, static_cast<double>(p->step));
        for (std::size_t i = 0; i < p->value.data.size(); ++i) {
            const double g = static_cast<double>(p->grad.data[i]);
            const double m = cfg.beta1 * static_cast<double>(p->m.data[i]) + (1.0 - cfg.beta1) * g;
            const double v = cfg.beta2 * static_cast<double>(p->v.data[i]) + (1.0 - cfg.beta2) * g * g;
            p->m.data[i] = static_cast<T>(m);
            p->v.data[i] = static_cast<T>(v);
            const double mhat = m / bc1;
            const double vhat = v / bc2;
            double val = static_cast<double>(p->value.data[i]);
            val -= lr * cfg.weight_decay * val;
            val -= lr * mhat / (std::sqrt(vhat) + cfg.eps);
            p->value.data[i] = static_cast<T>(val);
        }
    }
}

}  // namespace rtcs
