#pragma once

#include <cmath>
#include <cstdint>
#include <vector>

#include "kern/tensor.hpp"

namespace kern {

// Canonical Adam constants; the moments live alongside each parameter slot.
struct AdamConfig {
    double beta1 = 0.9;
    double beta2 = 0.999;
    double eps = 1e-8;
};

template <class Scalar>
struct AdamState {
    std::vector<Tensor<Scalar>> m;
    std::vector<Tensor<Scalar>> v;
    int64_t t = 0;

    static AdamState init(const ParameterStore<Scalar>& params) {
        AdamState s;
        s.m.reserve(static_cast<size_t>(params.size()));
        s.v.reserve(static_cast<size_t>(params.size()));
        for (int i = 0; i < params.size(); ++i) {
            s.m.push_back(Tensor<Scalar>::zeros(params.value(i).shape));
            s.v.push_back(Tensor<Scalar>::zeros(params.value(i).shape));
        }
        return s;
    }
};

// One bias-corrected Adam update in place. A non-finite gradient rejects the
// whole step: parameters and state are left untouched and false is returned.
template <class Scalar>
bool adam_step(ParameterStore<Scalar>& params, const std::vector<Tensor<Scalar>>& grads,
               AdamState<Scalar>& state, double lr, const AdamConfig& cfg = {}) {
    if (!(lr > 0)) throw ValidationError("adam_step: learning rate must be > 0");
    if (static_cast<int>(grads.size()) != params.size() ||
        static_cast<int>(state.m.size()) != params.size()) {
        throw ShapeError("adam_step: gradient/state count does not match parameter count");
    }
    for (int i = 0; i < params.size(); ++i) {
        require_same_shape(params.value(i), grads[static_cast<size_t>(i)], "adam_step");
        if (!grads[static_cast<size_t>(i)].all_finite()) return false;
    }
    state.t += 1;
    const double bc1 = 1.0 - std::pow(cfg.beta1, static_cast<double>(state.t));
    const double bc2 = 1.0 - std::pow(cfg.beta2, static_cast<double>(state.t));
    for (int i = 0; i < params.size(); ++i) {
        Tensor<Scalar>& p = params.value(i);
        Tensor<Scalar>& m = state.m[static_cast<size_t>(i)];
        Tensor<Scalar>& v = state.v[static_cast<size_t>(i)];
        const Tensor<Scalar>& g = grads[static_cast<size_t>(i)];
        for (size_t k = 0; k < p.numel(); ++k) {
            const Scalar gk = g.data[k];
            m.data[k] = static_cast<Scalar>(cfg.beta1) * m.data[k] + static_cast<Scalar>(1.0 - cfg.beta1) * gk;
            v.data[k] = static_cast<Scalar>(cfg.beta2) * v.data[k] + static_cast<Scalar>(1.0 - cfg.beta2) * gk * gk;
            const Scalar mhat = m.data[k] / static_cast<Scalar>(bc1);
            const Scalar vhat = v.data[k] / static_cast<Scalar>(bc2);
            p.data[k] -= static_cast<Scalar>(lr) * mhat / (std::sqrt(vhat) + static_cast<Scalar>(cfg.eps));
        }
    }
    return true;
}

}  // namespace kern
