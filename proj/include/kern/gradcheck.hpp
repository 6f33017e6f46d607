#pragma once

#include <cmath>
#include <cstdint>
#include <functional>
#include <vector>

#include "kern/rng.hpp"
#include "kern/tape.hpp"
#include "kern/tensor.hpp"

namespace kern {

// Loss closure: builds the forward graph on the given tape (parameters
// already attached in store order) and returns the scalar loss node.
template <class Scalar>
using LossBuilder = std::function<int(Tape<Scalar>&, const std::vector<int>& param_nodes)>;

struct GradCheckResult {
    double max_rel_err = 0.0;
    size_t probes = 0;
};

// Central finite differences against the tape gradients in float64.
// Probe indices are drawn uniformly over all scalar parameters; the relative
// error uses |analytic| + |numeric| in the denominator (1e-12 floor).
inline double fd_rel_err(double analytic, double numeric) {
    const double denom = std::max(1e-12, std::abs(analytic) + std::abs(numeric));
    return std::abs(analytic - numeric) / denom;
}

template <class Scalar>
GradCheckResult grad_check(ParameterStore<Scalar>& params, const LossBuilder<Scalar>& build,
                           int probe_count, uint64_t seed) {
    static_assert(sizeof(Scalar) == 8, "grad_check requires float64 mode");
    std::vector<Tensor<Scalar>> analytic;
    {
        Tape<Scalar> tape;
        auto ids = tape.attach(params);
        const int loss = build(tape, ids);
        analytic = tape.backward(loss, params.size());
    }
    auto eval_loss = [&]() -> double {
        Tape<Scalar> tape;
        auto ids = tape.attach(params);
        return static_cast<double>(tape.value(build(tape, ids)).data[0]);
    };

    const size_t total = params.scalar_count();
    Rng rng(seed, /*stream_tag=*/0x6772616463686bull);
    GradCheckResult result;
    for (int p = 0; p < probe_count; ++p) {
        size_t flat = static_cast<size_t>(rng.uniform_int(0, static_cast<int64_t>(total) - 1));
        int slot = 0;
        while (flat >= params.value(slot).numel()) {
            flat -= params.value(slot).numel();
            ++slot;
        }
        Scalar& theta = params.value(slot).data[flat];
        const Scalar saved = theta;
        const double h = 1e-6 * (1.0 + std::abs(static_cast<double>(saved)));
        theta = saved + static_cast<Scalar>(h);
        const double lp = eval_loss();
        theta = saved - static_cast<Scalar>(h);
        const double lm = eval_loss();
        theta = saved;
        const double numeric = (lp - lm) / (2.0 * h);
        const double a = static_cast<double>(analytic[static_cast<size_t>(slot)].data[flat]);
        result.max_rel_err = std::max(result.max_rel_err, fd_rel_err(a, numeric));
        result.probes += 1;
    }
    return result;
}

}  // namespace kern
