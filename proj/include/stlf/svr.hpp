#pragma once

#include <numeric>
#include <optional>
#include <span>
#include <vector>

#include "stlf/core.hpp"
#include "stlf/pooling.hpp"

namespace stlf {

/// Linear epsilon-insensitive regressor over the lookback window:
/// f(x) = w.x + b, residuals inside the epsilon tube incur no loss.
struct SVRParams {
    std::vector<double> w;
    double b = 0.0;
    double epsilon = 0.01;
    double c = 1.0;
};

struct SvrFitOptions {
    int epochs = 30;
    double lr = 0.01;
    uint64_t seed = 1;
    std::optional<SVRParams> init;  // default: w = 0, b = mean(target)
};

inline double svr_predict(const SVRParams& params, std::span<const double> context) {
    if (context.size() != params.w.size())
        throw DataError("SVR prediction needs a context of length " +
                        std::to_string(params.w.size()));
    double y = params.b;
    for (size_t i = 0; i < params.w.size(); ++i) y += params.w[i] * context[i];
    return y;
}

/**
 * Minimizes  0.5*||w||^2 + c * sum_i max(0, |w.x_i + b - y_i| - epsilon)
 * by per-sample subgradient descent. The visit order is reshuffled from the
 * seed each epoch and the step size decays per epoch, so the run is fully
 * deterministic.
 */
inline SVRParams svr_fit(const std::vector<WindowSample>& samples, double epsilon, double c,
                         const SvrFitOptions& opt = {}) {
    if (samples.empty()) throw DataError("SVR fit requires at least one sample");
    if (epsilon < 0.0) throw ConfigError("epsilon must be >= 0");
    if (!(c > 0.0)) throw ConfigError("c must be > 0");
    if (opt.epochs < 1 || !(opt.lr > 0.0)) throw ConfigError("bad SVR epochs/lr");

    const size_t dim = samples.front().input.size();
    const double n = static_cast<double>(samples.size());

    SVRParams p;
    if (opt.init) {
        p = *opt.init;
        if (p.w.size() != dim) throw ConfigError("SVR init dimension mismatch");
    } else {
        p.w.assign(dim, 0.0);
        double mean_y = 0.0;
        for (const auto& s : samples) mean_y += s.target;
        p.b = mean_y / n;
    }
    p.epsilon = epsilon;
    p.c = c;

    Rng rng(opt.seed);
    std::vector<size_t> order(samples.size());
    std::iota(order.begin(), order.end(), size_t{0});

    for (int epoch = 0; epoch < opt.epochs; ++epoch) {
        rng.shuffle(order);
        const double lr = opt.lr / (1.0 + static_cast<double>(epoch));
        for (size_t idx : order) {
            const WindowSample& s = samples[idx];
            if (s.input.size() != dim) throw DataError("SVR fit: ragged window lengths");
            const double r = svr_predict(p, s.input) - s.target;
            const double g = std::abs(r) > epsilon ? (r > 0.0 ? 1.0 : -1.0) : 0.0;
            const double shrink = 1.0 - lr / n;  // regularizer share of the step
            for (size_t k = 0; k < dim; ++k)
                p.w[k] = p.w[k] * shrink - lr * c * g * s.input[k];
            p.b -= lr * c * g;
        }
        if (!all_finite(p.w) || !std::isfinite(p.b))
            throw TrainingError("SVR training diverged at epoch " + std::to_string(epoch + 1));
    }
    return p;
}

}  // namespace stlf
