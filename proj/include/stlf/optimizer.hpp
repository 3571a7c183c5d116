#pragma once

#include "stlf/network.hpp"

namespace stlf {

struct AdamConfig {
    double lr = 1e-3;
    double beta1 = 0.9;
    double beta2 = 0.999;
    double eps = 1e-8;
    double clip_norm = 5.0;  // global gradient-norm ceiling; <= 0 disables clipping
};

struct AdamState {
    int64_t step = 0;
    std::vector<double> m, v;  // flat, in for_each_named_param order
};

inline AdamState make_adam_state(const StackedNetParams& net) {
    AdamState s;
    const size_t n = param_count(net);
    s.m.assign(n, 0.0);
    s.v.assign(n, 0.0);
    return s;
}

inline double global_grad_norm(const StackedNetParams& grads) {
    double s = 0.0;
    for_each_named_param(const_cast<StackedNetParams&>(grads),
                         [&](const std::string&, std::span<double> g) { s += squared_norm(g); });
    return std::sqrt(s);
}

/// Bias-corrected adaptive moment update with global-norm clipping applied to
/// the gradient first. Throws on non-finite gradients so training aborts
/// loudly instead of silently corrupting the parameters.
inline void adam_step(StackedNetParams& params, const StackedNetParams& grads, AdamState& state,
                      const AdamConfig& cfg) {
    if (!(cfg.lr > 0.0)) throw ConfigError("learning rate must be positive");
    double norm2 = 0.0;
    for_each_named_param(const_cast<StackedNetParams&>(grads),
                         [&](const std::string& name, std::span<double> g) {
                             if (!all_finite(g))
                                 throw TrainingError("non-finite gradient in " + name);
                             norm2 += squared_norm(g);
                         });
    const double norm = std::sqrt(norm2);
    const double grad_scale = (cfg.clip_norm > 0.0 && norm > cfg.clip_norm)
                                  ? cfg.clip_norm / norm
                                  : 1.0;

    state.step += 1;
    const double bc1 = 1.0 - std::pow(cfg.beta1, static_cast<double>(state.step));
    const double bc2 = 1.0 - std::pow(cfg.beta2, static_cast<double>(state.step));

    size_t offset = 0;
    std::vector<std::span<double>> grad_spans;
    for_each_named_param(const_cast<StackedNetParams&>(grads),
                         [&](const std::string&, std::span<double> g) { grad_spans.push_back(g); });
    size_t which = 0;
    for_each_named_param(params, [&](const std::string&, std::span<double> p) {
        std::span<double> g = grad_spans[which++];
        detail::require(g.size() == p.size(), "adam_step: gradient shape mismatch");
        for (size_t k = 0; k < p.size(); ++k) {
            const double gk = g[k] * grad_scale;
            double& m = state.m[offset + k];
            double& v = state.v[offset + k];
            m = cfg.beta1 * m + (1.0 - cfg.beta1) * gk;
            v = cfg.beta2 * v + (1.0 - cfg.beta2) * gk * gk;
            const double mhat = m / bc1;
            const double vhat = v / bc2;
            p[k] -= cfg.lr * mhat / (std::sqrt(vhat) + cfg.eps);
        }
        offset += p.size();
    });
}

struct NetDims {
    size_t input = 1;
    size_t hidden = 32;
    size_t layers = 2;
    size_t output = 1;
};

/**
 * Parameter initialization: input/recurrent weights uniform in
 * +-sqrt(6/(fan_in+fan_out)), peepholes zero, biases zero except the forget
 * bias which starts at 1. Reproducible from the seed.
 */
inline StackedNetParams init_params(const NetDims& dims, CellKind cell, uint64_t seed) {
    if (dims.input == 0 || dims.hidden == 0 || dims.layers == 0 || dims.output == 0)
        throw ConfigError("network dimensions must be positive");
    Rng rng(seed);
    auto fill_xavier = [&](Matrix& w) {
        const double bound =
            std::sqrt(6.0 / static_cast<double>(w.rows() + w.cols()));
        for (double& x : w.span()) x = rng.uniform(-bound, bound);
    };

    StackedNetParams net;
    net.cell = cell;
    for (size_t l = 0; l < dims.layers; ++l) {
        const size_t in = l == 0 ? dims.input : dims.hidden;
        if (cell == CellKind::lstm) {
            LSTMLayerParams p(in, dims.hidden);
            fill_xavier(p.w_ix);
            fill_xavier(p.w_fx);
            fill_xavier(p.w_ox);
            fill_xavier(p.w_cx);
            fill_xavier(p.w_ih);
            fill_xavier(p.w_fh);
            fill_xavier(p.w_oh);
            fill_xavier(p.w_ch);
            p.b_f.fill(1.0);
            net.lstm_layers.push_back(std::move(p));
        } else {
            VanillaLayerParams p(in, dims.hidden);
            fill_xavier(p.u_in);
            fill_xavier(p.w_rec);
            net.vanilla_layers.push_back(std::move(p));
        }
    }
    net.output = OutputLayerParams(dims.hidden, dims.output);
    fill_xavier(net.output.w_yh);
    return net;
}

}  // namespace stlf
