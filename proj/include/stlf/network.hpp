#pragma once

#include <functional>
#include <string>
#include <vector>

#include "stlf/lstm.hpp"

namespace stlf {

enum class CellKind { lstm, vanilla };

inline const char* to_string(CellKind k) { return k == CellKind::lstm ? "lstm" : "vanilla"; }

inline CellKind cell_kind_from_string(const std::string& s) {
    if (s == "lstm") return CellKind::lstm;
    if (s == "vanilla") return CellKind::vanilla;
    throw ConfigError("unknown cell kind '" + s + "'");
}

/// Plain recurrent layer: h_t = tanh(b + w_rec h_{t-1} + u_in x_t).
struct VanillaLayerParams {
    Matrix u_in;   // hidden x input
    Matrix w_rec;  // hidden x hidden
    Vector b;

    VanillaLayerParams() = default;
    VanillaLayerParams(size_t input, size_t hidden)
        : u_in(hidden, input), w_rec(hidden, hidden), b(hidden) {}

    size_t input_size() const { return u_in.cols(); }
    size_t hidden_size() const { return u_in.rows(); }
};

/// Readout applied to the top layer's hidden state each step: y_t = w_yh h_t + b_y.
struct OutputLayerParams {
    Matrix w_yh;  // output x hidden
    Vector b_y;

    OutputLayerParams() = default;
    OutputLayerParams(size_t hidden, size_t output) : w_yh(output, hidden), b_y(output) {}

    size_t hidden_size() const { return w_yh.cols(); }
    size_t output_size() const { return w_yh.rows(); }
};

/// Stacked recurrent network: layer 1 consumes the input sequence, layer l
/// consumes layer l-1's hidden states at the same step.
struct StackedNetParams {
    CellKind cell = CellKind::lstm;
    std::vector<LSTMLayerParams> lstm_layers;
    std::vector<VanillaLayerParams> vanilla_layers;
    OutputLayerParams output;

    size_t n_layers() const {
        return cell == CellKind::lstm ? lstm_layers.size() : vanilla_layers.size();
    }
    size_t input_size() const {
        return cell == CellKind::lstm ? lstm_layers.front().input_size()
                                      : vanilla_layers.front().input_size();
    }
    size_t hidden_size(size_t layer) const {
        return cell == CellKind::lstm ? lstm_layers[layer].hidden_size()
                                      : vanilla_layers[layer].hidden_size();
    }
    size_t top_hidden_size() const { return hidden_size(n_layers() - 1); }
    size_t output_size() const { return output.output_size(); }
};

/// Zero-valued parameter tree with the same shapes (gradient accumulator).
inline StackedNetParams zeros_like(const StackedNetParams& net) {
    StackedNetParams z;
    z.cell = net.cell;
    if (net.cell == CellKind::lstm) {
        for (const auto& l : net.lstm_layers)
            z.lstm_layers.emplace_back(l.input_size(), l.hidden_size());
    } else {
        for (const auto& l : net.vanilla_layers)
            z.vanilla_layers.emplace_back(l.input_size(), l.hidden_size());
    }
    z.output = OutputLayerParams(net.output.hidden_size(), net.output.output_size());
    return z;
}

/// Visits every parameter tensor as (name, flat span), in a fixed order. The
/// order defines the layout of optimizer state and the coordinate numbering
/// reported by the gradient checker.
template <class Net, class F>
void for_each_named_param(Net& net, F&& f) {
    auto layer_name = [](size_t l, const char* field) {
        return "layers." + std::to_string(l) + "." + field;
    };
    if (net.cell == CellKind::lstm) {
        for (size_t l = 0; l < net.lstm_layers.size(); ++l) {
            auto& p = net.lstm_layers[l];
            f(layer_name(l, "w_ix"), p.w_ix.span());
            f(layer_name(l, "w_fx"), p.w_fx.span());
            f(layer_name(l, "w_ox"), p.w_ox.span());
            f(layer_name(l, "w_cx"), p.w_cx.span());
            f(layer_name(l, "w_ih"), p.w_ih.span());
            f(layer_name(l, "w_fh"), p.w_fh.span());
            f(layer_name(l, "w_oh"), p.w_oh.span());
            f(layer_name(l, "w_ch"), p.w_ch.span());
            f(layer_name(l, "w_ic"), p.w_ic.span());
            f(layer_name(l, "w_fc"), p.w_fc.span());
            f(layer_name(l, "w_oc"), p.w_oc.span());
            f(layer_name(l, "b_i"), p.b_i.span());
            f(layer_name(l, "b_f"), p.b_f.span());
            f(layer_name(l, "b_o"), p.b_o.span());
            f(layer_name(l, "b_c"), p.b_c.span());
        }
    } else {
        for (size_t l = 0; l < net.vanilla_layers.size(); ++l) {
            auto& p = net.vanilla_layers[l];
            f(layer_name(l, "u_in"), p.u_in.span());
            f(layer_name(l, "w_rec"), p.w_rec.span());
            f(layer_name(l, "b"), p.b.span());
        }
    }
    f(std::string("output.w_yh"), net.output.w_yh.span());
    f(std::string("output.b_y"), net.output.b_y.span());
}

inline size_t param_count(const StackedNetParams& net) {
    size_t n = 0;
    for_each_named_param(net, [&](const std::string&, std::span<const double> s) { n += s.size(); });
    return n;
}

/// Per-layer recurrent state; `c` is used in lstm mode only. Columns are
/// batch samples.
struct CellState {
    std::vector<Matrix> h;
    std::vector<Matrix> c;

    static CellState zeros(const StackedNetParams& net, size_t batch) {
        CellState s;
        for (size_t l = 0; l < net.n_layers(); ++l) {
            s.h.emplace_back(net.hidden_size(l), batch);
            if (net.cell == CellKind::lstm) s.c.emplace_back(net.hidden_size(l), batch);
        }
        return s;
    }
};

/// Everything the backward pass needs: inputs, per-layer per-step
/// activations, and the outputs.
struct ForwardTrace {
    size_t steps = 0;
    size_t batch = 0;
    std::vector<Matrix> x;                      // [t], input x batch
    std::vector<std::vector<LstmStep>> lstm;    // [t][layer]
    std::vector<std::vector<Matrix>> hidden;    // [t][layer] (vanilla mode)
    std::vector<Matrix> y;                      // [t], output x batch
    CellState initial;
};

inline void check_sequence_shapes(const StackedNetParams& net, const std::vector<Matrix>& xs) {
    detail::require(!xs.empty(), "forward: empty sequence");
    const size_t batch = xs.front().cols();
    detail::require(batch > 0, "forward: zero batch width");
    for (const auto& x : xs)
        detail::require(x.rows() == net.input_size() && x.cols() == batch,
                        "forward: input shape mismatch");
    for (size_t l = 1; l < net.n_layers(); ++l) {
        const size_t below = net.hidden_size(l - 1);
        const size_t expected = net.cell == CellKind::lstm ? net.lstm_layers[l].input_size()
                                                           : net.vanilla_layers[l].input_size();
        detail::require(below == expected, "forward: layer width chain mismatch");
    }
    detail::require(net.output.hidden_size() == net.top_hidden_size(),
                    "forward: output layer width mismatch");
}

inline ForwardTrace stacked_forward(const StackedNetParams& net, const std::vector<Matrix>& xs,
                                    const CellState& initial) {
    check_sequence_shapes(net, xs);
    const size_t steps = xs.size(), batch = xs.front().cols(), layers = net.n_layers();
    detail::require(initial.h.size() == layers, "forward: initial state layer count");
    for (size_t l = 0; l < layers; ++l)
        detail::require(initial.h[l].rows() == net.hidden_size(l) && initial.h[l].cols() == batch,
                        "forward: initial state shape");

    ForwardTrace tr;
    tr.steps = steps;
    tr.batch = batch;
    tr.x = xs;
    tr.initial = initial;
    tr.y.reserve(steps);

    CellState state = initial;
    if (net.cell == CellKind::lstm) {
        tr.lstm.resize(steps);
        for (size_t t = 0; t < steps; ++t) {
            tr.lstm[t].reserve(layers);
            const Matrix* in = &tr.x[t];
            for (size_t l = 0; l < layers; ++l) {
                LstmStep s = lstm_cell_forward(net.lstm_layers[l], *in, state.h[l], state.c[l]);
                state.h[l] = s.h;
                state.c[l] = s.c;
                tr.lstm[t].push_back(std::move(s));
                in = &tr.lstm[t][l].h;
            }
            Matrix y(net.output_size(), batch);
            add_bias_cols(y, net.output.b_y);
            mul_add(y, net.output.w_yh, state.h[layers - 1]);
            tr.y.push_back(std::move(y));
        }
    } else {
        tr.hidden.resize(steps);
        for (size_t t = 0; t < steps; ++t) {
            tr.hidden[t].reserve(layers);
            const Matrix* in = &tr.x[t];
            for (size_t l = 0; l < layers; ++l) {
                const auto& p = net.vanilla_layers[l];
                detail::require(in->rows() == p.input_size(), "forward: vanilla input shape");
                Matrix a(p.hidden_size(), batch);
                add_bias_cols(a, p.b);
                mul_add(a, p.w_rec, state.h[l]);
                mul_add(a, p.u_in, *in);
                tanh_inplace(a);
                state.h[l] = a;
                tr.hidden[t].push_back(std::move(a));
                in = &tr.hidden[t][l];
            }
            Matrix y(net.output_size(), batch);
            add_bias_cols(y, net.output.b_y);
            mul_add(y, net.output.w_yh, state.h[layers - 1]);
            tr.y.push_back(std::move(y));
        }
    }
    return tr;
}

/// Mean squared error over steps, output components, and batch columns.
inline double mse_loss(const std::vector<Matrix>& y, const std::vector<Matrix>& target) {
    detail::require(!y.empty() && y.size() == target.size(), "mse_loss: length mismatch");
    double s = 0.0;
    size_t n = 0;
    for (size_t t = 0; t < y.size(); ++t) {
        detail::require(y[t].rows() == target[t].rows() && y[t].cols() == target[t].cols(),
                        "mse_loss: shape mismatch");
        for (size_t k = 0; k < y[t].size(); ++k) {
            const double d = y[t].data()[k] - target[t].data()[k];
            s += d * d;
        }
        n += y[t].size();
    }
    return s / static_cast<double>(n);
}

/// Forward pass that keeps only the rolling state; used by the finite
/// difference loop where a full trace would be wasted.
inline double forward_loss(const StackedNetParams& net, const std::vector<Matrix>& xs,
                           const std::vector<Matrix>& targets, const CellState& initial) {
    check_sequence_shapes(net, xs);
    detail::require(xs.size() == targets.size(), "forward_loss: target length mismatch");
    const size_t steps = xs.size(), batch = xs.front().cols(), layers = net.n_layers();
    CellState state = initial;
    double s = 0.0;
    size_t n = 0;
    Matrix in;
    for (size_t t = 0; t < steps; ++t) {
        const Matrix* cur = &xs[t];
        for (size_t l = 0; l < layers; ++l) {
            if (net.cell == CellKind::lstm) {
                LstmStep st = lstm_cell_forward(net.lstm_layers[l], *cur, state.h[l], state.c[l]);
                state.h[l] = std::move(st.h);
                state.c[l] = std::move(st.c);
            } else {
                const auto& p = net.vanilla_layers[l];
                Matrix a(p.hidden_size(), batch);
                add_bias_cols(a, p.b);
                mul_add(a, p.w_rec, state.h[l]);
                mul_add(a, p.u_in, *cur);
                tanh_inplace(a);
                state.h[l] = std::move(a);
            }
            cur = &state.h[l];
        }
        Matrix y(net.output_size(), batch);
        add_bias_cols(y, net.output.b_y);
        mul_add(y, net.output.w_yh, state.h[layers - 1]);
        for (size_t k = 0; k < y.size(); ++k) {
            const double d = y.data()[k] - targets[t].data()[k];
            s += d * d;
        }
        n += y.size();
    }
    return s / static_cast<double>(n);
}

/**
 * Exact gradient of mse_loss(trace.y, targets) with respect to every
 * parameter, by backpropagation through time over the stored trace. Includes
 * the peephole paths through c_{t-1}.
 */
inline StackedNetParams backward_bptt(const StackedNetParams& net, const ForwardTrace& tr,
                                      const std::vector<Matrix>& targets) {
    detail::require(tr.steps > 0 && tr.y.size() == tr.steps, "backward: empty trace");
    detail::require(targets.size() == tr.steps, "backward: target length mismatch");
    const size_t layers = net.n_layers(), batch = tr.batch;
    const bool is_lstm = net.cell == CellKind::lstm;
    detail::require(is_lstm ? tr.lstm.size() == tr.steps : tr.hidden.size() == tr.steps,
                    "backward: trace/net cell kind mismatch");

    StackedNetParams g = zeros_like(net);
    const double scale =
        2.0 / (static_cast<double>(tr.steps) * static_cast<double>(net.output_size()) *
               static_cast<double>(batch));

    std::vector<Matrix> dh_next(layers), dc_next(layers);
    for (size_t l = 0; l < layers; ++l) {
        dh_next[l] = Matrix(net.hidden_size(l), batch);
        if (is_lstm) dc_next[l] = Matrix(net.hidden_size(l), batch);
    }

    auto h_at = [&](size_t t, size_t l) -> const Matrix& {
        return is_lstm ? tr.lstm[t][l].h : tr.hidden[t][l];
    };
    auto h_prev_of = [&](size_t t, size_t l) -> const Matrix& {
        return t == 0 ? tr.initial.h[l] : h_at(t - 1, l);
    };
    auto c_prev_of = [&](size_t t, size_t l) -> const Matrix& {
        return t == 0 ? tr.initial.c[l] : tr.lstm[t - 1][l].c;
    };
    auto input_of = [&](size_t t, size_t l) -> const Matrix& {
        return l == 0 ? tr.x[t] : h_at(t, l - 1);
    };

    for (size_t ti = tr.steps; ti-- > 0;) {
        detail::require(targets[ti].rows() == net.output_size() && targets[ti].cols() == batch,
                        "backward: target shape mismatch");
        Matrix dy(net.output_size(), batch);
        for (size_t k = 0; k < dy.size(); ++k)
            dy.data()[k] = scale * (tr.y[ti].data()[k] - targets[ti].data()[k]);

        add_row_sums(g.output.b_y, dy);
        mul_add(g.output.w_yh, dy, transposed(h_at(ti, layers - 1)));

        Matrix from_above(net.top_hidden_size(), batch);
        mul_transA_add(from_above, net.output.w_yh, dy);

        for (size_t li = layers; li-- > 0;) {
            Matrix dh = dh_next[li];
            for (size_t k = 0; k < dh.size(); ++k) dh.data()[k] += from_above.data()[k];

            if (is_lstm) {
                LstmStepGrad sg = lstm_cell_backward(
                    net.lstm_layers[li], input_of(ti, li), h_prev_of(ti, li), c_prev_of(ti, li),
                    tr.lstm[ti][li], dh, dc_next[li], g.lstm_layers[li]);
                dh_next[li] = std::move(sg.dh_prev);
                dc_next[li] = std::move(sg.dc_prev);
                from_above = std::move(sg.dx);
            } else {
                const auto& p = net.vanilla_layers[li];
                const Matrix& h = tr.hidden[ti][li];
                Matrix da(p.hidden_size(), batch);
                for (size_t k = 0; k < da.size(); ++k)
                    da.data()[k] = dh.data()[k] * (1.0 - h.data()[k] * h.data()[k]);
                add_row_sums(g.vanilla_layers[li].b, da);
                mul_add(g.vanilla_layers[li].w_rec, da, transposed(h_prev_of(ti, li)));
                mul_add(g.vanilla_layers[li].u_in, da, transposed(input_of(ti, li)));
                Matrix dhp(p.hidden_size(), batch);
                mul_transA_add(dhp, p.w_rec, da);
                dh_next[li] = std::move(dhp);
                Matrix dx(p.input_size(), batch);
                mul_transA_add(dx, p.u_in, da);
                from_above = std::move(dx);
            }
        }
    }
    return g;
}

struct GradCheckReport {
    double max_rel_err = 0.0;
    std::string worst_param;
    size_t worst_index = 0;
    double analytic = 0.0;
    double numeric = 0.0;
    bool within(double tolerance) const { return max_rel_err < tolerance; }
};

/**
 * Central finite-difference check of a gradient tree against the loss
 * surface. Relative error per coordinate: |a - n| / max(|a|, |n|, 1e-8).
 */
inline GradCheckReport grad_check_against(const StackedNetParams& net,
                                          const std::vector<Matrix>& xs,
                                          const std::vector<Matrix>& targets,
                                          const CellState& initial, double step,
                                          const StackedNetParams& analytic) {
    detail::require(step > 0.0, "grad_check: step must be positive");
    StackedNetParams probe = net;

    std::vector<std::pair<std::string, std::span<double>>> probe_spans;
    for_each_named_param(probe, [&](const std::string& name, std::span<double> s) {
        probe_spans.emplace_back(name, s);
    });
    std::vector<std::span<const double>> grad_spans;
    for_each_named_param(const_cast<StackedNetParams&>(analytic),
                         [&](const std::string&, std::span<double> s) {
                             grad_spans.push_back(s);
                         });

    GradCheckReport rep;
    for (size_t p = 0; p < probe_spans.size(); ++p) {
        auto& [name, span] = probe_spans[p];
        for (size_t k = 0; k < span.size(); ++k) {
            const double saved = span[k];
            span[k] = saved + step;
            const double lp = forward_loss(probe, xs, targets, initial);
            span[k] = saved - step;
            const double lm = forward_loss(probe, xs, targets, initial);
            span[k] = saved;
            const double numeric = (lp - lm) / (2.0 * step);
            const double analytic_v = grad_spans[p][k];
            const double rel = std::abs(analytic_v - numeric) /
                               std::max({std::abs(analytic_v), std::abs(numeric), 1e-8});
            if (rel > rep.max_rel_err) {
                rep.max_rel_err = rel;
                rep.worst_param = name;
                rep.worst_index = k;
                rep.analytic = analytic_v;
                rep.numeric = numeric;
            }
        }
    }
    return rep;
}

inline GradCheckReport grad_check(const StackedNetParams& net, const std::vector<Matrix>& xs,
                                  const std::vector<Matrix>& targets, const CellState& initial,
                                  double step) {
    const ForwardTrace tr = stacked_forward(net, xs, initial);
    const StackedNetParams analytic = backward_bptt(net, tr, targets);
    return grad_check_against(net, xs, targets, initial, step, analytic);
}

}  // namespace stlf
