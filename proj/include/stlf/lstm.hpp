#pragma once

#include "stlf/core.hpp"

namespace stlf {

/**
 * Peephole LSTM layer parameters. Gate pre-activations read the input, the
 * previous hidden state, and (for the input/forget/output gates) the previous
 * cell state through diagonal peephole weights:
 *
 *   f_t = sigma(w_fx x_t + w_fh h_{t-1} + w_fc.c_{t-1} + b_f)
 *   i_t = sigma(w_ix x_t + w_ih h_{t-1} + w_ic.c_{t-1} + b_i)
 *   u_t = tanh (w_cx x_t + w_ch h_{t-1}              + b_c)
 *   c_t = u_t.i_t + c_{t-1}.f_t
 *   o_t = sigma(w_ox x_t + w_oh h_{t-1} + w_oc.c_{t-1} + b_o)
 *   h_t = o_t.tanh(c_t)
 */
struct LSTMLayerParams {
    Matrix w_ix, w_fx, w_ox, w_cx;  // hidden x input
    Matrix w_ih, w_fh, w_oh, w_ch;  // hidden x hidden
    Vector w_ic, w_fc, w_oc;        // diagonal peepholes, length hidden
    Vector b_i, b_f, b_o, b_c;      // length hidden

    LSTMLayerParams() = default;
    LSTMLayerParams(size_t input, size_t hidden)
        : w_ix(hidden, input), w_fx(hidden, input), w_ox(hidden, input), w_cx(hidden, input),
          w_ih(hidden, hidden), w_fh(hidden, hidden), w_oh(hidden, hidden), w_ch(hidden, hidden),
          w_ic(hidden), w_fc(hidden), w_oc(hidden),
          b_i(hidden), b_f(hidden), b_o(hidden), b_c(hidden) {}

    size_t input_size() const { return w_ix.cols(); }
    size_t hidden_size() const { return w_ix.rows(); }
};

/// Per-step activations kept for backprop. Columns are independent batch
/// samples throughout.
struct LstmStep {
    Matrix i, f, o, u;  // gate activations
    Matrix c;           // new cell state
    Matrix tanh_c;
    Matrix h;           // new hidden state
};

inline void check_lstm_shapes(const LSTMLayerParams& p, const Matrix& x, const Matrix& h_prev,
                              const Matrix& c_prev) {
    detail::require(x.rows() == p.input_size(), "lstm forward: input rows mismatch");
    detail::require(h_prev.rows() == p.hidden_size() && c_prev.rows() == p.hidden_size(),
                    "lstm forward: state rows mismatch");
    detail::require(x.cols() == h_prev.cols() && x.cols() == c_prev.cols(),
                    "lstm forward: batch width mismatch");
}

inline LstmStep lstm_cell_forward(const LSTMLayerParams& p, const Matrix& x, const Matrix& h_prev,
                                  const Matrix& c_prev) {
    check_lstm_shapes(p, x, h_prev, c_prev);
    const size_t hidden = p.hidden_size(), batch = x.cols();
    LstmStep s;

    auto gate = [&](const Matrix& wx, const Matrix& wh, const Vector* peep, const Vector& bias) {
        Matrix z(hidden, batch);
        add_bias_cols(z, bias);
        mul_add(z, wx, x);
        mul_add(z, wh, h_prev);
        if (peep) add_scaled_rows(z, *peep, c_prev);
        return z;
    };

    s.f = gate(p.w_fx, p.w_fh, &p.w_fc, p.b_f);
    sigmoid_inplace(s.f);
    s.i = gate(p.w_ix, p.w_ih, &p.w_ic, p.b_i);
    sigmoid_inplace(s.i);
    s.u = gate(p.w_cx, p.w_ch, nullptr, p.b_c);
    tanh_inplace(s.u);

    s.c = Matrix(hidden, batch);
    for (size_t k = 0; k < s.c.size(); ++k)
        s.c.data()[k] = s.u.data()[k] * s.i.data()[k] + c_prev.data()[k] * s.f.data()[k];

    s.o = gate(p.w_ox, p.w_oh, &p.w_oc, p.b_o);
    sigmoid_inplace(s.o);

    s.tanh_c = s.c;
    tanh_inplace(s.tanh_c);
    s.h = Matrix(hidden, batch);
    for (size_t k = 0; k < s.h.size(); ++k) s.h.data()[k] = s.o.data()[k] * s.tanh_c.data()[k];
    return s;
}

/// Gradient flowing out of one backward step, toward time t-1 and the layer
/// input.
struct LstmStepGrad {
    Matrix dx;
    Matrix dh_prev;
    Matrix dc_prev;
};

/**
 * One BPTT step. `dh` is the total loss gradient w.r.t. h_t (recurrent and
 * consumer contributions already summed); `dc_in` is the gradient flowing
 * into c_t from step t+1 (forget path and the three peepholes). Parameter
 * gradients accumulate into `g`.
 */
inline LstmStepGrad lstm_cell_backward(const LSTMLayerParams& p, const Matrix& x,
                                       const Matrix& h_prev, const Matrix& c_prev,
                                       const LstmStep& s, const Matrix& dh, const Matrix& dc_in,
                                       LSTMLayerParams& g) {
    const size_t hidden = p.hidden_size(), batch = x.cols();
    detail::require(dh.rows() == hidden && dh.cols() == batch, "lstm backward: dh shape");

    // dL/dc_t, combining the future cell path with the h_t = o.tanh(c) path
    Matrix dc(hidden, batch);
    for (size_t k = 0; k < dc.size(); ++k) {
        const double th = s.tanh_c.data()[k];
        dc.data()[k] =
            dc_in.data()[k] + dh.data()[k] * s.o.data()[k] * (1.0 - th * th);
    }

    // pre-activation gradients
    Matrix dzo(hidden, batch), dzu(hidden, batch), dzi(hidden, batch), dzf(hidden, batch);
    for (size_t k = 0; k < dzo.size(); ++k) {
        const double o = s.o.data()[k];
        dzo.data()[k] = dh.data()[k] * s.tanh_c.data()[k] * o * (1.0 - o);
        const double u = s.u.data()[k];
        dzu.data()[k] = dc.data()[k] * s.i.data()[k] * (1.0 - u * u);
        const double i = s.i.data()[k];
        dzi.data()[k] = dc.data()[k] * u * i * (1.0 - i);
        const double f = s.f.data()[k];
        dzf.data()[k] = dc.data()[k] * c_prev.data()[k] * f * (1.0 - f);
    }

    // parameter gradients; transposed operands keep the kernels streaming
    const Matrix xt = transposed(x);
    const Matrix ht = transposed(h_prev);
    mul_add(g.w_fx, dzf, xt);
    mul_add(g.w_ix, dzi, xt);
    mul_add(g.w_cx, dzu, xt);
    mul_add(g.w_ox, dzo, xt);
    mul_add(g.w_fh, dzf, ht);
    mul_add(g.w_ih, dzi, ht);
    mul_add(g.w_ch, dzu, ht);
    mul_add(g.w_oh, dzo, ht);
    add_rowwise_dot(g.w_fc, dzf, c_prev);
    add_rowwise_dot(g.w_ic, dzi, c_prev);
    add_rowwise_dot(g.w_oc, dzo, c_prev);
    add_row_sums(g.b_f, dzf);
    add_row_sums(g.b_i, dzi);
    add_row_sums(g.b_c, dzu);
    add_row_sums(g.b_o, dzo);

    LstmStepGrad out;
    out.dx = Matrix(p.input_size(), batch);
    mul_transA_add(out.dx, p.w_fx, dzf);
    mul_transA_add(out.dx, p.w_ix, dzi);
    mul_transA_add(out.dx, p.w_cx, dzu);
    mul_transA_add(out.dx, p.w_ox, dzo);

    out.dh_prev = Matrix(hidden, batch);
    mul_transA_add(out.dh_prev, p.w_fh, dzf);
    mul_transA_add(out.dh_prev, p.w_ih, dzi);
    mul_transA_add(out.dh_prev, p.w_ch, dzu);
    mul_transA_add(out.dh_prev, p.w_oh, dzo);

    // dc_{t-1}: forget path plus all three peephole reads of c_{t-1}
    out.dc_prev = Matrix(hidden, batch);
    for (size_t i = 0; i < hidden; ++i) {
        const double wfc = p.w_fc(i), wic = p.w_ic(i), woc = p.w_oc(i);
        for (size_t j = 0; j < batch; ++j) {
            out.dc_prev(i, j) = dc(i, j) * s.f(i, j) + dzf(i, j) * wfc + dzi(i, j) * wic +
                                dzo(i, j) * woc;
        }
    }
    return out;
}

}  // namespace stlf
