#include <gtest/gtest.h>

#include "test_util.hpp"

namespace {

using stlf::CellKind;
using stlf::CellState;
using stlf::Matrix;
using stlf::StackedNetParams;
using stlf::Vector;

Matrix scalar(double v) {
    Matrix m(1, 1);
    m(0, 0) = v;
    return m;
}

TEST(LstmCell, ZeroParamsFixedPoint) {
    stlf::LSTMLayerParams p(2, 3);
    Matrix x(2, 1), h(3, 1), c(3, 1);
    x(0, 0) = 0.7;
    x(1, 0) = -1.3;
    const stlf::LstmStep s = stlf::lstm_cell_forward(p, x, h, c);
    for (size_t i = 0; i < 3; ++i) {
        EXPECT_DOUBLE_EQ(s.i(i, 0), 0.5);
        EXPECT_DOUBLE_EQ(s.f(i, 0), 0.5);
        EXPECT_DOUBLE_EQ(s.o(i, 0), 0.5);
        EXPECT_DOUBLE_EQ(s.u(i, 0), 0.0);
        EXPECT_DOUBLE_EQ(s.c(i, 0), 0.0);
        EXPECT_DOUBLE_EQ(s.h(i, 0), 0.0);
    }
}

TEST(LstmCell, ZeroParamsHalvesPreviousCell) {
    // with every weight zero only the forget path survives: c_t = 0.5 * c_prev
    stlf::LSTMLayerParams p(1, 4);
    Matrix x(1, 1), h(4, 1), c(4, 1);
    for (size_t i = 0; i < 4; ++i) c(i, 0) = 0.3 * static_cast<double>(i + 1);
    const stlf::LstmStep s = stlf::lstm_cell_forward(p, x, h, c);
    for (size_t i = 0; i < 4; ++i) EXPECT_DOUBLE_EQ(s.c(i, 0), 0.5 * c(i, 0));
}

TEST(LstmCell, ScalarUnitWeightsZeroInputs) {
    stlf::LSTMLayerParams p(1, 1);
    for (Matrix* w : {&p.w_ix, &p.w_fx, &p.w_ox, &p.w_cx, &p.w_ih, &p.w_fh, &p.w_oh, &p.w_ch})
        (*w)(0, 0) = 1.0;
    p.w_ic(0) = p.w_fc(0) = p.w_oc(0) = 1.0;
    const stlf::LstmStep s = stlf::lstm_cell_forward(p, scalar(0.0), scalar(0.0), scalar(0.0));
    EXPECT_DOUBLE_EQ(s.f(0, 0), 0.5);
    EXPECT_DOUBLE_EQ(s.i(0, 0), 0.5);
    EXPECT_DOUBLE_EQ(s.o(0, 0), 0.5);
    EXPECT_DOUBLE_EQ(s.u(0, 0), 0.0);
    EXPECT_DOUBLE_EQ(s.c(0, 0), 0.0);
    EXPECT_DOUBLE_EQ(s.h(0, 0), 0.0);
}

TEST(LstmCell, GateRangesOnRandomInputs) {
    stlf::Rng rng(21);
    stlf::LSTMLayerParams p(3, 5);
    StackedNetParams net;  // only for the randomize helper
    for (Matrix* w : {&p.w_ix, &p.w_fx, &p.w_ox, &p.w_cx, &p.w_ih, &p.w_fh, &p.w_oh, &p.w_ch})
        for (double& v : w->span()) v = rng.uniform(-2, 2);
    for (Vector* v : {&p.w_ic, &p.w_fc, &p.w_oc, &p.b_i, &p.b_f, &p.b_o, &p.b_c})
        for (double& x : v->span()) x = rng.uniform(-2, 2);
    for (int trial = 0; trial < 50; ++trial) {
        Matrix x(3, 2), h(5, 2), c(5, 2);
        for (double& v : x.span()) v = rng.uniform(-3, 3);
        for (double& v : h.span()) v = rng.uniform(-1, 1);
        for (double& v : c.span()) v = rng.uniform(-3, 3);
        const stlf::LstmStep s = stlf::lstm_cell_forward(p, x, h, c);
        for (const Matrix* g : {&s.i, &s.f, &s.o})
            for (double v : g->span()) {
                EXPECT_GT(v, 0.0);
                EXPECT_LT(v, 1.0);
            }
        for (double v : s.u.span()) {
            EXPECT_GT(v, -1.0);
            EXPECT_LT(v, 1.0);
        }
    }
}

TEST(LstmCell, ShapeMismatchThrows) {
    stlf::LSTMLayerParams p(2, 3);
    Matrix x(3, 1), h(3, 1), c(3, 1);
    EXPECT_THROW(stlf::lstm_cell_forward(p, x, h, c), std::invalid_argument);
    Matrix x2(2, 1), hbad(4, 1);
    EXPECT_THROW(stlf::lstm_cell_forward(p, x2, hbad, c), std::invalid_argument);
}

StackedNetParams zero_net(CellKind kind, size_t input, size_t hidden, size_t layers) {
    StackedNetParams net;
    net.cell = kind;
    for (size_t l = 0; l < layers; ++l) {
        const size_t in = l == 0 ? input : hidden;
        if (kind == CellKind::lstm)
            net.lstm_layers.emplace_back(in, hidden);
        else
            net.vanilla_layers.emplace_back(in, hidden);
    }
    net.output = stlf::OutputLayerParams(hidden, 1);
    return net;
}

TEST(StackedForward, ZeroNetOutputsZero) {
    for (CellKind kind : {CellKind::lstm, CellKind::vanilla}) {
        StackedNetParams net = zero_net(kind, 1, 4, 2);
        std::vector<Matrix> xs = {scalar(0.3), scalar(-0.8)};
        const auto tr = stlf::stacked_forward(net, xs, CellState::zeros(net, 1));
        for (const Matrix& y : tr.y) EXPECT_DOUBLE_EQ(y(0, 0), 0.0);
    }
}

TEST(StackedForward, TwoLayerVanillaHandValues) {
    // identity-ish scalar weights: a1 = 1, h1 = tanh(1), h2 = tanh(h1), y = h2
    StackedNetParams net = zero_net(CellKind::vanilla, 1, 1, 2);
    net.vanilla_layers[0].u_in(0, 0) = 1.0;
    net.vanilla_layers[0].w_rec(0, 0) = 1.0;
    net.vanilla_layers[1].u_in(0, 0) = 1.0;
    net.vanilla_layers[1].w_rec(0, 0) = 1.0;
    net.output.w_yh(0, 0) = 1.0;
    std::vector<Matrix> xs = {scalar(1.0)};
    const auto tr = stlf::stacked_forward(net, xs, CellState::zeros(net, 1));
    const double h1 = std::tanh(1.0);
    EXPECT_NEAR(h1, 0.76159, 5e-6);
    const double h2 = std::tanh(h1);
    EXPECT_NEAR(h2, 0.64248, 5e-5);
    EXPECT_DOUBLE_EQ(tr.y[0](0, 0), h2);
}

TEST(StackedForward, DeterministicAcrossCalls) {
    stlf::Rng rng(31);
    StackedNetParams net = stlf::init_params({2, 6, 2, 1}, CellKind::lstm, 5);
    testutil::randomize_all(net, rng);
    auto xs = testutil::random_sequence(8, 2, 3, rng);
    const auto t1 = stlf::stacked_forward(net, xs, CellState::zeros(net, 3));
    const auto t2 = stlf::stacked_forward(net, xs, CellState::zeros(net, 3));
    for (size_t t = 0; t < t1.y.size(); ++t)
        for (size_t k = 0; k < t1.y[t].size(); ++k)
            EXPECT_EQ(t1.y[t].data()[k], t2.y[t].data()[k]);  // bit-identical
}

TEST(StackedForward, RejectsMisshapenInputs) {
    StackedNetParams net = zero_net(CellKind::lstm, 2, 4, 2);
    // generated suite of mismatches: wrong input rows, ragged batch, empty
    // sequence, wrong initial state
    std::vector<Matrix> bad_rows = {Matrix(3, 1)};
    EXPECT_THROW(stlf::stacked_forward(net, bad_rows, CellState::zeros(net, 1)),
                 std::invalid_argument);
    std::vector<Matrix> ragged = {Matrix(2, 2), Matrix(2, 3)};
    EXPECT_THROW(stlf::stacked_forward(net, ragged, CellState::zeros(net, 2)),
                 std::invalid_argument);
    std::vector<Matrix> empty;
    EXPECT_THROW(stlf::stacked_forward(net, empty, CellState::zeros(net, 1)),
                 std::invalid_argument);
    std::vector<Matrix> ok = {Matrix(2, 2)};
    EXPECT_THROW(stlf::stacked_forward(net, ok, CellState::zeros(net, 1)), std::invalid_argument);
    StackedNetParams wide = zero_net(CellKind::lstm, 2, 5, 1);
    CellState wrong = CellState::zeros(wide, 2);
    EXPECT_THROW(stlf::stacked_forward(net, ok, wrong), std::invalid_argument);
}

TEST(MseLoss, HandValues) {
    std::vector<Matrix> y = {scalar(0.0)};
    std::vector<Matrix> t = {scalar(2.0)};
    EXPECT_DOUBLE_EQ(stlf::mse_loss(y, t), 4.0);

    std::vector<Matrix> y2 = {scalar(1.0), scalar(2.0)};
    std::vector<Matrix> t2 = {scalar(0.0), scalar(0.0)};
    EXPECT_DOUBLE_EQ(stlf::mse_loss(y2, t2), 2.5);

    EXPECT_DOUBLE_EQ(stlf::mse_loss(y2, y2), 0.0);
    EXPECT_THROW(stlf::mse_loss(y, t2), std::invalid_argument);
}

std::vector<Matrix> targets_like(const std::vector<Matrix>& y, stlf::Rng& rng) {
    std::vector<Matrix> t(y.size());
    for (size_t i = 0; i < y.size(); ++i) {
        t[i] = Matrix(y[i].rows(), y[i].cols());
        for (double& v : t[i].span()) v = rng.uniform(-0.6, 0.6);
    }
    return t;
}

TEST(Backward, ZeroNetZeroTargetsGivesZeroGradient) {
    StackedNetParams net = zero_net(CellKind::lstm, 1, 4, 2);
    std::vector<Matrix> xs = {scalar(0.0), scalar(0.0)};
    std::vector<Matrix> tgt = {scalar(0.0), scalar(0.0)};
    const auto tr = stlf::stacked_forward(net, xs, CellState::zeros(net, 1));
    StackedNetParams g = stlf::backward_bptt(net, tr, tgt);
    stlf::for_each_named_param(g, [&](const std::string& name, std::span<double> s) {
        for (double v : s) EXPECT_DOUBLE_EQ(v, 0.0) << name;
    });
}

TEST(Backward, OutputBiasGradientIsMeanResidual) {
    // k = identity: dL/db_y = mean over t of 2 (y_t - target_t)
    stlf::Rng rng(17);
    StackedNetParams net = stlf::init_params({1, 5, 1, 1}, CellKind::lstm, 3);
    testutil::randomize_all(net, rng);
    auto xs = testutil::random_sequence(6, 1, 1, rng);
    auto tgt = targets_like(xs, rng);
    const auto tr = stlf::stacked_forward(net, xs, CellState::zeros(net, 1));
    const StackedNetParams g = stlf::backward_bptt(net, tr, tgt);
    double expect = 0.0;
    for (size_t t = 0; t < tr.y.size(); ++t) expect += 2.0 * (tr.y[t](0, 0) - tgt[t](0, 0));
    expect /= static_cast<double>(tr.y.size());
    EXPECT_NEAR(g.output.b_y(0), expect, 1e-12);
}

TEST(Backward, MatchesFiniteDifferencesOnRandomNets) {
    stlf::Rng rng(1234);
    const size_t steps = 5;
    for (CellKind kind : {CellKind::lstm, CellKind::vanilla}) {
        for (int trial = 0; trial < 3; ++trial) {
            const size_t layers = 1 + rng.below(2);
            const size_t hidden = 3 + rng.below(3);
            StackedNetParams net = stlf::init_params({1, hidden, layers, 1}, kind, rng.next());
            testutil::randomize_all(net, rng);
            auto xs = testutil::random_sequence(steps, 1, 2, rng);
            auto tgt = targets_like(xs, rng);
            const auto rep =
                stlf::grad_check(net, xs, tgt, CellState::zeros(net, 2), 1e-5);
            EXPECT_LT(rep.max_rel_err, 1e-4)
                << stlf::to_string(kind) << " worst=" << rep.worst_param << "["
                << rep.worst_index << "] analytic=" << rep.analytic
                << " numeric=" << rep.numeric;
        }
    }
}

TEST(Backward, ScalarVanillaNearQuadraticAgreement) {
    StackedNetParams net = zero_net(CellKind::vanilla, 1, 1, 1);
    net.vanilla_layers[0].u_in(0, 0) = 0.7;
    net.vanilla_layers[0].w_rec(0, 0) = -0.4;
    net.vanilla_layers[0].b(0) = 0.1;
    net.output.w_yh(0, 0) = 1.3;
    net.output.b_y(0) = -0.2;
    std::vector<Matrix> xs = {scalar(0.9)};
    std::vector<Matrix> tgt = {scalar(0.2)};
    const auto rep = stlf::grad_check(net, xs, tgt, CellState::zeros(net, 1), 1e-5);
    EXPECT_LT(rep.max_rel_err, 1e-7);
}

TEST(GradCheck, DetectsInjectedFault) {
    stlf::Rng rng(55);
    StackedNetParams net = stlf::init_params({1, 4, 1, 1}, CellKind::lstm, 9);
    testutil::randomize_all(net, rng);
    auto xs = testutil::random_sequence(6, 1, 1, rng);
    auto tgt = targets_like(xs, rng);
    const CellState init = CellState::zeros(net, 1);

    const auto tr = stlf::stacked_forward(net, xs, init);
    StackedNetParams analytic = stlf::backward_bptt(net, tr, tgt);
    // sanity: honest gradients pass
    EXPECT_LT(stlf::grad_check_against(net, xs, tgt, init, 1e-5, analytic).max_rel_err, 1e-4);

    // deliberately zero the forget peephole gradient
    analytic.lstm_layers[0].w_fc.fill(0.0);
    const auto rep = stlf::grad_check_against(net, xs, tgt, init, 1e-5, analytic);
    EXPECT_GE(rep.max_rel_err, 1e-4);
    EXPECT_NE(rep.worst_param.find("w_fc"), std::string::npos) << rep.worst_param;
}

TEST(Backward, LstmZeroNetPropagatesZeroThroughTime) {
    StackedNetParams net = zero_net(CellKind::lstm, 1, 3, 1);
    std::vector<Matrix> xs = {scalar(0.4), scalar(-0.9)};
    const auto tr = stlf::stacked_forward(net, xs, CellState::zeros(net, 1));
    EXPECT_DOUBLE_EQ(tr.y[0](0, 0), 0.0);
    EXPECT_DOUBLE_EQ(tr.y[1](0, 0), 0.0);
}

TEST(Backward, BatchGradientIsMeanOfPerSampleGradients) {
    stlf::Rng rng(77);
    StackedNetParams net = stlf::init_params({1, 4, 2, 1}, CellKind::lstm, 2);
    testutil::randomize_all(net, rng);
    auto xs = testutil::random_sequence(4, 1, 3, rng);
    auto tgt = targets_like(xs, rng);

    const auto tr = stlf::stacked_forward(net, xs, CellState::zeros(net, 3));
    const StackedNetParams batch_grad = stlf::backward_bptt(net, tr, tgt);

    StackedNetParams sum = stlf::zeros_like(net);
    for (size_t col = 0; col < 3; ++col) {
        std::vector<Matrix> x1(xs.size(), Matrix(1, 1)), t1(xs.size(), Matrix(1, 1));
        for (size_t t = 0; t < xs.size(); ++t) {
            x1[t](0, 0) = xs[t](0, col);
            t1[t](0, 0) = tgt[t](0, col);
        }
        const auto tr1 = stlf::stacked_forward(net, x1, CellState::zeros(net, 1));
        const StackedNetParams g1 = stlf::backward_bptt(net, tr1, t1);
        std::vector<std::span<double>> spans;
        stlf::for_each_named_param(sum, [&](const std::string&, std::span<double> s) {
            spans.push_back(s);
        });
        size_t which = 0;
        stlf::for_each_named_param(const_cast<StackedNetParams&>(g1),
                                   [&](const std::string&, std::span<double> s) {
                                       for (size_t k = 0; k < s.size(); ++k)
                                           spans[which][k] += s[k] / 3.0;
                                       ++which;
                                   });
    }
    std::vector<double> a, b;
    stlf::for_each_named_param(const_cast<StackedNetParams&>(batch_grad),
                               [&](const std::string&, std::span<double> s) {
                                   a.insert(a.end(), s.begin(), s.end());
                               });
    stlf::for_each_named_param(sum, [&](const std::string&, std::span<double> s) {
        b.insert(b.end(), s.begin(), s.end());
    });
    ASSERT_EQ(a.size(), b.size());
    for (size_t i = 0; i < a.size(); ++i) EXPECT_NEAR(a[i], b[i], 1e-12);
}

}  // namespace
