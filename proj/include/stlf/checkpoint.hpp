#pragma once

#include <fstream>
#include <memory>
#include <string>

#include "stlf/dataset.hpp"
#include "stlf/forecast.hpp"
#include "stlf/json.hpp"

namespace stlf {

// Self-describing model container. JSON keeps doubles bit-exact through the
// shortest-round-trip writer, so save -> load -> save is byte-identical.

namespace detail {

inline json matrix_to_json(const Matrix& m) {
    json rows = json::array();
    for (size_t r = 0; r < m.rows(); ++r) {
        json row = json::array();
        for (size_t c = 0; c < m.cols(); ++c) row.push_back(m(r, c));
        rows.push_back(std::move(row));
    }
    return rows;
}

inline Matrix matrix_from_json(const json& j) {
    const size_t rows = j.size();
    const size_t cols = rows == 0 ? 0 : j.at(0).size();
    Matrix m(rows, cols);
    for (size_t r = 0; r < rows; ++r) {
        const json& row = j.at(r);
        if (row.size() != cols) throw DataError("checkpoint: ragged matrix rows");
        for (size_t c = 0; c < cols; ++c) m(r, c) = row.at(c).get<double>();
    }
    return m;
}

inline json vector_to_json(const Vector& v) {
    json out = json::array();
    for (size_t i = 0; i < v.size(); ++i) out.push_back(v(i));
    return out;
}

inline Vector vector_from_json(const json& j) {
    Vector v(j.size());
    for (size_t i = 0; i < j.size(); ++i) v(i) = j.at(i).get<double>();
    return v;
}

inline json net_to_json(const StackedNetParams& net) {
    json j;
    j["cell"] = to_string(net.cell);
    j["layers"] = json::array();
    if (net.cell == CellKind::lstm) {
        for (const auto& l : net.lstm_layers) {
            json lj;
            lj["w_ix"] = matrix_to_json(l.w_ix);
            lj["w_fx"] = matrix_to_json(l.w_fx);
            lj["w_ox"] = matrix_to_json(l.w_ox);
            lj["w_cx"] = matrix_to_json(l.w_cx);
            lj["w_ih"] = matrix_to_json(l.w_ih);
            lj["w_fh"] = matrix_to_json(l.w_fh);
            lj["w_oh"] = matrix_to_json(l.w_oh);
            lj["w_ch"] = matrix_to_json(l.w_ch);
            lj["w_ic"] = vector_to_json(l.w_ic);
            lj["w_fc"] = vector_to_json(l.w_fc);
            lj["w_oc"] = vector_to_json(l.w_oc);
            lj["b_i"] = vector_to_json(l.b_i);
            lj["b_f"] = vector_to_json(l.b_f);
            lj["b_o"] = vector_to_json(l.b_o);
            lj["b_c"] = vector_to_json(l.b_c);
            j["layers"].push_back(std::move(lj));
        }
    } else {
        for (const auto& l : net.vanilla_layers) {
            json lj;
            lj["u_in"] = matrix_to_json(l.u_in);
            lj["w_rec"] = matrix_to_json(l.w_rec);
            lj["b"] = vector_to_json(l.b);
            j["layers"].push_back(std::move(lj));
        }
    }
    j["output"] = {{"w_yh", matrix_to_json(net.output.w_yh)},
                   {"b_y", vector_to_json(net.output.b_y)}};
    return j;
}

inline StackedNetParams net_from_json(const json& j) {
    StackedNetParams net;
    net.cell = cell_kind_from_string(j.at("cell").get<std::string>());
    for (const json& lj : j.at("layers")) {
        if (net.cell == CellKind::lstm) {
            LSTMLayerParams p;
            p.w_ix = matrix_from_json(lj.at("w_ix"));
            p.w_fx = matrix_from_json(lj.at("w_fx"));
            p.w_ox = matrix_from_json(lj.at("w_ox"));
            p.w_cx = matrix_from_json(lj.at("w_cx"));
            p.w_ih = matrix_from_json(lj.at("w_ih"));
            p.w_fh = matrix_from_json(lj.at("w_fh"));
            p.w_oh = matrix_from_json(lj.at("w_oh"));
            p.w_ch = matrix_from_json(lj.at("w_ch"));
            p.w_ic = vector_from_json(lj.at("w_ic"));
            p.w_fc = vector_from_json(lj.at("w_fc"));
            p.w_oc = vector_from_json(lj.at("w_oc"));
            p.b_i = vector_from_json(lj.at("b_i"));
            p.b_f = vector_from_json(lj.at("b_f"));
            p.b_o = vector_from_json(lj.at("b_o"));
            p.b_c = vector_from_json(lj.at("b_c"));
            net.lstm_layers.push_back(std::move(p));
        } else {
            VanillaLayerParams p;
            p.u_in = matrix_from_json(lj.at("u_in"));
            p.w_rec = matrix_from_json(lj.at("w_rec"));
            p.b = vector_from_json(lj.at("b"));
            net.vanilla_layers.push_back(std::move(p));
        }
    }
    net.output.w_yh = matrix_from_json(j.at("output").at("w_yh"));
    net.output.b_y = vector_from_json(j.at("output").at("b_y"));
    return net;
}

}  // namespace detail

/// Everything needed to reuse a fitted model: the model itself plus the data
/// handling it was trained under.
struct Checkpoint {
    std::string method;  // svr | arima | rnn | drnn | tprnn
    std::unique_ptr<ForecastModel> model;
    NormalizationParams norm;
    int lookback = 0;
    uint64_t seed = 0;
    json fingerprint;  // dataset/span/pooling identity, compared before evaluation
};

inline json checkpoint_to_json(const Checkpoint& ck) {
    json j;
    j["format"] = "stlf-checkpoint";
    j["version"] = 1;
    j["method"] = ck.method;
    j["lookback"] = ck.lookback;
    j["seed"] = ck.seed;
    j["normalization"] = {{"min", ck.norm.min}, {"max", ck.norm.max}};
    j["fingerprint"] = ck.fingerprint;
    if (const auto* ar = dynamic_cast<const ArModel*>(ck.model.get())) {
        j["kind"] = "ar";
        j["params"] = {{"p", ar->params().p},
                       {"d", ar->differencing_order()},
                       {"phi", ar->params().phi},
                       {"delta", ar->params().delta},
                       {"mu", ar->params().mu},
                       {"fallback", ar->params().fallback}};
    } else if (const auto* svr = dynamic_cast<const SvrModel*>(ck.model.get())) {
        j["kind"] = "svr";
        j["params"] = {{"w", svr->params().w},
                       {"b", svr->params().b},
                       {"epsilon", svr->params().epsilon},
                       {"c", svr->params().c}};
    } else if (const auto* nn = dynamic_cast<const NeuralModel*>(ck.model.get())) {
        j["kind"] = "neural";
        j["precision"] = "float64";
        j["params"] = detail::net_to_json(nn->net());
    } else {
        throw DataError("checkpoint: unknown model type");
    }
    return j;
}

inline Checkpoint checkpoint_from_json(const json& j) {
    if (j.value("format", "") != "stlf-checkpoint")
        throw DataError("not a checkpoint file");
    Checkpoint ck;
    ck.method = j.at("method").get<std::string>();
    ck.lookback = j.at("lookback").get<int>();
    ck.seed = j.at("seed").get<uint64_t>();
    ck.norm.min = j.at("normalization").at("min").get<double>();
    ck.norm.max = j.at("normalization").at("max").get<double>();
    ck.fingerprint = j.at("fingerprint");
    const std::string kind = j.at("kind").get<std::string>();
    const json& p = j.at("params");
    if (kind == "ar") {
        ARParams ar;
        ar.p = p.at("p").get<int>();
        ar.phi = p.at("phi").get<std::vector<double>>();
        ar.delta = p.at("delta").get<double>();
        ar.mu = p.at("mu").get<double>();
        ar.fallback = p.at("fallback").get<bool>();
        ck.model = std::make_unique<ArModel>(std::move(ar), p.at("d").get<int>(), ck.method);
    } else if (kind == "svr") {
        SVRParams sp;
        sp.w = p.at("w").get<std::vector<double>>();
        sp.b = p.at("b").get<double>();
        sp.epsilon = p.at("epsilon").get<double>();
        sp.c = p.at("c").get<double>();
        ck.model = std::make_unique<SvrModel>(std::move(sp), ck.method);
    } else if (kind == "neural") {
        ck.model = std::make_unique<NeuralModel>(detail::net_from_json(p),
                                                 static_cast<size_t>(ck.lookback), ck.method);
    } else {
        throw DataError("checkpoint: unknown kind '" + kind + "'");
    }
    return ck;
}

inline void save_checkpoint(const std::string& path, const Checkpoint& ck) {
    std::ofstream out(path, std::ios::trunc);
    if (!out) throw DataError("cannot write checkpoint '" + path + "'");
    out << checkpoint_to_json(ck).dump(2) << '\n';
    if (!out) throw DataError("short write to checkpoint '" + path + "'");
}

inline Checkpoint load_checkpoint(const std::string& path) {
    std::ifstream in(path);
    if (!in) throw DataError("cannot open checkpoint '" + path + "'");
    json j;
    try {
        in >> j;
    } catch (const std::exception& e) {
        throw DataError("bad checkpoint '" + path + "': " + e.what());
    }
    return checkpoint_from_json(j);
}

}  // namespace stlf
