#include <gtest/gtest.h>

#include <fstream>
#include <sstream>

#include "test_util.hpp"

namespace {

// independent naive reimplementation used as the metric oracle
double naive_rmse(const std::vector<double>& y, const std::vector<double>& yhat) {
    double acc = 0;
    for (size_t i = 0; i < y.size(); ++i) acc += (y[i] - yhat[i]) * (y[i] - yhat[i]);
    return std::sqrt(acc / static_cast<double>(y.size()));
}

double naive_mae(const std::vector<double>& y, const std::vector<double>& yhat) {
    double acc = 0;
    for (size_t i = 0; i < y.size(); ++i) acc += std::abs(y[i] - yhat[i]);
    return acc / static_cast<double>(y.size());
}

TEST(Metrics, HandValues) {
    const std::vector<double> y = {1, 2, 3};
    const std::vector<double> zero = {0, 0, 0};
    EXPECT_NEAR(stlf::rmse(y, zero), std::sqrt(14.0 / 3.0), 1e-15);
    EXPECT_DOUBLE_EQ(stlf::mae(y, zero), 2.0);
    EXPECT_DOUBLE_EQ(stlf::rmse(y, y), 0.0);
    EXPECT_DOUBLE_EQ(stlf::mae(y, y), 0.0);
    EXPECT_DOUBLE_EQ(stlf::rmse({0.0, 0.0}, {1.0, 1.0}), 1.0);
    EXPECT_DOUBLE_EQ(stlf::mae({0.0, 0.0}, {1.0, -1.0}), 1.0);
}

TEST(Metrics, EmptyOrMismatchedFail) {
    EXPECT_THROW(stlf::rmse({}, {}), stlf::DataError);
    EXPECT_THROW(stlf::mae({1.0}, {1.0, 2.0}), stlf::DataError);
}

TEST(Metrics, OracleEquivalenceOnRandomPairs) {
    stlf::Rng rng(13);
    for (int trial = 0; trial < 100; ++trial) {
        const size_t n = 1 + rng.below(500);
        std::vector<double> y(n), yhat(n);
        for (size_t i = 0; i < n; ++i) {
            y[i] = rng.uniform(-10, 10);
            yhat[i] = rng.uniform(-10, 10);
        }
        const double r = stlf::rmse(y, yhat);
        const double m = stlf::mae(y, yhat);
        EXPECT_NEAR(r, naive_rmse(y, yhat), 1e-12 * std::max(1.0, r));
        EXPECT_NEAR(m, naive_mae(y, yhat), 1e-12 * std::max(1.0, m));
        EXPECT_GE(r, m);  // power-mean inequality
    }
}

TEST(Metrics, ScaleEquivariance) {
    stlf::Rng rng(14);
    std::vector<double> y(64), yhat(64);
    for (size_t i = 0; i < y.size(); ++i) {
        y[i] = rng.uniform(-5, 5);
        yhat[i] = rng.uniform(-5, 5);
    }
    for (double alpha : {2.0, -3.5, 0.1}) {
        std::vector<double> ys = y, yh = yhat;
        for (double& v : ys) v *= alpha;
        for (double& v : yh) v *= alpha;
        EXPECT_NEAR(stlf::rmse(ys, yh), std::abs(alpha) * stlf::rmse(y, yhat), 1e-12);
        EXPECT_NEAR(stlf::mae(ys, yh), std::abs(alpha) * stlf::mae(y, yhat), 1e-12);
    }
}

stlf::MethodTrace trace_for(const std::string& method, const std::vector<double>& actual,
                            const std::vector<double>& predicted) {
    stlf::MethodTrace t;
    t.method = method;
    t.actual_kw = actual;
    t.predicted_kw = predicted;
    t.pool_index.assign(actual.size(), 0);
    for (size_t i = actual.size() / 2; i < actual.size(); ++i) t.pool_index[i] = 1;
    return t;
}

TEST(Report, CanonicalRowOrder) {
    const std::vector<double> actual = {1, 2, 3, 4};
    std::vector<stlf::MethodTrace> traces;
    for (const char* m : {"tprnn", "rnn", "svr", "drnn", "arima"})
        traces.push_back(trace_for(m, actual, {1.5, 2.5, 3.5, 4.5}));
    const stlf::EvalReport rep = stlf::build_report(traces, stlf::json::object());
    ASSERT_EQ(rep.rows.size(), 5u);
    EXPECT_EQ(rep.rows[0].first, "svr");
    EXPECT_EQ(rep.rows[1].first, "arima");
    EXPECT_EQ(rep.rows[2].first, "rnn");
    EXPECT_EQ(rep.rows[3].first, "drnn");
    EXPECT_EQ(rep.rows[4].first, "tprnn");
}

TEST(Report, PerfectPredictionsGiveZeroRow) {
    const std::vector<double> actual = {1, 2, 3, 4};
    const stlf::EvalReport rep =
        stlf::build_report({trace_for("rnn", actual, actual)}, stlf::json::object());
    EXPECT_DOUBLE_EQ(rep.rows[0].second.rmse_kw, 0.0);
    EXPECT_DOUBLE_EQ(rep.rows[0].second.mae_kw, 0.0);
}

TEST(Report, IdenticalTracesGiveIdenticalRows) {
    const std::vector<double> actual = {1, 2, 3, 4};
    const std::vector<double> pred = {1.25, 2.5, 2.75, 4.5};
    const stlf::EvalReport rep = stlf::build_report(
        {trace_for("rnn", actual, pred), trace_for("drnn", actual, pred)}, stlf::json::object());
    EXPECT_DOUBLE_EQ(rep.rows[0].second.rmse_kw, rep.rows[1].second.rmse_kw);
    EXPECT_DOUBLE_EQ(rep.rows[0].second.mae_kw, rep.rows[1].second.mae_kw);
}

TEST(Report, MisalignedTracesFail) {
    std::vector<stlf::MethodTrace> traces = {trace_for("rnn", {1, 2, 3}, {1, 2, 3}),
                                             trace_for("drnn", {1, 2, 4}, {1, 2, 3})};
    EXPECT_THROW(stlf::build_report(traces, stlf::json::object()), stlf::DataError);
}

TEST(Report, PerPoolBreakdownAndReference) {
    const std::vector<double> actual = {1, 2, 3, 4};
    const stlf::EvalReport rep =
        stlf::build_report({trace_for("tprnn", actual, {2, 3, 3, 4})}, stlf::json::object());
    ASSERT_EQ(rep.per_pool.at("tprnn").size(), 2u);
    EXPECT_DOUBLE_EQ(rep.per_pool.at("tprnn")[0].rmse_kw, 1.0);  // pool 0 off by one
    EXPECT_DOUBLE_EQ(rep.per_pool.at("tprnn")[1].rmse_kw, 0.0);  // pool 1 exact
    // the static reference table rides along in the serialized report
    const stlf::json j = stlf::report_to_json(rep);
    ASSERT_EQ(j.at("reference").size(), 5u);
    EXPECT_EQ(j.at("reference")[0].at("method"), "svr");
    EXPECT_DOUBLE_EQ(j.at("reference")[4].at("rmse_kw").get<double>(), 0.37);
    const std::string table = stlf::render_report_table(rep);
    EXPECT_NE(table.find("tprnn"), std::string::npos);
    EXPECT_NE(table.find("0.37"), std::string::npos);
}

TEST(Report, SerializationIsDeterministic) {
    const std::vector<double> actual = {1, 2, 3, 4};
    const auto make = [&] {
        return stlf::report_to_json(stlf::build_report(
            {trace_for("rnn", actual, {1.5, 2.5, 3.5, 4.25})},
            stlf::json{{"seed", 1}, {"weeks", 4}}));
    };
    EXPECT_EQ(make().dump(2), make().dump(2));
}

TEST(ExportTrace, RowsRoundTripAtWrittenPrecision) {
    const std::string dir = testutil::fresh_dir("export_trace");
    std::vector<std::string> ts;
    std::vector<double> actual, pred;
    stlf::Rng rng(2);
    for (int i = 0; i < 660; ++i) {
        ts.push_back(stlf::iso8601_from_minute(19450080 + i));
        actual.push_back(rng.uniform(0, 8));
        pred.push_back(rng.uniform(0, 8));
    }
    const std::string path = dir + "/trace.csv";
    stlf::export_trace(path, ts, actual, pred);

    std::ifstream in(path);
    std::string header;
    std::getline(in, header);
    EXPECT_EQ(header, "timestamp_iso8601,actual_kw,predicted_kw");
    size_t rows = 0;
    std::string line;
    while (std::getline(in, line)) {
        const size_t c1 = line.find(','), c2 = line.rfind(',');
        ASSERT_NE(c1, std::string::npos);
        ASSERT_NE(c2, c1);
        EXPECT_EQ(line.substr(0, c1), ts[rows]);
        // shortest-round-trip formatting: parsing back returns the exact double
        EXPECT_EQ(std::stod(line.substr(c1 + 1, c2 - c1 - 1)), actual[rows]);
        EXPECT_EQ(std::stod(line.substr(c2 + 1)), pred[rows]);
        ++rows;
    }
    EXPECT_EQ(rows, 660u);
}

TEST(ExportTrace, EmptyGivesHeaderOnly) {
    const std::string dir = testutil::fresh_dir("export_trace_empty");
    const std::string path = dir + "/trace.csv";
    stlf::export_trace(path, {}, {}, {});
    std::ifstream in(path);
    std::string header, extra;
    EXPECT_TRUE(static_cast<bool>(std::getline(in, header)));
    EXPECT_EQ(header, "timestamp_iso8601,actual_kw,predicted_kw");
    EXPECT_FALSE(static_cast<bool>(std::getline(in, extra)));
}

TEST(ExportTrace, MisalignedColumnsFail) {
    EXPECT_THROW(stlf::export_trace("/tmp/x.csv", {"a"}, {1.0, 2.0}, {1.0}), stlf::DataError);
}

}  // namespace
