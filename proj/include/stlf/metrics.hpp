#pragma once

#include <charconv>
#include <fstream>
#include <iomanip>
#include <map>
#include <sstream>
#include <string>
#include <vector>

#include "stlf/core.hpp"
#include "stlf/json.hpp"

namespace stlf {

inline double rmse(std::span<const double> y, std::span<const double> yhat) {
    if (y.empty() || y.size() != yhat.size())
        throw DataError("rmse: sequences must be non-empty and of equal length");
    double s = 0.0;
    for (size_t i = 0; i < y.size(); ++i) {
        const double d = y[i] - yhat[i];
        s += d * d;
    }
    return std::sqrt(s / static_cast<double>(y.size()));
}

inline double mae(std::span<const double> y, std::span<const double> yhat) {
    if (y.empty() || y.size() != yhat.size())
        throw DataError("mae: sequences must be non-empty and of equal length");
    double s = 0.0;
    for (size_t i = 0; i < y.size(); ++i) s += std::abs(y[i] - yhat[i]);
    return s / static_cast<double>(y.size());
}

struct MethodMetrics {
    double rmse_kw = 0.0;
    double mae_kw = 0.0;
};

struct PoolMetrics {
    int pool = 0;
    double rmse_kw = 0.0;
    double mae_kw = 0.0;
    size_t count = 0;
};

/// One evaluated method: a prediction trace aligned with the shared truth,
/// already in kW.
struct MethodTrace {
    std::string method;
    std::vector<double> actual_kw;
    std::vector<double> predicted_kw;
    std::vector<int> pool_index;
};

struct EvalReport {
    std::vector<std::pair<std::string, MethodMetrics>> rows;  // canonical order
    std::map<std::string, std::vector<PoolMetrics>> per_pool;
    json fingerprint;  // span, pooling, window, seeds, dataset hash
    size_t evaluated_points = 0;
};

/// Row order used throughout the reports.
inline const std::vector<std::string>& canonical_method_order() {
    static const std::vector<std::string> order = {"svr", "arima", "rnn", "drnn", "tprnn"};
    return order;
}

/// Published reference results shipped for side-by-side display; never
/// asserted against.
inline const std::vector<std::pair<std::string, MethodMetrics>>& reference_results() {
    static const std::vector<std::pair<std::string, MethodMetrics>> table = {
        {"svr", {0.96, 0.77}},  {"arima", {0.81, 0.75}}, {"rnn", {0.75, 0.55}},
        {"drnn", {0.39, 0.20}}, {"tprnn", {0.37, 0.19}},
    };
    return table;
}

inline EvalReport build_report(const std::vector<MethodTrace>& traces, json fingerprint) {
    if (traces.empty()) throw DataError("build_report: no traces");
    const auto& truth = traces.front().actual_kw;
    for (const auto& tr : traces) {
        if (tr.actual_kw.size() != tr.predicted_kw.size())
            throw DataError("build_report: trace '" + tr.method + "' misaligned internally");
        if (tr.actual_kw != truth)
            throw DataError("build_report: trace '" + tr.method +
                            "' is not aligned with the shared truth sequence");
    }

    EvalReport rep;
    rep.fingerprint = std::move(fingerprint);
    rep.evaluated_points = truth.size();

    auto rank = [](const std::string& m) {
        const auto& order = canonical_method_order();
        for (size_t i = 0; i < order.size(); ++i)
            if (order[i] == m) return i;
        return order.size();
    };
    std::vector<const MethodTrace*> sorted;
    for (const auto& tr : traces) sorted.push_back(&tr);
    std::sort(sorted.begin(), sorted.end(), [&](const MethodTrace* a, const MethodTrace* b) {
        const size_t ra = rank(a->method), rb = rank(b->method);
        return ra != rb ? ra < rb : a->method < b->method;
    });

    for (const MethodTrace* tr : sorted) {
        MethodMetrics m;
        m.rmse_kw = rmse(tr->actual_kw, tr->predicted_kw);
        m.mae_kw = mae(tr->actual_kw, tr->predicted_kw);
        rep.rows.emplace_back(tr->method, m);

        // per-pool breakdown
        std::map<int, std::vector<size_t>> by_pool;
        for (size_t i = 0; i < tr->pool_index.size(); ++i)
            by_pool[tr->pool_index[i]].push_back(i);
        for (const auto& [pool, idx] : by_pool) {
            std::vector<double> a, p;
            a.reserve(idx.size());
            p.reserve(idx.size());
            for (size_t i : idx) {
                a.push_back(tr->actual_kw[i]);
                p.push_back(tr->predicted_kw[i]);
            }
            PoolMetrics pm;
            pm.pool = pool;
            pm.rmse_kw = rmse(a, p);
            pm.mae_kw = mae(a, p);
            pm.count = idx.size();
            rep.per_pool[tr->method].push_back(pm);
        }
    }
    return rep;
}

inline json report_to_json(const EvalReport& rep) {
    json j;
    j["fingerprint"] = rep.fingerprint;
    j["evaluated_points"] = rep.evaluated_points;
    j["rows"] = json::array();
    for (const auto& [method, m] : rep.rows)
        j["rows"].push_back({{"method", method}, {"rmse_kw", m.rmse_kw}, {"mae_kw", m.mae_kw}});
    j["per_pool"] = json::object();
    for (const auto& [method, pools] : rep.per_pool) {
        json arr = json::array();
        for (const auto& pm : pools)
            arr.push_back({{"pool", pm.pool},
                           {"rmse_kw", pm.rmse_kw},
                           {"mae_kw", pm.mae_kw},
                           {"count", pm.count}});
        j["per_pool"][method] = arr;
    }
    j["reference"] = json::array();
    for (const auto& [method, m] : reference_results())
        j["reference"].push_back(
            {{"method", method}, {"rmse_kw", m.rmse_kw}, {"mae_kw", m.mae_kw}});
    return j;
}

/// Aligned plain-text table with the published reference alongside.
inline std::string render_report_table(const EvalReport& rep) {
    std::ostringstream os;
    os << std::fixed;
    os << "method    rmse_kw    mae_kw    ref_rmse   ref_mae\n";
    os << "-------  --------  --------   --------  --------\n";
    auto ref_for = [](const std::string& m) -> const MethodMetrics* {
        for (const auto& [name, metrics] : reference_results())
            if (name == m) return &metrics;
        return nullptr;
    };
    for (const auto& [method, m] : rep.rows) {
        os << std::left << std::setw(7) << method << "  " << std::right << std::setw(8)
           << std::setprecision(4) << m.rmse_kw << "  " << std::setw(8) << m.mae_kw << "   ";
        if (const MethodMetrics* ref = ref_for(method)) {
            os << std::setw(8) << std::setprecision(2) << ref->rmse_kw << "  " << std::setw(8)
               << ref->mae_kw;
        } else {
            os << std::setw(8) << "-" << "  " << std::setw(8) << "-";
        }
        os << '\n';
    }
    os << "(reference columns show published results for comparison, not targets)\n";
    return os.str();
}

/// Plot-ready CSV: `timestamp_iso8601,actual_kw,predicted_kw`.
inline void export_trace(const std::string& path, const std::vector<std::string>& timestamps,
                         std::span<const double> actual_kw, std::span<const double> predicted_kw) {
    if (timestamps.size() != actual_kw.size() || actual_kw.size() != predicted_kw.size())
        throw DataError("export_trace: misaligned columns");
    std::ofstream out(path, std::ios::trunc);
    if (!out) throw DataError("cannot write trace '" + path + "'");
    out << "timestamp_iso8601,actual_kw,predicted_kw\n";
    char num[64];
    auto put = [&](double v) {
        const auto r = std::to_chars(num, num + sizeof(num), v);
        out << std::string_view(num, static_cast<size_t>(r.ptr - num));
    };
    for (size_t i = 0; i < timestamps.size(); ++i) {
        out << timestamps[i] << ',';
        put(actual_kw[i]);
        out << ',';
        put(predicted_kw[i]);
        out << '\n';
    }
    if (!out) throw DataError("short write to trace '" + path + "'");
}

}  // namespace stlf
