#pragma once

#include <numeric>
#include <span>
#include <vector>

#include "stlf/core.hpp"

namespace stlf {

/**
 * Autoregressive model y(t) = delta + sum_i phi_i y(t-i) + noise, with the
 * intercept tied to the process mean: delta = (1 - sum phi) * mu.
 */
struct ARParams {
    int p = 0;
    std::vector<double> phi;  // phi[0] multiplies the most recent value
    double delta = 0.0;
    double mu = 0.0;
    bool fallback = false;  // true when a singular lag matrix forced phi = 0

    static ARParams from_phi_mu(std::vector<double> phi_in, double mu_in) {
        ARParams a;
        a.p = static_cast<int>(phi_in.size());
        a.phi = std::move(phi_in);
        a.mu = mu_in;
        const double s = std::accumulate(a.phi.begin(), a.phi.end(), 0.0);
        a.delta = (1.0 - s) * mu_in;
        return a;
    }
};

namespace detail {

/// Solves A x = b in place by Gaussian elimination with partial pivoting.
/// Returns false when a pivot collapses (singular system).
inline bool solve_linear(std::vector<std::vector<double>>& a, std::vector<double>& b) {
    const size_t n = b.size();
    for (size_t col = 0; col < n; ++col) {
        size_t piv = col;
        for (size_t r = col + 1; r < n; ++r)
            if (std::abs(a[r][col]) > std::abs(a[piv][col])) piv = r;
        if (std::abs(a[piv][col]) < 1e-12) return false;
        std::swap(a[piv], a[col]);
        std::swap(b[piv], b[col]);
        for (size_t r = col + 1; r < n; ++r) {
            const double factor = a[r][col] / a[col][col];
            for (size_t c = col; c < n; ++c) a[r][c] -= factor * a[col][c];
            b[r] -= factor * b[col];
        }
    }
    for (size_t col = n; col-- > 0;) {
        for (size_t c = col + 1; c < n; ++c) b[col] -= a[col][c] * b[c];
        b[col] /= a[col][col];
    }
    return true;
}

}  // namespace detail

/// Least-squares fit of the lag coefficients on the mean-centered series.
/// A singular lag matrix (e.g. a constant series) falls back to phi = 0,
/// which predicts the mean.
inline ARParams ar_fit(std::span<const double> series, int p) {
    if (p < 1) throw ConfigError("AR order must be >= 1");
    const size_t n = series.size();
    if (n <= static_cast<size_t>(p) + 1)
        throw DataError("AR fit needs more than p+1 = " + std::to_string(p + 1) + " samples");

    double mu = 0.0;
    for (double v : series) mu += v;
    mu /= static_cast<double>(n);

    // normal equations over centered lags
    const size_t order = static_cast<size_t>(p);
    std::vector<std::vector<double>> a(order, std::vector<double>(order, 0.0));
    std::vector<double> b(order, 0.0);
    for (size_t t = order; t < n; ++t) {
        const double zt = series[t] - mu;
        for (size_t i = 0; i < order; ++i) {
            const double zi = series[t - 1 - i] - mu;
            b[i] += zi * zt;
            for (size_t j = i; j < order; ++j) a[i][j] += zi * (series[t - 1 - j] - mu);
        }
    }
    for (size_t i = 0; i < order; ++i)
        for (size_t j = 0; j < i; ++j) a[i][j] = a[j][i];

    ARParams out;
    if (detail::solve_linear(a, b)) {
        out = ARParams::from_phi_mu(std::move(b), mu);
    } else {
        out = ARParams::from_phi_mu(std::vector<double>(order, 0.0), mu);
        out.fallback = true;
    }
    return out;
}

/// One-step prediction from the last p values; context.back() is the most
/// recent observation.
inline double ar_predict(const ARParams& params, std::span<const double> context) {
    if (context.size() != static_cast<size_t>(params.p))
        throw DataError("AR prediction needs exactly p = " + std::to_string(params.p) +
                        " context values");
    double y = params.delta;
    for (int i = 0; i < params.p; ++i)
        y += params.phi[static_cast<size_t>(i)] * context[context.size() - 1 - static_cast<size_t>(i)];
    return y;
}

/// First-order differencing applied d times; each pass shortens the series
/// by one.
inline std::vector<double> differencing(std::span<const double> series, int d) {
    if (d < 0) throw ConfigError("differencing order must be >= 0");
    if (series.size() <= static_cast<size_t>(d))
        throw DataError("series too short for differencing order " + std::to_string(d));
    std::vector<double> out(series.begin(), series.end());
    for (int pass = 0; pass < d; ++pass) {
        for (size_t i = 0; i + 1 < out.size(); ++i) out[i] = out[i + 1] - out[i];
        out.pop_back();
    }
    return out;
}

/// Inverse of `differencing`, given the first d values of the original
/// series. Restores the original exactly.
inline std::vector<double> inverse_differencing(std::span<const double> diffed,
                                                std::span<const double> first_values) {
    const int d = static_cast<int>(first_values.size());
    // seeds for each level: level k's first element is the k-th difference
    // of the retained head values
    std::vector<std::vector<double>> heads(static_cast<size_t>(d) + 1);
    heads[0].assign(first_values.begin(), first_values.end());
    for (int k = 1; k <= d; ++k) {
        const auto& prev = heads[static_cast<size_t>(k - 1)];
        auto& cur = heads[static_cast<size_t>(k)];
        cur.resize(prev.size() - 1);
        for (size_t i = 0; i + 1 < prev.size(); ++i) cur[i] = prev[i + 1] - prev[i];
    }
    std::vector<double> level(diffed.begin(), diffed.end());
    for (int k = d; k-- > 0;) {
        std::vector<double> up(level.size() + 1);
        up[0] = heads[static_cast<size_t>(k)][0];
        for (size_t i = 0; i < level.size(); ++i) up[i + 1] = up[i] + level[i];
        level = std::move(up);
    }
    return level;
}

}  // namespace stlf
