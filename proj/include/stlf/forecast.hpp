#pragma once

#include <memory>
#include <string>

#include "stlf/ar.hpp"
#include "stlf/svr.hpp"
#include "stlf/training.hpp"

namespace stlf {

/**
 * Common contract for all five methods: fit once (via the factory functions
 * below), then deterministically map a lookback context to the next value.
 * Inputs and outputs are in normalized units.
 */
class ForecastModel {
  public:
    virtual ~ForecastModel() = default;

    virtual std::string name() const = 0;

    /// Smallest usable context length.
    virtual size_t min_context() const = 0;

    virtual double predict(std::span<const double> context) const = 0;

    /// Batched variant; the default just loops.
    virtual std::vector<double> predict_many(const std::vector<std::span<const double>>& ctx) const {
        std::vector<double> out(ctx.size());
        for (size_t i = 0; i < ctx.size(); ++i) out[i] = predict(ctx[i]);
        return out;
    }
};

class ArModel final : public ForecastModel {
  public:
    ArModel(ARParams params, int d, std::string label = "arima")
        : params_(std::move(params)), d_(d), label_(std::move(label)) {}

    std::string name() const override { return label_; }
    size_t min_context() const override { return static_cast<size_t>(params_.p + d_); }
    const ARParams& params() const { return params_; }
    int differencing_order() const { return d_; }

    double predict(std::span<const double> context) const override {
        if (context.size() < min_context())
            throw DataError(label_ + " needs at least " + std::to_string(min_context()) +
                            " context values");
        // difference the tail, predict the next difference, then integrate
        // back up level by level from each level's last value
        const size_t need = min_context();
        std::span<const double> tail = context.subspan(context.size() - need);
        std::vector<double> level(tail.begin(), tail.end());
        std::vector<double> last_values;  // last value at each level, bottom-up
        for (int k = 0; k < d_; ++k) {
            last_values.push_back(level.back());
            for (size_t i = 0; i + 1 < level.size(); ++i) level[i] = level[i + 1] - level[i];
            level.pop_back();
        }
        double next = ar_predict(params_, level);
        for (int k = d_; k-- > 0;) next += last_values[static_cast<size_t>(k)];
        return next;
    }

  private:
    ARParams params_;
    int d_;
    std::string label_;
};

class SvrModel final : public ForecastModel {
  public:
    explicit SvrModel(SVRParams params, std::string label = "svr")
        : params_(std::move(params)), label_(std::move(label)) {}

    std::string name() const override { return label_; }
    size_t min_context() const override { return params_.w.size(); }
    const SVRParams& params() const { return params_; }

    double predict(std::span<const double> context) const override {
        if (context.size() < params_.w.size())
            throw DataError(label_ + " needs at least " + std::to_string(params_.w.size()) +
                            " context values");
        return svr_predict(params_, context.subspan(context.size() - params_.w.size()));
    }

  private:
    SVRParams params_;
    std::string label_;
};

class NeuralModel final : public ForecastModel {
  public:
    NeuralModel(StackedNetParams net, size_t lookback, std::string label)
        : net_(std::move(net)), lookback_(lookback), label_(std::move(label)) {}

    std::string name() const override { return label_; }
    size_t min_context() const override { return 1; }
    const StackedNetParams& net() const { return net_; }
    size_t lookback() const { return lookback_; }

    double predict(std::span<const double> context) const override {
        if (context.empty()) throw DataError(label_ + " needs a non-empty context");
        std::vector<Matrix> xs(context.size(), Matrix(1, 1));
        for (size_t t = 0; t < context.size(); ++t) xs[t](0, 0) = context[t];
        CellState st = CellState::zeros(net_, 1);
        return stacked_forward(net_, xs, st).y.back()(0, 0);
    }

    std::vector<double> predict_many(const std::vector<std::span<const double>>& ctx) const override {
        if (ctx.empty()) return {};
        const size_t w = ctx.front().size();
        for (const auto& c : ctx)
            if (c.size() != w) throw DataError("predict_many: ragged context lengths");
        std::vector<double> out(ctx.size());
        constexpr size_t kChunk = 512;
        std::vector<Matrix> xs;
        for (size_t from = 0; from < ctx.size(); from += kChunk) {
            const size_t b = std::min(ctx.size() - from, kChunk);
            xs.assign(w, Matrix(1, b));
            for (size_t col = 0; col < b; ++col)
                for (size_t t = 0; t < w; ++t) xs[t](0, col) = ctx[from + col][t];
            CellState st = CellState::zeros(net_, b);
            const Matrix& y = stacked_forward(net_, xs, st).y.back();
            for (size_t col = 0; col < b; ++col) out[from + col] = y(0, col);
        }
        return out;
    }

  private:
    StackedNetParams net_;
    size_t lookback_;
    std::string label_;
};

enum class RecurrentKind { rnn, drnn };

struct NeuralTrainResult {
    std::unique_ptr<NeuralModel> model;
    std::vector<EpochLog> log;
    size_t best_epoch = 0;
};

/// Trains the single-layer ("rnn") or stacked ("drnn") network on a single
/// chronological sample stream.
inline NeuralTrainResult train_recurrent(RecurrentKind kind,
                                         const std::vector<WindowSample>& samples_chrono,
                                         TrainHyper hyper, uint64_t seed,
                                         const EpochSink& sink = {}) {
    if (kind == RecurrentKind::rnn) hyper.layers = 1;
    const std::string label = kind == RecurrentKind::rnn ? "rnn" : "drnn";
    TrainedNet trained = train_window_model(samples_chrono, /*shuffle_epochs=*/false, hyper, seed, sink);
    const size_t w = samples_chrono.front().input.size();
    NeuralTrainResult out;
    out.model = std::make_unique<NeuralModel>(std::move(trained.net), w, label);
    out.log = std::move(trained.log);
    out.best_epoch = trained.best_epoch;
    return out;
}

/// Trains the same architecture as "drnn", but feeds it the cross-pool
/// interleaved stream instead of a single chronological one.
inline NeuralTrainResult train_tprnn(const PoolSet& pool_train, int w, TrainHyper hyper,
                                     uint64_t seed, const EpochSink& sink = {}) {
    std::vector<WindowSample> samples = chronological_windows(pool_train, w);
    TrainedNet trained = train_window_model(samples, /*shuffle_epochs=*/true, hyper, seed, sink);
    NeuralTrainResult out;
    out.model = std::make_unique<NeuralModel>(std::move(trained.net), static_cast<size_t>(w), "tprnn");
    out.log = std::move(trained.log);
    out.best_epoch = trained.best_epoch;
    return out;
}

/// One aligned prediction trace: for position k, `predicted[k]` estimates
/// `actual[k]` from the w true values before it.
struct ForecastTrace {
    std::vector<double> actual;     // normalized units
    std::vector<double> predicted;  // normalized units
    std::vector<int> pool_index;    // provenance of each position
    std::vector<int> week_index;
    std::vector<int> offset;        // position inside the segment
};

/// Teacher-forced one-step-ahead evaluation over test segments: every
/// prediction conditions on true past values only.
inline ForecastTrace rolling_forecast(const ForecastModel& model,
                                      const std::vector<Segment>& segments, int w) {
    if (w < 1) throw ConfigError("lookback must be >= 1");
    ForecastTrace trace;
    for (const Segment& seg : segments) {
        if (seg.values.size() < static_cast<size_t>(w) + 1)
            throw DataError("segment shorter than w+1 = " + std::to_string(w + 1));
        std::vector<std::span<const double>> ctx;
        ctx.reserve(seg.values.size() - static_cast<size_t>(w));
        for (size_t pos = static_cast<size_t>(w); pos < seg.values.size(); ++pos)
            ctx.emplace_back(seg.values.data() + pos - static_cast<size_t>(w),
                             static_cast<size_t>(w));
        const std::vector<double> pred = model.predict_many(ctx);
        for (size_t k = 0; k < pred.size(); ++k) {
            const size_t pos = static_cast<size_t>(w) + k;
            trace.actual.push_back(seg.values[pos]);
            trace.predicted.push_back(pred[k]);
            trace.pool_index.push_back(seg.slot_index);
            trace.week_index.push_back(seg.week_index);
            trace.offset.push_back(static_cast<int>(pos));
        }
    }
    return trace;
}

/// Test segments of a pool set in chronological order.
inline std::vector<Segment> chronological_segments(const PoolSet& set) {
    std::vector<Segment> segs;
    for (const auto& pool : set.pools)
        for (const auto& seg : pool) segs.push_back(seg);
    std::sort(segs.begin(), segs.end(), [](const Segment& a, const Segment& b) {
        return std::pair(a.week_index, a.slot_index) < std::pair(b.week_index, b.slot_index);
    });
    return segs;
}

}  // namespace stlf
