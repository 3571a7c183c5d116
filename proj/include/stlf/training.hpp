#pragma once

#include <functional>

#include "stlf/optimizer.hpp"
#include "stlf/pooling.hpp"

namespace stlf {

struct TrainHyper {
    size_t layers = 2;
    size_t hidden = 32;
    double lr = 1e-3;
    size_t epochs = 30;
    size_t batch_size = 32;
    double clip_norm = 5.0;
    CellKind cell = CellKind::lstm;
    double val_fraction = 0.10;  // chronological tail held out for early stopping
    size_t patience = 5;
    double min_delta = 1e-5;  // smallest validation-RMSE drop that counts as progress
};

struct EpochLog {
    size_t epoch = 0;
    double train_mse = 0.0;
    double val_rmse = 0.0;
};

using EpochSink = std::function<void(const EpochLog&)>;

struct TrainedNet {
    StackedNetParams net;
    std::vector<EpochLog> log;
    size_t best_epoch = 0;
    double best_val_rmse = 0.0;
};

namespace detail {

/// Packs samples[idx] for idx in order[from, to) into per-step input and
/// target matrices. Targets are the window shifted by one step, so every
/// position trains on predicting its successor; the final step's target is
/// the sample's own target value.
inline void pack_batch(const std::vector<WindowSample>& samples, std::span<const size_t> idx,
                       std::vector<Matrix>& xs, std::vector<Matrix>& targets) {
    const size_t w = samples[idx.front()].input.size();
    const size_t b = idx.size();
    xs.assign(w, Matrix(1, b));
    targets.assign(w, Matrix(1, b));
    for (size_t col = 0; col < b; ++col) {
        const WindowSample& s = samples[idx[col]];
        require(s.input.size() == w, "pack_batch: ragged window lengths");
        for (size_t t = 0; t < w; ++t) {
            xs[t](0, col) = s.input[t];
            targets[t](0, col) = t + 1 < w ? s.input[t + 1] : s.target;
        }
    }
}

}  // namespace detail

/// Final-step predictions for a set of samples, batched for speed. The
/// returned vector is aligned with `samples`.
inline std::vector<double> predict_windows(const StackedNetParams& net,
                                           const std::vector<WindowSample>& samples,
                                           size_t batch_size = 256) {
    std::vector<double> out(samples.size());
    std::vector<size_t> idx(samples.size());
    std::iota(idx.begin(), idx.end(), size_t{0});
    std::vector<Matrix> xs, targets;
    for (size_t from = 0; from < idx.size(); from += batch_size) {
        const size_t to = std::min(idx.size(), from + batch_size);
        std::span<const size_t> part(idx.data() + from, to - from);
        detail::pack_batch(samples, part, xs, targets);
        CellState st = CellState::zeros(net, part.size());
        const ForwardTrace tr = stacked_forward(net, xs, st);
        const Matrix& y = tr.y.back();
        for (size_t col = 0; col < part.size(); ++col) out[from + col] = y(0, col);
    }
    return out;
}

/// Root mean squared error of final-step predictions against sample targets.
inline double window_rmse(const StackedNetParams& net, const std::vector<WindowSample>& samples) {
    if (samples.empty()) throw DataError("window_rmse: no samples");
    const std::vector<double> pred = predict_windows(net, samples);
    double s = 0.0;
    for (size_t i = 0; i < samples.size(); ++i) {
        const double d = pred[i] - samples[i].target;
        s += d * d;
    }
    return std::sqrt(s / static_cast<double>(samples.size()));
}

/**
 * Mini-batch BPTT training over window samples. `samples_chrono` must be in
 * chronological order; the trailing `val_fraction` share is held out for
 * early stopping (patience restores the best parameters seen). With
 * `shuffle_epochs` the visit order over the remaining samples is re-drawn
 * every epoch; otherwise the chronological order is replayed.
 */
inline TrainedNet train_window_model(const std::vector<WindowSample>& samples_chrono,
                                     bool shuffle_epochs, const TrainHyper& hyper, uint64_t seed,
                                     const EpochSink& sink = {}) {
    if (samples_chrono.empty()) throw DataError("training requires at least one sample");
    if (hyper.epochs == 0) throw ConfigError("epochs must be positive");

    size_t val_count = static_cast<size_t>(
        std::floor(hyper.val_fraction * static_cast<double>(samples_chrono.size())));
    if (val_count >= samples_chrono.size()) val_count = samples_chrono.size() - 1;
    const size_t train_count = samples_chrono.size() - val_count;

    std::vector<WindowSample> train(samples_chrono.begin(), samples_chrono.begin() + train_count);
    std::vector<WindowSample> val(samples_chrono.begin() + train_count, samples_chrono.end());

    BatchStream stream(std::move(train), hyper.batch_size, shuffle_epochs, seed);

    NetDims dims{1, hyper.hidden, hyper.layers, 1};
    TrainedNet result;
    result.net = init_params(dims, hyper.cell, seed);
    AdamState adam = make_adam_state(result.net);
    AdamConfig adam_cfg;
    adam_cfg.lr = hyper.lr;
    adam_cfg.clip_norm = hyper.clip_norm;

    StackedNetParams best = result.net;
    double best_val = std::numeric_limits<double>::infinity();
    size_t best_epoch = 0, stale = 0;
    std::vector<Matrix> xs, targets;

    for (size_t epoch = 1; epoch <= hyper.epochs; ++epoch) {
        const std::vector<size_t>& order = stream.next_epoch();
        double loss_sum = 0.0;
        size_t loss_n = 0;
        for (size_t from = 0; from < order.size(); from += hyper.batch_size) {
            const size_t to = std::min(order.size(), from + hyper.batch_size);
            std::span<const size_t> idx(order.data() + from, to - from);
            detail::pack_batch(stream.samples(), idx, xs, targets);
            CellState st = CellState::zeros(result.net, idx.size());
            const ForwardTrace tr = stacked_forward(result.net, xs, st);
            const double loss = mse_loss(tr.y, targets);
            if (!std::isfinite(loss))
                throw TrainingError("training diverged at epoch " + std::to_string(epoch));
            loss_sum += loss * static_cast<double>(idx.size());
            loss_n += idx.size();
            const StackedNetParams grads = backward_bptt(result.net, tr, targets);
            adam_step(result.net, grads, adam, adam_cfg);
        }

        EpochLog entry;
        entry.epoch = epoch;
        entry.train_mse = loss_sum / static_cast<double>(loss_n);
        entry.val_rmse = val.empty() ? 0.0 : window_rmse(result.net, val);
        result.log.push_back(entry);
        if (sink) sink(entry);

        if (!val.empty()) {
            if (entry.val_rmse < best_val - hyper.min_delta) {
                best_val = entry.val_rmse;
                best_epoch = epoch;
                best = result.net;
                stale = 0;
            } else if (++stale >= hyper.patience) {
                break;
            }
        }
    }

    if (!val.empty()) {
        result.net = std::move(best);
        result.best_epoch = best_epoch;
        result.best_val_rmse = best_val;
    } else {
        result.best_epoch = result.log.size();
        result.best_val_rmse = 0.0;
    }
    return result;
}

}  // namespace stlf
