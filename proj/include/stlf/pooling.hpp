#pragma once

#include <algorithm>
#include <cmath>
#include <numeric>
#include <vector>

#include "stlf/core.hpp"
#include "stlf/dataset.hpp"

namespace stlf {

/// One half-day (or otherwise n-minute) slice of a week. `slot_index` is the
/// slice's position within its week, 0..m-1.
struct Segment {
    int week_index = 0;
    int slot_index = 0;
    std::vector<double> values;
};

/// Segments regrouped by within-week slot: pool j holds every week's slot-j
/// segment, in week order.
struct PoolSet {
    int n = 0;  // segment length, minutes
    int m = 0;  // number of pools
    std::vector<std::vector<Segment>> pools;

    size_t total_segments() const {
        size_t t = 0;
        for (const auto& p : pools) t += p.size();
        return t;
    }
};

struct SplitConfig {
    double train_fraction = 0.67;
    uint64_t seed = 1;  // reserved for sample shuffling; the segment split itself is chronological
};

/// Supervised pair: a lookback window and the value that follows it.
struct WindowSample {
    std::vector<double> input;
    double target = 0.0;
    int pool_index = 0;
};

/// Cuts one week into consecutive n-minute segments (chronological order;
/// concatenating them reproduces the week).
inline std::vector<Segment> segment_week(const LoadSeries& week, int n) {
    if (week.size() != static_cast<size_t>(kMinutesPerWeek))
        throw DataError("segment_week expects a 10,080-minute week, got " +
                        std::to_string(week.size()));
    if (n <= 0 || kMinutesPerWeek % n != 0)
        throw ConfigError("segment length " + std::to_string(n) + " does not divide 10,080");
    const int count = kMinutesPerWeek / n;
    std::vector<Segment> segs(static_cast<size_t>(count));
    for (int s = 0; s < count; ++s) {
        segs[s].slot_index = s;
        const auto from = week.values.begin() + static_cast<size_t>(s) * n;
        segs[s].values.assign(from, from + n);
    }
    return segs;
}

inline PoolSet build_pools(const std::vector<LoadSeries>& weeks, int n, int m) {
    if (n <= 0 || m <= 0 || n * m != kMinutesPerWeek)
        throw ConfigError("pooling requires n*m = 10,080 (got n=" + std::to_string(n) +
                          ", m=" + std::to_string(m) + ")");
    PoolSet set;
    set.n = n;
    set.m = m;
    set.pools.resize(static_cast<size_t>(m));
    for (size_t w = 0; w < weeks.size(); ++w) {
        auto segs = segment_week(weeks[w], n);
        for (auto& seg : segs) {
            seg.week_index = static_cast<int>(w);
            set.pools[static_cast<size_t>(seg.slot_index)].push_back(std::move(seg));
        }
    }
    return set;
}

/// Chronological split inside each pool: the earliest share of segments goes
/// to train, the rest to test. Fails if either side ends up empty overall.
inline std::pair<PoolSet, PoolSet> split_pools(const PoolSet& set, const SplitConfig& cfg) {
    if (!(cfg.train_fraction > 0.0 && cfg.train_fraction < 1.0))
        throw ConfigError("train_fraction must lie in (0,1)");
    PoolSet train, test;
    train.n = test.n = set.n;
    train.m = test.m = set.m;
    train.pools.resize(set.pools.size());
    test.pools.resize(set.pools.size());
    size_t n_train = 0, n_test = 0;
    for (size_t j = 0; j < set.pools.size(); ++j) {
        const auto& pool = set.pools[j];
        if (pool.empty()) throw DataError("pool " + std::to_string(j) + " is empty");
        // f*count rounded down, with a tolerance so that e.g. 0.67*100 lands on 67
        const size_t take = static_cast<size_t>(
            std::floor(cfg.train_fraction * static_cast<double>(pool.size()) + 1e-9));
        train.pools[j].assign(pool.begin(), pool.begin() + take);
        test.pools[j].assign(pool.begin() + take, pool.end());
        n_train += take;
        n_test += pool.size() - take;
    }
    if (n_train == 0 || n_test == 0)
        throw DataError("split with train_fraction " + std::to_string(cfg.train_fraction) +
                        " leaves " + (n_train == 0 ? std::string("train") : std::string("test")) +
                        " empty");
    return {std::move(train), std::move(test)};
}

/// Slides a stride-1 window of length w over one segment; every sample stays
/// inside the segment.
inline std::vector<WindowSample> make_windows(const Segment& seg, int w) {
    const int n = static_cast<int>(seg.values.size());
    if (w < 1 || w >= n)
        throw ConfigError("lookback " + std::to_string(w) + " must lie in [1, " +
                          std::to_string(n) + ")");
    std::vector<WindowSample> out;
    out.reserve(static_cast<size_t>(n - w));
    for (int pos = w; pos < n; ++pos) {
        WindowSample s;
        s.input.assign(seg.values.begin() + (pos - w), seg.values.begin() + pos);
        s.target = seg.values[static_cast<size_t>(pos)];
        s.pool_index = seg.slot_index;
        out.push_back(std::move(s));
    }
    return out;
}

inline std::vector<WindowSample> make_windows(const std::vector<Segment>& segs, int w) {
    std::vector<WindowSample> out;
    for (const auto& seg : segs) {
        auto ws = make_windows(seg, w);
        out.insert(out.end(), std::make_move_iterator(ws.begin()),
                   std::make_move_iterator(ws.end()));
    }
    return out;
}

/// All window samples of a pool set in global chronological order
/// (week-major, then slot, then position).
inline std::vector<WindowSample> chronological_windows(const PoolSet& set, int w) {
    int max_week = -1;
    for (const auto& pool : set.pools)
        for (const auto& seg : pool) max_week = std::max(max_week, seg.week_index);
    std::vector<WindowSample> out;
    for (int week = 0; week <= max_week; ++week) {
        for (const auto& pool : set.pools) {
            for (const auto& seg : pool) {
                if (seg.week_index != week) continue;
                auto ws = make_windows(seg, w);
                out.insert(out.end(), std::make_move_iterator(ws.begin()),
                           std::make_move_iterator(ws.end()));
            }
        }
    }
    return out;
}

/**
 * Reproducible epoch-by-epoch batch stream over a fixed sample set. With
 * `shuffle` the visit order is re-drawn each epoch from the seeded generator
 * (interleaving samples across pools); without it the chronological order is
 * replayed. Either way an epoch visits every sample exactly once and the same
 * seed yields the same stream.
 */
class BatchStream {
  public:
    BatchStream(std::vector<WindowSample> samples, size_t batch_size, bool shuffle, uint64_t seed)
        : samples_(std::move(samples)), batch_size_(batch_size), shuffle_(shuffle), rng_(seed) {
        if (samples_.empty()) throw DataError("batch stream over an empty sample set");
        if (batch_size_ == 0) throw ConfigError("batch size must be positive");
        order_.resize(samples_.size());
        std::iota(order_.begin(), order_.end(), size_t{0});
    }

    const std::vector<WindowSample>& samples() const { return samples_; }

    size_t batches_per_epoch() const {
        return (samples_.size() + batch_size_ - 1) / batch_size_;
    }

    /// Starts the next epoch and returns the sample visit order for it.
    const std::vector<size_t>& next_epoch() {
        if (shuffle_) rng_.shuffle(order_);
        return order_;
    }

    size_t batch_size() const { return batch_size_; }

  private:
    std::vector<WindowSample> samples_;
    size_t batch_size_;
    bool shuffle_;
    Rng rng_;
    std::vector<size_t> order_;
};

/// Cross-pool interleaved training stream (the samples of every pool,
/// shuffled together anew each epoch).
inline BatchStream pooled_batches(const PoolSet& train, int w, size_t batch_size, uint64_t seed) {
    return BatchStream(chronological_windows(train, w), batch_size, /*shuffle=*/true, seed);
}

}  // namespace stlf
