#pragma once

#include <cstdlib>
#include <filesystem>
#include <fstream>
#include <optional>
#include <set>
#include <sstream>
#include <string>

#include "stlf/checkpoint.hpp"
#include "stlf/metrics.hpp"
#include "stlf/pipeline_config.hpp"

namespace stlf {

namespace fs = std::filesystem;

// ---------------------------------------------------------------------------
// Content hashing (cache keys, manifest entries)
// ---------------------------------------------------------------------------

inline uint64_t fnv1a64(std::span<const char> bytes, uint64_t h = 0xcbf29ce484222325ull) {
    for (char c : bytes) {
        h ^= static_cast<unsigned char>(c);
        h *= 0x100000001b3ull;
    }
    return h;
}

inline uint64_t hash_file(const std::string& path) {
    std::ifstream in(path, std::ios::binary);
    if (!in) throw DataError("cannot open '" + path + "'");
    uint64_t h = 0xcbf29ce484222325ull;
    std::vector<char> buf(1 << 20);
    while (in) {
        in.read(buf.data(), static_cast<std::streamsize>(buf.size()));
        h = fnv1a64({buf.data(), static_cast<size_t>(in.gcount())}, h);
    }
    return h;
}

inline std::string hex64(uint64_t h) {
    char buf[17];
    std::snprintf(buf, sizeof(buf), "%016llx", static_cast<unsigned long long>(h));
    return buf;
}

// ---------------------------------------------------------------------------
// Stages
// ---------------------------------------------------------------------------

struct IngestSummary {
    std::string cache_path;
    uint64_t dataset_hash = 0;
    size_t records = 0;
    size_t minutes = 0;
    size_t imputed = 0;
    bool cached_hit = false;
};

/// Parse + impute once per dataset content; later runs reuse the cached
/// series. The cache key covers the file bytes and the imputation policy.
inline IngestSummary run_ingest(const RunConfig& cfg) {
    if (cfg.dataset.empty()) throw ConfigError("no dataset configured (flag, config, or STLF_DATA_DIR)");
    if (!fs::exists(cfg.dataset)) throw DataError("dataset file not found: '" + cfg.dataset + "'");

    uint64_t h = hash_file(cfg.dataset);
    const std::string tag = "impute=minute-of-day-mean/v1";
    h = fnv1a64({tag.data(), tag.size()}, h);

    const fs::path cache_dir = fs::path(cfg.out) / "cache";
    fs::create_directories(cache_dir);
    const fs::path cache = cache_dir / ("series-" + hex64(h) + ".bin");
    const fs::path sidecar = cache_dir / ("series-" + hex64(h) + ".json");

    IngestSummary sum;
    sum.cache_path = cache.string();
    sum.dataset_hash = h;

    if (fs::exists(cache) && fs::exists(sidecar)) {
        std::ifstream in(sidecar);
        json j;
        in >> j;
        sum.records = j.at("records").get<size_t>();
        sum.minutes = j.at("minutes").get<size_t>();
        sum.imputed = j.at("imputed").get<size_t>();
        sum.cached_hit = true;
        return sum;
    }

    const std::vector<RawRecord> records = parse_ucihpc_csv(cfg.dataset);
    const LoadSeries series = impute_missing(records);
    write_series_bin(cache.string(), series);
    sum.records = records.size();
    sum.minutes = series.size();
    sum.imputed = series.imputed_count();
    json j;
    j["records"] = sum.records;
    j["minutes"] = sum.minutes;
    j["imputed"] = sum.imputed;
    j["dataset_hash"] = hex64(h);
    std::ofstream out(sidecar);
    out << j.dump(2) << '\n';
    if (!out) throw DataError("cannot write '" + sidecar.string() + "'");
    return sum;
}

/// Everything the train and evaluate stages share: normalized pools plus the
/// identity of the data they came from.
struct PreparedData {
    PoolSet train_pools;
    PoolSet test_pools;
    NormalizationParams norm;
    int64_t span_start_minute = 0;
    uint64_t dataset_hash = 0;
    json fingerprint;
};

inline PreparedData prepare_data(const RunConfig& cfg) {
    cfg.validate();
    const IngestSummary ing = run_ingest(cfg);
    const LoadSeries series = read_series_bin(ing.cache_path);

    const auto start = parse_date_iso(cfg.start_date);
    const std::vector<LoadSeries> weeks = slice_weeks(series, start, cfg.weeks);
    const PoolSet all = build_pools(weeks, cfg.n, cfg.m);
    SplitConfig split;
    split.train_fraction = cfg.train_fraction;
    split.seed = cfg.seed;
    auto [train_raw, test_raw] = split_pools(all, split);

    // min-max over the training segments only, applied to both sides
    double lo = std::numeric_limits<double>::infinity();
    double hi = -std::numeric_limits<double>::infinity();
    for (const auto& pool : train_raw.pools)
        for (const auto& seg : pool)
            for (double v : seg.values) {
                lo = std::min(lo, v);
                hi = std::max(hi, v);
            }
    PreparedData prep;
    prep.norm.min = lo;
    prep.norm.max = hi;
    prep.norm.validate();

    auto normalize_pools = [&](PoolSet& set) {
        for (auto& pool : set.pools)
            for (auto& seg : pool)
                for (double& v : seg.values) v = normalize_value(v, prep.norm);
    };
    normalize_pools(train_raw);
    normalize_pools(test_raw);
    prep.train_pools = std::move(train_raw);
    prep.test_pools = std::move(test_raw);
    prep.span_start_minute = minutes_from_day(std::chrono::sys_days{start}, 0);
    prep.dataset_hash = ing.dataset_hash;
    prep.fingerprint = json{{"dataset_hash", hex64(ing.dataset_hash)},
                            {"start_date", cfg.start_date},
                            {"weeks", cfg.weeks},
                            {"n", cfg.n},
                            {"m", cfg.m},
                            {"train_fraction", cfg.train_fraction},
                            {"window", cfg.window}};
    return prep;
}

inline std::vector<double> concat_chronological(const PoolSet& set) {
    std::vector<double> out;
    for (const Segment& seg : chronological_segments(set))
        out.insert(out.end(), seg.values.begin(), seg.values.end());
    return out;
}

struct TrainOutcome {
    std::string checkpoint_path;
    std::string log_path;
    size_t epochs_run = 0;
};

inline TrainHyper hyper_from_config(const RunConfig& cfg) {
    TrainHyper h;
    h.layers = static_cast<size_t>(cfg.model.layers);
    h.hidden = static_cast<size_t>(cfg.model.hidden);
    h.lr = cfg.model.lr;
    h.epochs = static_cast<size_t>(cfg.model.epochs);
    h.batch_size = static_cast<size_t>(cfg.model.batch);
    h.clip_norm = cfg.model.clip;
    return h;
}

/// Fits one method and writes its checkpoint plus a structured training log.
inline TrainOutcome run_train(const RunConfig& cfg, const std::string& kind,
                              const EpochSink& sink = {}) {
    const PreparedData prep = prepare_data(cfg);
    fs::create_directories(cfg.out);

    Checkpoint ck;
    ck.method = kind;
    ck.norm = prep.norm;
    ck.lookback = cfg.window;
    ck.seed = cfg.seed;
    ck.fingerprint = prep.fingerprint;

    std::ostringstream log;
    TrainOutcome out;
    auto tee = [&](const EpochLog& e) {
        char line[128];
        std::snprintf(line, sizeof(line), "epoch=%zu train_mse=%.9g val_rmse=%.9g", e.epoch,
                      e.train_mse, e.val_rmse);
        log << line << '\n';
        out.epochs_run = e.epoch;
        if (sink) sink(e);
    };

    if (kind == "arima") {
        const std::vector<double> series = concat_chronological(prep.train_pools);
        ARParams ar = ar_fit(series, cfg.model.p);
        log << "fitted ar p=" << cfg.model.p << " d=" << cfg.model.d
            << " fallback=" << (ar.fallback ? 1 : 0) << " mu=" << ar.mu << '\n';
        ck.model = std::make_unique<ArModel>(std::move(ar), cfg.model.d, kind);
    } else if (kind == "svr") {
        const std::vector<WindowSample> samples =
            chronological_windows(prep.train_pools, cfg.window);
        SvrFitOptions opt;
        opt.epochs = cfg.model.svr_epochs;
        opt.lr = cfg.model.svr_lr;
        opt.seed = cfg.seed;
        SVRParams sp = svr_fit(samples, cfg.model.epsilon, cfg.model.c, opt);
        log << "fitted svr epochs=" << opt.epochs << " epsilon=" << cfg.model.epsilon
            << " c=" << cfg.model.c << '\n';
        ck.model = std::make_unique<SvrModel>(std::move(sp), kind);
    } else if (kind == "rnn" || kind == "drnn") {
        const std::vector<WindowSample> samples =
            chronological_windows(prep.train_pools, cfg.window);
        NeuralTrainResult r = train_recurrent(
            kind == "rnn" ? RecurrentKind::rnn : RecurrentKind::drnn, samples,
            hyper_from_config(cfg), cfg.seed, tee);
        ck.model = std::unique_ptr<ForecastModel>(r.model.release());
    } else if (kind == "tprnn") {
        NeuralTrainResult r =
            train_tprnn(prep.train_pools, cfg.window, hyper_from_config(cfg), cfg.seed, tee);
        ck.model = std::unique_ptr<ForecastModel>(r.model.release());
    } else {
        throw ConfigError("unknown model kind '" + kind + "'");
    }

    const fs::path ckpt = fs::path(cfg.out) / (kind + ".ckpt.json");
    save_checkpoint(ckpt.string(), ck);
    const fs::path log_path = fs::path(cfg.out) / (kind + ".train.log");
    std::ofstream lf(log_path, std::ios::trunc);
    lf << log.str();
    if (!lf) throw DataError("cannot write '" + log_path.string() + "'");

    out.checkpoint_path = ckpt.string();
    out.log_path = log_path.string();
    return out;
}

struct EvaluateOutcome {
    EvalReport report;
    std::string report_json_path;
    std::string report_text_path;
    std::vector<std::string> trace_paths;
};

/// Rolls every checkpoint over the shared test segments, denormalizes to kW,
/// and writes the comparison report plus one trace CSV per method.
inline EvaluateOutcome run_evaluate(const RunConfig& cfg,
                                    const std::vector<std::string>& checkpoint_paths) {
    if (checkpoint_paths.empty()) throw ConfigError("evaluate needs at least one checkpoint");
    const PreparedData prep = prepare_data(cfg);
    const std::vector<Segment> test_segments = chronological_segments(prep.test_pools);
    fs::create_directories(cfg.out);

    std::vector<Checkpoint> cks;
    for (const auto& path : checkpoint_paths) cks.push_back(load_checkpoint(path));

    // all checkpoints must describe the same data identity
    for (const Checkpoint& ck : cks) {
        if (ck.fingerprint != prep.fingerprint) {
            std::string diffs;
            for (auto it = prep.fingerprint.begin(); it != prep.fingerprint.end(); ++it) {
                const auto other = ck.fingerprint.find(it.key());
                if (other == ck.fingerprint.end() || *other != it.value())
                    diffs += " " + it.key() + "=" +
                             (other == ck.fingerprint.end() ? std::string("<missing>")
                                                            : other->dump()) +
                             " (expected " + it.value().dump() + ")";
            }
            throw ConfigError("checkpoint '" + ck.method +
                              "' does not match this run's data identity:" + diffs);
        }
    }

    EvaluateOutcome out;
    std::vector<MethodTrace> traces;
    std::vector<std::string> timestamps;
    for (const Checkpoint& ck : cks) {
        const ForecastTrace tr = rolling_forecast(*ck.model, test_segments, cfg.window);
        MethodTrace mt;
        mt.method = ck.method;
        mt.pool_index = tr.pool_index;
        mt.actual_kw.reserve(tr.actual.size());
        mt.predicted_kw.reserve(tr.predicted.size());
        for (size_t i = 0; i < tr.actual.size(); ++i) {
            mt.actual_kw.push_back(denormalize_value(tr.actual[i], prep.norm));
            mt.predicted_kw.push_back(denormalize_value(tr.predicted[i], prep.norm));
        }
        if (timestamps.empty()) {
            timestamps.reserve(tr.actual.size());
            for (size_t i = 0; i < tr.actual.size(); ++i) {
                const int64_t minute = prep.span_start_minute +
                                       static_cast<int64_t>(tr.week_index[i]) * kMinutesPerWeek +
                                       static_cast<int64_t>(tr.pool_index[i]) * cfg.n +
                                       tr.offset[i];
                timestamps.push_back(iso8601_from_minute(minute));
            }
        }
        traces.push_back(std::move(mt));
    }

    json fp = prep.fingerprint;
    fp["seed"] = cfg.seed;
    out.report = build_report(traces, fp);

    for (const MethodTrace& mt : traces) {
        const fs::path p = fs::path(cfg.out) / ("trace_" + mt.method + ".csv");
        export_trace(p.string(), timestamps, mt.actual_kw, mt.predicted_kw);
        out.trace_paths.push_back(p.string());
    }
    const fs::path rj = fs::path(cfg.out) / "report.json";
    {
        std::ofstream f(rj, std::ios::trunc);
        f << report_to_json(out.report).dump(2) << '\n';
        if (!f) throw DataError("cannot write '" + rj.string() + "'");
    }
    const fs::path rt = fs::path(cfg.out) / "report.txt";
    {
        std::ofstream f(rt, std::ios::trunc);
        f << render_report_table(out.report);
        if (!f) throw DataError("cannot write '" + rt.string() + "'");
    }
    out.report_json_path = rj.string();
    out.report_text_path = rt.string();
    return out;
}

struct ReproduceOutcome {
    IngestSummary ingest;
    std::vector<std::pair<std::string, TrainOutcome>> trained;
    EvaluateOutcome evaluation;
    std::string manifest_path;
};

namespace detail {
template <class Fn>
auto run_stage(const std::string& name, Fn&& fn) {
    try {
        return fn();
    } catch (const ConfigError& e) {
        throw ConfigError("stage " + name + ": " + e.what());
    } catch (const ParseError& e) {
        throw ParseError("stage " + name + ": " + e.what());
    } catch (const TrainingError& e) {
        throw TrainingError("stage " + name + ": " + e.what());
    } catch (const DataError& e) {
        throw DataError("stage " + name + ": " + e.what());
    }
}
}  // namespace detail

/// Full pipeline: ingest, train every method not skipped, evaluate them
/// together, and record a manifest that pins the whole run.
inline ReproduceOutcome run_reproduce(const RunConfig& cfg, const std::set<std::string>& skip,
                                      bool force, const EpochSink& sink = {}) {
    cfg.validate();
    const fs::path out_dir(cfg.out);
    if (fs::exists(out_dir) && !fs::is_empty(out_dir) && !force)
        throw ConfigError("output directory '" + cfg.out +
                          "' already exists and is not empty (use --force to overwrite)");
    fs::create_directories(out_dir);

    for (const std::string& s : skip) {
        const auto& order = canonical_method_order();
        if (std::find(order.begin(), order.end(), s) == order.end())
            throw ConfigError("--skip names unknown method '" + s + "'");
    }

    ReproduceOutcome out;
    out.ingest = detail::run_stage("ingest", [&] { return run_ingest(cfg); });

    std::vector<std::string> ckpts;
    for (const std::string& kind : canonical_method_order()) {
        if (skip.count(kind)) continue;
        TrainOutcome t =
            detail::run_stage("train:" + kind, [&] { return run_train(cfg, kind, sink); });
        ckpts.push_back(t.checkpoint_path);
        out.trained.emplace_back(kind, std::move(t));
    }

    out.evaluation = detail::run_stage("evaluate", [&] { return run_evaluate(cfg, ckpts); });

    json manifest;
    manifest["tool"] = "stlf";
    manifest["defaults_version"] = 1;
    manifest["config"] = config_to_json(cfg);
    manifest["skip"] = json::array();
    for (const auto& s : skip) manifest["skip"].push_back(s);
    manifest["stages"]["ingest"] = {{"cache", out.ingest.cache_path},
                                    {"dataset_hash", hex64(out.ingest.dataset_hash)},
                                    {"records", out.ingest.records},
                                    {"minutes", out.ingest.minutes},
                                    {"imputed", out.ingest.imputed}};
    json trained = json::object();
    for (const auto& [kind, t] : out.trained)
        trained[kind] = {{"checkpoint", t.checkpoint_path},
                         {"checkpoint_hash", hex64(hash_file(t.checkpoint_path))},
                         {"log", t.log_path}};
    manifest["stages"]["train"] = trained;
    manifest["stages"]["evaluate"] = {
        {"report_json", out.evaluation.report_json_path},
        {"report_json_hash", hex64(hash_file(out.evaluation.report_json_path))},
        {"report_text", out.evaluation.report_text_path}};

    const fs::path mp = out_dir / "manifest.json";
    std::ofstream mf(mp, std::ios::trunc);
    mf << manifest.dump(2) << '\n';
    if (!mf) throw DataError("cannot write '" + mp.string() + "'");
    out.manifest_path = mp.string();
    return out;
}

/// Dumps the (possibly span-restricted) completed series as CSV.
inline std::string run_export(const RunConfig& cfg) {
    const IngestSummary ing = run_ingest(cfg);
    LoadSeries series = read_series_bin(ing.cache_path);
    if (!cfg.start_date.empty() && cfg.weeks > 0) {
        const auto weeks = slice_weeks(series, parse_date_iso(cfg.start_date), cfg.weeks);
        LoadSeries joined;
        joined.start_minute = weeks.front().start_minute;
        for (const auto& w : weeks) {
            joined.values.insert(joined.values.end(), w.values.begin(), w.values.end());
            joined.imputed.insert(joined.imputed.end(), w.imputed.begin(), w.imputed.end());
        }
        series = std::move(joined);
    }
    fs::create_directories(cfg.out);
    const fs::path p = fs::path(cfg.out) / "series.csv";
    export_series_csv(p.string(), series);
    return p.string();
}

}  // namespace stlf
