#pragma once

#include <cctype>
#include <cstdlib>
#include <fstream>
#include <optional>
#include <string>

#include "stlf/dataset.hpp"
#include "stlf/json.hpp"

namespace stlf {

/// Per-model knobs; only the fields relevant to the selected kind apply.
struct ModelSection {
    std::string kind = "tprnn";
    int layers = 2;
    int hidden = 32;
    double lr = 1e-3;
    int epochs = 30;
    int batch = 32;
    double clip = 5.0;
    // svr
    double epsilon = 0.01;
    double c = 1.0;
    int svr_epochs = 30;
    double svr_lr = 0.01;
    // arima
    int p = 5;
    int d = 1;
};

struct RunConfig {
    std::string dataset;
    std::string start_date;  // yyyy-mm-dd, week-aligned start of the evaluated span
    int weeks = 4;
    int n = 720;
    int m = 14;
    double train_fraction = 0.67;
    int window = 60;
    ModelSection model;
    uint64_t seed = 1;
    std::string out = "out";

    void validate() const {
        if (n <= 0 || m <= 0 || n * m != kMinutesPerWeek)
            throw ConfigError("n*m must equal 10,080 (got n=" + std::to_string(n) +
                              ", m=" + std::to_string(m) + ")");
        if (!(train_fraction > 0.0 && train_fraction < 1.0))
            throw ConfigError("train_fraction must lie in (0,1)");
        if (weeks < 1) throw ConfigError("weeks must be >= 1");
        if (window < 1 || window >= n)
            throw ConfigError("window must lie in [1, n)");
        if (start_date.empty()) throw ConfigError("start_date is required");
        parse_date_iso(start_date);
        if (model.epochs < 1 || model.batch < 1 || model.layers < 1 || model.hidden < 1)
            throw ConfigError("model epochs/batch/layers/hidden must be positive");
        if (!(model.lr > 0.0)) throw ConfigError("learning rate must be positive");
        if (model.p < 1 || model.d < 0) throw ConfigError("arima requires p >= 1 and d >= 0");
        if (model.p + model.d > window)
            throw ConfigError("window must cover p+d context values for arima");
        if (model.epsilon < 0.0 || !(model.c > 0.0))
            throw ConfigError("svr requires epsilon >= 0 and c > 0");
        if (out.empty()) throw ConfigError("output directory is required");
    }
};

namespace detail {

inline std::string trim(std::string_view s) {
    size_t b = 0, e = s.size();
    while (b < e && std::isspace(static_cast<unsigned char>(s[b]))) ++b;
    while (e > b && std::isspace(static_cast<unsigned char>(s[e - 1]))) --e;
    return std::string(s.substr(b, e - b));
}

template <class T>
T parse_number(const std::string& key, const std::string& value);

template <>
inline int parse_number<int>(const std::string& key, const std::string& value) {
    int v = 0;
    if (!parse_int(value, v)) throw ConfigError("config key '" + key + "': bad integer '" + value + "'");
    return v;
}

template <>
inline double parse_number<double>(const std::string& key, const std::string& value) {
    double v = 0.0;
    if (!parse_double(value, v))
        throw ConfigError("config key '" + key + "': bad number '" + value + "'");
    return v;
}

template <>
inline uint64_t parse_number<uint64_t>(const std::string& key, const std::string& value) {
    uint64_t v = 0;
    const char* first = value.data();
    const char* last = value.data() + value.size();
    auto [p, ec] = std::from_chars(first, last, v);
    if (ec != std::errc{} || p != last)
        throw ConfigError("config key '" + key + "': bad integer '" + value + "'");
    return v;
}

}  // namespace detail

/// `key = value` lines; '#' starts a comment. Unknown keys are rejected.
inline void apply_config_entry(RunConfig& cfg, const std::string& key, const std::string& value) {
    using detail::parse_number;
    if (key == "dataset") cfg.dataset = value;
    else if (key == "start_date") cfg.start_date = value;
    else if (key == "weeks") cfg.weeks = parse_number<int>(key, value);
    else if (key == "n") cfg.n = parse_number<int>(key, value);
    else if (key == "m") cfg.m = parse_number<int>(key, value);
    else if (key == "train_fraction") cfg.train_fraction = parse_number<double>(key, value);
    else if (key == "window") cfg.window = parse_number<int>(key, value);
    else if (key == "model") cfg.model.kind = value;
    else if (key == "layers") cfg.model.layers = parse_number<int>(key, value);
    else if (key == "hidden") cfg.model.hidden = parse_number<int>(key, value);
    else if (key == "lr") cfg.model.lr = parse_number<double>(key, value);
    else if (key == "epochs") cfg.model.epochs = parse_number<int>(key, value);
    else if (key == "batch") cfg.model.batch = parse_number<int>(key, value);
    else if (key == "clip") cfg.model.clip = parse_number<double>(key, value);
    else if (key == "epsilon") cfg.model.epsilon = parse_number<double>(key, value);
    else if (key == "c") cfg.model.c = parse_number<double>(key, value);
    else if (key == "svr_epochs") cfg.model.svr_epochs = parse_number<int>(key, value);
    else if (key == "svr_lr") cfg.model.svr_lr = parse_number<double>(key, value);
    else if (key == "p") cfg.model.p = parse_number<int>(key, value);
    else if (key == "d") cfg.model.d = parse_number<int>(key, value);
    else if (key == "seed") cfg.seed = parse_number<uint64_t>(key, value);
    else if (key == "out") cfg.out = value;
    else throw ConfigError("unknown config key '" + key + "'");
}

inline RunConfig load_config_file(const std::string& path, RunConfig base = {}) {
    std::ifstream in(path);
    if (!in) throw ConfigError("cannot open config file '" + path + "'");
    std::string line;
    size_t line_no = 0;
    while (std::getline(in, line)) {
        ++line_no;
        const size_t hash = line.find('#');
        if (hash != std::string::npos) line.erase(hash);
        const std::string trimmed = detail::trim(line);
        if (trimmed.empty()) continue;
        const size_t eq = trimmed.find('=');
        if (eq == std::string::npos)
            throw ConfigError(path + ":" + std::to_string(line_no) + ": expected key = value");
        const std::string key = detail::trim(std::string_view(trimmed).substr(0, eq));
        const std::string value = detail::trim(std::string_view(trimmed).substr(eq + 1));
        try {
            apply_config_entry(base, key, value);
        } catch (const ConfigError& e) {
            throw ConfigError(path + ":" + std::to_string(line_no) + ": " + e.what());
        }
    }
    return base;
}

/// Fills the dataset path from STLF_DATA_DIR when nothing else set it.
inline void apply_dataset_env_default(RunConfig& cfg) {
    if (!cfg.dataset.empty()) return;
    if (const char* dir = std::getenv("STLF_DATA_DIR"))
        cfg.dataset = std::string(dir) + "/household_power_consumption.txt";
}

inline json config_to_json(const RunConfig& cfg) {
    json j;
    j["dataset"] = cfg.dataset;
    j["start_date"] = cfg.start_date;
    j["weeks"] = cfg.weeks;
    j["n"] = cfg.n;
    j["m"] = cfg.m;
    j["train_fraction"] = cfg.train_fraction;
    j["window"] = cfg.window;
    j["model"] = cfg.model.kind;
    j["layers"] = cfg.model.layers;
    j["hidden"] = cfg.model.hidden;
    j["lr"] = cfg.model.lr;
    j["epochs"] = cfg.model.epochs;
    j["batch"] = cfg.model.batch;
    j["clip"] = cfg.model.clip;
    j["epsilon"] = cfg.model.epsilon;
    j["c"] = cfg.model.c;
    j["svr_epochs"] = cfg.model.svr_epochs;
    j["svr_lr"] = cfg.model.svr_lr;
    j["p"] = cfg.model.p;
    j["d"] = cfg.model.d;
    j["seed"] = cfg.seed;
    j["out"] = cfg.out;
    return j;
}

/// The effective configuration in the same `key = value` format the loader
/// reads, so a run can be replayed exactly from its own record.
inline std::string config_to_text(const RunConfig& cfg) {
    std::string out;
    const json j = config_to_json(cfg);
    for (auto it = j.begin(); it != j.end(); ++it) {
        out += it.key();
        out += " = ";
        out += it->is_string() ? it->get<std::string>() : it->dump();
        out += '\n';
    }
    return out;
}

}  // namespace stlf
