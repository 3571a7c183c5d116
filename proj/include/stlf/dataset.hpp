#pragma once

#include <array>
#include <charconv>
#include <chrono>
#include <cstdio>
#include <cstring>
#include <fstream>
#include <optional>
#include <string>
#include <string_view>
#include <vector>

#include "stlf/core.hpp"

namespace stlf {

constexpr int kMinutesPerDay = 1440;
constexpr int kMinutesPerWeek = 7 * kMinutesPerDay;

// ---------------------------------------------------------------------------
// Calendar helpers. Timestamps are naive local time, expressed as whole
// minutes since 1970-01-01 00:00.
// ---------------------------------------------------------------------------

inline int64_t minutes_from_day(std::chrono::sys_days day, int minute_of_day) {
    return static_cast<int64_t>(day.time_since_epoch().count()) * kMinutesPerDay + minute_of_day;
}

inline std::chrono::sys_days day_of_minute(int64_t minute) {
    int64_t d = minute / kMinutesPerDay;
    if (minute < 0 && minute % kMinutesPerDay != 0) --d;
    return std::chrono::sys_days{std::chrono::days{d}};
}

inline int minute_of_day(int64_t minute) {
    const int64_t m = minute - day_of_minute(minute).time_since_epoch().count() *
                                   static_cast<int64_t>(kMinutesPerDay);
    return static_cast<int>(m);
}

inline std::string iso8601_from_minute(int64_t minute) {
    const std::chrono::year_month_day ymd{day_of_minute(minute)};
    const int mod = minute_of_day(minute);
    char buf[24];
    std::snprintf(buf, sizeof(buf), "%04d-%02d-%02dT%02d:%02d:00", int(ymd.year()),
                  unsigned(ymd.month()), unsigned(ymd.day()), mod / 60, mod % 60);
    return buf;
}

namespace detail {

inline bool parse_int(std::string_view s, int& out) {
    const char* first = s.data();
    const char* last = s.data() + s.size();
    auto [p, ec] = std::from_chars(first, last, out);
    return ec == std::errc{} && p == last;
}

inline bool parse_double(std::string_view s, double& out) {
    const char* first = s.data();
    const char* last = s.data() + s.size();
    auto [p, ec] = std::from_chars(first, last, out);
    return ec == std::errc{} && p == last;
}

inline std::vector<std::string_view> split(std::string_view s, char sep) {
    std::vector<std::string_view> out;
    size_t pos = 0;
    while (true) {
        const size_t next = s.find(sep, pos);
        if (next == std::string_view::npos) {
            out.push_back(s.substr(pos));
            break;
        }
        out.push_back(s.substr(pos, next - pos));
        pos = next + 1;
    }
    return out;
}

}  // namespace detail

/// Parses `d/m/yyyy`.
inline std::chrono::year_month_day parse_date_dmy(std::string_view s) {
    const auto parts = detail::split(s, '/');
    int d = 0, m = 0, y = 0;
    if (parts.size() != 3 || !detail::parse_int(parts[0], d) || !detail::parse_int(parts[1], m) ||
        !detail::parse_int(parts[2], y))
        throw ParseError("bad date '" + std::string(s) + "'");
    const std::chrono::year_month_day ymd{std::chrono::year{y}, std::chrono::month{unsigned(m)},
                                          std::chrono::day{unsigned(d)}};
    if (!ymd.ok()) throw ParseError("bad date '" + std::string(s) + "'");
    return ymd;
}

/// Parses `yyyy-mm-dd` (CLI dates).
inline std::chrono::year_month_day parse_date_iso(std::string_view s) {
    const auto parts = detail::split(s, '-');
    int y = 0, m = 0, d = 0;
    if (parts.size() != 3 || !detail::parse_int(parts[0], y) || !detail::parse_int(parts[1], m) ||
        !detail::parse_int(parts[2], d))
        throw ConfigError("bad date '" + std::string(s) + "' (expected yyyy-mm-dd)");
    const std::chrono::year_month_day ymd{std::chrono::year{y}, std::chrono::month{unsigned(m)},
                                          std::chrono::day{unsigned(d)}};
    if (!ymd.ok()) throw ConfigError("bad date '" + std::string(s) + "' (expected yyyy-mm-dd)");
    return ymd;
}

/// Parses `hh:mm:ss` into a minute-of-day.
inline int parse_time_hms(std::string_view s) {
    const auto parts = detail::split(s, ':');
    int h = 0, m = 0, sec = 0;
    if (parts.size() != 3 || !detail::parse_int(parts[0], h) || !detail::parse_int(parts[1], m) ||
        !detail::parse_int(parts[2], sec) || h < 0 || h > 23 || m < 0 || m > 59 || sec < 0 ||
        sec > 59)
        throw ParseError("bad time '" + std::string(s) + "'");
    return h * 60 + m;
}

// ---------------------------------------------------------------------------
// Domain types
// ---------------------------------------------------------------------------

/// One measurement row: calendar position plus the global-active-power value
/// in kW. `gap` is absent where the source marked the value missing.
struct RawRecord {
    std::chrono::sys_days day{};
    int minute = 0;  // minute of day, 0..1439
    std::optional<double> gap;

    int64_t abs_minute() const { return minutes_from_day(day, minute); }
};

/// Contiguous minute-resolution series: one value per minute, no holes.
/// `imputed[i]` is true where the value was filled rather than measured.
struct LoadSeries {
    int64_t start_minute = 0;
    std::vector<double> values;
    std::vector<uint8_t> imputed;

    size_t size() const { return values.size(); }
    bool empty() const { return values.empty(); }
    int64_t minute_at(size_t i) const { return start_minute + static_cast<int64_t>(i); }
    size_t imputed_count() const {
        size_t n = 0;
        for (uint8_t f : imputed) n += f;
        return n;
    }
};

struct NormalizationParams {
    double min = 0.0;
    double max = 1.0;

    void validate() const {
        if (!(max > min)) throw DataError("normalization requires max > min");
    }
};

// ---------------------------------------------------------------------------
// Operations
// ---------------------------------------------------------------------------

/// Reads the UCI household power text format: semicolon-separated, header
/// `Date;Time;Global_active_power;...`, `?` marking missing values,
/// `d/m/yyyy` dates and `hh:mm:ss` times. Only the GAP column is kept.
inline std::vector<RawRecord> parse_ucihpc_csv(const std::string& path) {
    std::ifstream in(path, std::ios::binary);
    if (!in) throw DataError("cannot open dataset file '" + path + "'");

    std::string line;
    if (!std::getline(in, line)) throw ParseError("empty file '" + path + "'");
    if (!line.empty() && line.back() == '\r') line.pop_back();
    const auto header = detail::split(line, ';');
    if (header.size() < 3 || header[0] != "Date" || header[1] != "Time")
        throw ParseError(path + ": unexpected header '" + line + "'");
    const size_t n_fields = header.size();

    std::vector<RawRecord> records;
    records.reserve(1 << 20);
    size_t line_no = 1;
    auto fail = [&](const std::string& why) {
        throw ParseError(path + ":" + std::to_string(line_no) + ": " + why);
    };
    while (std::getline(in, line)) {
        ++line_no;
        if (!line.empty() && line.back() == '\r') line.pop_back();
        if (line.empty()) continue;
        const auto fields = detail::split(line, ';');
        if (fields.size() != n_fields)
            fail("expected " + std::to_string(n_fields) + " fields, got " +
                 std::to_string(fields.size()));
        RawRecord rec;
        try {
            rec.day = std::chrono::sys_days{parse_date_dmy(fields[0])};
            rec.minute = parse_time_hms(fields[1]);
        } catch (const ParseError& e) {
            fail(e.what());
        }
        const std::string_view gap = fields[2];
        if (gap != "?") {
            double v = 0.0;
            if (!detail::parse_double(gap, v)) fail("bad power value '" + std::string(gap) + "'");
            if (!std::isfinite(v) || v < 0.0)
                fail("power value out of range '" + std::string(gap) + "'");
            rec.gap = v;
        }
        records.push_back(rec);
    }
    if (records.empty()) throw ParseError(path + ": no data rows");
    return records;
}

/// Completes the record stream into a gap-free minute series. Missing values
/// are filled with the mean of present values sharing the same minute-of-day;
/// minutes-of-day with no observation anywhere fall back to the global mean.
inline LoadSeries impute_missing(const std::vector<RawRecord>& records) {
    if (records.empty()) throw DataError("nothing to average: no records");

    std::array<double, kMinutesPerDay> bin_sum{};
    std::array<size_t, kMinutesPerDay> bin_cnt{};
    double global_sum = 0.0;
    size_t global_cnt = 0;

    int64_t prev = std::numeric_limits<int64_t>::min();
    for (const RawRecord& r : records) {
        const int64_t m = r.abs_minute();
        if (m == prev) throw DataError("duplicate timestamp " + iso8601_from_minute(m));
        if (m < prev) throw DataError("records not sorted at " + iso8601_from_minute(m));
        prev = m;
        if (r.gap) {
            bin_sum[r.minute] += *r.gap;
            bin_cnt[r.minute] += 1;
            global_sum += *r.gap;
            global_cnt += 1;
        }
    }
    if (global_cnt == 0) throw DataError("nothing to average: all values missing");
    const double global_mean = global_sum / static_cast<double>(global_cnt);

    LoadSeries out;
    out.start_minute = records.front().abs_minute();
    const int64_t last = records.back().abs_minute();
    const size_t total = static_cast<size_t>(last - out.start_minute) + 1;
    out.values.resize(total);
    out.imputed.assign(total, 0);

    size_t next_rec = 0;
    for (size_t i = 0; i < total; ++i) {
        const int64_t m = out.start_minute + static_cast<int64_t>(i);
        const RawRecord* rec = nullptr;
        if (next_rec < records.size() && records[next_rec].abs_minute() == m)
            rec = &records[next_rec++];
        if (rec && rec->gap) {
            out.values[i] = *rec->gap;
        } else {
            const int mod = minute_of_day(m);
            out.values[i] =
                bin_cnt[mod] > 0 ? bin_sum[mod] / static_cast<double>(bin_cnt[mod]) : global_mean;
            out.imputed[i] = 1;
        }
    }
    return out;
}

inline double normalize_value(double v, const NormalizationParams& p) {
    return (v - p.min) / (p.max - p.min);
}

inline double denormalize_value(double v, const NormalizationParams& p) {
    return v * (p.max - p.min) + p.min;
}

inline LoadSeries normalize(const LoadSeries& s, const NormalizationParams& p) {
    p.validate();
    LoadSeries out = s;
    for (double& v : out.values) v = normalize_value(v, p);
    return out;
}

inline LoadSeries denormalize(const LoadSeries& s, const NormalizationParams& p) {
    p.validate();
    LoadSeries out = s;
    for (double& v : out.values) v = denormalize_value(v, p);
    return out;
}

/// Cuts `n_weeks` consecutive week-long series starting at `start` 00:00.
inline std::vector<LoadSeries> slice_weeks(const LoadSeries& s, std::chrono::year_month_day start,
                                           int n_weeks) {
    if (n_weeks < 0) throw ConfigError("slice_weeks: negative week count");
    const int64_t start_minute = minutes_from_day(std::chrono::sys_days{start}, 0);
    const int64_t offset = start_minute - s.start_minute;
    const int64_t need = static_cast<int64_t>(n_weeks) * kMinutesPerWeek;
    if (offset < 0 || offset + need > static_cast<int64_t>(s.size()))
        throw DataError("requested span " + iso8601_from_minute(start_minute) + " + " +
                        std::to_string(n_weeks) + " weeks exceeds series coverage [" +
                        iso8601_from_minute(s.start_minute) + ", " +
                        iso8601_from_minute(s.minute_at(s.size() - 1)) + "]");
    std::vector<LoadSeries> weeks;
    weeks.reserve(static_cast<size_t>(n_weeks));
    for (int w = 0; w < n_weeks; ++w) {
        LoadSeries week;
        week.start_minute = start_minute + static_cast<int64_t>(w) * kMinutesPerWeek;
        const size_t from = static_cast<size_t>(offset) + static_cast<size_t>(w) * kMinutesPerWeek;
        week.values.assign(s.values.begin() + from, s.values.begin() + from + kMinutesPerWeek);
        week.imputed.assign(s.imputed.begin() + from, s.imputed.begin() + from + kMinutesPerWeek);
        weeks.push_back(std::move(week));
    }
    return weeks;
}

// ---------------------------------------------------------------------------
// Series persistence: a small binary cache and the CSV export format.
// ---------------------------------------------------------------------------

inline void write_series_bin(const std::string& path, const LoadSeries& s) {
    std::ofstream out(path, std::ios::binary | std::ios::trunc);
    if (!out) throw DataError("cannot write series cache '" + path + "'");
    const char magic[8] = {'S', 'T', 'L', 'F', 'S', 'E', 'R', '1'};
    out.write(magic, 8);
    const uint64_t count = s.size();
    out.write(reinterpret_cast<const char*>(&s.start_minute), sizeof(s.start_minute));
    out.write(reinterpret_cast<const char*>(&count), sizeof(count));
    out.write(reinterpret_cast<const char*>(s.values.data()),
              static_cast<std::streamsize>(count * sizeof(double)));
    out.write(reinterpret_cast<const char*>(s.imputed.data()),
              static_cast<std::streamsize>(count));
    if (!out) throw DataError("short write to series cache '" + path + "'");
}

inline LoadSeries read_series_bin(const std::string& path) {
    std::ifstream in(path, std::ios::binary);
    if (!in) throw DataError("cannot open series cache '" + path + "'");
    char magic[8];
    in.read(magic, 8);
    if (!in || std::memcmp(magic, "STLFSER1", 8) != 0)
        throw DataError("bad series cache '" + path + "'");
    LoadSeries s;
    uint64_t count = 0;
    in.read(reinterpret_cast<char*>(&s.start_minute), sizeof(s.start_minute));
    in.read(reinterpret_cast<char*>(&count), sizeof(count));
    if (!in) throw DataError("truncated series cache '" + path + "'");
    s.values.resize(count);
    s.imputed.resize(count);
    in.read(reinterpret_cast<char*>(s.values.data()),
            static_cast<std::streamsize>(count * sizeof(double)));
    in.read(reinterpret_cast<char*>(s.imputed.data()), static_cast<std::streamsize>(count));
    if (!in) throw DataError("truncated series cache '" + path + "'");
    return s;
}

/// Two-column CSV dump: `timestamp_iso8601,gap_kw`.
inline void export_series_csv(const std::string& path, const LoadSeries& s) {
    std::ofstream out(path, std::ios::trunc);
    if (!out) throw DataError("cannot write '" + path + "'");
    out << "timestamp_iso8601,gap_kw\n";
    char num[64];
    for (size_t i = 0; i < s.size(); ++i) {
        const auto r = std::to_chars(num, num + sizeof(num), s.values[i]);
        out << iso8601_from_minute(s.minute_at(i)) << ','
            << std::string_view(num, static_cast<size_t>(r.ptr - num)) << '\n';
    }
    if (!out) throw DataError("short write to '" + path + "'");
}

}  // namespace stlf
