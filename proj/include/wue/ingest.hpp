#pragma once

// Normalization of the two raw inputs: hourly weather observations (files)
// and hourly generation by fuel (files here, remote API in fetch.hpp).

#include <algorithm>
#include <filesystem>
#include <span>
#include <set>
#include <string>
#include <string_view>
#include <vector>

#include "wue/csv.hpp"
#include "wue/error.hpp"
#include "wue/grid_mix.hpp"
#include "wue/time.hpp"

namespace wue {

inline constexpr double kMinAirTempC = -60.0;
inline constexpr double kMaxAirTempC = 60.0;

struct WeatherObservation {
    UtcHour timestamp;
    std::string city;
    double air_temp_c;
    double relative_humidity;  // percent

    friend bool operator==(const WeatherObservation&, const WeatherObservation&) = default;
};

struct Rejection {
    std::size_t row;  // 1-based line number, header is row 1
    std::string reason;

    friend bool operator==(const Rejection&, const Rejection&) = default;
};

template <typename T>
struct ParseResult {
    std::vector<T> rows;
    std::vector<Rejection> rejected;
};

struct WeatherParseOptions {
    // Off: timestamps must sit on the hour. On: they are floored to their hour
    // bucket and averaged with the bucket's other readings downstream.
    bool floor_subhourly = false;
};

inline const csv::Row& weather_header() {
    static const csv::Row h{"timestamp_utc", "city", "air_temp_c", "relative_humidity_pct"};
    return h;
}

// Bad rows are collected, never fatal. Only a wrong header throws.
inline ParseResult<WeatherObservation> parse_weather_csv(std::string_view content,
                                                        WeatherParseOptions opts = {}) {
    auto rows = csv::parse(content);
    if (rows.empty() || rows.front() != weather_header())
        throw DataError("weather CSV: expected header '" + csv::join_header(weather_header()) + "', found '" +
                        (rows.empty() ? std::string() : csv::join_header(rows.front())) + "'");

    ParseResult<WeatherObservation> out;
    for (std::size_t i = 1; i < rows.size(); ++i) {
        const auto& r = rows[i];
        const std::size_t line = i + 1;
        auto reject = [&](std::string reason) { out.rejected.push_back({line, std::move(reason)}); };

        if (r.size() != 4) { reject("expected 4 columns"); continue; }
        auto ts = parse_timestamp(r[0]);
        if (!ts) { reject("malformed timestamp"); continue; }
        if (!opts.floor_subhourly && !is_hour_aligned(*ts)) { reject("not hour-aligned"); continue; }
        if (r[1].empty()) { reject("empty city"); continue; }
        auto temp = csv::parse_double(r[2]);
        if (!temp) { reject("air_temp not a number"); continue; }
        if (*temp < kMinAirTempC || *temp > kMaxAirTempC) { reject("air_temp out of range"); continue; }
        auto rh = csv::parse_double(r[3]);
        if (!rh) { reject("relative_humidity not a number"); continue; }
        if (*rh < 0.0 || *rh > 100.0) { reject("relative_humidity out of range"); continue; }

        out.rows.push_back({floor_hour(*ts), r[1], *temp, *rh});
    }
    return out;
}

inline std::string write_weather_csv(std::span<const WeatherObservation> obs) {
    std::string out;
    csv::append_row(out, weather_header());
    for (const auto& o : obs)
        csv::append_row(out, {format_utc_hour(o.timestamp), o.city, csv::format_fixed(o.air_temp_c, 3),
                              csv::format_fixed(o.relative_humidity, 3)});
    return out;
}

inline const csv::Row& generation_header() {
    static const csv::Row h{"timestamp_utc", "balancing_authority", "fuel", "mwh"};
    return h;
}

// File form of the generation feed. Fuel labels go through the same alias
// map as the API client.
inline ParseResult<GenerationRecord> parse_generation_csv(std::string_view content, GridDiagnostics* diag = nullptr) {
    auto rows = csv::parse(content);
    if (rows.empty() || rows.front() != generation_header())
        throw DataError("generation CSV: expected header '" + csv::join_header(generation_header()) +
                        "', found '" + (rows.empty() ? std::string() : csv::join_header(rows.front())) + "'");

    ParseResult<GenerationRecord> out;
    for (std::size_t i = 1; i < rows.size(); ++i) {
        const auto& r = rows[i];
        const std::size_t line = i + 1;
        auto reject = [&](std::string reason) { out.rejected.push_back({line, std::move(reason)}); };

        if (r.size() != 4) { reject("expected 4 columns"); continue; }
        auto ts = parse_timestamp(r[0]);
        if (!ts) { reject("malformed timestamp"); continue; }
        if (!is_hour_aligned(*ts)) { reject("not hour-aligned"); continue; }
        if (r[1].empty()) { reject("empty balancing_authority"); continue; }
        auto mwh = csv::parse_double(r[3]);
        if (!mwh) { reject("mwh not a number"); continue; }
        out.rows.push_back({floor_hour(*ts), r[1], normalize_fuel_label(r[2], diag), *mwh});
    }
    return out;
}

inline std::string write_generation_csv(std::span<const GenerationRecord> records) {
    std::string out;
    csv::append_row(out, generation_header());
    for (const auto& r : records)
        csv::append_row(out, {format_utc_hour(r.timestamp), r.balancing_authority, std::string(to_string(r.source)),
                              csv::format_fixed(r.mwh, 3)});
    return out;
}

struct LocationConfig {
    std::string city;
    std::string state;
    std::string subregion;
    std::string timezone;  // IANA name, used for local-day bucketing only
};

// Loads `city,state,subregion,timezone`. City ids must be unique and every
// subregion must be reachable through the mapping.
inline std::vector<LocationConfig> load_locations(const std::filesystem::path& path, const SubregionMapping& mapping) {
    auto rows = csv::read_with_header(path, {"city", "state", "subregion", "timezone"});
    std::vector<LocationConfig> out;
    std::set<std::string> seen;
    for (std::size_t i = 0; i < rows.size(); ++i) {
        const auto& r = rows[i];
        std::string where = path.string() + " row " + std::to_string(i + 2);
        if (r.size() != 4) throw ConfigError(where + ": expected 4 columns");
        if (r[0].empty()) throw ConfigError(where + ": empty city");
        if (!seen.insert(r[0]).second) throw ConfigError(where + ": duplicate city '" + r[0] + "'");
        if (!mapping.has_subregion(r[2]))
            throw ConfigError(where + ": subregion '" + r[2] + "' is not in the subregion mapping");
        out.push_back({r[0], r[1], r[2], r[3]});
    }
    return out;
}

// Half-open [start, end) range of UTC hours.
class FetchWindow {
public:
    FetchWindow(UtcHour start, UtcHour end) : start_(start), end_(end) {
        if (!(start < end)) throw ConfigError("window start must be before window end");
    }

    UtcHour start() const noexcept { return start_; }
    UtcHour end() const noexcept { return end_; }
    long long hours() const noexcept { return (end_ - start_).count(); }
    bool contains(UtcHour t) const noexcept { return t >= start_ && t < end_; }

    // Consecutive sub-windows of at most `chunk` hours covering the window.
    std::vector<FetchWindow> split(std::chrono::hours chunk) const {
        if (chunk.count() <= 0) throw ConfigError("chunk size must be positive");
        std::vector<FetchWindow> out;
        for (UtcHour s = start_; s < end_; s += chunk) out.emplace_back(s, std::min(s + chunk, end_));
        return out;
    }

    friend bool operator==(const FetchWindow&, const FetchWindow&) = default;

private:
    UtcHour start_;
    UtcHour end_;
};

}  // namespace wue
