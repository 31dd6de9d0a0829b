#pragma once

// The hourly per-location WUE dataset: joins weather and subregion
// generation, applies the gap policy, and reads/writes the CSV schema
//   timestamp_utc,city,direct_wue_fixed_approach,direct_wue_fixed_cold_water,indirect_wue,gap_reason

#include <algorithm>
#include <array>
#include <atomic>
#include <cmath>
#include <filesystem>
#include <map>
#include <optional>
#include <span>
#include <string>
#include <string_view>
#include <thread>
#include <vector>

#include "wue/csv.hpp"
#include "wue/error.hpp"
#include "wue/grid_mix.hpp"
#include "wue/ingest.hpp"
#include "wue/time.hpp"
#include "wue/wue_core.hpp"

namespace wue {

// Direct fields can only be gapped by the first two reasons and the indirect
// field only by the last two, so the CSV can hold both in one column.
enum class GapReason { MissingWeather, ModelDomain, MissingGeneration, ZeroGeneration };

inline std::string_view to_string(GapReason r) {
    switch (r) {
    case GapReason::MissingWeather: return "missing_weather";
    case GapReason::ModelDomain: return "model_domain";
    case GapReason::MissingGeneration: return "missing_generation";
    case GapReason::ZeroGeneration: return "zero_generation";
    }
    return "";
}

inline std::optional<GapReason> parse_gap_reason(std::string_view s) {
    for (auto r : {GapReason::MissingWeather, GapReason::ModelDomain, GapReason::MissingGeneration,
                   GapReason::ZeroGeneration})
        if (to_string(r) == s) return r;
    return std::nullopt;
}

inline bool is_direct_reason(GapReason r) { return r == GapReason::MissingWeather || r == GapReason::ModelDomain; }

enum class WueField { DirectFixedApproach, DirectFixedColdWater, Indirect };

inline constexpr std::array<WueField, 3> kAllFields{WueField::DirectFixedApproach, WueField::DirectFixedColdWater,
                                                    WueField::Indirect};

inline std::string_view to_string(WueField f) {
    switch (f) {
    case WueField::DirectFixedApproach: return "direct_wue_fixed_approach";
    case WueField::DirectFixedColdWater: return "direct_wue_fixed_cold_water";
    case WueField::Indirect: return "indirect_wue";
    }
    return "";
}

inline WueField direct_field(CoolingStrategy s) {
    return s == CoolingStrategy::FixedApproach ? WueField::DirectFixedApproach : WueField::DirectFixedColdWater;
}

struct WuePoint {
    UtcHour timestamp;
    std::string location;
    std::optional<double> direct_fixed_approach;
    std::optional<double> direct_fixed_cold_water;
    std::optional<double> indirect;
    std::optional<GapReason> direct_gap;    // set iff a direct field is empty
    std::optional<GapReason> indirect_gap;  // set iff indirect is empty

    const std::optional<double>& value(WueField f) const {
        switch (f) {
        case WueField::DirectFixedApproach: return direct_fixed_approach;
        case WueField::DirectFixedColdWater: return direct_fixed_cold_water;
        case WueField::Indirect: break;
        }
        return indirect;
    }

    std::optional<GapReason> gap(WueField f) const {
        if (value(f)) return std::nullopt;
        return f == WueField::Indirect ? indirect_gap : direct_gap;
    }

    friend bool operator==(const WuePoint&, const WuePoint&) = default;
};

class WueSeries {
public:
    WueSeries() = default;
    explicit WueSeries(std::string location) : location_(std::move(location)) {}

    const std::string& location() const noexcept { return location_; }
    const std::vector<WuePoint>& points() const noexcept { return points_; }
    std::size_t size() const noexcept { return points_.size(); }
    bool empty() const noexcept { return points_.empty(); }

    // Points must arrive in strictly increasing hour order.
    void append(WuePoint p) {
        if (p.location != location_)
            throw DataError("point for '" + p.location + "' appended to series '" + location_ + "'");
        if (!points_.empty() && !(points_.back().timestamp < p.timestamp))
            throw DataError("series '" + location_ + "': timestamps must be strictly increasing (" +
                            format_utc_hour(p.timestamp) + " after " + format_utc_hour(points_.back().timestamp) + ")");
        for (auto f : kAllFields)
            if (auto v = p.value(f); v && !(*v >= 0.0 && std::isfinite(*v)))
                throw DataError("series '" + location_ + "': negative or non-finite WUE");
        if (!p.value(WueField::DirectFixedApproach) || !p.value(WueField::DirectFixedColdWater)) {
            if (!p.direct_gap || !is_direct_reason(*p.direct_gap))
                throw DataError("series '" + location_ + "': direct gap at " + format_utc_hour(p.timestamp) +
                                " without a direct gap reason");
        } else if (p.direct_gap) {
            throw DataError("series '" + location_ + "': direct gap reason set on a complete point");
        }
        if (!p.indirect) {
            if (!p.indirect_gap || is_direct_reason(*p.indirect_gap))
                throw DataError("series '" + location_ + "': indirect gap at " + format_utc_hour(p.timestamp) +
                                " without an indirect gap reason");
        } else if (p.indirect_gap) {
            throw DataError("series '" + location_ + "': indirect gap reason set on a present value");
        }
        for (auto f : kAllFields)
            if (p.value(f)) ++non_gap_[static_cast<std::size_t>(f)];
        points_.push_back(std::move(p));
    }

    std::size_t non_gap_count(WueField f) const { return non_gap_[static_cast<std::size_t>(f)]; }

    double coverage(WueField f) const {
        return points_.empty() ? 0.0 : static_cast<double>(non_gap_count(f)) / static_cast<double>(points_.size());
    }

    const WuePoint* find(UtcHour t) const {
        auto it = std::lower_bound(points_.begin(), points_.end(), t,
                                   [](const WuePoint& p, UtcHour x) { return p.timestamp < x; });
        return it != points_.end() && it->timestamp == t ? &*it : nullptr;
    }

    friend bool operator==(const WueSeries& a, const WueSeries& b) {
        return a.location_ == b.location_ && a.points_ == b.points_;
    }

private:
    std::string location_;
    std::vector<WuePoint> points_;
    std::array<std::size_t, 3> non_gap_{};
};

// --- weather preparation -----------------------------------------------------

// Averages every reading that falls into the same (city, hour) bucket.
// Output is sorted by city, then hour.
inline std::vector<WeatherObservation> hourly_weather(std::span<const WeatherObservation> obs) {
    struct Acc {
        double temp = 0, rh = 0;
        int n = 0;
    };
    std::map<std::pair<std::string, UtcHour>, Acc> buckets;
    for (const auto& o : obs) {
        auto& a = buckets[{o.city, o.timestamp}];
        a.temp += o.air_temp_c;
        a.rh += o.relative_humidity;
        ++a.n;
    }
    std::vector<WeatherObservation> out;
    out.reserve(buckets.size());
    for (const auto& [key, a] : buckets)
        out.push_back({key.second, key.first, a.temp / a.n, a.rh / a.n});
    return out;
}

struct FilledHour {
    std::string city;
    UtcHour timestamp;

    friend bool operator==(const FilledHour&, const FilledHour&) = default;
};

struct FillReport {
    std::vector<FilledHour> filled;
};

// Fills runs of at most `max_gap` missing hours between two observed hours by
// linear interpolation of temperature and humidity. Longer runs and runs at
// either end of a city's record are left missing.
inline std::vector<WeatherObservation> interpolate_weather_gaps(std::span<const WeatherObservation> obs,
                                                                int max_gap, FillReport* report = nullptr) {
    if (max_gap < 0) throw ConfigError("max_gap must be >= 0");
    auto hourly = hourly_weather(obs);
    std::vector<WeatherObservation> out;
    out.reserve(hourly.size());
    for (std::size_t i = 0; i < hourly.size(); ++i) {
        if (i > 0 && hourly[i - 1].city == hourly[i].city) {
            const auto& a = hourly[i - 1];
            const auto& b = hourly[i];
            long long span = (b.timestamp - a.timestamp).count();
            long long missing = span - 1;
            if (missing >= 1 && missing <= max_gap) {
                for (long long k = 1; k <= missing; ++k) {
                    double f = static_cast<double>(k) / static_cast<double>(span);
                    double temp = a.air_temp_c + (b.air_temp_c - a.air_temp_c) * f;
                    double rh = std::clamp(a.relative_humidity + (b.relative_humidity - a.relative_humidity) * f, 0.0, 100.0);
                    UtcHour t = a.timestamp + hours{k};
                    out.push_back({t, a.city, temp, rh});
                    if (report) report->filled.push_back({a.city, t});
                }
            }
        }
        out.push_back(hourly[i]);
    }
    return out;
}

// --- build -------------------------------------------------------------------

struct BuildConfig {
    double lambda = 1.0;
    std::map<std::string, double> lambda_overrides;  // city -> lambda
    std::optional<FetchWindow> window;               // default: common window of the inputs
    WaterIntensityTable intensities = WaterIntensityTable::defaults();
    std::size_t jobs = 1;
};

struct LocationBuildReport {
    std::string city;
    std::size_t hours = 0;
    std::map<GapReason, std::size_t> direct_gaps;
    std::map<GapReason, std::size_t> indirect_gaps;
    std::array<std::size_t, 3> non_gap{};
};

struct BuildReport {
    std::optional<FetchWindow> window;
    std::vector<LocationBuildReport> locations;
};

struct DirectResult {
    std::optional<double> fixed_approach;
    std::optional<double> fixed_cold_water;
    std::optional<GapReason> gap;
};

// Weather -> Stull wet bulb -> Fahrenheit -> both cooling-tower models.
inline DirectResult direct_from_weather(double air_temp_c, double rh_percent, double lambda) {
    DirectResult r;
    if (!stull_in_domain(air_temp_c, rh_percent)) {
        r.gap = GapReason::ModelDomain;
        return r;
    }
    TemperatureF t_w = celsius_to_fahrenheit(wet_bulb_from_stull(air_temp_c, RelativeHumidity(rh_percent)));
    DirectWueModel approach(CoolingStrategy::FixedApproach, lambda);
    DirectWueModel cold(CoolingStrategy::FixedColdWater, lambda);
    if (approach.in_domain(t_w)) r.fixed_approach = direct_wue(approach, t_w).value();
    if (cold.in_domain(t_w)) r.fixed_cold_water = direct_wue(cold, t_w).value();
    if (!r.fixed_approach || !r.fixed_cold_water) r.gap = GapReason::ModelDomain;
    return r;
}

namespace detail {

inline std::optional<FetchWindow> common_window(std::span<const WeatherObservation> weather,
                                                const SubregionGeneration& generation) {
    if (weather.empty() || generation.empty()) return std::nullopt;
    auto [wmin, wmax] = std::minmax_element(weather.begin(), weather.end(),
                                            [](const auto& a, const auto& b) { return a.timestamp < b.timestamp; });
    UtcHour gmin = generation.begin()->first.hour, gmax = gmin;
    for (const auto& [key, mix] : generation) {
        gmin = std::min(gmin, key.hour);
        gmax = std::max(gmax, key.hour);
    }
    UtcHour start = std::max(wmin->timestamp, gmin);
    UtcHour end = std::min(wmax->timestamp, gmax) + hours{1};
    if (!(start < end)) return std::nullopt;
    return FetchWindow(start, end);
}

}  // namespace detail

// Builds one series per location over the window. Pure: identical inputs and
// config give identical series regardless of `jobs`.
inline std::vector<WueSeries> build_dataset(std::span<const WeatherObservation> weather,
                                            const SubregionGeneration& generation,
                                            std::span<const LocationConfig> locations,
                                            const SubregionMapping& mapping, const BuildConfig& config,
                                            BuildReport* report = nullptr) {
    for (const auto& loc : locations)
        if (!mapping.has_subregion(loc.subregion))
            throw ConfigError("location '" + loc.city + "' references unknown subregion '" + loc.subregion + "'");
    for (const auto& [city, lambda] : config.lambda_overrides) {
        if (std::none_of(locations.begin(), locations.end(), [&](const auto& l) { return l.city == city; }))
            throw ConfigError("lambda override for unknown city '" + city + "'");
        DirectWueModel(CoolingStrategy::FixedApproach, lambda);  // validates
    }
    DirectWueModel(CoolingStrategy::FixedApproach, config.lambda);

    auto hourly = hourly_weather(weather);
    std::optional<FetchWindow> window = config.window ? config.window : detail::common_window(hourly, generation);
    if (!window) throw DataError("weather and generation inputs share no common hour");

    std::map<std::pair<std::string, UtcHour>, const WeatherObservation*> by_hour;
    for (const auto& o : hourly) by_hour.emplace(std::pair{o.city, o.timestamp}, &o);

    std::vector<WueSeries> out(locations.size());
    std::vector<LocationBuildReport> reports(locations.size());

    auto build_one = [&](std::size_t li) {
        const auto& loc = locations[li];
        auto ov = config.lambda_overrides.find(loc.city);
        double lambda = ov == config.lambda_overrides.end() ? config.lambda : ov->second;
        WueSeries series(loc.city);
        LocationBuildReport rep;
        rep.city = loc.city;
        for (UtcHour t = window->start(); t < window->end(); t += hours{1}) {
            WuePoint p{t, loc.city, {}, {}, {}, {}, {}};
            auto w = by_hour.find({loc.city, t});
            if (w == by_hour.end()) {
                p.direct_gap = GapReason::MissingWeather;
            } else {
                auto d = direct_from_weather(w->second->air_temp_c, w->second->relative_humidity, lambda);
                p.direct_fixed_approach = d.fixed_approach;
                p.direct_fixed_cold_water = d.fixed_cold_water;
                p.direct_gap = d.gap;
            }
            auto g = generation.find(SubregionHour{loc.subregion, t});
            if (g == generation.end()) {
                p.indirect_gap = GapReason::MissingGeneration;
            } else if (auto v = indirect_wue(g->second, config.intensities)) {
                p.indirect = v->value();
            } else {
                p.indirect_gap = GapReason::ZeroGeneration;
            }
            ++rep.hours;
            if (p.direct_gap) ++rep.direct_gaps[*p.direct_gap];
            if (p.indirect_gap) ++rep.indirect_gaps[*p.indirect_gap];
            series.append(std::move(p));
        }
        for (auto f : kAllFields) rep.non_gap[static_cast<std::size_t>(f)] = series.non_gap_count(f);
        out[li] = std::move(series);
        reports[li] = std::move(rep);
    };

    std::size_t jobs = std::clamp<std::size_t>(config.jobs, 1, std::max<std::size_t>(locations.size(), 1));
    if (jobs == 1) {
        for (std::size_t i = 0; i < locations.size(); ++i) build_one(i);
    } else {
        std::atomic<std::size_t> next{0};
        std::vector<std::jthread> pool;
        for (std::size_t w = 0; w < jobs; ++w)
            pool.emplace_back([&] {
                for (std::size_t i; (i = next.fetch_add(1)) < locations.size();) build_one(i);
            });
    }

    if (report) {
        report->window = window;
        report->locations = std::move(reports);
    }
    return out;
}

// --- CSV I/O -----------------------------------------------------------------

inline const csv::Row& dataset_header() {
    static const csv::Row h{"timestamp_utc",  "city",         "direct_wue_fixed_approach", "direct_wue_fixed_cold_water",
                            "indirect_wue", "gap_reason"};
    return h;
}

inline constexpr int kDatasetDecimals = 6;

namespace detail {

inline std::string cell(const std::optional<double>& v) {
    return v ? csv::format_fixed(*v, kDatasetDecimals) : std::string();
}

inline std::string gap_cell(const WuePoint& p) {
    std::string s;
    if (p.direct_gap) s += to_string(*p.direct_gap);
    if (p.indirect_gap) {
        if (!s.empty()) s += '|';
        s += to_string(*p.indirect_gap);
    }
    return s;
}

}  // namespace detail

inline std::string format_series_csv(const WueSeries& series) {
    std::string out;
    csv::append_row(out, dataset_header());
    for (const auto& p : series.points())
        csv::append_row(out, {format_utc_hour(p.timestamp), p.location, detail::cell(p.direct_fixed_approach),
                              detail::cell(p.direct_fixed_cold_water), detail::cell(p.indirect), detail::gap_cell(p)});
    return out;
}

inline std::filesystem::path series_file_name(const std::string& city) {
    if (city.empty() || city.find_first_of("/\\") != std::string::npos || city == "." || city == "..")
        throw ConfigError("city id '" + city + "' cannot be used as a file name");
    return city + ".csv";
}

inline std::vector<std::filesystem::path> write_dataset(std::span<const WueSeries> series,
                                                        const std::filesystem::path& dir) {
    std::vector<std::filesystem::path> written;
    for (const auto& s : series) {
        auto path = dir / series_file_name(s.location());
        csv::write_file(path, format_series_csv(s));
        written.push_back(path);
    }
    return written;
}

inline WueSeries parse_series_csv(std::string_view content, const std::string& source_name = "dataset") {
    auto rows = csv::parse(content);
    if (rows.empty() || rows.front() != dataset_header())
        throw DataError(source_name + ": dataset header mismatch: expected '" + csv::join_header(dataset_header()) +
                        "', found '" + (rows.empty() ? std::string() : csv::join_header(rows.front())) + "'");
    WueSeries series;
    bool first = true;
    for (std::size_t i = 1; i < rows.size(); ++i) {
        const auto& r = rows[i];
        std::string where = source_name + " row " + std::to_string(i + 1);
        if (r.size() != 6) throw DataError(where + ": expected 6 columns");
        if (first) {
            series = WueSeries(r[1]);
            first = false;
        }
        auto ts = parse_timestamp(r[0]);
        if (!ts || !is_hour_aligned(*ts)) throw DataError(where + ": bad timestamp '" + r[0] + "'");
        WuePoint p{floor_hour(*ts), r[1], {}, {}, {}, {}, {}};
        std::array<std::optional<double>*, 3> dst{&p.direct_fixed_approach, &p.direct_fixed_cold_water, &p.indirect};
        for (std::size_t c = 0; c < 3; ++c) {
            if (r[2 + c].empty()) continue;
            auto v = csv::parse_double(r[2 + c]);
            if (!v) throw DataError(where + ": bad value '" + r[2 + c] + "'");
            *dst[c] = *v;
        }
        std::string_view reasons = r[5];
        while (!reasons.empty()) {
            auto bar = reasons.find('|');
            auto token = reasons.substr(0, bar);
            auto reason = parse_gap_reason(token);
            if (!reason) throw DataError(where + ": unknown gap reason '" + std::string(token) + "'");
            (is_direct_reason(*reason) ? p.direct_gap : p.indirect_gap) = reason;
            reasons = bar == std::string_view::npos ? std::string_view{} : reasons.substr(bar + 1);
        }
        try {
            series.append(std::move(p));
        } catch (const DataError& e) {
            throw DataError(where + ": " + e.what());
        }
    }
    return series;
}

inline WueSeries read_dataset_file(const std::filesystem::path& path) {
    return parse_series_csv(csv::read_file(path), path.string());
}

// Reads every *.csv file in `dir`, ordered by file name.
inline std::vector<WueSeries> read_dataset(const std::filesystem::path& dir) {
    std::vector<std::filesystem::path> files;
    for (const auto& entry : std::filesystem::directory_iterator(dir))
        if (entry.is_regular_file() && entry.path().extension() == ".csv") files.push_back(entry.path());
    std::sort(files.begin(), files.end());
    std::vector<WueSeries> out;
    for (const auto& f : files) out.push_back(read_dataset_file(f));
    return out;
}

// The series as it reads back from disk: values rounded to the CSV precision.
inline WueSeries quantize(const WueSeries& s) {
    WueSeries out(s.location());
    for (auto p : s.points()) {
        for (auto* v : {&p.direct_fixed_approach, &p.direct_fixed_cold_water, &p.indirect})
            if (*v) *v = *csv::parse_double(csv::format_fixed(**v, kDatasetDecimals));
        out.append(std::move(p));
    }
    return out;
}

// --- validation against an external copy of the dataset -----------------------

// Column names of the reference file. A mapping file with header
// `field,column` can override any of them.
struct ReferenceColumns {
    std::string timestamp = "timestamp_utc";
    std::string city = "city";
    std::array<std::string, 3> fields{"direct_wue_fixed_approach", "direct_wue_fixed_cold_water", "indirect_wue"};

    static ReferenceColumns load(const std::filesystem::path& path) {
        ReferenceColumns cols;
        for (const auto& r : csv::read_with_header(path, {"field", "column"})) {
            if (r.size() != 2) throw ConfigError(path.string() + ": expected 2 columns");
            if (r[0] == "timestamp_utc") cols.timestamp = r[1];
            else if (r[0] == "city") cols.city = r[1];
            else if (r[0] == "direct_wue_fixed_approach") cols.fields[0] = r[1];
            else if (r[0] == "direct_wue_fixed_cold_water") cols.fields[1] = r[1];
            else if (r[0] == "indirect_wue") cols.fields[2] = r[1];
            else throw ConfigError(path.string() + ": unknown field '" + r[0] + "'");
        }
        return cols;
    }
};

struct FieldDivergence {
    std::size_t compared = 0;  // hours where both sides have a value
    double mean_abs_diff = 0.0;
    double max_abs_diff = 0.0;
    std::size_t exceeding = 0;  // hours with |diff| > tolerance
};

struct DivergenceReport {
    std::string location;
    std::size_t overlap_hours = 0;
    std::array<FieldDivergence, 3> fields;
};

// Compares our series (at CSV precision) with a reference file over the hours
// both cover. Rows carrying a different city are ignored when the reference
// has a city column. Throws DataError when no hour overlaps.
inline DivergenceReport validate_against_published(const WueSeries& ours, std::string_view reference_csv,
                                                   double tolerance, const ReferenceColumns& cols = {}) {
    auto rows = csv::parse(reference_csv);
    if (rows.empty()) throw DataError("reference dataset is empty");
    const auto& header = rows.front();
    auto column = [&](const std::string& name) -> std::optional<std::size_t> {
        auto it = std::find(header.begin(), header.end(), name);
        if (it == header.end()) return std::nullopt;
        return static_cast<std::size_t>(it - header.begin());
    };
    auto ts_col = column(cols.timestamp);
    if (!ts_col)
        throw ConfigError("reference dataset has no '" + cols.timestamp + "' column (header: '" +
                          csv::join_header(header) + "')");
    auto city_col = column(cols.city);
    std::array<std::optional<std::size_t>, 3> field_cols{column(cols.fields[0]), column(cols.fields[1]),
                                                         column(cols.fields[2])};

    WueSeries mine = quantize(ours);
    DivergenceReport rep;
    rep.location = ours.location();
    std::array<double, 3> sum{};
    for (std::size_t i = 1; i < rows.size(); ++i) {
        const auto& r = rows[i];
        if (*ts_col >= r.size()) continue;
        if (city_col && *city_col < r.size() && r[*city_col] != ours.location()) continue;
        auto ts = parse_timestamp(r[*ts_col]);
        if (!ts) continue;
        const WuePoint* p = mine.find(floor_hour(*ts));
        if (!p) continue;
        ++rep.overlap_hours;
        for (std::size_t f = 0; f < 3; ++f) {
            if (!field_cols[f] || *field_cols[f] >= r.size()) continue;
            auto theirs = csv::parse_double(r[*field_cols[f]]);
            const auto& v = p->value(kAllFields[f]);
            if (!theirs || !v) continue;
            double d = std::abs(*v - *theirs);
            auto& fd = rep.fields[f];
            ++fd.compared;
            sum[f] += d;
            fd.max_abs_diff = std::max(fd.max_abs_diff, d);
            if (d > tolerance) ++fd.exceeding;
        }
    }
    if (rep.overlap_hours == 0) throw DataError("reference dataset shares no hour with '" + ours.location() + "'");
    for (std::size_t f = 0; f < 3; ++f)
        if (rep.fields[f].compared) rep.fields[f].mean_abs_diff = sum[f] / static_cast<double>(rep.fields[f].compared);
    return rep;
}

}  // namespace wue
