#pragma once

// Descriptive analyses over WUE series: daily means, box-plot statistics and
// daily max-min variation, plus plot-ready table export.

#include <absl/time/civil_time.h>
#include <absl/time/time.h>
#include <json.hpp>

#include <algorithm>
#include <chrono>
#include <cmath>
#include <filesystem>
#include <numeric>
#include <span>
#include <string>
#include <variant>
#include <vector>

#include "wue/csv.hpp"
#include "wue/dataset.hpp"
#include "wue/error.hpp"
#include "wue/time.hpp"

namespace wue {

using LocalDate = std::chrono::year_month_day;

inline absl::TimeZone load_time_zone(const std::string& name) {
    absl::TimeZone tz;
    if (!absl::LoadTimeZone(name, &tz)) throw ConfigError("unknown time zone '" + name + "'");
    return tz;
}

inline LocalDate local_date(UtcHour t, const absl::TimeZone& tz) {
    auto secs = std::chrono::duration_cast<std::chrono::seconds>(t.time_since_epoch()).count();
    absl::CivilDay d = absl::ToCivilDay(absl::FromUnixSeconds(secs), tz);
    return LocalDate{std::chrono::year{static_cast<int>(d.year())}, std::chrono::month{static_cast<unsigned>(d.month())},
                     std::chrono::day{static_cast<unsigned>(d.day())}};
}

// 24 except across daylight-saving transitions.
inline long long hours_in_local_day(LocalDate date, const absl::TimeZone& tz) {
    absl::CivilDay d(static_cast<int>(date.year()), static_cast<unsigned>(date.month()),
                     static_cast<unsigned>(date.day()));
    return absl::ToInt64Hours(absl::FromCivil(d + 1, tz) - absl::FromCivil(d, tz));
}

namespace detail {

struct DayBucket {
    LocalDate date;
    std::vector<double> values;  // non-gap values of the selected field
};

// Series points grouped by local calendar day, in date order.
inline std::vector<DayBucket> bucket_by_local_day(const WueSeries& series, WueField field, const absl::TimeZone& tz) {
    std::vector<DayBucket> days;
    for (const auto& p : series.points()) {
        LocalDate d = local_date(p.timestamp, tz);
        if (days.empty() || days.back().date != d) days.push_back({d, {}});
        if (const auto& v = p.value(field)) days.back().values.push_back(*v);
    }
    return days;
}

inline double sorted_sum(std::vector<double> v) {
    std::sort(v.begin(), v.end());
    return std::accumulate(v.begin(), v.end(), 0.0);
}

}  // namespace detail

struct DailyMean {
    LocalDate date;
    double mean;
    std::size_t hours;  // non-gap hours averaged
};

struct OmittedDay {
    LocalDate date;
    std::size_t hours;
};

struct DailyAverageResult {
    std::vector<DailyMean> days;
    std::vector<OmittedDay> omitted;  // fewer than min_hours non-gap hours
};

inline constexpr std::size_t kMinHoursForDailyMean = 12;

inline DailyAverageResult daily_average(const WueSeries& series, WueField field, const absl::TimeZone& tz,
                                        std::size_t min_hours = kMinHoursForDailyMean) {
    DailyAverageResult out;
    for (auto& day : detail::bucket_by_local_day(series, field, tz)) {
        std::size_t n = day.values.size();
        if (n < min_hours || n == 0) {
            out.omitted.push_back({day.date, n});
            continue;
        }
        out.days.push_back({day.date, detail::sorted_sum(std::move(day.values)) / static_cast<double>(n), n});
    }
    return out;
}

struct BoxStats {
    double q1, median, q3, mean;
    double whisker_low, whisker_high;
    std::size_t n;
};

// Quantile of sorted data by linear interpolation between order statistics
// at position p * (n - 1) (the "inclusive" method).
inline double quantile_inclusive(std::span<const double> sorted, double p) {
    double pos = p * static_cast<double>(sorted.size() - 1);
    auto lo = static_cast<std::size_t>(std::floor(pos));
    if (lo + 1 >= sorted.size()) return sorted.back();
    return sorted[lo] + (sorted[lo + 1] - sorted[lo]) * (pos - static_cast<double>(lo));
}

// Whiskers are the most extreme data points inside the 1.5 * IQR fences.
inline BoxStats box_stats(std::span<const double> values) {
    if (values.empty()) throw DataError("box statistics need at least one value");
    std::vector<double> v(values.begin(), values.end());
    if (std::any_of(v.begin(), v.end(), [](double x) { return !std::isfinite(x); }))
        throw DataError("box statistics need finite values");
    std::sort(v.begin(), v.end());

    BoxStats b{};
    b.n = v.size();
    b.q1 = quantile_inclusive(v, 0.25);
    b.median = quantile_inclusive(v, 0.5);
    b.q3 = quantile_inclusive(v, 0.75);
    b.mean = std::accumulate(v.begin(), v.end(), 0.0) / static_cast<double>(b.n);
    double iqr = b.q3 - b.q1;
    double lo_fence = b.q1 - 1.5 * iqr;
    double hi_fence = b.q3 + 1.5 * iqr;
    b.whisker_low = *std::lower_bound(v.begin(), v.end(), lo_fence);
    b.whisker_high = *std::prev(std::upper_bound(v.begin(), v.end(), hi_fence));
    return b;
}

inline BoxStats box_stats(const WueSeries& series, WueField field) {
    std::vector<double> values;
    for (const auto& p : series.points())
        if (const auto& v = p.value(field)) values.push_back(*v);
    return box_stats(values);
}

enum class VariationDenominator { DailyMean, DailyMin };

struct DailyVariation {
    LocalDate date;
    double absolute_range;
    double relative_range;
};

struct DailyVariationResult {
    std::vector<DailyVariation> days;
    std::vector<LocalDate> incomplete;        // some hour of the day missing or gapped
    std::vector<LocalDate> zero_denominator;  // positive range over a zero mean/min
};

// Max - min over each complete local day; relative to the day's mean or min.
// A day is complete when every hour it contains (24, or 23/25 on DST
// transition days) is present and non-gap.
inline DailyVariationResult daily_variation(const WueSeries& series, WueField field, const absl::TimeZone& tz,
                                            VariationDenominator denominator) {
    DailyVariationResult out;
    std::vector<LocalDate> dates;
    std::vector<std::size_t> present;
    for (const auto& p : series.points()) {
        LocalDate d = local_date(p.timestamp, tz);
        if (dates.empty() || dates.back() != d) {
            dates.push_back(d);
            present.push_back(0);
        }
        ++present.back();
    }
    auto buckets = detail::bucket_by_local_day(series, field, tz);
    for (std::size_t i = 0; i < buckets.size(); ++i) {
        auto& day = buckets[i];
        auto expected = static_cast<std::size_t>(hours_in_local_day(day.date, tz));
        if (present[i] != expected || day.values.size() != expected) {
            out.incomplete.push_back(day.date);
            continue;
        }
        auto [mn, mx] = std::minmax_element(day.values.begin(), day.values.end());
        double lo = *mn;
        double range = *mx - lo;
        double denom = denominator == VariationDenominator::DailyMin
                           ? lo
                           : detail::sorted_sum(day.values) / static_cast<double>(day.values.size());
        if (range == 0.0) {
            out.days.push_back({day.date, 0.0, 0.0});
        } else if (denom <= 0.0) {
            out.zero_denominator.push_back(day.date);
        } else {
            out.days.push_back({day.date, range, range / denom});
        }
    }
    return out;
}

// --- plot data export ----------------------------------------------------------

using Cell = std::variant<std::string, double, long long>;

struct PlotTable {
    std::vector<std::string> columns;
    std::vector<std::vector<Cell>> rows;

    friend bool operator==(const PlotTable&, const PlotTable&) = default;
};

enum class ExportFormat { Csv, Ndjson };

inline PlotTable to_table(const DailyAverageResult& r) {
    PlotTable t{{"date", "mean_wue"}, {}};
    for (const auto& d : r.days) t.rows.push_back({format_date(d.date), d.mean});
    return t;
}

inline PlotTable to_table(const DailyVariationResult& r) {
    PlotTable t{{"date", "absolute_range", "relative_range"}, {}};
    for (const auto& d : r.days) t.rows.push_back({format_date(d.date), d.absolute_range, d.relative_range});
    return t;
}

struct CityBoxStats {
    std::string city;
    BoxStats stats;
};

inline PlotTable to_table(std::span<const CityBoxStats> per_city) {
    PlotTable t{{"city", "q1", "median", "q3", "mean", "whisker_low", "whisker_high", "n"}, {}};
    for (const auto& c : per_city) {
        const auto& b = c.stats;
        t.rows.push_back({c.city, b.q1, b.median, b.q3, b.mean, b.whisker_low, b.whisker_high,
                          static_cast<long long>(b.n)});
    }
    return t;
}

// CSV numbers use 6 decimals; NDJSON keeps full double precision, one JSON
// object per row with keys in column order.
inline std::string format_table(const PlotTable& table, ExportFormat format) {
    std::string out;
    if (format == ExportFormat::Csv) {
        csv::append_row(out, table.columns);
        for (const auto& row : table.rows) {
            csv::Row cells;
            for (const auto& c : row) {
                if (auto s = std::get_if<std::string>(&c)) cells.push_back(*s);
                else if (auto d = std::get_if<double>(&c)) cells.push_back(csv::format_fixed(*d, 6));
                else cells.push_back(std::to_string(std::get<long long>(c)));
            }
            csv::append_row(out, cells);
        }
        return out;
    }
    for (const auto& row : table.rows) {
        nlohmann::ordered_json obj = nlohmann::ordered_json::object();
        for (std::size_t i = 0; i < row.size() && i < table.columns.size(); ++i)
            std::visit([&](const auto& v) { obj[table.columns[i]] = v; }, row[i]);
        out += obj.dump();
        out.push_back('\n');
    }
    return out;
}

inline void export_plot_data(const PlotTable& table, const std::filesystem::path& path, ExportFormat format) {
    csv::write_file(path, format_table(table, format));
}

// Reads an NDJSON export back; column order comes from the first object.
inline PlotTable parse_ndjson_table(std::string_view text) {
    PlotTable t;
    std::size_t start = 0;
    while (start < text.size()) {
        auto end = text.find('\n', start);
        auto line = text.substr(start, end == std::string_view::npos ? std::string_view::npos : end - start);
        start = end == std::string_view::npos ? text.size() : end + 1;
        if (line.empty()) continue;
        auto obj = nlohmann::ordered_json::parse(line, nullptr, false);
        if (obj.is_discarded() || !obj.is_object()) throw DataError("NDJSON line is not a JSON object");
        if (t.columns.empty())
            for (const auto& [k, v] : obj.items()) t.columns.push_back(k);
        std::vector<Cell> row;
        for (const auto& col : t.columns) {
            if (!obj.contains(col)) throw DataError("NDJSON row missing column '" + col + "'");
            const auto& v = obj[col];
            if (v.is_string()) row.emplace_back(v.get<std::string>());
            else if (v.is_number_integer()) row.emplace_back(v.get<long long>());
            else if (v.is_number()) row.emplace_back(v.get<double>());
            else throw DataError("NDJSON cell for '" + col + "' is not a string or number");
        }
        t.rows.push_back(std::move(row));
    }
    return t;
}

}  // namespace wue
