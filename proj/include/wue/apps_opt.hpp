#pragma once

// Water-aware load placement over WUE series: deferrable-load scheduling,
// building footprint evaluation and per-hour geographical load balancing.
// Loads are divisible, so filling the cheapest hours/sites first is optimal.

#include <algorithm>
#include <cmath>
#include <filesystem>
#include <numeric>
#include <optional>
#include <span>
#include <string>
#include <utility>
#include <vector>

#include "wue/csv.hpp"
#include "wue/dataset.hpp"
#include "wue/error.hpp"
#include "wue/time.hpp"
#include "wue/wue_core.hpp"

namespace wue {

// Combined per-kWh water footprint of a load: the share of its energy
// rejected through the cooling tower times direct WUE, plus (optionally) the
// water embedded in the electricity itself. Direct values are taken from the
// dataset as built, so any efficiency multiplier is already applied there.
struct FootprintModel {
    double heat_fraction = 1.0;
    CoolingStrategy strategy = CoolingStrategy::FixedApproach;
    bool include_indirect = true;

    void validate() const {
        if (!(heat_fraction >= 0.0 && heat_fraction <= 1.0))
            throw ConfigError("heat_fraction must lie in [0, 1]");
    }
};

inline std::optional<double> try_effective_intensity(const WuePoint& p, const FootprintModel& m) {
    double total = 0.0;
    if (m.heat_fraction > 0.0) {
        const auto& d = p.value(direct_field(m.strategy));
        if (!d) return std::nullopt;
        total += m.heat_fraction * *d;
    }
    if (m.include_indirect) {
        if (!p.indirect) return std::nullopt;
        total += *p.indirect;
    }
    return total;
}

// L/kWh. Throws DataError when a field the model needs is a gap.
inline double effective_intensity(const WuePoint& p, const FootprintModel& m) {
    m.validate();
    auto v = try_effective_intensity(p, m);
    if (!v)
        throw DataError("gap in a required WUE field at " + format_utc_hour(p.timestamp) + " for '" + p.location + "'");
    return *v;
}

// --- deferrable load ---------------------------------------------------------

struct ScheduleProblem {
    std::vector<std::optional<double>> intensity;  // L/kWh per hour
    double energy_required = 0.0;                  // kWh
    double per_hour_cap = 0.0;                     // kWh
    std::size_t window_start = 0;
    std::size_t window_end = 0;  // exclusive; 0 means intensity.size()

    std::size_t end() const { return window_end == 0 ? intensity.size() : window_end; }
};

struct Schedule {
    std::size_t window_start = 0;
    std::vector<double> allocation;  // kWh per window hour
    double total_water = 0.0;        // liters
};

inline void validate(const ScheduleProblem& p) {
    const std::size_t end = p.end();
    if (p.window_start >= end || end > p.intensity.size())
        throw ConfigError("schedule window [" + std::to_string(p.window_start) + ", " + std::to_string(end) +
                          ") is empty or exceeds the series");
    if (!(p.per_hour_cap > 0.0) || !std::isfinite(p.per_hour_cap)) throw ConfigError("per-hour cap must be > 0");
    if (!(p.energy_required >= 0.0) || !std::isfinite(p.energy_required))
        throw ConfigError("energy requirement must be >= 0");
    for (std::size_t t = p.window_start; t < end; ++t) {
        if (!p.intensity[t]) throw DataError("gap at hour " + std::to_string(t) + " inside the schedule window");
        if (!(*p.intensity[t] >= 0.0)) throw DataError("negative intensity at hour " + std::to_string(t));
    }
    double capacity = p.per_hour_cap * static_cast<double>(end - p.window_start);
    if (p.energy_required > capacity)
        throw InfeasibleError("need " + std::to_string(p.energy_required) + " kWh but the window holds at most " +
                              std::to_string(capacity) + " kWh");
}

// Fills window hours in ascending intensity (earlier hour first on ties) up
// to the cap until the requirement is met.
inline Schedule schedule_deferrable(const ScheduleProblem& p) {
    validate(p);
    const std::size_t end = p.end();
    const std::size_t n = end - p.window_start;
    std::vector<std::size_t> order(n);
    std::iota(order.begin(), order.end(), std::size_t{0});
    std::stable_sort(order.begin(), order.end(), [&](std::size_t a, std::size_t b) {
        return *p.intensity[p.window_start + a] < *p.intensity[p.window_start + b];
    });

    Schedule s{p.window_start, std::vector<double>(n, 0.0), 0.0};
    double remaining = p.energy_required;
    for (std::size_t i : order) {
        if (remaining <= 0.0) break;
        double take = std::min(p.per_hour_cap, remaining);
        s.allocation[i] = take;
        remaining -= take;
    }
    for (std::size_t i = 0; i < n; ++i) s.total_water += s.allocation[i] * *p.intensity[p.window_start + i];
    return s;
}

// --- building load -------------------------------------------------------------

using LoadProfile = std::vector<std::pair<UtcHour, double>>;  // (hour, kWh)

inline LoadProfile parse_load_profile(std::string_view content, const std::string& source_name = "load profile") {
    auto rows = csv::parse(content);
    const csv::Row header{"timestamp_utc", "kwh"};
    if (rows.empty() || rows.front() != header)
        throw ConfigError(source_name + ": expected header 'timestamp_utc,kwh'");
    LoadProfile out;
    for (std::size_t i = 1; i < rows.size(); ++i) {
        const auto& r = rows[i];
        std::string where = source_name + " row " + std::to_string(i + 1);
        if (r.size() != 2) throw DataError(where + ": expected 2 columns");
        auto ts = parse_timestamp(r[0]);
        if (!ts || !is_hour_aligned(*ts)) throw DataError(where + ": bad timestamp '" + r[0] + "'");
        auto kwh = csv::parse_double(r[1]);
        if (!kwh || *kwh < 0.0) throw DataError(where + ": kwh must be a number >= 0");
        if (!out.empty() && !(out.back().first < floor_hour(*ts)))
            throw DataError(where + ": timestamps must be strictly increasing");
        out.emplace_back(floor_hour(*ts), *kwh);
    }
    return out;
}

struct BuildingFootprint {
    std::vector<double> per_hour;  // liters, aligned with the load profile
    double total = 0.0;
};

// Sum over hours of load times effective intensity. Zero-load hours may be
// gaps; loaded hours may not.
inline BuildingFootprint evaluate_building_load(const LoadProfile& load, const WueSeries& series,
                                                const FootprintModel& model) {
    model.validate();
    BuildingFootprint out;
    out.per_hour.reserve(load.size());
    for (const auto& [t, kwh] : load) {
        const WuePoint* p = series.find(t);
        if (!p) throw DataError("load hour " + format_utc_hour(t) + " is not covered by the series for '" +
                                series.location() + "'");
        double liters = 0.0;
        if (kwh > 0.0) liters = kwh * effective_intensity(*p, model);
        out.per_hour.push_back(liters);
        out.total += liters;
    }
    return out;
}

// --- geographical load balancing ------------------------------------------------

struct Site {
    std::string id;
    std::vector<std::optional<double>> intensity;  // L/kWh per hour
    std::vector<double> capacity;                  // kWh per hour
};

struct GlbProblem {
    std::vector<Site> sites;
    std::vector<double> demand;  // kWh per hour
};

struct HourShortfall {
    std::size_t hour;
    double shortfall;  // kWh beyond total site capacity
};

struct GlbSolution {
    std::vector<std::vector<double>> allocation;  // [hour][site], site order as in the problem
    std::vector<double> hourly_water;             // liters
    double total_water = 0.0;
};

inline std::vector<HourShortfall> infeasible_hours(const GlbProblem& p) {
    std::vector<HourShortfall> out;
    for (std::size_t t = 0; t < p.demand.size(); ++t) {
        double cap = 0.0;
        for (const auto& s : p.sites) cap += s.capacity[t];
        if (p.demand[t] > cap) out.push_back({t, p.demand[t] - cap});
    }
    return out;
}

inline void validate(const GlbProblem& p) {
    const std::size_t hours = p.demand.size();
    for (const auto& s : p.sites) {
        if (s.intensity.size() != hours || s.capacity.size() != hours)
            throw DataError("site '" + s.id + "' series length does not match the demand profile");
        for (std::size_t t = 0; t < hours; ++t) {
            if (!(s.capacity[t] >= 0.0)) throw DataError("site '" + s.id + "' has negative capacity");
            if (s.capacity[t] > 0.0 && !s.intensity[t])
                throw DataError("site '" + s.id + "' has a gap at hour " + std::to_string(t));
        }
    }
    for (double d : p.demand)
        if (!(d >= 0.0) || !std::isfinite(d)) throw DataError("demand must be finite and >= 0");
    if (auto bad = infeasible_hours(p); !bad.empty()) {
        std::string msg = "demand exceeds site capacity at";
        for (const auto& h : bad) msg += " hour " + std::to_string(h.hour) + " (short " + std::to_string(h.shortfall) + " kWh);";
        msg.pop_back();
        throw InfeasibleError(msg);
    }
}

// Each hour independently: fill sites in ascending intensity (smaller site id
// first on ties) up to capacity.
inline GlbSolution balance_geographic(const GlbProblem& p) {
    validate(p);
    const std::size_t hours = p.demand.size();
    const std::size_t n = p.sites.size();
    GlbSolution sol{std::vector<std::vector<double>>(hours, std::vector<double>(n, 0.0)),
                    std::vector<double>(hours, 0.0), 0.0};
    std::vector<std::size_t> order(n);
    for (std::size_t t = 0; t < hours; ++t) {
        std::iota(order.begin(), order.end(), std::size_t{0});
        std::sort(order.begin(), order.end(), [&](std::size_t a, std::size_t b) {
            double ia = p.sites[a].capacity[t] > 0.0 ? *p.sites[a].intensity[t] : 0.0;
            double ib = p.sites[b].capacity[t] > 0.0 ? *p.sites[b].intensity[t] : 0.0;
            if (ia != ib) return ia < ib;
            return p.sites[a].id < p.sites[b].id;
        });
        double remaining = p.demand[t];
        for (std::size_t s : order) {
            if (remaining <= 0.0) break;
            double take = std::min(p.sites[s].capacity[t], remaining);
            if (take <= 0.0) continue;
            sol.allocation[t][s] = take;
            remaining -= take;
        }
        for (std::size_t s = 0; s < n; ++s)
            if (sol.allocation[t][s] > 0.0) sol.hourly_water[t] += sol.allocation[t][s] * *p.sites[s].intensity[t];
        sol.total_water += sol.hourly_water[t];
    }
    return sol;
}

struct SiteSeries {
    std::string id;
    const WueSeries* series;
    double capacity_kwh;
};

// Aligns site datasets on the demand profile's hours. Hours a site's series
// does not cover, or where a needed field is a gap, become intensity gaps.
inline GlbProblem make_glb_problem(const LoadProfile& demand, std::span<const SiteSeries> sites,
                                   const FootprintModel& model) {
    model.validate();
    GlbProblem p;
    for (const auto& [t, kwh] : demand) p.demand.push_back(kwh);
    for (const auto& s : sites) {
        if (!(s.capacity_kwh >= 0.0)) throw ConfigError("site '" + s.id + "' capacity must be >= 0");
        Site site{s.id, {}, std::vector<double>(demand.size(), s.capacity_kwh)};
        for (const auto& [t, kwh] : demand) {
            const WuePoint* pt = s.series->find(t);
            site.intensity.push_back(pt ? try_effective_intensity(*pt, model) : std::nullopt);
        }
        p.sites.push_back(std::move(site));
    }
    return p;
}

}  // namespace wue
