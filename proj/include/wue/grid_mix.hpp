#pragma once

// Indirect (electricity-embedded) WUE: per-fuel water intensities, the
// generation-weighted mix, and balancing-authority to subregion aggregation.

#include <algorithm>
#include <array>
#include <cctype>
#include <filesystem>
#include <map>
#include <numeric>
#include <optional>
#include <set>
#include <span>
#include <string>
#include <string_view>
#include <vector>

#include "wue/csv.hpp"
#include "wue/error.hpp"
#include "wue/time.hpp"
#include "wue/wue_core.hpp"

namespace wue {

enum class EnergySource { Coal, Hydro, NaturalGas, Nuclear, Other, Petroleum, Solar, Wind };

inline constexpr std::size_t kSourceCount = 8;
inline constexpr std::array<EnergySource, kSourceCount> kAllSources{
    EnergySource::Coal,  EnergySource::Hydro,     EnergySource::NaturalGas, EnergySource::Nuclear,
    EnergySource::Other, EnergySource::Petroleum, EnergySource::Solar,      EnergySource::Wind};

inline constexpr std::size_t index_of(EnergySource s) { return static_cast<std::size_t>(s); }

inline std::string_view to_string(EnergySource s) {
    static constexpr std::array<std::string_view, kSourceCount> names{
        "coal", "hydro", "natural_gas", "nuclear", "other", "petroleum", "solar", "wind"};
    return names[index_of(s)];
}

inline std::optional<EnergySource> parse_source_name(std::string_view name) {
    for (auto s : kAllSources)
        if (to_string(s) == name) return s;
    return std::nullopt;
}

struct GridDiagnostics {
    std::size_t negative_clamped = 0;
    std::size_t unknown_fuel_labels = 0;
    std::map<std::string, std::size_t> unknown_labels;

    void merge(const GridDiagnostics& o) {
        negative_clamped += o.negative_clamped;
        unknown_fuel_labels += o.unknown_fuel_labels;
        for (const auto& [k, v] : o.unknown_labels) unknown_labels[k] += v;
    }
};

// Fuel labels seen in hourly generation feeds (API fuel codes and spelled-out
// names, case-insensitive). Anything else is counted and filed under Other.
inline std::optional<EnergySource> lookup_fuel_alias(std::string_view label) {
    std::string key;
    for (char c : label)
        if (c != ' ' && c != '_' && c != '-') key.push_back(static_cast<char>(std::tolower(static_cast<unsigned char>(c))));

    static const std::map<std::string, EnergySource, std::less<>> aliases{
        {"col", EnergySource::Coal},         {"coal", EnergySource::Coal},
        {"wat", EnergySource::Hydro},        {"hydro", EnergySource::Hydro},
        {"ng", EnergySource::NaturalGas},    {"naturalgas", EnergySource::NaturalGas},
        {"gas", EnergySource::NaturalGas},   {"nuc", EnergySource::Nuclear},
        {"nuclear", EnergySource::Nuclear},  {"oth", EnergySource::Other},
        {"other", EnergySource::Other},      {"oil", EnergySource::Petroleum},
        {"petroleum", EnergySource::Petroleum}, {"sun", EnergySource::Solar},
        {"solar", EnergySource::Solar},      {"wnd", EnergySource::Wind},
        {"wind", EnergySource::Wind},
    };
    auto it = aliases.find(key);
    if (it == aliases.end()) return std::nullopt;
    return it->second;
}

inline EnergySource normalize_fuel_label(std::string_view label, GridDiagnostics* diag = nullptr) {
    if (auto s = lookup_fuel_alias(label)) return *s;
    if (diag) {
        ++diag->unknown_fuel_labels;
        ++diag->unknown_labels[std::string(label)];
    }
    return EnergySource::Other;
}

class WaterIntensityTable {
public:
    // U.S. average consumption per kWh generated, L/kWh.
    static WaterIntensityTable defaults() {
        WaterIntensityTable t;
        t.values_ = {1.817, 22.675, 0.795, 2.309, 0.757, 1.363, 0.000, 0.000};
        return t;
    }

    double at(EnergySource s) const { return values_[index_of(s)]; }

    void set(EnergySource s, double liters_per_kwh) {
        if (!(liters_per_kwh >= 0.0) || !std::isfinite(liters_per_kwh))
            throw ConfigError("water intensity for " + std::string(to_string(s)) + " must be finite and >= 0");
        values_[index_of(s)] = liters_per_kwh;
    }

    const std::array<double, kSourceCount>& values() const noexcept { return values_; }

private:
    std::array<double, kSourceCount> values_{};
};

// Absent path means the built-in defaults. A file must list all eight sources
// exactly once under the header `source,intensity_l_per_kwh`.
inline WaterIntensityTable load_intensity_table(const std::optional<std::filesystem::path>& path) {
    auto table = WaterIntensityTable::defaults();
    if (!path) return table;

    auto rows = csv::read_with_header(*path, {"source", "intensity_l_per_kwh"});
    std::set<EnergySource> seen;
    for (std::size_t i = 0; i < rows.size(); ++i) {
        const auto& row = rows[i];
        std::string where = path->string() + " row " + std::to_string(i + 2);
        if (row.size() != 2) throw ConfigError(where + ": expected 2 columns");
        auto src = parse_source_name(row[0]);
        if (!src) throw ConfigError(where + ": unknown source '" + row[0] + "'");
        if (!seen.insert(*src).second) throw ConfigError(where + ": duplicate source '" + row[0] + "'");
        auto v = csv::parse_double(row[1]);
        if (!v) throw ConfigError(where + ": intensity is not a number");
        if (*v < 0.0) throw ConfigError(where + ": negative intensity for " + row[0]);
        table.set(*src, *v);
    }
    for (auto s : kAllSources)
        if (!seen.count(s)) throw ConfigError(path->string() + ": missing row for source '" + std::string(to_string(s)) + "'");
    return table;
}

using SourceMix = std::array<double, kSourceCount>;  // MWh per source

inline double total_generation(const SourceMix& mix) { return std::accumulate(mix.begin(), mix.end(), 0.0); }

// Generation-weighted water intensity for one (subregion, hour). Returns
// nullopt when nothing was generated, which callers must treat as a gap
// rather than a zero reading.
inline std::optional<WueValue> indirect_wue(const SourceMix& mix, const WaterIntensityTable& table) {
    double water = 0.0;
    double energy = 0.0;
    for (auto s : kAllSources) {
        double e = mix[index_of(s)];
        if (e <= 0.0) continue;
        water += e * table.at(s);
        energy += e;
    }
    if (energy <= 0.0) return std::nullopt;
    return WueValue(water / energy);
}

struct GenerationRecord {
    UtcHour timestamp;
    std::string balancing_authority;
    EnergySource source;
    double mwh;

    friend bool operator==(const GenerationRecord&, const GenerationRecord&) = default;
};

inline bool record_order(const GenerationRecord& a, const GenerationRecord& b) {
    if (a.timestamp != b.timestamp) return a.timestamp < b.timestamp;
    if (a.balancing_authority != b.balancing_authority) return a.balancing_authority < b.balancing_authority;
    return a.source < b.source;
}

class SubregionMapping {
public:
    SubregionMapping() = default;
    explicit SubregionMapping(std::map<std::string, std::string> entries) : entries_(std::move(entries)) {
        for (const auto& [ba, sub] : entries_) {
            if (ba.empty() || sub.empty()) throw ConfigError("subregion mapping has an empty identifier");
            subregions_.insert(sub);
        }
    }

    static SubregionMapping load(const std::filesystem::path& path) {
        auto rows = csv::read_with_header(path, {"balancing_authority", "subregion"});
        std::map<std::string, std::string> entries;
        for (std::size_t i = 0; i < rows.size(); ++i) {
            const auto& row = rows[i];
            std::string where = path.string() + " row " + std::to_string(i + 2);
            if (row.size() != 2) throw ConfigError(where + ": expected 2 columns");
            if (!entries.emplace(row[0], row[1]).second)
                throw ConfigError(where + ": balancing authority '" + row[0] + "' listed twice");
        }
        return SubregionMapping(std::move(entries));
    }

    const std::string* find(std::string_view ba) const {
        auto it = entries_.find(std::string(ba));
        return it == entries_.end() ? nullptr : &it->second;
    }

    const std::map<std::string, std::string>& entries() const noexcept { return entries_; }
    const std::set<std::string>& subregions() const noexcept { return subregions_; }
    bool has_subregion(const std::string& s) const { return subregions_.count(s) > 0; }

private:
    std::map<std::string, std::string> entries_;
    std::set<std::string> subregions_;
};

struct SubregionHour {
    std::string subregion;
    UtcHour hour;

    auto operator<=>(const SubregionHour&) const = default;
};

using SubregionGeneration = std::map<SubregionHour, SourceMix>;

// Sums balancing-authority generation into subregions. Negative records
// (storage charging, pumping) are clamped to zero and counted. Throws
// ConfigError naming every unmapped balancing authority.
inline SubregionGeneration aggregate_to_subregion(std::span<const GenerationRecord> records,
                                                  const SubregionMapping& mapping,
                                                  GridDiagnostics* diag = nullptr) {
    std::set<std::string> unmapped;
    for (const auto& r : records)
        if (!mapping.find(r.balancing_authority)) unmapped.insert(r.balancing_authority);
    if (!unmapped.empty()) {
        std::string list;
        for (const auto& ba : unmapped) list += (list.empty() ? "" : ", ") + ba;
        throw ConfigError("unmapped balancing authority: " + list);
    }

    SubregionGeneration out;
    for (const auto& r : records) {
        double e = r.mwh;
        if (e < 0.0) {
            e = 0.0;
            if (diag) ++diag->negative_clamped;
        }
        auto& mix = out.try_emplace(SubregionHour{*mapping.find(r.balancing_authority), r.timestamp}).first->second;
        mix[index_of(r.source)] += e;
    }
    return out;
}

// Merges partial aggregates (e.g. built from separate chunks of the stream).
inline void merge_generation(SubregionGeneration& into, const SubregionGeneration& part) {
    for (const auto& [key, mix] : part) {
        auto& dst = into.try_emplace(key).first->second;
        for (std::size_t i = 0; i < kSourceCount; ++i) dst[i] += mix[i];
    }
}

}  // namespace wue
