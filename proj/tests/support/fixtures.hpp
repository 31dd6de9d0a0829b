#pragma once

#include <filesystem>
#include <string>
#include <vector>

#include "wue/dataset.hpp"
#include "wue/ingest.hpp"

namespace wue::testing {

struct Fixture {
    std::vector<WeatherObservation> weather;  // after gap interpolation
    SubregionGeneration generation;
    SubregionMapping mapping;
    std::vector<LocationConfig> locations;
};

inline std::filesystem::path fixture_dir() { return std::filesystem::path(WUE_DATA_DIR) / "fixtures"; }

// name: "week" or "year"
inline Fixture load_fixture(const std::string& name, int max_gap = 3) {
    auto dir = fixture_dir();
    Fixture f{{}, {}, SubregionMapping::load(dir / "mapping.csv"), {}};
    auto loc_file = std::filesystem::exists(dir / name / "locations.csv") ? dir / name / "locations.csv"
                                                                          : dir / "locations.csv";
    f.locations = load_locations(loc_file, f.mapping);
    auto weather = parse_weather_csv(csv::read_file(dir / name / "weather.csv"));
    f.weather = interpolate_weather_gaps(weather.rows, max_gap);
    auto gen = parse_generation_csv(csv::read_file(dir / name / "generation.csv"));
    f.generation = aggregate_to_subregion(gen.rows, f.mapping);
    return f;
}

inline std::vector<WueSeries> build(const Fixture& f, const BuildConfig& cfg = {}, BuildReport* report = nullptr) {
    return build_dataset(f.weather, f.generation, f.locations, f.mapping, cfg, report);
}

}  // namespace wue::testing
