#include <gtest/gtest.h>

#include <filesystem>
#include <random>

#include "wue/grid_mix.hpp"
#include "wue/time.hpp"

using namespace wue;
namespace fs = std::filesystem;

namespace {

SourceMix mix(std::initializer_list<std::pair<EnergySource, double>> entries) {
    SourceMix m{};
    for (auto [s, e] : entries) m[index_of(s)] += e;
    return m;
}

const auto kTable = WaterIntensityTable::defaults();

fs::path temp_file(const std::string& name, const std::string& content) {
    auto p = fs::temp_directory_path() / ("wue_grid_" + name);
    csv::write_file(p, content);
    return p;
}

}  // namespace

TEST(IndirectWue, SingleSourceReturnsItsIntensity) {
    auto v = indirect_wue(mix({{EnergySource::Coal, 100}}), kTable);
    ASSERT_TRUE(v);
    EXPECT_NEAR(v->value(), 1.817, 1e-12);
}

TEST(IndirectWue, WeightedMix) {
    // (50*1.817 + 50*0) / 100 and (10*22.675 + 90*0.795) / 100
    EXPECT_NEAR(indirect_wue(mix({{EnergySource::Coal, 50}, {EnergySource::Solar, 50}}), kTable)->value(), 0.9085, 1e-9);
    EXPECT_NEAR(indirect_wue(mix({{EnergySource::Hydro, 10}, {EnergySource::NaturalGas, 90}}), kTable)->value(), 2.983,
                1e-9);
}

TEST(IndirectWue, ZeroGenerationIsGapNotZero) {
    EXPECT_FALSE(indirect_wue(SourceMix{}, kTable));
    EXPECT_FALSE(indirect_wue(mix({{EnergySource::Coal, 0}, {EnergySource::Wind, 0}}), kTable));
    auto renewables = indirect_wue(mix({{EnergySource::Solar, 3}, {EnergySource::Wind, 4}}), kTable);
    ASSERT_TRUE(renewables);
    EXPECT_EQ(renewables->value(), 0.0);
}

TEST(IndirectWue, ConvexBoundAndScaleInvariance) {
    std::mt19937_64 rng(42);
    std::uniform_real_distribution<double> e(0.0, 1000.0), scale(1e-3, 1e3);
    std::bernoulli_distribution present(0.6);
    for (int i = 0; i < 10000; ++i) {
        SourceMix m{};
        double lo = 1e9, hi = -1e9;
        for (auto s : kAllSources)
            if (present(rng)) {
                m[index_of(s)] = e(rng);
                if (m[index_of(s)] > 0) {
                    lo = std::min(lo, kTable.at(s));
                    hi = std::max(hi, kTable.at(s));
                }
            }
        auto v = indirect_wue(m, kTable);
        if (total_generation(m) <= 0) {
            EXPECT_FALSE(v);
            continue;
        }
        ASSERT_TRUE(v);
        EXPECT_GE(v->value(), lo - 1e-12);
        EXPECT_LE(v->value(), hi + 1e-12);
        double c = scale(rng);
        SourceMix scaled = m;
        for (auto& x : scaled) x *= c;
        EXPECT_NEAR(indirect_wue(scaled, kTable)->value(), v->value(), 1e-12 * std::max(1.0, v->value()));
    }
}

TEST(FuelAliases, KnownAndUnknownLabels) {
    GridDiagnostics d;
    EXPECT_EQ(normalize_fuel_label("NG", &d), EnergySource::NaturalGas);
    EXPECT_EQ(normalize_fuel_label("col", &d), EnergySource::Coal);
    EXPECT_EQ(normalize_fuel_label("Natural Gas", &d), EnergySource::NaturalGas);
    EXPECT_EQ(normalize_fuel_label("WAT", &d), EnergySource::Hydro);
    EXPECT_EQ(normalize_fuel_label("SUN", &d), EnergySource::Solar);
    EXPECT_EQ(normalize_fuel_label("natural_gas", &d), EnergySource::NaturalGas);
    EXPECT_EQ(d.unknown_fuel_labels, 0u);
    EXPECT_EQ(normalize_fuel_label("BAT", &d), EnergySource::Other);
    EXPECT_EQ(d.unknown_fuel_labels, 1u);
    EXPECT_EQ(d.unknown_labels["BAT"], 1u);
}

TEST(IntensityTable, DefaultsAndFileOverride) {
    auto t = load_intensity_table(std::nullopt);
    EXPECT_EQ(t.at(EnergySource::Coal), 1.817);
    EXPECT_EQ(t.at(EnergySource::Hydro), 22.675);
    EXPECT_EQ(t.at(EnergySource::NaturalGas), 0.795);
    EXPECT_EQ(t.at(EnergySource::Nuclear), 2.309);
    EXPECT_EQ(t.at(EnergySource::Other), 0.757);
    EXPECT_EQ(t.at(EnergySource::Petroleum), 1.363);
    EXPECT_EQ(t.at(EnergySource::Solar), 0.0);
    EXPECT_EQ(t.at(EnergySource::Wind), 0.0);

    auto path = temp_file("hydro.csv",
                          "source,intensity_l_per_kwh\ncoal,1.817\nhydro,5.0\nnatural_gas,0.795\nnuclear,2.309\n"
                          "other,0.757\npetroleum,1.363\nsolar,0\nwind,0\n");
    auto o = load_intensity_table(path);
    EXPECT_EQ(o.at(EnergySource::Hydro), 5.0);
    for (auto s : kAllSources)
        if (s != EnergySource::Hydro) {
            EXPECT_EQ(o.at(s), t.at(s));
        }
}

TEST(IntensityTable, ValidationErrors) {
    auto negative = temp_file("neg.csv",
                              "source,intensity_l_per_kwh\ncoal,-1\nhydro,5.0\nnatural_gas,0.795\nnuclear,2.309\n"
                              "other,0.757\npetroleum,1.363\nsolar,0\nwind,0\n");
    EXPECT_THROW(load_intensity_table(negative), ConfigError);
    auto missing = temp_file("missing.csv", "source,intensity_l_per_kwh\ncoal,1.0\n");
    EXPECT_THROW(load_intensity_table(missing), ConfigError);
    auto bad_header = temp_file("hdr.csv", "fuel,value\ncoal,1.0\n");
    EXPECT_THROW(load_intensity_table(bad_header), ConfigError);
}

TEST(Aggregation, SumsWithinSubregion) {
    SubregionMapping m({{"A", "S"}, {"B", "S"}, {"C", "T"}});
    auto t = parse_utc_hour("2023-07-01T14:00:00Z");
    std::vector<GenerationRecord> recs{{t, "A", EnergySource::Coal, 10}, {t, "B", EnergySource::Coal, 20},
                                       {t, "C", EnergySource::Wind, 5}};
    auto agg = aggregate_to_subregion(recs, m);
    ASSERT_EQ(agg.size(), 2u);
    EXPECT_EQ((agg.at({"S", t})[index_of(EnergySource::Coal)]), 30.0);
    EXPECT_EQ((agg.at({"T", t})[index_of(EnergySource::Wind)]), 5.0);
}

TEST(Aggregation, NegativeClampedAndCounted) {
    SubregionMapping m(std::map<std::string, std::string>{{"A", "S"}});
    auto t = parse_utc_hour("2023-07-01T14:00:00Z");
    std::vector<GenerationRecord> recs{{t, "A", EnergySource::Hydro, -5}, {t, "A", EnergySource::Coal, 7}};
    GridDiagnostics d;
    auto agg = aggregate_to_subregion(recs, m, &d);
    EXPECT_EQ(d.negative_clamped, 1u);
    EXPECT_EQ((agg.at({"S", t})[index_of(EnergySource::Hydro)]), 0.0);
    EXPECT_EQ(total_generation(agg.at({"S", t})), 7.0);
}

TEST(Aggregation, EmptyAndUnmapped) {
    SubregionMapping m(std::map<std::string, std::string>{{"A", "S"}});
    EXPECT_TRUE(aggregate_to_subregion({}, m).empty());
    auto t = parse_utc_hour("2023-07-01T14:00:00Z");
    std::vector<GenerationRecord> recs{{t, "ZZZ", EnergySource::Coal, 1}, {t, "YYY", EnergySource::Coal, 1}};
    try {
        aggregate_to_subregion(recs, m);
        FAIL();
    } catch (const ConfigError& e) {
        EXPECT_NE(std::string(e.what()).find("YYY, ZZZ"), std::string::npos) << e.what();
    }
}

TEST(Aggregation, ConservationAndPartitionIndependence) {
    SubregionMapping m({{"A", "S"}, {"B", "S"}, {"C", "T"}});
    std::mt19937_64 rng(5);
    std::uniform_int_distribution<int> mwh(-20, 200), hour(0, 23), ba(0, 2), src(0, 7);
    const char* bas[] = {"A", "B", "C"};
    auto t0 = parse_utc_hour("2023-01-01T00:00:00Z");
    std::vector<GenerationRecord> recs;
    for (int i = 0; i < 2000; ++i)
        recs.push_back({t0 + hours{hour(rng)}, bas[ba(rng)], kAllSources[static_cast<std::size_t>(src(rng))],
                        static_cast<double>(mwh(rng))});

    auto whole = aggregate_to_subregion(recs, m);
    // Per hour: total out equals clamped total in.
    std::map<UtcHour, double> in, out;
    for (const auto& r : recs) in[r.timestamp] += std::max(0.0, r.mwh);
    for (const auto& [k, mx] : whole) out[k.hour] += total_generation(mx);
    EXPECT_EQ(in, out);

    SubregionGeneration parts;
    std::span<const GenerationRecord> all(recs);
    merge_generation(parts, aggregate_to_subregion(all.subspan(1200), m));
    merge_generation(parts, aggregate_to_subregion(all.first(1200), m));
    EXPECT_EQ(parts, whole);
}

TEST(SubregionMappingFile, LoadsAndRejectsDuplicates) {
    auto ok = temp_file("map.csv", "balancing_authority,subregion\nERCO,ERCT\nAZPS,AZNM\n");
    auto m = SubregionMapping::load(ok);
    EXPECT_EQ(*m.find("ERCO"), "ERCT");
    EXPECT_EQ(m.subregions().size(), 2u);
    auto dup = temp_file("dup.csv", "balancing_authority,subregion\nERCO,ERCT\nERCO,AZNM\n");
    EXPECT_THROW(SubregionMapping::load(dup), ConfigError);
}

TEST(SubregionMappingFile, ShippedConfigLoads) {
    auto m = SubregionMapping::load(fs::path(WUE_DATA_DIR) / "config" / "egrid_mapping.csv");
    EXPECT_GT(m.entries().size(), 50u);
    EXPECT_EQ(*m.find("CISO"), "CAMX");
    auto t = load_intensity_table(fs::path(WUE_DATA_DIR) / "config" / "water_intensity.csv");
    EXPECT_EQ(t.values(), WaterIntensityTable::defaults().values());
}
