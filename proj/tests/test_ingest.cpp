#include <gtest/gtest.h>

#include <filesystem>
#include <cmath>
#include <mutex>
#include <random>
#include <thread>

#include "wue/cache.hpp"
#include "wue/dataset.hpp"
#include "wue/fetch.hpp"
#include "wue/ingest.hpp"
#include "support/replay.hpp"

using namespace wue;
using wue::testing::Replay;
using wue::testing::page_json;
namespace fs = std::filesystem;

namespace {

fs::path fresh_dir(const std::string& name) {
    auto p = fs::temp_directory_path() / ("wue_ingest_" + name);
    fs::remove_all(p);
    fs::create_directories(p);
    return p;
}

const std::string kWeatherHeader = "timestamp_utc,city,air_temp_c,relative_humidity_pct\n";

}  // namespace

TEST(WeatherCsv, ParsesValidRows) {
    auto r = parse_weather_csv(kWeatherHeader + "2023-07-01T14:00:00Z,austin,35.2,40\n2023-07-01 15:00,austin,36,38.5\n");
    ASSERT_EQ(r.rows.size(), 2u);
    EXPECT_TRUE(r.rejected.empty());
    EXPECT_EQ(r.rows[0].timestamp, parse_utc_hour("2023-07-01T14:00:00Z"));
    EXPECT_EQ(r.rows[0].city, "austin");
    EXPECT_EQ(r.rows[0].air_temp_c, 35.2);
    EXPECT_EQ(r.rows[1].relative_humidity, 38.5);
}

TEST(WeatherCsv, RejectsBadRowsWithReasons) {
    auto r = parse_weather_csv(kWeatherHeader +
                               "2023-07-01T14:30:00Z,austin,35,40\n"
                               "garbage,austin,35,40\n"
                               "2023-07-01T14:00:00Z,austin,abc,40\n"
                               "2023-07-01T14:00:00Z,austin,35,140\n"
                               "2023-07-01T14:00:00Z,austin,75,40\n"
                               "2023-07-01T14:00:00Z,,35,40\n"
                               "2023-07-01T14:00:00Z,austin,35\n"
                               "2023-07-01T15:00:00Z,austin,35,40\n");
    ASSERT_EQ(r.rows.size(), 1u);
    std::vector<Rejection> expected{{2, "not hour-aligned"},
                                    {3, "malformed timestamp"},
                                    {4, "air_temp not a number"},
                                    {5, "relative_humidity out of range"},
                                    {6, "air_temp out of range"},
                                    {7, "empty city"},
                                    {8, "expected 4 columns"}};
    EXPECT_EQ(r.rejected, expected);
}

TEST(WeatherCsv, SubhourlyReadingsAveragedWhenEnabled) {
    auto text = kWeatherHeader + "2023-07-01T14:00:00Z,austin,30,40\n2023-07-01T14:30:00Z,austin,32,50\n";
    auto r = parse_weather_csv(text, {.floor_subhourly = true});
    ASSERT_EQ(r.rows.size(), 2u);
    auto h = hourly_weather(r.rows);
    ASSERT_EQ(h.size(), 1u);
    EXPECT_EQ(h[0].air_temp_c, 31.0);
    EXPECT_EQ(h[0].relative_humidity, 45.0);
}

TEST(WeatherCsv, WrongHeaderIsFatalAndRoundTrip) {
    EXPECT_THROW(parse_weather_csv("time,city,t,rh\n"), DataError);
    auto r = parse_weather_csv(kWeatherHeader + "2023-07-01T14:00:00Z,\"san antonio\",35.25,40.5\n");
    auto again = parse_weather_csv(write_weather_csv(r.rows));
    EXPECT_EQ(again.rows, r.rows);
}

TEST(GenerationCsv, NormalizesFuelLabels) {
    GridDiagnostics d;
    auto r = parse_generation_csv(
        "timestamp_utc,balancing_authority,fuel,mwh\n"
        "2023-07-01T14:00:00Z,ERCO,NG,100\n"
        "2023-07-01T14:00:00Z,ERCO,BAT,-3\n"
        "2023-07-01T14:00:00Z,ERCO,NG,x\n",
        &d);
    ASSERT_EQ(r.rows.size(), 2u);
    EXPECT_EQ(r.rows[0].source, EnergySource::NaturalGas);
    EXPECT_EQ(r.rows[1].source, EnergySource::Other);
    EXPECT_EQ(r.rows[1].mwh, -3.0);
    EXPECT_EQ(d.unknown_fuel_labels, 1u);
    ASSERT_EQ(r.rejected.size(), 1u);
    EXPECT_EQ(r.rejected[0].reason, "mwh not a number");
}

TEST(GenerationCsv, FixtureLabelsAllKnown) {
    for (const char* name : {"week", "year"}) {
        GridDiagnostics d;
        auto r = parse_generation_csv(csv::read_file(fs::path(WUE_DATA_DIR) / "fixtures" / name / "generation.csv"), &d);
        EXPECT_TRUE(r.rejected.empty()) << name;
        EXPECT_FALSE(r.rows.empty()) << name;
        EXPECT_EQ(d.unknown_fuel_labels, 0u) << name;
    }
}

TEST(Parsing, FuzzedInputsTerminate) {
    std::mt19937_64 rng(20240611);
    const std::string alphabet = "0123456789-:TZ.,\"\r\n eE+naifx";
    const std::string weather_ok = kWeatherHeader + "2023-07-01T14:00:00Z,austin,35.2,41\n";
    const std::string gen_ok = "timestamp_utc,balancing_authority,fuel,mwh\n2023-07-01T14:00:00Z,ERCO,NG,100\n";
    auto mutate = [&](std::string s) {
        std::uniform_int_distribution<int> ops(1, 12);
        for (int k = ops(rng); k > 0; --k) {
            std::size_t pos = std::uniform_int_distribution<std::size_t>(0, s.size())(rng);
            char c = (rng() % 4 == 0) ? static_cast<char>(rng() & 0xff) : alphabet[rng() % alphabet.size()];
            switch (rng() % 3) {
            case 0: s.insert(s.begin() + static_cast<std::ptrdiff_t>(pos), c); break;
            case 1: if (pos < s.size()) s.erase(pos, 1); break;
            default: if (pos < s.size()) s[pos] = c;
            }
        }
        return s;
    };
    std::size_t parsed = 0;
    for (int i = 0; i < 4000; ++i) {
        std::string bytes;
        if (i % 4 == 0) {
            bytes.resize(rng() % 300);
            for (auto& c : bytes) c = static_cast<char>(rng() & 0xff);
        } else {
            // Keep the header intact most of the time so row handling is exercised.
            bool weather = i % 2;
            const std::string& base = weather ? weather_ok : gen_ok;
            auto nl = base.find('\n') + 1;
            bytes = base.substr(0, nl) + mutate(base.substr(nl) + base.substr(nl) + base.substr(nl));
        }
        EXPECT_NO_THROW(csv::parse(bytes));
        for (int which = 0; which < 2; ++which) {
            try {
                std::size_t rows = 0, rejected = 0;
                if (which == 0) {
                    auto r = parse_weather_csv(bytes, {.floor_subhourly = (i % 3 == 0)});
                    rows = r.rows.size();
                    rejected = r.rejected.size();
                    for (const auto& o : r.rows) {
                        EXPECT_TRUE(std::isfinite(o.air_temp_c));
                        EXPECT_TRUE(o.relative_humidity >= 0.0 && o.relative_humidity <= 100.0);
                    }
                } else {
                    auto r = parse_generation_csv(bytes);
                    rows = r.rows.size();
                    rejected = r.rejected.size();
                    for (const auto& g : r.rows) EXPECT_TRUE(std::isfinite(g.mwh));
                }
                EXPECT_LE(rows + rejected, csv::parse(bytes).size());
                ++parsed;
            } catch (const DataError&) {
                // wrong header: the one fatal case
            }
        }
    }
    EXPECT_GT(parsed, 2000u);
}

TEST(Locations, LoadsFixtureAndRejectsUnknownSubregion) {
    auto mapping = SubregionMapping::load(fs::path(WUE_DATA_DIR) / "fixtures" / "mapping.csv");
    auto locs = load_locations(fs::path(WUE_DATA_DIR) / "fixtures" / "locations.csv", mapping);
    ASSERT_EQ(locs.size(), 3u);
    EXPECT_EQ(locs[2].city, "phoenix");
    EXPECT_EQ(locs[2].subregion, "AZNM");
    EXPECT_EQ(locs[2].timezone, "America/Phoenix");

    auto dir = fresh_dir("loc");
    csv::write_file(dir / "l.csv", "city,state,subregion,timezone\nx,TX,NOPE,UTC\n");
    EXPECT_THROW(load_locations(dir / "l.csv", mapping), ConfigError);
    csv::write_file(dir / "d.csv", "city,state,subregion,timezone\nx,TX,ERCT,UTC\nx,TX,ERCT,UTC\n");
    EXPECT_THROW(load_locations(dir / "d.csv", mapping), ConfigError);
}

TEST(Window, SplitCoversExactly) {
    FetchWindow w(parse_utc_hour("2023-01-01T00:00:00Z"), parse_utc_hour("2023-01-08T00:00:00Z"));
    EXPECT_EQ(w.hours(), 168);
    auto parts = w.split(hours{50});
    ASSERT_EQ(parts.size(), 4u);
    EXPECT_EQ(parts.front().start(), w.start());
    EXPECT_EQ(parts.back().end(), w.end());
    EXPECT_EQ(parts.back().hours(), 18);
    for (std::size_t i = 1; i < parts.size(); ++i) EXPECT_EQ(parts[i - 1].end(), parts[i].start());
    EXPECT_THROW(FetchWindow(w.end(), w.start()), ConfigError);
}

TEST(Cache, PutGetAndCorruption) {
    auto dir = fresh_dir("cache");
    RawCache cache(dir);
    FetchWindow w(parse_utc_hour("2023-01-01T00:00:00Z"), parse_utc_hour("2023-01-02T00:00:00Z"));
    CacheKey key{"generation", "all.o0", w};
    EXPECT_FALSE(cache.get(key));
    cache.put(key, "payload bytes");
    EXPECT_EQ(cache.get(key), "payload bytes");
    EXPECT_EQ(cache.payload_path(key), dir / "generation" / "all.o0" / "2023-01-01T00_2023-01-02T00.raw");

    // Truncation is detected, treated as a miss, and the entry is dropped.
    csv::write_file(cache.payload_path(key), "payload");
    EXPECT_FALSE(cache.get(key));
    EXPECT_FALSE(fs::exists(cache.payload_path(key)));
    cache.put(key, "payload bytes");
    EXPECT_EQ(cache.get(key), "payload bytes");
}

TEST(Cache, Sha256KnownVector) {
    EXPECT_EQ(sha256_hex("abc"), "ba7816bf8f01cfea414140de5dae2223b00361a396177a9cb410ff61f20015ad");
}

// --- API client against a local replay server ------------------------------------

namespace {

FetchOptions options(const Replay& r) {
    FetchOptions o;
    o.endpoint = r.endpoint();
    o.api_key = "test-key";
    o.backoff_base = std::chrono::milliseconds(1);
    o.backoff_cap = std::chrono::milliseconds(4);
    o.timeout = std::chrono::seconds(5);
    o.jobs = 1;
    return o;
}

const FetchWindow kDay(parse_utc_hour("2023-01-01T00:00:00Z"), parse_utc_hour("2023-01-02T00:00:00Z"));

}  // namespace

TEST(Fetch, RetriesAfterRateLimit) {
    Replay r([](int n, const httplib::Request&, httplib::Response& res) {
        if (n == 1) {
            res.status = 429;
            return;
        }
        res.set_content(page_json({{"2023-01-01T05", "ERCO", "NG", "100"}}, 1), "application/json");
    });
    FetchStats stats;
    auto recs = fetch_generation(kDay, options(r), &stats);
    ASSERT_EQ(recs.size(), 1u);
    EXPECT_EQ(stats.requests, 2u);
    EXPECT_EQ(stats.retries, 1u);
    EXPECT_EQ(recs[0].mwh, 100.0);
}

TEST(Fetch, UnauthorizedIsAuthError) {
    Replay r([](int, const httplib::Request&, httplib::Response& res) { res.status = 401; });
    try {
        fetch_generation(kDay, options(r));
        FAIL();
    } catch (const AuthError& e) {
        EXPECT_EQ(e.exit_code(), 2);
        EXPECT_EQ(e.category(), "auth error");
    }
    EXPECT_EQ(r.calls, 1);
}

TEST(Fetch, PersistentServerErrorIsNetworkError) {
    Replay r([](int, const httplib::Request&, httplib::Response& res) { res.status = 503; });
    auto o = options(r);
    o.max_attempts = 3;
    EXPECT_THROW(fetch_generation(kDay, o), NetworkError);
    EXPECT_EQ(r.calls, 3);
}

TEST(Fetch, UnknownFuelAndNullsAndSchemaDrift) {
    Replay r([](int, const httplib::Request&, httplib::Response& res) {
        res.set_content(page_json({{"2023-01-01T05", "ERCO", "BAT", "7"}, {"2023-01-01T05", "ERCO", "NG", "null"}}, 2),
                        "application/json");
    });
    FetchStats stats;
    auto recs = fetch_generation(kDay, options(r), &stats);
    ASSERT_EQ(recs.size(), 1u);
    EXPECT_EQ(recs[0].source, EnergySource::Other);
    EXPECT_EQ(stats.grid.unknown_fuel_labels, 1u);
    EXPECT_EQ(stats.null_values, 1u);

    FetchStats s2;
    EXPECT_THROW(parse_generation_page(R"({"response":{"rows":[]}})", kDay, s2), DataError);
    EXPECT_THROW(parse_generation_page(R"({"response":{"data":[{"period":"2023-01-01T05"}]}})", kDay, s2), DataError);
    EXPECT_THROW(parse_generation_page("not json", kDay, s2), DataError);
}

TEST(Fetch, PaginatesUntilTotal) {
    Replay r([](int, const httplib::Request& req, httplib::Response& res) {
        int offset = std::stoi(req.get_param_value("offset"));
        std::vector<std::tuple<std::string, std::string, std::string, std::string>> rows;
        for (int i = offset; i < std::min(offset + 2, 5); ++i)
            rows.emplace_back("2023-01-01T" + std::string(i < 10 ? "0" : "") + std::to_string(i), "ERCO", "NG",
                              std::to_string(i));
        res.set_content(page_json(rows, 5), "application/json");
    });
    auto o = options(r);
    o.page_length = 2;
    FetchStats stats;
    auto recs = fetch_generation(kDay, o, &stats);
    EXPECT_EQ(recs.size(), 5u);
    EXPECT_EQ(stats.pages, 3u);
    EXPECT_EQ(r.calls, 3);
    EXPECT_EQ(r.seen.front().find("api_key")->second, "test-key");
    EXPECT_EQ(r.seen.front().find("start")->second, "2023-01-01T00");
    EXPECT_EQ(r.seen.front().find("end")->second, "2023-01-01T23");
}

TEST(Fetch, CachedWindowMakesNoRequests) {
    Replay r([](int, const httplib::Request& req, httplib::Response& res) {
        auto start = req.get_param_value("start");
        res.set_content(page_json({{start, "ERCO", "NG", "1"}, {start, "ERCO", "COL", "2"}}, 2), "application/json");
    });
    auto dir = fresh_dir("fetchcache");
    RawCache cache(dir);
    auto o = options(r);
    o.cache = &cache;
    o.chunk = hours{24};
    o.jobs = 3;
    FetchWindow week(parse_utc_hour("2023-01-01T00:00:00Z"), parse_utc_hour("2023-01-08T00:00:00Z"));

    FetchStats first;
    auto a = fetch_generation(week, o, &first);
    EXPECT_EQ(first.requests, 7u);
    EXPECT_EQ(a.size(), 14u);

    FetchStats second;
    auto b = fetch_generation(week, o, &second);
    EXPECT_EQ(second.requests, 0u);
    EXPECT_EQ(second.cache_hits, 7u);
    EXPECT_EQ(r.calls, 7);
    EXPECT_EQ(a.size(), b.size());
    for (std::size_t i = 0; i < a.size(); ++i) {
        EXPECT_EQ(a[i].timestamp, b[i].timestamp);
        EXPECT_EQ(a[i].source, b[i].source);
        EXPECT_EQ(a[i].mwh, b[i].mwh);
    }

    // A truncated entry is a miss: that one chunk is fetched again.
    CacheKey key{"generation", "all.o0", week.split(hours{24})[3]};
    auto path = cache.payload_path(key);
    auto bytes = csv::read_file(path);
    csv::write_file(path, bytes.substr(0, bytes.size() / 2));
    FetchStats third;
    fetch_generation(week, o, &third);
    EXPECT_EQ(third.requests, 1u);
    EXPECT_EQ(third.cache_hits, 6u);
}

TEST(Fetch, RepeatedRunsYieldIdenticalRecords) {
    Replay r([](int n, const httplib::Request& req, httplib::Response& res) {
        auto start = req.get_param_value("start");
        // Alternate the row order so only the client's normalization makes runs agree.
        std::vector<std::tuple<std::string, std::string, std::string, std::string>> rows{
            {start, "ERCO", "NG", "1.5"}, {start, "SRP", "SUN", "2"}, {start, "ERCO", "WND", "3"}};
        if (n % 2) std::reverse(rows.begin(), rows.end());
        res.set_content(page_json(rows, 3), "application/json");
    });
    auto o = options(r);
    o.chunk = hours{12};
    FetchWindow span(parse_utc_hour("2023-01-01T00:00:00Z"), parse_utc_hour("2023-01-04T00:00:00Z"));
    auto a = fetch_generation(span, o);
    o.jobs = 4;
    auto b = fetch_generation(span, o);
    EXPECT_EQ(a.size(), 18u);
    EXPECT_EQ(write_generation_csv(a), write_generation_csv(b));
}

TEST(Fetch, OfflineWithoutCacheIsConfigError) {
    FetchOptions o;
    EXPECT_THROW(fetch_generation(kDay, o), ConfigError);
    o.endpoint = "http://127.0.0.1:1";
    EXPECT_THROW(fetch_generation(kDay, o), AuthError);
}
