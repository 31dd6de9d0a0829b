// wue: command-line front end.
//
//   wue fetch     download hourly generation into the raw cache
//   wue build     weather + generation -> per-city hourly WUE dataset
//   wue analyze   timeseries | boxstats | daily-variation
//   wue schedule  water-optimal deferrable load
//   wue glb       per-hour geographical load balancing
//   wue validate  compare a dataset with an external copy
//
// Exit codes: 0 ok, 2 config, 3 data, 4 infeasible, 5 network.

#include <CLI11.hpp>
#include <json.hpp>

#include <cstdlib>
#include <filesystem>
#include <iostream>
#include <map>
#include <optional>
#include <sstream>
#include <string>
#include <thread>
#include <vector>

#include "wue/fetch.hpp"
#include "wue/wue.hpp"

namespace fs = std::filesystem;
using namespace wue;

namespace {

// --- shared helpers ------------------------------------------------------------

UtcHour parse_window_bound(const std::string& s, const char* flag) {
    auto t = parse_timestamp(s);
    if (!t || !is_hour_aligned(*t)) throw ConfigError(std::string(flag) + ": expected a date or hour-aligned UTC time, got '" + s + "'");
    return floor_hour(*t);
}

std::optional<FetchWindow> parse_window(const std::string& start, const std::string& end) {
    if (start.empty() && end.empty()) return std::nullopt;
    if (start.empty() || end.empty()) throw ConfigError("--start and --end must be given together");
    return FetchWindow(parse_window_bound(start, "--start"), parse_window_bound(end, "--end"));
}

CoolingStrategy parse_model(const std::string& s) {
    if (s == "fixed-approach") return CoolingStrategy::FixedApproach;
    if (s == "fixed-cold-water" || s == "fixed-cold") return CoolingStrategy::FixedColdWater;
    throw ConfigError("unknown model '" + s + "'");
}

const std::vector<std::string> kModelNames{"fixed-approach", "fixed-cold-water", "fixed-cold"};

ExportFormat parse_format(const std::string& s) { return s == "ndjson" ? ExportFormat::Ndjson : ExportFormat::Csv; }

std::string extension(ExportFormat f) { return f == ExportFormat::Ndjson ? ".ndjson" : ".csv"; }

// Writes the resolved configuration of the invoked command next to its
// outputs. Credentials and --jobs are not configurable, so they never appear.
void echo_run_config(const CLI::App& root, const fs::path& dir) {
    std::string text = root.config_to_str(true, false);
    // Keep global options and the invoked command path only.
    std::vector<std::string> prefixes;
    for (const CLI::App* a = &root; !a->get_subcommands().empty();) {
        a = a->get_subcommands().front();
        prefixes.push_back((prefixes.empty() ? std::string() : prefixes.back()) + a->get_name() + ".");
    }
    std::istringstream in(text);
    std::string out, line;
    while (std::getline(in, line)) {
        auto eq = line.find('=');
        auto key = line.substr(0, eq);
        auto dot = key.rfind('.');
        bool keep = dot == std::string::npos;
        if (!keep)
            for (const auto& p : prefixes)
                if (key.substr(0, dot + 1) == p) keep = true;
        if (keep && !line.empty()) out += line + "\n";
    }
    csv::write_file(dir / "run_config", out);
}

struct NamedZones {
    std::map<std::string, std::string> by_city;
    std::string fallback = "UTC";

    absl::TimeZone for_city(const std::string& city) const {
        auto it = by_city.find(city);
        return load_time_zone(it == by_city.end() ? fallback : it->second);
    }
};

NamedZones load_zones(const std::string& locations, const std::string& fallback) {
    NamedZones z;
    z.fallback = fallback;
    if (!locations.empty())
        for (const auto& r : csv::read_with_header(locations, {"city", "state", "subregion", "timezone"}))
            if (r.size() == 4) z.by_city[r[0]] = r[3];
    return z;
}

std::vector<WueSeries> load_series(const std::string& path) {
    if (fs::is_directory(path)) return read_dataset(path);
    if (!fs::exists(path)) throw ConfigError("dataset path '" + path + "' does not exist");
    return {read_dataset_file(path)};
}

const WueSeries& pick_city(const std::vector<WueSeries>& all, const std::string& city) {
    if (all.empty()) throw DataError("dataset is empty");
    if (city.empty()) {
        if (all.size() != 1) throw ConfigError("dataset holds several cities; choose one with --city");
        return all.front();
    }
    for (const auto& s : all)
        if (s.location() == city) return s;
    throw ConfigError("city '" + city + "' is not in the dataset");
}

std::string num(double v) { return csv::format_fixed(v, kDatasetDecimals); }

// --- fetch ---------------------------------------------------------------------

struct FetchArgs {
    std::string source = "generation";
    std::string start, end;
    std::string cache = "cache";
    std::string endpoint = "https://api.eia.gov";
    std::string api_key;
    std::vector<std::string> respondents;
    int page_length = 5000;
    int max_attempts = 5;
    int chunk_hours = 168;
    std::string out;
};

int cmd_fetch(const FetchArgs& a, std::size_t jobs, const CLI::App& root) {
    auto window = parse_window(a.start, a.end);
    if (!window) throw ConfigError("fetch needs --start and --end");
    RawCache cache(a.cache);
    FetchOptions o;
    o.endpoint = a.endpoint;
    o.api_key = a.api_key;
    o.respondents = a.respondents;
    std::sort(o.respondents.begin(), o.respondents.end());
    if (!o.respondents.empty()) {
        o.scope.clear();
        for (const auto& r : o.respondents) o.scope += (o.scope.empty() ? "" : "+") + r;
    }
    o.page_length = a.page_length;
    o.max_attempts = a.max_attempts;
    o.chunk = hours{a.chunk_hours};
    o.jobs = jobs;
    o.cache = &cache;

    FetchStats stats;
    auto records = fetch_generation(*window, o, &stats);

    std::cout << "window " << format_utc_hour(window->start()) << " .. " << format_utc_hour(window->end()) << " ("
              << window->hours() << " h)\n"
              << "records " << records.size() << "\n"
              << "pages " << stats.pages << "\n"
              << "requests " << stats.requests << "\n"
              << "retries " << stats.retries << "\n"
              << "cache hits " << stats.cache_hits << "\n"
              << "null values skipped " << stats.null_values << "\n"
              << "duplicates dropped " << stats.duplicates << "\n"
              << "unknown fuel labels " << stats.grid.unknown_fuel_labels << "\n";
    for (const auto& [label, n] : stats.grid.unknown_labels) std::cout << "  " << label << " -> other: " << n << "\n";
    if (stats.requests == 0) std::cout << "cache hit: no network requests\n";

    fs::path out_dir = a.cache;
    if (!a.out.empty()) {
        csv::write_file(a.out, write_generation_csv(records));
        out_dir = fs::absolute(a.out).parent_path();
    }
    echo_run_config(root, out_dir);
    return 0;
}

// --- build ---------------------------------------------------------------------

struct BuildArgs {
    std::string weather;
    std::string generation;
    std::string generation_cache;
    std::string locations;
    std::string mapping;
    std::string intensities;
    std::string start, end;
    double lambda = 1.0;
    std::vector<std::string> lambda_overrides;
    int max_gap = 3;
    bool floor_subhourly = false;
    std::string model = "fixed-approach";
    std::string out = "dataset";
};

nlohmann::ordered_json report_json(const BuildReport& rep, const std::vector<WueSeries>& series,
                                   const std::vector<Rejection>& weather_rejected, const GridDiagnostics& grid,
                                   std::size_t filled) {
    nlohmann::ordered_json j;
    j["window"] = {{"start", format_utc_hour(rep.window->start())}, {"end", format_utc_hour(rep.window->end())},
                   {"hours", rep.window->hours()}};
    j["weather_rows_rejected"] = weather_rejected.size();
    nlohmann::ordered_json rej = nlohmann::ordered_json::array();
    for (std::size_t i = 0; i < weather_rejected.size() && i < 20; ++i)
        rej.push_back({{"row", weather_rejected[i].row}, {"reason", weather_rejected[i].reason}});
    j["weather_rejections_sample"] = rej;
    j["weather_hours_interpolated"] = filled;
    j["generation_negative_clamped"] = grid.negative_clamped;
    j["generation_unknown_fuel_labels"] = grid.unknown_fuel_labels;
    nlohmann::ordered_json locs = nlohmann::ordered_json::array();
    for (std::size_t i = 0; i < rep.locations.size(); ++i) {
        const auto& l = rep.locations[i];
        nlohmann::ordered_json o;
        o["city"] = l.city;
        o["hours"] = l.hours;
        nlohmann::ordered_json gaps = nlohmann::ordered_json::object();
        for (auto r : {GapReason::MissingWeather, GapReason::ModelDomain, GapReason::MissingGeneration,
                       GapReason::ZeroGeneration}) {
            std::size_t n = 0;
            if (auto it = l.direct_gaps.find(r); it != l.direct_gaps.end()) n += it->second;
            if (auto it = l.indirect_gaps.find(r); it != l.indirect_gaps.end()) n += it->second;
            gaps[std::string(to_string(r))] = n;
        }
        o["gaps"] = gaps;
        nlohmann::ordered_json cov = nlohmann::ordered_json::object();
        for (auto f : kAllFields)
            cov[std::string(to_string(f))] = {{"non_gap_hours", series[i].non_gap_count(f)},
                                              {"ratio", series[i].coverage(f)}};
        o["coverage"] = cov;
        locs.push_back(o);
    }
    j["locations"] = locs;
    return j;
}

int cmd_build(const BuildArgs& a, std::size_t jobs, CLI::App& root, CLI::App& sub) {
    auto mapping = SubregionMapping::load(a.mapping);
    auto locations = load_locations(a.locations, mapping);
    BuildConfig cfg;
    cfg.lambda = a.lambda;
    for (const auto& o : a.lambda_overrides) {
        auto eq = o.find('=');
        auto v = eq == std::string::npos ? std::nullopt : csv::parse_double(o.substr(eq + 1));
        if (!v || !(*v > 0.0)) throw ConfigError("--lambda-override expects city=value with value > 0, got '" + o + "'");
        cfg.lambda_overrides[o.substr(0, eq)] = *v;
    }
    cfg.window = parse_window(a.start, a.end);
    cfg.intensities = load_intensity_table(a.intensities.empty() ? std::nullopt
                                                                  : std::optional<fs::path>(a.intensities));
    cfg.jobs = jobs;

    auto weather = parse_weather_csv(csv::read_file(a.weather), {.floor_subhourly = a.floor_subhourly});
    FillReport fill;
    auto filled = interpolate_weather_gaps(weather.rows, a.max_gap, &fill);

    GridDiagnostics grid;
    std::vector<GenerationRecord> gen_records;
    if (!a.generation.empty() == !a.generation_cache.empty())
        throw ConfigError("give exactly one of --generation and --generation-cache");
    if (!a.generation.empty()) {
        auto gen = parse_generation_csv(csv::read_file(a.generation), &grid);
        if (!gen.rejected.empty())
            throw DataError(a.generation + " row " + std::to_string(gen.rejected.front().row) + ": " +
                            gen.rejected.front().reason);
        gen_records = std::move(gen.rows);
    } else {
        if (!cfg.window) throw ConfigError("--generation-cache needs --start and --end");
        RawCache cache(a.generation_cache);
        FetchOptions o;
        o.cache = &cache;
        o.jobs = jobs;
        FetchStats stats;
        gen_records = fetch_generation(*cfg.window, o, &stats);
        grid.merge(stats.grid);
    }
    auto generation = aggregate_to_subregion(gen_records, mapping, &grid);

    BuildReport rep;
    auto series = build_dataset(filled, generation, locations, mapping, cfg, &rep);
    fs::create_directories(a.out);
    write_dataset(series, a.out);
    auto j = report_json(rep, series, weather.rejected, grid, fill.filled.size());
    csv::write_file(fs::path(a.out) / "build_report.json", j.dump(2) + "\n");

    // Materialize the window actually used.
    for (auto [name, t] : {std::pair{"--start", rep.window->start()}, std::pair{"--end", rep.window->end()}}) {
        auto* opt = sub.get_option(name);
        opt->clear();
        opt->add_result(format_utc_hour(t));
    }
    echo_run_config(root, a.out);

    std::cout << "window " << format_utc_hour(rep.window->start()) << " .. " << format_utc_hour(rep.window->end())
              << " (" << rep.window->hours() << " h)\n";
    for (std::size_t i = 0; i < series.size(); ++i)
        std::cout << series[i].location() << ": " << series[i].size() << " rows, coverage approach "
                  << num(series[i].coverage(WueField::DirectFixedApproach)) << ", cold-water "
                  << num(series[i].coverage(WueField::DirectFixedColdWater)) << ", indirect "
                  << num(series[i].coverage(WueField::Indirect)) << "\n";
    if (!weather.rejected.empty()) std::cout << "weather rows rejected: " << weather.rejected.size() << "\n";
    return 0;
}

// --- analyze -------------------------------------------------------------------

struct AnalyzeArgs {
    std::string dataset = "dataset";
    std::string locations;
    std::string timezone = "UTC";
    std::string field = "direct";
    std::string model = "fixed-approach";
    std::string format = "csv";
    std::string out = "analysis";
    int min_hours = 12;
    std::string denominator = "mean";
};

WueField resolve_field(const AnalyzeArgs& a) {
    if (a.field == "indirect") return WueField::Indirect;
    if (a.field == "direct-fixed-approach") return WueField::DirectFixedApproach;
    if (a.field == "direct-fixed-cold-water") return WueField::DirectFixedColdWater;
    return direct_field(parse_model(a.model));
}

int cmd_timeseries(const AnalyzeArgs& a, const CLI::App& root) {
    auto all = load_series(a.dataset);
    auto zones = load_zones(a.locations, a.timezone);
    auto field = resolve_field(a);
    auto fmt = parse_format(a.format);
    for (const auto& s : all) {
        auto r = daily_average(s, field, zones.for_city(s.location()), static_cast<std::size_t>(a.min_hours));
        export_plot_data(to_table(r), fs::path(a.out) / (s.location() + "_daily_average" + extension(fmt)), fmt);
        std::cout << s.location() << ": " << r.days.size() << " days, " << r.omitted.size() << " omitted (< "
                  << a.min_hours << " non-gap hours)\n";
    }
    echo_run_config(root, a.out);
    return 0;
}

int cmd_boxstats(const AnalyzeArgs& a, const CLI::App& root) {
    auto all = load_series(a.dataset);
    auto field = resolve_field(a);
    auto fmt = parse_format(a.format);
    std::vector<CityBoxStats> rows;
    for (const auto& s : all) {
        if (s.non_gap_count(field) == 0) {
            std::cout << s.location() << ": no non-gap values, skipped\n";
            continue;
        }
        rows.push_back({s.location(), box_stats(s, field)});
    }
    export_plot_data(to_table(rows), fs::path(a.out) / ("boxstats" + extension(fmt)), fmt);
    for (const auto& r : rows) std::cout << r.city << ": median " << num(r.stats.median) << " (n=" << r.stats.n << ")\n";
    echo_run_config(root, a.out);
    return 0;
}

int cmd_daily_variation(const AnalyzeArgs& a, const CLI::App& root) {
    auto all = load_series(a.dataset);
    auto zones = load_zones(a.locations, a.timezone);
    auto field = resolve_field(a);
    auto fmt = parse_format(a.format);
    auto denom = a.denominator == "min" ? VariationDenominator::DailyMin : VariationDenominator::DailyMean;
    for (const auto& s : all) {
        auto r = daily_variation(s, field, zones.for_city(s.location()), denom);
        export_plot_data(to_table(r), fs::path(a.out) / (s.location() + "_daily_variation" + extension(fmt)), fmt);
        double max_rel = 0.0;
        for (const auto& d : r.days) max_rel = std::max(max_rel, d.relative_range);
        std::cout << s.location() << ": " << r.days.size() << " complete days, " << r.incomplete.size()
                  << " incomplete, max relative range " << num(max_rel) << "\n";
    }
    echo_run_config(root, a.out);
    return 0;
}

// --- schedule / glb -------------------------------------------------------------

struct FootprintArgs {
    double heat_fraction = 1.0;
    std::string model = "fixed-approach";
    bool no_indirect = false;

    FootprintModel resolve() const {
        FootprintModel m{heat_fraction, parse_model(model), !no_indirect};
        m.validate();
        return m;
    }
};

void add_footprint_flags(CLI::App* sub, FootprintArgs& f) {
    sub->add_option("--heat-fraction", f.heat_fraction, "Share of the load's energy rejected through the cooling tower")
        ->check(CLI::Range(0.0, 1.0));
    sub->add_option("--model", f.model, "Direct WUE model")->check(CLI::IsMember(kModelNames));
    sub->add_flag("--no-indirect", f.no_indirect, "Leave water embedded in electricity out of the intensity");
}

struct ScheduleArgs {
    std::string dataset = "dataset";
    std::string city;
    std::string start, end;
    double energy = 0.0;
    double cap = 0.0;
    FootprintArgs footprint;
    std::string out = "schedule.csv";
};

int cmd_schedule(const ScheduleArgs& a, const CLI::App& root) {
    auto all = load_series(a.dataset);
    const auto& s = pick_city(all, a.city);
    if (s.empty()) throw DataError("series for '" + s.location() + "' is empty");
    auto model = a.footprint.resolve();

    ScheduleProblem p;
    p.energy_required = a.energy;
    p.per_hour_cap = a.cap;
    for (const auto& pt : s.points()) p.intensity.push_back(try_effective_intensity(pt, model));
    auto window = parse_window(a.start, a.end);
    if (window) {
        auto idx = [&](UtcHour t) { return static_cast<long long>((t - s.points().front().timestamp).count()); };
        long long lo = idx(window->start()), hi = idx(window->end());
        if (lo < 0 || hi > static_cast<long long>(s.size()))
            throw ConfigError("schedule window lies outside the series for '" + s.location() + "'");
        p.window_start = static_cast<std::size_t>(lo);
        p.window_end = static_cast<std::size_t>(hi);
    }
    auto sched = schedule_deferrable(p);

    std::string text;
    csv::append_row(text, {"timestamp_utc", "effective_intensity_l_per_kwh", "allocation_kwh", "water_l"});
    for (std::size_t i = 0; i < sched.allocation.size(); ++i) {
        std::size_t t = sched.window_start + i;
        double w = *p.intensity[t];
        csv::append_row(text, {format_utc_hour(s.points()[t].timestamp), num(w), num(sched.allocation[i]),
                               num(sched.allocation[i] * w)});
    }
    csv::write_file(a.out, text);
    echo_run_config(root, fs::absolute(a.out).parent_path());
    std::cout << "city " << s.location() << "\nhours " << sched.allocation.size() << "\nenergy_kwh " << num(a.energy)
              << "\ntotal_water_l " << num(sched.total_water) << "\n";
    return 0;
}

struct GlbArgs {
    std::string sites;
    std::string demand;
    FootprintArgs footprint;
    std::string out = "glb.csv";
};

int cmd_glb(const GlbArgs& a, const CLI::App& root) {
    auto model = a.footprint.resolve();
    auto demand = parse_load_profile(csv::read_file(a.demand), a.demand);
    if (demand.empty()) throw DataError(a.demand + ": no demand rows");
    auto base = fs::path(a.sites).parent_path();
    std::vector<WueSeries> storage;
    std::vector<std::pair<std::string, double>> specs;
    for (const auto& r : csv::read_with_header(a.sites, {"site", "dataset_path", "capacity_kwh"})) {
        if (r.size() != 3) throw ConfigError(a.sites + ": expected 3 columns");
        auto cap = csv::parse_double(r[2]);
        if (!cap || *cap < 0.0) throw ConfigError(a.sites + ": capacity for '" + r[0] + "' must be a number >= 0");
        fs::path p = r[1];
        storage.push_back(read_dataset_file(p.is_absolute() ? p : base / p));
        specs.emplace_back(r[0], *cap);
    }
    std::vector<SiteSeries> sites;
    for (std::size_t i = 0; i < specs.size(); ++i) sites.push_back({specs[i].first, &storage[i], specs[i].second});
    auto problem = make_glb_problem(demand, sites, model);
    if (auto bad = infeasible_hours(problem); !bad.empty()) {
        std::string msg = "demand exceeds total site capacity at";
        for (const auto& h : bad)
            msg += " hour " + std::to_string(h.hour) + " (" + format_utc_hour(demand[h.hour].first) + ", short " +
                   num(h.shortfall) + " kWh);";
        msg.pop_back();
        throw InfeasibleError(msg);
    }
    auto sol = balance_geographic(problem);

    std::string text;
    csv::append_row(text, {"timestamp_utc", "site", "effective_intensity_l_per_kwh", "allocation_kwh", "water_l"});
    for (std::size_t t = 0; t < demand.size(); ++t)
        for (std::size_t s = 0; s < problem.sites.size(); ++s) {
            const auto& w = problem.sites[s].intensity[t];
            double alloc = sol.allocation[t][s];
            csv::append_row(text, {format_utc_hour(demand[t].first), problem.sites[s].id, w ? num(*w) : std::string(),
                                   num(alloc), num(w ? alloc * *w : 0.0)});
        }
    csv::write_file(a.out, text);
    echo_run_config(root, fs::absolute(a.out).parent_path());
    std::cout << "hours " << demand.size() << "\nsites " << problem.sites.size() << "\ntotal_water_l "
              << num(sol.total_water) << "\n";
    return 0;
}

// --- validate ------------------------------------------------------------------

struct ValidateArgs {
    std::string dataset = "dataset";
    std::string reference;
    std::string columns;
    std::string city;
    double tolerance = 0.01;
    std::string out;
};

int cmd_validate(const ValidateArgs& a, const CLI::App& root) {
    auto all = load_series(a.dataset);
    auto cols = a.columns.empty() ? ReferenceColumns{} : ReferenceColumns::load(a.columns);
    auto ref = csv::read_file(a.reference);
    nlohmann::ordered_json j = nlohmann::ordered_json::array();
    std::size_t compared = 0;
    for (const auto& s : all) {
        if (!a.city.empty() && s.location() != a.city) continue;
        ++compared;
        auto rep = validate_against_published(s, ref, a.tolerance, cols);
        nlohmann::ordered_json o;
        o["city"] = rep.location;
        o["overlap_hours"] = rep.overlap_hours;
        std::cout << rep.location << ": " << rep.overlap_hours << " overlapping hours\n";
        for (std::size_t f = 0; f < 3; ++f) {
            const auto& fd = rep.fields[f];
            std::string name(to_string(kAllFields[f]));
            o[name] = {{"compared", fd.compared},
                       {"mean_abs_diff", fd.mean_abs_diff},
                       {"max_abs_diff", fd.max_abs_diff},
                       {"exceeding_tolerance", fd.exceeding}};
            std::cout << "  " << name << ": compared " << fd.compared << ", MAD " << num(fd.mean_abs_diff) << ", max "
                      << num(fd.max_abs_diff) << ", > tolerance " << fd.exceeding << "\n";
        }
        j.push_back(o);
    }
    if (compared == 0) throw ConfigError("no dataset series selected for validation");
    if (!a.out.empty()) {
        csv::write_file(a.out, j.dump(2) + "\n");
        echo_run_config(root, fs::absolute(a.out).parent_path());
    }
    return 0;
}

}  // namespace

int main(int argc, char** argv) {
    CLI::App app{"Hourly water usage effectiveness (WUE) datasets, analyses and water-aware load placement", "wue"};
    app.option_defaults()->always_capture_default();
    app.require_subcommand(1);
    app.set_config("--config", "", "Read options from a TOML/INI file (sections per command, e.g. [build])");
    std::size_t jobs = std::max(1u, std::thread::hardware_concurrency());
    app.add_option("--jobs,-j", jobs, "Worker threads; affects speed only, never output bytes")
        ->check(CLI::PositiveNumber)
        ->configurable(false);

    // fetch
    FetchArgs fa;
    auto* fetch = app.add_subcommand("fetch", "Download hourly generation by fuel into the raw cache");
    fetch->add_option("--source", fa.source, "Data source")->check(CLI::IsMember({"generation"}));
    fetch->add_option("--start", fa.start, "Window start, UTC (YYYY-MM-DD or YYYY-MM-DDTHH:00:00Z)")->required();
    fetch->add_option("--end", fa.end, "Window end, exclusive")->required();
    fetch->add_option("--cache", fa.cache, "Cache root directory");
    fetch->add_option("--endpoint", fa.endpoint, "API base URL");
    fetch->add_option("--api-key", fa.api_key, "API credential (prefer the WUE_API_KEY variable)")
        ->envname("WUE_API_KEY")
        ->configurable(false);
    fetch->add_option("--respondent", fa.respondents, "Restrict to these balancing authorities (repeatable)");
    fetch->add_option("--page-length", fa.page_length, "Rows per API page")->check(CLI::PositiveNumber);
    fetch->add_option("--max-attempts", fa.max_attempts, "Attempts per request")->check(CLI::Range(1, 20));
    fetch->add_option("--chunk-hours", fa.chunk_hours, "Hours per fetched window chunk")->check(CLI::PositiveNumber);
    fetch->add_option("--out", fa.out, "Also write the normalized records as CSV");

    // build
    BuildArgs ba;
    auto* build = app.add_subcommand("build", "Build the per-city hourly WUE dataset");
    build->add_option("--weather", ba.weather, "Weather CSV")->required()->check(CLI::ExistingFile);
    build->add_option("--generation", ba.generation, "Generation CSV")->check(CLI::ExistingFile);
    build->add_option("--generation-cache", ba.generation_cache, "Read generation from a fetch cache instead");
    build->add_option("--locations", ba.locations, "Locations CSV")->required()->check(CLI::ExistingFile);
    build->add_option("--mapping", ba.mapping, "Balancing authority to subregion CSV")->required()->check(CLI::ExistingFile);
    build->add_option("--intensities", ba.intensities, "Water intensity table CSV (default: built-in)");
    build->add_option("--start", ba.start, "Window start (default: common window of the inputs)");
    build->add_option("--end", ba.end, "Window end, exclusive");
    build->add_option("--lambda", ba.lambda, "Cooling tower efficiency multiplier")->check(CLI::PositiveNumber);
    build->add_option("--lambda-override", ba.lambda_overrides, "Per-city multiplier, city=value (repeatable)");
    build->add_option("--max-gap", ba.max_gap, "Longest weather gap (hours) filled by interpolation")
        ->check(CLI::NonNegativeNumber);
    build->add_flag("--floor-subhourly", ba.floor_subhourly, "Average sub-hourly weather readings into their hour");
    build->add_option("--model", ba.model, "Default direct model for downstream analysis (both are always written)")
        ->check(CLI::IsMember(kModelNames));
    build->add_option("--out", ba.out, "Output directory");

    // analyze
    AnalyzeArgs aa;
    auto* analyze = app.add_subcommand("analyze", "Daily averages, box statistics and daily variation");
    analyze->require_subcommand(1);
    auto analysis_flags = [&](CLI::App* sub) {
        sub->add_option("--dataset", aa.dataset, "Dataset directory or single city CSV");
        sub->add_option("--locations", aa.locations, "Locations CSV supplying each city's time zone");
        sub->add_option("--timezone", aa.timezone, "Time zone for cities not in --locations");
        sub->add_option("--field", aa.field, "WUE field; 'direct' follows --model")
            ->check(CLI::IsMember({"direct", "indirect", "direct-fixed-approach", "direct-fixed-cold-water"}));
        sub->add_option("--model", aa.model, "Direct model used when --field is 'direct'")
            ->check(CLI::IsMember(kModelNames));
        sub->add_option("--format", aa.format, "Export format")->check(CLI::IsMember({"csv", "ndjson"}));
        sub->add_option("--out", aa.out, "Output directory");
    };
    auto* timeseries = analyze->add_subcommand("timeseries", "Daily average WUE per city");
    analysis_flags(timeseries);
    timeseries->add_option("--min-hours", aa.min_hours, "Fewest non-gap hours for a day to count")
        ->check(CLI::Range(1, 25));
    auto* boxstats = analyze->add_subcommand("boxstats", "Quartiles and 1.5 IQR whiskers per city");
    analysis_flags(boxstats);
    auto* variation = analyze->add_subcommand("daily-variation", "Daily max - min WUE per city");
    analysis_flags(variation);
    variation->add_option("--denominator", aa.denominator, "Relative range denominator")
        ->check(CLI::IsMember({"mean", "min"}));

    // schedule
    ScheduleArgs sa;
    auto* schedule = app.add_subcommand("schedule", "Water-optimal schedule for a deferrable load");
    schedule->add_option("--dataset", sa.dataset, "Dataset directory or single city CSV");
    schedule->add_option("--city", sa.city, "City to schedule in");
    schedule->add_option("--start", sa.start, "Window start (default: series start)");
    schedule->add_option("--end", sa.end, "Window end, exclusive");
    schedule->add_option("--energy", sa.energy, "Energy to deliver, kWh")->required()->check(CLI::NonNegativeNumber);
    schedule->add_option("--cap", sa.cap, "Largest energy per hour, kWh")->required()->check(CLI::PositiveNumber);
    add_footprint_flags(schedule, sa.footprint);
    schedule->add_option("--out", sa.out, "Schedule CSV");

    // glb
    GlbArgs ga;
    auto* glb = app.add_subcommand("glb", "Per-hour geographical load balancing across sites");
    glb->add_option("--sites", ga.sites, "Sites CSV: site,dataset_path,capacity_kwh")->required()->check(CLI::ExistingFile);
    glb->add_option("--demand", ga.demand, "Demand CSV: timestamp_utc,kwh")->required()->check(CLI::ExistingFile);
    add_footprint_flags(glb, ga.footprint);
    glb->add_option("--out", ga.out, "Allocation CSV");

    // validate
    ValidateArgs va;
    auto* validate = app.add_subcommand("validate", "Compare a dataset with an external copy");
    validate->add_option("--dataset", va.dataset, "Dataset directory or single city CSV");
    validate->add_option("--reference", va.reference, "Reference CSV")->required()->check(CLI::ExistingFile);
    validate->add_option("--columns", va.columns, "Column mapping CSV: field,column");
    validate->add_option("--city", va.city, "Only this city");
    validate->add_option("--tolerance", va.tolerance, "Absolute difference counted as exceeding, L/kWh")
        ->check(CLI::NonNegativeNumber);
    validate->add_option("--out", va.out, "Write the report as JSON");

    try {
        app.parse(argc, argv);
    } catch (const CLI::ParseError& e) {
        int rc = app.exit(e);
        return rc == 0 ? 0 : static_cast<int>(ErrorKind::Config);
    }

    try {
        if (*fetch) return cmd_fetch(fa, jobs, app);
        if (*build) return cmd_build(ba, jobs, app, *build);
        if (*timeseries) return cmd_timeseries(aa, app);
        if (*boxstats) return cmd_boxstats(aa, app);
        if (*variation) return cmd_daily_variation(aa, app);
        if (*schedule) return cmd_schedule(sa, app);
        if (*glb) return cmd_glb(ga, app);
        if (*validate) return cmd_validate(va, app);
    } catch (const wue::Error& e) {
        std::cerr << "wue: " << e.category() << ": " << e.what() << "\n";
        return e.exit_code();
    } catch (const std::exception& e) {
        std::cerr << "wue: internal error: " << e.what() << "\n";
        return 1;
    }
    return 0;
}
