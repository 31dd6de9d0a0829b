#pragma once

// Client for the hourly generation-by-fuel JSON API.
//
// Responses look like
//   {"response": {"total": "1234", "data": [
//       {"period": "2023-01-01T05", "respondent": "ERCO", "fueltype": "NG", "value": "123"}, ...]}}
// and are paged with offset/length query parameters. Each page is cached
// verbatim under partition "<scope>.o<offset>" of its window chunk, so a
// repeated fetch of a cached window issues no requests at all.

#ifndef CPPHTTPLIB_OPENSSL_SUPPORT
#define CPPHTTPLIB_OPENSSL_SUPPORT
#endif
#include <httplib.h>
#include <json.hpp>

#include <algorithm>
#include <atomic>
#include <chrono>
#include <exception>
#include <mutex>
#include <optional>
#include <string>
#include <thread>
#include <vector>

#include "wue/cache.hpp"
#include "wue/error.hpp"
#include "wue/grid_mix.hpp"
#include "wue/ingest.hpp"
#include "wue/time.hpp"

namespace wue {

struct FetchOptions {
    std::string endpoint;  // scheme://host[:port]
    std::string path = "/v2/electricity/rto/fuel-type-data/data/";
    std::string api_key;
    std::string scope = "all";             // cache partition prefix
    std::vector<std::string> respondents;  // optional balancing-authority filter
    int page_length = 5000;
    int max_attempts = 5;
    std::chrono::milliseconds backoff_base{500};
    std::chrono::milliseconds backoff_cap{8000};
    std::chrono::seconds timeout{60};
    std::chrono::hours chunk{24 * 7};
    std::size_t jobs = 4;
    const RawCache* cache = nullptr;
};

struct FetchStats {
    std::size_t requests = 0;
    std::size_t retries = 0;
    std::size_t cache_hits = 0;
    std::size_t pages = 0;
    std::size_t null_values = 0;
    std::size_t duplicates = 0;
    GridDiagnostics grid;

    void merge(const FetchStats& o) {
        requests += o.requests;
        retries += o.retries;
        cache_hits += o.cache_hits;
        pages += o.pages;
        null_values += o.null_values;
        duplicates += o.duplicates;
        grid.merge(o.grid);
    }
};

struct GenerationPage {
    std::vector<GenerationRecord> records;
    std::vector<std::string> labels;  // raw fuel label of each record
    std::size_t rows = 0;             // rows in the payload, including skipped ones
    std::optional<long long> total;   // rows available server-side, when reported
};

namespace detail {

inline std::optional<double> json_number(const nlohmann::json& v) {
    if (v.is_number()) return v.get<double>();
    if (v.is_string()) return csv::parse_double(v.get<std::string>());
    return std::nullopt;
}

}  // namespace detail

// Throws DataError on schema drift (missing envelope or required fields).
inline GenerationPage parse_generation_page(std::string_view body, const FetchWindow& window, FetchStats& stats) {
    nlohmann::json doc = nlohmann::json::parse(body, nullptr, /*allow_exceptions=*/false);
    if (doc.is_discarded()) throw DataError("generation API: response is not valid JSON");
    if (doc.contains("error")) throw DataError("generation API error: " + doc["error"].dump());
    if (!doc.contains("response") || !doc["response"].is_object())
        throw DataError("generation API schema drift: missing 'response' object");
    const auto& resp = doc["response"];
    if (!resp.contains("data") || !resp["data"].is_array())
        throw DataError("generation API schema drift: missing 'response.data' array");

    GenerationPage page;
    if (resp.contains("total"))
        if (auto t = detail::json_number(resp["total"])) page.total = static_cast<long long>(*t);

    for (const auto& row : resp["data"]) {
        ++page.rows;
        for (const char* field : {"period", "respondent", "fueltype", "value"})
            if (!row.is_object() || !row.contains(field))
                throw DataError(std::string("generation API schema drift: record without '") + field + "'");
        if (!row["period"].is_string() || !row["respondent"].is_string() || !row["fueltype"].is_string())
            throw DataError("generation API schema drift: period/respondent/fueltype must be strings");

        auto ts = parse_timestamp(row["period"].get<std::string>());
        if (!ts || !is_hour_aligned(*ts))
            throw DataError("generation API: bad period '" + row["period"].get<std::string>() + "'");
        auto value = detail::json_number(row["value"]);
        if (!value) {
            ++stats.null_values;
            continue;
        }
        UtcHour hour = floor_hour(*ts);
        if (!window.contains(hour)) continue;
        const auto& label = row["fueltype"].get<std::string>();
        page.records.push_back(
            {hour, row["respondent"].get<std::string>(), normalize_fuel_label(label, &stats.grid), *value});
        page.labels.push_back(label);
    }
    return page;
}

namespace detail {

inline std::string http_get_with_retry(httplib::Client& client, const FetchOptions& opts,
                                       const httplib::Params& params, FetchStats& stats) {
    std::string last_problem;
    for (int attempt = 1; attempt <= opts.max_attempts; ++attempt) {
        if (attempt > 1) {
            ++stats.retries;
            auto delay = opts.backoff_base * (1LL << std::min(attempt - 2, 20));
            std::this_thread::sleep_for(std::min<std::chrono::milliseconds>(delay, opts.backoff_cap));
        }
        ++stats.requests;
        auto res = client.Get(opts.path, params, httplib::Headers{});
        if (!res) {
            last_problem = "transport failure: " + httplib::to_string(res.error());
            continue;
        }
        if (res->status == 200) return res->body;
        if (res->status == 401 || res->status == 403)
            throw AuthError("generation API rejected the credential (HTTP " + std::to_string(res->status) + ")");
        if (res->status == 429 || res->status >= 500) {
            last_problem = "HTTP " + std::to_string(res->status);
            continue;
        }
        throw DataError("generation API returned HTTP " + std::to_string(res->status));
    }
    throw NetworkError("generation API unavailable after " + std::to_string(opts.max_attempts) +
                       " attempts (" + last_problem + ")");
}

struct LabeledRecord {
    GenerationRecord record;
    std::string label;
};

inline std::vector<LabeledRecord> fetch_chunk(const FetchWindow& chunk, const FetchOptions& opts,
                                              FetchStats& stats) {
    std::optional<httplib::Client> client;
    std::vector<LabeledRecord> out;
    for (long long offset = 0;; offset += opts.page_length) {
        CacheKey key{"generation", opts.scope + ".o" + std::to_string(offset), chunk};
        std::optional<std::string> body;
        if (opts.cache) body = opts.cache->get(key);
        const bool from_cache = body.has_value();
        if (from_cache) {
            ++stats.cache_hits;
        } else {
            if (opts.endpoint.empty()) throw ConfigError("no endpoint configured and window not cached");
            if (opts.api_key.empty()) throw AuthError("missing API credential");
            if (!client) {
                client.emplace(opts.endpoint);
                client->set_connection_timeout(opts.timeout);
                client->set_read_timeout(opts.timeout);
                if (!client->is_valid()) throw ConfigError("invalid endpoint '" + opts.endpoint + "'");
            }
            httplib::Params params{
                {"api_key", opts.api_key},
                {"frequency", "hourly"},
                {"data[0]", "value"},
                {"start", format_compact_hour(chunk.start())},
                {"end", format_compact_hour(chunk.end() - hours{1})},
                {"sort[0][column]", "period"},
                {"sort[0][direction]", "asc"},
                {"offset", std::to_string(offset)},
                {"length", std::to_string(opts.page_length)},
            };
            for (const auto& r : opts.respondents) params.emplace("facets[respondent][]", r);
            body = http_get_with_retry(*client, opts, params, stats);
        }

        auto page = parse_generation_page(*body, chunk, stats);
        if (opts.cache && !from_cache) opts.cache->put(key, *body);
        ++stats.pages;
        for (std::size_t i = 0; i < page.records.size(); ++i) out.push_back({page.records[i], page.labels[i]});

        bool more = page.total ? offset + static_cast<long long>(page.rows) < *page.total
                               : static_cast<long long>(page.rows) == opts.page_length;
        if (!more || page.rows == 0) break;
    }
    return out;
}

}  // namespace detail

// Fetches all generation records in `window`, chunked and fetched by up to
// `opts.jobs` workers. The result is sorted by (timestamp, BA, fuel) and
// de-duplicated, so it does not depend on arrival order.
inline std::vector<GenerationRecord> fetch_generation(const FetchWindow& window, const FetchOptions& opts,
                                                      FetchStats* stats_out = nullptr) {
    if (opts.page_length <= 0) throw ConfigError("page length must be positive");
    if (opts.max_attempts <= 0) throw ConfigError("max attempts must be positive");

    auto chunks = window.split(opts.chunk);
    std::vector<std::vector<detail::LabeledRecord>> results(chunks.size());
    std::vector<FetchStats> chunk_stats(chunks.size());
    std::atomic<std::size_t> next{0};
    std::atomic<bool> failed{false};
    std::exception_ptr error;
    std::mutex error_mutex;

    auto worker = [&] {
        for (std::size_t i; !failed && (i = next.fetch_add(1)) < chunks.size();) {
            try {
                results[i] = detail::fetch_chunk(chunks[i], opts, chunk_stats[i]);
            } catch (...) {
                std::lock_guard lock(error_mutex);
                if (!error) error = std::current_exception();
                failed = true;
            }
        }
    };
    std::size_t n_workers = std::clamp<std::size_t>(opts.jobs, 1, chunks.size());
    {
        std::vector<std::jthread> pool;
        for (std::size_t w = 1; w < n_workers; ++w) pool.emplace_back(worker);
        worker();
    }

    FetchStats stats;
    for (const auto& s : chunk_stats) stats.merge(s);

    // Overlapping pages can repeat a row; identity is (hour, BA, raw label)
    // because several raw labels may normalize to the same source.
    std::vector<detail::LabeledRecord> labeled;
    for (auto& r : results) labeled.insert(labeled.end(), r.begin(), r.end());
    std::stable_sort(labeled.begin(), labeled.end(), [](const auto& a, const auto& b) {
        if (record_order(a.record, b.record)) return true;
        if (record_order(b.record, a.record)) return false;
        return a.label < b.label;
    });
    auto same = [](const auto& a, const auto& b) {
        return a.record.timestamp == b.record.timestamp &&
               a.record.balancing_authority == b.record.balancing_authority && a.label == b.label;
    };
    auto last = std::unique(labeled.begin(), labeled.end(), same);
    stats.duplicates = static_cast<std::size_t>(labeled.end() - last);
    labeled.erase(last, labeled.end());

    std::vector<GenerationRecord> all;
    all.reserve(labeled.size());
    for (auto& l : labeled) all.push_back(std::move(l.record));

    if (stats_out) *stats_out = stats;
    if (error) std::rethrow_exception(error);
    return all;
}

}  // namespace wue
