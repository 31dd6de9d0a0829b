#pragma once

// Content-addressed store for raw remote payloads.
//
// Layout: <root>/<source>/<partition>/<start>_<end>.raw holds the payload
// bytes verbatim; a sibling .sha256 file holds "<hex digest> <size>". An
// entry whose sidecar is missing or disagrees with the payload is corrupt:
// get() reports a miss and removes it so the next put() replaces it.
//
// Writers go through a temp file plus rename, so concurrent readers only ever
// see complete entries.

#include <openssl/evp.h>

#include <atomic>
#include <filesystem>
#include <optional>
#include <sstream>
#include <string>
#include <string_view>
#include <thread>

#include "wue/csv.hpp"
#include "wue/error.hpp"
#include "wue/ingest.hpp"
#include "wue/time.hpp"

namespace wue {

inline std::string sha256_hex(std::string_view bytes) {
    unsigned char digest[EVP_MAX_MD_SIZE];
    unsigned int len = 0;
    if (EVP_Digest(bytes.data(), bytes.size(), digest, &len, EVP_sha256(), nullptr) != 1)
        throw Error(ErrorKind::Data, "sha256 failed");
    static constexpr char hex[] = "0123456789abcdef";
    std::string out;
    out.reserve(len * 2);
    for (unsigned int i = 0; i < len; ++i) {
        out.push_back(hex[digest[i] >> 4]);
        out.push_back(hex[digest[i] & 0xf]);
    }
    return out;
}

struct CacheKey {
    std::string source;     // e.g. "generation"
    std::string partition;  // e.g. "all.o0" (scope plus page offset)
    FetchWindow window;
};

class RawCache {
public:
    explicit RawCache(std::filesystem::path root) : root_(std::move(root)) {}

    const std::filesystem::path& root() const noexcept { return root_; }

    std::filesystem::path payload_path(const CacheKey& key) const {
        return root_ / key.source / key.partition /
               (format_compact_hour(key.window.start()) + "_" + format_compact_hour(key.window.end()) + ".raw");
    }

    void put(const CacheKey& key, std::string_view bytes) const {
        namespace fs = std::filesystem;
        auto path = payload_path(key);
        std::error_code ec;
        fs::create_directories(path.parent_path(), ec);
        if (ec) throw ConfigError("cache directory not writable: " + path.parent_path().string());

        auto tmp_suffix = ".tmp" + unique_suffix();
        auto meta = sidecar(path);
        csv::write_file(path.string() + tmp_suffix, bytes);
        csv::write_file(meta.string() + tmp_suffix, sha256_hex(bytes) + " " + std::to_string(bytes.size()) + "\n");
        // Payload first; a reader seeing the new sidecar with the old payload
        // just gets a miss.
        fs::rename(path.string() + tmp_suffix, path, ec);
        if (!ec) fs::rename(meta.string() + tmp_suffix, meta, ec);
        if (ec) throw ConfigError("cannot commit cache entry " + path.string() + ": " + ec.message());
    }

    std::optional<std::string> get(const CacheKey& key) const {
        namespace fs = std::filesystem;
        auto path = payload_path(key);
        auto meta = sidecar(path);
        std::error_code ec;
        if (!fs::exists(path, ec)) return std::nullopt;
        std::string bytes, expected;
        try {
            bytes = csv::read_file(path);
            expected = fs::exists(meta, ec) ? csv::read_file(meta) : std::string();
        } catch (const Error&) {
            return std::nullopt;
        }
        std::string actual = sha256_hex(bytes) + " " + std::to_string(bytes.size()) + "\n";
        if (expected != actual) {
            fs::remove(path, ec);
            fs::remove(meta, ec);
            return std::nullopt;
        }
        return bytes;
    }

private:
    static std::filesystem::path sidecar(const std::filesystem::path& payload) {
        auto p = payload;
        p.replace_extension(".sha256");
        return p;
    }

    static std::string unique_suffix() {
        static std::atomic<unsigned long> counter{0};
        std::ostringstream ss;
        ss << std::this_thread::get_id() << "." << counter.fetch_add(1);
        return ss.str();
    }

    std::filesystem::path root_;
};

}  // namespace wue
