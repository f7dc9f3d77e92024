#pragma once

// Deterministic output plumbing: CSV with a metadata comment block, JSON
// summaries, config hashing. Every emitted byte is a pure function of
// (config, seed); wall-clock timings go to a plain-text sidecar instead.

#include <cstdint>
#include <cstdio>
#include <filesystem>
#include <fstream>
#include <string>
#include <vector>

#include <json.hpp>

#include "chainflux/errors.hpp"

namespace chainflux {

inline constexpr const char* kVersion = "0.1.0";

inline std::string format_double(double v) {
    char buf[40];
    std::snprintf(buf, sizeof(buf), "%.17g", v);
    return buf;
}

inline std::uint64_t fnv1a64(const std::string& s) {
    std::uint64_t h = 1469598103934665603ULL;
    for (unsigned char c : s) {
        h ^= c;
        h *= 1099511628211ULL;
    }
    return h;
}

inline std::string hex64(std::uint64_t v) {
    char buf[20];
    std::snprintf(buf, sizeof(buf), "%016llx", static_cast<unsigned long long>(v));
    return buf;
}

// nlohmann::json with default (ordered map) storage sorts keys, so dump() is
// canonical for hashing.
inline std::string config_hash(const nlohmann::json& j) { return hex64(fnv1a64(j.dump())); }

class CsvWriter {
public:
    CsvWriter(const std::filesystem::path& path, const std::vector<std::string>& header,
              const std::vector<std::pair<std::string, std::string>>& meta) {
        std::filesystem::create_directories(path.parent_path());
        out_.open(path);
        if (!out_) throw config_error("cannot open " + path.string() + " for writing");
        out_ << "# chainflux " << kVersion << "\n";
        for (const auto& [k, v] : meta) out_ << "# " << k << ": " << v << "\n";
        for (std::size_t i = 0; i < header.size(); ++i)
            out_ << header[i] << (i + 1 < header.size() ? "," : "\n");
    }

    void row(const std::vector<std::string>& cells) {
        for (std::size_t i = 0; i < cells.size(); ++i)
            out_ << cells[i] << (i + 1 < cells.size() ? "," : "\n");
    }

private:
    std::ofstream out_;
};

inline void write_json(const std::filesystem::path& path, const nlohmann::json& j) {
    std::filesystem::create_directories(path.parent_path());
    std::ofstream out(path);
    if (!out) throw config_error("cannot open " + path.string() + " for writing");
    out << j.dump(2) << "\n";
}

inline nlohmann::json read_json(const std::filesystem::path& path) {
    std::ifstream in(path);
    if (!in) throw config_error("cannot open " + path.string());
    nlohmann::json j;
    in >> j;
    return j;
}

inline void append_timing(const std::filesystem::path& dir, const std::string& line) {
    std::filesystem::create_directories(dir);
    std::ofstream out(dir / "timing.log", std::ios::app);
    out << line << "\n";
}

} // namespace chainflux
