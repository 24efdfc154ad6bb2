#pragma once

#include <chrono>
#include <cstdint>
#include <ctime>
#include <filesystem>
#include <string>
#include <vector>

#include <json.hpp>

#include "../version.hpp"
#include "config.hpp"
#include "csv.hpp"

namespace qphase::harness {

inline std::string utc_timestamp(std::chrono::system_clock::time_point t) {
    std::time_t tt = std::chrono::system_clock::to_time_t(t);
    std::tm tm{};
    gmtime_r(&tt, &tm);
    char buf[32];
    std::strftime(buf, sizeof buf, "%Y-%m-%dT%H:%M:%SZ", &tm);
    return buf;
}

inline nlohmann::ordered_json to_json(const Value& v) {
    struct {
        nlohmann::ordered_json operator()(const std::string& s) const { return s; }
        nlohmann::ordered_json operator()(long long i) const { return i; }
        nlohmann::ordered_json operator()(double d) const { return d; }
        nlohmann::ordered_json operator()(bool b) const { return b; }
        nlohmann::ordered_json operator()(const std::vector<double>& l) const { return l; }
    } f;
    return std::visit(f, v);
}

/// Everything needed to reproduce a run: version, seed, the fully resolved config and the files written.
struct RunManifest {
    std::string version = qphase::version;
    std::string subcommand;
    std::uint64_t seed = 0;
    Config config;
    std::string started;
    std::string finished;
    std::vector<std::string> outputs; // paths relative to the manifest

    nlohmann::ordered_json json() const {
        nlohmann::ordered_json cfg = nlohmann::ordered_json::object();
        for (const auto& [k, v] : config.values()) cfg[k] = to_json(v);
        return {{"toolkit", "qphase"},  {"version", version},   {"subcommand", subcommand},
                {"seed", seed},         {"config", cfg},        {"config_text", config.serialize()},
                {"started", started},   {"finished", finished}, {"outputs", outputs}};
    }

    void write(const std::filesystem::path& path) const { write_text(path, json().dump(2) + "\n"); }
};

} // namespace qphase::harness
