#pragma once

#include <array>
#include <cstdio>
#include <filesystem>
#include <fstream>
#include <string>
#include <vector>

#include "../errors.hpp"

namespace qphase::harness {

inline std::string sci(double x) {
    char buf[40];
    std::snprintf(buf, sizeof buf, "%.17e", x);
    return buf;
}

inline std::string sci(long x) { return std::to_string(x); }

inline std::string csv_field(const std::string& s) {
    if (s.find_first_of(",\"\n") == std::string::npos) return s;
    std::string out = "\"";
    for (char c : s) {
        if (c == '"') out += '"';
        out += c;
    }
    return out + "\"";
}

/// Row of the Monte Carlo results table (simulate and sweep).
struct ResultRow {
    std::string run_id;
    std::uint64_t seed = 0;
    std::string variant;
    std::string mod_kind;
    double beta = 0.0;
    double lambda = 0.0;
    double n_photon = 0.0;
    double r = 0.0;
    double snr_empirical = 0.0;
    double snr_stderr = 0.0;
    double snr_analytic = 0.0;
    double sigma0_sq = 0.0;
    double sigma0_sq_empirical = 0.0;
    long cycle_slips = 0;
    bool pass_threshold = false;
};

inline constexpr std::array<const char*, 15> result_columns{
    "run_id",        "seed",       "variant",      "mod_kind",  "beta",
    "lambda",        "n_photon",   "r",            "snr_empirical", "snr_stderr",
    "snr_analytic",  "sigma0_sq",  "sigma0_sq_empirical", "cycle_slips", "pass_threshold"};

/// Plain table: header plus preformatted cells.
struct Table {
    std::vector<std::string> header;
    std::vector<std::vector<std::string>> rows;

    void add(std::vector<std::string> row) {
        if (row.size() != header.size())
            throw Error("table row has " + std::to_string(row.size()) + " fields, header has " +
                        std::to_string(header.size()));
        rows.push_back(std::move(row));
    }

    std::string str() const {
        std::string out;
        auto line = [&out](const std::vector<std::string>& cells) {
            for (std::size_t i = 0; i < cells.size(); ++i) out += (i ? "," : "") + csv_field(cells[i]);
            out += '\n';
        };
        line(header);
        for (const auto& r : rows) line(r);
        return out;
    }
};

inline Table results_table(const std::vector<ResultRow>& rows) {
    Table t{{result_columns.begin(), result_columns.end()}, {}};
    for (const auto& r : rows)
        t.add({r.run_id, std::to_string(r.seed), r.variant, r.mod_kind, sci(r.beta), sci(r.lambda), sci(r.n_photon),
               sci(r.r), sci(r.snr_empirical), sci(r.snr_stderr), sci(r.snr_analytic), sci(r.sigma0_sq),
               sci(r.sigma0_sq_empirical), std::to_string(r.cycle_slips), r.pass_threshold ? "true" : "false"});
    return t;
}

inline void write_text(const std::filesystem::path& path, const std::string& text) {
    std::error_code ec;
    if (path.has_parent_path()) std::filesystem::create_directories(path.parent_path(), ec);
    if (ec) throw IoError("cannot create directory '" + path.parent_path().string() + "': " + ec.message());
    std::ofstream out(path, std::ios::binary | std::ios::trunc);
    if (!out) throw IoError("cannot open '" + path.string() + "' for writing");
    out << text;
    out.flush();
    if (!out) throw IoError("write failed for '" + path.string() + "'");
}

inline void emit_results(const std::vector<ResultRow>& rows, const std::filesystem::path& path) {
    write_text(path, results_table(rows).str());
}

} // namespace qphase::harness
