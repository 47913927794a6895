#pragma once

#include <cstddef>
#include <cstdint>
#include <filesystem>
#include <map>
#include <memory>
#include <sstream>
#include <string>
#include <vector>

#include <json.hpp>

#include "hmlab/csv.h"

namespace hmlab {

/// Provenance of a Monte Carlo number.
struct Sampling {
    std::size_t N = 0;
    std::uint64_t seed = 0;
    double shell_eps = 0.0;
    double discard_fraction = 0.0;
};

/// Everything an experiment produces, held in memory until write().
/// Nothing touches the disk before the experiment has finished.
class Report {
public:
    explicit Report(std::string experiment);

    /// Deterministic value at a '/'-separated path of the results object.
    void value(const std::string& path, const nlohmann::json& v);
    /// Monte Carlo value: stored with its standard error and sampling data.
    void stochastic(const std::string& path, double v, double stderr_, const Sampling& s);
    /// lhs <= rhs style check; `pass` is recorded as given.
    void check(const std::string& name, double lhs, double rhs, bool pass);
    /// Informational flag (negative controls, vacuous runs, relaxed lattices).
    void flag(const std::string& name, bool raised, const std::string& note = "");

    /// CSV detail file; the writer stays valid for the Report's lifetime.
    CsvWriter& table(const std::string& file, const std::vector<std::string>& header);
    void json_file(const std::string& file, nlohmann::json j);
    void text_file(const std::string& file, std::string text);

    bool all_passed() const;
    const nlohmann::json& results() const { return results_; }

    struct CheckRow {
        std::string check;
        double lhs = 0.0, rhs = 0.0;
        bool pass = false;
    };
    const std::vector<CheckRow>& checks() const { return checks_; }

    /// summary.json (with `preamble` merged in), checks.csv and the detail
    /// files. On I/O failure the files written so far are removed.
    void write(const std::filesystem::path& dir, const nlohmann::json& preamble) const;

private:
    struct Table {
        std::ostringstream text;
        CsvWriter writer{text};
    };

    std::string experiment_;
    nlohmann::json results_ = nlohmann::json::object();
    std::vector<CheckRow> checks_;
    nlohmann::json flags_ = nlohmann::json::object();
    std::map<std::string, std::unique_ptr<Table>> tables_;
    std::map<std::string, nlohmann::json> json_files_;
    std::map<std::string, std::string> text_files_;
};

}  // namespace hmlab
