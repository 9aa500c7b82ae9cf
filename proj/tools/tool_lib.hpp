#pragma once

#include <filesystem>
#include <string>
#include <vector>

#include "json.hpp"

namespace benchhedge::tool {

inline constexpr const char* kVersion = "0.1.0";

// Exit codes: 0 success, 1 configuration error, 2 numerical failure.
struct ConfigError : std::runtime_error {
    using std::runtime_error::runtime_error;
};
struct NumericalError : std::runtime_error {
    using std::runtime_error::runtime_error;
};

// Full round-trip decimal formatting; outputs are byte-stable across runs.
std::string fmt17(double v);

// Strict parse: every section and key must be known, model invariants hold.
nlohmann::json load_config(const std::string& path);
void validate_config(const nlohmann::json& config);

// FNV-1a of the canonical (sorted-key) dump; recorded in the manifest.
std::string config_hash(const nlohmann::json& config);

struct RunResult {
    std::filesystem::path output_dir;
    std::vector<std::string> artifacts;  // file names written
};

// Executes the task described by the config. `threads` caps the worker pool
// (0 = hardware); results are identical for any value.
RunResult run_task(const nlohmann::json& config, const std::string& out_dir_override = "",
                   unsigned threads = 0);

// Long-format plot table (series,x,y,y_stderr) next to the main results.
struct PlotRow {
    std::string series;
    double x = 0.0;
    double y = 0.0;
    double y_stderr = 0.0;
};
void write_plot_csv(const std::filesystem::path& path, const std::vector<PlotRow>& rows);

}  // namespace benchhedge::tool
