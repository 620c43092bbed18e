#pragma once

// End-to-end experiment: culture and ESN paths on identical splits.

#include "mea/config.hpp"

#include <cstdint>
#include <filesystem>
#include <functional>
#include <string>
#include <vector>

namespace mea {

/// Stage seeds: derive_seed(master_seed, tag, index). Tags used by the
/// experiment are listed in docs/formats.md.
std::uint64_t seed_derivation(std::uint64_t master_seed, std::string_view stage_tag, std::uint64_t index);

/// Patterns of a scenario, labels 0..K-1 in report order. Pointwise uses the
/// four strongest separated hotspots (negative pole east); bars and digits
/// are centred on the single strongest one.
std::vector<stimulus_pattern> scenario_patterns(scenario s, const spike_raster& spontaneous, int border);

std::vector<std::string> class_names(scenario s);

struct class_row {
    std::string name;
    double brc_mean = 0.0;
    double brc_sd = 0.0;
    double esn_mean = 0.0;
    double esn_sd = 0.0;

    bool operator==(const class_row&) const = default;
};

struct scenario_result {
    scenario kind = scenario::pointwise;
    std::vector<class_row> classes;
    class_row average;
    /// Overall accuracy per repeat.
    std::vector<double> brc_accuracy;
    std::vector<double> esn_accuracy;

    bool operator==(const scenario_result&) const = default;
};

struct results_table {
    std::vector<scenario_result> scenarios;

    bool operator==(const results_table&) const = default;
};

/// Per-repeat evaluations reduced to mean and sample SD (SD 0 for one repeat).
/// The average row's mean is the mean of the class means; its SD is taken
/// over the per-repeat overall accuracies.
scenario_result summarize(scenario s, const std::vector<evaluation>& brc, const std::vector<evaluation>& esn);

using progress_fn = std::function<void(const std::string&)>;

/// Runs every configured scenario. When `out_dir` is non-empty, all
/// artifacts, results.csv, report.txt and manifest.txt are written there.
results_table run_experiment(const experiment_config& config, const std::filesystem::path& out_dir,
                             const progress_fn& progress = {});

/// "scenario,class,brc_mean,brc_sd,esn_mean,esn_sd", fractions with 4 decimals.
std::string results_to_csv(const results_table& table);
/// Scenario blocks with per-class rows, in percent.
std::string results_to_text(const results_table& table);
results_table parse_results_csv(std::string_view text);
/// Writes <prefix>.csv and <prefix>.txt.
void emit_report(const results_table& table, const std::filesystem::path& prefix);

std::string sha256_hex(std::string_view bytes);

struct manifest_entry {
    std::string path;  // relative, '/' separated
    std::string sha256;

    bool operator==(const manifest_entry&) const = default;
};

/// Hashes the listed files (relative to `dir`), sorted by path.
std::vector<manifest_entry> build_manifest(const std::filesystem::path& dir, std::vector<std::string> relative_paths);
/// "<sha256>  <path>" lines, the layout sha256sum -c accepts.
std::string manifest_to_text(const std::vector<manifest_entry>& entries);
std::vector<manifest_entry> parse_manifest(std::string_view text);
/// Paths whose current hash differs from manifest.txt, or that are missing.
std::vector<std::string> verify_manifest(const std::filesystem::path& dir);

}  // namespace mea
