#pragma once

#include "mea/culture.hpp"
#include "mea/mea_model.hpp"

#include <cstdint>
#include <filesystem>
#include <span>
#include <string>
#include <vector>

namespace mea {

inline constexpr int default_exclusion_margin = 2;

/// Post-stimulus spike counts per electrode, row-major, with the stimulated
/// region zeroed. The length stays at 4096 whatever the zone.
struct feature_vector {
    std::vector<std::int32_t> values = std::vector<std::int32_t>(electrode_count, 0);
    int label = 0;
    int trial_id = 0;
    std::vector<int> excluded;  // sorted electrode indices

    bool operator==(const feature_vector&) const = default;
};

/// Bounding box of the pattern's poles grown by `margin` on every side and
/// clipped to the grid, as row-major coordinates.
std::vector<electrode_coord> exclusion_zone(const stimulus_pattern& pattern, int margin);

feature_vector extract(const trial_recording& trial, const stimulus_pattern& pattern,
                       std::int64_t c_samples = chunk_samples, int margin = default_exclusion_margin, int trial_id = 0);

/// Generic labelled real-valued sample, the classifier's input. Counts and
/// ESN states share it.
struct labeled_sample {
    int label = 0;
    int trial_id = 0;
    std::vector<double> x;

    bool operator==(const labeled_sample&) const = default;
};

/// Counts scaled by `scale` (the pipeline uses 1 / C_samples).
labeled_sample to_sample(const feature_vector& fv, double scale);

// Feature CSV: one line per trial, "label,trial_id,v0,...,v4095", no header.
std::string features_to_csv(std::span<const labeled_sample> rows);
std::vector<labeled_sample> parse_features_csv(std::string_view text);
void write_features(const std::filesystem::path& path, std::span<const labeled_sample> rows);
std::vector<labeled_sample> read_features(const std::filesystem::path& path);

/// Counts as a sample without rescaling, for CSV output.
labeled_sample raw_counts(const feature_vector& fv);

}  // namespace mea
