#pragma once

// Flat key-value configuration: "section.key = value", '#' starts a comment.

#include "mea/classifier.hpp"
#include "mea/culture.hpp"
#include "mea/esn.hpp"
#include "mea/spike_detect.hpp"

#include <cstdint>
#include <filesystem>
#include <string>
#include <vector>

namespace mea {

enum class scenario { pointwise, bars, digits };

std::string_view to_string(scenario s) noexcept;
scenario parse_scenario(std::string_view s);
inline constexpr scenario all_scenarios[] = {scenario::pointwise, scenario::bars, scenario::digits};

struct experiment_config {
    std::vector<scenario> scenarios{scenario::pointwise, scenario::bars, scenario::digits};
    std::uint64_t master_seed = 1;
    int repeats = 10;
    int margin = default_exclusion_margin;
    double spontaneous_s = 10.0;
    int noise_windows = 25;
    /// Hotspots and pattern centres are searched this many electrodes away
    /// from the grid edge.
    int hotspot_border = 8;
    bool detect_from_traces = false;

    culture_config culture;
    protocol_spec protocol;
    esn_config esn;
    split_spec split;
    train_spec train;
    /// Multiplier applied to spike counts before training.
    double feature_scale = 1.0;

    detector_params detect;
    double trace_noise_sd_uV = 5.0;
    double trace_template_p2p_uV = 60.0;

    bool operator==(const experiment_config&) const = default;
};

void validate(const experiment_config& config);

/// Applies "key = value" lines on top of `base`. Unknown keys, duplicate keys
/// and malformed values are validation errors naming the line.
experiment_config parse_config(std::string_view text, experiment_config base = {});
experiment_config read_config(const std::filesystem::path& path, experiment_config base = {});

/// Every key, in a fixed order; parse_config(config_to_text(c)) == c.
std::string config_to_text(const experiment_config& config);

/// The recognised keys, for help text.
std::vector<std::string> config_keys();

}  // namespace mea
