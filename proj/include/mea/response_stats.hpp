#pragma once

// Per-electrode activity and evoked response around a stimulus, trial
// aggregation with Student-t confidence intervals, and the colour-coded map.

#include "mea/culture.hpp"
#include "mea/raster.hpp"

#include <array>
#include <cstdint>
#include <filesystem>
#include <span>
#include <string>
#include <vector>

namespace mea {

/// Spikes in the half-open window [t_s, t_s + c_samples).
std::int64_t activity(const spike_raster& raster, electrode_coord electrode, std::int64_t t_s, std::int64_t c_samples);

/// activity over [t_s, t_s + C) minus activity over [t_s - C, t_s).
std::int64_t response(const spike_raster& raster, electrode_coord electrode, std::int64_t t_s, std::int64_t c_samples);

// Student t distribution, implemented through the regularized incomplete beta
// function (continued fraction).
double regularized_incomplete_beta(double a, double b, double x);
double student_t_cdf(double t, double dof);
/// Inverse CDF; p in (0, 1).
double student_t_quantile(double p, double dof);

enum class response_category { pos99, pos95, none, neg95, neg99 };

std::string_view to_string(response_category c) noexcept;
response_category parse_response_category(std::string_view s);

/// Two-sided t confidence intervals on the mean of n >= 2 observations:
/// pos99 if the 99% interval lies above zero, else pos95 if the 95% one does;
/// symmetric for negatives. With sd == 0 the interval collapses onto the mean.
response_category categorize(double mean, double sd, int n);

struct electrode_response {
    double mean = 0.0;
    double sd = 0.0;
    int n = 0;
    response_category category = response_category::none;
};

struct response_map {
    std::array<electrode_response, electrode_count> cells{};

    const electrode_response& at(electrode_coord e) const { return cells[static_cast<std::size_t>(electrode_index(e))]; }
};

/// Needs >= 2 trials with identical duration and onset.
response_map aggregate(std::span<const trial_recording> trials, std::int64_t c_samples = chunk_samples);

struct rgb {
    std::uint8_t r, g, b;
    bool operator==(const rgb&) const = default;
};

rgb category_color(response_category c) noexcept;

/// 64x64 binary P6 pixmap, one pixel per electrode, row-major.
void write_map_image(const response_map& map, const std::filesystem::path& path);
std::string map_image_bytes(const response_map& map);
/// Inverse of the colour coding; throws on foreign colours or a bad header.
std::vector<response_category> read_map_image(const std::filesystem::path& path);

/// CSV "row,col,mean,sd,category", header line first.
std::string map_to_csv(const response_map& map);

}  // namespace mea
