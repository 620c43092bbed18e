#pragma once

// Electrode grid geometry, stimulation pulses and the three stimulus-pattern
// families (pointwise pairs, oriented bars, seven-segment digits).

#include <compare>
#include <cstddef>
#include <filesystem>
#include <span>
#include <string>
#include <string_view>
#include <vector>

namespace mea {

inline constexpr int grid_side = 64;
inline constexpr int electrode_count = grid_side * grid_side;
inline constexpr int sample_rate_hz = 20000;

struct electrode_coord {
    int row = 0;
    int col = 0;

    auto operator<=>(const electrode_coord&) const = default;
};

inline constexpr bool in_grid(electrode_coord e) noexcept
{
    return e.row >= 0 && e.row < grid_side && e.col >= 0 && e.col < grid_side;
}

/// Row-major electrode index in [0, 4096).
inline constexpr int electrode_index(electrode_coord e) noexcept { return e.row * grid_side + e.col; }

inline constexpr electrode_coord electrode_at(int index) noexcept
{
    return {index / grid_side, index % grid_side};
}

int chebyshev_distance(electrode_coord a, electrode_coord b) noexcept;
int manhattan_distance(electrode_coord a, electrode_coord b) noexcept;

struct electrode_pair {
    electrode_coord positive;
    electrode_coord negative;

    auto operator<=>(const electrode_pair&) const = default;
};

enum class pulse_shape { monophasic, biphasic };

struct pulse_spec {
    pulse_shape shape = pulse_shape::monophasic;
    double amplitude_ua = 10.0;
    double width_pos_us = 20.0;
    double width_neg_us = 0.0;

    bool operator==(const pulse_spec&) const = default;
};

/// Monophasic 10 uA, 20 us: the pointwise-stimulus pulse.
pulse_spec default_pointwise_pulse() noexcept;
/// Bars reuse the monophasic pointwise pulse.
pulse_spec default_bar_pulse() noexcept;
/// Biphasic 4 uA per pair, 100 us per phase.
pulse_spec default_digit_pulse() noexcept;

enum class scenario_kind { pointwise, bar, digit };

std::string_view to_string(scenario_kind s) noexcept;
scenario_kind parse_scenario_kind(std::string_view s);
std::string_view to_string(pulse_shape s) noexcept;
pulse_shape parse_pulse_shape(std::string_view s);

struct stimulus_pattern {
    int class_label = 0;
    std::vector<electrode_pair> pairs;
    pulse_spec pulse;
    scenario_kind scenario = scenario_kind::pointwise;

    bool operator==(const stimulus_pattern&) const = default;
};

enum class direction { north, east, south, west };

direction parse_direction(std::string_view s);
electrode_coord step(electrode_coord e, direction d) noexcept;

/// One pair: positive pole at `center`, negative pole at its neighbour in
/// `neg_direction`. Throws bounds_error if either pole is off-grid.
stimulus_pattern make_pointwise(electrode_coord center, direction neg_direction, int label,
                                pulse_spec pulse = default_pointwise_pulse());

/// Oriented bar of `n_pairs` pairs centred on `center`.
///
/// Positive poles lie on the orientation axis every (dilation + 1) steps.
/// Axis steps in (row, col): 0 deg (0,+1), 45 deg (-1,+1), 90 deg (-1,0),
/// 135 deg (-1,-1); rows grow downwards. The negative pole is the
/// perpendicular-left neighbour of the axis direction: north for 0 deg, west
/// for 90 deg, and the horizontal (west) neighbour for the diagonals.
stimulus_pattern make_bar(electrode_coord center, int orientation_deg, int label, int n_pairs = 5,
                          int dilation = 1, pulse_spec pulse = default_bar_pulse());

/// Seven-segment digit 0, 1 or 8 with `anchor` at the top-left positive pole.
///
/// Digit 1 is a 7-pair vertical segment. Digits 0 and 8 have 5-pair vertical
/// segments at columns anchor.col and anchor.col + 4 and 3-pair horizontal
/// segments over the three interior columns (top row, bottom row, and for 8
/// the middle row). Negative poles point away from the digit body, except the
/// middle bar, whose negative poles sit one row above it.
stimulus_pattern make_digit(int digit, electrode_coord anchor, int label,
                            pulse_spec pulse = default_digit_pulse());

enum class violation_kind { empty_pattern, invalid_pulse, out_of_grid, degenerate_pair, not_adjacent, pole_conflict };

std::string_view to_string(violation_kind k) noexcept;

struct violation {
    violation_kind kind;
    std::size_t pair_index;  // npos-like sentinel for pattern-level violations
    std::string message;
};

struct validation_report {
    std::vector<violation> violations;

    bool ok() const noexcept { return violations.empty(); }
    bool has(violation_kind k) const noexcept;
};

validation_report validate_pattern(const stimulus_pattern& pattern);

/// Throws validation_error listing every violation when the pattern is invalid.
void require_valid(const stimulus_pattern& pattern);

/// Bounding box of every pole; empty patterns are rejected.
struct grid_box {
    int row_min = 0;
    int row_max = -1;
    int col_min = 0;
    int col_max = -1;

    bool contains(electrode_coord e) const noexcept
    {
        return e.row >= row_min && e.row <= row_max && e.col >= col_min && e.col <= col_max;
    }
    int rows() const noexcept { return row_max - row_min + 1; }
    int cols() const noexcept { return col_max - col_min + 1; }
};

grid_box pole_bounding_box(const stimulus_pattern& pattern);

// Pattern text format: per pattern a header line
//   pulse,<label>,<shape>,<amplitude_ua>,<width_pos_us>,<width_neg_us>
// followed by one record per pair
//   <label>,<scenario>,<prow>,<pcol>,<nrow>,<ncol>
std::string patterns_to_text(std::span<const stimulus_pattern> patterns);
std::vector<stimulus_pattern> parse_patterns(std::string_view text);
void write_patterns(const std::filesystem::path& path, std::span<const stimulus_pattern> patterns);
std::vector<stimulus_pattern> read_patterns(const std::filesystem::path& path);

}  // namespace mea
