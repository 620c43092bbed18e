#include "mea/mea_model.hpp"

#include "mea/errors.hpp"
#include "mea/io_util.hpp"

#include <algorithm>
#include <cstdlib>
#include <limits>
#include <set>

namespace mea {

namespace {

constexpr std::size_t pattern_level = std::numeric_limits<std::size_t>::max();

std::string coord_str(electrode_coord e)
{
    return "(" + std::to_string(e.row) + "," + std::to_string(e.col) + ")";
}

electrode_coord offset(electrode_coord e, int dr, int dc) noexcept { return {e.row + dr, e.col + dc}; }

void require_in_grid(const stimulus_pattern& p, std::string_view what)
{
    for (const auto& pair : p.pairs) {
        if (!in_grid(pair.positive) || !in_grid(pair.negative)) {
            throw bounds_error(std::string(what) + ": pair " + coord_str(pair.positive) + "-" +
                               coord_str(pair.negative) + " leaves the 64x64 grid");
        }
    }
}

}  // namespace

int chebyshev_distance(electrode_coord a, electrode_coord b) noexcept
{
    return std::max(std::abs(a.row - b.row), std::abs(a.col - b.col));
}

int manhattan_distance(electrode_coord a, electrode_coord b) noexcept
{
    return std::abs(a.row - b.row) + std::abs(a.col - b.col);
}

pulse_spec default_pointwise_pulse() noexcept { return {pulse_shape::monophasic, 10.0, 20.0, 0.0}; }
pulse_spec default_bar_pulse() noexcept { return default_pointwise_pulse(); }
pulse_spec default_digit_pulse() noexcept { return {pulse_shape::biphasic, 4.0, 100.0, 100.0}; }

std::string_view to_string(scenario_kind s) noexcept
{
    switch (s) {
    case scenario_kind::pointwise: return "pointwise";
    case scenario_kind::bar: return "bar";
    case scenario_kind::digit: return "digit";
    }
    return "?";
}

scenario_kind parse_scenario_kind(std::string_view s)
{
    s = io::trim(s);
    if (s == "pointwise") return scenario_kind::pointwise;
    if (s == "bar") return scenario_kind::bar;
    if (s == "digit") return scenario_kind::digit;
    throw validation_error("unknown scenario kind '" + std::string(s) + "'");
}

std::string_view to_string(pulse_shape s) noexcept
{
    return s == pulse_shape::monophasic ? "monophasic" : "biphasic";
}

pulse_shape parse_pulse_shape(std::string_view s)
{
    s = io::trim(s);
    if (s == "monophasic") return pulse_shape::monophasic;
    if (s == "biphasic") return pulse_shape::biphasic;
    throw validation_error("unknown pulse shape '" + std::string(s) + "'");
}

direction parse_direction(std::string_view s)
{
    s = io::trim(s);
    if (s == "N" || s == "n" || s == "north") return direction::north;
    if (s == "E" || s == "e" || s == "east") return direction::east;
    if (s == "S" || s == "s" || s == "south") return direction::south;
    if (s == "W" || s == "w" || s == "west") return direction::west;
    throw validation_error("unknown direction '" + std::string(s) + "'");
}

electrode_coord step(electrode_coord e, direction d) noexcept
{
    switch (d) {
    case direction::north: return offset(e, -1, 0);
    case direction::east: return offset(e, 0, 1);
    case direction::south: return offset(e, 1, 0);
    case direction::west: return offset(e, 0, -1);
    }
    return e;
}

stimulus_pattern make_pointwise(electrode_coord center, direction neg_direction, int label, pulse_spec pulse)
{
    stimulus_pattern p{label, {{center, step(center, neg_direction)}}, pulse, scenario_kind::pointwise};
    require_in_grid(p, "make_pointwise");
    return p;
}

stimulus_pattern make_bar(electrode_coord center, int orientation_deg, int label, int n_pairs, int dilation,
                          pulse_spec pulse)
{
    if (n_pairs < 1) throw validation_error("make_bar: n_pairs must be >= 1");
    if (dilation < 0) throw validation_error("make_bar: dilation must be >= 0");

    int dr = 0, dc = 0;
    direction neg = direction::west;
    switch (orientation_deg) {
    case 0: dr = 0, dc = 1, neg = direction::north; break;
    case 45: dr = -1, dc = 1; break;
    case 90: dr = -1, dc = 0; break;
    case 135: dr = -1, dc = -1; break;
    default: throw validation_error("make_bar: orientation must be 0, 45, 90 or 135");
    }

    const int spacing = dilation + 1;
    const int first = -((n_pairs - 1) * spacing) / 2;
    stimulus_pattern p{label, {}, pulse, scenario_kind::bar};
    p.pairs.reserve(static_cast<std::size_t>(n_pairs));
    for (int k = 0; k < n_pairs; ++k) {
        const int o = first + k * spacing;
        const electrode_coord pos = offset(center, o * dr, o * dc);
        p.pairs.push_back({pos, step(pos, neg)});
    }
    require_in_grid(p, "make_bar");
    return p;
}

stimulus_pattern make_digit(int digit, electrode_coord anchor, int label, pulse_spec pulse)
{
    stimulus_pattern p{label, {}, pulse, scenario_kind::digit};
    auto vertical = [&](int col, int length, direction neg) {
        for (int i = 0; i < length; ++i) {
            const electrode_coord pos{anchor.row + i, col};
            p.pairs.push_back({pos, step(pos, neg)});
        }
    };
    auto horizontal = [&](int row, direction neg) {
        for (int j = 1; j <= 3; ++j) {
            const electrode_coord pos{row, anchor.col + j};
            p.pairs.push_back({pos, step(pos, neg)});
        }
    };

    switch (digit) {
    case 1: vertical(anchor.col, 7, direction::west); break;
    case 0:
    case 8:
        vertical(anchor.col, 5, direction::west);
        vertical(anchor.col + 4, 5, direction::east);
        horizontal(anchor.row, direction::north);
        horizontal(anchor.row + 4, direction::south);
        if (digit == 8) horizontal(anchor.row + 2, direction::north);
        break;
    default: throw validation_error("make_digit: digit must be 0, 1 or 8");
    }
    require_in_grid(p, "make_digit");
    return p;
}

std::string_view to_string(violation_kind k) noexcept
{
    switch (k) {
    case violation_kind::empty_pattern: return "empty_pattern";
    case violation_kind::invalid_pulse: return "invalid_pulse";
    case violation_kind::out_of_grid: return "out_of_grid";
    case violation_kind::degenerate_pair: return "degenerate_pair";
    case violation_kind::not_adjacent: return "not_adjacent";
    case violation_kind::pole_conflict: return "pole_conflict";
    }
    return "?";
}

bool validation_report::has(violation_kind k) const noexcept
{
    return std::any_of(violations.begin(), violations.end(), [k](const violation& v) { return v.kind == k; });
}

validation_report validate_pattern(const stimulus_pattern& pattern)
{
    validation_report report;
    auto add = [&](violation_kind k, std::size_t i, std::string msg) {
        report.violations.push_back({k, i, std::move(msg)});
    };

    if (pattern.pairs.empty()) add(violation_kind::empty_pattern, pattern_level, "pattern has no electrode pairs");

    const auto& pulse = pattern.pulse;
    if (!(pulse.amplitude_ua > 0.0) || !(pulse.width_pos_us > 0.0))
        add(violation_kind::invalid_pulse, pattern_level, "amplitude and positive width must be > 0");
    if (pulse.shape == pulse_shape::monophasic && pulse.width_neg_us != 0.0)
        add(violation_kind::invalid_pulse, pattern_level, "monophasic pulse must have zero negative width");
    if (pulse.shape == pulse_shape::biphasic && !(pulse.width_neg_us > 0.0))
        add(violation_kind::invalid_pulse, pattern_level, "biphasic pulse needs a negative width > 0");

    std::set<electrode_coord> positives, negatives;
    for (std::size_t i = 0; i < pattern.pairs.size(); ++i) {
        const auto& pr = pattern.pairs[i];
        const auto label = coord_str(pr.positive) + "-" + coord_str(pr.negative);
        if (!in_grid(pr.positive) || !in_grid(pr.negative))
            add(violation_kind::out_of_grid, i, "pair " + label + " leaves the grid");
        if (pr.positive == pr.negative)
            add(violation_kind::degenerate_pair, i, "pair " + label + " uses one electrode for both poles");
        else if (manhattan_distance(pr.positive, pr.negative) != 1)
            add(violation_kind::not_adjacent, i, "pair " + label + " poles are not 4-neighbours");
        positives.insert(pr.positive);
        negatives.insert(pr.negative);
    }
    for (std::size_t i = 0; i < pattern.pairs.size(); ++i) {
        const auto& pr = pattern.pairs[i];
        if (pr.positive == pr.negative) continue;
        if (negatives.contains(pr.positive))
            add(violation_kind::pole_conflict, i,
                "electrode " + coord_str(pr.positive) + " is a positive pole here and a negative pole elsewhere");
    }
    return report;
}

void require_valid(const stimulus_pattern& pattern)
{
    auto report = validate_pattern(pattern);
    if (report.ok()) return;
    std::string msg = "invalid stimulus pattern (label " + std::to_string(pattern.class_label) + "):";
    for (const auto& v : report.violations) msg += "\n  " + std::string(to_string(v.kind)) + ": " + v.message;
    throw validation_error(msg);
}

grid_box pole_bounding_box(const stimulus_pattern& pattern)
{
    if (pattern.pairs.empty()) throw validation_error("bounding box of an empty pattern");
    grid_box box{std::numeric_limits<int>::max(), std::numeric_limits<int>::min(),
                 std::numeric_limits<int>::max(), std::numeric_limits<int>::min()};
    for (const auto& pr : pattern.pairs) {
        for (auto e : {pr.positive, pr.negative}) {
            box.row_min = std::min(box.row_min, e.row);
            box.row_max = std::max(box.row_max, e.row);
            box.col_min = std::min(box.col_min, e.col);
            box.col_max = std::max(box.col_max, e.col);
        }
    }
    return box;
}

std::string patterns_to_text(std::span<const stimulus_pattern> patterns)
{
    std::string out;
    for (const auto& p : patterns) {
        out += "pulse," + std::to_string(p.class_label) + "," + std::string(to_string(p.pulse.shape)) + "," +
               io::format_double(p.pulse.amplitude_ua) + "," + io::format_double(p.pulse.width_pos_us) + "," +
               io::format_double(p.pulse.width_neg_us) + "\n";
        const auto scen = std::string(to_string(p.scenario));
        for (const auto& pr : p.pairs) {
            out += std::to_string(p.class_label) + "," + scen + "," + std::to_string(pr.positive.row) + "," +
                   std::to_string(pr.positive.col) + "," + std::to_string(pr.negative.row) + "," +
                   std::to_string(pr.negative.col) + "\n";
        }
    }
    return out;
}

std::vector<stimulus_pattern> parse_patterns(std::string_view text)
{
    std::vector<stimulus_pattern> out;
    bool have_scenario = false;
    std::size_t line_no = 0;
    for (auto line : io::lines(text)) {
        ++line_no;
        line = io::trim(line);
        if (line.empty() || line.front() == '#') continue;
        auto fields = io::split(line, ',');
        auto where = [&] { return " (line " + std::to_string(line_no) + ")"; };
        if (fields.size() != 6) throw validation_error("pattern record needs 6 fields" + where());
        if (io::trim(fields[0]) == "pulse") {
            stimulus_pattern p;
            p.class_label = static_cast<int>(io::parse_int(fields[1]));
            p.pulse = {parse_pulse_shape(fields[2]), io::parse_double(fields[3]), io::parse_double(fields[4]),
                       io::parse_double(fields[5])};
            out.push_back(std::move(p));
            have_scenario = false;
            continue;
        }
        if (out.empty()) throw validation_error("pair record before any pulse header" + where());
        auto& p = out.back();
        if (io::parse_int(fields[0]) != p.class_label)
            throw validation_error("pair label does not match its pulse header" + where());
        const auto scen = parse_scenario_kind(fields[1]);
        if (have_scenario && scen != p.scenario) throw validation_error("mixed scenarios in one pattern" + where());
        p.scenario = scen;
        have_scenario = true;
        p.pairs.push_back({{static_cast<int>(io::parse_int(fields[2])), static_cast<int>(io::parse_int(fields[3]))},
                           {static_cast<int>(io::parse_int(fields[4])), static_cast<int>(io::parse_int(fields[5]))}});
    }
    return out;
}

void write_patterns(const std::filesystem::path& path, std::span<const stimulus_pattern> patterns)
{
    io::write_file(path, patterns_to_text(patterns));
}

std::vector<stimulus_pattern> read_patterns(const std::filesystem::path& path)
{
    return parse_patterns(io::read_file(path));
}

}  // namespace mea
