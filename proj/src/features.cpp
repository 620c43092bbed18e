#include "mea/features.hpp"

#include "mea/errors.hpp"
#include "mea/io_util.hpp"
#include "mea/response_stats.hpp"

#include <algorithm>
#include <cmath>

namespace mea {

std::vector<electrode_coord> exclusion_zone(const stimulus_pattern& pattern, int margin)
{
    if (margin < 0) throw validation_error("exclusion margin must be >= 0");
    const auto box = pole_bounding_box(pattern);
    std::vector<electrode_coord> zone;
    for (int r = std::max(0, box.row_min - margin); r <= std::min(grid_side - 1, box.row_max + margin); ++r)
        for (int c = std::max(0, box.col_min - margin); c <= std::min(grid_side - 1, box.col_max + margin); ++c)
            zone.push_back({r, c});
    return zone;
}

feature_vector extract(const trial_recording& trial, const stimulus_pattern& pattern, std::int64_t c_samples,
                       int margin, int trial_id)
{
    if (c_samples <= 0) throw validation_error("extract: C must be positive");
    if (trial.stimulus_onset_sample + c_samples > trial.raster.duration_samples())
        throw bounds_error("extract: post-stimulus window exceeds the recording");

    feature_vector fv;
    fv.label = pattern.class_label;
    fv.trial_id = trial_id;
    for (auto e : exclusion_zone(pattern, margin)) fv.excluded.push_back(electrode_index(e));
    std::sort(fv.excluded.begin(), fv.excluded.end());

    std::vector<char> masked(electrode_count, 0);
    for (int e : fv.excluded) masked[static_cast<std::size_t>(e)] = 1;
    for (int e = 0; e < electrode_count; ++e) {
        if (masked[static_cast<std::size_t>(e)]) continue;
        fv.values[static_cast<std::size_t>(e)] =
            static_cast<std::int32_t>(activity(trial.raster, electrode_at(e), trial.stimulus_onset_sample, c_samples));
    }
    return fv;
}

labeled_sample to_sample(const feature_vector& fv, double scale)
{
    labeled_sample s{fv.label, fv.trial_id, std::vector<double>(fv.values.size())};
    for (std::size_t i = 0; i < fv.values.size(); ++i) s.x[i] = fv.values[i] * scale;
    return s;
}

labeled_sample raw_counts(const feature_vector& fv) { return to_sample(fv, 1.0); }

std::string features_to_csv(std::span<const labeled_sample> rows)
{
    std::string out;
    for (const auto& r : rows) {
        out += std::to_string(r.label);
        out += ',';
        out += std::to_string(r.trial_id);
        for (double v : r.x) {
            out += ',';
            out += io::format_double(v);
        }
        out += '\n';
    }
    return out;
}

std::vector<labeled_sample> parse_features_csv(std::string_view text)
{
    std::vector<labeled_sample> out;
    std::size_t line_no = 0;
    for (auto line : io::lines(text)) {
        ++line_no;
        line = io::trim(line);
        if (line.empty()) continue;
        auto f = io::split(line, ',');
        if (f.size() < 3) throw validation_error("feature row needs label, trial_id and values (line " +
                                                 std::to_string(line_no) + ")");
        labeled_sample s;
        s.label = static_cast<int>(io::parse_int(f[0]));
        s.trial_id = static_cast<int>(io::parse_int(f[1]));
        s.x.reserve(f.size() - 2);
        for (std::size_t i = 2; i < f.size(); ++i) {
            const double v = io::parse_double(f[i]);
            if (!std::isfinite(v)) throw validation_error("non-finite feature value (line " + std::to_string(line_no) + ")");
            s.x.push_back(v);
        }
        if (!out.empty() && out.front().x.size() != s.x.size())
            throw validation_error("feature rows differ in width (line " + std::to_string(line_no) + ")");
        out.push_back(std::move(s));
    }
    return out;
}

void write_features(const std::filesystem::path& path, std::span<const labeled_sample> rows)
{
    io::write_file(path, features_to_csv(rows));
}

std::vector<labeled_sample> read_features(const std::filesystem::path& path)
{
    return parse_features_csv(io::read_file(path));
}

}  // namespace mea
