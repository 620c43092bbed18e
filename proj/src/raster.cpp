#include "mea/raster.hpp"

#include "mea/errors.hpp"
#include "mea/io_util.hpp"

#include <algorithm>
#include <numeric>

namespace mea {

spike_raster::spike_raster(std::int64_t duration_samples)
    : duration_(duration_samples), channels_(static_cast<std::size_t>(electrode_count))
{
    if (duration_samples < 0) throw validation_error("raster duration must be >= 0");
}

void spike_raster::append(int electrode, std::int64_t sample)
{
    if (electrode < 0 || electrode >= electrode_count) throw bounds_error("electrode index out of range");
    if (sample < 0 || sample >= duration_) throw bounds_error("spike sample outside the raster duration");
    auto& ch = channels_[static_cast<std::size_t>(electrode)];
    if (!ch.empty()) {
        if (ch.back() == sample) return;
        if (ch.back() > sample) throw validation_error("spike appended out of order");
    }
    ch.push_back(sample);
}

void spike_raster::insert(int electrode, std::int64_t sample)
{
    if (electrode < 0 || electrode >= electrode_count) throw bounds_error("electrode index out of range");
    if (sample < 0 || sample >= duration_) throw bounds_error("spike sample outside the raster duration");
    auto& ch = channels_[static_cast<std::size_t>(electrode)];
    auto it = std::lower_bound(ch.begin(), ch.end(), sample);
    if (it != ch.end() && *it == sample) return;
    ch.insert(it, sample);
}

std::size_t spike_raster::total_spikes() const noexcept
{
    return std::accumulate(channels_.begin(), channels_.end(), std::size_t{0},
                           [](std::size_t acc, const auto& ch) { return acc + ch.size(); });
}

std::vector<std::int64_t> spike_raster::counts() const
{
    std::vector<std::int64_t> out(channels_.size());
    for (std::size_t i = 0; i < channels_.size(); ++i) out[i] = static_cast<std::int64_t>(channels_[i].size());
    return out;
}

std::string raster_to_text(const spike_raster& raster, std::span<const std::string> comments)
{
    std::string out = "MEARASTER v1 " + std::to_string(raster.duration_samples()) + " 20000\n";
    for (const auto& c : comments) out += "# " + c + "\n";
    for (int e = 0; e < electrode_count; ++e) {
        const auto pfx = std::to_string(e / grid_side) + "," + std::to_string(e % grid_side) + ",";
        for (auto t : raster.channel(e)) {
            out += pfx;
            out += std::to_string(t);
            out += '\n';
        }
    }
    return out;
}

parsed_raster parse_raster(std::string_view text)
{
    auto ls = io::lines(text);
    if (ls.empty()) throw validation_error("raster: missing header");
    auto header = io::split(io::trim(ls.front()), ' ');
    if (header.size() != 4 || header[0] != "MEARASTER" || header[1] != "v1")
        throw validation_error("raster: bad header '" + std::string(ls.front()) + "'");
    if (io::parse_int(header[3]) != sample_rate_hz) throw validation_error("raster: sample rate must be 20000");

    parsed_raster out{spike_raster(io::parse_int(header[2])), {}};
    for (std::size_t i = 1; i < ls.size(); ++i) {
        auto line = io::trim(ls[i]);
        if (line.empty()) continue;
        if (line.front() == '#') {
            out.comments.emplace_back(io::trim(line.substr(1)));
            continue;
        }
        auto f = io::split(line, ',');
        if (f.size() != 3) throw validation_error("raster: record needs row,col,sample (line " + std::to_string(i + 1) + ")");
        const electrode_coord e{static_cast<int>(io::parse_int(f[0])), static_cast<int>(io::parse_int(f[1]))};
        if (!in_grid(e)) throw bounds_error("raster: electrode off grid (line " + std::to_string(i + 1) + ")");
        out.raster.insert(electrode_index(e), io::parse_int(f[2]));
    }
    return out;
}

void write_raster(const std::filesystem::path& path, const spike_raster& raster, std::span<const std::string> comments)
{
    io::write_file(path, raster_to_text(raster, comments));
}

parsed_raster read_raster(const std::filesystem::path& path) { return parse_raster(io::read_file(path)); }

}  // namespace mea
