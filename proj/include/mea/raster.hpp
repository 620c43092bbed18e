#pragma once

#include "mea/mea_model.hpp"

#include <cstdint>
#include <filesystem>
#include <span>
#include <string>
#include <string_view>
#include <vector>

namespace mea {

/// Per-electrode spike sample indices at 20 kHz.
///
/// Invariants: every index lies in [0, duration), and each electrode's
/// sequence is strictly increasing.
class spike_raster {
public:
    spike_raster() : spike_raster(0) {}
    explicit spike_raster(std::int64_t duration_samples);

    std::int64_t duration_samples() const noexcept { return duration_; }
    static constexpr int sample_rate() noexcept { return sample_rate_hz; }

    std::span<const std::int64_t> channel(int electrode) const { return channels_.at(static_cast<std::size_t>(electrode)); }
    std::span<const std::int64_t> channel(electrode_coord e) const { return channel(electrode_index(e)); }

    /// Appends a spike. A repeat of the channel's last sample is merged
    /// (several units on one electrode firing in the same sample); an earlier
    /// sample or an out-of-range index throws.
    void append(int electrode, std::int64_t sample);

    /// Inserts in order, merging duplicates; for readers and test fixtures.
    void insert(int electrode, std::int64_t sample);

    std::size_t total_spikes() const noexcept;
    std::vector<std::int64_t> counts() const;

    bool operator==(const spike_raster&) const = default;

private:
    std::int64_t duration_;
    std::vector<std::vector<std::int64_t>> channels_;
};

// Raster text format (LF line endings):
//   MEARASTER v1 <duration_samples> 20000
//   [# free-form comment lines]
//   row,col,sample            one line per spike, electrode-major then time
std::string raster_to_text(const spike_raster& raster, std::span<const std::string> comments = {});

struct parsed_raster {
    spike_raster raster;
    std::vector<std::string> comments;  // comment text without the leading "# "
};

parsed_raster parse_raster(std::string_view text);
void write_raster(const std::filesystem::path& path, const spike_raster& raster,
                  std::span<const std::string> comments = {});
parsed_raster read_raster(const std::filesystem::path& path);

}  // namespace mea
