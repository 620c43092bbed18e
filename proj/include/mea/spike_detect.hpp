#pragma once

// Synthetic extracellular traces and peak-to-peak spike detection.

#include "mea/mea_model.hpp"
#include "mea/raster.hpp"

#include <cstdint>
#include <filesystem>
#include <span>
#include <string>
#include <vector>

namespace mea {

struct voltage_trace {
    std::vector<double> samples;  // uV at 20 kHz
    electrode_coord electrode{0, 0};

    bool operator==(const voltage_trace&) const = default;
};

struct detector_params {
    /// Peak-to-peak threshold in multiples of the robust noise SD.
    double threshold_k = 8.0;
    double peak_lifetime_ms = 2.0;
    double refractory_ms = 1.0;

    bool operator==(const detector_params&) const = default;
};

void validate(const detector_params& params);

/// Negative-leading biphasic waveform, 1.5 ms (30 samples), trough -1.
std::vector<double> default_template();

double peak_to_peak(std::span<const double> waveform);

/// Index of the largest-magnitude sample; throws if it is not unique.
std::size_t template_extremum(std::span<const double> waveform);

/// White Gaussian noise plus `waveform` placed so that its extremum lands on
/// each spike index. Parts falling outside the trace are clipped.
voltage_trace synthesize_trace(std::span<const std::int64_t> spikes, std::int64_t n_samples, double noise_sd_uV,
                               std::span<const double> waveform, std::uint64_t seed, electrode_coord electrode = {0, 0});

/// 1.4826 * median(|x - median(x)|); needs at least 1000 samples.
double estimate_noise_sd(const voltage_trace& trace);

/// Slides a window of peak_lifetime over the trace; when max - min inside it
/// exceeds threshold_k * noise SD, the larger-magnitude of the two extrema is
/// reported and the next refractory_ms are skipped. Noise SD comes from the MAD,
/// or from the plain SD when the MAD is zero.
std::vector<std::int64_t> detect_spikes(const voltage_trace& trace, const detector_params& params = {});

/// Same, with the noise SD supplied instead of estimated.
std::vector<std::int64_t> detect_spikes(const voltage_trace& trace, const detector_params& params, double noise_sd);

/// Raster -> per-electrode traces -> detected raster, electrode seeds drawn
/// as derive_seed(seed, "trace", electrode index).
spike_raster redetect(const spike_raster& raster, double noise_sd_uV, std::span<const double> waveform,
                      const detector_params& params, std::uint64_t seed);

// Trace file: 16-byte header "MEAT", uint16 row, uint16 col, uint64 count
// (little-endian), then count float32 samples.
std::string trace_to_bytes(const voltage_trace& trace);
voltage_trace parse_trace(std::string_view bytes);
void write_trace(const std::filesystem::path& path, const voltage_trace& trace);
voltage_trace read_trace(const std::filesystem::path& path);

}  // namespace mea
