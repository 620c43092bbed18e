#pragma once

// Simulated neuronal culture behind the MEA.
//
// Current-based leaky integrate-and-fire units with delta synapses, anchored
// to electrodes. Between inputs the membrane only decays towards rest, so
// thresholds can be crossed only at input events and the 20 kHz clock is
// simulated exactly by visiting samples that carry input.

#include "mea/mea_model.hpp"
#include "mea/raster.hpp"

#include <cstdint>
#include <filesystem>
#include <span>
#include <vector>

namespace mea {

/// Defaults are the committed calibration (config/default.cfg mirrors them).
struct culture_config {
    int neurons_per_electrode = 8;
    double membrane_tau_ms = 0.25;
    double threshold_mV = -50.0;
    /// Reset and resting potential.
    double reset_mV = -65.0;
    double refractory_ms = 10.0;
    double synapse_sparsity = 0.02;
    double synaptic_weight_scale = 16.2;
    /// Euclidean radius in electrode pitches.
    double connection_radius = 5.0;
    /// Poisson rate of unitary background events per neuron. Each event
    /// carries exactly the threshold gap, so a resting neuron fires.
    double background_rate_hz = 0.2;
    double stim_gain_mV_per_uA = 2.5;
    /// Mean transmission delay; per-synapse delays are uniform in [0.5, 1.5]x.
    double synaptic_delay_ms = 1.0;
    double excitatory_fraction = 0.8;
    /// Populated electrodes: rows [0, culture_rows) x cols [0, culture_cols).
    int culture_rows = grid_side;
    int culture_cols = grid_side;
    std::uint64_t seed = 1;

    bool operator==(const culture_config&) const = default;
};

void validate(const culture_config& config);

struct protocol_spec {
    int repetitions = 25;
    /// Kept as metadata: trials start from rest instead of simulating the gap.
    double interval_s = 10.0;
    double pre_window_ms = 30.0;
    double post_window_ms = 30.0;

    bool operator==(const protocol_spec&) const = default;
};

void validate(const protocol_spec& protocol);

struct trial_recording {
    spike_raster raster;
    std::int64_t stimulus_onset_sample = 0;
    int pattern_label = 0;

    bool operator==(const trial_recording&) const = default;
};

/// Samples per 10 ms chunk at 20 kHz.
inline constexpr std::int64_t chunk_samples = 200;

std::int64_t ms_to_samples(double ms) noexcept;

/// Rectangular pulse sampled at 20 kHz, in uA: ceil(width * fs) samples per
/// phase, positive phase first.
std::vector<double> render_pulse(const pulse_spec& pulse, int sample_rate = sample_rate_hz);

struct synapse {
    std::uint32_t target;
    float weight_mV;
    std::uint16_t delay_samples;

    bool operator==(const synapse&) const = default;
};

/// Immutable network: neurons, their electrodes and the synapse table.
class culture_state {
public:
    const culture_config& config() const noexcept { return config_; }
    std::size_t neuron_count() const noexcept { return neuron_electrode_.size(); }
    std::size_t synapse_count() const noexcept { return synapses_.size(); }

    int electrode_of(std::size_t neuron) const { return neuron_electrode_.at(neuron); }
    bool is_excitatory(std::size_t neuron) const { return excitatory_.at(neuron) != 0; }
    std::span<const synapse> outgoing(std::size_t neuron) const;
    /// Neurons anchored at an electrode (empty outside the culture).
    std::span<const std::uint32_t> neurons_at(int electrode) const;
    int max_delay_samples() const noexcept { return max_delay_; }

    bool operator==(const culture_state&) const = default;

private:
    friend culture_state build_culture(const culture_config& config);

    culture_config config_;
    std::vector<int> neuron_electrode_;
    std::vector<std::uint8_t> excitatory_;
    std::vector<std::size_t> syn_offsets_;
    std::vector<synapse> synapses_;
    std::vector<std::uint32_t> electrode_neurons_;
    std::vector<std::size_t> electrode_offsets_;
    int max_delay_ = 1;
};

/// Samples the network: neuron types, then per presynaptic neuron each
/// candidate within the radius (electrode row-major, then unit) in order.
culture_state build_culture(const culture_config& config);

trial_recording run_trial(const culture_state& state, const stimulus_pattern& pattern, const protocol_spec& protocol,
                          std::uint64_t trial_seed);

/// Trial i uses derive_seed(seed, "trial", i); every trial starts from rest.
std::vector<trial_recording> run_protocol(const culture_state& state, const stimulus_pattern& pattern,
                                          const protocol_spec& protocol, std::uint64_t seed);

spike_raster simulate_spontaneous(const culture_state& state, double duration_s, std::uint64_t seed);

inline constexpr int hotspot_separation = 8;

inline constexpr grid_box full_grid() noexcept { return {0, grid_side - 1, 0, grid_side - 1}; }

/// The k highest-count electrodes inside `candidates` with pairwise Chebyshev
/// distance >= min_separation, chosen greedily by (count desc, row-major).
std::vector<electrode_coord> find_hotspots(const spike_raster& raster, int k, int min_separation = hotspot_separation,
                                           grid_box candidates = full_grid());

// A trial file is a raster file with a "# onset_sample=<t> label=<l>" comment.
void write_trial(const std::filesystem::path& path, const trial_recording& trial);
trial_recording read_trial(const std::filesystem::path& path);

}  // namespace mea
