#pragma once

// Echo state network baseline driven once by the stimulus image.

#include "mea/features.hpp"
#include "mea/mea_model.hpp"
#include "mea/raster.hpp"
#include "mea/spectral.hpp"

#include <cstdint>
#include <filesystem>
#include <string>
#include <vector>

namespace mea {

struct esn_config {
    int n_units = electrode_count;
    double sparsity = 0.1;
    double spectral_radius = 0.9;
    double input_scale = 1.0;
    std::uint64_t seed = 2;

    bool operator==(const esn_config&) const = default;
};

void validate(const esn_config& config);

struct noise_model {
    double mean_count = 0.0;
    int n_windows = 25;

    bool operator==(const noise_model&) const = default;
};

/// Unscaled reservoir: exactly round(sparsity * n^2) entries at positions
/// chosen by selection sampling over the row-major index range (self-loops
/// allowed), each valued U[-1, 1) drawn right after its position is accepted.
sparse_matrix sample_reservoir(const esn_config& config);

/// Rescales `w` in place so its dominant eigenvalue has magnitude `target`
/// and returns the magnitude before scaling.
double scale_to_spectral_radius(sparse_matrix& w, double target, std::uint64_t seed);

/// sample_reservoir then scale_to_spectral_radius, both seeded from config.seed.
sparse_matrix build_reservoir(const esn_config& config);

/// Mean spikes per electrode per 10 ms window over `n_windows` distinct
/// 200-sample windows aligned to multiples of 200, chosen at random.
noise_model estimate_noise(const spike_raster& spontaneous, int n_windows, std::uint64_t seed);

/// +input_scale at positive poles, -input_scale at negative poles, row-major.
std::vector<double> stimulus_image(const stimulus_pattern& pattern, double input_scale = 1.0);

/// x2 = tanh(W tanh(u) + u) with u = image + N(0, mean_count^2) per unit.
std::vector<double> esn_features(const sparse_matrix& reservoir, const stimulus_pattern& pattern,
                                 const noise_model& noise, std::uint64_t trial_seed, double input_scale = 1.0);

labeled_sample esn_sample(const sparse_matrix& reservoir, const stimulus_pattern& pattern, const noise_model& noise,
                          std::uint64_t trial_seed, int trial_id, double input_scale = 1.0);

// Matrix file: "ESNMATRIX <n> <nnz>" then "row,col,value" lines in row order.
std::string matrix_to_text(const sparse_matrix& m);
sparse_matrix parse_matrix(std::string_view text);
void write_matrix(const std::filesystem::path& path, const sparse_matrix& m);
sparse_matrix read_matrix(const std::filesystem::path& path);

}  // namespace mea
