#include "mea/esn.hpp"

#include "mea/errors.hpp"
#include "mea/io_util.hpp"
#include "mea/rng.hpp"

#include <algorithm>
#include <cmath>
#include <numeric>

namespace mea {

void validate(const esn_config& c)
{
    auto fail = [](const std::string& m) { throw validation_error("esn config: " + m); };
    if (c.n_units < 1) fail("n_units must be >= 1");
    if (!(c.sparsity > 0.0 && c.sparsity <= 1.0)) fail("sparsity must be in (0, 1]");
    if (!(c.spectral_radius > 0.0) || !std::isfinite(c.spectral_radius)) fail("spectral_radius must be > 0");
    if (!std::isfinite(c.input_scale)) fail("input_scale must be finite");
}

sparse_matrix sample_reservoir(const esn_config& config)
{
    validate(config);
    const auto n = static_cast<std::uint64_t>(config.n_units);
    const std::uint64_t total = n * n;
    const auto wanted = static_cast<std::uint64_t>(std::llround(config.sparsity * static_cast<double>(total)));

    rng gen(config.seed);
    std::vector<std::size_t> row_ptr(n + 1, 0);
    std::vector<int> cols;
    std::vector<double> vals;
    cols.reserve(wanted);
    vals.reserve(wanted);
    std::uint64_t chosen = 0;
    for (std::uint64_t t = 0; t < total && chosen < wanted; ++t) {
        // Selection sampling: accept with probability (needed) / (remaining).
        const double accept = static_cast<double>(wanted - chosen) / static_cast<double>(total - t);
        if (gen.uniform01() >= accept) continue;
        cols.push_back(static_cast<int>(t % n));
        vals.push_back(gen.uniform(-1.0, 1.0));
        ++row_ptr[t / n + 1];
        ++chosen;
    }
    std::partial_sum(row_ptr.begin(), row_ptr.end(), row_ptr.begin());
    return {config.n_units, std::move(row_ptr), std::move(cols), std::move(vals)};
}

namespace {

// Kahn's algorithm on the nonzero pattern. An acyclic pattern means the matrix
// is nilpotent, which an iterative solver only sees as rounding noise.
bool acyclic(const sparse_matrix& w)
{
    const auto n = static_cast<std::size_t>(w.size());
    const auto rp = w.row_ptr();
    const auto cols = w.cols();
    const auto vals = w.values();
    std::vector<int> indegree(n, 0);
    for (std::size_t k = 0; k < cols.size(); ++k)
        if (vals[k] != 0.0) ++indegree[static_cast<std::size_t>(cols[k])];
    std::vector<std::size_t> ready;
    for (std::size_t i = 0; i < n; ++i)
        if (indegree[i] == 0) ready.push_back(i);
    std::size_t seen = 0;
    while (!ready.empty()) {
        const auto r = ready.back();
        ready.pop_back();
        ++seen;
        for (auto k = rp[r]; k < rp[r + 1]; ++k)
            if (vals[k] != 0.0 && --indegree[static_cast<std::size_t>(cols[k])] == 0)
                ready.push_back(static_cast<std::size_t>(cols[k]));
    }
    return seen == n;
}

}  // namespace

double scale_to_spectral_radius(sparse_matrix& w, double target, std::uint64_t seed)
{
    if (!(target > 0.0)) throw validation_error("spectral radius target must be > 0");
    if (acyclic(w)) throw numeric_error("reservoir has zero spectral radius (acyclic connectivity)");
    const double radius = std::abs(dominant_eigenvalue(w, seed).value);
    // nilpotent matrices leave only rounding noise behind; compare against the entry scale
    double norm = 0.0;
    for (double v : w.values()) norm += v * v;
    norm = std::sqrt(norm);
    if (!std::isfinite(radius) || !(radius > 1e-10 * norm)) throw numeric_error("reservoir has zero spectral radius");
    w.scale(target / radius);
    return radius;
}

sparse_matrix build_reservoir(const esn_config& config)
{
    auto w = sample_reservoir(config);
    scale_to_spectral_radius(w, config.spectral_radius, derive_seed(config.seed, "eigen-start", 0));
    return w;
}

noise_model estimate_noise(const spike_raster& spontaneous, int n_windows, std::uint64_t seed)
{
    if (n_windows < 1) throw validation_error("estimate_noise: n_windows must be >= 1");
    const auto available = spontaneous.duration_samples() / chunk_samples;
    if (available < n_windows)
        throw validation_error("estimate_noise: recording holds " + std::to_string(available) + " windows of 10 ms, " +
                               std::to_string(n_windows) + " requested");

    std::vector<std::int64_t> idx(static_cast<std::size_t>(available));
    std::iota(idx.begin(), idx.end(), std::int64_t{0});
    rng gen(seed);
    gen.shuffle(idx);
    idx.resize(static_cast<std::size_t>(n_windows));

    double total = 0.0;
    for (int e = 0; e < electrode_count; ++e) {
        const auto ch = spontaneous.channel(electrode_at(e));
        for (auto w : idx) {
            const auto lo = std::lower_bound(ch.begin(), ch.end(), w * chunk_samples);
            const auto hi = std::lower_bound(lo, ch.end(), (w + 1) * chunk_samples);
            total += static_cast<double>(hi - lo);
        }
    }
    return {total / (static_cast<double>(n_windows) * electrode_count), n_windows};
}

std::vector<double> stimulus_image(const stimulus_pattern& pattern, double input_scale)
{
    require_valid(pattern);
    std::vector<double> img(electrode_count, 0.0);
    for (const auto& p : pattern.pairs) {
        img[static_cast<std::size_t>(electrode_index(p.positive))] = input_scale;
        img[static_cast<std::size_t>(electrode_index(p.negative))] = -input_scale;
    }
    return img;
}

std::vector<double> esn_features(const sparse_matrix& reservoir, const stimulus_pattern& pattern,
                                 const noise_model& noise, std::uint64_t trial_seed, double input_scale)
{
    if (reservoir.size() != electrode_count)
        throw validation_error("esn_features: reservoir must have one unit per electrode (4096)");
    if (!(noise.mean_count >= 0.0)) throw validation_error("esn_features: noise mean_count must be >= 0");
    auto u = stimulus_image(pattern, input_scale);
    rng gen(trial_seed);
    for (auto& x : u) x += noise.mean_count * gen.normal();

    std::vector<double> x1(u.size()), x2(u.size());
    std::transform(u.begin(), u.end(), x1.begin(), [](double v) { return std::tanh(v); });
    reservoir.multiply(x1, x2);
    for (std::size_t i = 0; i < x2.size(); ++i) x2[i] = std::tanh(x2[i] + u[i]);
    return x2;
}

labeled_sample esn_sample(const sparse_matrix& reservoir, const stimulus_pattern& pattern, const noise_model& noise,
                          std::uint64_t trial_seed, int trial_id, double input_scale)
{
    return {pattern.class_label, trial_id, esn_features(reservoir, pattern, noise, trial_seed, input_scale)};
}

std::string matrix_to_text(const sparse_matrix& m)
{
    std::string out = "ESNMATRIX " + std::to_string(m.size()) + " " + std::to_string(m.nonzeros()) + "\n";
    const auto rp = m.row_ptr();
    const auto cols = m.cols();
    const auto vals = m.values();
    for (int r = 0; r < m.size(); ++r) {
        for (auto k = rp[static_cast<std::size_t>(r)]; k < rp[static_cast<std::size_t>(r) + 1]; ++k) {
            out += std::to_string(r);
            out += ',';
            out += std::to_string(cols[k]);
            out += ',';
            out += io::format_double(vals[k]);
            out += '\n';
        }
    }
    return out;
}

sparse_matrix parse_matrix(std::string_view text)
{
    const auto ls = io::lines(text);
    if (ls.empty()) throw validation_error("matrix: empty file");
    const auto head = io::split(io::trim(ls[0]), ' ');
    if (head.size() != 3 || head[0] != "ESNMATRIX") throw validation_error("matrix: bad header");
    const auto n = io::parse_int(head[1]);
    const auto nnz = io::parse_int(head[2]);
    if (n < 1 || nnz < 0) throw validation_error("matrix: bad dimensions");
    std::vector<std::size_t> row_ptr(static_cast<std::size_t>(n) + 1, 0);
    std::vector<int> cols;
    std::vector<double> vals;
    long long prev_row = 0, prev_col = -1;
    for (std::size_t i = 1; i < ls.size(); ++i) {
        const auto line = io::trim(ls[i]);
        if (line.empty()) continue;
        const auto f = io::split(line, ',');
        if (f.size() != 3) throw validation_error("matrix: line " + std::to_string(i + 1) + " needs row,col,value");
        const auto r = io::parse_int(f[0]);
        const auto c = io::parse_int(f[1]);
        if (r < 0 || r >= n || c < 0 || c >= n) throw validation_error("matrix: index out of range");
        if (r < prev_row || (r == prev_row && c <= prev_col)) throw validation_error("matrix: entries out of order");
        prev_row = r;
        prev_col = c;
        cols.push_back(static_cast<int>(c));
        vals.push_back(io::parse_double(f[2]));
        ++row_ptr[static_cast<std::size_t>(r) + 1];
    }
    if (static_cast<long long>(vals.size()) != nnz) throw validation_error("matrix: entry count differs from header");
    std::partial_sum(row_ptr.begin(), row_ptr.end(), row_ptr.begin());
    return {static_cast<int>(n), std::move(row_ptr), std::move(cols), std::move(vals)};
}

void write_matrix(const std::filesystem::path& path, const sparse_matrix& m) { io::write_file(path, matrix_to_text(m)); }

sparse_matrix read_matrix(const std::filesystem::path& path) { return parse_matrix(io::read_file(path)); }

}  // namespace mea
