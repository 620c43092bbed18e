#include "mea/spike_detect.hpp"

#include "mea/culture.hpp"
#include "mea/errors.hpp"
#include "mea/io_util.hpp"
#include "mea/rng.hpp"

#include <algorithm>
#include <bit>
#include <cmath>
#include <deque>

namespace mea {

void validate(const detector_params& p)
{
    auto fail = [](const std::string& m) { throw validation_error("detector: " + m); };
    if (!(p.threshold_k > 0.0) || !std::isfinite(p.threshold_k)) fail("threshold_k must be > 0");
    if (!(p.peak_lifetime_ms > 0.0) || !std::isfinite(p.peak_lifetime_ms)) fail("peak_lifetime_ms must be > 0");
    if (!(p.refractory_ms > 0.0) || !std::isfinite(p.refractory_ms)) fail("refractory_ms must be > 0");
}

std::vector<double> default_template()
{
    // Trough at 0.4 ms, rebound peak at 0.85 ms, scaled so the trough is -1.
    std::vector<double> w(30);
    for (std::size_t i = 0; i < w.size(); ++i) {
        const double t = static_cast<double>(i);
        w[i] = -std::exp(-0.5 * std::pow((t - 8.0) / 2.5, 2)) + 0.45 * std::exp(-0.5 * std::pow((t - 17.0) / 4.0, 2));
    }
    const double trough = *std::min_element(w.begin(), w.end());
    for (auto& x : w) x /= -trough;
    return w;
}

double peak_to_peak(std::span<const double> w)
{
    if (w.empty()) return 0.0;
    const auto [lo, hi] = std::minmax_element(w.begin(), w.end());
    return *hi - *lo;
}

std::size_t template_extremum(std::span<const double> w)
{
    if (w.empty()) throw validation_error("template must be nonempty");
    std::size_t best = 0;
    for (std::size_t i = 1; i < w.size(); ++i)
        if (std::fabs(w[i]) > std::fabs(w[best])) best = i;
    for (std::size_t i = 0; i < w.size(); ++i)
        if (i != best && std::fabs(w[i]) == std::fabs(w[best]))
            throw validation_error("template extremum is not unique");
    return best;
}

voltage_trace synthesize_trace(std::span<const std::int64_t> spikes, std::int64_t n_samples, double noise_sd,
                               std::span<const double> waveform, std::uint64_t seed, electrode_coord electrode)
{
    if (n_samples < 0) throw validation_error("synthesize_trace: negative length");
    if (!(noise_sd >= 0.0) || !std::isfinite(noise_sd)) throw validation_error("synthesize_trace: noise SD must be >= 0");
    const auto ext = static_cast<std::int64_t>(template_extremum(waveform));
    voltage_trace tr;
    tr.electrode = electrode;
    tr.samples.assign(static_cast<std::size_t>(n_samples), 0.0);
    if (noise_sd > 0.0) {
        rng gen(seed);
        for (auto& x : tr.samples) x = noise_sd * gen.normal();
    }
    const auto len = static_cast<std::int64_t>(waveform.size());
    for (auto s : spikes) {
        for (std::int64_t k = 0; k < len; ++k) {
            const auto t = s - ext + k;
            if (t >= 0 && t < n_samples) tr.samples[static_cast<std::size_t>(t)] += waveform[static_cast<std::size_t>(k)];
        }
    }
    return tr;
}

double estimate_noise_sd(const voltage_trace& trace)
{
    if (trace.samples.size() < 1000)
        throw validation_error("estimate_noise_sd: need at least 1000 samples, got " + std::to_string(trace.samples.size()));
    auto median = [](std::vector<double>& v) {
        const auto mid = v.size() / 2;
        std::nth_element(v.begin(), v.begin() + static_cast<std::ptrdiff_t>(mid), v.end());
        double m = v[mid];
        if (v.size() % 2 == 0) m = 0.5 * (m + *std::max_element(v.begin(), v.begin() + static_cast<std::ptrdiff_t>(mid)));
        return m;
    };
    std::vector<double> v = trace.samples;
    const double med = median(v);
    for (std::size_t i = 0; i < v.size(); ++i) v[i] = std::fabs(trace.samples[i] - med);
    return 1.4826 * median(v);
}

std::vector<std::int64_t> detect_spikes(const voltage_trace& trace, const detector_params& params)
{
    double sd = estimate_noise_sd(trace);
    if (sd == 0.0) {
        // noiseless input: the median sits on the flat baseline, so scale by the plain SD instead
        const auto& x = trace.samples;
        double m = 0.0, ss = 0.0;
        for (double v : x) m += v;
        m /= static_cast<double>(x.size());
        for (double v : x) ss += (v - m) * (v - m);
        sd = std::sqrt(ss / static_cast<double>(x.size()));
    }
    return detect_spikes(trace, params, sd);
}

std::vector<std::int64_t> detect_spikes(const voltage_trace& trace, const detector_params& params, double noise_sd)
{
    validate(params);
    if (!(noise_sd >= 0.0)) throw validation_error("detect_spikes: noise SD must be >= 0");
    const auto& x = trace.samples;
    const auto n = static_cast<std::int64_t>(x.size());
    for (double v : x)
        if (!std::isfinite(v)) throw validation_error("detect_spikes: non-finite sample");
    std::vector<std::int64_t> out;
    if (n < 2) return out;

    const auto life = std::max<std::int64_t>(1, std::llround(params.peak_lifetime_ms * sample_rate_hz / 1000.0));
    const auto refractory = ms_to_samples(params.refractory_ms);
    const double threshold = params.threshold_k * noise_sd;

    // Positions of the max and min over (i, i + life], earliest on ties.
    std::vector<std::int64_t> ahead_max(static_cast<std::size_t>(n), -1), ahead_min(static_cast<std::size_t>(n), -1);
    std::deque<std::int64_t> dmax, dmin;
    for (std::int64_t i = n - 2; i >= 0; --i) {
        const auto add = i + 1;
        while (!dmax.empty() && x[static_cast<std::size_t>(dmax.front())] <= x[static_cast<std::size_t>(add)]) dmax.pop_front();
        dmax.push_front(add);
        while (!dmin.empty() && x[static_cast<std::size_t>(dmin.front())] >= x[static_cast<std::size_t>(add)]) dmin.pop_front();
        dmin.push_front(add);
        while (dmax.back() > i + life) dmax.pop_back();
        while (dmin.back() > i + life) dmin.pop_back();
        ahead_max[static_cast<std::size_t>(i)] = dmax.back();
        ahead_min[static_cast<std::size_t>(i)] = dmin.back();
    }

    auto at = [&](std::int64_t i) { return x[static_cast<std::size_t>(i)]; };
    std::int64_t i = 0;
    while (i < n - 1) {
        const double xi = at(i);
        const bool is_min = (i == 0 || xi <= at(i - 1)) && xi <= at(i + 1);
        const bool is_max = (i == 0 || xi >= at(i - 1)) && xi >= at(i + 1);
        std::int64_t partner = -1;
        double p2p = 0.0;
        // A partner on the window edge may sit mid-slope; it only counts once it is a turning point.
        if (is_min) {
            const auto j = ahead_max[static_cast<std::size_t>(i)];
            if ((j == n - 1 || at(j) >= at(j + 1)) && at(j) - xi > p2p) p2p = at(j) - xi, partner = j;
        }
        if (is_max) {
            const auto j = ahead_min[static_cast<std::size_t>(i)];
            if ((j == n - 1 || at(j) <= at(j + 1)) && xi - at(j) > p2p) p2p = xi - at(j), partner = j;
        }
        if (partner >= 0 && p2p > threshold) {
            const auto t = std::fabs(xi) >= std::fabs(at(partner)) ? i : partner;
            out.push_back(t);
            i = t + refractory;
            continue;
        }
        ++i;
    }
    return out;
}

spike_raster redetect(const spike_raster& raster, double noise_sd, std::span<const double> waveform,
                      const detector_params& params, std::uint64_t seed)
{
    validate(params);
    spike_raster out(raster.duration_samples());
    for (int e = 0; e < electrode_count; ++e) {
        const auto c = electrode_at(e);
        const auto ch = raster.channel(c);
        const auto tr = synthesize_trace(ch, raster.duration_samples(), noise_sd, waveform,
                                         derive_seed(seed, "trace", static_cast<std::uint64_t>(e)), c);
        for (auto t : detect_spikes(tr, params)) out.append(e, t);
    }
    return out;
}

namespace {

constexpr char trace_magic[4] = {'M', 'E', 'A', 'T'};

void put_le(std::string& out, std::uint64_t v, int bytes)
{
    for (int b = 0; b < bytes; ++b) out.push_back(static_cast<char>((v >> (8 * b)) & 0xFF));
}

std::uint64_t get_le(std::string_view in, std::size_t pos, int bytes)
{
    std::uint64_t v = 0;
    for (int b = 0; b < bytes; ++b) v |= static_cast<std::uint64_t>(static_cast<unsigned char>(in[pos + static_cast<std::size_t>(b)])) << (8 * b);
    return v;
}

}  // namespace

std::string trace_to_bytes(const voltage_trace& trace)
{
    if (!in_grid(trace.electrode)) throw validation_error("trace electrode off grid");
    std::string out(trace_magic, 4);
    put_le(out, static_cast<std::uint64_t>(trace.electrode.row), 2);
    put_le(out, static_cast<std::uint64_t>(trace.electrode.col), 2);
    put_le(out, trace.samples.size(), 8);
    out.reserve(16 + 4 * trace.samples.size());
    for (double v : trace.samples) put_le(out, std::bit_cast<std::uint32_t>(static_cast<float>(v)), 4);
    return out;
}

voltage_trace parse_trace(std::string_view bytes)
{
    if (bytes.size() < 16 || bytes.substr(0, 4) != std::string_view(trace_magic, 4))
        throw validation_error("not a trace file (bad magic)");
    voltage_trace tr;
    tr.electrode = {static_cast<int>(get_le(bytes, 4, 2)), static_cast<int>(get_le(bytes, 6, 2))};
    if (!in_grid(tr.electrode)) throw validation_error("trace electrode off grid");
    const auto count = get_le(bytes, 8, 8);
    if (count > (bytes.size() - 16) / 4 || bytes.size() != 16 + 4 * count)
        throw validation_error("trace sample count does not match file size");
    tr.samples.resize(count);
    for (std::size_t i = 0; i < count; ++i) {
        const auto v = static_cast<double>(std::bit_cast<float>(static_cast<std::uint32_t>(get_le(bytes, 16 + 4 * i, 4))));
        if (!std::isfinite(v)) throw validation_error("trace contains a non-finite sample");
        tr.samples[i] = v;
    }
    return tr;
}

void write_trace(const std::filesystem::path& path, const voltage_trace& trace)
{
    io::write_file(path, trace_to_bytes(trace));
}

voltage_trace read_trace(const std::filesystem::path& path) { return parse_trace(io::read_file(path)); }

}  // namespace mea
