#include "mea/culture.hpp"

#include "mea/errors.hpp"
#include "mea/io_util.hpp"
#include "mea/rng.hpp"

#include <algorithm>
#include <cmath>
#include <limits>
#include <numeric>

namespace mea {

namespace {

struct injection {
    std::uint32_t neuron;
    double mV;
};

struct pending_event {
    std::uint32_t neuron;
    float mV;
};

/// Stimulus currents converted to per-neuron potential steps, one entry per
/// waveform sample starting at `onset`.
struct stimulus_schedule {
    std::int64_t onset = 0;
    std::vector<std::vector<injection>> steps;
};

stimulus_schedule make_schedule(const culture_state& state, const stimulus_pattern& pattern, std::int64_t onset)
{
    stimulus_schedule sched;
    sched.onset = onset;
    const double gain = state.config().stim_gain_mV_per_uA;
    for (double current : render_pulse(pattern.pulse)) {
        std::vector<injection> step;
        if (current != 0.0 && gain != 0.0) {
            for (const auto& pr : pattern.pairs) {
                for (auto n : state.neurons_at(electrode_index(pr.positive))) step.push_back({n, gain * current});
                for (auto n : state.neurons_at(electrode_index(pr.negative))) step.push_back({n, -gain * current});
            }
        }
        sched.steps.push_back(std::move(step));
    }
    return sched;
}

/// Exact event-driven integration over [0, duration).
spike_raster simulate(const culture_state& state, std::int64_t duration, std::uint64_t seed,
                      const stimulus_schedule* stim)
{
    const auto& cfg = state.config();
    const std::size_t n = state.neuron_count();
    spike_raster raster(duration);
    if (duration == 0 || n == 0) return raster;

    const double gap = cfg.threshold_mV - cfg.reset_mV;
    const double tau_samples = cfg.membrane_tau_ms * sample_rate_hz / 1000.0;
    const std::int64_t refractory = ms_to_samples(cfg.refractory_ms);

    // Background Poisson events, drawn neuron by neuron.
    std::vector<std::pair<std::int64_t, std::uint32_t>> background;
    if (cfg.background_rate_hz > 0.0) {
        rng gen(seed);
        const double rate = cfg.background_rate_hz;
        const double horizon = static_cast<double>(duration) / sample_rate_hz;
        background.reserve(static_cast<std::size_t>(rate * horizon * static_cast<double>(n) * 1.1) + 16);
        for (std::size_t i = 0; i < n; ++i) {
            double t = gen.exponential(rate);
            while (t < horizon) {
                const auto s = static_cast<std::int64_t>(t * sample_rate_hz);
                if (s < duration) background.emplace_back(s, static_cast<std::uint32_t>(i));
                t += gen.exponential(rate);
            }
        }
        std::sort(background.begin(), background.end());
    }

    std::vector<double> v(n, 0.0);
    std::vector<std::int64_t> last(n, 0);
    std::vector<std::int64_t> refractory_until(n, std::numeric_limits<std::int64_t>::min());
    std::vector<double> input(n, 0.0);
    std::vector<std::uint8_t> touched_flag(n, 0);
    std::vector<std::uint32_t> touched;

    const auto ring_len = static_cast<std::size_t>(state.max_delay_samples()) + 1;
    std::vector<std::vector<pending_event>> ring(ring_len);
    std::size_t in_flight = 0;

    auto touch = [&](std::uint32_t neuron, double mV) {
        input[neuron] += mV;
        if (!touched_flag[neuron]) {
            touched_flag[neuron] = 1;
            touched.push_back(neuron);
        }
    };

    std::size_t bg = 0;
    const std::int64_t stim_begin = stim ? stim->onset : duration;
    const std::int64_t stim_end = stim ? stim->onset + static_cast<std::int64_t>(stim->steps.size()) : duration;

    for (std::int64_t t = 0; t < duration; ++t) {
        // Skip quiet stretches.
        if (in_flight == 0 && (bg >= background.size() || background[bg].first > t) && !(t >= stim_begin && t < stim_end)) {
            std::int64_t next = duration;
            if (bg < background.size()) next = std::min(next, background[bg].first);
            if (t < stim_begin) next = std::min(next, stim_begin);
            if (next >= duration) break;
            t = next;
        }

        if (t >= stim_begin && t < stim_end) {
            for (const auto& inj : stim->steps[static_cast<std::size_t>(t - stim_begin)]) touch(inj.neuron, inj.mV);
        }
        auto& bucket = ring[static_cast<std::size_t>(t) % ring_len];
        for (const auto& ev : bucket) touch(ev.neuron, ev.mV);
        in_flight -= bucket.size();
        bucket.clear();
        while (bg < background.size() && background[bg].first == t) touch(background[bg++].second, gap);

        for (auto neuron : touched) {
            const double in = input[neuron];
            input[neuron] = 0.0;
            touched_flag[neuron] = 0;
            if (t < refractory_until[neuron]) continue;
            double vm = v[neuron];
            if (vm != 0.0) vm *= std::exp(-static_cast<double>(t - last[neuron]) / tau_samples);
            vm += in;
            last[neuron] = t;
            if (vm >= gap) {
                raster.append(state.electrode_of(neuron), t);
                vm = 0.0;
                refractory_until[neuron] = t + refractory;
                for (const auto& syn : state.outgoing(neuron)) {
                    ring[static_cast<std::size_t>(t + syn.delay_samples) % ring_len].push_back({syn.target, syn.weight_mV});
                    ++in_flight;
                }
            }
            v[neuron] = vm;
        }
        touched.clear();
    }
    return raster;
}

}  // namespace

std::int64_t ms_to_samples(double ms) noexcept
{
    return static_cast<std::int64_t>(std::ceil(ms * sample_rate_hz / 1000.0 - 1e-9));
}

void validate(const culture_config& c)
{
    auto fail = [](const std::string& m) { throw validation_error("culture config: " + m); };
    if (c.neurons_per_electrode < 1) fail("neurons_per_electrode must be >= 1");
    if (!(c.membrane_tau_ms > 0.0)) fail("membrane_tau_ms must be > 0");
    if (!(c.refractory_ms > 0.0)) fail("refractory_ms must be > 0");
    if (!(c.threshold_mV > c.reset_mV)) fail("threshold_mV must exceed reset_mV");
    if (!(c.synapse_sparsity > 0.0 && c.synapse_sparsity <= 1.0)) fail("synapse_sparsity must be in (0, 1]");
    if (!(c.synaptic_weight_scale >= 0.0)) fail("synaptic_weight_scale must be >= 0");
    if (!(c.connection_radius >= 0.0)) fail("connection_radius must be >= 0");
    if (!(c.background_rate_hz >= 0.0)) fail("background_rate_hz must be >= 0");
    if (!std::isfinite(c.stim_gain_mV_per_uA)) fail("stim_gain_mV_per_uA must be finite");
    if (!(c.synaptic_delay_ms > 0.0) || c.synaptic_delay_ms > 1000.0) fail("synaptic_delay_ms must be in (0, 1000]");
    if (!(c.excitatory_fraction >= 0.0 && c.excitatory_fraction <= 1.0)) fail("excitatory_fraction must be in [0, 1]");
    if (c.culture_rows < 1 || c.culture_rows > grid_side || c.culture_cols < 1 || c.culture_cols > grid_side)
        fail("culture extent must lie within the 64x64 grid");
}

void validate(const protocol_spec& p)
{
    auto fail = [](const std::string& m) { throw validation_error("protocol: " + m); };
    if (p.repetitions < 2) fail("repetitions must be >= 2");
    if (!(p.interval_s > 0.0)) fail("interval_s must be > 0");
    if (!(p.pre_window_ms >= 10.0)) fail("pre_window_ms must be >= 10");
    if (!(p.post_window_ms >= 10.0)) fail("post_window_ms must be >= 10");
}

std::vector<double> render_pulse(const pulse_spec& pulse, int sample_rate)
{
    if (sample_rate != sample_rate_hz) throw validation_error("render_pulse: sample rate must be 20000 Hz");
    auto samples = [&](double width_us) {
        return static_cast<std::size_t>(std::ceil(width_us * sample_rate / 1e6 - 1e-9));
    };
    const auto n_pos = samples(pulse.width_pos_us);
    const auto n_neg = pulse.shape == pulse_shape::biphasic ? samples(pulse.width_neg_us) : 0;
    std::vector<double> wave;
    wave.reserve(n_pos + n_neg);
    wave.insert(wave.end(), n_pos, pulse.amplitude_ua);
    wave.insert(wave.end(), n_neg, -pulse.amplitude_ua);
    // -0.0 for a zero-amplitude negative phase reads oddly in dumps.
    for (auto& x : wave)
        if (x == 0.0) x = 0.0;
    return wave;
}

std::span<const synapse> culture_state::outgoing(std::size_t neuron) const
{
    if (neuron >= neuron_count()) throw bounds_error("neuron index out of range");
    return {synapses_.data() + syn_offsets_[neuron], syn_offsets_[neuron + 1] - syn_offsets_[neuron]};
}

std::span<const std::uint32_t> culture_state::neurons_at(int electrode) const
{
    if (electrode < 0 || electrode >= electrode_count) throw bounds_error("electrode index out of range");
    const auto e = static_cast<std::size_t>(electrode);
    return {electrode_neurons_.data() + electrode_offsets_[e], electrode_offsets_[e + 1] - electrode_offsets_[e]};
}

culture_state build_culture(const culture_config& config)
{
    validate(config);
    culture_state s;
    s.config_ = config;
    const int npe = config.neurons_per_electrode;

    s.electrode_offsets_.assign(static_cast<std::size_t>(electrode_count) + 1, 0);
    for (int e = 0; e < electrode_count; ++e) {
        const auto c = electrode_at(e);
        const bool populated = c.row < config.culture_rows && c.col < config.culture_cols;
        s.electrode_offsets_[static_cast<std::size_t>(e) + 1] = s.electrode_offsets_[static_cast<std::size_t>(e)];
        if (!populated) continue;
        for (int k = 0; k < npe; ++k) {
            const auto id = static_cast<std::uint32_t>(s.neuron_electrode_.size());
            s.neuron_electrode_.push_back(e);
            s.electrode_neurons_.push_back(id);
        }
        s.electrode_offsets_[static_cast<std::size_t>(e) + 1] += static_cast<std::size_t>(npe);
    }

    rng gen(config.seed);
    const std::size_t n = s.neuron_electrode_.size();
    s.excitatory_.resize(n);
    for (std::size_t i = 0; i < n; ++i) s.excitatory_[i] = gen.bernoulli(config.excitatory_fraction) ? 1 : 0;

    const double delay_samples = config.synaptic_delay_ms * sample_rate_hz / 1000.0;
    const int reach = static_cast<int>(std::floor(config.connection_radius));
    const double r2 = config.connection_radius * config.connection_radius;
    s.syn_offsets_.assign(n + 1, 0);
    for (std::size_t i = 0; i < n; ++i) {
        const auto src = electrode_at(s.neuron_electrode_[i]);
        const float sign = s.excitatory_[i] ? 1.0f : -1.0f;
        for (int r = std::max(0, src.row - reach); r <= std::min(config.culture_rows - 1, src.row + reach); ++r) {
            for (int c = std::max(0, src.col - reach); c <= std::min(config.culture_cols - 1, src.col + reach); ++c) {
                const double dr = r - src.row, dc = c - src.col;
                if (dr * dr + dc * dc > r2 + 1e-12) continue;
                for (auto j : s.neurons_at(electrode_index({r, c}))) {
                    if (j == i) continue;
                    if (!gen.bernoulli(config.synapse_sparsity)) continue;
                    const auto w = static_cast<float>(config.synaptic_weight_scale * gen.uniform_open0());
                    const auto d = std::max<long>(1, std::lround(delay_samples * (0.5 + gen.uniform01())));
                    const auto delay = static_cast<std::uint16_t>(std::min<long>(d, 65535));
                    s.synapses_.push_back({j, sign * w, delay});
                    s.max_delay_ = std::max<int>(s.max_delay_, delay);
                }
            }
        }
        s.syn_offsets_[i + 1] = s.synapses_.size();
    }
    return s;
}

trial_recording run_trial(const culture_state& state, const stimulus_pattern& pattern, const protocol_spec& protocol,
                          std::uint64_t trial_seed)
{
    require_valid(pattern);
    validate(protocol);
    const auto pre = ms_to_samples(protocol.pre_window_ms);
    const auto post = ms_to_samples(protocol.post_window_ms);
    const auto sched = make_schedule(state, pattern, pre);
    const auto duration = pre + static_cast<std::int64_t>(sched.steps.size()) + post;
    return {simulate(state, duration, trial_seed, &sched), pre, pattern.class_label};
}

std::vector<trial_recording> run_protocol(const culture_state& state, const stimulus_pattern& pattern,
                                          const protocol_spec& protocol, std::uint64_t seed)
{
    validate(protocol);
    std::vector<trial_recording> out;
    out.reserve(static_cast<std::size_t>(protocol.repetitions));
    for (int i = 0; i < protocol.repetitions; ++i)
        out.push_back(run_trial(state, pattern, protocol, derive_seed(seed, "trial", static_cast<std::uint64_t>(i))));
    return out;
}

spike_raster simulate_spontaneous(const culture_state& state, double duration_s, std::uint64_t seed)
{
    if (!(duration_s > 0.0)) throw validation_error("simulate_spontaneous: duration must be > 0");
    const auto duration = static_cast<std::int64_t>(std::llround(duration_s * sample_rate_hz));
    return simulate(state, duration, seed, nullptr);
}

std::vector<electrode_coord> find_hotspots(const spike_raster& raster, int k, int min_separation, grid_box candidates)
{
    if (k < 1) throw validation_error("find_hotspots: k must be >= 1");
    std::vector<int> order;
    for (int e = 0; e < electrode_count; ++e)
        if (candidates.contains(electrode_at(e))) order.push_back(e);
    const auto counts = raster.counts();
    std::stable_sort(order.begin(), order.end(), [&](int a, int b) {
        return counts[static_cast<std::size_t>(a)] > counts[static_cast<std::size_t>(b)];
    });

    std::vector<electrode_coord> chosen;
    for (int e : order) {
        const auto c = electrode_at(e);
        const bool clear = std::all_of(chosen.begin(), chosen.end(),
                                       [&](electrode_coord o) { return chebyshev_distance(o, c) >= min_separation; });
        if (!clear) continue;
        chosen.push_back(c);
        if (static_cast<int>(chosen.size()) == k) return chosen;
    }
    throw validation_error("find_hotspots: only " + std::to_string(chosen.size()) + " electrode(s) satisfy separation " +
                           std::to_string(min_separation) + ", " + std::to_string(k) + " requested");
}

void write_trial(const std::filesystem::path& path, const trial_recording& trial)
{
    const std::string meta[] = {"onset_sample=" + std::to_string(trial.stimulus_onset_sample) +
                                " label=" + std::to_string(trial.pattern_label)};
    write_raster(path, trial.raster, meta);
}

trial_recording read_trial(const std::filesystem::path& path)
{
    auto parsed = read_raster(path);
    trial_recording out{std::move(parsed.raster), -1, 0};
    for (const auto& c : parsed.comments) {
        for (auto tok : io::split(c, ' ')) {
            auto kv = io::split(tok, '=');
            if (kv.size() != 2) continue;
            if (kv[0] == "onset_sample") out.stimulus_onset_sample = io::parse_int(kv[1]);
            if (kv[0] == "label") out.pattern_label = static_cast<int>(io::parse_int(kv[1]));
        }
    }
    if (out.stimulus_onset_sample < 0) throw validation_error("trial file lacks onset_sample: " + path.string());
    return out;
}

}  // namespace mea
