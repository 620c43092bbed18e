#include "mea/config.hpp"

#include "mea/errors.hpp"
#include "mea/io_util.hpp"

#include <algorithm>
#include <charconv>
#include <functional>
#include <set>

namespace mea {

std::string_view to_string(scenario s) noexcept
{
    switch (s) {
    case scenario::pointwise: return "pointwise";
    case scenario::bars: return "bars";
    case scenario::digits: return "digits";
    }
    return "?";
}

scenario parse_scenario(std::string_view s)
{
    s = io::trim(s);
    for (auto k : all_scenarios)
        if (to_string(k) == s) return k;
    throw validation_error("unknown scenario '" + std::string(s) + "' (expected pointwise, bars or digits)");
}

namespace {

struct binding {
    std::string key;
    std::function<void(experiment_config&, std::string_view)> set;
    std::function<std::string(const experiment_config&)> get;
};

template <class T>
binding real(std::string key, T experiment_config::*section, double T::*field)
{
    return {std::move(key), [=](experiment_config& c, std::string_view v) { (c.*section).*field = io::parse_double(v); },
            [=](const experiment_config& c) { return io::format_double((c.*section).*field); }};
}

template <class T>
binding integer(std::string key, T experiment_config::*section, int T::*field)
{
    return {std::move(key),
            [=](experiment_config& c, std::string_view v) { (c.*section).*field = static_cast<int>(io::parse_int(v)); },
            [=](const experiment_config& c) { return std::to_string((c.*section).*field); }};
}

std::uint64_t parse_u64(std::string_view v)
{
    v = io::trim(v);
    std::uint64_t out = 0;
    auto [p, ec] = std::from_chars(v.data(), v.data() + v.size(), out);
    if (ec != std::errc() || p != v.data() + v.size() || v.empty())
        throw validation_error("expected an unsigned 64-bit integer, got '" + std::string(v) + "'");
    return out;
}

template <class T>
binding seed(std::string key, T experiment_config::*section, std::uint64_t T::*field)
{
    return {std::move(key), [=](experiment_config& c, std::string_view v) { (c.*section).*field = parse_u64(v); },
            [=](const experiment_config& c) { return std::to_string((c.*section).*field); }};
}

bool parse_bool(std::string_view v)
{
    v = io::trim(v);
    if (v == "true" || v == "1") return true;
    if (v == "false" || v == "0") return false;
    throw validation_error("expected true or false, got '" + std::string(v) + "'");
}

const std::vector<binding>& bindings()
{
    using C = experiment_config;
    static const std::vector<binding> table = [] {
        std::vector<binding> b;
        b.push_back({"experiment.scenario",
                     [](C& c, std::string_view v) {
                         c.scenarios.clear();
                         for (auto s : io::split(v, ',')) {
                             s = io::trim(s);
                             if (s == "all") {
                                 c.scenarios.assign(std::begin(all_scenarios), std::end(all_scenarios));
                                 continue;
                             }
                             c.scenarios.push_back(parse_scenario(s));
                         }
                     },
                     [](const C& c) {
                         std::string out;
                         for (auto s : c.scenarios) {
                             if (!out.empty()) out += ',';
                             out += to_string(s);
                         }
                         return out;
                     }});
        b.push_back({"experiment.master_seed", [](C& c, std::string_view v) { c.master_seed = parse_u64(v); },
                     [](const C& c) { return std::to_string(c.master_seed); }});
        b.push_back({"experiment.repeats", [](C& c, std::string_view v) { c.repeats = static_cast<int>(io::parse_int(v)); },
                     [](const C& c) { return std::to_string(c.repeats); }});
        b.push_back({"experiment.margin", [](C& c, std::string_view v) { c.margin = static_cast<int>(io::parse_int(v)); },
                     [](const C& c) { return std::to_string(c.margin); }});
        b.push_back({"experiment.spontaneous_s", [](C& c, std::string_view v) { c.spontaneous_s = io::parse_double(v); },
                     [](const C& c) { return io::format_double(c.spontaneous_s); }});
        b.push_back({"experiment.noise_windows",
                     [](C& c, std::string_view v) { c.noise_windows = static_cast<int>(io::parse_int(v)); },
                     [](const C& c) { return std::to_string(c.noise_windows); }});
        b.push_back({"experiment.hotspot_border",
                     [](C& c, std::string_view v) { c.hotspot_border = static_cast<int>(io::parse_int(v)); },
                     [](const C& c) { return std::to_string(c.hotspot_border); }});
        b.push_back({"experiment.detect_from_traces", [](C& c, std::string_view v) { c.detect_from_traces = parse_bool(v); },
                     [](const C& c) { return std::string(c.detect_from_traces ? "true" : "false"); }});

        b.push_back(integer("culture.neurons_per_electrode", &C::culture, &culture_config::neurons_per_electrode));
        b.push_back(real("culture.membrane_tau_ms", &C::culture, &culture_config::membrane_tau_ms));
        b.push_back(real("culture.threshold_mV", &C::culture, &culture_config::threshold_mV));
        b.push_back(real("culture.reset_mV", &C::culture, &culture_config::reset_mV));
        b.push_back(real("culture.refractory_ms", &C::culture, &culture_config::refractory_ms));
        b.push_back(real("culture.synapse_sparsity", &C::culture, &culture_config::synapse_sparsity));
        b.push_back(real("culture.synaptic_weight_scale", &C::culture, &culture_config::synaptic_weight_scale));
        b.push_back(real("culture.connection_radius", &C::culture, &culture_config::connection_radius));
        b.push_back(real("culture.background_rate_hz", &C::culture, &culture_config::background_rate_hz));
        b.push_back(real("culture.stim_gain_mV_per_uA", &C::culture, &culture_config::stim_gain_mV_per_uA));
        b.push_back(real("culture.synaptic_delay_ms", &C::culture, &culture_config::synaptic_delay_ms));
        b.push_back(real("culture.excitatory_fraction", &C::culture, &culture_config::excitatory_fraction));
        b.push_back(integer("culture.culture_rows", &C::culture, &culture_config::culture_rows));
        b.push_back(integer("culture.culture_cols", &C::culture, &culture_config::culture_cols));
        b.push_back(seed("culture.seed", &C::culture, &culture_config::seed));

        b.push_back(integer("protocol.repetitions", &C::protocol, &protocol_spec::repetitions));
        b.push_back(real("protocol.interval_s", &C::protocol, &protocol_spec::interval_s));
        b.push_back(real("protocol.pre_window_ms", &C::protocol, &protocol_spec::pre_window_ms));
        b.push_back(real("protocol.post_window_ms", &C::protocol, &protocol_spec::post_window_ms));

        b.push_back(integer("esn.n_units", &C::esn, &esn_config::n_units));
        b.push_back(real("esn.sparsity", &C::esn, &esn_config::sparsity));
        b.push_back(real("esn.spectral_radius", &C::esn, &esn_config::spectral_radius));
        b.push_back(real("esn.input_scale", &C::esn, &esn_config::input_scale));
        b.push_back(seed("esn.seed", &C::esn, &esn_config::seed));

        b.push_back(integer("split.n_train", &C::split, &split_spec::n_train));
        b.push_back(integer("split.n_test", &C::split, &split_spec::n_test));
        b.push_back(seed("split.seed", &C::split, &split_spec::seed));

        b.push_back(integer("train.epochs", &C::train, &train_spec::epochs));
        b.push_back(real("train.learning_rate", &C::train, &train_spec::learning_rate));
        b.push_back(integer("train.batch_size", &C::train, &train_spec::batch_size));
        b.push_back(seed("train.seed", &C::train, &train_spec::seed));
        b.push_back({"train.feature_scale", [](C& c, std::string_view v) { c.feature_scale = io::parse_double(v); },
                     [](const C& c) { return io::format_double(c.feature_scale); }});

        b.push_back(real("detect.threshold_k", &C::detect, &detector_params::threshold_k));
        b.push_back(real("detect.peak_lifetime_ms", &C::detect, &detector_params::peak_lifetime_ms));
        b.push_back(real("detect.refractory_ms", &C::detect, &detector_params::refractory_ms));
        b.push_back({"detect.noise_sd_uV", [](C& c, std::string_view v) { c.trace_noise_sd_uV = io::parse_double(v); },
                     [](const C& c) { return io::format_double(c.trace_noise_sd_uV); }});
        b.push_back({"detect.template_p2p_uV",
                     [](C& c, std::string_view v) { c.trace_template_p2p_uV = io::parse_double(v); },
                     [](const C& c) { return io::format_double(c.trace_template_p2p_uV); }});
        return b;
    }();
    return table;
}

}  // namespace

void validate(const experiment_config& c)
{
    auto fail = [](const std::string& m) { throw validation_error("experiment config: " + m); };
    if (c.scenarios.empty()) fail("no scenario selected");
    if (c.repeats < 1) fail("repeats must be >= 1");
    if (c.margin < 0) fail("margin must be >= 0");
    if (!(c.spontaneous_s > 0.0)) fail("spontaneous_s must be > 0");
    if (c.noise_windows < 1) fail("noise_windows must be >= 1");
    if (c.hotspot_border < 0 || 2 * c.hotspot_border >= grid_side) fail("hotspot_border must be in [0, 31]");
    if (!(c.feature_scale > 0.0) || !std::isfinite(c.feature_scale)) fail("feature_scale must be > 0");
    if (!(c.trace_noise_sd_uV >= 0.0)) fail("detect.noise_sd_uV must be >= 0");
    if (!(c.trace_template_p2p_uV > 0.0)) fail("detect.template_p2p_uV must be > 0");
    if (c.split.n_train < 1 || c.split.n_test < 1) fail("split sizes must be >= 1");
    if (c.split.n_train + c.split.n_test != c.protocol.repetitions)
        fail("split.n_train + split.n_test must equal protocol.repetitions");
    if (c.train.epochs < 1 || c.train.batch_size < 1) fail("train.epochs and train.batch_size must be >= 1");
    if (!(c.train.learning_rate >= 0.0) || !std::isfinite(c.train.learning_rate)) fail("train.learning_rate must be >= 0");
    if (c.esn.n_units != electrode_count) fail("esn.n_units must be 4096 (one unit per electrode)");
    validate(c.culture);
    validate(c.protocol);
    validate(c.esn);
    validate(c.detect);
}

experiment_config parse_config(std::string_view text, experiment_config base)
{
    std::set<std::string, std::less<>> seen;
    std::size_t line_no = 0;
    for (auto line : io::lines(text)) {
        ++line_no;
        if (auto hash = line.find('#'); hash != std::string_view::npos) line = line.substr(0, hash);
        line = io::trim(line);
        if (line.empty()) continue;
        const auto eq = line.find('=');
        const auto where = " (line " + std::to_string(line_no) + ")";
        if (eq == std::string_view::npos) throw validation_error("config: expected 'key = value'" + where);
        const auto key = io::trim(line.substr(0, eq));
        const auto value = io::trim(line.substr(eq + 1));
        const auto& table = bindings();
        auto it = std::find_if(table.begin(), table.end(), [&](const binding& b) { return b.key == key; });
        if (it == table.end()) throw validation_error("config: unknown key '" + std::string(key) + "'" + where);
        if (!seen.insert(std::string(key)).second)
            throw validation_error("config: duplicate key '" + std::string(key) + "'" + where);
        if (value.empty()) throw validation_error("config: empty value for '" + std::string(key) + "'" + where);
        try {
            it->set(base, value);
        } catch (const validation_error& e) {
            throw validation_error("config: " + std::string(key) + ": " + e.what() + where);
        }
    }
    return base;
}

experiment_config read_config(const std::filesystem::path& path, experiment_config base)
{
    return parse_config(io::read_file(path), std::move(base));
}

std::string config_to_text(const experiment_config& config)
{
    std::string out;
    std::string section;
    for (const auto& b : bindings()) {
        const auto dot = b.key.find('.');
        const auto sec = b.key.substr(0, dot);
        if (sec != section) {
            if (!section.empty()) out += '\n';
            section = sec;
        }
        out += b.key + " = " + b.get(config) + "\n";
    }
    return out;
}

std::vector<std::string> config_keys()
{
    std::vector<std::string> keys;
    for (const auto& b : bindings()) keys.push_back(b.key);
    return keys;
}

}  // namespace mea
