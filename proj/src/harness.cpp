#include "mea/harness.hpp"

#include "mea/errors.hpp"
#include "mea/io_util.hpp"
#include "mea/response_stats.hpp"
#include "mea/rng.hpp"

#include <openssl/evp.h>

#include <algorithm>
#include <cmath>
#include <cstdio>
#include <map>

namespace mea {

std::uint64_t seed_derivation(std::uint64_t master_seed, std::string_view stage_tag, std::uint64_t index)
{
    return derive_seed(master_seed, stage_tag, index);
}

std::vector<stimulus_pattern> scenario_patterns(scenario s, const spike_raster& spontaneous, int border)
{
    const grid_box box{border, grid_side - 1 - border, border, grid_side - 1 - border};
    std::vector<stimulus_pattern> out;
    switch (s) {
    case scenario::pointwise: {
        const auto hs = find_hotspots(spontaneous, 4, hotspot_separation, box);
        for (int k = 0; k < 4; ++k) out.push_back(make_pointwise(hs[static_cast<std::size_t>(k)], direction::east, k));
        break;
    }
    case scenario::bars: {
        const auto c = find_hotspots(spontaneous, 1, hotspot_separation, box).front();
        const int deg[] = {0, 45, 90, 135};
        for (int k = 0; k < 4; ++k) out.push_back(make_bar(c, deg[k], k));
        break;
    }
    case scenario::digits: {
        const auto c = find_hotspots(spontaneous, 1, hotspot_separation, box).front();
        out.push_back(make_digit(0, {c.row - 2, c.col - 2}, 0));
        out.push_back(make_digit(1, {c.row - 3, c.col}, 1));
        out.push_back(make_digit(8, {c.row - 2, c.col - 2}, 2));
        break;
    }
    }
    return out;
}

std::vector<std::string> class_names(scenario s)
{
    switch (s) {
    case scenario::pointwise: return {"Point 1", "Point 2", "Point 3", "Point 4"};
    case scenario::bars:
        return {"Bar 1 (0 degrees)", "Bar 2 (45 degrees)", "Bar 3 (90 degrees)", "Bar 4 (135 degrees)"};
    case scenario::digits: return {"Digit 0", "Digit 1", "Digit 8"};
    }
    return {};
}

namespace {

std::string_view scenario_title(scenario s)
{
    switch (s) {
    case scenario::pointwise: return "Pointwise Stimuli";
    case scenario::bars: return "Oriented Bars";
    case scenario::digits: return "Digit Recognition";
    }
    return "?";
}

struct mean_sd {
    double mean = 0.0;
    double sd = 0.0;
};

mean_sd describe(const std::vector<double>& xs)
{
    mean_sd out;
    if (xs.empty()) return out;
    for (double x : xs) out.mean += x;
    out.mean /= static_cast<double>(xs.size());
    if (xs.size() > 1) {
        double ss = 0.0;
        for (double x : xs) ss += (x - out.mean) * (x - out.mean);
        out.sd = std::sqrt(ss / static_cast<double>(xs.size() - 1));
    }
    return out;
}

std::string fixed4(double v)
{
    char buf[64];
    std::snprintf(buf, sizeof buf, "%.4f", v);
    return buf;
}

// Records artifacts written during a run so the manifest covers exactly them.
class artifact_writer {
public:
    explicit artifact_writer(std::filesystem::path root) : root_(std::move(root)) {}

    bool enabled() const noexcept { return !root_.empty(); }

    void text(const std::string& rel, std::string_view content)
    {
        if (!enabled()) return;
        io::write_file(root_ / rel, content);
        written_.push_back(rel);
    }

    const std::filesystem::path& root() const noexcept { return root_; }
    const std::vector<std::string>& written() const noexcept { return written_; }

private:
    std::filesystem::path root_;
    std::vector<std::string> written_;
};

template <class F>
auto stage(const std::string& name, F&& f) -> decltype(f())
{
    try {
        return f();
    } catch (const bounds_error& e) {
        throw bounds_error(name + ": " + e.what());
    } catch (const validation_error& e) {
        throw validation_error(name + ": " + e.what());
    } catch (const numeric_error& e) {
        throw numeric_error(name + ": " + e.what());
    } catch (const io_error& e) {
        throw io_error(name + ": " + e.what());
    }
}

scenario_result run_scenario(const experiment_config& cfg, scenario s, const culture_state& culture,
                             const spike_raster& spontaneous, const sparse_matrix& reservoir, const noise_model& noise,
                             artifact_writer& out, const progress_fn& progress)
{
    const std::string name(to_string(s));
    const auto patterns = stage(name + "/patterns", [&] { return scenario_patterns(s, spontaneous, cfg.hotspot_border); });
    out.text(name + "/patterns.txt", patterns_to_text(patterns));

    auto waveform = default_template();
    const double p2p = peak_to_peak(waveform);
    for (auto& x : waveform) x *= cfg.trace_template_p2p_uV / p2p;

    std::vector<dataset> brc_data, esn_data;
    for (const auto& pattern : patterns) {
        const auto label = static_cast<std::uint64_t>(pattern.class_label);
        const auto dir = name + "/" + std::to_string(pattern.class_label) + "/";
        if (progress) progress(name + ": pattern " + std::to_string(label) + " (" + std::to_string(pattern.pairs.size()) + " pairs)");

        auto trials = stage(name + "/protocol", [&] {
            return run_protocol(culture, pattern, cfg.protocol, seed_derivation(cfg.master_seed, "protocol/" + name, label));
        });
        if (cfg.detect_from_traces) {
            stage(name + "/detect", [&] {
                for (std::size_t i = 0; i < trials.size(); ++i)
                    trials[i].raster = redetect(trials[i].raster, cfg.trace_noise_sd_uV, waveform, cfg.detect,
                                                seed_derivation(cfg.master_seed, "traces/" + name, label * 1000 + i));
                return 0;
            });
        }

        dataset brc, esn;
        std::vector<labeled_sample> raw;
        for (std::size_t i = 0; i < trials.size(); ++i) {
            const int id = static_cast<int>(i);
            if (out.enabled()) {
                const std::string meta[] = {"onset_sample=" + std::to_string(trials[i].stimulus_onset_sample) +
                                            " label=" + std::to_string(trials[i].pattern_label)};
                out.text(dir + "trial_" + std::to_string(i) + ".raster", raster_to_text(trials[i].raster, meta));
            }
            const auto fv = stage(name + "/features", [&] { return extract(trials[i], pattern, chunk_samples, cfg.margin, id); });
            raw.push_back(raw_counts(fv));
            brc.push_back(to_sample(fv, cfg.feature_scale));
            esn.push_back(stage(name + "/esn", [&] {
                return esn_sample(reservoir, pattern, noise, seed_derivation(cfg.master_seed, "esn-noise/" + name, label * 1000 + i),
                                  id, cfg.esn.input_scale);
            }));
        }
        if (out.enabled()) {
            out.text(dir + "features.csv", features_to_csv(raw));
            out.text(dir + "esn_features.csv", features_to_csv(esn));
            const auto map = stage(name + "/respmap", [&] { return aggregate(trials); });
            out.text(dir + "response_map.ppm", map_image_bytes(map));
            out.text(dir + "response_map.csv", map_to_csv(map));
        }
        brc_data.push_back(std::move(brc));
        esn_data.push_back(std::move(esn));
    }

    const int k = static_cast<int>(patterns.size());
    std::vector<evaluation> brc_eval, esn_eval;
    std::string per_repeat = "repeat,brc_accuracy,esn_accuracy\n";
    for (int r = 0; r < cfg.repeats; ++r) {
        const auto ur = static_cast<std::uint64_t>(r);
        split_spec sp = cfg.split;
        sp.seed = seed_derivation(cfg.master_seed, "split/" + name, ur);
        train_spec tr = cfg.train;
        tr.seed = seed_derivation(cfg.master_seed, "train/" + name, ur);

        const auto brc_split = stage(name + "/split", [&] { return split(brc_data, sp); });
        const auto esn_split = stage(name + "/split", [&] { return split(esn_data, sp); });
        const auto brc_model = stage(name + "/train", [&] { return train(brc_split.train, tr, k); });
        const auto esn_model = stage(name + "/train", [&] { return train(esn_split.train, tr, k); });
        brc_eval.push_back(evaluate(brc_model, brc_split.test));
        esn_eval.push_back(evaluate(esn_model, esn_split.test));
        out.text(name + "/models/brc_" + std::to_string(r) + ".txt", model_to_text(brc_model));
        out.text(name + "/models/esn_" + std::to_string(r) + ".txt", model_to_text(esn_model));
        per_repeat += std::to_string(r) + "," + fixed4(brc_eval.back().accuracy) + "," + fixed4(esn_eval.back().accuracy) + "\n";
    }
    out.text(name + "/accuracy.csv", per_repeat);
    return summarize(s, brc_eval, esn_eval);
}

}  // namespace

scenario_result summarize(scenario s, const std::vector<evaluation>& brc, const std::vector<evaluation>& esn)
{
    if (brc.empty() || brc.size() != esn.size()) throw validation_error("summarize: need matching, nonempty evaluations");
    const auto names = class_names(s);
    scenario_result res;
    res.kind = s;
    for (std::size_t c = 0; c < names.size(); ++c) {
        std::vector<double> b, e;
        for (std::size_t r = 0; r < brc.size(); ++r) {
            if (brc[r].per_class_recall.size() != names.size() || esn[r].per_class_recall.size() != names.size())
                throw validation_error("summarize: class count does not match the scenario");
            b.push_back(brc[r].per_class_recall[c]);
            e.push_back(esn[r].per_class_recall[c]);
        }
        const auto bs = describe(b), es = describe(e);
        res.classes.push_back({names[c], bs.mean, bs.sd, es.mean, es.sd});
    }
    for (std::size_t r = 0; r < brc.size(); ++r) {
        res.brc_accuracy.push_back(brc[r].accuracy);
        res.esn_accuracy.push_back(esn[r].accuracy);
    }
    res.average.name = "Average";
    for (const auto& row : res.classes) {
        res.average.brc_mean += row.brc_mean;
        res.average.esn_mean += row.esn_mean;
    }
    res.average.brc_mean /= static_cast<double>(res.classes.size());
    res.average.esn_mean /= static_cast<double>(res.classes.size());
    res.average.brc_sd = describe(res.brc_accuracy).sd;
    res.average.esn_sd = describe(res.esn_accuracy).sd;
    return res;
}

results_table run_experiment(const experiment_config& cfg, const std::filesystem::path& out_dir, const progress_fn& progress)
{
    validate(cfg);
    artifact_writer out(out_dir);
    out.text("config.cfg", config_to_text(cfg));

    if (progress) progress("building culture");
    const auto culture = stage("culture", [&] { return build_culture(cfg.culture); });
    if (progress) progress("simulating spontaneous activity");
    const auto spontaneous = stage("spontaneous", [&] {
        return simulate_spontaneous(culture, cfg.spontaneous_s, seed_derivation(cfg.master_seed, "spontaneous", 0));
    });
    out.text("spontaneous.raster", raster_to_text(spontaneous));
    const auto noise = stage("noise", [&] {
        return estimate_noise(spontaneous, cfg.noise_windows, seed_derivation(cfg.master_seed, "noise-windows", 0));
    });
    if (progress) progress("building ESN reservoir");
    const auto reservoir = stage("esn", [&] { return build_reservoir(cfg.esn); });

    results_table table;
    for (auto s : cfg.scenarios) table.scenarios.push_back(run_scenario(cfg, s, culture, spontaneous, reservoir, noise, out, progress));

    out.text("results.csv", results_to_csv(table));
    out.text("report.txt", results_to_text(table));
    if (out.enabled()) io::write_file(out_dir / "manifest.txt", manifest_to_text(build_manifest(out_dir, out.written())));
    return table;
}

std::string results_to_csv(const results_table& table)
{
    if (table.scenarios.empty()) throw validation_error("results table is empty");
    std::string out = "scenario,class,brc_mean,brc_sd,esn_mean,esn_sd\n";
    for (const auto& s : table.scenarios) {
        auto row = [&](const class_row& r) {
            out += std::string(to_string(s.kind)) + "," + r.name + "," + fixed4(r.brc_mean) + "," + fixed4(r.brc_sd) + "," +
                   fixed4(r.esn_mean) + "," + fixed4(r.esn_sd) + "\n";
        };
        for (const auto& r : s.classes) row(r);
        row(s.average);
    }
    return out;
}

std::string results_to_text(const results_table& table)
{
    if (table.scenarios.empty()) throw validation_error("results table is empty");
    auto pct = [](double m, double sd) {
        char buf[64];
        std::snprintf(buf, sizeof buf, "%.0f%% +/- %.0f%%", 100.0 * m, 100.0 * sd);
        return std::string(buf);
    };
    auto line = [](std::string_view a, std::string_view b, std::string_view c) {
        char buf[160];
        std::snprintf(buf, sizeof buf, "%-26.*s %-16.*s %.*s\n", static_cast<int>(a.size()), a.data(),
                      static_cast<int>(b.size()), b.data(), static_cast<int>(c.size()), c.data());
        return std::string(buf);
    };
    std::string out = line("Scenario", "BRC Acc.", "Artificial ESN Acc.");
    for (const auto& s : table.scenarios) {
        out += std::string(scenario_title(s.kind)) + "\n";
        for (const auto& r : s.classes) out += line("  " + r.name, pct(r.brc_mean, r.brc_sd), pct(r.esn_mean, r.esn_sd));
        out += line("  Average", pct(s.average.brc_mean, s.average.brc_sd), pct(s.average.esn_mean, s.average.esn_sd));
    }
    return out;
}

results_table parse_results_csv(std::string_view text)
{
    const auto ls = io::lines(text);
    if (ls.empty() || io::trim(ls[0]) != "scenario,class,brc_mean,brc_sd,esn_mean,esn_sd")
        throw validation_error("results: bad header");
    results_table table;
    for (std::size_t i = 1; i < ls.size(); ++i) {
        const auto line = io::trim(ls[i]);
        if (line.empty()) continue;
        const auto f = io::split(line, ',');
        if (f.size() != 6) throw validation_error("results: line " + std::to_string(i + 1) + " needs 6 fields");
        const auto kind = parse_scenario(f[0]);
        if (table.scenarios.empty() || table.scenarios.back().kind != kind || table.scenarios.back().average.name == "Average") {
            table.scenarios.push_back({});
            table.scenarios.back().kind = kind;
        }
        class_row row{std::string(f[1]), io::parse_double(f[2]), io::parse_double(f[3]), io::parse_double(f[4]),
                      io::parse_double(f[5])};
        if (row.name == "Average")
            table.scenarios.back().average = row;
        else
            table.scenarios.back().classes.push_back(row);
    }
    if (table.scenarios.empty()) throw validation_error("results: no rows");
    for (const auto& s : table.scenarios)
        if (s.average.name != "Average") throw validation_error("results: scenario without an Average row");
    return table;
}

void emit_report(const results_table& table, const std::filesystem::path& prefix)
{
    const auto csv = results_to_csv(table);
    const auto txt = results_to_text(table);
    io::write_file(std::filesystem::path(prefix.string() + ".csv"), csv);
    io::write_file(std::filesystem::path(prefix.string() + ".txt"), txt);
}

std::string sha256_hex(std::string_view bytes)
{
    unsigned char digest[EVP_MAX_MD_SIZE];
    unsigned int len = 0;
    if (EVP_Digest(bytes.data(), bytes.size(), digest, &len, EVP_sha256(), nullptr) != 1)
        throw numeric_error("SHA-256 computation failed");
    static constexpr char hex[] = "0123456789abcdef";
    std::string out;
    for (unsigned int i = 0; i < len; ++i) {
        out.push_back(hex[digest[i] >> 4]);
        out.push_back(hex[digest[i] & 0xF]);
    }
    return out;
}

std::vector<manifest_entry> build_manifest(const std::filesystem::path& dir, std::vector<std::string> paths)
{
    std::sort(paths.begin(), paths.end());
    paths.erase(std::unique(paths.begin(), paths.end()), paths.end());
    std::vector<manifest_entry> out;
    for (auto& p : paths) out.push_back({p, sha256_hex(io::read_file(dir / p))});
    return out;
}

std::string manifest_to_text(const std::vector<manifest_entry>& entries)
{
    std::string out;
    for (const auto& e : entries) out += e.sha256 + "  " + e.path + "\n";
    return out;
}

std::vector<manifest_entry> parse_manifest(std::string_view text)
{
    std::vector<manifest_entry> out;
    std::size_t n = 0;
    for (auto line : io::lines(text)) {
        ++n;
        if (io::trim(line).empty()) continue;
        if (line.size() < 67 || line.substr(64, 2) != "  ")
            throw validation_error("manifest: malformed line " + std::to_string(n));
        out.push_back({std::string(line.substr(66)), std::string(line.substr(0, 64))});
    }
    return out;
}

std::vector<std::string> verify_manifest(const std::filesystem::path& dir)
{
    std::vector<std::string> bad;
    for (const auto& e : parse_manifest(io::read_file(dir / "manifest.txt"))) {
        std::string actual;
        try {
            actual = sha256_hex(io::read_file(dir / e.path));
        } catch (const io_error&) {
            bad.push_back(e.path);
            continue;
        }
        if (actual != e.sha256) bad.push_back(e.path);
    }
    return bad;
}

}  // namespace mea
