#include "mea/config.hpp"
#include "mea/errors.hpp"
#include "mea/harness.hpp"
#include "mea/io_util.hpp"
#include "mea/response_stats.hpp"

#include <CLI11.hpp>

#include <algorithm>
#include <cstdio>
#include <filesystem>
#include <iostream>
#include <map>
#include <optional>

namespace fs = std::filesystem;
using namespace mea;

namespace {

enum exit_code { ok = 0, validation_failed = 1, runtime_failed = 2, io_failed = 3 };

struct globals {
    std::string config_path;
    std::optional<std::uint64_t> seed;
    std::string out_dir = "out";
    bool detect_from_traces = false;
    std::vector<std::string> scenarios;
};

experiment_config load_config(const globals& g)
{
    experiment_config c = g.config_path.empty() ? experiment_config{} : read_config(g.config_path);
    if (g.seed) c.master_seed = *g.seed;
    if (g.detect_from_traces) c.detect_from_traces = true;
    if (!g.scenarios.empty()) {
        c.scenarios.clear();
        for (const auto& s : g.scenarios) {
            if (s == "all")
                c.scenarios.assign(std::begin(all_scenarios), std::end(all_scenarios));
            else
                c.scenarios.push_back(parse_scenario(s));
        }
    }
    validate(c);
    return c;
}

fs::path out_path(const globals& g, const std::string& explicit_path, const std::string& fallback)
{
    return explicit_path.empty() ? fs::path(g.out_dir) / fallback : fs::path(explicit_path);
}

scenario single_scenario(const experiment_config& c)
{
    if (c.scenarios.size() != 1) throw validation_error("select exactly one scenario with --scenario");
    return c.scenarios.front();
}

spike_raster spontaneous_for(const experiment_config& c, const std::string& path)
{
    if (!path.empty()) return read_raster(path).raster;
    const auto culture = build_culture(c.culture);
    return simulate_spontaneous(culture, c.spontaneous_s, seed_derivation(c.master_seed, "spontaneous", 0));
}

const stimulus_pattern& pattern_for(const std::vector<stimulus_pattern>& patterns, int label)
{
    auto it = std::find_if(patterns.begin(), patterns.end(), [&](const auto& p) { return p.class_label == label; });
    if (it == patterns.end()) throw validation_error("no pattern with label " + std::to_string(label));
    return *it;
}

// Trial files given directly or found under directories (trial_*.raster).
std::vector<fs::path> trial_files(const std::vector<std::string>& inputs)
{
    std::vector<fs::path> out;
    for (const auto& in : inputs) {
        if (fs::is_directory(in)) {
            for (const auto& e : fs::recursive_directory_iterator(in))
                if (e.is_regular_file() && e.path().extension() == ".raster" && e.path().stem().string().starts_with("trial_"))
                    out.push_back(e.path());
        } else {
            out.push_back(in);
        }
    }
    std::sort(out.begin(), out.end());
    if (out.empty()) throw validation_error("no trial files found");
    return out;
}

int trial_index(const fs::path& p)
{
    const auto stem = p.stem().string();
    if (!stem.starts_with("trial_")) return 0;
    return static_cast<int>(io::parse_int(stem.substr(6)));
}

void say(const std::string& s) { std::cerr << s << "\n"; }

}  // namespace

int main(int argc, char** argv)
{
    CLI::App app{"Biological and artificial reservoir computing on a simulated 64x64 MEA"};
    app.require_subcommand(1);
    app.fallthrough();

    globals g;
    std::uint64_t seed_value = 0;
    app.add_option("--config", g.config_path, "key = value configuration file");
    auto* seed_opt = app.add_option("--seed", seed_value, "master seed override");
    app.add_option("--out-dir", g.out_dir, "output directory")->capture_default_str();
    app.add_flag("--detect-from-traces", g.detect_from_traces, "re-detect spikes from synthesized voltage traces");
    app.add_option("--scenario", g.scenarios, "pointwise, bars, digits or all")->delimiter(',');

    std::function<void()> action;

    // pattern
    auto* pattern = app.add_subcommand("pattern", "stimulus patterns")->require_subcommand(1);
    std::string spont_in, out_file;
    auto* pgen = pattern->add_subcommand("gen", "generate the patterns of one scenario");
    pgen->add_option("--spontaneous", spont_in, "spontaneous raster used for hotspot selection");
    pgen->add_option("-o,--out", out_file, "pattern file (default <out-dir>/patterns.txt)");
    pgen->callback([&] {
        action = [&] {
            const auto c = load_config(g);
            const auto s = single_scenario(c);
            const auto pats = scenario_patterns(s, spontaneous_for(c, spont_in), c.hotspot_border);
            const auto path = out_path(g, out_file, "patterns.txt");
            write_patterns(path, pats);
            say("wrote " + std::to_string(pats.size()) + " patterns to " + path.string());
        };
    });
    std::string pattern_file;
    auto* pval = pattern->add_subcommand("validate", "check a pattern file");
    pval->add_option("file", pattern_file)->required();
    pval->callback([&] {
        action = [&] {
            const auto pats = parse_patterns(io::read_file(pattern_file));
            bool clean = true;
            for (const auto& p : pats) {
                const auto rep = validate_pattern(p);
                for (const auto& v : rep.violations) {
                    std::cout << "label " << p.class_label << ": " << to_string(v.kind) << ": " << v.message << "\n";
                    clean = false;
                }
            }
            if (!clean) throw validation_error("pattern file has violations");
            std::cout << pats.size() << " patterns ok\n";
        };
    });

    // simulate
    auto* simulate = app.add_subcommand("simulate", "run the culture simulator")->require_subcommand(1);
    double duration_s = 0.0;
    auto* sspont = simulate->add_subcommand("spontaneous", "unstimulated activity");
    sspont->add_option("--duration", duration_s, "seconds (default experiment.spontaneous_s)");
    sspont->add_option("-o,--out", out_file, "raster file (default <out-dir>/spontaneous.raster)");
    sspont->callback([&] {
        action = [&] {
            const auto c = load_config(g);
            const auto culture = build_culture(c.culture);
            const double d = duration_s > 0.0 ? duration_s : c.spontaneous_s;
            const auto r = simulate_spontaneous(culture, d, seed_derivation(c.master_seed, "spontaneous", 0));
            const auto path = out_path(g, out_file, "spontaneous.raster");
            write_raster(path, r);
            say("wrote " + std::to_string(r.total_spikes()) + " spikes to " + path.string());
        };
    });
    auto* sproto = simulate->add_subcommand("protocol", "stimulation trials for every pattern in a file");
    sproto->add_option("--patterns", pattern_file, "pattern file")->required();
    sproto->callback([&] {
        action = [&] {
            const auto c = load_config(g);
            const auto culture = build_culture(c.culture);
            const auto pats = read_patterns(pattern_file);
            const std::string tag = "protocol/" + std::string(to_string(single_scenario(c)));
            for (const auto& p : pats) {
                const auto trials =
                    run_protocol(culture, p, c.protocol, seed_derivation(c.master_seed, tag, static_cast<std::uint64_t>(p.class_label)));
                for (std::size_t i = 0; i < trials.size(); ++i)
                    write_trial(fs::path(g.out_dir) / std::to_string(p.class_label) / ("trial_" + std::to_string(i) + ".raster"),
                                trials[i]);
                say("label " + std::to_string(p.class_label) + ": " + std::to_string(trials.size()) + " trials");
            }
        };
    });

    std::string raster_file;
    auto* straces = simulate->add_subcommand("traces", "voltage traces of the active electrodes of a raster");
    straces->add_option("raster", raster_file, "raster file")->required();
    straces->callback([&] {
        action = [&] {
            const auto c = load_config(g);
            const auto r = read_raster(raster_file).raster;
            auto waveform = default_template();
            const double p2p = peak_to_peak(waveform);
            for (auto& x : waveform) x *= c.trace_template_p2p_uV / p2p;
            int written = 0;
            for (int e = 0; e < electrode_count; ++e) {
                const auto ch = r.channel(e);
                if (ch.empty()) continue;
                const auto at = electrode_at(e);
                const auto tr = synthesize_trace(ch, r.duration_samples(), c.trace_noise_sd_uV, waveform,
                                                 seed_derivation(seed_derivation(c.master_seed, "traces", 0), "trace",
                                                             static_cast<std::uint64_t>(e)),
                                                 at);
                write_trace(fs::path(g.out_dir) / (std::to_string(at.row) + "_" + std::to_string(at.col) + ".trace"), tr);
                ++written;
            }
            say("wrote " + std::to_string(written) + " traces to " + g.out_dir);
        };
    });

    // detect
    std::vector<std::string> inputs;
    auto* detect = app.add_subcommand("detect", "spike detection on voltage trace files");
    detect->add_option("traces", inputs, "trace files")->required();
    detect->add_option("-o,--out", out_file, "raster file (default <out-dir>/detected.raster)");
    detect->callback([&] {
        action = [&] {
            const auto c = load_config(g);
            std::vector<voltage_trace> traces;
            std::int64_t duration = 0;
            for (const auto& f : inputs) {
                traces.push_back(read_trace(f));
                duration = std::max<std::int64_t>(duration, static_cast<std::int64_t>(traces.back().samples.size()));
            }
            spike_raster r(duration);
            for (const auto& t : traces)
                for (auto s : detect_spikes(t, c.detect)) r.insert(electrode_index(t.electrode), s);
            const auto path = out_path(g, out_file, "detected.raster");
            write_raster(path, r);
            say("detected " + std::to_string(r.total_spikes()) + " spikes in " + std::to_string(traces.size()) + " traces");
        };
    });

    // respmap
    auto* respmap = app.add_subcommand("respmap", "response significance map over the trials of one pattern");
    respmap->add_option("trials", inputs, "trial files or directories")->required();
    respmap->add_option("-o,--out", out_file, "output prefix; writes .ppm and .csv (default <out-dir>/response_map)");
    respmap->callback([&] {
        action = [&] {
            std::vector<trial_recording> trials;
            for (const auto& f : trial_files(inputs)) trials.push_back(read_trial(f));
            const auto map = aggregate(trials);
            const auto prefix = out_path(g, out_file, "response_map").string();
            io::write_file(prefix + ".ppm", map_image_bytes(map));
            io::write_file(prefix + ".csv", map_to_csv(map));
            int sig = 0;
            for (const auto& cell : map.cells) sig += cell.category != response_category::none;
            say(std::to_string(sig) + " electrodes with a significant response");
        };
    });

    // features
    auto* features = app.add_subcommand("features", "feature vectors")->require_subcommand(1);
    auto* fext = features->add_subcommand("extract", "spike-count features from trial files");
    fext->add_option("trials", inputs, "trial files or directories")->required();
    fext->add_option("--patterns", pattern_file, "pattern file (exclusion zones)")->required();
    fext->add_option("-o,--out", out_file, "feature CSV (default <out-dir>/features.csv)");
    fext->callback([&] {
        action = [&] {
            const auto c = load_config(g);
            const auto pats = read_patterns(pattern_file);
            std::vector<labeled_sample> rows;
            for (const auto& f : trial_files(inputs)) {
                const auto trial = read_trial(f);
                const auto fv = extract(trial, pattern_for(pats, trial.pattern_label), chunk_samples, c.margin, trial_index(f));
                rows.push_back(raw_counts(fv));
            }
            write_features(out_path(g, out_file, "features.csv"), rows);
            say("extracted " + std::to_string(rows.size()) + " feature vectors");
        };
    });

    // esn
    auto* esn = app.add_subcommand("esn", "echo state network baseline")->require_subcommand(1);
    auto* ebuild = esn->add_subcommand("build", "sample and scale the reservoir matrix");
    ebuild->add_option("-o,--out", out_file, "matrix file (default <out-dir>/reservoir.txt)");
    ebuild->callback([&] {
        action = [&] {
            const auto c = load_config(g);
            const auto w = build_reservoir(c.esn);
            const auto path = out_path(g, out_file, "reservoir.txt");
            write_matrix(path, w);
            say("reservoir " + std::to_string(w.size()) + " units, " + std::to_string(w.nonzeros()) + " nonzeros");
        };
    });
    std::string matrix_file;
    auto* efeat = esn->add_subcommand("features", "ESN features for every pattern, protocol.repetitions trials each");
    efeat->add_option("--patterns", pattern_file, "pattern file")->required();
    efeat->add_option("--matrix", matrix_file, "reservoir matrix (default: build from config)");
    efeat->add_option("--spontaneous", spont_in, "spontaneous raster for the noise model");
    efeat->add_option("-o,--out", out_file, "feature CSV (default <out-dir>/esn_features.csv)");
    efeat->callback([&] {
        action = [&] {
            const auto c = load_config(g);
            const auto w = matrix_file.empty() ? build_reservoir(c.esn) : read_matrix(matrix_file);
            const auto noise = estimate_noise(spontaneous_for(c, spont_in), c.noise_windows,
                                              seed_derivation(c.master_seed, "noise-windows", 0));
            const std::string tag = "esn-noise/" + std::string(to_string(single_scenario(c)));
            std::vector<labeled_sample> rows;
            for (const auto& p : read_patterns(pattern_file))
                for (int i = 0; i < c.protocol.repetitions; ++i) {
                    const auto idx = static_cast<std::uint64_t>(p.class_label) * 1000 + static_cast<std::uint64_t>(i);
                    rows.push_back(esn_sample(w, p, noise, seed_derivation(c.master_seed, tag, idx), i, c.esn.input_scale));
                }
            write_features(out_path(g, out_file, "esn_features.csv"), rows);
            say("noise mean count " + io::format_double(noise.mean_count) + ", " + std::to_string(rows.size()) + " vectors");
        };
    });

    // clf
    auto* clf = app.add_subcommand("clf", "single-layer softmax classifier")->require_subcommand(1);
    std::string data_file, model_file;
    int n_classes = 0;
    auto* ctrain = clf->add_subcommand("train", "SGD on a feature CSV");
    ctrain->add_option("data", data_file, "training feature CSV")->required();
    ctrain->add_option("--classes", n_classes, "class count (default: max label + 1)");
    ctrain->add_option("-o,--out", out_file, "model file (default <out-dir>/model.txt)");
    ctrain->callback([&] {
        action = [&] {
            const auto c = load_config(g);
            auto data = read_features(data_file);
            if (data.empty()) throw validation_error("training set is empty");
            int k = n_classes;
            for (const auto& s : data) k = std::max(k, s.label + 1);
            for (auto& s : data)
                for (auto& x : s.x) x *= c.feature_scale;
            std::vector<double> losses;
            const auto model = train(data, c.train, k, &losses);
            write_model(out_path(g, out_file, "model.txt"), model);
            say("trained " + std::to_string(k) + " classes, final loss " + io::format_double(losses.empty() ? 0.0 : losses.back()));
        };
    });
    auto* ceval = clf->add_subcommand("eval", "accuracy of a model on a feature CSV");
    ceval->add_option("data", data_file, "test feature CSV")->required();
    ceval->add_option("--model", model_file, "model file")->required();
    ceval->add_option("-o,--out", out_file, "evaluation CSV (default: stdout)");
    ceval->callback([&] {
        action = [&] {
            const auto c = load_config(g);
            auto data = read_features(data_file);
            for (auto& s : data)
                for (auto& x : s.x) x *= c.feature_scale;
            const auto text = evaluation_to_csv(evaluate(read_model(model_file), data));
            if (out_file.empty())
                std::cout << text;
            else
                io::write_file(out_file, text);
        };
    });

    // experiment
    auto* experiment = app.add_subcommand("experiment", "end-to-end scenarios")->require_subcommand(1);
    bool quiet = false;
    auto* erun = experiment->add_subcommand("run", "culture and ESN paths, repeated splits, report and manifest");
    erun->add_flag("-q,--quiet", quiet, "no progress output");
    erun->callback([&] {
        action = [&] {
            const auto c = load_config(g);
            const auto table = run_experiment(c, g.out_dir, quiet ? progress_fn{} : progress_fn(say));
            std::cout << results_to_text(table);
        };
    });
    std::string verify_dir;
    auto* everify = experiment->add_subcommand("verify", "re-hash the artifacts listed in manifest.txt");
    everify->add_option("dir", verify_dir, "experiment output directory")->required();
    everify->callback([&] {
        action = [&] {
            const auto bad = verify_manifest(verify_dir);
            for (const auto& p : bad) std::cout << "MISMATCH " << p << "\n";
            if (!bad.empty()) throw validation_error(std::to_string(bad.size()) + " artifacts do not match the manifest");
            std::cout << "manifest ok\n";
        };
    });

    // report
    std::string results_file;
    auto* report = app.add_subcommand("report", "render a results CSV as CSV and text tables");
    report->add_option("results", results_file, "results CSV")->required();
    report->add_option("-o,--out", out_file, "output prefix (default <out-dir>/report)");
    report->callback([&] {
        action = [&] {
            const auto table = parse_results_csv(io::read_file(results_file));
            emit_report(table, out_path(g, out_file, "report"));
            std::cout << results_to_text(table);
        };
    });

    try {
        app.parse(argc, argv);
    } catch (const CLI::ParseError& e) {
        const int rc = app.exit(e);
        return rc == 0 ? ok : validation_failed;
    }
    if (*seed_opt) g.seed = seed_value;

    try {
        if (action) action();
        return ok;
    } catch (const validation_error& e) {
        std::cerr << "error: " << e.what() << "\n";
        return validation_failed;
    } catch (const io_error& e) {
        std::cerr << "I/O error: " << e.what() << "\n";
        return io_failed;
    } catch (const fs::filesystem_error& e) {
        std::cerr << "I/O error: " << e.what() << "\n";
        return io_failed;
    } catch (const std::exception& e) {
        std::cerr << "error: " << e.what() << "\n";
        return runtime_failed;
    }
}
