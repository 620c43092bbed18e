#include "mea/config.hpp"
#include "mea/errors.hpp"
#include "mea/harness.hpp"
#include "mea/io_util.hpp"

#include <gtest/gtest.h>

#include <filesystem>
#include <fstream>

using namespace mea;
namespace fs = std::filesystem;

namespace {

fs::path scratch(const std::string& name)
{
    auto p = fs::temp_directory_path() / ("mea_harness_" + name);
    fs::remove_all(p);
    return p;
}

results_table fixture_table()
{
    scenario_result s;
    s.kind = scenario::digits;
    s.classes = {{"Digit 0", 1.0, 0.0, 0.9, 0.1}, {"Digit 1", 0.8, 0.25, 1.0, 0.0}, {"Digit 8", 0.6, 0.125, 0.7, 0.05}};
    s.average = {"Average", 0.8, 0.05, 0.8666666666666667, 0.02};
    return {{s}};
}

experiment_config small_config()
{
    experiment_config c;
    c.scenarios = {scenario::pointwise};
    c.repeats = 2;
    return c;
}

}  // namespace

TEST(Config, DefaultFileMatchesBuiltInDefaults)
{
    EXPECT_EQ(read_config(MEA_DEFAULT_CONFIG), experiment_config{});
}

TEST(Config, TextRoundTrip)
{
    experiment_config c;
    c.scenarios = {scenario::digits, scenario::bars};
    c.master_seed = 18446744073709551615ULL;
    c.culture.membrane_tau_ms = 0.3;
    c.esn.spectral_radius = 0.95;
    c.detect_from_traces = true;
    c.train.learning_rate = 0.125;
    EXPECT_EQ(parse_config(config_to_text(c)), c);
}

TEST(Config, CommentsAndOverlay)
{
    const auto c = parse_config("# header\nexperiment.repeats = 3   # trailing\n\nesn.seed=9\n");
    EXPECT_EQ(c.repeats, 3);
    EXPECT_EQ(c.esn.seed, 9u);
    EXPECT_EQ(c.culture, culture_config{});
}

TEST(Config, Errors)
{
    EXPECT_THROW(parse_config("culture.tau = 1\n"), validation_error);
    EXPECT_THROW(parse_config("experiment.repeats = 1\nexperiment.repeats = 2\n"), validation_error);
    EXPECT_THROW(parse_config("experiment.repeats\n"), validation_error);
    EXPECT_THROW(parse_config("experiment.repeats = \n"), validation_error);
    EXPECT_THROW(parse_config("experiment.repeats = x\n"), validation_error);
    EXPECT_THROW(parse_config("experiment.scenario = circles\n"), validation_error);
    try {
        parse_config("\n\nbogus = 1\n");
        FAIL();
    } catch (const validation_error& e) {
        EXPECT_NE(std::string(e.what()).find("line 3"), std::string::npos);
    }
}

TEST(Config, Validation)
{
    EXPECT_NO_THROW(validate(experiment_config{}));
    auto c = experiment_config{};
    c.repeats = 0;
    EXPECT_THROW(validate(c), validation_error);
    c = {};
    c.split.n_train = 21;
    EXPECT_THROW(validate(c), validation_error);
    c = {};
    c.culture.threshold_mV = -70;
    EXPECT_THROW(validate(c), validation_error);
}

TEST(Seeds, DerivationProperties)
{
    EXPECT_EQ(seed_derivation(3, "trial", 1), seed_derivation(3, "trial", 1));
    EXPECT_NE(seed_derivation(3, "trial", 1), seed_derivation(3, "split", 1));
    EXPECT_NE(seed_derivation(3, "trial", 1), seed_derivation(3, "trial", 2));
}

TEST(Scenarios, PatternStructure)
{
    spike_raster spont(100);
    for (int e = 0; e < electrode_count; ++e) spont.append(e, 0);
    spont.append(electrode_index({30, 30}), 5);
    const auto point = scenario_patterns(scenario::pointwise, spont, 8);
    ASSERT_EQ(point.size(), 4u);
    EXPECT_EQ(point[0].pairs[0].positive, (electrode_coord{30, 30}));
    const auto bars = scenario_patterns(scenario::bars, spont, 8);
    ASSERT_EQ(bars.size(), 4u);
    for (std::size_t k = 0; k < 4; ++k) {
        EXPECT_EQ(bars[k].class_label, static_cast<int>(k));
        EXPECT_EQ(bars[k].pairs.size(), 5u);
        EXPECT_EQ(bars[k].pairs[2].positive, (electrode_coord{30, 30}));
    }
    const auto digits = scenario_patterns(scenario::digits, spont, 8);
    ASSERT_EQ(digits.size(), 3u);
    EXPECT_EQ(digits[0].pairs.size(), 16u);
    EXPECT_EQ(digits[1].pairs.size(), 7u);
    EXPECT_EQ(digits[2].pairs.size(), 19u);
    for (const auto& p : digits) EXPECT_TRUE(validate_pattern(p).ok());
    EXPECT_EQ(class_names(scenario::digits), (std::vector<std::string>{"Digit 0", "Digit 1", "Digit 8"}));
    EXPECT_EQ(class_names(scenario::pointwise).size(), 4u);
}

TEST(Summary, SingleRepeatHasZeroSd)
{
    evaluation a{0.75, {1.0, 0.5, 0.5, 1.0}, {5, 5, 5, 5}};
    const auto r = summarize(scenario::pointwise, {a}, {a});
    for (const auto& row : r.classes) {
        EXPECT_EQ(row.brc_sd, 0.0);
        EXPECT_EQ(row.esn_sd, 0.0);
    }
    EXPECT_EQ(r.average.brc_sd, 0.0);
}

TEST(Summary, AverageRowIsMeanOfClassRows)
{
    std::vector<evaluation> brc{{0.75, {1.0, 0.5, 0.5, 1.0}, {5, 5, 5, 5}}, {0.5, {0.6, 0.4, 0.2, 0.8}, {5, 5, 5, 5}}};
    std::vector<evaluation> esn{{1.0, {1, 1, 1, 1}, {5, 5, 5, 5}}, {0.9, {1, 0.8, 0.8, 1}, {5, 5, 5, 5}}};
    const auto r = summarize(scenario::pointwise, brc, esn);
    double b = 0, e = 0;
    for (const auto& row : r.classes) {
        b += row.brc_mean;
        e += row.esn_mean;
    }
    EXPECT_DOUBLE_EQ(r.average.brc_mean, b / 4);
    EXPECT_DOUBLE_EQ(r.average.esn_mean, e / 4);
    EXPECT_DOUBLE_EQ(r.classes[0].brc_mean, 0.8);
    EXPECT_NEAR(r.classes[0].brc_sd, std::sqrt(0.08), 1e-15);
    EXPECT_NEAR(r.average.brc_sd, std::sqrt(0.03125), 1e-15);
    EXPECT_THROW(summarize(scenario::pointwise, {}, {}), validation_error);
    EXPECT_THROW(summarize(scenario::digits, brc, esn), validation_error);
}

TEST(Report, ByteExactCsv)
{
    EXPECT_EQ(results_to_csv(fixture_table()),
              "scenario,class,brc_mean,brc_sd,esn_mean,esn_sd\n"
              "digits,Digit 0,1.0000,0.0000,0.9000,0.1000\n"
              "digits,Digit 1,0.8000,0.2500,1.0000,0.0000\n"
              "digits,Digit 8,0.6000,0.1250,0.7000,0.0500\n"
              "digits,Average,0.8000,0.0500,0.8667,0.0200\n");
}

TEST(Report, TextTableRowOrder)
{
    EXPECT_EQ(results_to_text(fixture_table()),
              "Scenario                   BRC Acc.         Artificial ESN Acc.\n"
              "Digit Recognition\n"
              "  Digit 0                  100% +/- 0%      90% +/- 10%\n"
              "  Digit 1                  80% +/- 25%      100% +/- 0%\n"
              "  Digit 8                  60% +/- 12%      70% +/- 5%\n"
              "  Average                  80% +/- 5%       87% +/- 2%\n");
}

TEST(Report, ParseRoundTripAndEmpty)
{
    const auto csv = results_to_csv(fixture_table());
    EXPECT_EQ(results_to_csv(parse_results_csv(csv)), csv);
    EXPECT_THROW(results_to_csv(results_table{}), validation_error);
    EXPECT_THROW(parse_results_csv("scenario,class,brc_mean,brc_sd,esn_mean,esn_sd\n"), validation_error);
    const auto dir = scratch("report");
    emit_report(fixture_table(), dir / "table");
    EXPECT_EQ(io::read_file(dir / "table.csv"), csv);
    EXPECT_TRUE(fs::exists(dir / "table.txt"));
    fs::remove_all(dir);
}

TEST(Manifest, HashAndVerify)
{
    EXPECT_EQ(sha256_hex("abc"), "ba7816bf8f01cfea414140de5dae2223b00361a396177a9cb410ff61f20015ad");
    const auto dir = scratch("manifest");
    io::write_file(dir / "a.txt", "alpha");
    io::write_file(dir / "sub/b.txt", "beta");
    const auto entries = build_manifest(dir, {"sub/b.txt", "a.txt"});
    ASSERT_EQ(entries.size(), 2u);
    EXPECT_EQ(entries[0].path, "a.txt");
    io::write_file(dir / "manifest.txt", manifest_to_text(entries));
    EXPECT_EQ(parse_manifest(manifest_to_text(entries)), entries);
    EXPECT_TRUE(verify_manifest(dir).empty());
    io::write_file(dir / "a.txt", "tampered");
    fs::remove(dir / "sub/b.txt");
    EXPECT_EQ(verify_manifest(dir), (std::vector<std::string>{"a.txt", "sub/b.txt"}));
    fs::remove_all(dir);
}

TEST(Experiment, PointwiseArtifactsAndStructure)
{
    const auto dir = scratch("run");
    const auto table = run_experiment(small_config(), dir);
    ASSERT_EQ(table.scenarios.size(), 1u);
    const auto& s = table.scenarios[0];
    EXPECT_EQ(s.classes.size(), 4u);
    EXPECT_EQ(s.brc_accuracy.size(), 2u);
    for (const char* f : {"config.cfg", "spontaneous.raster", "results.csv", "report.txt", "manifest.txt",
                          "pointwise/patterns.txt", "pointwise/accuracy.csv", "pointwise/models/brc_0.txt",
                          "pointwise/models/esn_1.txt", "pointwise/3/trial_24.raster", "pointwise/0/response_map.ppm"})
        EXPECT_TRUE(fs::exists(dir / f)) << f;
    int vectors = 0;
    for (int k = 0; k < 4; ++k) {
        const auto rows = read_features(dir / "pointwise" / std::to_string(k) / "features.csv");
        vectors += static_cast<int>(rows.size());
        for (const auto& r : rows) EXPECT_EQ(r.x.size(), 4096u);
    }
    EXPECT_EQ(vectors, 100);
    EXPECT_TRUE(verify_manifest(dir).empty());
    EXPECT_EQ(read_config(dir / "config.cfg"), small_config());
    fs::remove_all(dir);
}

TEST(Experiment, DeterministicResults)
{
    auto c = small_config();
    c.scenarios = {scenario::digits};
    const auto a = run_experiment(c, {});
    const auto b = run_experiment(c, {});
    EXPECT_EQ(results_to_csv(a), results_to_csv(b));
    EXPECT_EQ(a, b);
}

TEST(Experiment, StageTaggedErrors)
{
    auto c = small_config();
    c.spontaneous_s = 0.1;  // fewer 10 ms windows than the noise model needs
    try {
        run_experiment(c, {});
        FAIL();
    } catch (const validation_error& e) {
        EXPECT_TRUE(std::string(e.what()).starts_with("noise: ")) << e.what();
    }
}
