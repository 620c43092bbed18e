#include "mea/io_util.hpp"

#include <gtest/gtest.h>

#include <cstdlib>
#include <filesystem>
#include <sys/wait.h>

namespace fs = std::filesystem;

namespace {

int run(const std::string& args)
{
    const std::string cmd = std::string(MEA_CLI) + " " + args + " >/dev/null 2>&1";
    const int status = std::system(cmd.c_str());
    return WIFEXITED(status) ? WEXITSTATUS(status) : -1;
}

fs::path scratch()
{
    auto p = fs::temp_directory_path() / "mea_cli_test";
    fs::remove_all(p);
    fs::create_directories(p);
    return p;
}

}  // namespace

TEST(Cli, ExitCodes)
{
    const auto dir = scratch();
    EXPECT_EQ(run("--help"), 0);
    EXPECT_EQ(run(""), 1);
    EXPECT_EQ(run("frobnicate"), 1);
    EXPECT_EQ(run("pattern validate " + (dir / "missing.txt").string()), 3);
    mea::io::write_file(dir / "bad.cfg", "nonsense.key = 1\n");
    EXPECT_EQ(run("--config " + (dir / "bad.cfg").string() + " esn build"), 1);
    mea::io::write_file(dir / "conflict.txt", "pulse,0,monophasic,10,20,0\n0,pointwise,5,5,5,6\n0,pointwise,5,7,5,5\n");
    EXPECT_EQ(run("pattern validate " + (dir / "conflict.txt").string()), 1);
    mea::io::write_file(dir / "zero.cfg", "esn.sparsity = 0.0000001\n");
    EXPECT_EQ(run("--config " + (dir / "zero.cfg").string() + " --out-dir " + dir.string() + " esn build"), 2);
    fs::remove_all(dir);
}

TEST(Cli, StagedPipeline)
{
    const auto dir = scratch();
    const auto d = dir.string();
    ASSERT_EQ(run("--out-dir " + d + " simulate spontaneous --duration 2"), 0);
    ASSERT_EQ(run("--out-dir " + d + " --scenario digits pattern gen --spontaneous " + d + "/spontaneous.raster"), 0);
    ASSERT_EQ(run("pattern validate " + d + "/patterns.txt"), 0);
    ASSERT_EQ(run("--out-dir " + d + "/trials --scenario digits simulate protocol --patterns " + d + "/patterns.txt"), 0);
    ASSERT_EQ(run("--out-dir " + d + " respmap " + d + "/trials/1"), 0);
    ASSERT_EQ(run("--out-dir " + d + "/traces simulate traces " + d + "/trials/1/trial_0.raster"), 0);
    ASSERT_FALSE(fs::is_empty(dir / "traces"));
    std::string traces;
    for (const auto& f : fs::directory_iterator(dir / "traces")) traces += " " + f.path().string();
    ASSERT_EQ(run("--out-dir " + d + " detect" + traces), 0);
    EXPECT_TRUE(mea::io::read_file(dir / "detected.raster").starts_with("MEARASTER v1 "));
    EXPECT_TRUE(fs::exists(dir / "response_map.ppm"));
    ASSERT_EQ(run("--out-dir " + d + " features extract " + d + "/trials --patterns " + d + "/patterns.txt"), 0);
    ASSERT_EQ(run("--out-dir " + d + " clf train " + d + "/features.csv"), 0);
    ASSERT_EQ(run("clf eval " + d + "/features.csv --model " + d + "/model.txt -o " + d + "/eval.csv"), 0);
    EXPECT_TRUE(mea::io::read_file(dir / "eval.csv").starts_with("class,n,accuracy\n"));
    fs::remove_all(dir);
}
