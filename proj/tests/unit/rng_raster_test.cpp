#include "mea/culture.hpp"
#include "mea/errors.hpp"
#include "mea/raster.hpp"
#include "mea/rng.hpp"

#include <gtest/gtest.h>

#include <cmath>
#include <filesystem>
#include <unordered_set>

using namespace mea;

TEST(DeriveSeed, GoldenValues)
{
    // Computed with a separate script from the documented byte layout.
    EXPECT_EQ(derive_seed(1, "trial", 0), 0x512b3fd61a0a8162ULL);
    EXPECT_EQ(derive_seed(42, "split/pointwise", 7), 0xe104a74fc450eefbULL);
    EXPECT_EQ(derive_seed(0, "", 0), 0x7d7d3ec6a944fe94ULL);
}

TEST(DeriveSeed, DomainSeparation)
{
    EXPECT_EQ(derive_seed(9, "trial", 3), derive_seed(9, "trial", 3));
    EXPECT_NE(derive_seed(9, "trial", 3), derive_seed(9, "split", 3));
    EXPECT_NE(derive_seed(9, "trial", 3), derive_seed(10, "trial", 3));
}

TEST(DeriveSeed, NoCollisionsOverAMillionIndices)
{
    std::unordered_set<std::uint64_t> seen;
    seen.reserve(2'000'000);
    rng gen(123);
    const auto master = gen.next_u64();
    for (std::uint64_t i = 0; i < 1'000'000; ++i) ASSERT_TRUE(seen.insert(derive_seed(master, "probe", gen.next_u64())).second);
}

TEST(Rng, UniformAndNormalMoments)
{
    rng gen(5);
    const int n = 200000;
    double s = 0, s2 = 0, u = 0;
    for (int i = 0; i < n; ++i) {
        const double x = gen.normal();
        s += x;
        s2 += x * x;
        u += gen.uniform01();
    }
    EXPECT_NEAR(s / n, 0.0, 5.0 / std::sqrt(n));
    EXPECT_NEAR(s2 / n, 1.0, 5.0 * std::sqrt(2.0 / n));
    EXPECT_NEAR(u / n, 0.5, 5.0 * std::sqrt(1.0 / 12 / n));
}

TEST(Rng, BelowIsInRangeAndReproducible)
{
    rng a(77), b(77);
    for (int i = 0; i < 1000; ++i) {
        const auto x = a.below(7);
        EXPECT_LT(x, 7u);
        EXPECT_EQ(x, b.below(7));
    }
}

TEST(Raster, AppendKeepsOrderAndBounds)
{
    spike_raster r(100);
    r.append(5, 10);
    r.append(5, 10);
    r.append(5, 20);
    EXPECT_EQ(r.channel(5).size(), 2u);
    EXPECT_THROW(r.append(5, 15), validation_error);
    EXPECT_THROW(r.append(5, 100), bounds_error);
    EXPECT_THROW(r.append(4096, 1), bounds_error);
}

TEST(RasterFile, RoundTripWithComments)
{
    spike_raster r(2000);
    r.insert(0, 5);
    r.insert(4095, 1999);
    r.insert(70, 3);
    r.insert(70, 1);
    const std::string c[] = {"onset_sample=600 label=2"};
    const auto text = raster_to_text(r, c);
    EXPECT_EQ(text, "MEARASTER v1 2000 20000\n# onset_sample=600 label=2\n0,0,5\n1,6,1\n1,6,3\n63,63,1999\n");
    const auto back = parse_raster(text);
    EXPECT_EQ(back.raster, r);
    ASSERT_EQ(back.comments.size(), 1u);
    EXPECT_EQ(back.comments[0], c[0]);
}

TEST(RasterFile, Rejections)
{
    EXPECT_THROW(parse_raster(""), validation_error);
    EXPECT_THROW(parse_raster("MEARASTER v2 10 20000\n"), validation_error);
    EXPECT_THROW(parse_raster("MEARASTER v1 10 10000\n"), validation_error);
    EXPECT_THROW(parse_raster("MEARASTER v1 10 20000\n0,64,1\n"), bounds_error);
    EXPECT_THROW(parse_raster("MEARASTER v1 10 20000\n0,0,10\n"), bounds_error);
    EXPECT_THROW(parse_raster("MEARASTER v1 10 20000\n0,0\n"), validation_error);
}

TEST(TrialFile, RoundTrip)
{
    trial_recording t{spike_raster(1200), 600, 3};
    t.raster.insert(17, 601);
    const auto path = std::filesystem::temp_directory_path() / "mea_trial_roundtrip.raster";
    write_trial(path, t);
    EXPECT_EQ(read_trial(path), t);
    std::filesystem::remove(path);
}
