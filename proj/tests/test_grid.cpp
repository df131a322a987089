#include "modgen/grid.hpp"

#include <gtest/gtest.h>

#include <cmath>

using namespace modgen;

namespace {

int count_inside(const GridSpec& g)
{
    int c = 0;
    for (bool b : g.mask) c += b;
    return c;
}

} // namespace

TEST(Grid, HalfCellsInsideHalfOutside)
{
    for (auto r : {RegionSpec{Ambient::minkowski, 6, {{0, 6}}}, RegionSpec{Ambient::minkowski, 8, {{-1, 1}}},
                   RegionSpec{Ambient::cylinder, 4, {{-1.5, -0.5}, {0.5, 1.5}}}}) {
        auto g = build_grid(r, 32, {}, 30);
        EXPECT_EQ(g.size(), 32u);
        EXPECT_EQ(g.boundaries.size(), 33u);
        EXPECT_EQ(count_inside(g), 16);
        EXPECT_EQ(g.boundaries.front().to_double(), r.lower());
        EXPECT_NEAR(g.boundaries.back().to_double(), r.upper(), 1e-25);
        for (std::size_t k = 0; k < g.size(); ++k) {
            EXPECT_GT(g.width(k), 0);
            EXPECT_NEAR((g.normalizers[k] * g.normalizers[k] * g.width(k)).to_double(), 1.0, 1e-25);
        }
    }
}

TEST(Grid, MaskMatchesIntervals)
{
    RegionSpec r{Ambient::cylinder, 4, {{-1.5, -0.5}, {0.5, 1.5}}};
    auto g = build_grid(r, 16, {}, 30);
    for (std::size_t k = 0; k < g.size(); ++k) {
        double mid = 0.5 * (g.lower(k) + g.upper(k)).to_double();
        bool in = (mid > -1.5 && mid < -0.5) || (mid > 0.5 && mid < 1.5);
        EXPECT_EQ(g.mask[k], in) << k;
    }
}

TEST(Grid, WedgeAndCylinderGridsAreUniform)
{
    auto g = build_grid(RegionSpec{Ambient::minkowski, 6, {{0, 6}}}, 64, {}, 30);
    for (std::size_t k = 0; k < g.size(); ++k) EXPECT_NEAR(g.width(k).to_double(), 12.0 / 64, 1e-25);
    auto c = build_grid(RegionSpec{Ambient::cylinder, 4, {{-1, 1}}}, 16, {}, 30);
    for (std::size_t k = 0; k < c.size(); ++k) EXPECT_NEAR(c.width(k).to_double(), 0.25, 1e-25);
}

TEST(Grid, DoubleConeComplementGrowsGeometrically)
{
    RegionSpec r{Ambient::minkowski, 32, {{-1, 1}}};
    auto g = build_grid(r, 64, {1.2}, 30);
    const double inside = 2.0 / 32;
    for (std::size_t k = 0; k < g.size(); ++k)
        if (g.mask[k]) {
            EXPECT_NEAR(g.width(k).to_double(), inside, 1e-20);
        }
    // left piece cells 0..15 shrink towards the region, right piece 48..63 grow away from it
    for (std::size_t k = 0; k + 1 < 16; ++k) {
        double a = g.width(k).to_double(), b = g.width(k + 1).to_double();
        EXPECT_GE(a, b);
        EXPECT_LE(a / b, 1.2 + 1e-9);
    }
    for (std::size_t k = 48; k + 1 < 64; ++k) {
        double a = g.width(k).to_double(), b = g.width(k + 1).to_double();
        EXPECT_LE(a, b);
        EXPECT_LE(b / a, 1.2 + 1e-9);
    }
    // tiling: widths sum to the domain length
    BigReal total(0);
    for (std::size_t k = 0; k < g.size(); ++k) total += g.width(k);
    EXPECT_NEAR(total.to_double(), 64.0, 1e-25);
    EXPECT_EQ(g.boundaries.back().to_double(), 32.0);
}

TEST(Grid, SmallComplementStaysUniform)
{
    // the outside is narrow enough for region-width cells
    RegionSpec r{Ambient::minkowski, 1.2, {{-1, 1}}};
    auto g = build_grid(r, 16, {}, 30);
    for (std::size_t k = 0; k < g.size(); ++k)
        if (!g.mask[k]) {
            EXPECT_NEAR(g.width(k).to_double(), 0.05, 1e-20);
        }
}

TEST(Grid, RejectsInvalidRegions)
{
    EXPECT_THROW(build_grid(RegionSpec{Ambient::minkowski, 6, {{1, 0}}}, 8), InvalidRegion);
    EXPECT_THROW(build_grid(RegionSpec{Ambient::minkowski, 6, {{0, 2}, {1, 3}}}, 8), InvalidRegion);
    EXPECT_THROW(build_grid(RegionSpec{Ambient::minkowski, 6, {{0, 7}}}, 8), InvalidRegion);
    EXPECT_THROW(build_grid(RegionSpec{Ambient::minkowski, 6, {{-6, 6}}}, 8), InvalidRegion);
    EXPECT_THROW(build_grid(RegionSpec{Ambient::minkowski, 6, {}}, 8), InvalidRegion);
    EXPECT_THROW(build_grid(RegionSpec{Ambient::minkowski, 6, {{0, 6}}}, 7), InvalidRegion);
    EXPECT_THROW(build_grid(RegionSpec{Ambient::cylinder, 4, {{-1, -0.5}, {0, 0.5}, {1, 1.5}}}, 4), InvalidRegion);
    EXPECT_THROW(build_grid(RegionSpec{Ambient::cylinder, 4, {{-1, 1}}}, 8, {0.5}), InvalidRegion);
}

TEST(Grid, ComplementIntervals)
{
    RegionSpec r{Ambient::cylinder, 4, {{-1.5, -0.5}, {0.5, 1.5}}};
    auto c = r.complement();
    ASSERT_EQ(c.size(), 3u);
    EXPECT_EQ(c[0], std::make_pair(-2.0, -1.5));
    EXPECT_EQ(c[1], std::make_pair(-0.5, 0.5));
    EXPECT_EQ(c[2], std::make_pair(1.5, 2.0));
}

TEST(Grid, RebuildKeepsLayout)
{
    auto g = build_grid(RegionSpec{Ambient::minkowski, 8, {{-1, 1}}}, 16, {}, 30);
    auto h = rebuild_grid(g, 60);
    EXPECT_EQ(h.digits(), 60);
    EXPECT_EQ(h.mask, g.mask);
    for (std::size_t k = 0; k <= g.size(); ++k) EXPECT_NEAR(h.boundaries[k].to_double(), g.boundaries[k].to_double(), 1e-25);
}

TEST(Grid, ProjectionsAgree)
{
    auto g = build_grid(RegionSpec{Ambient::minkowski, 3, {{-1, 1}}}, 12, {}, 30);
    ScopedPrecision p(30);
    auto direct = project_function(g, [](const BigReal& x) { return exp(-(x * x)); });
    // ∫ exp(-x²) = (√π/2) erf(x)
    auto viaH = project_antiderivative(g, [](const BigReal& x) { return sqrt(BigReal::pi()) / 2.0 * erf(x); });
    for (std::size_t k = 0; k < g.size(); ++k) EXPECT_LT(abs(direct[k] - viaH[k]).to_double(), 1e-20);
}

TEST(Grid, ChiMatrixIsProjector)
{
    auto g = build_grid(RegionSpec{Ambient::cylinder, 4, {{-1, 1}}}, 8, {}, 30);
    auto chi = chi_matrix(g);
    EXPECT_LT(max_abs_diff(multiply(chi, chi), chi).to_double(), 1e-30);
    for (std::size_t k = 0; k < g.size(); ++k) EXPECT_EQ(chi(k, k).to_double(), g.mask[k] ? 1.0 : 0.0);
}
