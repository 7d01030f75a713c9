#include <gtest/gtest.h>

#include <cmath>

#include "surfstat/error.hpp"
#include "surfstat/sampling.hpp"

using namespace surfstat;

TEST(Sampling, SpherePointsLieOnSurface) {
    const auto sphere = make_sphere(1);
    const PointCloud c = sample_cloud(*sphere, {0.5, std::nullopt, 200, 1});
    ASSERT_GT(c.size(), 10u);
    for (const auto& p : c.positions) EXPECT_NEAR(p.norm(), 1.0, 1e-10);
}

TEST(Sampling, CatalogCountsAndSpacing) {
    for (const char* alias : {"A", "D"}) {
        const auto model = parse_model(alias);
        const double h = catalog_h(alias[0], 1);
        const PointCloud c = sample_cloud(*model, {h, std::nullopt, 200, 7});
        const double expected = alias[0] == 'A' ? 2350 : 1912;
        EXPECT_NEAR(static_cast<double>(c.size()), expected, 0.25 * expected);
        const auto fill = measure_fill_distance(c);
        EXPECT_NEAR(fill.median_spacing, h, 0.35 * h);
        for (const auto& p : c.positions) EXPECT_LT(model->residual(p), 1e-10);
    }
}

TEST(Sampling, SpacingContractHolds) {
    const auto model = parse_model("B");
    const double h = catalog_h('B', 1);
    const PointCloud c = sample_cloud(*model, {h, std::nullopt, 200, 3});
    const auto d = nearest_spacings(c.positions);
    std::size_t good = 0;
    for (double s : d) good += std::abs(s - h) <= 0.35 * h;
    EXPECT_GE(static_cast<double>(good), 0.99 * static_cast<double>(d.size()));
}

TEST(Sampling, HalvingLevelsHalveSpacing) {
    const auto model = parse_model("D");
    const PointCloud c1 = sample_cloud(*model, {catalog_h('D', 1), std::nullopt, 200, 2});
    const PointCloud c2 = sample_cloud(*model, {catalog_h('D', 2), std::nullopt, 200, 2});
    const double ratio = measure_fill_distance(c2).median_spacing / measure_fill_distance(c1).median_spacing;
    EXPECT_GE(ratio, 0.45);
    EXPECT_LE(ratio, 0.55);
}

TEST(Sampling, BoundaryNodesLieOnTheBoundaryCurve) {
    const auto cap = make_spherical_cap(1);
    PointCloud c = sample_cloud(*cap, {0.1, std::nullopt, 200, 4});
    for (const auto& p : c.positions) EXPECT_GE(p.z(), -1e-12);
    label_boundary(c, BoundaryRule::height(0, 1e-9));
    const double circumference = 2 * M_PI;
    EXPECT_NEAR(static_cast<double>(c.boundary_count()), circumference / (0.886 * 0.1), 3);
    for (std::size_t i = 0; i < c.size(); ++i) {
        if (c.is_boundary(i)) EXPECT_NEAR(c.positions[i].z(), 0.0, 1e-12);
    }
}

TEST(Sampling, SlicedTorusStaysInDomain) {
    const auto m = parse_model("sliced-torus");
    PointCloud c = sample_cloud(*m, {0.08, std::nullopt, 200, 5});
    for (const auto& p : c.positions) EXPECT_GE(p.z(), -1e-12);
    label_boundary(c, BoundaryRule::height(0, 0.04));
    EXPECT_GT(c.boundary_count(), 0u);
}

TEST(Sampling, DeterministicGivenSeed) {
    const auto m = make_neck(0.5);
    const PointCloud a = sample_cloud(*m, {0.1, std::nullopt, 40, 9});
    const PointCloud b = sample_cloud(*m, {0.1, std::nullopt, 40, 9});
    EXPECT_EQ(a.positions, b.positions);
}

TEST(Sampling, InvalidPlan) {
    EXPECT_THROW(sample_cloud(*make_sphere(1), {-1.0, std::nullopt, 10, 0}), Error);
}
