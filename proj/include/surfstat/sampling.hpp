#pragma once

#include <cstdint>
#include <optional>

#include "surfstat/point_cloud.hpp"
#include "surfstat/surface.hpp"

namespace surfstat {

struct SamplingPlan {
    double target_h = 0.1;
    std::optional<std::size_t> expected_n;  // derived from the surface area when empty
    int relaxation_iters = 200;
    std::uint64_t seed = 0;
};

/// Point counts of the benchmark refinement ladder, when (model, h) is one of
/// its entries.
std::optional<std::size_t> catalog_count(const std::string& model_name, double target_h);

/// Target fill distance of a catalog manifold (A, B, C, D) at level 1..4.
double catalog_h(char manifold, int level);

/// Point count giving fill distance h on a surface of the given area.
std::size_t count_for_area(double area, double target_h);

/// Quasi-uniform sampling: boundary nodes on the boundary curves, stratified
/// seeding in the seed parameterization, then repulsion relaxation with
/// reprojection. All flags are interior on return.
/// Throws relaxation-failed-to-converge if fewer than 99% of the points have
/// nearest-neighbor spacing within ±35% of target_h.
PointCloud sample_cloud(const SurfaceModel& model, const SamplingPlan& plan);

}  // namespace surfstat
