#pragma once

#include <array>

#include "surfstat/surface.hpp"

namespace surfstat {

/// Intrinsic geometry at one chart point. Christoffel symbols are stored as
/// christoffel[k](i, j) = Γ^k_ij.
struct Geometry {
    Vec3 sigma = Vec3::Zero();
    Vec3 sigma_u = Vec3::Zero();
    Vec3 sigma_v = Vec3::Zero();
    Vec3 normal = Vec3::Zero();
    Mat2 metric = Mat2::Identity();
    Mat2 metric_inverse = Mat2::Identity();
    double area_factor = 1;
    std::array<Mat2, 2> christoffel{Mat2::Zero(), Mat2::Zero()};
    Mat2 second_form = Mat2::Zero();
    double gaussian_curvature = 0;

    Mat32 tangents() const {
        Mat32 S;
        S << sigma_u, sigma_v;
        return S;
    }
};

/// Geometry from embedding derivatives: g = σᵀσ, Γ^k_ij = g^{kl} σ_ij·σ_l,
/// K = det(II)/det(g).
Geometry geometry_from_derivatives(const ChartDerivatives& d);

/// Sixth-order centred differences of the chart map with one Richardson
/// extrapolation level (step, step/2).
ChartDerivatives finite_difference_derivatives(const SurfaceModel& model, int chart, const Vec2& q,
                                               double step = 1e-4);

/// Exact geometry at a chart point, from closed forms when the model has
/// them and finite differences otherwise.
/// Throws chart-out-of-range or singular-parameterization-point.
Geometry exact_geometry_at(const SurfaceModel& model, int chart, const Vec2& q);

/// Exact geometry at a surface point, using the model's preferred chart.
Geometry exact_geometry_at(const SurfaceModel& model, const Vec3& x);

}  // namespace surfstat
