#pragma once

#include <optional>
#include <vector>

#include "surfstat/exact_geometry.hpp"
#include "surfstat/gmls.hpp"
#include "surfstat/point_cloud.hpp"

namespace surfstat {

/// Orthonormal right-handed frame {ψ1, ψ2, n} at a cloud point.
struct TangentFrame {
    Vec3 origin = Vec3::Zero();
    Vec3 psi1 = Vec3::UnitX();
    Vec3 psi2 = Vec3::UnitY();
    Vec3 normal = Vec3::UnitZ();

    /// Tangent-plane coordinates (u, v) of x relative to the origin.
    Vec2 tangent_coordinates(const Vec3& x) const {
        const Vec3 d = x - origin;
        return Vec2(d.dot(psi1), d.dot(psi2));
    }
    double height(const Vec3& x) const { return (x - origin).dot(normal); }
};

/// PCA frame of the points: ψ1, ψ2 the leading covariance directions, n the
/// trailing one. The normal points away from `outward_reference` when given.
/// Throws degenerate-covariance for collinear points or equal trailing
/// eigenvalues.
TangentFrame estimate_frame(const std::vector<Vec3>& points, const Vec3& origin,
                            const std::optional<Vec3>& outward_reference = std::nullopt);

/// Local height function h(u, v) over a frame, with its derivatives at (0, 0).
struct MongePatch {
    TangentFrame frame;
    GMLSFit fit;
    int degree = 0;
    double support = 0;
    double h = 0, h_u = 0, h_v = 0, h_uu = 0, h_uv = 0, h_vv = 0;
};

/// Fits neighbor heights over tangent coordinates with weights ω(‖x_j − origin‖).
/// Throws rank-deficient or fold-over.
MongePatch fit_monge_patch(const std::vector<Vec3>& points, const TangentFrame& frame, int degree, double support,
                           int weight_exponent = 4);

/// Monge-gauge geometry at (0, 0): g = I + ∇h∇hᵀ, Γ^k_ij = h_ij h_k/(1 + |∇h|²),
/// K = (h_uu h_vv − h_uv²)/(1 + |∇h|²)². Tangents are returned in ambient
/// coordinates, σ_u = ψ1 + h_u n and σ_v = ψ2 + h_v n.
Geometry monge_geometry(const TangentFrame& frame, double h_u, double h_v, double h_uu, double h_uv, double h_vv);
Geometry estimate_geometry(const MongePatch& patch);

/// Gaussian curvature at every cloud point from degree-m Monge patches.
/// Per-point failures are rethrown with the point index attached.
std::vector<double> estimate_curvature_field(const PointCloud& cloud, int degree);

/// Checks that no two sites share tangent coordinates within the fold-over tolerance.
void check_fold_over(const MatX& sites);

}  // namespace surfstat
