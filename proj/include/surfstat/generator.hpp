#pragma once

#include <functional>
#include <optional>
#include <string>
#include <vector>

#include "surfstat/geometry_estimation.hpp"
#include "surfstat/point_cloud.hpp"
#include "surfstat/surface.hpp"

namespace surfstat {

/// Smooth scalar field on R³ with analytic gradient and Hessian.
struct ScalarField {
    std::string name;
    std::function<double(const Vec3&)> value;
    std::function<Vec3(const Vec3&)> gradient;
    std::function<Mat3(const Vec3&)> hessian;
};

/// z(x⁴ + y⁴ − 6x²y²), the ℓ = 5 harmonic test field.
ScalarField harmonic_test_field();
ScalarField constant_field(double c);
/// Coordinate function x_k.
ScalarField coordinate_field(int axis);
/// x² + y² (+ z² when include_z).
ScalarField radius_squared_field(bool include_z = false);

/// Ambient drift a(x) and diffusion columns b₁, b₂, b₃ of dX = a dt + b dW.
struct DriftDiffusionSpec {
    std::string name;
    std::function<Vec3(const Vec3&)> drift;
    std::function<Mat3(const Vec3&)> diffusion;
};

DriftDiffusionSpec pure_diffusion(double D = 1.0);
DriftDiffusionSpec constant_drift_diffusion(const Vec3& a, double D);
/// Tensors on the ellipsoid x²/a² + y²/b² + z² = s0² built on the Gram–Schmidt
/// frame of the azimuthal and polar coordinate tangents.
DriftDiffusionSpec manifold_a_spec(double a = 1.2, double b = 1.2, double s0 = 1.0);
DriftDiffusionSpec manifold_bc_spec();
/// Tensors on the torus (s1, s2) built on its coordinate tangents σ_u, σ_v.
DriftDiffusionSpec manifold_d_spec(double s1 = 0.7, double s2 = 0.3);
/// Surface Langevin dynamics in U = k sin²(u) on the torus (s1, s2) about z:
/// a = −γ⁻¹∇U, b = √(2 kT/γ) I, with ∇U from the closed-form chart gradient.
DriftDiffusionSpec double_well_spec(double k, double gamma = 1.0, double kT = 1.0, double s1 = 0.7, double s2 = 0.3);
/// b = √(2 D0)(1 − c exp(−‖x − x_c‖²/r²)) I, zero drift.
DriftDiffusionSpec variable_diffusivity_spec(const Vec3& center, double c, double r, double D0 = 1.0);

/// Preset names: diffusion[:D], constant:ax:ay:az:D, manifold-A-ab, manifold-BC-ab,
/// manifold-D-ab, double-well:k, langevin:double-well:k:gamma:kT, diffusivity:c:r[:D0].
DriftDiffusionSpec parse_spec(const std::string& text);

Vec3 project_to_tangent(const Vec3& v, const Vec3& normal);

/// Chart-form coefficients of the generator L = α^c ∂_c + D_cd ∂²_cd.
struct ChartCoefficients {
    Vec2 alpha = Vec2::Zero();
    Mat23 beta = Mat23::Zero();
    Mat2 diffusion = Mat2::Zero();  // ½ β βᵀ
    double projection_residual = 0; // size of the discarded normal components
};

/// β = g⁻¹Sᵀb, a^c = g⁻¹Sᵀa, α^c = a^c − ½Γ^c_ab β^a·β^b with S = [σ_u σ_v].
ChartCoefficients chart_coefficients(const Vec3& a, const Mat3& b, const Geometry& geometry);
ChartCoefficients chart_coefficients(const DriftDiffusionSpec& spec, const Geometry& geometry, const Vec3& x);

/// Chart-form generator applied to chart derivatives of u.
double apply_chart_generator(const ChartCoefficients& c, const Vec2& du, const Mat2& d2u);

/// Operator stencils use a wider support than plain neighbor queries. With the
/// 1.2 factor the odd-order Taylor residue of irregular neighborhoods keeps the
/// observed operator order near m − 1 (measured 1.3 for m = 2 on the torus);
/// at 1.6 the smooth weight averages it down and rates of m − 0.1 are observed.
inline constexpr double default_operator_inflation = 1.6;

struct StencilOptions {
    int degree = 4;
    int min_count = 0;  // 0 selects 2·dim V_m
    double inflation = default_operator_inflation;
    int weight_exponent = 4;
    double frame_rotation = 0;  // rotates (ψ1, ψ2) about n, for gauge checks
};

/// Derivative stencils of one cloud point in its Monge chart. Column order of
/// `weights`: ∂_u, ∂_v, ∂_uu, ∂_uv, ∂_vv.
struct LocalStencils {
    std::vector<std::size_t> neighbors;
    MatX weights;
    TangentFrame frame;
    Geometry geometry;
    double support = 0;
};

struct GeneratorStencil {
    std::size_t center = 0;
    std::vector<std::size_t> neighbors;
    VecX weights;
    double apply(const std::vector<double>& values) const;
};

/// Per-point Monge-chart stencils for a whole cloud. The geometry stage and
/// the operator stage share one weighted least-squares factorization per
/// point, so any generator reduces to a combination of five stored stencils.
class SurfaceOperator {
public:
    /// Builds stencils at the listed points, or at every point when no list is given.
    SurfaceOperator(const PointCloud& cloud, const StencilOptions& options,
                    std::optional<std::vector<std::size_t>> points = std::nullopt);

    const PointCloud& cloud() const { return *cloud_; }
    const StencilOptions& options() const { return options_; }
    bool has(std::size_t i) const { return slot_[i] >= 0; }
    const LocalStencils& local(std::size_t i) const;

    GeneratorStencil generator_stencil(std::size_t i, const DriftDiffusionSpec& spec) const;
    /// (L̃u)(x_i) for every built point, in the order of `points()`.
    std::vector<double> apply(const DriftDiffusionSpec& spec, const std::vector<double>& values) const;
    const std::vector<std::size_t>& points() const { return points_; }

private:
    const PointCloud* cloud_;
    StencilOptions options_;
    std::vector<std::size_t> points_;
    std::vector<std::ptrdiff_t> slot_;
    std::vector<LocalStencils> local_;
};

LocalStencils build_local_stencils(const PointCloud& cloud, const KdTree& tree, std::size_t index,
                                   const StencilOptions& options, const Vec3& centroid);

/// Convenience: stencil of a single point built from scratch.
GeneratorStencil generator_stencil(const PointCloud& cloud, std::size_t index, const DriftDiffusionSpec& spec,
                                   int degree);

enum class ReferenceMethod { finite_difference, chain_rule };

/// Lu at a chart point from exact geometry. The finite-difference method
/// differentiates u∘σ with sixth-order centred stencils and one Richardson
/// level; the chain-rule method uses the field's analytic derivatives.
double reference_generator(const SurfaceModel& model, const DriftDiffusionSpec& spec, const ScalarField& u,
                           int chart, const Vec2& q, ReferenceMethod method = ReferenceMethod::finite_difference,
                           double step = 5e-3);
double reference_generator(const SurfaceModel& model, const DriftDiffusionSpec& spec, const ScalarField& u,
                           const Vec3& x, ReferenceMethod method = ReferenceMethod::finite_difference);

/// Lu from the implicit form only: with B = P b bᵀ P,
/// Lu = Pa·∇U + ½ B:∇²U − ½ (n·∇U)(B:∇²F)/|∇F|.
double reference_generator_implicit(const SurfaceModel& model, const DriftDiffusionSpec& spec, const ScalarField& u,
                                    const Vec3& x);

}  // namespace surfstat
