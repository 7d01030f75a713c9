#pragma once

#include <limits>
#include <memory>
#include <optional>
#include <string>
#include <vector>

#include "surfstat/types.hpp"

namespace surfstat {

/// A point expressed in one of a surface's coordinate charts.
struct ChartPoint {
    int chart = 0;
    Vec2 q = Vec2::Zero();
};

/// Embedding map and its first and second chart derivatives at one chart point.
struct ChartDerivatives {
    Vec3 sigma;
    Vec3 sigma_u, sigma_v;
    Vec3 sigma_uu, sigma_uv, sigma_vv;
};

enum class ChartStatus { ok, out_of_range, singular };

/// Straight segment in seed-parameter space along which boundary nodes are
/// placed. Closed curves omit the duplicated end point.
struct BoundaryCurve {
    Vec2 from;
    Vec2 to;
    bool closed = true;
};

/// Axis-aligned rectangle in seed-parameter space.
struct SeedDomain {
    Vec2 lo;
    Vec2 hi;
};

/// Exact description of a benchmark surface.
///
/// Every model supplies an implicit form F(x) = 0 with analytic gradient and
/// Hessian, one or more coordinate charts, and a seed parameterization used by
/// the sampler. Surfaces with boundary additionally provide a clip function
/// that is nonnegative on the retained part and the boundary curves in seed
/// coordinates.
class SurfaceModel {
public:
    virtual ~SurfaceModel() = default;

    /// Canonical model string, e.g. "torus:0.7:0.3". parse_model() inverts it.
    virtual std::string name() const = 0;

    virtual double implicit(const Vec3& x) const = 0;
    virtual Vec3 implicit_gradient(const Vec3& x) const = 0;
    virtual Mat3 implicit_hessian(const Vec3& x) const = 0;

    /// Closest point on the (unclipped) surface. The default is a Lagrange
    /// Newton iteration on F started from x.
    virtual Vec3 closest_point(const Vec3& x) const;

    /// Closest point together with the unit normal there; models with a
    /// closed-form projection override this to share the work.
    virtual Vec3 project(const Vec3& x, Vec3& normal_out) const {
        const Vec3 y = closest_point(x);
        normal_out = normal(y);
        return y;
    }

    /// Unit normal ∇F/|∇F|.
    Vec3 normal(const Vec3& x) const { return implicit_gradient(x).normalized(); }

    /// Geometric residual |F|/|∇F|, a first-order distance to the surface.
    double residual(const Vec3& x) const;

    virtual int chart_count() const = 0;
    virtual Vec3 position(int chart, const Vec2& q) const = 0;
    virtual ChartStatus chart_status(int chart, const Vec2& q) const = 0;
    /// Chart point of a surface point, choosing a chart away from singularities.
    virtual ChartPoint locate(const Vec3& x) const = 0;
    /// Closed-form derivatives when the model has them.
    virtual std::optional<ChartDerivatives> analytic_derivatives(int /*chart*/, const Vec2& /*q*/) const {
        return std::nullopt;
    }

    virtual SeedDomain seed_domain() const = 0;
    virtual Vec3 seed_position(const Vec2& q) const = 0;
    /// Area element of the seed parameterization. Defaults to finite differences.
    virtual double seed_area_element(const Vec2& q) const;

    /// Nonnegative inside the retained surface part; +inf for closed surfaces.
    virtual double clip(const Vec3& /*x*/) const { return std::numeric_limits<double>::infinity(); }
    virtual std::vector<BoundaryCurve> boundary_curves() const { return {}; }
    bool has_boundary() const { return !boundary_curves().empty(); }

    /// Surface area of the retained part by tensor quadrature of the seed map.
    double area(int resolution = 512) const;
};

using SurfacePtr = std::shared_ptr<const SurfaceModel>;

/// x²/a² + y²/b² + z² = s0².
SurfacePtr make_ellipsoid(double a, double b, double s0);
SurfacePtr make_sphere(double radius);
/// Sphere restricted to z ≥ 0 with the equator as boundary.
SurfacePtr make_spherical_cap(double radius);
/// r(φ, θ) = 1 + r0 sin(mφ φ) cos(θ) with φ polar and θ azimuthal.
SurfacePtr make_radial_harmonic(double r0, int polar_order);
/// Torus about the z axis with major radius s1 and tube radius s2.
SurfacePtr make_torus(double s1, double s2);
/// Torus about the z axis restricted to azimuth u ∈ [u_min, u_max].
SurfacePtr make_truncated_torus(double u_min, double u_max, double s1, double s2);
/// Torus about the x axis, (minor sin v, (major + minor cos v) sin u, −(major + minor cos v) cos u),
/// restricted to z ≥ 0.
SurfacePtr make_sliced_torus(double minor, double major);
/// Flat disk of radius R in the plane z = 0.
SurfacePtr make_flat_disk(double radius);
/// Cylinder of radius r0 on z ∈ [0, 0.05], smooth bump flare, unit hemisphere cap.
SurfacePtr make_neck(double r0);

/// Builds a model from its canonical string or a catalog alias (A, B, C, D,
/// sphere, cap, disk, sliced-torus, truncated-torus, neck:<r0>).
SurfacePtr parse_model(const std::string& text);

/// Profile data of a neck surface, exposed for the free-energy output.
struct NeckProfile {
    double r0;
    double amplitude;   // 1 − r0
    double bump_length; // b
    double cylinder_height;
    double junction_z;  // 0.05 + b
    /// Radius of the surface of revolution at height z ∈ [0, junction_z + 1].
    double radius(double z) const;
    double radius_dz(double z) const;
    double radius_dzz(double z) const;
    double bump_arc_length() const;
    /// Arc length along the profile from z = 0 to the top pole.
    double total_arc_length() const;
    /// Profile point (radius, z) at arc length s from the boundary circle.
    Vec2 at_arc_length(double s) const;
};

NeckProfile neck_profile(double r0);

}  // namespace surfstat
