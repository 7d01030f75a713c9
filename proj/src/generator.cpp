#include "surfstat/generator.hpp"

#include <cmath>
#include <sstream>

#include "surfstat/error.hpp"

namespace surfstat {

// ---------------------------------------------------------------------------
// Fields

ScalarField harmonic_test_field() {
    ScalarField f;
    f.name = "z(x^4+y^4-6x^2y^2)";
    f.value = [](const Vec3& p) {
        const double x = p.x(), y = p.y(), z = p.z();
        return z * (x * x * x * x + y * y * y * y - 6 * x * x * y * y);
    };
    f.gradient = [](const Vec3& p) {
        const double x = p.x(), y = p.y(), z = p.z();
        const double q = x * x * x * x + y * y * y * y - 6 * x * x * y * y;
        return Vec3(z * (4 * x * x * x - 12 * x * y * y), z * (4 * y * y * y - 12 * x * x * y), q);
    };
    f.hessian = [](const Vec3& p) {
        const double x = p.x(), y = p.y(), z = p.z();
        const double qx = 4 * x * x * x - 12 * x * y * y, qy = 4 * y * y * y - 12 * x * x * y;
        const double qxx = 12 * x * x - 12 * y * y, qyy = 12 * y * y - 12 * x * x, qxy = -24 * x * y;
        Mat3 H;
        H << z * qxx, z * qxy, qx, z * qxy, z * qyy, qy, qx, qy, 0;
        return H;
    };
    return f;
}

ScalarField constant_field(double c) {
    return {"constant", [c](const Vec3&) { return c; }, [](const Vec3&) { return Vec3::Zero().eval(); },
            [](const Vec3&) { return Mat3::Zero().eval(); }};
}

ScalarField coordinate_field(int axis) {
    return {"x" + std::to_string(axis), [axis](const Vec3& p) { return p[axis]; },
            [axis](const Vec3&) { return Vec3::Unit(axis).eval(); }, [](const Vec3&) { return Mat3::Zero().eval(); }};
}

ScalarField radius_squared_field(bool include_z) {
    const Vec3 mask(1, 1, include_z ? 1 : 0);
    return {"r^2", [mask](const Vec3& p) { return p.cwiseProduct(mask).squaredNorm(); },
            [mask](const Vec3& p) { return (2 * p.cwiseProduct(mask)).eval(); },
            [mask](const Vec3&) { return Mat3((2 * mask).asDiagonal()); }};
}

// ---------------------------------------------------------------------------
// Drift-diffusion presets

DriftDiffusionSpec pure_diffusion(double D) {
    if (!(D >= 0)) throw Error(ErrorCode::invalid_argument, "diffusivity must be nonnegative");
    const double s = std::sqrt(2 * D);
    return {"diffusion:" + std::to_string(D), [](const Vec3&) { return Vec3::Zero().eval(); },
            [s](const Vec3&) { return (s * Mat3::Identity()).eval(); }};
}

DriftDiffusionSpec constant_drift_diffusion(const Vec3& a, double D) {
    const double s = std::sqrt(2 * D);
    return {"constant", [a](const Vec3&) { return a; }, [s](const Vec3&) { return (s * Mat3::Identity()).eval(); }};
}

namespace {

// Tangent columns (t1, t2) combined with coefficient rows: column k of b is
// c(0,k) t1 + c(1,k) t2.
Mat3 combine(const Vec3& t1, const Vec3& t2, const Eigen::Matrix<double, 2, 3>& c) {
    Mat3 b;
    for (int k = 0; k < 3; ++k) b.col(k) = c(0, k) * t1 + c(1, k) * t2;
    return b;
}

Eigen::Matrix<double, 2, 3> tangent_coefficients(const Vec3& p, double first_a) {
    const double x = p.x(), y = p.y(), z = p.z();
    Eigen::Matrix<double, 2, 3> c;
    c << first_a, x * y * z, 0, y * y, std::cos(y * y), y * y * y + x;
    return c;
}

struct EllipsoidFrame {
    Vec3 t1, t2;
};

EllipsoidFrame ellipsoid_frame(const Vec3& p, double a, double b, double s0) {
    const double cphi = std::max(-1.0, std::min(1.0, p.z() / s0));
    const double sphi = std::sqrt(1 - cphi * cphi);
    const double theta = std::atan2(p.y() / b, p.x() / a);
    const double ct = std::cos(theta), st = std::sin(theta);
    const Vec3 azimuthal = Vec3(-a * st, b * ct, 0).normalized();
    const Vec3 polar(a * cphi * ct, b * cphi * st, -sphi);
    return {azimuthal, (polar - polar.dot(azimuthal) * azimuthal).normalized()};
}

struct TorusTangents {
    Vec3 su, sv;
};

TorusTangents torus_tangents(const Vec3& p, double s1, double s2) {
    const double u = std::atan2(p.y(), p.x());
    const double v = std::atan2(p.z(), std::hypot(p.x(), p.y()) - s1);
    const double rho = s1 + s2 * std::cos(v);
    return {Vec3(-rho * std::sin(u), rho * std::cos(u), 0),
            Vec3(-s2 * std::sin(v) * std::cos(u), -s2 * std::sin(v) * std::sin(u), s2 * std::cos(v))};
}

}  // namespace

DriftDiffusionSpec manifold_a_spec(double a, double b, double s0) {
    DriftDiffusionSpec s;
    s.name = "manifold-A-ab";
    s.drift = [=](const Vec3& p) {
        const auto f = ellipsoid_frame(p, a, b, s0);
        return (p.y() * f.t1 + p.x() * p.z() * f.t2).eval();
    };
    s.diffusion = [=](const Vec3& p) {
        const auto f = ellipsoid_frame(p, a, b, s0);
        auto c = tangent_coefficients(p, p.x() * p.z());
        c(0, 2) = p.z();
        return combine(f.t1, f.t2, c);
    };
    return s;
}

DriftDiffusionSpec manifold_bc_spec() {
    DriftDiffusionSpec s;
    s.name = "manifold-BC-ab";
    s.drift = [](const Vec3& p) { return Vec3(p.y(), p.x() * p.z(), p.x() * p.x() * p.y() * p.z()); };
    s.diffusion = [](const Vec3& p) {
        const double x = p.x(), y = p.y(), z = p.z();
        Mat3 b;
        b << x * z, x * y * z, z,                     //
            y * y, std::cos(y * y), y * y * y + x,    //
            x * x + y, std::exp(-z), std::exp(y);
        return b;
    };
    return s;
}

DriftDiffusionSpec manifold_d_spec(double s1, double s2) {
    DriftDiffusionSpec s;
    s.name = "manifold-D-ab";
    s.drift = [=](const Vec3& p) {
        const auto t = torus_tangents(p, s1, s2);
        return (p.y() * t.su + p.x() * p.z() * t.sv).eval();
    };
    s.diffusion = [=](const Vec3& p) {
        const auto t = torus_tangents(p, s1, s2);
        auto c = tangent_coefficients(p, std::sin(p.x() * p.y()));
        c(0, 2) = std::exp(p.z());
        return combine(t.su, t.sv, c);
    };
    return s;
}

DriftDiffusionSpec double_well_spec(double k, double gamma, double kT, double s1, double s2) {
    if (!(gamma > 0 && kT >= 0)) throw Error(ErrorCode::invalid_argument, "double well needs γ > 0 and kT ≥ 0");
    (void)s1;
    (void)s2;
    const double noise = std::sqrt(2 * kT / gamma);
    DriftDiffusionSpec s;
    s.name = "double-well:" + std::to_string(k);
    // U = k sin²(u); on a torus about z, ∇U = g^{uu} ∂_u U σ_u = k sin(2u)/ρ² σ_u with σ_u = (−y, x, 0).
    s.drift = [=](const Vec3& p) {
        const double rho2 = p.x() * p.x() + p.y() * p.y();
        const double u = std::atan2(p.y(), p.x());
        return (-(k / gamma) * std::sin(2 * u) / rho2 * Vec3(-p.y(), p.x(), 0)).eval();
    };
    s.diffusion = [noise](const Vec3&) { return (noise * Mat3::Identity()).eval(); };
    return s;
}

DriftDiffusionSpec variable_diffusivity_spec(const Vec3& center, double c, double r, double D0) {
    if (!(c >= 0 && c < 1 && r >= 0 && D0 > 0)) {
        throw Error(ErrorCode::invalid_argument, "diffusivity needs 0 ≤ c < 1, r ≥ 0, D0 > 0");
    }
    const double s = std::sqrt(2 * D0);
    DriftDiffusionSpec spec;
    spec.name = "diffusivity";
    spec.drift = [](const Vec3&) { return Vec3::Zero().eval(); };
    spec.diffusion = [=](const Vec3& p) {
        const double bump = r > 0 ? std::exp(-(p - center).squaredNorm() / (r * r)) : 0.0;
        return (s * (1 - c * bump) * Mat3::Identity()).eval();
    };
    return spec;
}

DriftDiffusionSpec parse_spec(const std::string& text) {
    std::vector<std::string> parts;
    std::stringstream ss(text);
    for (std::string item; std::getline(ss, item, ':');) parts.push_back(item);
    if (parts.empty()) throw Error(ErrorCode::parse_error, "empty spec");
    auto arg = [&](std::size_t i) {
        try {
            std::size_t pos = 0;
            const double v = std::stod(parts.at(i), &pos);
            if (pos == parts[i].size()) return v;
        } catch (const std::exception&) {
        }
        throw Error(ErrorCode::parse_error, "bad parameter in spec '" + text + "'");
    };
    DriftDiffusionSpec spec;
    const std::string& kind = parts[0];
    if (kind == "diffusion" && parts.size() <= 2) {
        spec = pure_diffusion(parts.size() == 2 ? arg(1) : 1.0);
    } else if (kind == "constant" && parts.size() == 5) {
        spec = constant_drift_diffusion(Vec3(arg(1), arg(2), arg(3)), arg(4));
    } else if (kind == "manifold-A-ab" && parts.size() == 1) {
        spec = manifold_a_spec();
    } else if (kind == "manifold-BC-ab" && parts.size() == 1) {
        spec = manifold_bc_spec();
    } else if (kind == "manifold-D-ab" && parts.size() == 1) {
        spec = manifold_d_spec();
    } else if (kind == "double-well" && parts.size() == 2) {
        spec = double_well_spec(arg(1));
    } else if (kind == "langevin" && parts.size() == 5 && parts[1] == "double-well") {
        spec = double_well_spec(arg(2), arg(3), arg(4));
    } else if (kind == "diffusivity" && (parts.size() == 3 || parts.size() == 4)) {
        // Low-diffusivity center at (u, v) = (3π/4, π/2) on the sliced torus.
        const Vec3 center = parse_model("sliced-torus")->position(0, Vec2(3 * M_PI / 4, M_PI / 2));
        spec = variable_diffusivity_spec(center, arg(1), arg(2), parts.size() == 4 ? arg(3) : 1.0);
    } else {
        throw Error(ErrorCode::parse_error, "unknown spec preset '" + text + "'");
    }
    spec.name = text;
    return spec;
}

// ---------------------------------------------------------------------------

Vec3 project_to_tangent(const Vec3& v, const Vec3& normal) { return v - v.dot(normal) * normal; }

ChartCoefficients chart_coefficients(const Vec3& a, const Mat3& b, const Geometry& G) {
    const Mat32 S = G.tangents();
    ChartCoefficients c;
    c.beta = G.metric_inverse * S.transpose() * b;
    const Vec2 a_chart = G.metric_inverse * S.transpose() * a;
    const Mat2 bb = c.beta * c.beta.transpose();  // β^a·β^b
    for (int k = 0; k < 2; ++k) c.alpha[k] = a_chart[k] - 0.5 * (G.christoffel[k].cwiseProduct(bb)).sum();
    c.diffusion = 0.5 * bb;
    c.projection_residual = std::abs(a.dot(G.normal)) + (G.normal.transpose() * b).norm();
    return c;
}

ChartCoefficients chart_coefficients(const DriftDiffusionSpec& spec, const Geometry& G, const Vec3& x) {
    return chart_coefficients(spec.drift(x), spec.diffusion(x), G);
}

double apply_chart_generator(const ChartCoefficients& c, const Vec2& du, const Mat2& d2u) {
    return c.alpha.dot(du) + c.diffusion.cwiseProduct(d2u).sum();
}

// ---------------------------------------------------------------------------
// Stencils

double GeneratorStencil::apply(const std::vector<double>& values) const {
    double s = 0;
    for (std::size_t j = 0; j < neighbors.size(); ++j) s += weights[static_cast<Eigen::Index>(j)] * values[neighbors[j]];
    return s;
}

LocalStencils build_local_stencils(const PointCloud& cloud, const KdTree& tree, std::size_t index,
                                   const StencilOptions& options, const Vec3& centroid) {
    const int min_count = options.min_count > 0 ? options.min_count : default_min_count(options.degree);
    const Neighborhood nb = neighborhood_for(cloud, tree, index, min_count, options.inflation);
    std::vector<Vec3> pts;
    pts.reserve(nb.indices.size());
    for (auto j : nb.indices) pts.push_back(cloud.positions[j]);

    LocalStencils L;
    L.neighbors = nb.indices;
    L.support = nb.support;
    L.frame = estimate_frame(pts, cloud.positions[index], centroid);
    if (options.frame_rotation != 0) {
        const double c = std::cos(options.frame_rotation), s = std::sin(options.frame_rotation);
        const Vec3 p1 = c * L.frame.psi1 + s * L.frame.psi2;
        const Vec3 p2 = -s * L.frame.psi1 + c * L.frame.psi2;
        L.frame.psi1 = p1;
        L.frame.psi2 = p2;
    }

    const auto n = static_cast<Eigen::Index>(pts.size());
    MatX sites(n, 2);
    VecX weights(n), heights(n);
    const WeightFunction omega{nb.support, options.weight_exponent};
    for (Eigen::Index j = 0; j < n; ++j) {
        sites.row(j) = L.frame.tangent_coordinates(pts[j]).transpose();
        heights[j] = L.frame.height(pts[j]);
        weights[j] = omega(nb.distances[j]);
    }
    check_fold_over(sites);
    const PolynomialBasis basis(options.degree, 2, Vec2::Zero(), nb.support);
    const WeightedLeastSquares ls(sites, weights, basis);

    static const Eigen::Vector2i alphas[6] = {{0, 0}, {1, 0}, {0, 1}, {2, 0}, {1, 1}, {0, 2}};
    MatX targets(basis.dimension(), 6);
    for (int k = 0; k < 6; ++k) targets.col(k) = basis.derivative(Vec2::Zero(), alphas[k]);
    const MatX W = ls.stencils(targets);
    const VecX h = W.transpose() * heights;
    L.weights = W.rightCols(5);
    L.geometry = monge_geometry(L.frame, h[1], h[2], h[3], h[4], h[5]);
    L.geometry.sigma = L.frame.origin + h[0] * L.frame.normal;
    return L;
}

namespace {
Vec3 centroid_of(const PointCloud& cloud) {
    Vec3 c = Vec3::Zero();
    for (const auto& p : cloud.positions) c += p;
    return c / static_cast<double>(std::max<std::size_t>(cloud.size(), 1));
}

GeneratorStencil combine_stencil(const LocalStencils& L, std::size_t center, const ChartCoefficients& c) {
    GeneratorStencil g;
    g.center = center;
    g.neighbors = L.neighbors;
    g.weights = c.alpha[0] * L.weights.col(0) + c.alpha[1] * L.weights.col(1) + c.diffusion(0, 0) * L.weights.col(2) +
                2 * c.diffusion(0, 1) * L.weights.col(3) + c.diffusion(1, 1) * L.weights.col(4);
    return g;
}
}  // namespace

SurfaceOperator::SurfaceOperator(const PointCloud& cloud, const StencilOptions& options,
                                 std::optional<std::vector<std::size_t>> points)
    : cloud_(&cloud), options_(options), slot_(cloud.size(), -1) {
    if (points) {
        points_ = std::move(*points);
    } else {
        points_.resize(cloud.size());
        for (std::size_t i = 0; i < cloud.size(); ++i) points_[i] = i;
    }
    for (std::size_t k = 0; k < points_.size(); ++k) slot_[points_[k]] = static_cast<std::ptrdiff_t>(k);
    const KdTree tree(cloud.positions);
    const Vec3 centroid = centroid_of(cloud);
    local_.resize(points_.size());
    std::vector<std::optional<Error>> failure(points_.size());
#pragma omp parallel for schedule(dynamic, 32)
    for (std::ptrdiff_t k = 0; k < static_cast<std::ptrdiff_t>(points_.size()); ++k) {
        try {
            local_[k] = build_local_stencils(cloud, tree, points_[k], options_, centroid);
        } catch (const Error& e) {
            failure[k] = Error(e.code(), std::string("stencil construction failed: ") + e.what(), points_[k]);
        }
    }
    for (const auto& f : failure) {
        if (f) throw *f;
    }
}

const LocalStencils& SurfaceOperator::local(std::size_t i) const {
    if (i >= slot_.size() || slot_[i] < 0) throw Error(ErrorCode::invalid_argument, "no stencil at point", i);
    return local_[static_cast<std::size_t>(slot_[i])];
}

GeneratorStencil SurfaceOperator::generator_stencil(std::size_t i, const DriftDiffusionSpec& spec) const {
    const LocalStencils& L = local(i);
    const Vec3& x = cloud_->positions[i];
    return combine_stencil(L, i, chart_coefficients(spec, L.geometry, x));
}

std::vector<double> SurfaceOperator::apply(const DriftDiffusionSpec& spec, const std::vector<double>& values) const {
    std::vector<double> out(points_.size());
#pragma omp parallel for schedule(static)
    for (std::ptrdiff_t k = 0; k < static_cast<std::ptrdiff_t>(points_.size()); ++k) {
        out[k] = generator_stencil(points_[k], spec).apply(values);
    }
    return out;
}

GeneratorStencil generator_stencil(const PointCloud& cloud, std::size_t index, const DriftDiffusionSpec& spec,
                                   int degree) {
    const KdTree tree(cloud.positions);
    StencilOptions options;
    options.degree = degree;
    const LocalStencils L = build_local_stencils(cloud, tree, index, options, centroid_of(cloud));
    return combine_stencil(L, index, chart_coefficients(spec, L.geometry, cloud.positions[index]));
}

// ---------------------------------------------------------------------------
// Reference operators

namespace {

constexpr double d1[7] = {-1.0 / 60, 9.0 / 60, -45.0 / 60, 0, 45.0 / 60, -9.0 / 60, 1.0 / 60};
constexpr double d2[7] = {2.0 / 180, -27.0 / 180, 270.0 / 180, -490.0 / 180, 270.0 / 180, -27.0 / 180, 2.0 / 180};

struct ScalarDerivatives {
    Vec2 grad;
    Mat2 hess;
};

ScalarDerivatives differences(const std::function<double(const Vec2&)>& f, const Vec2& q, double h) {
    double grid[7][7];
    for (int i = 0; i < 7; ++i)
        for (int j = 0; j < 7; ++j) grid[i][j] = f(q + Vec2((i - 3) * h, (j - 3) * h));
    ScalarDerivatives d{Vec2::Zero(), Mat2::Zero()};
    for (int k = 0; k < 7; ++k) {
        d.grad[0] += d1[k] * grid[k][3];
        d.grad[1] += d1[k] * grid[3][k];
        d.hess(0, 0) += d2[k] * grid[k][3];
        d.hess(1, 1) += d2[k] * grid[3][k];
        for (int l = 0; l < 7; ++l) d.hess(0, 1) += d1[k] * d1[l] * grid[k][l];
    }
    d.grad /= h;
    d.hess(0, 0) /= h * h;
    d.hess(1, 1) /= h * h;
    d.hess(0, 1) /= h * h;
    d.hess(1, 0) = d.hess(0, 1);
    return d;
}

}  // namespace

double reference_generator(const SurfaceModel& model, const DriftDiffusionSpec& spec, const ScalarField& u, int chart,
                           const Vec2& q, ReferenceMethod method, double step) {
    const Geometry G = exact_geometry_at(model, chart, q);
    const ChartCoefficients c = chart_coefficients(spec, G, G.sigma);
    ScalarDerivatives d;
    if (method == ReferenceMethod::finite_difference) {
        const auto f = [&](const Vec2& p) { return u.value(model.position(chart, p)); };
        const ScalarDerivatives coarse = differences(f, q, step);
        const ScalarDerivatives fine = differences(f, q, step / 2);
        d.grad = (64 * fine.grad - coarse.grad) / 63;
        d.hess = (64 * fine.hess - coarse.hess) / 63;
    } else {
        const auto cd = model.analytic_derivatives(chart, q);
        const ChartDerivatives D = cd ? *cd : finite_difference_derivatives(model, chart, q);
        const Vec3 g = u.gradient(D.sigma);
        const Mat3 H = u.hessian(D.sigma);
        d.grad = Vec2(g.dot(D.sigma_u), g.dot(D.sigma_v));
        d.hess(0, 0) = D.sigma_u.dot(H * D.sigma_u) + g.dot(D.sigma_uu);
        d.hess(0, 1) = d.hess(1, 0) = D.sigma_u.dot(H * D.sigma_v) + g.dot(D.sigma_uv);
        d.hess(1, 1) = D.sigma_v.dot(H * D.sigma_v) + g.dot(D.sigma_vv);
    }
    return apply_chart_generator(c, d.grad, d.hess);
}

double reference_generator(const SurfaceModel& model, const DriftDiffusionSpec& spec, const ScalarField& u,
                           const Vec3& x, ReferenceMethod method) {
    const ChartPoint p = model.locate(x);
    return reference_generator(model, spec, u, p.chart, p.q, method);
}

double reference_generator_implicit(const SurfaceModel& model, const DriftDiffusionSpec& spec, const ScalarField& u,
                                    const Vec3& x) {
    const Vec3 gradF = model.implicit_gradient(x);
    const double normF = gradF.norm();
    const Vec3 n = gradF / normF;
    const Mat3 P = Mat3::Identity() - n * n.transpose();
    const Mat3 b = spec.diffusion(x);
    const Mat3 B = P * b * b.transpose() * P;
    const Vec3 gradU = u.gradient(x);
    return (P * spec.drift(x)).dot(gradU) + 0.5 * B.cwiseProduct(u.hessian(x)).sum() -
           0.5 * n.dot(gradU) * B.cwiseProduct(model.implicit_hessian(x)).sum() / normF;
}

}  // namespace surfstat
