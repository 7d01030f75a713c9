#include "surfstat/exact_geometry.hpp"

#include <Eigen/Dense>

#include "surfstat/error.hpp"

namespace surfstat {

Geometry geometry_from_derivatives(const ChartDerivatives& d) {
    Geometry G;
    G.sigma = d.sigma;
    G.sigma_u = d.sigma_u;
    G.sigma_v = d.sigma_v;
    const Vec3 cross = d.sigma_u.cross(d.sigma_v);
    G.area_factor = cross.norm();
    G.normal = cross / G.area_factor;
    G.metric << d.sigma_u.dot(d.sigma_u), d.sigma_u.dot(d.sigma_v), d.sigma_v.dot(d.sigma_u),
        d.sigma_v.dot(d.sigma_v);
    G.metric_inverse = G.metric.inverse();

    const Vec3 second[2][2] = {{d.sigma_uu, d.sigma_uv}, {d.sigma_uv, d.sigma_vv}};
    const Vec3 tangent[2] = {d.sigma_u, d.sigma_v};
    for (int i = 0; i < 2; ++i) {
        for (int j = 0; j < 2; ++j) {
            const Vec2 lowered(second[i][j].dot(tangent[0]), second[i][j].dot(tangent[1]));
            const Vec2 raised = G.metric_inverse * lowered;
            G.christoffel[0](i, j) = raised(0);
            G.christoffel[1](i, j) = raised(1);
            G.second_form(i, j) = second[i][j].dot(G.normal);
        }
    }
    G.gaussian_curvature = G.second_form.determinant() / G.metric.determinant();
    return G;
}

namespace {

// Sixth-order centred stencils on offsets −3..3.
constexpr double first_stencil[7] = {-1.0 / 60, 9.0 / 60, -45.0 / 60, 0, 45.0 / 60, -9.0 / 60, 1.0 / 60};
constexpr double second_stencil[7] = {2.0 / 180,    -27.0 / 180, 270.0 / 180, -490.0 / 180,
                                      270.0 / 180, -27.0 / 180, 2.0 / 180};

ChartDerivatives difference_once(const SurfaceModel& model, int chart, const Vec2& q, double h) {
    Vec3 grid[7][7];
    for (int i = 0; i < 7; ++i) {
        for (int j = 0; j < 7; ++j) {
            // Only the axis lines and the tensor product for the mixed term are needed,
            // but the full grid keeps the code simple and costs 49 evaluations.
            grid[i][j] = model.position(chart, q + Vec2((i - 3) * h, (j - 3) * h));
        }
    }
    ChartDerivatives d;
    d.sigma = grid[3][3];
    d.sigma_u = d.sigma_v = d.sigma_uu = d.sigma_vv = d.sigma_uv = Vec3::Zero();
    for (int k = 0; k < 7; ++k) {
        d.sigma_u += first_stencil[k] * grid[k][3];
        d.sigma_v += first_stencil[k] * grid[3][k];
        d.sigma_uu += second_stencil[k] * grid[k][3];
        d.sigma_vv += second_stencil[k] * grid[3][k];
        for (int l = 0; l < 7; ++l) d.sigma_uv += first_stencil[k] * first_stencil[l] * grid[k][l];
    }
    d.sigma_u /= h;
    d.sigma_v /= h;
    d.sigma_uu /= h * h;
    d.sigma_vv /= h * h;
    d.sigma_uv /= h * h;
    return d;
}

}  // namespace

ChartDerivatives finite_difference_derivatives(const SurfaceModel& model, int chart, const Vec2& q, double step) {
    const ChartDerivatives coarse = difference_once(model, chart, q, step);
    const ChartDerivatives fine = difference_once(model, chart, q, step / 2);
    constexpr double r = 64.0;
    auto extrapolate = [&](const Vec3& c, const Vec3& f) -> Vec3 { return (r * f - c) / (r - 1); };
    ChartDerivatives d;
    d.sigma = fine.sigma;
    d.sigma_u = extrapolate(coarse.sigma_u, fine.sigma_u);
    d.sigma_v = extrapolate(coarse.sigma_v, fine.sigma_v);
    d.sigma_uu = extrapolate(coarse.sigma_uu, fine.sigma_uu);
    d.sigma_uv = extrapolate(coarse.sigma_uv, fine.sigma_uv);
    d.sigma_vv = extrapolate(coarse.sigma_vv, fine.sigma_vv);
    return d;
}

Geometry exact_geometry_at(const SurfaceModel& model, int chart, const Vec2& q) {
    switch (model.chart_status(chart, q)) {
    case ChartStatus::out_of_range:
        throw Error(ErrorCode::chart_out_of_range, model.name() + " chart " + std::to_string(chart));
    case ChartStatus::singular:
        throw Error(ErrorCode::singular_parameterization, model.name() + " chart " + std::to_string(chart));
    case ChartStatus::ok: break;
    }
    if (auto d = model.analytic_derivatives(chart, q)) return geometry_from_derivatives(*d);
    return geometry_from_derivatives(finite_difference_derivatives(model, chart, q));
}

Geometry exact_geometry_at(const SurfaceModel& model, const Vec3& x) {
    const ChartPoint p = model.locate(x);
    return exact_geometry_at(model, p.chart, p.q);
}

}  // namespace surfstat
