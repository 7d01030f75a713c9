#include <gtest/gtest.h>

#include <cmath>
#include <numbers>
#include <random>

#include "surfstat/boundary.hpp"
#include "surfstat/error.hpp"
#include "surfstat/exact_geometry.hpp"
#include "surfstat/surface.hpp"

using namespace surfstat;
using std::numbers::pi;

namespace {

std::vector<SurfacePtr> catalog() {
    return {parse_model("A"),   parse_model("B"),    parse_model("C"),     parse_model("D"),
            parse_model("sphere"), parse_model("cap"), parse_model("disk"), parse_model("sliced-torus"),
            parse_model("truncated-torus"), make_neck(0.5), make_neck(1.0), make_sphere(2.0)};
}

// Random chart points away from the chart singularities.
std::vector<ChartPoint> chart_samples(const SurfaceModel& m, int count, unsigned seed) {
    std::mt19937 rng(seed);
    std::uniform_real_distribution<double> U(0, 1);
    std::vector<ChartPoint> out;
    const SeedDomain dom = m.seed_domain();
    while (static_cast<int>(out.size()) < count) {
        const Vec2 q = dom.lo + Vec2(U(rng), U(rng)).cwiseProduct(dom.hi - dom.lo);
        const ChartPoint p = m.locate(m.seed_position(q));
        if (m.chart_status(p.chart, p.q) == ChartStatus::ok) out.push_back(p);
    }
    return out;
}

}  // namespace

TEST(Surface, ParameterizationSatisfiesImplicitEquation) {
    for (const auto& m : catalog()) {
        for (const auto& p : chart_samples(*m, 200, 1)) {
            const Vec3 x = m->position(p.chart, p.q);
            EXPECT_LT(m->residual(x), 1e-12) << m->name();
        }
    }
}

TEST(Surface, LocateInvertsPosition) {
    for (const auto& m : catalog()) {
        for (const auto& p : chart_samples(*m, 100, 2)) {
            const Vec3 x = m->position(p.chart, p.q);
            const ChartPoint back = m->locate(x);
            EXPECT_LT((m->position(back.chart, back.q) - x).norm(), 1e-12) << m->name();
        }
    }
}

TEST(Surface, NameRoundTripsThroughParser) {
    for (const auto& m : catalog()) EXPECT_EQ(parse_model(m->name())->name(), m->name());
    EXPECT_THROW(parse_model("klein-bottle"), Error);
    EXPECT_THROW(parse_model("torus:0.7"), Error);
}

TEST(Surface, AnalyticDerivativesMatchFiniteDifferences) {
    for (const auto& m : catalog()) {
        for (const auto& p : chart_samples(*m, 30, 3)) {
            const auto exact = m->analytic_derivatives(p.chart, p.q);
            ASSERT_TRUE(exact.has_value()) << m->name();
            const auto fd = finite_difference_derivatives(*m, p.chart, p.q, 1e-3);
            EXPECT_LT((exact->sigma_u - fd.sigma_u).norm(), 1e-9) << m->name();
            EXPECT_LT((exact->sigma_v - fd.sigma_v).norm(), 1e-9) << m->name();
            EXPECT_LT((exact->sigma_uu - fd.sigma_uu).norm(), 1e-7) << m->name();
            EXPECT_LT((exact->sigma_uv - fd.sigma_uv).norm(), 1e-7) << m->name();
            EXPECT_LT((exact->sigma_vv - fd.sigma_vv).norm(), 1e-7) << m->name();
        }
    }
}

TEST(Surface, ImplicitGradientAndHessianMatchDifferences) {
    for (const auto& m : catalog()) {
        for (const auto& p : chart_samples(*m, 20, 4)) {
            // Off-surface point along the normal.
            const Vec3 x = m->position(p.chart, p.q) + 0.01 * m->normal(m->position(p.chart, p.q));
            const double h = 1e-5;
            Vec3 g_fd;
            Mat3 H_fd;
            for (int a = 0; a < 3; ++a) {
                const Vec3 e = h * Vec3::Unit(a);
                g_fd[a] = (m->implicit(x + e) - m->implicit(x - e)) / (2 * h);
                H_fd.col(a) = (m->implicit_gradient(x + e) - m->implicit_gradient(x - e)) / (2 * h);
            }
            EXPECT_LT((m->implicit_gradient(x) - g_fd).norm(), 1e-7) << m->name();
            EXPECT_LT((m->implicit_hessian(x) - H_fd).norm(), 1e-5) << m->name();
        }
    }
}

TEST(Surface, ClosestPointIsOrthogonalProjection) {
    std::mt19937 rng(5);
    std::normal_distribution<double> N(0, 0.02);
    for (const auto& m : catalog()) {
        for (const auto& p : chart_samples(*m, 50, 6)) {
            const Vec3 x = m->position(p.chart, p.q) + Vec3(N(rng), N(rng), N(rng));
            const Vec3 y = m->closest_point(x);
            EXPECT_LT(m->residual(y), 1e-12) << m->name();
            // x − y is parallel to the normal at y.
            EXPECT_LT((x - y).cross(m->normal(y)).norm(), 1e-10) << m->name();
        }
    }
}

TEST(Surface, AreasMatchClosedForms) {
    EXPECT_NEAR(make_sphere(1)->area(), 4 * pi, 1e-4);
    EXPECT_NEAR(make_spherical_cap(1)->area(), 2 * pi, 1e-4);
    EXPECT_NEAR(make_flat_disk(1)->area(), pi, 1e-10);
    EXPECT_NEAR(make_torus(0.7, 0.3)->area(), 4 * pi * pi * 0.21, 1e-10);
    // Oblate spheroid with semi-axes 1.2, 1.2, 1.
    const double e = std::sqrt(1 - 1 / 1.44);
    const double oblate = 2 * pi * 1.44 * (1 + (1 - e * e) / e * std::atanh(e));
    EXPECT_NEAR(parse_model("A")->area(), oblate, 1e-4);
}

TEST(ExactGeometry, TrivialSurfaces) {
    const auto disk = make_flat_disk(1);
    const Geometry g = exact_geometry_at(*disk, 0, Vec2(0.3, -0.2));
    EXPECT_NEAR(g.gaussian_curvature, 0, 1e-15);
    EXPECT_TRUE(g.metric.isIdentity(1e-15));
    EXPECT_TRUE(g.christoffel[0].isZero(1e-15));
    EXPECT_TRUE(g.christoffel[1].isZero(1e-15));

    const auto sphere = make_sphere(1);
    for (const auto& p : chart_samples(*sphere, 20, 7)) {
        EXPECT_NEAR(exact_geometry_at(*sphere, p.chart, p.q).gaussian_curvature, 1.0, 1e-12);
    }
}

TEST(ExactGeometry, TorusCurvatureClosedForm) {
    const auto torus = make_torus(0.7, 0.3);
    EXPECT_NEAR(exact_geometry_at(*torus, 0, Vec2(0.4, 0)).gaussian_curvature, 1 / 0.3, 1e-12);
    EXPECT_NEAR(exact_geometry_at(*torus, 0, Vec2(1.1, pi)).gaussian_curvature, -1 / (0.3 * 0.4), 1e-12);
    for (double v = 0; v < 2 * pi; v += 0.37) {
        const double K = std::cos(v) / (0.3 * (0.7 + 0.3 * std::cos(v)));
        EXPECT_NEAR(exact_geometry_at(*torus, 0, Vec2(2.0, v)).gaussian_curvature, K, 1e-12);
    }
}

TEST(ExactGeometry, AlgebraicInvariants) {
    for (const auto& m : catalog()) {
        for (const auto& p : chart_samples(*m, 20, 8)) {
            const Geometry g = exact_geometry_at(*m, p.chart, p.q);
            EXPECT_LT((g.metric * g.metric_inverse - Mat2::Identity()).norm(), 1e-12);
            EXPECT_NEAR(g.area_factor, g.sigma_u.cross(g.sigma_v).norm(), 1e-12);
            EXPECT_NEAR(g.area_factor, std::sqrt(g.metric.determinant()), 1e-10 * g.area_factor);
            EXPECT_NEAR(g.metric(0, 0), g.sigma_u.dot(g.sigma_u), 1e-10);
            EXPECT_NEAR(g.metric(0, 1), g.sigma_u.dot(g.sigma_v), 1e-10);
            EXPECT_GT(g.metric.determinant(), 0);
            for (int k = 0; k < 2; ++k) EXPECT_NEAR(g.christoffel[k](0, 1), g.christoffel[k](1, 0), 1e-14);
        }
    }
}

TEST(ExactGeometry, FiniteDifferenceFallbackAgrees) {
    const auto m = parse_model("B");
    for (const auto& p : chart_samples(*m, 10, 9)) {
        const Geometry exact = exact_geometry_at(*m, p.chart, p.q);
        const Geometry fd = geometry_from_derivatives(finite_difference_derivatives(*m, p.chart, p.q));
        EXPECT_NEAR(exact.gaussian_curvature, fd.gaussian_curvature, 1e-6);
        for (int k = 0; k < 2; ++k) EXPECT_LT((exact.christoffel[k] - fd.christoffel[k]).norm(), 1e-6);
    }
}

TEST(ExactGeometry, ChartErrors) {
    const auto sphere = make_sphere(1);
    try {
        exact_geometry_at(*sphere, 0, Vec2(0.1, 4.0));
        FAIL();
    } catch (const Error& e) {
        EXPECT_EQ(e.code(), ErrorCode::chart_out_of_range);
    }
    try {
        exact_geometry_at(*sphere, 0, Vec2(0.1, 1e-5));
        FAIL();
    } catch (const Error& e) {
        EXPECT_EQ(e.code(), ErrorCode::singular_parameterization);
    }
}

TEST(ExactGeometry, MongeCurvatureMatchesWeingarten) {
    // Graph surface z = h(x, y) through a general chart: Weingarten K equals the
    // Monge closed form (h_uu h_vv − h_uv²)/(1 + |∇h|²)².
    const auto neck = make_neck(0.6);
    for (double x = -0.5; x <= 0.5; x += 0.25) {
        for (double y = -0.5; y <= 0.5; y += 0.25) {
            const auto d = *neck->analytic_derivatives(1, Vec2(x, y));
            const double hu = d.sigma_u.z(), hv = d.sigma_v.z();
            const double monge = (d.sigma_uu.z() * d.sigma_vv.z() - d.sigma_uv.z() * d.sigma_uv.z()) /
                                 std::pow(1 + hu * hu + hv * hv, 2);
            EXPECT_NEAR(geometry_from_derivatives(d).gaussian_curvature, monge, 1e-8);
            EXPECT_NEAR(monge, 1.0, 1e-10);  // unit hemisphere
        }
    }
}

TEST(Neck, ProfileIsContinuousAndHasPrescribedArcLength) {
    for (double r0 : {0.1, 0.3, 0.6, 1.0}) {
        const NeckProfile p = neck_profile(r0);
        EXPECT_NEAR(p.bump_arc_length(), pi / 2, 1e-9);
        EXPECT_NEAR(p.radius(0), r0, 1e-15);
        EXPECT_NEAR(p.radius(p.junction_z), 1.0, 1e-12);
        EXPECT_NEAR(p.radius_dz(p.junction_z - 1e-12), 0.0, 1e-6);
        EXPECT_NEAR(p.total_arc_length(), 0.05 + pi, 1e-9);
        const Vec2 top = p.at_arc_length(p.total_arc_length());
        EXPECT_NEAR(top.x(), 0.0, 1e-9);
        EXPECT_NEAR(top.y(), p.junction_z + 1, 1e-9);
    }
}

TEST(Boundary, RulesParseAndClassify) {
    const auto rule = BoundaryRule::parse("z:0:0.04");
    EXPECT_EQ(rule.to_string(), "z:0:0.04");
    EXPECT_TRUE(rule.is_boundary(Vec3(0, 0, 0.039)));
    EXPECT_FALSE(rule.is_boundary(Vec3(0, 0, 0.041)));
    EXPECT_TRUE(rule.absorbs(Vec3(0, 0, -0.5)));
    const auto rim = BoundaryRule::parse("rim:1:0.04");
    EXPECT_TRUE(rim.is_boundary(Vec3(0.97, 0, 0)));
    EXPECT_FALSE(rim.is_boundary(Vec3(0.9, 0, 0)));
    const auto wedge = BoundaryRule::parse("wedge:0.78539816339744828:5.497787143782138:0.04");
    EXPECT_GT(wedge.signed_value(Vec3(-1, 0, 0)), 0.5);
    EXPECT_NEAR(wedge.signed_value(Vec3(1, 1, 0) / std::sqrt(2.0)), 0.0, 1e-12);
    EXPECT_THROW(BoundaryRule::parse("z:0"), Error);
    EXPECT_TRUE(BoundaryRule::parse("none").is_none());
}
