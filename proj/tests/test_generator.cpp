#include <gtest/gtest.h>

#include <cmath>
#include <random>

#include "surfstat/error.hpp"
#include "surfstat/exact_geometry.hpp"
#include "surfstat/generator.hpp"
#include "surfstat/sampling.hpp"
#include "surfstat/surface.hpp"

using namespace surfstat;

namespace {

PointCloud cloud_for(const std::string& model, double h) {
    SamplingPlan plan;
    plan.target_h = h;
    return sample_cloud(*parse_model(model), plan);
}

std::vector<double> sample(const PointCloud& cloud, const ScalarField& u) {
    std::vector<double> v;
    for (const auto& p : cloud.positions) v.push_back(u.value(p));
    return v;
}

double rms(const std::vector<double>& a) {
    double s = 0;
    for (double x : a) s += x * x;
    return std::sqrt(s / static_cast<double>(a.size()));
}

}  // namespace

TEST(ProjectToTangent, Examples) {
    const Vec3 n = Vec3(1, 2, 2) / 3.0;
    EXPECT_LT(project_to_tangent(n, n).norm(), 1e-15);
    const Vec3 t = Vec3(2, -1, 0) / std::sqrt(5.0);
    EXPECT_LT((project_to_tangent(t, n) - t).norm(), 1e-15);
    EXPECT_EQ(project_to_tangent(Vec3(1, 0, 0), Vec3(0, 0, 1)), Vec3(1, 0, 0));
}

TEST(ChartCoefficients, FlatPlane) {
    const Geometry G = geometry_from_derivatives(
        ChartDerivatives{Vec3::Zero(), Vec3::UnitX(), Vec3::UnitY(), Vec3::Zero(), Vec3::Zero(), Vec3::Zero()});
    const auto c = chart_coefficients(Vec3(0.4, -1.5, 0), Mat3::Identity(), G);
    EXPECT_LT((c.alpha - Vec2(0.4, -1.5)).norm(), 1e-15);
    EXPECT_LT((c.diffusion - 0.5 * Mat2::Identity()).norm(), 1e-15);
}

TEST(ChartCoefficients, ProjectorDiffusionOnSphereGivesInverseMetric) {
    const auto sphere = make_sphere(1.0);
    const double D = 0.7;
    for (double phi : {0.4, 1.0, 2.2}) {
        const Geometry G = exact_geometry_at(*sphere, 0, Vec2(1.3, phi));
        const Mat3 P = Mat3::Identity() - G.normal * G.normal.transpose();
        const auto c = chart_coefficients(Vec3::Zero(), std::sqrt(2 * D) * P, G);
        EXPECT_LT((c.diffusion - D * G.metric_inverse).norm(), 1e-12);
    }
}

TEST(ChartCoefficients, NormalDriftIsPurelyGeometric) {
    const auto torus = make_torus(0.7, 0.3);
    const Geometry G = exact_geometry_at(*torus, 0, Vec2(0.9, 2.1));
    const Mat3 b = manifold_bc_spec().diffusion(G.sigma);
    const auto c = chart_coefficients(3.0 * G.normal, b, G);
    const Mat2 bb = c.beta * c.beta.transpose();
    for (int k = 0; k < 2; ++k) EXPECT_NEAR(c.alpha[k], -0.5 * G.christoffel[k].cwiseProduct(bb).sum(), 1e-12);
}

TEST(ChartCoefficients, ReconstructionSymmetryAndNullSpace) {
    std::mt19937 rng(5);
    std::uniform_real_distribution<double> U(0, 2 * M_PI);
    const auto model = parse_model("B");
    const auto spec = manifold_bc_spec();
    for (int trial = 0; trial < 40; ++trial) {
        const Geometry G = exact_geometry_at(*model, 0, Vec2(U(rng), 0.3 + U(rng) / 2.5));
        const Mat3 b = spec.diffusion(G.sigma);
        const auto c = chart_coefficients(spec.drift(G.sigma), b, G);
        const Mat3 P = Mat3::Identity() - G.normal * G.normal.transpose();
        EXPECT_LT((G.tangents() * c.beta - P * b).norm(), 1e-10 * (1 + b.norm()));
        EXPECT_LT((c.diffusion - c.diffusion.transpose()).norm(), 1e-14);
        EXPECT_GE(Eigen::SelfAdjointEigenSolver<Mat2>(c.diffusion).eigenvalues().minCoeff(), -1e-12);

        // Normal components of b do not reach the chart diffusion.
        Mat3 bn = b;
        for (int k = 0; k < 3; ++k) bn.col(k) += (k + 1.5) * G.normal;
        const auto cn = chart_coefficients(Vec3::Zero(), bn, G);
        EXPECT_LT((cn.diffusion - c.diffusion).norm(), 1e-10 * (1 + c.diffusion.norm()));
        const auto c0 = chart_coefficients(Vec3::Zero(), G.normal * Vec3(1, 2, 3).transpose(), G);
        EXPECT_LT(c0.beta.norm(), 1e-12);
    }
}

TEST(SpecPresets, ParseAndEvaluate) {
    EXPECT_EQ(parse_spec("diffusion").diffusion(Vec3::Zero()), std::sqrt(2.0) * Mat3::Identity());
    EXPECT_EQ(parse_spec("diffusion:2").diffusion(Vec3::Zero()), 2.0 * Mat3::Identity());
    const auto dw = parse_spec("double-well:1");
    EXPECT_LT(dw.drift(Vec3(0.7, 0, 0.3)).norm(), 1e-15);
    // At u = π/4, ∂_u U = k sin 2u = k and |σ_u| = ρ, so the gradient has magnitude k/ρ.
    const Vec3 x(0.7 / std::sqrt(2.0), 0.7 / std::sqrt(2.0), 0.3);
    EXPECT_NEAR(dw.drift(x).norm(), 1.0 / 0.7, 1e-12);
    const auto diff = parse_spec("diffusivity:0.9:0.5");
    const Vec3 xc(0.4, std::sqrt(0.5), std::sqrt(0.5));
    EXPECT_NEAR(diff.diffusion(xc)(0, 0), std::sqrt(2.0) * 0.1, 1e-12);
    EXPECT_THROW(parse_spec("nonsense"), Error);
    EXPECT_THROW(parse_spec("diffusion:x"), Error);
}

TEST(SpecPresets, TangentialManufacturedFields) {
    const auto a = parse_model("A");
    const auto d = parse_model("D");
    const auto sa = manifold_a_spec();
    const auto sd = manifold_d_spec();
    std::mt19937 rng(9);
    std::uniform_real_distribution<double> U(0.2, 2.9);
    for (int k = 0; k < 20; ++k) {
        const Geometry ga = exact_geometry_at(*a, 0, Vec2(2 * U(rng), U(rng)));
        EXPECT_LT(std::abs(sa.drift(ga.sigma).dot(ga.normal)), 1e-12);
        EXPECT_LT((ga.normal.transpose() * sa.diffusion(ga.sigma)).norm(), 1e-12);
        const Geometry gd = exact_geometry_at(*d, 0, Vec2(2 * U(rng), 2 * U(rng)));
        EXPECT_LT(std::abs(sd.drift(gd.sigma).dot(gd.normal)), 1e-12);
        EXPECT_LT((gd.normal.transpose() * sd.diffusion(gd.sigma)).norm(), 1e-12);
    }
}

TEST(ReferenceGenerator, RoutesAgreeOnCatalogFields) {
    const std::vector<std::pair<std::string, DriftDiffusionSpec>> cases{
        {"A", manifold_a_spec()}, {"B", manifold_bc_spec()}, {"C", manifold_bc_spec()}, {"D", manifold_d_spec()}};
    const ScalarField u = harmonic_test_field();
    std::mt19937 rng(21);
    std::uniform_real_distribution<double> U(0.3, 2.8);
    for (const auto& [name, spec] : cases) {
        const auto model = parse_model(name);
        for (int k = 0; k < 10; ++k) {
            const Vec2 q(2 * U(rng), U(rng));
            const Vec3 x = model->position(0, q);
            const double fd = reference_generator(*model, spec, u, 0, q, ReferenceMethod::finite_difference);
            const double cr = reference_generator(*model, spec, u, 0, q, ReferenceMethod::chain_rule);
            const double im = reference_generator_implicit(*model, spec, u, x);
            const double scale = 1 + std::abs(im);
            EXPECT_NEAR(fd, im, 1e-8 * scale) << name;
            EXPECT_NEAR(cr, im, 1e-8 * scale) << name;
        }
    }
}

TEST(ReferenceGenerator, AnalyticIdentities) {
    const auto sphere = make_sphere(1.0);
    const auto lap = pure_diffusion(1.0);
    const ScalarField u = harmonic_test_field();
    for (const Vec2 q : {Vec2(0.3, 0.7), Vec2(2.0, 1.3), Vec2(4.4, 2.5)}) {
        const Vec3 x = sphere->position(0, q);
        EXPECT_NEAR(reference_generator(*sphere, lap, u, 0, q), -30 * u.value(x), 1e-8 * (1 + std::abs(u.value(x))));
        EXPECT_NEAR(reference_generator(*sphere, lap, coordinate_field(2), 0, q), -2 * x.z(), 1e-9);
        EXPECT_NEAR(reference_generator(*sphere, manifold_bc_spec(), constant_field(3), 0, q), 0, 1e-9);
    }
    const auto disk = make_flat_disk(1.0);
    EXPECT_NEAR(reference_generator(*disk, lap, radius_squared_field(false), 0, Vec2(0.5, 1.0)), 4, 1e-8);
}

TEST(Stencil, ConstantIsAnnihilated) {
    const PointCloud cloud = cloud_for("B", 0.1);
    const SurfaceOperator op(cloud, StencilOptions{});
    const auto out = op.apply(manifold_bc_spec(), std::vector<double>(cloud.size(), 2.5));
    for (double v : out) EXPECT_LT(std::abs(v), 1e-9);
}

TEST(Stencil, ReproducesChartPolynomials) {
    const PointCloud cloud = cloud_for("D", 0.08);
    const auto spec = manifold_d_spec();
    std::mt19937 rng(2);
    std::uniform_real_distribution<double> U(-1, 1);
    for (int m : {2, 4}) {
        StencilOptions opt;
        opt.degree = m;
        std::vector<std::size_t> pts;
        for (std::size_t i = 0; i < cloud.size(); i += 97) pts.push_back(i);
        const SurfaceOperator op(cloud, opt, pts);
        for (auto i : pts) {
            const LocalStencils& L = op.local(i);
            // p(u, v) in the center's tangent coordinates, scaled to the support.
            const PolynomialBasis basis(m, 2, Vec2::Zero(), L.support);
            VecX c(basis.dimension());
            for (Eigen::Index k = 0; k < c.size(); ++k) c[k] = U(rng);
            std::vector<double> values(cloud.size(), 0.0);
            for (auto j : L.neighbors) values[j] = c.dot(basis.evaluate(L.frame.tangent_coordinates(cloud.positions[j])));
            const auto dp = [&](int a, int b) { return c.dot(basis.derivative(Vec2::Zero(), Eigen::Vector2i(a, b))); };
            Mat2 d2;
            d2 << dp(2, 0), dp(1, 1), dp(1, 1), dp(0, 2);
            const auto coeff = chart_coefficients(spec, L.geometry, cloud.positions[i]);
            const double expected = apply_chart_generator(coeff, Vec2(dp(1, 0), dp(0, 1)), d2);
            EXPECT_NEAR(op.generator_stencil(i, spec).apply(values), expected, 1e-9 * (1 + std::abs(expected)));
        }
    }
}

TEST(Stencil, FrameRotationInvariance) {
    const PointCloud cloud = cloud_for("B", 0.1);
    std::vector<std::size_t> pts;
    for (std::size_t i = 0; i < cloud.size(); i += 53) pts.push_back(i);
    StencilOptions rotated;
    rotated.frame_rotation = 0.83;
    const SurfaceOperator a(cloud, StencilOptions{}, pts), b(cloud, rotated, pts);
    const auto spec = manifold_bc_spec();
    for (auto i : pts) {
        const auto wa = a.generator_stencil(i, spec), wb = b.generator_stencil(i, spec);
        ASSERT_EQ(wa.neighbors, wb.neighbors);
        EXPECT_LT((wa.weights - wb.weights).norm(), 1e-9 * (1 + wa.weights.norm()));
        EXPECT_NEAR(a.local(i).geometry.area_factor, b.local(i).geometry.area_factor, 1e-9);
        EXPECT_NEAR(a.local(i).geometry.gaussian_curvature, b.local(i).geometry.gaussian_curvature, 1e-9);
    }
}

TEST(Stencil, SphereEigenfunctions) {
    const PointCloud cloud = cloud_for("sphere:1", 0.05);
    const SurfaceOperator op(cloud, StencilOptions{});
    const auto lap = pure_diffusion(1.0);
    const ScalarField u = harmonic_test_field();
    const auto Lz = op.apply(lap, sample(cloud, coordinate_field(2)));
    const auto Lu = op.apply(lap, sample(cloud, u));
    std::vector<double> ez, eu;
    for (std::size_t i = 0; i < cloud.size(); ++i) {
        ez.push_back(Lz[i] + 2 * cloud.positions[i].z());
        eu.push_back(Lu[i] + 30 * u.value(cloud.positions[i]));
    }
    EXPECT_LT(rms(ez), 1e-4);
    EXPECT_LT(rms(eu), 2e-2);
}

TEST(Stencil, FlatDiskLaplacianOfRadiusSquared) {
    const PointCloud cloud = cloud_for("disk", 0.05);
    StencilOptions opt;
    opt.degree = 2;
    const SurfaceOperator op(cloud, opt);
    const auto out = op.apply(pure_diffusion(1.0), sample(cloud, radius_squared_field(false)));
    for (double v : out) EXPECT_NEAR(v, 4, 1e-8);
}

TEST(Stencil, OperatorErrorDecreasesUnderRefinement) {
    const auto model = parse_model("D");
    const auto spec = manifold_d_spec();
    const ScalarField u = harmonic_test_field();
    std::vector<double> errs;
    for (double h : {0.08, 0.04}) {
        const PointCloud cloud = cloud_for("D", h);
        StencilOptions opt;
        opt.degree = 2;
        const SurfaceOperator op(cloud, opt);
        const auto Lu = op.apply(spec, sample(cloud, u));
        std::vector<double> e;
        for (std::size_t i = 0; i < cloud.size(); ++i)
            e.push_back(Lu[i] - reference_generator_implicit(*model, spec, u, cloud.positions[i]));
        errs.push_back(rms(e));
    }
    EXPECT_GT(std::log2(errs[0] / errs[1]), 1.5);
}
