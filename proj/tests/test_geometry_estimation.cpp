#include <gtest/gtest.h>

#include <cmath>
#include <random>

#include "surfstat/error.hpp"
#include "surfstat/exact_geometry.hpp"
#include "surfstat/geometry_estimation.hpp"
#include "surfstat/sampling.hpp"
#include "surfstat/surface.hpp"

using namespace surfstat;

namespace {

std::vector<Vec3> grid_points(double spacing, int half, const std::function<double(double, double)>& height) {
    std::vector<Vec3> pts;
    pts.emplace_back(0, 0, height(0, 0));
    for (int i = -half; i <= half; ++i)
        for (int j = -half; j <= half; ++j) {
            if (i == 0 && j == 0) continue;
            const double u = i * spacing, v = j * spacing;
            pts.emplace_back(u, v, height(u, v));
        }
    return pts;
}

double rms_curvature_error(const PointCloud& cloud, const SurfaceModel& model, int degree) {
    const auto K = estimate_curvature_field(cloud, degree);
    double s = 0;
    for (std::size_t i = 0; i < cloud.size(); ++i) {
        const double e = K[i] - exact_geometry_at(model, cloud.positions[i]).gaussian_curvature;
        s += e * e;
    }
    return std::sqrt(s / static_cast<double>(cloud.size()));
}

PointCloud catalog_cloud(const std::string& model, double h) {
    SamplingPlan plan;
    plan.target_h = h;
    return sample_cloud(*parse_model(model), plan);
}

}  // namespace

TEST(Frame, CoplanarNeighborhoodHasAxisNormal) {
    const auto pts = grid_points(0.1, 2, [](double, double) { return 0.0; });
    const TangentFrame f = estimate_frame(pts, pts[0]);
    EXPECT_NEAR(std::abs(f.normal.z()), 1.0, 1e-12);
    EXPECT_NEAR(f.psi1.z(), 0.0, 1e-12);
    EXPECT_NEAR(f.psi2.z(), 0.0, 1e-12);
}

TEST(Frame, OrthonormalRightHandedAndOutward) {
    std::mt19937 rng(3);
    std::uniform_real_distribution<double> U(-0.1, 0.1);
    std::vector<Vec3> pts{Vec3::UnitZ()};
    for (int k = 0; k < 30; ++k) pts.push_back(Vec3(U(rng), U(rng), 1).normalized());
    const TangentFrame f = estimate_frame(pts, pts[0], Vec3::Zero());
    EXPECT_NEAR(f.psi1.norm(), 1, 1e-12);
    EXPECT_NEAR(f.psi2.norm(), 1, 1e-12);
    EXPECT_NEAR(f.psi1.dot(f.psi2), 0, 1e-12);
    EXPECT_NEAR((f.psi1.cross(f.psi2) - f.normal).norm(), 0, 1e-12);
    EXPECT_GT(f.normal.z(), 0);
}

TEST(Frame, SphereCapNormalCloseToRadial) {
    // Points within geodesic radius 0.1 of a tilted pole; the oracle is the
    // trailing eigenvector of the covariance computed independently here.
    const Vec3 center = Vec3(0.3, -0.2, 1).normalized();
    const Vec3 e1 = center.cross(Vec3::UnitX()).normalized(), e2 = center.cross(e1);
    std::vector<Vec3> pts{center};
    for (int r = 1; r <= 4; ++r)
        for (int k = 0; k < 8 * r; ++k) {
            const double t = 0.025 * r, a = 2 * M_PI * k / (8 * r);
            pts.push_back(std::cos(t) * center + std::sin(t) * (std::cos(a) * e1 + std::sin(a) * e2));
        }
    const TangentFrame f = estimate_frame(pts, center, Vec3::Zero());
    EXPECT_LT(std::acos(std::min(1.0, f.normal.dot(center))), 0.02);

    Vec3 mean = Vec3::Zero();
    for (const auto& p : pts) mean += p;
    mean /= static_cast<double>(pts.size());
    Mat3 C = Mat3::Zero();
    for (const auto& p : pts) C += (p - mean) * (p - mean).transpose();
    Eigen::SelfAdjointEigenSolver<Mat3> es(C);
    EXPECT_NEAR(std::abs(es.eigenvectors().col(0).dot(f.normal)), 1.0, 1e-10);
}

TEST(Frame, CollinearPointsAreDegenerate) {
    const std::vector<Vec3> pts{Vec3(0, 0, 0), Vec3(1, 1, 1), Vec3(2, 2, 2)};
    try {
        estimate_frame(pts, pts[0]);
        FAIL();
    } catch (const Error& e) {
        EXPECT_EQ(e.code(), ErrorCode::degenerate_covariance);
    }
}

TEST(MongePatch, ParaboloidDegreeTwoIsExact) {
    const auto pts = grid_points(0.05, 3, [](double u, double v) { return u * u + v * v; });
    TangentFrame f;  // the identity frame at the origin
    const MongePatch p = fit_monge_patch(pts, f, 2, 0.4);
    EXPECT_NEAR(p.h, 0, 1e-12);
    EXPECT_NEAR(p.h_u, 0, 1e-10);
    EXPECT_NEAR(p.h_uu, 2, 1e-9);
    EXPECT_NEAR(p.h_vv, 2, 1e-9);
    EXPECT_NEAR(p.h_uv, 0, 1e-9);
    EXPECT_NEAR(estimate_geometry(p).gaussian_curvature, 4, 1e-8);
}

TEST(MongePatch, PlaneHasNoCurvature) {
    const auto pts = grid_points(0.05, 3, [](double u, double v) { return 0.3 * u - 0.1 * v + 2; });
    TangentFrame f;
    f.origin = Vec3(0, 0, 2);
    const MongePatch p = fit_monge_patch(pts, f, 4, 0.4);
    EXPECT_NEAR(p.h_u, 0.3, 1e-10);
    EXPECT_NEAR(p.h_uu, 0, 1e-8);
    EXPECT_NEAR(p.h_uv, 0, 1e-8);
    EXPECT_NEAR(p.h_vv, 0, 1e-8);
}

TEST(MongePatch, SphereCapSecondDerivativeNearMinusOne) {
    for (double s : {0.04, 0.02}) {
        const auto pts = grid_points(s, 3, [](double u, double v) { return std::sqrt(1 - u * u - v * v); });
        TangentFrame f;
        f.origin = Vec3::UnitZ();
        const MongePatch p = fit_monge_patch(pts, f, 4, 4.5 * s);
        EXPECT_NEAR(p.h_uu, -1, 20 * s * s);
        EXPECT_NEAR(p.h_vv, -1, 20 * s * s);
    }
}

TEST(MongePatch, FoldOverDetected) {
    std::vector<Vec3> pts = grid_points(0.1, 2, [](double, double) { return 0.0; });
    pts.push_back(Vec3(0.1, 0.1, 0.5));
    TangentFrame f;
    try {
        fit_monge_patch(pts, f, 2, 1.0);
        FAIL();
    } catch (const Error& e) {
        EXPECT_EQ(e.code(), ErrorCode::fold_over);
    }
}

TEST(MongeGeometry, FlatPatch) {
    const Geometry G = monge_geometry(TangentFrame{}, 0, 0, 0, 0, 0);
    EXPECT_TRUE(G.metric.isApprox(Mat2::Identity()));
    EXPECT_EQ(G.christoffel[0].norm() + G.christoffel[1].norm(), 0.0);
    EXPECT_EQ(G.gaussian_curvature, 0.0);
    EXPECT_EQ(G.area_factor, 1.0);
}

TEST(MongeGeometry, MatchesGraphParameterization) {
    // The graph σ(u, v) = (u, v, h(u, v)) has exact derivatives; the generic
    // geometry builder evaluates Γ = g⁻¹ σᵀ σ_ij independently of the Monge formulas.
    std::mt19937 rng(11);
    std::uniform_real_distribution<double> U(-1.5, 1.5);
    for (int trial = 0; trial < 50; ++trial) {
        const double hu = U(rng), hv = U(rng), huu = U(rng), huv = U(rng), hvv = U(rng);
        const Geometry M = monge_geometry(TangentFrame{}, hu, hv, huu, huv, hvv);
        ChartDerivatives d;
        d.sigma = Vec3::Zero();
        d.sigma_u = Vec3(1, 0, hu);
        d.sigma_v = Vec3(0, 1, hv);
        d.sigma_uu = Vec3(0, 0, huu);
        d.sigma_uv = Vec3(0, 0, huv);
        d.sigma_vv = Vec3(0, 0, hvv);
        const Geometry R = geometry_from_derivatives(d);
        EXPECT_LT((M.metric - R.metric).norm(), 1e-13);
        EXPECT_LT((M.metric_inverse - R.metric_inverse).norm(), 1e-12);
        EXPECT_NEAR(M.area_factor, R.area_factor, 1e-13);
        EXPECT_NEAR(M.gaussian_curvature, R.gaussian_curvature, 1e-12);
        for (int k = 0; k < 2; ++k) EXPECT_LT((M.christoffel[k] - R.christoffel[k]).norm(), 1e-12);
        EXPECT_LT((M.metric * M.metric_inverse - Mat2::Identity()).norm(), 1e-12);
        const Mat32 S = M.tangents();
        EXPECT_LT((S.transpose() * S - M.metric).norm(), 1e-14);
    }
}

TEST(MongeGeometry, GaugeInvariantUnderTangentRotation) {
    const auto pts = grid_points(0.05, 3, [](double u, double v) { return 0.4 * u * u - 0.3 * u * v + 0.7 * v * v + 0.1 * u; });
    TangentFrame f = estimate_frame(pts, pts[0]);
    const Geometry G0 = estimate_geometry(fit_monge_patch(pts, f, 4, 0.4));
    for (double angle : {0.3, 1.1, 2.5}) {
        TangentFrame r = f;
        r.psi1 = std::cos(angle) * f.psi1 + std::sin(angle) * f.psi2;
        r.psi2 = -std::sin(angle) * f.psi1 + std::cos(angle) * f.psi2;
        const Geometry G = estimate_geometry(fit_monge_patch(pts, r, 4, 0.4));
        EXPECT_NEAR(G.area_factor, G0.area_factor, 1e-9);
        EXPECT_NEAR(G.gaussian_curvature, G0.gaussian_curvature, 1e-9);
    }
}

TEST(CurvatureField, SphereOfRadiusTwo) {
    const PointCloud cloud = catalog_cloud("sphere:2", 0.1);
    const auto K = estimate_curvature_field(cloud, 4);
    for (double k : K) EXPECT_NEAR(k, 0.25, 2e-3);
}

TEST(CurvatureField, PlaneCloudIsFlat) {
    PointCloud cloud;
    for (int i = -10; i <= 10; ++i)
        for (int j = -10; j <= 10; ++j) {
            cloud.positions.emplace_back(0.05 * i + 0.01 * std::sin(j), 0.05 * j, 0);
            cloud.flags.push_back(PointFlag::interior);
        }
    for (double k : estimate_curvature_field(cloud, 4)) EXPECT_LT(std::abs(k), 1e-8);
}

TEST(CurvatureField, TorusSignPattern) {
    const auto model = parse_model("D");
    const PointCloud cloud = catalog_cloud("D", 0.08);
    const auto K = estimate_curvature_field(cloud, 4);
    int checked = 0;
    for (std::size_t i = 0; i < cloud.size(); ++i) {
        const Vec3& x = cloud.positions[i];
        const double rho = std::hypot(x.x(), x.y());
        if (rho > 0.85) {
            EXPECT_GT(K[i], 0) << i;
            ++checked;
        } else if (rho < 0.55) {
            EXPECT_LT(K[i], 0) << i;
            ++checked;
        }
    }
    EXPECT_GT(checked, 500);
}

TEST(CurvatureField, TorusInnerEquatorValue) {
    const PointCloud cloud = catalog_cloud("D", 0.04);
    const auto K = estimate_curvature_field(cloud, 4);
    std::size_t best = 0;
    for (std::size_t i = 0; i < cloud.size(); ++i)
        if (std::hypot(cloud.positions[i].x(), cloud.positions[i].y()) < std::hypot(cloud.positions[best].x(), cloud.positions[best].y()))
            best = i;
    // Closed form on the inner equator: cos(π)/(0.3·(0.7 − 0.3)).
    EXPECT_NEAR(K[best], -1.0 / (0.3 * 0.4), 0.05);
}

TEST(CurvatureField, UnitSphereLevelTwoAccuracy) {
    const auto model = parse_model("sphere:1");
    const PointCloud cloud = catalog_cloud("sphere:1", catalog_h('A', 2));
    EXPECT_LT(rms_curvature_error(cloud, *model, 4), 5e-3);
}

TEST(CurvatureField, ErrorDecreasesOnTorus) {
    const auto model = parse_model("D");
    const double e1 = rms_curvature_error(catalog_cloud("D", 0.08), *model, 4);
    const double e2 = rms_curvature_error(catalog_cloud("D", 0.04), *model, 4);
    EXPECT_GT(std::log2(e1 / e2), 2.0);
}
