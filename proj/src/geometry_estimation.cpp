#include "surfstat/geometry_estimation.hpp"

#include <Eigen/Eigenvalues>

#include "surfstat/config.hpp"
#include "surfstat/error.hpp"

namespace surfstat {

TangentFrame estimate_frame(const std::vector<Vec3>& points, const Vec3& origin,
                            const std::optional<Vec3>& outward_reference) {
    if (points.size() < 3) throw Error(ErrorCode::degenerate_covariance, "fewer than three points");
    Vec3 mean = Vec3::Zero();
    for (const auto& p : points) mean += p;
    mean /= static_cast<double>(points.size());
    Mat3 cov = Mat3::Zero();
    for (const auto& p : points) cov += (p - mean) * (p - mean).transpose();

    const Eigen::SelfAdjointEigenSolver<Mat3> eig(cov);
    const Vec3 lambda = eig.eigenvalues();  // ascending
    const double tol = tolerance::covariance_degeneracy * std::max(lambda[2], 1e-300);
    if (lambda[1] <= tol) throw Error(ErrorCode::degenerate_covariance, "points are collinear");
    if (lambda[1] - lambda[0] <= tol) throw Error(ErrorCode::degenerate_covariance, "normal direction ambiguous");

    TangentFrame f;
    f.origin = origin;
    f.normal = eig.eigenvectors().col(0).normalized();
    if (outward_reference) {
        const double side = f.normal.dot(origin - *outward_reference);
        if (side < 0) f.normal = -f.normal;
    } else {
        // Deterministic sign: largest-magnitude component positive.
        Eigen::Index k;
        f.normal.cwiseAbs().maxCoeff(&k);
        if (f.normal[k] < 0) f.normal = -f.normal;
    }
    f.psi1 = eig.eigenvectors().col(2);
    f.psi1 = (f.psi1 - f.psi1.dot(f.normal) * f.normal).normalized();
    f.psi2 = f.normal.cross(f.psi1);
    return f;
}

void check_fold_over(const MatX& sites) {
    for (Eigen::Index i = 0; i < sites.rows(); ++i) {
        for (Eigen::Index j = i + 1; j < sites.rows(); ++j) {
            if ((sites.row(i) - sites.row(j)).norm() < tolerance::fold_over) {
                throw Error(ErrorCode::fold_over, "two neighbors share tangent coordinates");
            }
        }
    }
}

MongePatch fit_monge_patch(const std::vector<Vec3>& points, const TangentFrame& frame, int degree, double support,
                           int weight_exponent) {
    const auto n = static_cast<Eigen::Index>(points.size());
    MatX sites(n, 2);
    VecX heights(n), weights(n);
    const WeightFunction omega{support, weight_exponent};
    for (Eigen::Index j = 0; j < n; ++j) {
        sites.row(j) = frame.tangent_coordinates(points[j]).transpose();
        heights[j] = frame.height(points[j]);
        weights[j] = omega((points[j] - frame.origin).norm());
    }
    check_fold_over(sites);
    const PolynomialBasis basis(degree, 2, Vec2::Zero(), support);
    const WeightedLeastSquares ls(sites, weights, basis);

    MongePatch patch;
    patch.frame = frame;
    patch.degree = degree;
    patch.support = support;
    patch.fit = ls.fit(heights);
    const Vec2 o = Vec2::Zero();
    const auto& c = patch.fit.coefficients;
    patch.h = basis.evaluate(o).dot(c);
    patch.h_u = basis.derivative(o, Eigen::Vector2i(1, 0)).dot(c);
    patch.h_v = basis.derivative(o, Eigen::Vector2i(0, 1)).dot(c);
    if (degree >= 2) {
        patch.h_uu = basis.derivative(o, Eigen::Vector2i(2, 0)).dot(c);
        patch.h_uv = basis.derivative(o, Eigen::Vector2i(1, 1)).dot(c);
        patch.h_vv = basis.derivative(o, Eigen::Vector2i(0, 2)).dot(c);
    }
    return patch;
}

Geometry monge_geometry(const TangentFrame& frame, double h_u, double h_v, double h_uu, double h_uv, double h_vv) {
    Geometry G;
    const Vec2 grad(h_u, h_v);
    const double q = 1 + grad.squaredNorm();
    G.sigma = frame.origin;
    G.sigma_u = frame.psi1 + h_u * frame.normal;
    G.sigma_v = frame.psi2 + h_v * frame.normal;
    G.metric = Mat2::Identity() + grad * grad.transpose();
    G.metric_inverse = Mat2::Identity() - grad * grad.transpose() / q;
    G.area_factor = std::sqrt(q);
    G.normal = G.sigma_u.cross(G.sigma_v) / G.area_factor;
    Mat2 hess;
    hess << h_uu, h_uv, h_uv, h_vv;
    G.christoffel[0] = hess * (h_u / q);
    G.christoffel[1] = hess * (h_v / q);
    G.second_form = hess / std::sqrt(q);
    G.gaussian_curvature = hess.determinant() / (q * q);
    return G;
}

Geometry estimate_geometry(const MongePatch& p) {
    Geometry G = monge_geometry(p.frame, p.h_u, p.h_v, p.h_uu, p.h_uv, p.h_vv);
    G.sigma = p.frame.origin + p.h * p.frame.normal;
    return G;
}

std::vector<double> estimate_curvature_field(const PointCloud& cloud, int degree) {
    const KdTree tree(cloud.positions);
    Vec3 centroid = Vec3::Zero();
    for (const auto& p : cloud.positions) centroid += p;
    centroid /= static_cast<double>(cloud.size());
    const int min_count = default_min_count(degree);

    std::vector<double> K(cloud.size(), 0.0);
    std::vector<std::optional<Error>> failure(cloud.size());
#pragma omp parallel for schedule(dynamic, 64)
    for (std::ptrdiff_t i = 0; i < static_cast<std::ptrdiff_t>(cloud.size()); ++i) {
        try {
            const Neighborhood nb = neighborhood_for(cloud, tree, static_cast<std::size_t>(i), min_count);
            std::vector<Vec3> pts;
            pts.reserve(nb.indices.size());
            for (auto j : nb.indices) pts.push_back(cloud.positions[j]);
            const TangentFrame frame = estimate_frame(pts, cloud.positions[i], centroid);
            K[i] = estimate_geometry(fit_monge_patch(pts, frame, degree, nb.support)).gaussian_curvature;
        } catch (const Error& e) {
            failure[i] = Error(e.code(), "curvature estimate failed", static_cast<std::size_t>(i));
        }
    }
    for (const auto& f : failure) {
        if (f) throw *f;
    }
    return K;
}

}  // namespace surfstat
