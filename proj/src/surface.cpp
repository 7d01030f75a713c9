#include "surfstat/surface.hpp"

#include <Eigen/Dense>
#include <cmath>
#include <cstdio>
#include <numbers>
#include <sstream>

#include "surfstat/config.hpp"
#include "surfstat/error.hpp"
#include "surfstat/format.hpp"

namespace surfstat {

namespace {

constexpr double pi = std::numbers::pi;
constexpr double pole_margin = 1e-3;

std::string num(double v) { return format_double(v); }

double clamp_unit(double c) { return std::max(-1.0, std::min(1.0, c)); }

/// Wraps an angle into [0, 2π).
double wrap_angle(double a) {
    a = std::fmod(a, 2.0 * pi);
    if (a < 0) a += 2.0 * pi;
    return a;
}

ChartStatus polar_status(const Vec2& q, double lo = 0.0, double hi = pi) {
    if (!q.allFinite()) return ChartStatus::out_of_range;
    const double phi = q.y();
    if (phi < lo - 1e-12 || phi > hi + 1e-12) return ChartStatus::out_of_range;
    if (std::sin(phi) < std::sin(pole_margin)) return ChartStatus::singular;
    return ChartStatus::ok;
}

/// Unit direction of a spherical chart. Chart 0 has its poles on the z axis,
/// chart 1 on the x axis. q = (azimuth θ, polar φ).
struct Direction {
    Vec3 d, d_t, d_p, d_tt, d_tp, d_pp;
};

Direction spherical_direction(int chart, const Vec2& q) {
    const double ct = std::cos(q.x()), st = std::sin(q.x());
    const double cp = std::cos(q.y()), sp = std::sin(q.y());
    Direction r;
    // Components in chart-local order (pole axis last), permuted below.
    Vec3 d(sp * ct, sp * st, cp);
    Vec3 d_t(-sp * st, sp * ct, 0);
    Vec3 d_p(cp * ct, cp * st, -sp);
    Vec3 d_tt(-sp * ct, -sp * st, 0);
    Vec3 d_tp(-cp * st, cp * ct, 0);
    Vec3 d_pp(-sp * ct, -sp * st, -cp);
    auto perm = [chart](const Vec3& v) -> Vec3 {
        if (chart == 0) return v;
        // pole axis → x, first local axis → y, second → z
        return Vec3(v.z(), v.x(), v.y());
    };
    r.d = perm(d);
    r.d_t = perm(d_t);
    r.d_p = perm(d_p);
    r.d_tt = perm(d_tt);
    r.d_tp = perm(d_tp);
    r.d_pp = perm(d_pp);
    return r;
}

ChartPoint spherical_locate(const Vec3& dir) {
    const Vec3 d = dir.normalized();
    if (std::abs(d.z()) <= 0.8) {
        return {0, Vec2(std::atan2(d.y(), d.x()), std::acos(clamp_unit(d.z())))};
    }
    return {1, Vec2(std::atan2(d.z(), d.y()), std::acos(clamp_unit(d.x())))};
}

// ---------------------------------------------------------------------------

class Ellipsoid : public SurfaceModel {
public:
    Ellipsoid(double a, double b, double s0, std::string name, double phi_max = pi)
        : a_(a), b_(b), s0_(s0), name_(std::move(name)), phi_max_(phi_max) {
        if (!(a > 0 && b > 0 && s0 > 0)) throw Error(ErrorCode::invalid_argument, "ellipsoid axes must be positive");
    }

    std::string name() const override { return name_; }

    double implicit(const Vec3& x) const override {
        return x.x() * x.x() / (a_ * a_) + x.y() * x.y() / (b_ * b_) + x.z() * x.z() - s0_ * s0_;
    }
    Vec3 implicit_gradient(const Vec3& x) const override {
        return Vec3(2 * x.x() / (a_ * a_), 2 * x.y() / (b_ * b_), 2 * x.z());
    }
    Mat3 implicit_hessian(const Vec3&) const override {
        return Vec3(2 / (a_ * a_), 2 / (b_ * b_), 2.0).asDiagonal();
    }
    Vec3 closest_point(const Vec3& x) const override {
        if (a_ == 1.0 && b_ == 1.0) return s0_ * x.normalized();
        return SurfaceModel::closest_point(x);
    }

    int chart_count() const override { return 2; }

    Vec3 position(int chart, const Vec2& q) const override { return derivatives(chart, q).sigma; }

    ChartStatus chart_status(int chart, const Vec2& q) const override {
        if (chart < 0 || chart > 1) return ChartStatus::out_of_range;
        return polar_status(q);
    }

    ChartPoint locate(const Vec3& x) const override {
        return spherical_locate(Vec3(x.x() / a_, x.y() / b_, x.z()));
    }

    std::optional<ChartDerivatives> analytic_derivatives(int chart, const Vec2& q) const override {
        return derivatives(chart, q);
    }

    SeedDomain seed_domain() const override { return {Vec2(0, 0), Vec2(2 * pi, phi_max_)}; }
    Vec3 seed_position(const Vec2& q) const override { return position(0, q); }
    double seed_area_element(const Vec2& q) const override {
        const auto d = derivatives(0, q);
        return d.sigma_u.cross(d.sigma_v).norm();
    }

    double clip(const Vec3& x) const override {
        return phi_max_ < pi ? x.z() : std::numeric_limits<double>::infinity();
    }
    std::vector<BoundaryCurve> boundary_curves() const override {
        if (phi_max_ >= pi) return {};
        return {{Vec2(0, phi_max_), Vec2(2 * pi, phi_max_), true}};
    }

private:
    ChartDerivatives derivatives(int chart, const Vec2& q) const {
        const Direction d = spherical_direction(chart, q);
        const Vec3 scale = s0_ * Vec3(a_, b_, 1.0);
        auto s = [&](const Vec3& v) -> Vec3 { return v.cwiseProduct(scale); };
        return {s(d.d), s(d.d_t), s(d.d_p), s(d.d_tt), s(d.d_tp), s(d.d_pp)};
    }

    double a_, b_, s0_;
    std::string name_;
    double phi_max_;
};

// ---------------------------------------------------------------------------

struct Chebyshev {
    double u, du, ddu;
};

/// U_n(t) of the second kind with first and second derivatives.
Chebyshev chebyshev_u(int n, double t) {
    double u0 = 1, du0 = 0, ddu0 = 0;
    if (n == 0) return {u0, du0, ddu0};
    double u1 = 2 * t, du1 = 2, ddu1 = 0;
    for (int k = 1; k < n; ++k) {
        const double u2 = 2 * t * u1 - u0;
        const double du2 = 2 * u1 + 2 * t * du1 - du0;
        const double ddu2 = 4 * du1 + 2 * t * ddu1 - ddu0;
        u0 = u1, du0 = du1, ddu0 = ddu1;
        u1 = u2, du1 = du2, ddu1 = ddu2;
    }
    return {u1, du1, ddu1};
}

/// Star-shaped surface x = R(d) d with R(d) = 1 + r0 U_{m-1}(d_z) d_x, which
/// equals 1 + r0 sin(mφ) cos θ on the unit sphere and is smooth at the poles.
class RadialHarmonic : public SurfaceModel {
public:
    RadialHarmonic(double r0, int m) : r0_(r0), m_(m) {
        if (m < 1) throw Error(ErrorCode::invalid_argument, "polar order must be positive");
        if (!(std::abs(r0) < 0.5)) {
            // On the unit sphere U_{m-1}(d_z) d_x = sin(mφ) cos θ, so R ≥ 1 − |r0|.
            throw Error(ErrorCode::invalid_argument, "radial amplitude too large for a star-shaped surface");
        }
    }

    std::string name() const override { return "radial:" + num(r0_) + ":" + std::to_string(m_); }

    double implicit(const Vec3& x) const override {
        const double r = x.norm();
        return r - radius(x / r);
    }

    Vec3 implicit_gradient(const Vec3& x) const override {
        const double r = x.norm();
        const Vec3 d = x / r;
        const Vec3 g = radius_gradient(d);
        const Mat3 P = Mat3::Identity() - d * d.transpose();
        return d - P * g / r;
    }

    Mat3 implicit_hessian(const Vec3& x) const override {
        const double r = x.norm();
        const Vec3 d = x / r;
        const Vec3 g = radius_gradient(d);
        const Mat3 Hg = radius_hessian(d);
        const Mat3 P = Mat3::Identity() - d * d.transpose();
        const Vec3 Pg = P * g;
        const Mat3 HG = (P * Hg * P - d * Pg.transpose() - Pg * d.transpose() - g.dot(d) * P) / (r * r);
        return P / r - HG;
    }

    int chart_count() const override { return 2; }

    Vec3 position(int chart, const Vec2& q) const override {
        const Vec3 d = spherical_direction(chart, q).d;
        return radius(d) * d;
    }

    ChartStatus chart_status(int chart, const Vec2& q) const override {
        if (chart < 0 || chart > 1) return ChartStatus::out_of_range;
        return polar_status(q);
    }

    ChartPoint locate(const Vec3& x) const override { return spherical_locate(x); }

    std::optional<ChartDerivatives> analytic_derivatives(int chart, const Vec2& q) const override {
        const Direction d = spherical_direction(chart, q);
        const double R = radius(d.d);
        const Vec3 g = radius_gradient(d.d);
        const Mat3 H = radius_hessian(d.d);
        const double R_t = g.dot(d.d_t), R_p = g.dot(d.d_p);
        const double R_tt = d.d_t.dot(H * d.d_t) + g.dot(d.d_tt);
        const double R_tp = d.d_t.dot(H * d.d_p) + g.dot(d.d_tp);
        const double R_pp = d.d_p.dot(H * d.d_p) + g.dot(d.d_pp);
        ChartDerivatives c;
        c.sigma = R * d.d;
        c.sigma_u = R_t * d.d + R * d.d_t;
        c.sigma_v = R_p * d.d + R * d.d_p;
        c.sigma_uu = R_tt * d.d + 2 * R_t * d.d_t + R * d.d_tt;
        c.sigma_uv = R_tp * d.d + R_t * d.d_p + R_p * d.d_t + R * d.d_tp;
        c.sigma_vv = R_pp * d.d + 2 * R_p * d.d_p + R * d.d_pp;
        return c;
    }

    SeedDomain seed_domain() const override { return {Vec2(0, 0), Vec2(2 * pi, pi)}; }
    Vec3 seed_position(const Vec2& q) const override { return position(0, q); }
    double seed_area_element(const Vec2& q) const override {
        const auto c = *analytic_derivatives(0, q);
        return c.sigma_u.cross(c.sigma_v).norm();
    }

private:
    // Homogeneous extension of the radius to R³ (valid for |d| = 1).
    double radius(const Vec3& d) const { return 1 + r0_ * chebyshev_u(m_ - 1, d.z()).u * d.x(); }
    Vec3 radius_gradient(const Vec3& d) const {
        const auto c = chebyshev_u(m_ - 1, d.z());
        return r0_ * Vec3(c.u, 0, c.du * d.x());
    }
    Mat3 radius_hessian(const Vec3& d) const {
        const auto c = chebyshev_u(m_ - 1, d.z());
        Mat3 H = Mat3::Zero();
        H(0, 2) = H(2, 0) = r0_ * c.du;
        H(2, 2) = r0_ * c.ddu * d.x();
        return H;
    }

    double r0_;
    int m_;
};

// ---------------------------------------------------------------------------

enum class TorusClip { none, wedge, z_half };

/// Torus x = M·((s1 + s2 cos v) cos u, (s1 + s2 cos v) sin u, s2 sin v) for a
/// fixed rotation M, optionally restricted in u.
class Torus : public SurfaceModel {
public:
    Torus(double s1, double s2, Mat3 rotation, double u_min, double u_max, TorusClip clip, std::string name)
        : s1_(s1), s2_(s2), M_(rotation), u_min_(u_min), u_max_(u_max), clip_(clip), name_(std::move(name)) {
        if (!(s1 > s2 && s2 > 0)) throw Error(ErrorCode::invalid_argument, "torus requires s1 > s2 > 0");
        if (!(u_min < u_max)) throw Error(ErrorCode::invalid_argument, "empty torus azimuth range");
    }

    std::string name() const override { return name_; }

    double implicit(const Vec3& x) const override {
        const Vec3 p = M_.transpose() * x;
        const double rho = std::sqrt(p.x() * p.x() + p.y() * p.y());
        return (s1_ - rho) * (s1_ - rho) + p.z() * p.z() - s2_ * s2_;
    }
    Vec3 implicit_gradient(const Vec3& x) const override {
        const Vec3 p = M_.transpose() * x;
        const double rho = std::sqrt(p.x() * p.x() + p.y() * p.y());
        const double f = -2 * (s1_ - rho) / rho;
        return M_ * Vec3(f * p.x(), f * p.y(), 2 * p.z());
    }
    Mat3 implicit_hessian(const Vec3& x) const override {
        const Vec3 p = M_.transpose() * x;
        const double rho = std::sqrt(p.x() * p.x() + p.y() * p.y());
        Mat3 H = Mat3::Zero();
        const double r3 = rho * rho * rho;
        H(0, 0) = 2 - 2 * s1_ * (1 / rho - p.x() * p.x() / r3);
        H(1, 1) = 2 - 2 * s1_ * (1 / rho - p.y() * p.y() / r3);
        H(0, 1) = H(1, 0) = 2 * s1_ * p.x() * p.y() / r3;
        H(2, 2) = 2;
        return M_ * H * M_.transpose();
    }
    Vec3 closest_point(const Vec3& x) const override {
        const Vec3 p = M_.transpose() * x;
        const double rho = std::sqrt(p.x() * p.x() + p.y() * p.y());
        const Vec3 c = s1_ * Vec3(p.x() / rho, p.y() / rho, 0);
        const Vec3 y = c + s2_ * (p - c).normalized();
        return M_ * y;
    }
    Vec3 project(const Vec3& x, Vec3& normal_out) const override {
        const Vec3 p = M_.transpose() * x;
        const double rho = std::sqrt(p.x() * p.x() + p.y() * p.y());
        const Vec3 c = s1_ * Vec3(p.x() / rho, p.y() / rho, 0);
        const Vec3 d = (p - c).normalized();
        normal_out = M_ * d;
        return M_ * (c + s2_ * d);
    }

    int chart_count() const override { return 1; }

    Vec3 position(int, const Vec2& q) const override { return derivatives(q).sigma; }

    ChartStatus chart_status(int chart, const Vec2& q) const override {
        if (chart != 0 || !q.allFinite()) return ChartStatus::out_of_range;
        return ChartStatus::ok;
    }

    ChartPoint locate(const Vec3& x) const override {
        const Vec3 p = M_.transpose() * x;
        const double rho = std::sqrt(p.x() * p.x() + p.y() * p.y());
        return {0, Vec2(wrap_angle(std::atan2(p.y(), p.x())), std::atan2(p.z(), rho - s1_))};
    }

    std::optional<ChartDerivatives> analytic_derivatives(int, const Vec2& q) const override {
        return derivatives(q);
    }

    SeedDomain seed_domain() const override { return {Vec2(u_min_, 0), Vec2(u_max_, 2 * pi)}; }
    Vec3 seed_position(const Vec2& q) const override { return position(0, q); }
    double seed_area_element(const Vec2& q) const override {
        return s2_ * (s1_ + s2_ * std::cos(q.y()));
    }

    double clip(const Vec3& x) const override {
        switch (clip_) {
        case TorusClip::none: return std::numeric_limits<double>::infinity();
        case TorusClip::z_half: return x.z();
        case TorusClip::wedge: return wedge_distance(M_.transpose() * x);
        }
        return 0;
    }

    std::vector<BoundaryCurve> boundary_curves() const override {
        if (clip_ == TorusClip::none) return {};
        return {{Vec2(u_min_, 0), Vec2(u_min_, 2 * pi), true}, {Vec2(u_max_, 0), Vec2(u_max_, 2 * pi), true}};
    }

    /// Signed distance-like function of the azimuthal cut, positive inside u ∈ [u_min, u_max].
    double wedge_distance(const Vec3& p) const {
        const double s_lo = -std::sin(u_min_) * p.x() + std::cos(u_min_) * p.y();
        const double s_hi = std::sin(u_max_) * p.x() - std::cos(u_max_) * p.y();
        return (u_max_ - u_min_ > pi) ? std::max(s_lo, s_hi) : std::min(s_lo, s_hi);
    }

private:
    ChartDerivatives derivatives(const Vec2& q) const {
        const double cu = std::cos(q.x()), su = std::sin(q.x());
        const double cv = std::cos(q.y()), sv = std::sin(q.y());
        const double rho = s1_ + s2_ * cv;
        ChartDerivatives c;
        c.sigma = M_ * Vec3(rho * cu, rho * su, s2_ * sv);
        c.sigma_u = M_ * Vec3(-rho * su, rho * cu, 0);
        c.sigma_v = M_ * Vec3(-s2_ * sv * cu, -s2_ * sv * su, s2_ * cv);
        c.sigma_uu = M_ * Vec3(-rho * cu, -rho * su, 0);
        c.sigma_uv = M_ * Vec3(s2_ * sv * su, -s2_ * sv * cu, 0);
        c.sigma_vv = M_ * Vec3(-s2_ * cv * cu, -s2_ * cv * su, -s2_ * sv);
        return c;
    }

    double s1_, s2_;
    Mat3 M_;
    double u_min_, u_max_;
    TorusClip clip_;
    std::string name_;
};

// ---------------------------------------------------------------------------

class FlatDisk : public SurfaceModel {
public:
    explicit FlatDisk(double radius) : R_(radius) {
        if (!(radius > 0)) throw Error(ErrorCode::invalid_argument, "disk radius must be positive");
    }

    std::string name() const override { return "disk:" + num(R_); }

    double implicit(const Vec3& x) const override { return x.z(); }
    Vec3 implicit_gradient(const Vec3&) const override { return Vec3::UnitZ(); }
    Mat3 implicit_hessian(const Vec3&) const override { return Mat3::Zero(); }
    Vec3 closest_point(const Vec3& x) const override { return Vec3(x.x(), x.y(), 0); }

    int chart_count() const override { return 1; }
    Vec3 position(int, const Vec2& q) const override { return Vec3(q.x(), q.y(), 0); }
    ChartStatus chart_status(int chart, const Vec2& q) const override {
        return (chart == 0 && q.allFinite()) ? ChartStatus::ok : ChartStatus::out_of_range;
    }
    ChartPoint locate(const Vec3& x) const override { return {0, Vec2(x.x(), x.y())}; }
    std::optional<ChartDerivatives> analytic_derivatives(int, const Vec2& q) const override {
        ChartDerivatives c;
        c.sigma = position(0, q);
        c.sigma_u = Vec3::UnitX();
        c.sigma_v = Vec3::UnitY();
        c.sigma_uu = c.sigma_uv = c.sigma_vv = Vec3::Zero();
        return c;
    }

    // Seeds use polar coordinates (ρ, θ).
    SeedDomain seed_domain() const override { return {Vec2(0, 0), Vec2(R_, 2 * pi)}; }
    Vec3 seed_position(const Vec2& q) const override {
        return Vec3(q.x() * std::cos(q.y()), q.x() * std::sin(q.y()), 0);
    }
    double seed_area_element(const Vec2& q) const override { return q.x(); }

    double clip(const Vec3& x) const override { return R_ - std::hypot(x.x(), x.y()); }
    std::vector<BoundaryCurve> boundary_curves() const override {
        return {{Vec2(R_, 0), Vec2(R_, 2 * pi), true}};
    }

private:
    double R_;
};

// ---------------------------------------------------------------------------

constexpr double neck_cylinder_height = 0.05;

double gauss_legendre_integral(const auto& f, double a, double b, int panels) {
    static constexpr double nodes[5] = {-0.9061798459386640, -0.5384693101056831, 0.0, 0.5384693101056831,
                                        0.9061798459386640};
    static constexpr double weights[5] = {0.2369268850561891, 0.4786286704993665, 0.5688888888888889,
                                          0.4786286704993665, 0.2369268850561891};
    const double w = (b - a) / panels;
    double sum = 0;
    for (int p = 0; p < panels; ++p) {
        const double mid = a + (p + 0.5) * w;
        for (int k = 0; k < 5; ++k) sum += weights[k] * f(mid + 0.5 * w * nodes[k]);
    }
    return sum * 0.5 * w;
}

double bump_value(double A, double b, double z) {
    const double w = b + neck_cylinder_height - z;
    const double den = b * b - w * w;
    if (den <= 0) return 1 - A;
    const double e = 1 - b * b / den;
    return (1 - A) + A * (e < -700 ? 0.0 : std::exp(e));
}

double bump_dz(double A, double b, double z) {
    const double w = b + neck_cylinder_height - z;
    const double den = b * b - w * w;
    if (den <= 0) return 0;
    const double e = 1 - b * b / den;
    if (e < -700) return 0;
    const double f = 2 * b * b * w / (den * den);
    return A * std::exp(e) * f;
}

double bump_dzz(double A, double b, double z) {
    const double w = b + neck_cylinder_height - z;
    const double den = b * b - w * w;
    if (den <= 0) return 0;
    const double e = 1 - b * b / den;
    if (e < -700) return 0;
    const double f = 2 * b * b * w / (den * den);
    const double fp = 2 * b * b * (den + 4 * w * w) / (den * den * den);
    return -A * std::exp(e) * (fp - f * f);
}

double bump_arc(double A, double b, double z_end) {
    const double z0 = neck_cylinder_height;
    if (z_end <= z0) return 0;
    return gauss_legendre_integral([&](double z) { return std::sqrt(1 + std::pow(bump_dz(A, b, z), 2)); }, z0,
                                   z_end, 400);
}

class Neck : public SurfaceModel {
public:
    explicit Neck(double r0) : p_(neck_profile(r0)) {}

    std::string name() const override { return "neck:" + num(p_.r0); }

    double implicit(const Vec3& x) const override {
        const double rho = std::hypot(x.x(), x.y());
        if (x.z() <= p_.junction_z) return rho - p_.radius(x.z());
        return (x - Vec3(0, 0, p_.junction_z)).norm() - 1;
    }
    Vec3 implicit_gradient(const Vec3& x) const override {
        const double rho = std::hypot(x.x(), x.y());
        if (x.z() <= p_.junction_z) return Vec3(x.x() / rho, x.y() / rho, -p_.radius_dz(x.z()));
        return (x - Vec3(0, 0, p_.junction_z)).normalized();
    }
    Mat3 implicit_hessian(const Vec3& x) const override {
        Mat3 H = Mat3::Zero();
        if (x.z() <= p_.junction_z) {
            const double rho = std::hypot(x.x(), x.y());
            const Eigen::Vector2d n(x.x() / rho, x.y() / rho);
            H.topLeftCorner<2, 2>() = (Eigen::Matrix2d::Identity() - n * n.transpose()) / rho;
            H(2, 2) = -p_.radius_dzz(x.z());
            return H;
        }
        const Vec3 e = x - Vec3(0, 0, p_.junction_z);
        const double r = e.norm();
        const Vec3 u = e / r;
        return (Mat3::Identity() - u * u.transpose()) / r;
    }

    int chart_count() const override { return 2; }

    Vec3 position(int chart, const Vec2& q) const override { return derivatives(chart, q).sigma; }

    ChartStatus chart_status(int chart, const Vec2& q) const override {
        if (!q.allFinite()) return ChartStatus::out_of_range;
        if (chart == 0) {
            const double t_top = p_.junction_z + pi / 2;
            if (q.x() < -1e-12 || q.x() > t_top + 1e-12) return ChartStatus::out_of_range;
            if (t_top - q.x() < pole_margin) return ChartStatus::singular;
            return ChartStatus::ok;
        }
        if (chart == 1) return q.squaredNorm() < 0.9 ? ChartStatus::ok : ChartStatus::out_of_range;
        return ChartStatus::out_of_range;
    }

    ChartPoint locate(const Vec3& x) const override {
        const double rho = std::hypot(x.x(), x.y());
        if (x.z() > p_.junction_z && rho < 0.5) return {1, Vec2(x.x(), x.y())};
        const double theta = std::atan2(x.y(), x.x());
        if (x.z() <= p_.junction_z) return {0, Vec2(std::max(0.0, x.z()), theta)};
        return {0, Vec2(p_.junction_z + std::atan2(x.z() - p_.junction_z, rho), theta)};
    }

    std::optional<ChartDerivatives> analytic_derivatives(int chart, const Vec2& q) const override {
        return derivatives(chart, q);
    }

    SeedDomain seed_domain() const override {
        return {Vec2(0, 0), Vec2(p_.junction_z + pi / 2, 2 * pi)};
    }
    Vec3 seed_position(const Vec2& q) const override { return position(0, q); }
    double seed_area_element(const Vec2& q) const override {
        const auto c = derivatives(0, q);
        return c.sigma_u.cross(c.sigma_v).norm();
    }

    double clip(const Vec3& x) const override { return x.z(); }
    std::vector<BoundaryCurve> boundary_curves() const override {
        return {{Vec2(0, 0), Vec2(0, 2 * pi), true}};
    }

private:
    ChartDerivatives derivatives(int chart, const Vec2& q) const {
        ChartDerivatives c;
        if (chart == 1) {
            const double x = q.x(), y = q.y();
            const double h = std::sqrt(std::max(1e-300, 1 - x * x - y * y));
            const double h3 = h * h * h;
            c.sigma = Vec3(x, y, p_.junction_z + h);
            c.sigma_u = Vec3(1, 0, -x / h);
            c.sigma_v = Vec3(0, 1, -y / h);
            c.sigma_uu = Vec3(0, 0, -(1 - y * y) / h3);
            c.sigma_uv = Vec3(0, 0, -x * y / h3);
            c.sigma_vv = Vec3(0, 0, -(1 - x * x) / h3);
            return c;
        }
        // Profile (ρ(t), z(t)) with t = z on the cylinder and bump and
        // t = junction + ψ on the hemisphere.
        const double t = q.x();
        double rho, rho_t, rho_tt, z, z_t, z_tt;
        if (t <= p_.junction_z) {
            rho = p_.radius(t);
            rho_t = p_.radius_dz(t);
            rho_tt = p_.radius_dzz(t);
            z = t, z_t = 1, z_tt = 0;
        } else {
            const double psi = t - p_.junction_z;
            rho = std::cos(psi), rho_t = -std::sin(psi), rho_tt = -std::cos(psi);
            z = p_.junction_z + std::sin(psi), z_t = std::cos(psi), z_tt = -std::sin(psi);
        }
        const double ct = std::cos(q.y()), st = std::sin(q.y());
        c.sigma = Vec3(rho * ct, rho * st, z);
        c.sigma_u = Vec3(rho_t * ct, rho_t * st, z_t);
        c.sigma_v = Vec3(-rho * st, rho * ct, 0);
        c.sigma_uu = Vec3(rho_tt * ct, rho_tt * st, z_tt);
        c.sigma_uv = Vec3(-rho_t * st, rho_t * ct, 0);
        c.sigma_vv = Vec3(-rho * ct, -rho * st, 0);
        return c;
    }

    NeckProfile p_;
};

std::vector<std::string> split(const std::string& text, char sep) {
    std::vector<std::string> out;
    std::stringstream ss(text);
    std::string item;
    while (std::getline(ss, item, sep)) out.push_back(item);
    return out;
}

double to_double(const std::string& s) {
    try {
        std::size_t pos = 0;
        const double v = std::stod(s, &pos);
        if (pos != s.size()) throw std::invalid_argument(s);
        return v;
    } catch (const std::exception&) {
        throw Error(ErrorCode::parse_error, "not a number: '" + s + "'");
    }
}

}  // namespace

// ---------------------------------------------------------------------------

Vec3 SurfaceModel::closest_point(const Vec3& x) const {
    // Move onto the surface along the gradient, then solve the Lagrange
    // stationarity system y − x + λ∇F(y) = 0, F(y) = 0 by Newton's method.
    Vec3 y = x;
    for (int it = 0; it < 8; ++it) {
        const Vec3 g = implicit_gradient(y);
        y -= implicit(y) * g / g.squaredNorm();
    }
    Vec3 g = implicit_gradient(y);
    double lambda = (x - y).dot(g) / g.squaredNorm();
    const double scale = 1.0 + x.norm();
    for (int it = 0; it < tolerance::projection_max_iterations; ++it) {
        g = implicit_gradient(y);
        const Mat3 H = implicit_hessian(y);
        Eigen::Matrix4d J;
        J.topLeftCorner<3, 3>() = Mat3::Identity() + lambda * H;
        J.topRightCorner<3, 1>() = g;
        J.bottomLeftCorner<1, 3>() = g.transpose();
        J(3, 3) = 0;
        Eigen::Vector4d r;
        r.head<3>() = y - x + lambda * g;
        r(3) = implicit(y);
        const Eigen::Vector4d step = J.fullPivLu().solve(-r);
        if (!step.allFinite()) break;
        y += step.head<3>();
        lambda += step(3);
        if (step.head<3>().norm() < 1e-15 * scale) break;
    }
    // Final polish onto the zero set.
    for (int it = 0; it < 3; ++it) {
        g = implicit_gradient(y);
        y -= implicit(y) * g / g.squaredNorm();
    }
    if (!y.allFinite() || residual(y) > 1e-10) {
        throw Error(ErrorCode::projection_diverged, "closest-point iteration failed on " + name());
    }
    return y;
}

double SurfaceModel::residual(const Vec3& x) const {
    return std::abs(implicit(x)) / implicit_gradient(x).norm();
}

double SurfaceModel::seed_area_element(const Vec2& q) const {
    const double h = 1e-6;
    const Vec3 du = (seed_position(q + Vec2(h, 0)) - seed_position(q - Vec2(h, 0))) / (2 * h);
    const Vec3 dv = (seed_position(q + Vec2(0, h)) - seed_position(q - Vec2(0, h))) / (2 * h);
    return du.cross(dv).norm();
}

double SurfaceModel::area(int resolution) const {
    const SeedDomain dom = seed_domain();
    const Vec2 span = dom.hi - dom.lo;
    const double du = span.x() / resolution, dv = span.y() / resolution;
    double sum = 0;
    for (int i = 0; i < resolution; ++i) {
        double row = 0;
        for (int j = 0; j < resolution; ++j) {
            row += seed_area_element(dom.lo + Vec2((i + 0.5) * du, (j + 0.5) * dv));
        }
        sum += row;
    }
    return sum * du * dv;
}

// ---------------------------------------------------------------------------

double NeckProfile::radius(double z) const {
    if (z <= cylinder_height) return r0;
    if (z <= junction_z) return bump_value(amplitude, bump_length, z);
    const double dz = z - junction_z;
    return std::sqrt(std::max(0.0, 1 - dz * dz));
}

double NeckProfile::radius_dz(double z) const {
    if (z <= cylinder_height) return 0;
    if (z <= junction_z) return bump_dz(amplitude, bump_length, z);
    const double dz = z - junction_z;
    return -dz / std::sqrt(std::max(1e-300, 1 - dz * dz));
}

double NeckProfile::radius_dzz(double z) const {
    if (z <= cylinder_height) return 0;
    if (z <= junction_z) return bump_dzz(amplitude, bump_length, z);
    const double dz = z - junction_z;
    const double s = std::max(1e-300, 1 - dz * dz);
    return -1 / (s * std::sqrt(s));
}

double NeckProfile::bump_arc_length() const { return bump_arc(amplitude, bump_length, junction_z); }

double NeckProfile::total_arc_length() const { return cylinder_height + bump_arc_length() + pi / 2; }

Vec2 NeckProfile::at_arc_length(double s) const {
    if (s <= cylinder_height) return Vec2(r0, s);
    const double bump = bump_arc_length();
    if (s <= cylinder_height + bump) {
        const double target = s - cylinder_height;
        double lo = cylinder_height, hi = junction_z;
        for (int it = 0; it < 80; ++it) {
            const double mid = 0.5 * (lo + hi);
            (bump_arc(amplitude, bump_length, mid) < target ? lo : hi) = mid;
        }
        const double z = 0.5 * (lo + hi);
        return Vec2(radius(z), z);
    }
    const double psi = std::min(pi / 2, s - cylinder_height - bump);
    return Vec2(std::cos(psi), junction_z + std::sin(psi));
}

NeckProfile neck_profile(double r0) {
    if (!(r0 > 0 && r0 <= 1)) throw Error(ErrorCode::invalid_argument, "neck radius must lie in (0, 1]");
    NeckProfile p;
    p.r0 = r0;
    p.amplitude = 1 - r0;
    p.cylinder_height = neck_cylinder_height;
    const double target = pi / 2;
    if (p.amplitude == 0) {
        p.bump_length = target;
    } else {
        // Arc length grows monotonically from the amplitude (b → 0) without bound.
        double lo = 1e-6, hi = target;
        for (int it = 0; it < 100; ++it) {
            const double mid = 0.5 * (lo + hi);
            const double len = bump_arc(p.amplitude, mid, neck_cylinder_height + mid);
            (len < target ? lo : hi) = mid;
        }
        p.bump_length = 0.5 * (lo + hi);
    }
    p.junction_z = neck_cylinder_height + p.bump_length;
    return p;
}

// ---------------------------------------------------------------------------

SurfacePtr make_ellipsoid(double a, double b, double s0) {
    return std::make_shared<Ellipsoid>(a, b, s0, "ellipsoid:" + num(a) + ":" + num(b) + ":" + num(s0));
}

SurfacePtr make_sphere(double radius) {
    return std::make_shared<Ellipsoid>(1.0, 1.0, radius, "sphere:" + num(radius));
}

SurfacePtr make_spherical_cap(double radius) {
    return std::make_shared<Ellipsoid>(1.0, 1.0, radius, "cap:" + num(radius), pi / 2);
}

SurfacePtr make_radial_harmonic(double r0, int polar_order) {
    return std::make_shared<RadialHarmonic>(r0, polar_order);
}

SurfacePtr make_torus(double s1, double s2) {
    return std::make_shared<Torus>(s1, s2, Mat3::Identity(), 0.0, 2 * pi, TorusClip::none,
                                   "torus:" + num(s1) + ":" + num(s2));
}

SurfacePtr make_truncated_torus(double u_min, double u_max, double s1, double s2) {
    if (!(u_min >= 0 && u_max <= 2 * pi)) throw Error(ErrorCode::invalid_argument, "azimuth range outside [0, 2π]");
    return std::make_shared<Torus>(s1, s2, Mat3::Identity(), u_min, u_max, TorusClip::wedge,
                                   "truncated-torus:" + num(u_min) + ":" + num(u_max) + ":" + num(s1) + ":" + num(s2));
}

SurfacePtr make_sliced_torus(double minor, double major) {
    Mat3 M;
    M << 0, 0, 1, 0, 1, 0, -1, 0, 0;
    return std::make_shared<Torus>(major, minor, M, pi / 2, 3 * pi / 2, TorusClip::z_half,
                                   "sliced-torus:" + num(minor) + ":" + num(major));
}

SurfacePtr make_flat_disk(double radius) { return std::make_shared<FlatDisk>(radius); }

SurfacePtr make_neck(double r0) { return std::make_shared<Neck>(r0); }

SurfacePtr parse_model(const std::string& text) {
    if (text == "A") return make_ellipsoid(1.2, 1.2, 1.0);
    if (text == "B") return make_radial_harmonic(0.1, 3);
    if (text == "C") return make_radial_harmonic(0.1, 7);
    if (text == "D") return make_torus(0.7, 0.3);
    if (text == "sphere") return make_sphere(1.0);
    if (text == "cap") return make_spherical_cap(1.0);
    if (text == "disk") return make_flat_disk(1.0);
    if (text == "sliced-torus") return make_sliced_torus(0.4, 1.0);
    if (text == "truncated-torus") return make_truncated_torus(pi / 4, 7 * pi / 4, 0.7, 0.3);

    const auto parts = split(text, ':');
    if (parts.empty()) throw Error(ErrorCode::parse_error, "empty surface name");
    const std::string& kind = parts[0];
    auto arg = [&](std::size_t i) { return to_double(parts.at(i)); };
    auto expect = [&](std::size_t n) {
        if (parts.size() != n + 1) {
            throw Error(ErrorCode::parse_error,
                        "surface '" + kind + "' expects " + std::to_string(n) + " parameters: '" + text + "'");
        }
    };
    if (kind == "ellipsoid") return expect(3), make_ellipsoid(arg(1), arg(2), arg(3));
    if (kind == "sphere") return expect(1), make_sphere(arg(1));
    if (kind == "cap") return expect(1), make_spherical_cap(arg(1));
    if (kind == "radial") return expect(2), make_radial_harmonic(arg(1), static_cast<int>(arg(2)));
    if (kind == "torus") return expect(2), make_torus(arg(1), arg(2));
    if (kind == "truncated-torus") return expect(4), make_truncated_torus(arg(1), arg(2), arg(3), arg(4));
    if (kind == "sliced-torus") return expect(2), make_sliced_torus(arg(1), arg(2));
    if (kind == "disk") return expect(1), make_flat_disk(arg(1));
    if (kind == "neck") return expect(1), make_neck(arg(1));
    throw Error(ErrorCode::parse_error, "unknown surface '" + text + "'");
}

}  // namespace surfstat
