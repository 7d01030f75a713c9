#include "surfstat/sde_oracle.hpp"

#include <cmath>
#include <optional>

#include "surfstat/error.hpp"

namespace surfstat {

Philox4x32::Counter Philox4x32::generate(Counter c, Key k) {
    constexpr std::uint32_t M0 = 0xD2511F53u, M1 = 0xCD9E8D57u;
    constexpr std::uint32_t W0 = 0x9E3779B9u, W1 = 0xBB67AE85u;
    for (int round = 0; round < 10; ++round) {
        const std::uint64_t p0 = static_cast<std::uint64_t>(M0) * c[0];
        const std::uint64_t p1 = static_cast<std::uint64_t>(M1) * c[2];
        c = {static_cast<std::uint32_t>(p1 >> 32) ^ c[1] ^ k[0], static_cast<std::uint32_t>(p1),
             static_cast<std::uint32_t>(p0 >> 32) ^ c[3] ^ k[1], static_cast<std::uint32_t>(p0)};
        k[0] += W0;
        k[1] += W1;
    }
    return c;
}

RandomStream::RandomStream(std::uint64_t seed, std::uint64_t stream)
    : key_{static_cast<std::uint32_t>(seed), static_cast<std::uint32_t>(seed >> 32)}, stream_(stream) {}

void RandomStream::refill() {
    words_ = Philox4x32::generate({static_cast<std::uint32_t>(block_), static_cast<std::uint32_t>(block_ >> 32),
                                   static_cast<std::uint32_t>(stream_), static_cast<std::uint32_t>(stream_ >> 32)},
                                  key_);
    ++block_;
    next_word_ = 0;
}

double RandomStream::uniform() {
    if (next_word_ > 2) refill();
    const std::uint64_t bits = (static_cast<std::uint64_t>(words_[next_word_]) << 32) | words_[next_word_ + 1];
    next_word_ += 2;
    return (static_cast<double>(bits >> 11) + 0.5) * 0x1.0p-53;
}

double RandomStream::normal() {
    if (has_spare_) {
        has_spare_ = false;
        return spare_normal_;
    }
    // Marsaglia's polar form of Box–Muller; avoids the trigonometric calls.
    double a, b, r2;
    do {
        a = 2 * uniform() - 1;
        b = 2 * uniform() - 1;
        r2 = a * a + b * b;
    } while (r2 >= 1 || r2 == 0);
    const double f = std::sqrt(-2 * std::log(r2) / r2);
    spare_normal_ = b * f;
    has_spare_ = true;
    return a * f;
}

Vec3 sde_step(const SurfaceModel& model, const Vec3& x, const DriftDiffusionSpec& spec, double dt, const Vec3& xi) {
    const Vec3 n = model.normal(x);
    const Vec3 increment = spec.drift(x) * dt + spec.diffusion(x) * xi * std::sqrt(dt);
    return model.closest_point(x + increment - increment.dot(n) * n);
}

double pairwise_sum(const double* v, std::size_t n) {
    if (n <= 8) {
        double s = 0;
        for (std::size_t i = 0; i < n; ++i) s += v[i];
        return s;
    }
    const std::size_t half = n / 2;
    return pairwise_sum(v, half) + pairwise_sum(v + half, n - half);
}

namespace {

struct Trajectory {
    double time = 0;
    Vec3 hit = Vec3::Zero();
    bool censored = false;
};

// Variance rate of the absorbing coordinate s along the tangent plane, used by the bridge test.
double band_variance_rate(const BoundaryRule& rule, const Vec3& x, const Vec3& n, const Mat3& b) {
    const Vec3 grad = rule.gradient(x);
    return (b.transpose() * (grad - grad.dot(n) * n)).squaredNorm();
}

// Orthonormal tangent pair for a unit normal (Duff et al., branchless form).
void tangent_basis(const Vec3& n, Vec3& t1, Vec3& t2) {
    const double sign = std::copysign(1.0, n.z());
    const double a = -1.0 / (sign + n.z());
    const double b = n.x() * n.y() * a;
    t1 = Vec3(1 + sign * n.x() * n.x() * a, sign * b, -sign * n.x());
    t2 = Vec3(b, sign + n.y() * n.y() * a, -n.y());
}

bool is_scalar_matrix(const Mat3& b) {
    return b(0, 1) == 0 && b(0, 2) == 0 && b(1, 0) == 0 && b(1, 2) == 0 && b(2, 0) == 0 && b(2, 1) == 0 &&
           b(0, 0) == b(1, 1) && b(1, 1) == b(2, 2);
}

Trajectory simulate(const SurfaceModel& model, const Vec3& x0, const DriftDiffusionSpec& spec,
                    const BoundaryRule& rule, const IntegratorConfig& cfg, RandomStream& rng) {
    Trajectory tr;
    const double w = rule.half_width;
    Vec3 x = x0;
    Vec3 n = model.normal(x);
    double s = rule.signed_value(x) - w;
    if (s < 0) {
        tr.hit = x;
        return tr;
    }
    const double sqdt = std::sqrt(cfg.dt);
    for (std::int64_t k = 0; k < cfg.max_steps; ++k) {
        const Mat3 b = spec.diffusion(x);
        Vec3 inc = spec.drift(x) * cfg.dt;
        if (is_scalar_matrix(b)) {
            // Isotropic noise projected to the plane is isotropic in any tangent basis.
            Vec3 t1, t2;
            tangent_basis(n, t1, t2);
            const double xi1 = rng.normal(), xi2 = rng.normal();
            inc += b(0, 0) * sqdt * (xi1 * t1 + xi2 * t2);
        } else {
            const Vec3 xi(rng.normal(), rng.normal(), rng.normal());
            inc += b * xi * sqdt;
        }
        inc -= inc.dot(n) * n;
        Vec3 n_new;
        const Vec3 y = model.project(x + inc, n_new);
        const double s_new = rule.signed_value(y) - w;
        const double t = static_cast<double>(k) * cfg.dt;
        if (s_new < 0) {
            const double frac = s / (s - s_new);
            tr.time = t + frac * cfg.dt;
            tr.hit = x + frac * (y - x);
            return tr;
        }
        if (cfg.bridge_correction) {
            const double var = band_variance_rate(rule, x, n, b) * cfg.dt;
            if (var > 0 && rng.uniform() < std::exp(-2 * s * s_new / var)) {
                tr.time = t + 0.5 * cfg.dt;
                tr.hit = 0.5 * (x + y);
                return tr;
            }
        }
        x = y;
        n = n_new;
        s = s_new;
    }
    tr.censored = true;
    return tr;
}

}  // namespace

ExitTimeEstimate exit_time(const SurfaceModel& model, const Vec3& x0, const DriftDiffusionSpec& spec,
                           const BoundaryRule& rule, const IntegratorConfig& config, std::size_t trajectories,
                           bool keep_hits, std::uint64_t stream_offset) {
    if (!(config.dt > 0)) throw Error(ErrorCode::invalid_argument, "dt must be positive");
    if (config.projection_tolerance > 1e-10) throw Error(ErrorCode::invalid_argument, "projection tolerance above 1e-10");
    if (trajectories < 2) throw Error(ErrorCode::invalid_argument, "need at least two trajectories");
    if (rule.is_none()) throw Error(ErrorCode::empty_boundary, "no absorbing boundary");

    std::vector<Trajectory> runs(trajectories);
    std::vector<std::optional<Error>> failure(trajectories);
#pragma omp parallel for schedule(dynamic, 16)
    for (std::ptrdiff_t i = 0; i < static_cast<std::ptrdiff_t>(trajectories); ++i) {
        RandomStream rng(config.seed, stream_offset + static_cast<std::uint64_t>(i));
        try {
            runs[i] = simulate(model, x0, spec, rule, config, rng);
        } catch (const Error& e) {
            failure[i] = e;
        }
    }
    for (const auto& f : failure)
        if (f) throw *f;

    std::size_t censored = 0;
    std::vector<double> t(trajectories), t2(trajectories);
    for (std::size_t i = 0; i < trajectories; ++i) {
        censored += runs[i].censored;
        t[i] = runs[i].time;
    }
    if (censored > 0) {
        throw Error(ErrorCode::max_steps_exceeded,
                    std::to_string(censored) + " of " + std::to_string(trajectories) + " trajectories censored");
    }
    ExitTimeEstimate est;
    est.count = trajectories;
    est.mean = pairwise_sum(t.data(), trajectories) / static_cast<double>(trajectories);
    for (std::size_t i = 0; i < trajectories; ++i) t2[i] = (t[i] - est.mean) * (t[i] - est.mean);
    const double var = pairwise_sum(t2.data(), trajectories) / static_cast<double>(trajectories - 1);
    est.standard_error = std::sqrt(var / static_cast<double>(trajectories));
    if (keep_hits) {
        est.hits.reserve(trajectories);
        for (const auto& r : runs) est.hits.push_back(r.hit);
    }
    return est;
}

ValidationReport validate_against_pde(const SurfaceModel& model, const PointCloud& cloud,
                                      const SolutionField& solution, const std::vector<std::size_t>& points,
                                      const DriftDiffusionSpec& spec, const BoundaryRule& rule,
                                      const IntegratorConfig& config, std::size_t trajectories,
                                      double min_diffusion) {
    ValidationReport report;
    std::size_t pass = 0;
    for (std::size_t k = 0; k < points.size(); ++k) {
        const std::size_t i = points[k];
        if (i >= cloud.size()) throw Error(ErrorCode::invalid_argument, "point index out of range", i);
        const Vec3& x = cloud.positions[i];
        const Vec3 n = model.normal(x);
        const Mat3 P = Mat3::Identity() - n * n.transpose();
        if ((P * spec.diffusion(x)).norm() < min_diffusion) {
            ++report.excluded;
            continue;
        }
        // Each point gets its own block of streams so reports do not depend on point order.
        const auto est = exit_time(model, x, spec, rule, config, trajectories, false,
                                   static_cast<std::uint64_t>(i) << 32);
        ValidationRow row;
        row.index = i;
        row.position = x;
        row.u_pde = solution.values.at(i);
        row.u_mc = est.mean;
        row.standard_error = est.standard_error;
        const double diff = row.u_pde - row.u_mc;
        row.z_score = est.standard_error > 0 ? diff / est.standard_error : (diff == 0 ? 0 : HUGE_VAL);
        pass += std::abs(row.z_score) <= 3;
        report.rows.push_back(row);
    }
    report.pass_fraction = report.rows.empty() ? 1.0 : static_cast<double>(pass) / static_cast<double>(report.rows.size());
    report.passed = report.pass_fraction >= 0.95;
    return report;
}

}  // namespace surfstat
