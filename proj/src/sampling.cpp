#include "surfstat/sampling.hpp"

#include <algorithm>
#include <array>
#include <cmath>
#include <random>

#include "surfstat/error.hpp"

namespace surfstat {

namespace {

struct LadderEntry {
    const char* alias;
    double h[4];
    std::size_t n[4];
};

// Fill distances and point counts of the refinement ladder.
constexpr std::array<LadderEntry, 4> ladder{{
    {"A", {0.1, 0.05, 0.025, 0.0125}, {2350, 9566, 38486, 154182}},
    {"B", {0.1, 0.05, 0.025, 0.0125}, {2306, 9206, 36854, 147634}},
    {"C", {0.1, 0.05, 0.025, 0.0125}, {2002, 7998, 31898, 127346}},
    {"D", {0.08, 0.04, 0.02, 0.01}, {1912, 7478, 29494, 118942}},
}};

// Ratio area / (n h²) implied by the ladder.
constexpr double area_per_point = 0.68;

// Portable uniform double in [0, 1).
double uniform(std::mt19937_64& rng) { return static_cast<double>(rng() >> 11) * 0x1.0p-53; }

std::vector<Vec3> boundary_nodes(const SurfaceModel& model, double spacing) {
    std::vector<Vec3> nodes;
    for (const auto& curve : model.boundary_curves()) {
        constexpr int samples = 4096;
        std::vector<double> cumulative(samples + 1, 0.0);
        auto at = [&](double t) { return model.seed_position(curve.from + t * (curve.to - curve.from)); };
        Vec3 prev = at(0);
        for (int s = 1; s <= samples; ++s) {
            const Vec3 cur = at(static_cast<double>(s) / samples);
            cumulative[s] = cumulative[s - 1] + (cur - prev).norm();
            prev = cur;
        }
        const double length = cumulative.back();
        const int count = std::max(3, static_cast<int>(std::lround(length / spacing)));
        const int last = curve.closed ? count - 1 : count;
        for (int k = 0; k <= last; ++k) {
            const double target = length * k / count;
            const auto it = std::lower_bound(cumulative.begin(), cumulative.end(), target);
            const auto s = std::clamp<std::ptrdiff_t>(it - cumulative.begin(), 1, samples);
            const double seg = cumulative[s] - cumulative[s - 1];
            const double frac = seg > 0 ? (target - cumulative[s - 1]) / seg : 0.0;
            nodes.push_back(at((static_cast<double>(s - 1) + frac) / samples));
        }
    }
    return nodes;
}

/// Stratified systematic sampling of the seed domain with density ∝ area element,
/// keeping clear of a margin along the boundary.
std::vector<Vec3> seed_points(const SurfaceModel& model, std::size_t count, double margin, std::mt19937_64& rng) {
    const SeedDomain dom = model.seed_domain();
    const Vec2 span = dom.hi - dom.lo;
    const int cells = std::max(8, static_cast<int>(std::ceil(2.0 * std::sqrt(static_cast<double>(count)))));
    const double du = span.x() / cells, dv = span.y() / cells;
    std::vector<double> cumulative(static_cast<std::size_t>(cells) * cells + 1, 0.0);
    for (int i = 0; i < cells; ++i) {
        for (int j = 0; j < cells; ++j) {
            const std::size_t c = static_cast<std::size_t>(i) * cells + j;
            const Vec2 mid = dom.lo + Vec2((i + 0.5) * du, (j + 0.5) * dv);
            // Cells inside the boundary margin receive no seeds.
            const bool inside = model.clip(model.seed_position(mid)) >= margin;
            cumulative[c + 1] = cumulative[c] + (inside ? model.seed_area_element(mid) : 0.0);
        }
    }
    const double total = cumulative.back();
    const double offset = uniform(rng);
    std::vector<Vec3> seeds;
    seeds.reserve(count);
    for (std::size_t k = 0; k < count; ++k) {
        const double target = (static_cast<double>(k) + offset) / static_cast<double>(count) * total;
        const auto it = std::upper_bound(cumulative.begin(), cumulative.end(), target);
        const auto c = static_cast<std::size_t>(std::clamp<std::ptrdiff_t>(it - cumulative.begin() - 1, 0,
                                                                           cells * cells - 1));
        const int i = static_cast<int>(c / cells), j = static_cast<int>(c % cells);
        const Vec2 q = dom.lo + Vec2((i + uniform(rng)) * du, (j + uniform(rng)) * dv);
        seeds.push_back(model.seed_position(q));
    }
    return seeds;
}

struct SpacingReport {
    double fraction_ok, p01, p50, p99;
};

SpacingReport spacing_report(const std::vector<Vec3>& points, double h) {
    auto d = nearest_spacings(points);
    const auto good = std::count_if(d.begin(), d.end(), [h](double s) { return std::abs(s - h) <= 0.35 * h; });
    std::sort(d.begin(), d.end());
    auto q = [&](double f) { return d[static_cast<std::size_t>(f * static_cast<double>(d.size() - 1))] / h; };
    return {static_cast<double>(good) / static_cast<double>(d.size()), q(0.01), q(0.5), q(0.99)};
}

}  // namespace

std::optional<std::size_t> catalog_count(const std::string& model_name, double target_h) {
    for (const auto& entry : ladder) {
        if (parse_model(entry.alias)->name() != model_name) continue;
        for (int level = 0; level < 4; ++level) {
            if (std::abs(entry.h[level] - target_h) <= 1e-12 * target_h) return entry.n[level];
        }
    }
    return std::nullopt;
}

double catalog_h(char manifold, int level) {
    if (level < 1 || level > 4) throw Error(ErrorCode::invalid_argument, "catalog level must be 1..4");
    for (const auto& entry : ladder) {
        if (entry.alias[0] == manifold) return entry.h[level - 1];
    }
    throw Error(ErrorCode::invalid_argument, std::string("unknown catalog manifold '") + manifold + "'");
}

std::size_t count_for_area(double area, double target_h) {
    return static_cast<std::size_t>(std::max(2.0, std::round(area / (area_per_point * target_h * target_h))));
}

PointCloud sample_cloud(const SurfaceModel& model, const SamplingPlan& plan) {
    if (!(plan.target_h > 0)) throw Error(ErrorCode::invalid_argument, "target_h must be positive");
    if (plan.relaxation_iters < 0) throw Error(ErrorCode::invalid_argument, "relaxation_iters must be ≥ 0");
    const double area = model.area();
    std::size_t n = plan.expected_n.value_or(0);
    if (n == 0) n = catalog_count(model.name(), plan.target_h).value_or(count_for_area(area, plan.target_h));

    // Nearest-neighbor distance of a hexagonal packing with n points on this area.
    const double spacing = std::sqrt(2.0 * area / (std::sqrt(3.0) * static_cast<double>(n)));

    std::vector<Vec3> points = boundary_nodes(model, spacing);
    const std::size_t fixed = points.size();
    if (fixed >= n) throw Error(ErrorCode::invalid_argument, "point budget exhausted by boundary nodes");

    const double margin = 0.75 * spacing;
    std::mt19937_64 rng(plan.seed);
    const auto seeds = seed_points(model, n - fixed, margin, rng);
    points.insert(points.end(), seeds.begin(), seeds.end());

    // Repulsion relaxation: each free point is pushed by its six nearest
    // neighbors closer than the rest length, moved along the tangent plane and
    // reprojected. Moves into the boundary margin are rejected.
    const double rest = 1.2 * spacing;
    const double step = 0.2;
    std::vector<Vec3> next = points;
    for (int iter = 0; iter < plan.relaxation_iters; ++iter) {
        const KdTree tree(points);
        double moved2 = 0;
#pragma omp parallel for schedule(static) reduction(+ : moved2)
        for (std::ptrdiff_t i = static_cast<std::ptrdiff_t>(fixed); i < static_cast<std::ptrdiff_t>(points.size());
             ++i) {
            const Vec3& x = points[i];
            Vec3 force = Vec3::Zero();
            for (const auto& hit : tree.nearest(x, 7)) {
                if (hit.index == static_cast<std::size_t>(i) || hit.distance >= rest) continue;
                if (hit.distance == 0) {
                    // Coincident points: separate them along a deterministic direction.
                    force += (hit.index < static_cast<std::size_t>(i) ? 1.0 : -1.0) * 1e-3 * spacing * Vec3::UnitX();
                    continue;
                }
                force += (rest - hit.distance) * (x - points[hit.index]) / hit.distance;
            }
            const Vec3 n_hat = model.normal(x);
            Vec3 delta = step * (force - force.dot(n_hat) * n_hat);
            const double len = delta.norm();
            if (len > 0.5 * spacing) delta *= 0.5 * spacing / len;
            Vec3 y = x;
            if (len > 0) {
                const Vec3 candidate = model.closest_point(x + delta);
                const double c_new = model.clip(candidate);
                if (std::isfinite(candidate.sum()) && c_new >= std::min(model.clip(x), margin)) y = candidate;
            }
            moved2 += (y - x).squaredNorm();
            next[i] = y;
        }
        std::swap(points, next);
        const double rms = std::sqrt(moved2 / static_cast<double>(points.size() - fixed));
        if (rms < 1e-4 * spacing) break;
    }

    const SpacingReport report = spacing_report(points, plan.target_h);
    if (report.fraction_ok < 0.99) {
        throw Error(ErrorCode::relaxation_failed,
                    "only " + std::to_string(100 * report.fraction_ok) + "% of points within ±35% of h = " +
                        std::to_string(plan.target_h) + " (spacing/h quantiles 1%: " + std::to_string(report.p01) +
                        ", 50%: " + std::to_string(report.p50) + ", 99%: " + std::to_string(report.p99) + ")");
    }

    PointCloud cloud;
    cloud.positions = std::move(points);
    cloud.flags.assign(cloud.positions.size(), PointFlag::interior);
    cloud.source_model = model.name();
    return cloud;
}

}  // namespace surfstat
