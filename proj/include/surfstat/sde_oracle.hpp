#pragma once

#include <array>
#include <cstdint>
#include <vector>

#include "surfstat/boundary.hpp"
#include "surfstat/generator.hpp"
#include "surfstat/pde_solver.hpp"
#include "surfstat/surface.hpp"

namespace surfstat {

/// Philox4x32-10 counter-based generator (Salmon et al., SC'11).
class Philox4x32 {
public:
    using Counter = std::array<std::uint32_t, 4>;
    using Key = std::array<std::uint32_t, 2>;
    static Counter generate(Counter counter, Key key);
};

/// Independent stream of uniforms and standard normals keyed by
/// (seed, stream index). Draws advance an internal 64-bit block counter,
/// so a stream's values never depend on other streams or on thread layout.
class RandomStream {
public:
    RandomStream(std::uint64_t seed, std::uint64_t stream);

    double uniform();  // in (0, 1)
    double normal();

private:
    void refill();

    Philox4x32::Key key_;
    std::uint64_t stream_;
    std::uint64_t block_ = 0;
    std::array<std::uint32_t, 4> words_{};
    int next_word_ = 4;
    double spare_normal_ = 0;
    bool has_spare_ = false;
};

struct IntegratorConfig {
    double dt = 1e-5;
    std::int64_t max_steps = 100'000'000;
    std::uint64_t seed = 0;
    double projection_tolerance = 1e-10;
    /// Kills a surviving step with the Brownian-bridge probability of an
    /// unobserved excursion into the absorbing band.
    bool bridge_correction = true;
};

/// One Euler–Maruyama step: the increment a dt + b √dt ξ is projected onto
/// the tangent plane at x, added, and the result is mapped to the closest
/// surface point. ξ is a vector of three independent standard normals.
Vec3 sde_step(const SurfaceModel& model, const Vec3& x, const DriftDiffusionSpec& spec, double dt, const Vec3& xi);

struct ExitTimeEstimate {
    double mean = 0;
    double standard_error = 0;
    std::size_t count = 0;
    std::vector<Vec3> hits;  // filled only when requested
};

/// Mean first exit time from the region not absorbed by `rule`, starting at x0.
/// Throws max-steps-exceeded if any trajectory is still alive after
/// config.max_steps steps; the message carries the censored count.
ExitTimeEstimate exit_time(const SurfaceModel& model, const Vec3& x0, const DriftDiffusionSpec& spec,
                           const BoundaryRule& rule, const IntegratorConfig& config, std::size_t trajectories,
                           bool keep_hits = false, std::uint64_t stream_offset = 0);

/// Sum with pairwise (cascade) reduction, which keeps the result independent of
/// how work was split across threads.
double pairwise_sum(const double* values, std::size_t n);

struct ValidationRow {
    std::size_t index = 0;
    Vec3 position = Vec3::Zero();
    double u_pde = 0;
    double u_mc = 0;
    double standard_error = 0;
    double z_score = 0;
};

struct ValidationReport {
    std::vector<ValidationRow> rows;
    std::size_t excluded = 0;
    double pass_fraction = 0;
    bool passed = false;  // |z| ≤ 3 for at least 95% of rows
};

/// Compares PDE values with Monte Carlo exit times at the listed cloud points.
/// Points where the diffusion matrix (projected to the tangent plane) is below
/// `min_diffusion` in norm are skipped and counted in `excluded`.
ValidationReport validate_against_pde(const SurfaceModel& model, const PointCloud& cloud,
                                      const SolutionField& solution, const std::vector<std::size_t>& points,
                                      const DriftDiffusionSpec& spec, const BoundaryRule& rule,
                                      const IntegratorConfig& config, std::size_t trajectories,
                                      double min_diffusion = 1e-3);

}  // namespace surfstat
