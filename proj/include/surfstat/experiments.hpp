#pragma once

#include <cstdint>
#include <iosfwd>
#include <optional>
#include <string>
#include <vector>

#include "surfstat/generator.hpp"
#include "surfstat/pde_solver.hpp"

namespace surfstat {

// ---------------------------------------------------------------------------
// Convergence of the operator on the catalog manifolds

struct ConvergenceRow {
    char manifold = 'A';
    int degree = 0;
    int level = 0;
    double target_h = 0;
    double measured_h = 0;  // median nearest-neighbor spacing
    std::size_t n = 0;
    double error = 0;       // RMS of L̃u − Lu over all points
    std::optional<double> rate;           // from target h
    std::optional<double> measured_rate;  // from measured h
};

/// Pairwise log-log slopes log(e_k/e_{k+1}) / log(h_k/h_{k+1}).
/// Throws nonpositive-input for nonpositive entries or mismatched lengths.
std::vector<double> estimate_rate(const std::vector<double>& errors, const std::vector<double>& hs);

/// Manufactured drift/diffusion pair of a catalog manifold (A, B, C or D).
DriftDiffusionSpec manufactured_spec(char manifold);

/// Samples levels 1..levels of the manifold, measures the operator error for
/// each degree, and returns rows ordered by (degree, level).
std::vector<ConvergenceRow> run_convergence(char manifold, const std::vector<int>& degrees, int levels,
                                            std::uint64_t seed = 0);

void write_convergence_csv(std::ostream& out, const std::vector<ConvergenceRow>& rows);

// ---------------------------------------------------------------------------
// First-passage studies

struct StudyConfig {
    std::string name;              // double-well | diffusivity-depth | diffusivity-extent | neck
    std::vector<double> sweep;     // k̃, c, r, or r0; kept sorted ascending
    std::vector<Vec2> start_points;          // chart (u, v); unused by the neck study
    std::vector<double> start_arc_lengths;   // neck only: meridian arc length from z = 0
    double h = 0.025;
    int degree = 4;
    std::uint64_t seed = 0;
    double boundary_width = 0.04;
    SolverMethod solver = SolverMethod::direct;
    // double-well
    double gamma = 1;
    double kT = 1;
    // diffusivity
    double c = 0.9;
    double r = 0.5;
    double D0 = 1;
};

StudyConfig default_study_config(const std::string& name);
/// Parses a JSON object; absent keys keep the defaults of the named study.
StudyConfig parse_study_config(const std::string& json_text);
StudyConfig load_study_config(const std::string& path);
void validate_study_config(const StudyConfig& config);

struct StudyRow {
    double sweep_value = 0;
    int start = 0;
    Vec2 chart = Vec2::Zero();  // (u, v), or (arc length, 0) for the neck
    std::size_t index = 0;
    Vec3 position = Vec3::Zero();
    double mapping_distance = 0;
    double fpt = 0;
};

struct ProfileRow {
    double r0 = 0;
    double z = 0;
    double radius = 0;
    double free_energy = 0;  // Q(z) = −log(2π r(z))
};

struct SlopeRow {
    int start = 0;
    double slope = 0;  // −d log FPT / d log r0, least squares over the sweep
};

struct StudyResult {
    std::string name;
    std::vector<StudyRow> rows;       // ordered by (sweep value, start)
    std::vector<ProfileRow> profile;  // neck only
    std::vector<SlopeRow> slopes;     // neck only
    std::vector<std::string> warnings;

    /// FPT values of one start point in sweep order.
    std::vector<double> series(int start) const;
};

StudyResult run_double_well(const StudyConfig& config);
StudyResult run_diffusivity(const StudyConfig& config);
StudyResult run_neck(const StudyConfig& config);
StudyResult run_study(const StudyConfig& config);

void write_study_csv(std::ostream& out, const StudyResult& result);

/// Nearest cloud point to x (ties to the lower index).
std::size_t nearest_point(const PointCloud& cloud, const Vec3& x);

}  // namespace surfstat
