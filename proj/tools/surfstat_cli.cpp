// Command-line front end: sampling, curvature, FPT solves, Monte Carlo
// validation, convergence tables and the three studies.

#include <cmath>
#include <fstream>
#include <iostream>
#include <string>
#include <vector>

#include <Eigen/Core>

#include "CLI11.hpp"
#include "surfstat/boundary.hpp"
#include "surfstat/error.hpp"
#include "surfstat/exact_geometry.hpp"
#include "surfstat/experiments.hpp"
#include "surfstat/format.hpp"
#include "surfstat/geometry_estimation.hpp"
#include "surfstat/pde_solver.hpp"
#include "surfstat/sampling.hpp"
#include "surfstat/sde_oracle.hpp"
#include "surfstat/surface.hpp"

using namespace surfstat;

namespace {

std::ofstream open_output(const std::string& path) {
    std::ofstream out(path, std::ios::binary);
    if (!out) throw Error(ErrorCode::io_error, "cannot write " + path);
    return out;
}

SurfacePtr source_model(const PointCloud& cloud) {
    if (cloud.source_model.empty()) return nullptr;
    return parse_model(cloud.source_model);
}

void cmd_sample(const std::string& surface, double h, std::uint64_t seed, const std::string& boundary,
                const std::string& out_path) {
    const auto model = parse_model(surface);
    SamplingPlan plan;
    plan.target_h = h;
    plan.seed = seed;
    PointCloud cloud = sample_cloud(*model, plan);
    label_boundary(cloud, BoundaryRule::parse(boundary));
    auto out = open_output(out_path);
    write_cloud(out, cloud);
    std::cerr << "n=" << cloud.size() << "\nboundary_points=" << cloud.boundary_count() << '\n';
}

void cmd_curvature(const std::string& cloud_path, int degree, const std::string& out_path) {
    const PointCloud cloud = read_cloud_file(cloud_path);
    const auto estimate = estimate_curvature_field(cloud, degree);
    const auto model = source_model(cloud);
    auto out = open_output(out_path);
    if (model) {
        out << "index,K_est,K_exact,abs_err\n";
        double sq = 0;
        for (std::size_t i = 0; i < cloud.size(); ++i) {
            const double exact = exact_geometry_at(*model, cloud.positions[i]).gaussian_curvature;
            const double err = std::abs(estimate[i] - exact);
            sq += err * err;
            out << i << ',' << format_full(estimate[i]) << ',' << format_full(exact) << ',' << format_full(err) << '\n';
        }
        std::cerr << "l2_error=" << format_double(std::sqrt(sq / static_cast<double>(cloud.size()))) << '\n';
    } else {
        out << "index,K_est\n";
        for (std::size_t i = 0; i < cloud.size(); ++i) out << i << ',' << format_full(estimate[i]) << '\n';
    }
}

void cmd_solve_fpt(const std::string& cloud_path, int degree, const std::string& spec_text,
                   const std::string& solver, const std::string& out_path) {
    const PointCloud cloud = read_cloud_file(cloud_path);
    SolverOptions options;
    options.method = parse_solver_method(solver);
    const auto u = evaluate_statistic(cloud, StatisticProblem::first_passage(parse_spec(spec_text), degree), options);
    auto out = open_output(out_path);
    out << "index,x,y,z,u\n";
    for (std::size_t i = 0; i < cloud.size(); ++i) {
        const Vec3& p = cloud.positions[i];
        out << i << ',' << format_full(p.x()) << ',' << format_full(p.y()) << ',' << format_full(p.z()) << ','
            << format_full(u.values[i]) << '\n';
    }
    // Timing goes to stderr only, so the output file stays reproducible.
    std::cerr << "residual=" << format_double(u.relative_residual) << "\niterations=" << u.iterations
              << "\nseconds=" << format_double(u.seconds) << '\n';
}

void cmd_mc_validate(const std::string& cloud_path, const std::string& spec_text, int degree,
                     const std::vector<std::size_t>& points, std::size_t trajectories, double dt, std::uint64_t seed,
                     const std::string& out_path) {
    const PointCloud cloud = read_cloud_file(cloud_path);
    const auto model = source_model(cloud);
    if (!model) throw Error(ErrorCode::invalid_argument, "mc-validate needs a cloud with a known source surface");
    for (auto i : points)
        if (i >= cloud.size()) throw Error(ErrorCode::invalid_argument, "point index out of range", i);
    const auto spec = parse_spec(spec_text);
    const auto rule = BoundaryRule::parse(cloud.boundary_rule);
    const auto u = evaluate_statistic(cloud, StatisticProblem::first_passage(spec, degree));
    IntegratorConfig config;
    config.dt = dt;
    config.seed = seed;
    const auto report = validate_against_pde(*model, cloud, u, points, spec, rule, config, trajectories);
    auto out = open_output(out_path);
    out << "index,x,y,z,u_pde,u_mc,standard_error,z_score\n";
    for (const auto& r : report.rows) {
        out << r.index << ',' << format_full(r.position.x()) << ',' << format_full(r.position.y()) << ','
            << format_full(r.position.z()) << ',' << format_full(r.u_pde) << ',' << format_full(r.u_mc) << ','
            << format_full(r.standard_error) << ',' << format_full(r.z_score) << '\n';
    }
    std::cerr << "excluded=" << report.excluded << "\npass_fraction=" << format_double(report.pass_fraction)
              << "\npassed=" << (report.passed ? "true" : "false") << '\n';
}

void cmd_converge(const std::string& manifold, const std::vector<int>& degrees, int levels, std::uint64_t seed,
                  const std::string& out_path) {
    if (manifold.size() != 1) throw Error(ErrorCode::invalid_argument, "manifold must be one of A, B, C, D");
    const auto rows = run_convergence(manifold[0], degrees, levels, seed);
    auto out = open_output(out_path);
    write_convergence_csv(out, rows);
}

void cmd_study(const std::string& name, const std::string& config_path, const std::string& out_path) {
    StudyConfig config = config_path.empty() ? default_study_config(name) : load_study_config(config_path);
    if (!name.empty() && config.name != name)
        throw Error(ErrorCode::invalid_argument, "config is for study '" + config.name + "', not '" + name + "'");
    const auto result = run_study(config);
    for (const auto& w : result.warnings) std::cerr << "warning=" << w << '\n';
    auto out = open_output(out_path);
    write_study_csv(out, result);
}

const char* study_help = R"(Study configuration is a JSON object. Keys and defaults:
  study              double-well | diffusivity-depth | diffusivity-extent | neck (required)
  sweep              k~ {0,0.05,0.1,0.5,1,2,5}; c {0,0.25,0.5,0.75,0.9};
                     r {0,0.125,0.25,0.5,0.75,1}; r0 {0.1,0.15,0.2,0.3,0.4,0.6,0.8,1}
  start_points       [[u,v],...] chart coordinates, nine per torus study
  start_arc_lengths  neck only; arc length from the rim, default
                     {0.05+pi, 0.05+3pi/4, 0.05+pi/2, 0.05+pi/4}
  h 0.025   degree 4   seed 0   boundary_width 0.04   solver direct
  gamma 1   kT 1       (double well)
  c 0.9     r 0.5      D0 1     (diffusivity; D0 also sets the neck diffusivity))";

}  // namespace

int main(int argc, char** argv) {
    Eigen::setNbThreads(1);
    CLI::App app{"Mean first-passage times of surface diffusions on point clouds"};
    app.require_subcommand(1);

    std::string surface, boundary = "none", out, cloud_path, spec = "diffusion", solver = "direct";
    std::string manifold, study_name, config_path;
    double h = 0.05, dt = 1e-5;
    std::uint64_t seed = 0;
    int degree = 4, levels = 3;
    std::size_t trajectories = 100000;
    std::vector<std::size_t> points;
    std::vector<int> degrees{2, 4, 6};

    auto* sample = app.add_subcommand("sample", "Sample a quasi-uniform point cloud");
    sample->set_help_flag("--help", "Print this help message and exit");
    sample->add_option("--surface", surface, "Model name or alias (A, B, C, D, sphere, cap, disk, ...)")->required();
    sample->add_option("--h", h, "Target fill distance")->capture_default_str();
    sample->add_option("--seed", seed, "Random seed")->capture_default_str();
    sample->add_option("--boundary", boundary, "Boundary rule: none, z:<c>:<w>, rim:<R>:<w>, wedge:<a>:<b>:<w>")
        ->capture_default_str();
    sample->add_option("--out", out, "Output cloud file")->required();

    auto* curvature = app.add_subcommand("curvature", "Estimate Gaussian curvature at every point");
    curvature->add_option("--cloud", cloud_path)->required();
    curvature->add_option("--degree", degree)->capture_default_str();
    curvature->add_option("--out", out)->required();

    auto* solve_fpt = app.add_subcommand("solve-fpt", "Solve for the mean first-passage time");
    solve_fpt->add_option("--cloud", cloud_path)->required();
    solve_fpt->add_option("--degree", degree)->capture_default_str();
    solve_fpt->add_option("--spec", spec, "Drift/diffusion preset")->capture_default_str();
    solve_fpt->add_option("--solver", solver)->check(CLI::IsMember({"direct", "iterative"}))->capture_default_str();
    solve_fpt->add_option("--out", out)->required();

    auto* mc = app.add_subcommand("mc-validate", "Compare the PDE solution with Monte Carlo exit times");
    mc->add_option("--cloud", cloud_path)->required();
    mc->add_option("--spec", spec)->capture_default_str();
    mc->add_option("--degree", degree)->capture_default_str();
    mc->add_option("--points", points, "Comma-separated point indices")->delimiter(',')->required();
    mc->add_option("--traj", trajectories)->capture_default_str();
    mc->add_option("--dt", dt)->capture_default_str();
    mc->add_option("--seed", seed)->capture_default_str();
    mc->add_option("--out", out)->required();

    auto* converge = app.add_subcommand("converge", "Operator convergence table on a catalog manifold");
    converge->add_option("--manifold", manifold)->check(CLI::IsMember({"A", "B", "C", "D"}))->required();
    converge->add_option("--degrees", degrees)->delimiter(',')->capture_default_str();
    converge->add_option("--levels", levels)->check(CLI::Range(1, 4))->capture_default_str();
    converge->add_option("--seed", seed)->capture_default_str();
    converge->add_option("--out", out)->required();

    auto* study = app.add_subcommand("study", "Run a first-passage study");
    study->footer(study_help);
    study->add_option("--name", study_name)
        ->check(CLI::IsMember({"double-well", "diffusivity-depth", "diffusivity-extent", "neck"}));
    study->add_option("--config", config_path, "JSON configuration file");
    study->add_option("--out", out)->required();

    CLI11_PARSE(app, argc, argv);

    try {
        if (*sample) cmd_sample(surface, h, seed, boundary, out);
        if (*curvature) cmd_curvature(cloud_path, degree, out);
        if (*solve_fpt) cmd_solve_fpt(cloud_path, degree, spec, solver, out);
        if (*mc) cmd_mc_validate(cloud_path, spec, degree, points, trajectories, dt, seed, out);
        if (*converge) cmd_converge(manifold, degrees, levels, seed, out);
        if (*study) {
            if (study_name.empty() && config_path.empty()) throw Error(ErrorCode::invalid_argument, "need --name or --config");
            cmd_study(study_name, config_path, out);
        }
    } catch (const Error& e) {
        std::cerr << "error=" << e.what() << '\n';
        return 2;
    }
    return 0;
}
