#include "surfstat/experiments.hpp"

#include <algorithm>
#include <cmath>
#include <fstream>
#include <ostream>
#include <sstream>

#include <nlohmann/json.hpp>

#include "surfstat/error.hpp"
#include "surfstat/format.hpp"
#include "surfstat/sampling.hpp"
#include "surfstat/surface.hpp"

namespace surfstat {

std::vector<double> estimate_rate(const std::vector<double>& errors, const std::vector<double>& hs) {
    if (errors.size() != hs.size() || errors.size() < 2)
        throw Error(ErrorCode::nonpositive_input, "need at least two (error, h) pairs of equal length");
    for (std::size_t i = 0; i < errors.size(); ++i)
        if (!(errors[i] > 0 && hs[i] > 0)) throw Error(ErrorCode::nonpositive_input, "errors and spacings must be positive");
    std::vector<double> rates;
    for (std::size_t i = 1; i < errors.size(); ++i)
        rates.push_back(std::log(errors[i - 1] / errors[i]) / std::log(hs[i - 1] / hs[i]));
    return rates;
}

DriftDiffusionSpec manufactured_spec(char manifold) {
    switch (manifold) {
    case 'A': return manifold_a_spec();
    case 'B':
    case 'C': return manifold_bc_spec();
    case 'D': return manifold_d_spec();
    }
    throw Error(ErrorCode::invalid_argument, std::string("unknown manifold '") + manifold + "'");
}

std::vector<ConvergenceRow> run_convergence(char manifold, const std::vector<int>& degrees, int levels,
                                            std::uint64_t seed) {
    if (levels < 1) throw Error(ErrorCode::invalid_argument, "levels must be at least 1");
    const auto model = parse_model(std::string(1, manifold));
    const auto spec = manufactured_spec(manifold);
    const ScalarField u = harmonic_test_field();

    std::vector<std::vector<ConvergenceRow>> by_degree(degrees.size());
    for (int level = 1; level <= levels; ++level) {
        SamplingPlan plan;
        plan.target_h = catalog_h(manifold, level);
        plan.seed = seed;
        const PointCloud cloud = sample_cloud(*model, plan);
        const double measured = measure_fill_distance(cloud).median_spacing;

        const auto n = cloud.size();
        std::vector<double> values(n), reference(n);
#pragma omp parallel for schedule(static)
        for (std::ptrdiff_t i = 0; i < static_cast<std::ptrdiff_t>(n); ++i) {
            values[i] = u.value(cloud.positions[i]);
            reference[i] = reference_generator_implicit(*model, spec, u, cloud.positions[i]);
        }
        for (std::size_t d = 0; d < degrees.size(); ++d) {
            StencilOptions options;
            options.degree = degrees[d];
            std::vector<double> approx;
            try {
                approx = SurfaceOperator(cloud, options).apply(spec, values);
            } catch (const Error& e) {
                throw Error(e.code(), std::string("manifold ") + manifold + " level " + std::to_string(level) +
                                          " degree " + std::to_string(degrees[d]) + ": " + e.what());
            }
            std::vector<double> sq(n);
            for (std::size_t i = 0; i < n; ++i) sq[i] = (approx[i] - reference[i]) * (approx[i] - reference[i]);
            double sum = 0;
            for (double s : sq) sum += s;

            ConvergenceRow row;
            row.manifold = manifold;
            row.degree = degrees[d];
            row.level = level;
            row.target_h = plan.target_h;
            row.measured_h = measured;
            row.n = n;
            row.error = std::sqrt(sum / static_cast<double>(n));
            if (!by_degree[d].empty()) {
                const ConvergenceRow& prev = by_degree[d].back();
                row.rate = estimate_rate({prev.error, row.error}, {prev.target_h, row.target_h})[0];
                row.measured_rate = estimate_rate({prev.error, row.error}, {prev.measured_h, row.measured_h})[0];
            }
            by_degree[d].push_back(row);
        }
    }
    std::vector<ConvergenceRow> rows;
    for (auto& v : by_degree) rows.insert(rows.end(), v.begin(), v.end());
    return rows;
}

void write_convergence_csv(std::ostream& out, const std::vector<ConvergenceRow>& rows) {
    out << "manifold,degree,level,target_h,measured_h,n,error,rate,measured_rate\n";
    for (const auto& r : rows) {
        out << r.manifold << ',' << r.degree << ',' << r.level << ',' << format_full(r.target_h) << ','
            << format_full(r.measured_h) << ',' << r.n << ',' << format_full(r.error) << ','
            << (r.rate ? format_full(*r.rate) : "") << ',' << (r.measured_rate ? format_full(*r.measured_rate) : "")
            << '\n';
    }
}

// ---------------------------------------------------------------------------
// Study configuration

namespace {

const std::vector<Vec2> double_well_starts{{M_PI, 0},         {M_PI, M_PI / 2},     {M_PI, M_PI},
                                           {M_PI / 2, 0},     {M_PI / 2, M_PI / 2}, {M_PI / 2, M_PI},
                                           {M_PI / 3, 0},     {M_PI / 3, M_PI / 2}, {M_PI / 3, M_PI}};

const std::vector<Vec2> diffusivity_starts{{M_PI, 0},         {M_PI, M_PI / 2},         {M_PI, M_PI},
                                           {3 * M_PI / 4, 0}, {3 * M_PI / 4, M_PI / 2}, {3 * M_PI / 4, M_PI},
                                           {5 * M_PI / 4, 0}, {5 * M_PI / 4, M_PI / 2}, {5 * M_PI / 4, M_PI}};

}  // namespace

StudyConfig default_study_config(const std::string& name) {
    StudyConfig c;
    c.name = name;
    if (name == "double-well") {
        c.sweep = {0.0, 0.05, 0.1, 0.5, 1.0, 2.0, 5.0};
        c.start_points = double_well_starts;
    } else if (name == "diffusivity-depth") {
        c.sweep = {0.0, 0.25, 0.5, 0.75, 0.9};
        c.start_points = diffusivity_starts;
    } else if (name == "diffusivity-extent") {
        c.sweep = {0.0, 0.125, 0.25, 0.5, 0.75, 1.0};
        c.start_points = diffusivity_starts;
    } else if (name == "neck") {
        c.sweep = {0.1, 0.15, 0.2, 0.3, 0.4, 0.6, 0.8, 1.0};
        const double cyl = 0.05;
        c.start_arc_lengths = {cyl + M_PI, cyl + 3 * M_PI / 4, cyl + M_PI / 2, cyl + M_PI / 4};
    } else {
        throw Error(ErrorCode::invalid_argument, "unknown study '" + name + "'");
    }
    return c;
}

StudyConfig parse_study_config(const std::string& json_text) {
    nlohmann::json j;
    try {
        j = nlohmann::json::parse(json_text);
    } catch (const nlohmann::json::exception& e) {
        throw Error(ErrorCode::parse_error, e.what());
    }
    if (!j.is_object() || !j.contains("study")) throw Error(ErrorCode::parse_error, "config needs a \"study\" key");
    try {
        StudyConfig c = default_study_config(j.at("study").get<std::string>());
        static const std::vector<std::string> known{"study", "sweep", "start_points", "start_arc_lengths", "h",
                                                    "degree", "seed", "boundary_width", "solver", "gamma", "kT",
                                                    "c", "r", "D0"};
        for (const auto& [key, value] : j.items()) {
            if (std::find(known.begin(), known.end(), key) == known.end())
                throw Error(ErrorCode::parse_error, "unknown config key '" + key + "'");
        }
        if (j.contains("sweep")) c.sweep = j["sweep"].get<std::vector<double>>();
        if (j.contains("start_points")) {
            c.start_points.clear();
            for (const auto& p : j["start_points"]) {
                const auto q = p.get<std::vector<double>>();
                if (q.size() != 2) throw Error(ErrorCode::parse_error, "start points are [u, v] pairs");
                c.start_points.emplace_back(q[0], q[1]);
            }
        }
        if (j.contains("start_arc_lengths")) c.start_arc_lengths = j["start_arc_lengths"].get<std::vector<double>>();
        if (j.contains("h")) c.h = j["h"].get<double>();
        if (j.contains("degree")) c.degree = j["degree"].get<int>();
        if (j.contains("seed")) c.seed = j["seed"].get<std::uint64_t>();
        if (j.contains("boundary_width")) c.boundary_width = j["boundary_width"].get<double>();
        if (j.contains("solver")) c.solver = parse_solver_method(j["solver"].get<std::string>());
        if (j.contains("gamma")) c.gamma = j["gamma"].get<double>();
        if (j.contains("kT")) c.kT = j["kT"].get<double>();
        if (j.contains("c")) c.c = j["c"].get<double>();
        if (j.contains("r")) c.r = j["r"].get<double>();
        if (j.contains("D0")) c.D0 = j["D0"].get<double>();
        validate_study_config(c);
        return c;
    } catch (const nlohmann::json::exception& e) {
        throw Error(ErrorCode::parse_error, e.what());
    }
}

StudyConfig load_study_config(const std::string& path) {
    std::ifstream in(path);
    if (!in) throw Error(ErrorCode::io_error, "cannot open " + path);
    std::stringstream ss;
    ss << in.rdbuf();
    return parse_study_config(ss.str());
}

void validate_study_config(const StudyConfig& c) {
    if (c.sweep.empty()) throw Error(ErrorCode::invalid_argument, "empty sweep");
    if (!std::is_sorted(c.sweep.begin(), c.sweep.end()) ||
        std::adjacent_find(c.sweep.begin(), c.sweep.end()) != c.sweep.end())
        throw Error(ErrorCode::invalid_argument, "sweep values must be strictly increasing");
    if (!(c.h > 0) || c.degree < 1 || !(c.boundary_width > 0))
        throw Error(ErrorCode::invalid_argument, "h, degree and boundary width must be positive");
    if (c.name == "neck") {
        if (c.start_arc_lengths.empty()) throw Error(ErrorCode::invalid_argument, "neck study needs start arc lengths");
        if (c.sweep.front() <= 0 || c.sweep.back() > 1) throw Error(ErrorCode::invalid_argument, "neck r0 must lie in (0, 1]");
    } else if (c.start_points.empty()) {
        throw Error(ErrorCode::invalid_argument, "study needs start points");
    }
    if (c.name == "diffusivity-depth" && (c.sweep.front() < 0 || c.sweep.back() >= 1))
        throw Error(ErrorCode::invalid_argument, "c must lie in [0, 1)");
    if (c.name == "diffusivity-extent" && c.sweep.front() < 0) throw Error(ErrorCode::invalid_argument, "r must be nonnegative");
}

// ---------------------------------------------------------------------------
// Studies

std::size_t nearest_point(const PointCloud& cloud, const Vec3& x) {
    if (cloud.size() == 0) throw Error(ErrorCode::insufficient_points, "empty cloud");
    return KdTree(cloud.positions).nearest(x, 1).front().index;
}

std::vector<double> StudyResult::series(int start) const {
    std::vector<double> out;
    for (const auto& r : rows)
        if (r.start == start) out.push_back(r.fpt);
    return out;
}

namespace {

struct PreparedDomain {
    SurfacePtr model;
    PointCloud cloud;
    BoundaryRule rule;
    std::vector<StudyRow> starts;  // sweep value and fpt left blank
};

PreparedDomain prepare(const SurfacePtr& model, const BoundaryRule& rule, const StudyConfig& config,
                       const std::vector<Vec3>& start_positions, const std::vector<Vec2>& labels) {
    PreparedDomain d{model, {}, rule, {}};
    SamplingPlan plan;
    plan.target_h = config.h;
    plan.seed = config.seed;
    d.cloud = sample_cloud(*model, plan);
    label_boundary(d.cloud, rule);
    const KdTree tree(d.cloud.positions);
    for (std::size_t k = 0; k < start_positions.size(); ++k) {
        const Vec3& x = start_positions[k];
        if (rule.is_boundary(x) || rule.absorbs(x)) {
            throw Error(ErrorCode::invalid_argument, "start point " + std::to_string(k) + " lies in the boundary band");
        }
        StudyRow row;
        row.start = static_cast<int>(k);
        row.chart = labels[k];
        row.index = tree.nearest(x, 1).front().index;
        row.position = d.cloud.positions[row.index];
        row.mapping_distance = (row.position - x).norm();
        d.starts.push_back(row);
    }
    return d;
}

void append_rows(StudyResult& result, const PreparedDomain& d, double sweep_value, const SolutionField& u) {
    for (StudyRow row : d.starts) {
        row.sweep_value = sweep_value;
        row.fpt = u.values[row.index];
        result.rows.push_back(row);
    }
}

SolverOptions solver_options(const StudyConfig& c) {
    SolverOptions o;
    o.method = c.solver;
    return o;
}

std::vector<Vec3> chart_positions(const SurfaceModel& model, const std::vector<Vec2>& qs) {
    std::vector<Vec3> out;
    for (const auto& q : qs) out.push_back(model.position(0, q));
    return out;
}

}  // namespace

StudyResult run_double_well(const StudyConfig& config) {
    validate_study_config(config);
    const double s1 = 0.7, s2 = 0.3;
    const auto model = make_truncated_torus(M_PI / 4, 7 * M_PI / 4, s1, s2);
    const auto rule = BoundaryRule::wedge(M_PI / 4, 7 * M_PI / 4, config.boundary_width);
    const PreparedDomain d =
        prepare(model, rule, config, chart_positions(*model, config.start_points), config.start_points);

    StudyResult result;
    result.name = config.name;
    StencilOptions options;
    options.degree = config.degree;
    const SurfaceOperator op = interior_operator(d.cloud, options);
    for (double k_tilde : config.sweep) {
        const auto spec = double_well_spec(k_tilde * config.kT, config.gamma, config.kT, s1, s2);
        const auto u = solve(assemble(op, StatisticProblem::first_passage(spec, config.degree)), solver_options(config));
        append_rows(result, d, k_tilde, u);
    }
    return result;
}

StudyResult run_diffusivity(const StudyConfig& config) {
    validate_study_config(config);
    const bool depth = config.name == "diffusivity-depth";
    if (!depth && config.name != "diffusivity-extent")
        throw Error(ErrorCode::invalid_argument, "not a diffusivity study: " + config.name);
    const auto model = make_sliced_torus(0.4, 1.0);
    const auto rule = BoundaryRule::height(0, config.boundary_width);
    const PreparedDomain d =
        prepare(model, rule, config, chart_positions(*model, config.start_points), config.start_points);
    const Vec3 center = model->position(0, Vec2(3 * M_PI / 4, M_PI / 2));

    StudyResult result;
    result.name = config.name;
    StencilOptions options;
    options.degree = config.degree;
    const SurfaceOperator op = interior_operator(d.cloud, options);
    for (double value : config.sweep) {
        const double c = depth ? value : config.c;
        const double r = depth ? config.r : value;
        if (1 - c < 1e-3) result.warnings.push_back("near-degenerate diffusivity: 1 - c = " + format_double(1 - c));
        const auto spec = variable_diffusivity_spec(center, c, r, config.D0);
        const auto u = solve(assemble(op, StatisticProblem::first_passage(spec, config.degree)), solver_options(config));
        append_rows(result, d, value, u);
    }
    return result;
}

StudyResult run_neck(const StudyConfig& config) {
    validate_study_config(config);
    StudyResult result;
    result.name = config.name;
    const auto rule = BoundaryRule::height(0, config.boundary_width);
    const auto spec = pure_diffusion(config.D0);
    for (double r0 : config.sweep) {
        const auto model = make_neck(r0);
        const NeckProfile profile = neck_profile(r0);
        std::vector<Vec3> starts;
        std::vector<Vec2> labels;
        for (double s : config.start_arc_lengths) {
            if (!(s > 0 && s <= profile.total_arc_length() + 1e-12))
                throw Error(ErrorCode::invalid_argument, "neck start arc length outside the profile");
            const Vec2 rz = profile.at_arc_length(std::min(s, profile.total_arc_length()));
            starts.emplace_back(rz.x(), 0, rz.y());
            labels.emplace_back(s, 0);
        }
        const PreparedDomain d = prepare(model, rule, config, starts, labels);
        const auto u = evaluate_statistic(d.cloud, StatisticProblem::first_passage(spec, config.degree),
                                          solver_options(config));
        append_rows(result, d, r0, u);

        const double top = profile.junction_z + 1;
        const int samples = 200;
        for (int k = 0; k < samples; ++k) {
            const double z = top * k / samples;
            const double radius = profile.radius(z);
            result.profile.push_back({r0, z, radius, -std::log(2 * M_PI * radius)});
        }
    }
    if (config.sweep.size() >= 2) {
        for (std::size_t s = 0; s < config.start_arc_lengths.size(); ++s) {
            const auto fpt = result.series(static_cast<int>(s));
            double mx = 0, my = 0;
            const auto n = static_cast<double>(fpt.size());
            for (std::size_t i = 0; i < fpt.size(); ++i) {
                mx += std::log(config.sweep[i]) / n;
                my += std::log(fpt[i]) / n;
            }
            double sxy = 0, sxx = 0;
            for (std::size_t i = 0; i < fpt.size(); ++i) {
                const double dx = std::log(config.sweep[i]) - mx;
                sxy += dx * (std::log(fpt[i]) - my);
                sxx += dx * dx;
            }
            result.slopes.push_back({static_cast<int>(s), -sxy / sxx});
        }
    }
    return result;
}

StudyResult run_study(const StudyConfig& config) {
    if (config.name == "double-well") return run_double_well(config);
    if (config.name == "diffusivity-depth" || config.name == "diffusivity-extent") return run_diffusivity(config);
    if (config.name == "neck") return run_neck(config);
    throw Error(ErrorCode::invalid_argument, "unknown study '" + config.name + "'");
}

void write_study_csv(std::ostream& out, const StudyResult& result) {
    out << "study,sweep,start,q1,q2,index,x,y,z,mapping_distance,fpt\n";
    for (const auto& r : result.rows) {
        out << result.name << ',' << format_full(r.sweep_value) << ',' << r.start << ',' << format_full(r.chart.x())
            << ',' << format_full(r.chart.y()) << ',' << r.index << ',' << format_full(r.position.x()) << ','
            << format_full(r.position.y()) << ',' << format_full(r.position.z()) << ','
            << format_full(r.mapping_distance) << ',' << format_full(r.fpt) << '\n';
    }
    if (!result.slopes.empty()) {
        out << "\nstart,loglog_slope\n";
        for (const auto& s : result.slopes) out << s.start << ',' << format_full(s.slope) << '\n';
    }
    if (!result.profile.empty()) {
        out << "\nr0,z,radius,free_energy\n";
        for (const auto& p : result.profile)
            out << format_full(p.r0) << ',' << format_full(p.z) << ',' << format_full(p.radius) << ','
                << format_full(p.free_energy) << '\n';
    }
}

}  // namespace surfstat
