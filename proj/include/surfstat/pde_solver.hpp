#pragma once

#include <functional>
#include <vector>

#include <Eigen/SparseCore>

#include "surfstat/generator.hpp"
#include "surfstat/point_cloud.hpp"

namespace surfstat {

using SparseMatrix = Eigen::SparseMatrix<double, Eigen::RowMajor>;

/// Boundary-value problem L u = −g on interior points, u = f on boundary points.
struct StatisticProblem {
    DriftDiffusionSpec spec;
    std::function<double(const Vec3&)> source;    // g
    std::function<double(const Vec3&)> boundary;  // f
    int degree = 4;

    /// Mean first-passage time: g ≡ 1, f ≡ 0.
    static StatisticProblem first_passage(DriftDiffusionSpec spec, int degree = 4);
};

struct SparseSystem {
    SparseMatrix matrix;
    VecX rhs;
    std::vector<PointFlag> rows;
};

enum class SolverMethod { direct, iterative };

SolverMethod parse_solver_method(const std::string& text);

struct SolverOptions {
    SolverMethod method = SolverMethod::direct;
    double tolerance = 1e-10;
    int restart = 100;
    int max_iterations = 10000;
};

struct SolutionField {
    std::vector<double> values;
    double relative_residual = 0;
    int iterations = 0;
    double seconds = 0;
};

/// Assembles the collocation system from an operator built on the cloud's
/// interior points. Reusing one operator across problems skips the geometry
/// stage entirely, which is how parameter sweeps stay cheap.
SparseSystem assemble(const SurfaceOperator& op, const StatisticProblem& problem);

/// Builds interior stencils with the problem's degree, then assembles.
/// Throws empty-boundary when no point is flagged boundary.
SparseSystem assemble(const PointCloud& cloud, const StatisticProblem& problem,
                      StencilOptions options = StencilOptions{});

/// Operator over the interior points of a labeled cloud.
SurfaceOperator interior_operator(const PointCloud& cloud, const StencilOptions& options);

SolutionField solve(const SparseSystem& system, const SolverOptions& options = SolverOptions{});

SolutionField evaluate_statistic(const PointCloud& cloud, const StatisticProblem& problem,
                                 const SolverOptions& options = SolverOptions{});

}  // namespace surfstat
