#include "surfstat/pde_solver.hpp"

#include <chrono>

#include <Eigen/SparseLU>
#include <unsupported/Eigen/IterativeSolvers>

#include "surfstat/error.hpp"
#include "surfstat/format.hpp"

namespace surfstat {

StatisticProblem StatisticProblem::first_passage(DriftDiffusionSpec spec, int degree) {
    return {std::move(spec), [](const Vec3&) { return 1.0; }, [](const Vec3&) { return 0.0; }, degree};
}

SolverMethod parse_solver_method(const std::string& text) {
    if (text == "direct") return SolverMethod::direct;
    if (text == "iterative") return SolverMethod::iterative;
    throw Error(ErrorCode::parse_error, "solver must be direct or iterative, got '" + text + "'");
}

SurfaceOperator interior_operator(const PointCloud& cloud, const StencilOptions& options) {
    std::vector<std::size_t> interior;
    for (std::size_t i = 0; i < cloud.size(); ++i)
        if (!cloud.is_boundary(i)) interior.push_back(i);
    return SurfaceOperator(cloud, options, std::move(interior));
}

SparseSystem assemble(const SurfaceOperator& op, const StatisticProblem& problem) {
    const PointCloud& cloud = op.cloud();
    const auto n = static_cast<Eigen::Index>(cloud.size());
    SparseSystem sys;
    sys.rows = cloud.flags;
    sys.rhs.resize(n);

    std::vector<GeneratorStencil> stencils(cloud.size());
#pragma omp parallel for schedule(static)
    for (Eigen::Index i = 0; i < n; ++i) {
        const auto k = static_cast<std::size_t>(i);
        if (cloud.is_boundary(k)) {
            sys.rhs[i] = problem.boundary(cloud.positions[k]);
        } else {
            stencils[k] = op.generator_stencil(k, problem.spec);
            sys.rhs[i] = -problem.source(cloud.positions[k]);
        }
    }

    std::vector<Eigen::Triplet<double>> triplets;
    for (Eigen::Index i = 0; i < n; ++i) {
        const auto k = static_cast<std::size_t>(i);
        if (cloud.is_boundary(k)) {
            triplets.emplace_back(i, i, 1.0);
            continue;
        }
        const auto& s = stencils[k];
        for (std::size_t j = 0; j < s.neighbors.size(); ++j)
            triplets.emplace_back(i, static_cast<Eigen::Index>(s.neighbors[j]), s.weights[static_cast<Eigen::Index>(j)]);
    }
    sys.matrix.resize(n, n);
    sys.matrix.setFromTriplets(triplets.begin(), triplets.end());
    return sys;
}

SparseSystem assemble(const PointCloud& cloud, const StatisticProblem& problem, StencilOptions options) {
    if (cloud.boundary_count() == 0) throw Error(ErrorCode::empty_boundary, "no boundary points in cloud");
    options.degree = problem.degree;
    return assemble(interior_operator(cloud, options), problem);
}

namespace {

double relative_residual(const SparseSystem& s, const VecX& x) {
    const double denom = s.rhs.norm();
    const double r = (s.matrix * x - s.rhs).norm();
    return denom > 0 ? r / denom : r;
}

}  // namespace

SolutionField solve(const SparseSystem& system, const SolverOptions& options) {
    const auto start = std::chrono::steady_clock::now();
    SolutionField out;
    VecX x;
    const Eigen::SparseMatrix<double> A = system.matrix;  // column-major for the factorizations
    if (system.rhs.size() == 0) return out;

    if (options.method == SolverMethod::direct) {
        Eigen::SparseLU<Eigen::SparseMatrix<double>, Eigen::COLAMDOrdering<int>> lu;
        lu.compute(A);
        if (lu.info() != Eigen::Success) throw Error(ErrorCode::singular_factorization, lu.lastErrorMessage());
        x = lu.solve(system.rhs);
        if (lu.info() != Eigen::Success || !x.allFinite())
            throw Error(ErrorCode::singular_factorization, "back substitution failed");
    } else {
        // The Krylov stopping test uses the preconditioned residual, so the
        // tolerance is tightened until the true residual meets the contract.
        Eigen::GMRES<Eigen::SparseMatrix<double>, Eigen::DiagonalPreconditioner<double>> gmres;
        gmres.set_restart(options.restart);
        gmres.setMaxIterations(options.max_iterations);
        gmres.compute(A);
        double tol = options.tolerance;
        x = VecX::Zero(system.rhs.size());
        for (int attempt = 0; attempt < 4; ++attempt) {
            gmres.setTolerance(tol);
            x = gmres.solveWithGuess(system.rhs, x);
            out.iterations += static_cast<int>(gmres.iterations());
            const double r = relative_residual(system, x);
            if (gmres.info() == Eigen::NoConvergence) {
                throw Error(ErrorCode::no_convergence, "GMRES stopped after " + std::to_string(out.iterations) +
                                                           " iterations, relative residual " + format_double(r));
            }
            if (r <= options.tolerance) break;
            tol = std::max(tol * options.tolerance / r * 0.5, 1e-15);
        }
    }
    // Identity rows hold exactly; pin them so factorization round-off does not leak into f.
    for (std::size_t i = 0; i < system.rows.size(); ++i)
        if (system.rows[i] == PointFlag::boundary) x[static_cast<Eigen::Index>(i)] = system.rhs[static_cast<Eigen::Index>(i)];
    out.relative_residual = relative_residual(system, x);
    if (options.method == SolverMethod::iterative && out.relative_residual > options.tolerance) {
        throw Error(ErrorCode::no_convergence,
                    "relative residual " + format_double(out.relative_residual) + " above tolerance");
    }
    out.values.assign(x.data(), x.data() + x.size());
    out.seconds = std::chrono::duration<double>(std::chrono::steady_clock::now() - start).count();
    return out;
}

SolutionField evaluate_statistic(const PointCloud& cloud, const StatisticProblem& problem,
                                 const SolverOptions& options) {
    return solve(assemble(cloud, problem), options);
}

}  // namespace surfstat
