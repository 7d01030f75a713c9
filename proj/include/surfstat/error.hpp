#pragma once

#include <cstddef>
#include <optional>
#include <stdexcept>
#include <string>
#include <string_view>

namespace surfstat {

enum class ErrorCode {
    chart_out_of_range,
    singular_parameterization,
    relaxation_failed,
    empty_boundary,
    insufficient_points,
    rank_deficient,
    degenerate_covariance,
    fold_over,
    no_convergence,
    singular_factorization,
    projection_diverged,
    max_steps_exceeded,
    nonpositive_input,
    invalid_argument,
    parse_error,
    io_error,
};

constexpr std::string_view to_string(ErrorCode code) {
    switch (code) {
    case ErrorCode::chart_out_of_range: return "chart-out-of-range";
    case ErrorCode::singular_parameterization: return "singular-parameterization-point";
    case ErrorCode::relaxation_failed: return "relaxation-failed-to-converge";
    case ErrorCode::empty_boundary: return "empty-boundary";
    case ErrorCode::insufficient_points: return "insufficient-points";
    case ErrorCode::rank_deficient: return "rank-deficient";
    case ErrorCode::degenerate_covariance: return "degenerate-covariance";
    case ErrorCode::fold_over: return "fold-over";
    case ErrorCode::no_convergence: return "no-convergence";
    case ErrorCode::singular_factorization: return "singular-factorization";
    case ErrorCode::projection_diverged: return "projection-diverged";
    case ErrorCode::max_steps_exceeded: return "max-steps-exceeded";
    case ErrorCode::nonpositive_input: return "nonpositive-input";
    case ErrorCode::invalid_argument: return "invalid-argument";
    case ErrorCode::parse_error: return "parse-error";
    case ErrorCode::io_error: return "io-error";
    }
    return "unknown";
}

/// Library error. Carries a machine-readable code and, for per-point
/// failures, the index of the offending cloud point.
class Error : public std::runtime_error {
public:
    Error(ErrorCode code, const std::string& what, std::optional<std::size_t> point = std::nullopt)
        : std::runtime_error(format(code, what, point)), code_(code), point_(point) {}

    ErrorCode code() const noexcept { return code_; }
    std::optional<std::size_t> point() const noexcept { return point_; }

private:
    static std::string format(ErrorCode code, const std::string& what, std::optional<std::size_t> point) {
        std::string msg(to_string(code));
        if (point) msg += " at point " + std::to_string(*point);
        if (!what.empty()) msg += ": " + what;
        return msg;
    }

    ErrorCode code_;
    std::optional<std::size_t> point_;
};

}  // namespace surfstat
