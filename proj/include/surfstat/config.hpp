#pragma once

namespace surfstat::tolerance {

// Project-wide exactness thresholds.
inline constexpr double polynomial_reproduction = 1e-9;
inline constexpr double normal_equations_residual = 1e-10;
inline constexpr double stencil_consistency = 1e-12;

inline constexpr double implicit_residual = 1e-12;
inline constexpr int projection_max_iterations = 50;

inline constexpr double qr_rank_threshold = 1e-10;
inline constexpr double svd_cutoff = 1e-12;

inline constexpr double frame_orthonormality = 1e-12;
inline constexpr double covariance_degeneracy = 1e-12;
inline constexpr double fold_over = 1e-12;

inline constexpr double solver_residual = 1e-10;

}  // namespace surfstat::tolerance
