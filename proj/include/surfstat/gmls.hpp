#pragma once

#include <vector>

#include "surfstat/types.hpp"

namespace surfstat {

/// Monomials of total degree ≤ m in (x − center)/scale, ordered by degree and
/// then by decreasing power of the first variable.
class PolynomialBasis {
public:
    PolynomialBasis(int degree, int variables, VecX center, double scale);
    PolynomialBasis(int degree, int variables);  // center 0, scale 1

    int degree() const { return degree_; }
    int variables() const { return variables_; }
    int dimension() const { return static_cast<int>(exponents_.size()); }
    const VecX& center() const { return center_; }
    double scale() const { return scale_; }
    const std::vector<Eigen::VectorXi>& exponents() const { return exponents_; }

    VecX evaluate(const VecX& x) const;
    /// τ[φ_i] for the mixed partial derivative ∂^alpha, evaluated at x.
    VecX derivative(const VecX& x, const Eigen::VectorXi& alpha) const;

private:
    int degree_, variables_;
    VecX center_;
    double scale_;
    std::vector<Eigen::VectorXi> exponents_;
};

/// ω(r) = (1 − r/ε)₊^p.
struct WeightFunction {
    double support = 1;
    int exponent = 4;
    double operator()(double r) const;
};

struct GMLSFit {
    VecX coefficients;
    double condition = 0;       // |R₀₀/R_dd| of the pivoted factor
    double residual_norm = 0;   // relative residual of the weighted normal equations
    int rank = 0;
    bool used_svd = false;
};

/// Weighted least-squares problem over fixed sample sites. Factorizes the
/// √ω-scaled design matrix once; fits and stencils reuse the factorization.
/// Throws rank-deficient when the pivoted rank and the truncated SVD rank
/// both fall below the basis dimension.
class WeightedLeastSquares {
public:
    /// sites: one row per sample. weights: ω_j ≥ 0.
    WeightedLeastSquares(const MatX& sites, const VecX& weights, PolynomialBasis basis);

    const PolynomialBasis& basis() const { return basis_; }
    GMLSFit fit(const VecX& values) const;
    /// Columns of `targets` are functionals τ[Φ]; returns one weight column per target
    /// so that τ̃[u] = Σ_j w_j u_j.
    MatX stencils(const MatX& targets) const;

private:
    PolynomialBasis basis_;
    MatX design_;  // √ω ⊙ P
    VecX sqrt_w_;
    Eigen::ColPivHouseholderQR<MatX> qr_;
    Eigen::BDCSVD<MatX> svd_;
    bool use_svd_ = false;
    int rank_ = 0;
    double condition_ = 0;
};

/// Fit with weights from ω(‖x_j − center‖) in the site coordinates.
GMLSFit fit(const MatX& sites, const VecX& values, const WeightFunction& weight, const PolynomialBasis& basis);
double apply_target(const GMLSFit& fit, const VecX& target);
VecX stencil_weights(const MatX& sites, const WeightFunction& weight, const PolynomialBasis& basis,
                     const VecX& target);

}  // namespace surfstat
