#include "surfstat/gmls.hpp"

#include <cmath>

#include "surfstat/config.hpp"
#include "surfstat/error.hpp"

namespace surfstat {

namespace {

void enumerate(int vars, int remaining, Eigen::VectorXi& current, int pos, std::vector<Eigen::VectorXi>& out) {
    if (pos == vars - 1) {
        current[pos] = remaining;
        out.push_back(current);
        return;
    }
    for (int e = remaining; e >= 0; --e) {
        current[pos] = e;
        enumerate(vars, remaining - e, current, pos + 1, out);
    }
}

double falling(int n, int k) {
    double r = 1;
    for (int i = 0; i < k; ++i) r *= n - i;
    return r;
}

}  // namespace

PolynomialBasis::PolynomialBasis(int degree, int variables, VecX center, double scale)
    : degree_(degree), variables_(variables), center_(std::move(center)), scale_(scale) {
    if (degree < 0 || variables < 1) throw Error(ErrorCode::invalid_argument, "invalid polynomial basis");
    if (center_.size() != variables) throw Error(ErrorCode::invalid_argument, "basis center dimension mismatch");
    if (!(scale > 0)) throw Error(ErrorCode::invalid_argument, "basis scale must be positive");
    Eigen::VectorXi current(variables);
    for (int total = 0; total <= degree; ++total) enumerate(variables, total, current, 0, exponents_);
}

PolynomialBasis::PolynomialBasis(int degree, int variables)
    : PolynomialBasis(degree, variables, VecX::Zero(variables), 1.0) {}

VecX PolynomialBasis::evaluate(const VecX& x) const {
    return derivative(x, Eigen::VectorXi::Zero(variables_));
}

VecX PolynomialBasis::derivative(const VecX& x, const Eigen::VectorXi& alpha) const {
    const VecX y = (x - center_) / scale_;
    VecX out(dimension());
    for (int i = 0; i < dimension(); ++i) {
        const auto& e = exponents_[i];
        double v = 1;
        for (int k = 0; k < variables_ && v != 0; ++k) {
            if (e[k] < alpha[k]) {
                v = 0;
                break;
            }
            v *= falling(e[k], alpha[k]) * std::pow(y[k], e[k] - alpha[k]) / std::pow(scale_, alpha[k]);
        }
        out[i] = v;
    }
    return out;
}

double WeightFunction::operator()(double r) const {
    if (r >= support) return 0;
    return std::pow(1 - r / support, exponent);
}

WeightedLeastSquares::WeightedLeastSquares(const MatX& sites, const VecX& weights, PolynomialBasis basis)
    : basis_(std::move(basis)) {
    const auto n = sites.rows();
    const int d = basis_.dimension();
    if (sites.cols() != basis_.variables()) throw Error(ErrorCode::invalid_argument, "site dimension mismatch");
    if (weights.size() != n) throw Error(ErrorCode::invalid_argument, "weight count mismatch");
    if ((weights.array() > 0).count() < d) {
        throw Error(ErrorCode::rank_deficient, std::to_string((weights.array() > 0).count()) +
                                                   " positively weighted samples for basis dimension " +
                                                   std::to_string(d));
    }
    sqrt_w_ = weights.cwiseMax(0.0).cwiseSqrt();
    design_.resize(n, d);
    for (Eigen::Index j = 0; j < n; ++j) design_.row(j) = sqrt_w_[j] * basis_.evaluate(sites.row(j).transpose());

    qr_.setThreshold(tolerance::qr_rank_threshold);
    qr_.compute(design_);
    rank_ = static_cast<int>(qr_.rank());
    const auto R = qr_.matrixR();
    condition_ = std::abs(R(0, 0) / R(d - 1, d - 1));
    if (rank_ < d) {
        svd_.compute(design_, Eigen::ComputeThinU | Eigen::ComputeThinV);
        const VecX& s = svd_.singularValues();
        const double cutoff = tolerance::svd_cutoff * s[0];
        rank_ = static_cast<int>((s.array() > cutoff).count());
        if (rank_ < d) {
            throw Error(ErrorCode::rank_deficient,
                        "rank " + std::to_string(rank_) + " < basis dimension " + std::to_string(d));
        }
        use_svd_ = true;
        condition_ = s[0] / s[d - 1];
    }
}

GMLSFit WeightedLeastSquares::fit(const VecX& values) const {
    const VecX b = sqrt_w_.cwiseProduct(values);
    GMLSFit out;
    out.coefficients = use_svd_ ? VecX(svd_.solve(b)) : VecX(qr_.solve(b));
    out.rank = rank_;
    out.condition = condition_;
    out.used_svd = use_svd_;
    const VecX normal_residual = design_.transpose() * (design_ * out.coefficients - b);
    const double scale = (design_.transpose() * b).norm();
    out.residual_norm = scale > 0 ? normal_residual.norm() / scale : normal_residual.norm();
    return out;
}

MatX WeightedLeastSquares::stencils(const MatX& targets) const {
    const int d = basis_.dimension();
    if (targets.rows() != d) throw Error(ErrorCode::invalid_argument, "target dimension mismatch");
    MatX w;
    if (use_svd_) {
        // (A⁺)ᵀ τ = U Σ⁻¹ Vᵀ τ
        const VecX inv = svd_.singularValues().head(d).cwiseInverse();
        w = svd_.matrixU().leftCols(d) * (inv.asDiagonal() * (svd_.matrixV().leftCols(d).transpose() * targets));
    } else {
        // A Π = Q R  ⇒  (A⁺)ᵀ τ = Q R⁻ᵀ Πᵀ τ
        const MatX permuted = qr_.colsPermutation().transpose() * targets;
        MatX z = MatX::Zero(design_.rows(), targets.cols());
        z.topRows(d) = qr_.matrixR().topLeftCorner(d, d).triangularView<Eigen::Upper>().transpose().solve(permuted);
        w = qr_.householderQ() * z;
    }
    return sqrt_w_.asDiagonal() * w;
}

namespace {
VecX site_weights(const MatX& sites, const WeightFunction& weight, const PolynomialBasis& basis) {
    VecX w(sites.rows());
    for (Eigen::Index j = 0; j < sites.rows(); ++j) w[j] = weight((sites.row(j).transpose() - basis.center()).norm());
    return w;
}
}  // namespace

GMLSFit fit(const MatX& sites, const VecX& values, const WeightFunction& weight, const PolynomialBasis& basis) {
    return WeightedLeastSquares(sites, site_weights(sites, weight, basis), basis).fit(values);
}

double apply_target(const GMLSFit& fit, const VecX& target) { return target.dot(fit.coefficients); }

VecX stencil_weights(const MatX& sites, const WeightFunction& weight, const PolynomialBasis& basis,
                     const VecX& target) {
    return WeightedLeastSquares(sites, site_weights(sites, weight, basis), basis).stencils(target);
}

}  // namespace surfstat
