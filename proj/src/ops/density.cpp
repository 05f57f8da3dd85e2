#include "qcm/ops/density.hpp"

#include <cmath>
#include <limits>
#include <stdexcept>
#include <string>

#include "qcm/ops/linalg.hpp"

namespace qcm {

namespace {

void validate_state(const Operator& op, const Tolerances& tol) {
    const double r = hermiticity_residual(op.matrix());
    if (r > tol.hermitian) throw std::invalid_argument("density operator is not Hermitian (residual " + std::to_string(r) + ")");
    const auto s = eigh(op.matrix(), tol.hermitian);
    if (s.values.size() > 0 && s.values.minCoeff() < -tol.psd)
        throw std::invalid_argument("density operator has negative eigenvalue " + std::to_string(s.values.minCoeff()));
}

}  // namespace

DensityOperator DensityOperator::normalized(Operator op, const Tolerances& tol) {
    validate_state(op, tol);
    const double tr = op.trace().real();
    if (std::abs(tr - 1.0) > tol.probability)
        throw std::invalid_argument("normalized density operator has trace " + std::to_string(tr));
    return {std::move(op), 1.0, true};
}

DensityOperator DensityOperator::unnormalized(Operator op, const Tolerances& tol) {
    validate_state(op, tol);
    const double tr = op.trace().real();
    if (tr < -tol.probability || tr > 1.0 + tol.probability)
        throw std::invalid_argument("conditional state weight " + std::to_string(tr) + " outside [0, 1]");
    return {std::move(op), tr, false};
}

DensityOperator DensityOperator::normalize() const {
    if (weight_ <= 0.0) throw std::domain_error("cannot normalize a zero-probability state");
    return {op_ * cplx(1.0 / weight_), 1.0, true};
}

DensityOperator partial_trace(const DensityOperator& rho, const Support& keep) {
    Operator reduced = rho.op().partial_trace(keep);
    if (rho.is_normalized()) return DensityOperator::normalized(std::move(reduced));
    return DensityOperator::unnormalized(std::move(reduced));
}

double von_neumann_entropy(const Matrix& rho, double clip, double psd_tol) {
    const auto s = eigh(rho, 1e-10);
    double h = 0.0;
    for (Eigen::Index i = 0; i < s.values.size(); ++i) {
        const double p = s.values(i);
        if (p < -psd_tol) throw std::domain_error("von_neumann_entropy: negative eigenvalue " + std::to_string(p));
        if (p > clip) h -= p * std::log(p);
    }
    return h;
}

double von_neumann_entropy(const DensityOperator& rho, const Tolerances& tol) {
    return von_neumann_entropy(rho.matrix(), tol.eigen_clip, tol.psd);
}

double relative_entropy(const Matrix& rho, const Matrix& sigma, double clip, double support_tol) {
    if (rho.rows() != sigma.rows()) throw std::invalid_argument("relative_entropy: dimension mismatch");
    const auto a = eigh(rho, 1e-10);
    const auto b = eigh(sigma, 1e-10);
    // overlap(i, j) = |<a_i|b_j>|^2
    const Eigen::MatrixXd overlap = (a.vectors.adjoint() * b.vectors).cwiseAbs2();
    double d = 0.0;
    for (Eigen::Index i = 0; i < a.values.size(); ++i) {
        const double p = a.values(i);
        if (p > clip) d += p * std::log(p);
    }
    for (Eigen::Index j = 0; j < b.values.size(); ++j) {
        double mass = 0.0;
        for (Eigen::Index i = 0; i < a.values.size(); ++i)
            if (a.values(i) > clip) mass += a.values(i) * overlap(i, j);
        const double q = b.values(j);
        if (q <= clip) {
            if (mass > support_tol) return std::numeric_limits<double>::infinity();
            continue;
        }
        d -= mass * std::log(q);
    }
    return d;
}

double relative_entropy(const DensityOperator& rho, const DensityOperator& sigma, const Tolerances& tol) {
    return relative_entropy(rho.matrix(), sigma.matrix(), tol.eigen_clip);
}

double log_partition(const Matrix& h, double beta) {
    if (!(beta > 0.0)) throw std::invalid_argument("inverse temperature must be positive");
    const auto s = eigh(h);
    const double e0 = s.values.minCoeff();
    double z = 0.0;
    for (Eigen::Index i = 0; i < s.values.size(); ++i) z += std::exp(-beta * (s.values(i) - e0));
    return std::log(z) - beta * e0;
}

GibbsState gibbs_state(const Operator& h, double beta) {
    if (!(beta > 0.0)) throw std::invalid_argument("inverse temperature must be positive");
    const auto s = eigh(h.matrix());
    const double e0 = s.values.minCoeff();
    double z_shifted = 0.0;
    for (Eigen::Index i = 0; i < s.values.size(); ++i) z_shifted += std::exp(-beta * (s.values(i) - e0));
    Matrix m = spectral_function(s, [&](double x) { return cplx(std::exp(-beta * (x - e0)) / z_shifted, 0.0); });
    m = 0.5 * (m + m.adjoint());
    const double log_z = std::log(z_shifted) - beta * e0;
    Operator op(h.registry(), h.support(), std::move(m));
    return {DensityOperator::normalized(std::move(op)), std::exp(log_z), log_z};
}

}  // namespace qcm
