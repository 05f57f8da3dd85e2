#include "qcm/ops/linalg.hpp"

#include <cmath>
#include <stdexcept>
#include <string>

#include <Eigen/Eigenvalues>

namespace qcm {

Spectrum eigh(const Matrix& h, double tol) {
    if (h.rows() != h.cols()) throw std::invalid_argument("eigh: matrix is not square");
    const double r = hermiticity_residual(h);
    if (r > tol) throw std::invalid_argument("eigh: matrix is not Hermitian (residual " + std::to_string(r) + ")");
    const Eigen::MatrixXcd sym = 0.5 * (h + h.adjoint());
    Eigen::SelfAdjointEigenSolver<Eigen::MatrixXcd> solver(sym);
    if (solver.info() != Eigen::Success) throw std::runtime_error("eigh: eigensolver did not converge");
    return {solver.eigenvalues(), solver.eigenvectors()};
}

Matrix spectral_function(const Spectrum& s, const std::function<cplx(double)>& f) {
    const auto n = s.values.size();
    Vector fv(n);
    for (Eigen::Index i = 0; i < n; ++i) fv(i) = f(s.values(i));
    return s.vectors * fv.asDiagonal() * s.vectors.adjoint();
}

Matrix herm_exp(const Matrix& h, cplx scale) {
    return spectral_function(eigh(h), [scale](double x) { return std::exp(scale * x); });
}

Operator herm_exp(const Operator& h, cplx scale) {
    return {h.registry(), h.support(), herm_exp(h.matrix(), scale)};
}

Matrix herm_log(const Matrix& m) {
    const auto s = eigh(m, 1e-10 * std::max(1.0, max_norm(m)));
    if (s.values.size() > 0 && s.values.minCoeff() <= 0.0)
        throw std::domain_error("herm_log: matrix is not positive definite");
    return spectral_function(s, [](double x) { return cplx(std::log(x), 0.0); });
}

Matrix unitary_generator(const Matrix& u) {
    const Eigen::MatrixXcd cm = u;
    Eigen::ComplexSchur<Eigen::MatrixXcd> schur(cm);
    if (schur.info() != Eigen::Success) throw std::runtime_error("unitary_generator: Schur did not converge");
    const auto& t = schur.matrixT();
    const auto& q = schur.matrixU();
    Vector phases(t.rows());
    for (Eigen::Index i = 0; i < t.rows(); ++i) phases(i) = -std::arg(t(i, i));
    Matrix x = q * phases.asDiagonal() * q.adjoint();
    return 0.5 * (x + x.adjoint());
}

double unitarity_residual(const Matrix& u) {
    if (u.rows() != u.cols()) return std::numeric_limits<double>::infinity();
    return max_norm(u.adjoint() * u - Matrix::Identity(u.rows(), u.cols()));
}

Matrix propagator(const Matrix& h, double dt) {
    if (dt == 0.0) return Matrix::Identity(h.rows(), h.cols());
    return herm_exp(h, cplx(0.0, -dt));
}

}  // namespace qcm
