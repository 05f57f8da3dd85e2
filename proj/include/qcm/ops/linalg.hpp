#pragma once

#include <functional>
#include <utility>

#include "qcm/ops/operator.hpp"
#include "qcm/types.hpp"

namespace qcm {

/// Eigen-decomposition of a Hermitian matrix, ascending eigenvalues.
struct Spectrum {
    RealVector values;
    Matrix vectors;  // columns are eigenvectors
};

/// Throws std::invalid_argument if `h` is not Hermitian to `tol`.
Spectrum eigh(const Matrix& h, double tol = 1e-12);

/// V f(Λ) V^dagger
Matrix spectral_function(const Spectrum& s, const std::function<cplx(double)>& f);

/// exp(scale · h) through the spectral decomposition of h. Unitary
/// whenever scale is purely imaginary.
Matrix herm_exp(const Matrix& h, cplx scale);
Operator herm_exp(const Operator& h, cplx scale);

/// Logarithm of a positive-definite Hermitian matrix.
Matrix herm_log(const Matrix& m);

/// Hermitian X with exp(-i X) = U, eigenphases in (-pi, pi].
Matrix unitary_generator(const Matrix& u);

double unitarity_residual(const Matrix& u);

/// Unitary exp(-i h dt).
Matrix propagator(const Matrix& h, double dt);

}  // namespace qcm
