#pragma once

#include <memory>
#include <string>
#include <vector>

#include "qcm/ops/registry.hpp"
#include "qcm/types.hpp"

namespace qcm {

/// Dense operator on a subset of the factors of one registry. The matrix
/// is ordered by the registry's factor order restricted to the support.
class Operator {
public:
    Operator() = default;
    Operator(RegistryPtr registry, Support support, Matrix matrix);
    Operator(RegistryPtr registry, const std::vector<std::string>& labels, Matrix matrix);

    static Operator identity(RegistryPtr registry, Support support);
    static Operator zero(RegistryPtr registry, Support support);
    /// Construct and verify Hermiticity (max-norm residual <= tol).
    static Operator hermitian(RegistryPtr registry, Support support, Matrix matrix, double tol = 1e-12);

    const RegistryPtr& registry() const { return registry_; }
    const Support& support() const { return support_; }
    const Matrix& matrix() const { return matrix_; }
    Matrix& matrix() { return matrix_; }
    std::size_t dim() const { return static_cast<std::size_t>(matrix_.rows()); }
    bool valid() const { return registry_ != nullptr; }

    bool is_hermitian(double tol = 1e-12) const { return hermiticity_residual(matrix_) <= tol; }
    cplx trace() const { return matrix_.trace(); }
    Operator adjoint() const { return {registry_, support_, matrix_.adjoint()}; }

    /// This operator tensored with identity on target \ support.
    Operator embed(const Support& target) const;
    /// Partial trace down to `keep` (must be a subset of the support).
    Operator partial_trace(const Support& keep) const;
    Operator partial_trace(const std::vector<std::string>& keep_labels) const;
    /// Trace out the listed factors.
    Operator trace_out(const Support& factors) const;

    /// L ρ R^dagger where L, R act on a subset of this support.
    Operator sandwich(const Operator& left, const Operator& right) const;
    /// U ρ U^dagger
    Operator conjugate(const Operator& u) const { return sandwich(u, u); }

    /// tr{A ρ} with A on any subset of this support (embedded as needed).
    cplx expectation(const Operator& observable) const;

    Operator& operator+=(const Operator& other);
    Operator& operator-=(const Operator& other);
    Operator& operator*=(cplx s);

    friend Operator operator+(Operator a, const Operator& b) { return a += b; }
    friend Operator operator-(Operator a, const Operator& b) { return a -= b; }
    friend Operator operator*(Operator a, cplx s) { return a *= s; }
    friend Operator operator*(cplx s, Operator a) { return a *= s; }
    /// Operator product after embedding both factors into the union support.
    friend Operator operator*(const Operator& a, const Operator& b);

private:
    void check_same_registry(const Operator& other) const;

    RegistryPtr registry_;
    Support support_;
    Matrix matrix_;
};

/// Kronecker composition of operators with disjoint supports; the result
/// is ordered by the registry.
Operator tensor(const Operator& a, const Operator& b);

double max_norm(const Operator& a);

}  // namespace qcm
