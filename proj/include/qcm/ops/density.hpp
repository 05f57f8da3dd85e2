#pragma once

#include <limits>
#include <utility>

#include "qcm/ops/operator.hpp"
#include "qcm/tolerances.hpp"

namespace qcm {

/// Positive semidefinite operator with trace 1 (normalized) or trace
/// p in [0, 1] (unnormalized conditional state with weight p).
class DensityOperator {
public:
    static DensityOperator normalized(Operator op, const Tolerances& tol = {});
    static DensityOperator unnormalized(Operator op, const Tolerances& tol = {});

    const Operator& op() const { return op_; }
    const Matrix& matrix() const { return op_.matrix(); }
    const Support& support() const { return op_.support(); }
    const RegistryPtr& registry() const { return op_.registry(); }
    double weight() const { return weight_; }
    bool is_normalized() const { return normalized_; }

    /// ρ/p. Throws std::domain_error for a zero-weight state.
    DensityOperator normalize() const;

private:
    DensityOperator(Operator op, double weight, bool normalized)
        : op_(std::move(op)), weight_(weight), normalized_(normalized) {}

    Operator op_;
    double weight_ = 1.0;
    bool normalized_ = true;
};

/// Partial trace preserving normalization kind and weight.
DensityOperator partial_trace(const DensityOperator& rho, const Support& keep);

/// -tr{ρ ln ρ} in nats, with 0 ln 0 = 0 for eigenvalues below `clip`.
/// Throws std::domain_error for an eigenvalue below -psd_tol.
double von_neumann_entropy(const Matrix& rho, double clip = 1e-14, double psd_tol = 1e-10);
double von_neumann_entropy(const DensityOperator& rho, const Tolerances& tol = {});

/// tr{ρ(ln ρ - ln σ)}. Returns +infinity when supp ρ is not inside supp σ.
double relative_entropy(const Matrix& rho, const Matrix& sigma, double clip = 1e-14, double support_tol = 1e-12);
double relative_entropy(const DensityOperator& rho, const DensityOperator& sigma, const Tolerances& tol = {});

inline bool is_infinite_divergence(double d) { return d == std::numeric_limits<double>::infinity(); }

struct GibbsState {
    DensityOperator state;
    double partition_function;
    double log_partition_function;  // finite even when Z overflows
};

/// e^{-β h}/Z. Throws std::invalid_argument for beta <= 0.
GibbsState gibbs_state(const Operator& h, double beta);
/// ln tr e^{-β h}, computed with an energy shift.
double log_partition(const Matrix& h, double beta);

}  // namespace qcm
