#pragma once

#include <span>
#include <string>
#include <vector>

#include "qcm/ops/density.hpp"
#include "qcm/types.hpp"

namespace qcm::channels {

/// Trace-preserving CP map in operator-sum form on a fixed set of factors.
class KrausChannel {
public:
    KrausChannel(std::vector<std::string> support, std::vector<Matrix> kraus, double tol = 1e-10);
    static KrausChannel identity(std::vector<std::string> support, std::size_t dim);

    const std::vector<std::string>& support() const { return support_; }
    const std::vector<Matrix>& kraus() const { return kraus_; }
    std::size_t dim() const { return static_cast<std::size_t>(kraus_.front().rows()); }

private:
    std::vector<std::string> support_;
    std::vector<Matrix> kraus_;
};

/// Outcome-labeled family of CP maps; outcome r (1-based) owns kraus(r).
class Instrument {
public:
    Instrument(std::vector<std::string> support, std::vector<std::vector<Matrix>> outcomes, double tol = 1e-10);
    /// Single-outcome instrument wrapping a channel.
    explicit Instrument(const KrausChannel& channel);

    const std::vector<std::string>& support() const { return support_; }
    std::size_t outcomes() const { return outcomes_.size(); }
    std::size_t dim() const { return dim_; }
    const std::vector<Matrix>& kraus(int r) const;
    const std::vector<std::vector<Matrix>>& all() const { return outcomes_; }

    /// Kraus operators of all outcomes in order and the outcome owning each.
    std::vector<Matrix> flattened() const;
    std::vector<int> flattened_outcomes() const;

    KrausChannel average() const;

private:
    std::vector<std::string> support_;
    std::vector<std::vector<Matrix>> outcomes_;
    std::size_t dim_ = 0;
};

/// || sum K^dag K - 1 ||_max
double completeness_residual(const std::vector<Matrix>& kraus);

/// Superoperator on row-major vec(rho): sum_a K_a ⊗ conj(K_a).
Matrix superoperator(const std::vector<Matrix>& kraus);

/// Choi matrix sum_ij |i><j| ⊗ A(|i><j|).
Matrix choi_matrix(const std::vector<Matrix>& kraus);
double choi_min_eigenvalue(const std::vector<Matrix>& kraus);

/// sum_a K_a rho K_a^dag with the K_a acting on `support` of rho.
DensityOperator apply_cp(const std::vector<Matrix>& kraus, const std::vector<std::string>& support,
                         const DensityOperator& rho, const Tolerances& tol = {});
DensityOperator apply_cp(const Instrument& inst, int r, const DensityOperator& rho, const Tolerances& tol = {});
DensityOperator apply_cp(const KrausChannel& ch, const DensityOperator& rho, const Tolerances& tol = {});

/// Same map on a bare matrix ordered (kraus factor, rest).
Matrix apply_kraus(const std::vector<Matrix>& kraus, const Matrix& rho, std::span<const std::size_t> dims,
                   std::span<const std::size_t> positions);

}  // namespace qcm::channels
