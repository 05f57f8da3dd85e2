#pragma once

// Index kernels on matrices over a tensor product of factors with
// dimensions `dims` (factor 0 most significant, row-major multi-index).
// `positions` are sorted factor positions within `dims`.
//
// The default namespace holds the OpenMP-parallel kernels used by the
// library. qcm::kernels::serial holds straightforward reference versions
// kept for testing and benchmarking; they share no index tables with the
// parallel ones.

#include <cstddef>
#include <span>
#include <vector>

#include "qcm/types.hpp"

namespace qcm::kernels {

/// Splits a full multi-index into the digits at `positions` (sub) and the
/// remaining digits (rest), both in factor order.
class FactorLayout {
public:
    FactorLayout(std::span<const std::size_t> dims, std::span<const std::size_t> positions);

    std::size_t full_dim() const { return full_dim_; }
    std::size_t sub_dim() const { return sub_dim_; }
    std::size_t rest_dim() const { return rest_dim_; }
    std::size_t sub_of(std::size_t full) const { return sub_of_[full]; }
    std::size_t rest_of(std::size_t full) const { return rest_of_[full]; }
    std::size_t join(std::size_t sub, std::size_t rest) const { return join_[sub * rest_dim_ + rest]; }

private:
    std::size_t full_dim_ = 1, sub_dim_ = 1, rest_dim_ = 1;
    std::vector<std::size_t> sub_of_, rest_of_, join_;
};

Matrix kron(const Matrix& a, const Matrix& b);

/// Trace out every factor not listed in `keep`.
Matrix partial_trace(const Matrix& m, std::span<const std::size_t> dims, std::span<const std::size_t> keep);

/// Reorder factors: factor j of the result is factor order[j] of the input.
Matrix permute(const Matrix& m, std::span<const std::size_t> dims, std::span<const std::size_t> order);

/// op (acting on the factors at `positions`) tensored with identity elsewhere.
Matrix embed(const Matrix& op, std::span<const std::size_t> dims, std::span<const std::size_t> positions);

/// (L ⊗ 1) rho (R ⊗ 1)^dagger with L, R acting on `positions`.
Matrix sandwich(const Matrix& rho, std::span<const std::size_t> dims, std::span<const std::size_t> positions,
                const Matrix& left, const Matrix& right);

/// (L ⊗ 1) m
Matrix apply_left(const Matrix& m, std::span<const std::size_t> dims, std::span<const std::size_t> positions,
                  const Matrix& left);

namespace serial {

Matrix partial_trace(const Matrix& m, std::span<const std::size_t> dims, std::span<const std::size_t> keep);
Matrix permute(const Matrix& m, std::span<const std::size_t> dims, std::span<const std::size_t> order);
Matrix embed(const Matrix& op, std::span<const std::size_t> dims, std::span<const std::size_t> positions);
Matrix sandwich(const Matrix& rho, std::span<const std::size_t> dims, std::span<const std::size_t> positions,
                const Matrix& left, const Matrix& right);

}  // namespace serial

}  // namespace qcm::kernels
