#pragma once

#include <vector>

#include "qcm/channels/kraus.hpp"
#include "qcm/tolerances.hpp"
#include "qcm/types.hpp"

namespace qcm::dilation {

/// Stinespring realization on S ⊗ A (S most significant).
struct DilationResult {
    std::size_t system_dim = 0;
    std::size_t ancilla_dim = 0;
    Matrix ancilla_state;
    Matrix unitary;
    /// P(r) on A for r = 1..d; empty for a bare channel.
    std::vector<Matrix> projectors;
};

/// Isometry V[(s, a), s'] = K_a[s, s'].
Matrix stinespring_isometry(const std::vector<Matrix>& kraus);

/// Minimal dilation, ancilla in basis state 0. `complement` (optional,
/// unitary of size d_s(d_anc - 1)) rotates the free completion block.
DilationResult dilate_channel(const channels::KrausChannel& ch, const Matrix& complement = {});

/// Kraus indices grouped by outcome; ancilla_dim = 0 means minimal. A
/// larger ancilla pads the last outcome with zero Kraus operators.
DilationResult dilate_instrument(const channels::Instrument& inst, std::size_t ancilla_dim = 0,
                                 const Matrix& complement = {});

/// Validates an explicitly given dilation.
DilationResult make_dilation(std::size_t system_dim, Matrix ancilla_state, Matrix unitary,
                             std::vector<Matrix> projectors, const Tolerances& tol = {});

/// max(||sum P - 1||, ||P_r P_s - δ_rs P_r||)
double projector_residual(const std::vector<Matrix>& projectors);

/// tr_A{P(r) U (rho ⊗ rho_A) U^dag}
Matrix dilated_action(const DilationResult& d, int r, const Matrix& rho);

/// Kraus form of the dilation's instrument.
channels::Instrument reconstruct_instrument(const DilationResult& d, const Tolerances& tol = {});

/// Largest deviation between the instrument and the dilation over the
/// matrix-unit basis of S.
double reconstruction_error(const channels::Instrument& inst, const DilationResult& d);

/// U_AI on A ⊗ I: sum_r P(r) ⊗ (|i> -> |i + r mod d>), r counted from 0.
Matrix measurement_unitary(const std::vector<Matrix>& projectors, std::size_t d);

/// U_IN on I ⊗ N: sum_r |r><r| ⊗ (|i> -> |i + r + 1 mod d>).
Matrix dephasing_unitary(std::size_t d);

/// sum_r |r><r| rho |r><r|
Matrix dephase(const Matrix& rho);

/// Memory registers of each step: IDF I(k) starts in |0>, NIDF N(k) is
/// maximally mixed; both carry degenerate energies.
class MemoryLayout {
public:
    MemoryLayout() = default;
    MemoryLayout(std::vector<std::size_t> alphabets, double e_i = 0.0, double e_n = 0.0);

    std::size_t steps() const { return dims_.size(); }
    std::size_t dim(std::size_t k) const { return dims_.at(k); }
    Matrix idf_initial(std::size_t k) const;
    Matrix nidf_initial(std::size_t k) const;
    Matrix h_i(std::size_t k) const;
    Matrix h_n(std::size_t k) const;

private:
    std::vector<std::size_t> dims_;
    double e_i_ = 0.0, e_n_ = 0.0;
};

}  // namespace qcm::dilation
