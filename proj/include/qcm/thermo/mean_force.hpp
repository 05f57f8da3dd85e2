#pragma once

#include <cstddef>

#include "qcm/types.hpp"

namespace qcm::thermo {

struct MeanForceData {
    Matrix h_star;        // H*_X
    Matrix dbeta_h_star;  // ∂_β H*_X
    double log_z_star = 0.0;  // ln Z_XB - ln Z_B
    double z_star = 0.0;
    double beta = 0.0;
};

/// H*_X = -(1/β) ln(tr_B e^{-βH_XB} / Z_B) for X ⊗ B (X first). `h_b` is the
/// bare bath Hamiltonian. dbeta <= 0 selects 1e-4·β; the β-derivative is a
/// central difference with one Richardson step.
MeanForceData mean_force_hamiltonian(const Matrix& h_xb, const Matrix& h_b, std::size_t dim_x, double beta,
                                     double dbeta = 0.0);

/// H*_X alone at one β.
Matrix mean_force_only(const Matrix& h_xb, const Matrix& h_b, std::size_t dim_x, double beta);

/// tr{(H* + β ∂_β H*) ρ_X}
double internal_energy(const Matrix& rho_x, const MeanForceData& mfd);

}  // namespace qcm::thermo
