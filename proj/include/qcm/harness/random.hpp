#pragma once

#include <cstdint>
#include <random>
#include <vector>

#include "qcm/types.hpp"

namespace qcm::random {

using Rng = std::mt19937_64;

Matrix gaussian(std::size_t rows, std::size_t cols, Rng& rng);
/// Hermitian with entries of order `scale`.
Matrix hermitian(std::size_t d, Rng& rng, double scale = 1.0);
/// Haar-distributed unitary.
Matrix unitary(std::size_t d, Rng& rng);
/// Density matrix of the given rank (0 = full rank).
Matrix density(std::size_t d, Rng& rng, std::size_t rank = 0);
/// Random pure state vector.
Vector pure(std::size_t d, Rng& rng);
/// m Kraus operators from a random isometry C^d -> C^d ⊗ C^m.
std::vector<Matrix> kraus(std::size_t d, std::size_t m, Rng& rng);
/// Kraus operators split into `outcomes` nonempty consecutive groups.
std::vector<std::vector<Matrix>> instrument(std::size_t d, std::size_t n_kraus, std::size_t outcomes, Rng& rng);

}  // namespace qcm::random
