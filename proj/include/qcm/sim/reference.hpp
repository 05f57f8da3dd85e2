#pragma once

#include <span>
#include <vector>

#include "qcm/ops/operator.hpp"
#include "qcm/sim/model.hpp"

namespace qcm::sim {

/// Literal construction on S ⊗ B ⊗ A* ⊗ I* ⊗ N* with record-conditioned
/// unitaries and no branch bookkeeping. Exponential in the number of
/// steps; meant for small models only.
struct ReferenceRun {
    Support support;
    std::vector<double> times;
    std::vector<std::size_t> steps_done;
    std::vector<Operator> states;
};

ReferenceRun materialized_run(const Model& model, std::span<const double> times, std::size_t max_dim = 4096);

/// Projector onto the IDF record r (length <= steps) on the full support.
Operator record_projector(const Model& model, const Support& full, const Record& r);

/// H_XB at time t once `steps_done` outcomes are stored: record-resolved
/// H_SB plus all ancilla and memory Hamiltonians, without the NIDF.
Operator reference_hamiltonian(const Model& model, const Support& full, double t, std::size_t steps_done);

}  // namespace qcm::sim
