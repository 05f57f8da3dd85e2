#pragma once

#include <cstdint>

#include "qcm/harness/scenario.hpp"
#include "qcm/sim/model.hpp"
#include "qcm/tolerances.hpp"

namespace qcm::harness {

struct BuildOptions {
    Tolerances tol;
    /// Accept broken instruments and dilations (they are reported by checks).
    bool lenient = false;
};

/// Defaults overridden by the scenario's own tolerance table.
Tolerances scenario_tolerances(const ScenarioFile& s, Tolerances base = {});

/// Throws ScenarioError for inconsistent input (including a non-Gibbs
/// S⊗B start with second-law checks on and beta > 0).
sim::Model build_model(const ScenarioFile& s, const BuildOptions& opt = {});

struct RandomScenarioOptions {
    std::size_t max_system_qubits = 2;
    std::size_t max_bath_qubits = 2;
    std::size_t max_steps = 3;
    bool feedback = true;
    double coupling = 0.5;
};

/// Gibbs-initialized random scenario (instantaneous controls only).
ScenarioFile random_scenario(std::uint64_t seed, const RandomScenarioOptions& opt = {});

}  // namespace qcm::harness
