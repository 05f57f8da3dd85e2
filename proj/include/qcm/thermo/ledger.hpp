#pragma once

#include <string>
#include <vector>

#include "qcm/sim/simulator.hpp"
#include "qcm/thermo/mean_force.hpp"

namespace qcm::thermo {

/// Stochastic quantities of one branch at one snapshot. Work and heat
/// are counted from the start time; `_alt` uses the measurement work
/// with H_S + H_A instead of H_A alone.
struct ThermoRow {
    double time = 0.0;
    sim::SnapshotKind kind = sim::SnapshotKind::report;
    std::size_t steps_done = 0;
    Record record;
    double p = 0.0;
    double u = 0.0;
    double w_s = 0.0, w_sa = 0.0, w_ai = 0.0, w_ai_alt = 0.0;
    double w = 0.0, w_alt = 0.0;
    double q = 0.0, q_alt = 0.0;
    double s = 0.0, f = 0.0;
    double sigma = 0.0;
    double e_tot = 0.0;  // <H_S + H_B + V_SB> + all ancilla energies
};

struct EnsembleRow {
    double time = 0.0;
    sim::SnapshotKind kind = sim::SnapshotKind::report;
    std::size_t steps_done = 0;
    double total_p = 0.0;
    double pruned_mass = 0.0;
    double U = 0.0, W = 0.0, W_alt = 0.0, Q = 0.0, Q_alt = 0.0, S = 0.0, F = 0.0;
    double sigma_first_law = 0.0;
    double sigma_relent = 0.0;
    double e_tot = 0.0;
    double energy_balance = 0.0;  // W - ΔE_tot
};

struct ThermoLedger {
    double beta = 0.0;
    bool second_law_applicable = false;
    std::vector<ThermoRow> rows;  // ordered as the snapshots, branches in order
    std::vector<EnsembleRow> ensemble;
    std::vector<std::string> caveats;
};

/// Problems that make thermodynamic accounting ill-defined for this
/// model and run options; empty when fine.
std::vector<std::string> thermo_preconditions(const sim::Model& model, const sim::SimOptions& opt);

/// Throws std::domain_error if the preconditions fail.
ThermoLedger build_ledger(const sim::Model& model, const sim::SimResult& res, double dbeta = 0.0);

/// Canonical vs alternative measurement work for one step.
struct ConventionCheck {
    std::size_t step = 0;
    double max_average_gap = 0.0;  // max over parents |Σ_r p(r|parent)(w_AI - w̃_AI)|
    double max_branch_gap = 0.0;   // max over children |w_AI - w̃_AI|
};
std::vector<ConventionCheck> convention_checks(const sim::SimResult& res);

struct TpmBin {
    double work = 0.0;
    double probability = 0.0;
};

/// Distribution of the alternative-convention work accumulated between
/// two snapshot times. Only defined for an isolated system; throws
/// std::domain_error when the bath is coupled.
std::vector<TpmBin> tpm_histogram(const sim::Model& model, const ThermoLedger& ledger, double t_from, double t_to,
                                  double merge_tol = 1e-9);

}  // namespace qcm::thermo
