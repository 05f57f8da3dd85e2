#pragma once

#include <cstddef>
#include <limits>
#include <span>
#include <vector>

#include "qcm/ops/density.hpp"
#include "qcm/sim/model.hpp"
#include "qcm/tolerances.hpp"

namespace qcm::sim {

struct SimOptions {
    /// Keep measured ancillas in the branch states (needed for entropies).
    bool keep_spent_ancillas = true;
    /// Record reduced ancilla states and measurement work per branch.
    bool thermo = true;
    /// Materialize I(k) and N(k) around each measurement to check the
    /// dephasing step, for parent branches up to `memory_check_dim`.
    bool check_memory = false;
    std::size_t memory_check_dim = 1024;
    std::size_t max_branches = std::numeric_limits<std::size_t>::max();
    Tolerances tol;
};

struct Accumulators {
    double w_s = 0.0;       // protocol switches
    double w_sa = 0.0;      // controls
    double w_ai = 0.0;      // measurements, ancilla energy only
    double w_ai_alt = 0.0;  // measurements, system and ancilla energy
};

struct Branch {
    Record record;
    double weight = 1.0;
    Matrix state;  // unnormalized, on the ledger support, trace = weight
    Accumulators acc;
};

struct BranchLedger {
    Support support;                    // S, B and the ancillas held
    std::vector<std::size_t> ancillas;  // steps whose ancilla is held, ascending
    std::vector<Branch> branches;
    double pruned_mass = 0.0;

    double total_weight() const;
    std::vector<std::size_t> dims(const FactorRegistry& reg) const { return support.dims(reg); }
};

struct ControlRecord {
    Record record;  // r_{k-1}
    double work = 0.0;
};

struct MeasurementRecord {
    Record record;  // r_k
    double p_conditional = 0.0;
    double w_ai = 0.0;
    double w_ai_alt = 0.0;
    Matrix rho_a_pre, rho_a_post;
};

struct MemoryCheck {
    Record record;                // r_{k-1}
    double cat_coherence = 0.0;   // off-diagonal IDF blocks before dephasing
    double offdiag = 0.0;         // the same after dephasing
    double block_error = 0.0;     // diagonal blocks against P rho P
    double energy_cost = 0.0;     // tr{(H_I + H_N)(U rho U^dag - rho)}
};

struct StepTrace {
    std::size_t step = 0;
    std::vector<ControlRecord> controls;
    std::vector<MeasurementRecord> measurements;
    std::vector<MemoryCheck> memory;
    double pruned_mass = 0.0;
};

struct SwitchEvent {
    double time = 0.0;
    Record record;
    int h_old = 0, h_new = 0;
    double work = 0.0;  // per unit weight
    double weight = 0.0;
};

struct BranchSnapshot {
    Record record;
    double weight = 0.0;
    Matrix rho_sb;                      // normalized
    Matrix rho_sa;                      // normalized, S ⊗ held ancillas
    std::vector<std::size_t> ancillas;  // steps of the ancillas in rho_sa
    int h = 0;                          // Hamiltonian in force
    double e_sb = 0.0;                  // <H_S + H_B + V_SB>
    Accumulators acc;
};

enum class SnapshotKind { initial, before_first_step, report };

struct Snapshot {
    double time = 0.0;
    SnapshotKind kind = SnapshotKind::report;
    std::size_t steps_done = 0;
    double pruned_mass = 0.0;
    std::vector<BranchSnapshot> branches;
};

struct SimResult {
    std::vector<Snapshot> snapshots;
    std::vector<StepTrace> steps;
    std::vector<SwitchEvent> switches;
    double pruned_mass = 0.0;
};

class PropagatorCache;

BranchLedger initial_ledger(const Model& model);

/// Preparation, control, measurement (with dephasing) of step k, then
/// the protocol switch at the outcome time. Ledger goes from just before
/// t_k to just after the outcome time.
std::pair<BranchLedger, StepTrace> apply_intervention(const Model& model, const BranchLedger& ledger, std::size_t k,
                                                      const SimOptions& opt, std::vector<SwitchEvent>* switches = nullptr);

/// Free evolution from ta to tb with protocol switches. Snapshots are
/// taken at the given times in (ta, tb), and at tb when `include_end`.
BranchLedger evolve_ledger(const Model& model, const BranchLedger& ledger, double ta, double tb,
                           std::span<const double> report_times, bool include_end, std::size_t steps_done,
                           std::vector<Snapshot>* snapshots, std::vector<SwitchEvent>* switches);

/// Intervention k followed by evolution to the next step time (or to t_end).
std::pair<BranchLedger, StepTrace> run_step(const Model& model, const BranchLedger& ledger, std::size_t k,
                                            const SimOptions& opt, double t_end);

/// Whole run with snapshots at the report times. A report time equal to
/// an outcome time gives the post-intervention state.
SimResult simulate(const Model& model, std::span<const double> report_times, const SimOptions& opt = {});

/// Normalized conditional state of r and its weight. Throws
/// std::domain_error for an absent (pruned or impossible) record.
std::pair<DensityOperator, double> condition(const Model& model, const BranchLedger& ledger, const Record& r);

/// Branch snapshot of a ledger entry.
BranchSnapshot snapshot_branch(const Model& model, const BranchLedger& ledger, const Branch& b, int h);

/// (L ⊗ 1) rho (L ⊗ 1)^dag, no time elapsing.
Matrix apply_instantaneous_control(const Matrix& rho, std::span<const std::size_t> dims,
                                   std::span<const std::size_t> positions, const Matrix& u);

}  // namespace qcm::sim
