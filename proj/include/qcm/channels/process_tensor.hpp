#pragma once

#include <span>
#include <vector>

#include "qcm/channels/kraus.hpp"
#include "qcm/channels/protocol.hpp"
#include "qcm/ops/density.hpp"

namespace qcm::channels {

/// System S driven by the protocol, coupled to a finite bath B.
/// H_SB(id) = H_S(id) ⊗ 1 + 1 ⊗ H_B + V_SB on S ⊗ B.
class SystemBath {
public:
    SystemBath(Matrix h_b, Matrix v_sb, Protocol protocol);

    std::size_t dim_s() const { return dim_s_; }
    std::size_t dim_b() const { return dim_b_; }
    const Matrix& h_b() const { return h_b_; }
    const Matrix& v_sb() const { return v_sb_; }
    const Protocol& protocol() const { return protocol_; }
    const RegistryPtr& registry() const { return registry_; }

    Matrix h_s_embedded(int id) const;
    Matrix h_b_embedded() const;
    Matrix hamiltonian(int id) const;

    /// Unitary evolution of an S⊗B matrix from ta to tb for a fixed record.
    Matrix evolve(const Matrix& rho, double ta, double tb, const Record& record) const;
    Matrix propagator(double ta, double tb, const Record& record) const;

private:
    std::size_t dim_s_, dim_b_;
    Matrix h_b_, v_sb_;
    Protocol protocol_;
    RegistryPtr registry_;
};

struct Intervention {
    double time = 0.0;
    Instrument instrument;
    /// Variants keyed by a prefix of the record obtained before this step.
    std::vector<std::pair<Record, Instrument>> feedback;
};

class InterventionSchedule {
public:
    InterventionSchedule() = default;
    explicit InterventionSchedule(std::vector<Intervention> steps);

    std::size_t size() const { return steps_.size(); }
    const Intervention& step(std::size_t k) const { return steps_.at(k); }
    std::vector<double> times() const;
    std::size_t alphabet(std::size_t k) const { return steps_.at(k).instrument.outcomes(); }

    /// Instrument used at step k given r_{k-1} (longest matching prefix).
    const Instrument& instrument(std::size_t k, const Record& previous) const;

    /// All records of length n over the step alphabets, lexicographic.
    std::vector<Record> records(std::size_t n) const;

private:
    std::vector<Intervention> steps_;
};

/// tr_B{U(t, t_n) A_n(r_n) ... U(t_1, t_0) A_0(r_0) U(t_0, t_start) rho_SB}.
/// Records shorter than the schedule are allowed when t lies before the
/// next step. Returns the unnormalized S⊗B state; its trace is p(r).
DensityOperator evaluate_process_tensor_sb(const SystemBath& sb, const InterventionSchedule& schedule,
                                           const Record& record, const DensityOperator& rho_init, double t_start,
                                           double t, const Tolerances& tol = {});
/// Unnormalized system state of the record.
DensityOperator evaluate_process_tensor(const SystemBath& sb, const InterventionSchedule& schedule,
                                        const Record& record, const DensityOperator& rho_init, double t_start, double t,
                                        const Tolerances& tol = {});

/// Same evaluation with one explicit CP map per slot (Kraus lists on S).
/// `record` only selects protocol variants.
Matrix evaluate_sequence(const SystemBath& sb, std::span<const double> times, const std::vector<std::vector<Matrix>>& maps,
                         const Record& record, const Matrix& rho_init, double t_start, double t);

struct MultilinearityReport {
    bool passed = true;
    double max_deviation = 0.0;
    std::size_t worst_slot = 0;
};

/// Per slot k: T[.., αA_k + (1-α)A'_k, ..] against αT[.., A_k, ..] + (1-α)T[.., A'_k, ..]
/// with the other slots taken from `ops`.
MultilinearityReport multilinearity_check(const SystemBath& sb, std::span<const double> times,
                                          const std::vector<std::vector<Matrix>>& ops,
                                          const std::vector<std::vector<Matrix>>& ops_alt, double alpha,
                                          const Record& record, const Matrix& rho_init, double t_start, double t,
                                          double tol = 1e-10);

}  // namespace qcm::channels
