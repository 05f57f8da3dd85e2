#pragma once

#include <string>
#include <vector>

#include "qcm/channels/process_tensor.hpp"
#include "qcm/dilation/dilation.hpp"

namespace qcm::sim {

/// One intervention: instrument plus its hardware, for a record prefix.
struct StepVariant {
    Record prefix;
    channels::Instrument instrument;
    dilation::DilationResult hardware;
    Matrix generator;  // X with exp(-iX) = U_SA, filled for finite-width controls
};

struct StepModel {
    double time = 0.0;   // t_k, when the control starts
    double width = 0.0;  // control window; 0 means an instantaneous unitary
    Matrix h_a;          // H_A(k)
    std::vector<StepVariant> variants;  // variants[0] has the empty prefix

    double outcome_time() const { return time + width; }
    std::size_t alphabet() const { return variants.front().instrument.outcomes(); }
    std::size_t ancilla_dim() const { return variants.front().hardware.ancilla_dim; }
    /// Longest prefix match on r_{k-1}.
    const StepVariant& variant(const Record& previous) const;
    bool branch_independent_ancilla() const;
};

/// The inclusive autonomous model. Registry order: S, B, P, A0.., I0.., N0...
class Model {
public:
    Model(channels::SystemBath sb, std::vector<StepModel> steps, Matrix rho_sb, double t_start, double beta = 0.0,
          bool gibbs_initial = false, double e_i = 0.0, double e_n = 0.0);

    const channels::SystemBath& sb() const { return sb_; }
    const channels::Protocol& protocol() const { return sb_.protocol(); }
    const std::vector<StepModel>& steps() const { return steps_; }
    const StepModel& step(std::size_t k) const { return steps_.at(k); }
    const dilation::MemoryLayout& memory() const { return memory_; }
    const Matrix& rho_sb() const { return rho_sb_; }
    double t_start() const { return t_start_; }
    double beta() const { return beta_; }
    bool gibbs_initial() const { return gibbs_initial_; }
    const RegistryPtr& registry() const { return registry_; }

    std::size_t index_s() const { return 0; }
    std::size_t index_b() const { return 1; }
    std::size_t index_a(std::size_t k) const { return 3 + k; }
    std::size_t index_i(std::size_t k) const { return 3 + steps_.size() + k; }
    std::size_t index_n(std::size_t k) const { return 3 + 2 * steps_.size() + k; }

    /// Equivalent direct schedule (instruments only).
    channels::InterventionSchedule schedule() const;
    bool has_finite_width() const;

private:
    channels::SystemBath sb_;
    std::vector<StepModel> steps_;
    dilation::MemoryLayout memory_;
    Matrix rho_sb_;
    double t_start_ = 0.0;
    double beta_ = 0.0;
    bool gibbs_initial_ = false;
    RegistryPtr registry_;
};

}  // namespace qcm::sim
