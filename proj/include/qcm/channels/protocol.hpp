#pragma once

#include <vector>

#include "qcm/types.hpp"

namespace qcm::channels {

/// H_S = hamiltonian(id) from `start` until the next segment starts.
struct Segment {
    double start = 0.0;
    int hamiltonian = 0;
};

/// Replacement schedule for records starting with `prefix`. Active once
/// the last outcome of the prefix is known.
struct ProtocolOverride {
    Record prefix;
    std::vector<Segment> segments;
};

/// Piecewise-constant system Hamiltonian with record-dependent variants.
/// Matching is longest prefix first; the earliest base segment extends
/// backwards in time. Queries distinguish the Hamiltonian in force just
/// before and just after a time so that a switch exactly at an outcome
/// time acts after the outcome is known.
class Protocol {
public:
    Protocol() = default;
    /// `outcome_times[k]` is when r_k becomes available.
    Protocol(std::vector<Matrix> hamiltonians, std::vector<Segment> base, std::vector<ProtocolOverride> overrides = {},
             std::vector<double> outcome_times = {});

    const Matrix& hamiltonian(int id) const { return hamiltonians_.at(static_cast<std::size_t>(id)); }
    std::size_t hamiltonian_count() const { return hamiltonians_.size(); }
    std::size_t dim() const { return hamiltonians_.empty() ? 0 : static_cast<std::size_t>(hamiltonians_[0].rows()); }
    const std::vector<Segment>& base() const { return base_; }
    const std::vector<ProtocolOverride>& overrides() const { return overrides_; }
    const std::vector<double>& outcome_times() const { return outcome_times_; }

    int after(double t, const Record& record) const { return select(t, record, false); }
    int before(double t, const Record& record) const { return select(t, record, true); }

    /// Sorted times in (ta, tb) at which the Hamiltonian seen by `record` changes.
    std::vector<double> switch_times(double ta, double tb, const Record& record) const;

    /// Every time at which some variant could switch.
    std::vector<double> candidate_times() const;

private:
    int select(double t, const Record& record, bool left) const;

    std::vector<Matrix> hamiltonians_;
    std::vector<Segment> base_;
    std::vector<ProtocolOverride> overrides_;
    std::vector<double> outcome_times_;
};

}  // namespace qcm::channels
