#include "qcm/channels/protocol.hpp"

#include <algorithm>
#include <stdexcept>
#include <string>

namespace qcm::channels {

namespace {

void check_segments(const std::vector<Segment>& segs, std::size_t n_hamiltonians, const char* what) {
    if (segs.empty()) throw std::invalid_argument(std::string(what) + ": no segments");
    for (std::size_t i = 0; i < segs.size(); ++i) {
        if (segs[i].hamiltonian < 0 || static_cast<std::size_t>(segs[i].hamiltonian) >= n_hamiltonians)
            throw std::invalid_argument(std::string(what) + ": unknown Hamiltonian index " +
                                        std::to_string(segs[i].hamiltonian));
        if (i > 0 && !(segs[i].start > segs[i - 1].start))
            throw std::invalid_argument(std::string(what) + ": segment starts must increase");
    }
}

// last segment with start < t (left) or start <= t (right), or nullptr
const Segment* segment_at(const std::vector<Segment>& segs, double t, bool left) {
    const Segment* hit = nullptr;
    for (const auto& s : segs) {
        if (left ? s.start < t : s.start <= t)
            hit = &s;
        else
            break;
    }
    return hit;
}

}  // namespace

Protocol::Protocol(std::vector<Matrix> hamiltonians, std::vector<Segment> base, std::vector<ProtocolOverride> overrides,
                   std::vector<double> outcome_times)
    : hamiltonians_(std::move(hamiltonians)),
      base_(std::move(base)),
      overrides_(std::move(overrides)),
      outcome_times_(std::move(outcome_times)) {
    if (hamiltonians_.empty()) throw std::invalid_argument("protocol: no Hamiltonians");
    const auto d = hamiltonians_[0].rows();
    for (const auto& h : hamiltonians_) {
        if (h.rows() != d || h.cols() != d) throw std::invalid_argument("protocol: Hamiltonians differ in dimension");
        if (hermiticity_residual(h) > 1e-12) throw std::invalid_argument("protocol: Hamiltonian is not Hermitian");
    }
    check_segments(base_, hamiltonians_.size(), "protocol");
    for (std::size_t i = 1; i < outcome_times_.size(); ++i)
        if (!(outcome_times_[i] > outcome_times_[i - 1]))
            throw std::invalid_argument("protocol: outcome times must increase");
    for (std::size_t i = 0; i < overrides_.size(); ++i) {
        const auto& o = overrides_[i];
        if (o.prefix.empty()) throw std::invalid_argument("protocol override needs a nonempty record prefix");
        if (o.prefix.size() > outcome_times_.size())
            throw std::invalid_argument("protocol override prefix is longer than the number of steps");
        check_segments(o.segments, hamiltonians_.size(), "protocol override");
        for (std::size_t j = 0; j < i; ++j)
            if (overrides_[j].prefix == o.prefix) throw std::invalid_argument("duplicate protocol override prefix");
    }
}

int Protocol::select(double t, const Record& record, bool left) const {
    const Segment* base = segment_at(base_, t, left);
    int best = base ? base->hamiltonian : base_.front().hamiltonian;
    std::size_t best_len = 0;
    for (const auto& o : overrides_) {
        const std::size_t len = o.prefix.size();
        if (len <= best_len || !is_prefix(o.prefix, record)) continue;
        const double act = outcome_times_[len - 1];
        if (left ? !(t > act) : !(t >= act)) continue;
        const Segment* s = segment_at(o.segments, t, left);
        if (!s) continue;
        best = s->hamiltonian;
        best_len = len;
    }
    return best;
}

std::vector<double> Protocol::candidate_times() const {
    std::vector<double> c;
    for (const auto& s : base_) c.push_back(s.start);
    for (const auto& o : overrides_) {
        c.push_back(outcome_times_[o.prefix.size() - 1]);
        for (const auto& s : o.segments) c.push_back(s.start);
    }
    std::sort(c.begin(), c.end());
    c.erase(std::unique(c.begin(), c.end()), c.end());
    return c;
}

std::vector<double> Protocol::switch_times(double ta, double tb, const Record& record) const {
    std::vector<double> out;
    for (double t : candidate_times())
        if (t > ta && t < tb && before(t, record) != after(t, record)) out.push_back(t);
    return out;
}

}  // namespace qcm::channels
