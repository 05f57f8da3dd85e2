#include "qcm/channels/process_tensor.hpp"

#include <cmath>
#include <stdexcept>
#include <string>

#include "qcm/ops/kernels.hpp"
#include "qcm/ops/linalg.hpp"

namespace qcm::channels {

SystemBath::SystemBath(Matrix h_b, Matrix v_sb, Protocol protocol)
    : dim_s_(protocol.dim()),
      dim_b_(static_cast<std::size_t>(h_b.rows())),
      h_b_(std::move(h_b)),
      v_sb_(std::move(v_sb)),
      protocol_(std::move(protocol)) {
    if (dim_s_ == 0) throw std::invalid_argument("system-bath: empty protocol");
    if (h_b_.rows() != h_b_.cols() || hermiticity_residual(h_b_) > 1e-12)
        throw std::invalid_argument("system-bath: H_B must be a Hermitian square matrix");
    const auto d = static_cast<Eigen::Index>(dim_s_ * dim_b_);
    if (v_sb_.size() == 0) v_sb_ = Matrix::Zero(d, d);
    if (v_sb_.rows() != d || v_sb_.cols() != d) throw std::invalid_argument("system-bath: V_SB has wrong dimension");
    if (hermiticity_residual(v_sb_) > 1e-12) throw std::invalid_argument("system-bath: V_SB is not Hermitian");
    registry_ = std::make_shared<FactorRegistry>(std::vector<FactorRegistry::Factor>{{"S", dim_s_}, {"B", dim_b_}});
}

Matrix SystemBath::h_s_embedded(int id) const {
    return kernels::kron(protocol_.hamiltonian(id), Matrix::Identity(Eigen::Index(dim_b_), Eigen::Index(dim_b_)));
}

Matrix SystemBath::h_b_embedded() const {
    return kernels::kron(Matrix::Identity(Eigen::Index(dim_s_), Eigen::Index(dim_s_)), h_b_);
}

Matrix SystemBath::hamiltonian(int id) const { return h_s_embedded(id) + h_b_embedded() + v_sb_; }

Matrix SystemBath::propagator(double ta, double tb, const Record& record) const {
    if (tb < ta) throw std::invalid_argument("system-bath evolution backwards in time");
    const auto d = static_cast<Eigen::Index>(dim_s_ * dim_b_);
    Matrix u = Matrix::Identity(d, d);
    double t = ta;
    auto cuts = protocol_.switch_times(ta, tb, record);
    cuts.push_back(tb);
    for (double c : cuts) {
        if (c > t) u = qcm::propagator(hamiltonian(protocol_.after(t, record)), c - t) * u;
        t = c;
    }
    return u;
}

Matrix SystemBath::evolve(const Matrix& rho, double ta, double tb, const Record& record) const {
    if (tb == ta) return rho;
    const Matrix u = propagator(ta, tb, record);
    return u * rho * u.adjoint();
}

InterventionSchedule::InterventionSchedule(std::vector<Intervention> steps) : steps_(std::move(steps)) {
    for (std::size_t k = 0; k < steps_.size(); ++k) {
        const auto& s = steps_[k];
        if (k > 0 && !(s.time > steps_[k - 1].time))
            throw std::invalid_argument("intervention times must be strictly increasing");
        for (const auto& [prefix, inst] : s.feedback) {
            if (prefix.size() > k)
                throw std::invalid_argument("feedback at step " + std::to_string(k) +
                                            " reads outcomes that are not yet available");
            if (inst.outcomes() != s.instrument.outcomes() || inst.dim() != s.instrument.dim())
                throw std::invalid_argument("feedback variant at step " + std::to_string(k) +
                                            " changes the outcome alphabet or dimension");
            for (std::size_t i = 0; i < prefix.size(); ++i)
                if (prefix[i] < 1 || static_cast<std::size_t>(prefix[i]) > steps_[i].instrument.outcomes())
                    throw std::invalid_argument("feedback prefix has an unknown outcome label");
        }
    }
}

std::vector<double> InterventionSchedule::times() const {
    std::vector<double> t;
    for (const auto& s : steps_) t.push_back(s.time);
    return t;
}

const Instrument& InterventionSchedule::instrument(std::size_t k, const Record& previous) const {
    const auto& s = steps_.at(k);
    const Instrument* best = &s.instrument;
    std::size_t best_len = 0;
    for (const auto& [prefix, inst] : s.feedback)
        if (prefix.size() > best_len && is_prefix(prefix, previous)) {
            best = &inst;
            best_len = prefix.size();
        }
    return *best;
}

std::vector<Record> InterventionSchedule::records(std::size_t n) const {
    std::vector<Record> out{Record{}};
    for (std::size_t k = 0; k < n; ++k) {
        std::vector<Record> next;
        for (const auto& r : out)
            for (int a = 1; a <= int(alphabet(k)); ++a) {
                next.push_back(r);
                next.back().push_back(a);
            }
        out = std::move(next);
    }
    return out;
}

Matrix evaluate_sequence(const SystemBath& sb, std::span<const double> times, const std::vector<std::vector<Matrix>>& maps,
                         const Record& record, const Matrix& rho_init, double t_start, double t) {
    if (maps.size() > times.size()) throw std::invalid_argument("more operations than intervention times");
    const std::vector<std::size_t> dims{sb.dim_s(), sb.dim_b()};
    const std::vector<std::size_t> pos{0};
    Matrix rho = rho_init;
    double tc = t_start;
    for (std::size_t k = 0; k < maps.size(); ++k) {
        if (times[k] < tc) throw std::invalid_argument("intervention time precedes the current time");
        const Record prev(record.begin(), record.begin() + std::ptrdiff_t(std::min(k, record.size())));
        rho = sb.evolve(rho, tc, times[k], prev);
        rho = apply_kraus(maps[k], rho, dims, pos);
        tc = times[k];
    }
    if (t < tc) throw std::invalid_argument("evaluation time precedes the last intervention");
    if (maps.size() < times.size() && t >= times[maps.size()])
        throw std::invalid_argument("evaluation time lies after an intervention missing from the record");
    const Record prev(record.begin(), record.begin() + std::ptrdiff_t(std::min(maps.size(), record.size())));
    return sb.evolve(rho, tc, t, prev);
}

DensityOperator evaluate_process_tensor_sb(const SystemBath& sb, const InterventionSchedule& schedule,
                                           const Record& record, const DensityOperator& rho_init, double t_start,
                                           double t, const Tolerances& tol) {
    if (record.size() > schedule.size()) throw std::invalid_argument("record is longer than the schedule");
    std::vector<std::vector<Matrix>> maps;
    for (std::size_t k = 0; k < record.size(); ++k) {
        const Record prev(record.begin(), record.begin() + std::ptrdiff_t(k));
        const Instrument& inst = schedule.instrument(k, prev);
        maps.push_back(inst.kraus(record[k]));
    }
    const auto times = schedule.times();
    Matrix out = evaluate_sequence(sb, times, maps, record, rho_init.matrix(), t_start, t);
    out = 0.5 * (out + out.adjoint());
    return DensityOperator::unnormalized(Operator(sb.registry(), rho_init.support(), std::move(out)), tol);
}

DensityOperator evaluate_process_tensor(const SystemBath& sb, const InterventionSchedule& schedule,
                                        const Record& record, const DensityOperator& rho_init, double t_start, double t,
                                        const Tolerances& tol) {
    const auto sbstate = evaluate_process_tensor_sb(sb, schedule, record, rho_init, t_start, t, tol);
    return partial_trace(sbstate, Support::of(*sb.registry(), {"S"}));
}

MultilinearityReport multilinearity_check(const SystemBath& sb, std::span<const double> times,
                                          const std::vector<std::vector<Matrix>>& ops,
                                          const std::vector<std::vector<Matrix>>& ops_alt, double alpha,
                                          const Record& record, const Matrix& rho_init, double t_start, double t,
                                          double tol) {
    if (ops.size() != ops_alt.size()) throw std::invalid_argument("operation lists differ in length");
    MultilinearityReport rep;
    const Matrix base = evaluate_sequence(sb, times, ops, record, rho_init, t_start, t);
    for (std::size_t k = 0; k < ops.size(); ++k) {
        auto mixed = ops;
        mixed[k].clear();
        for (const auto& m : ops[k]) mixed[k].push_back(std::sqrt(alpha) * m);
        for (const auto& m : ops_alt[k]) mixed[k].push_back(std::sqrt(1.0 - alpha) * m);
        auto alt = ops;
        alt[k] = ops_alt[k];
        const Matrix lhs = evaluate_sequence(sb, times, mixed, record, rho_init, t_start, t);
        const Matrix rhs = alpha * base + (1.0 - alpha) * evaluate_sequence(sb, times, alt, record, rho_init, t_start, t);
        const double dev = max_norm(lhs - rhs);
        if (dev > rep.max_deviation) {
            rep.max_deviation = dev;
            rep.worst_slot = k;
        }
    }
    rep.passed = rep.max_deviation <= tol;
    return rep;
}

}  // namespace qcm::channels
