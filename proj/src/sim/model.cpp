#include "qcm/sim/model.hpp"

#include <cmath>
#include <stdexcept>
#include <string>

#include "qcm/ops/linalg.hpp"

namespace qcm::sim {

const StepVariant& StepModel::variant(const Record& previous) const {
    const StepVariant* best = &variants.front();
    for (const auto& v : variants)
        if (v.prefix.size() > best->prefix.size() && is_prefix(v.prefix, previous)) best = &v;
    return *best;
}

bool StepModel::branch_independent_ancilla() const {
    for (const auto& v : variants)
        if (max_norm(v.hardware.ancilla_state - variants.front().hardware.ancilla_state) > 1e-14) return false;
    return true;
}

Model::Model(channels::SystemBath sb, std::vector<StepModel> steps, Matrix rho_sb, double t_start, double beta,
             bool gibbs_initial, double e_i, double e_n)
    : sb_(std::move(sb)),
      steps_(std::move(steps)),
      rho_sb_(std::move(rho_sb)),
      t_start_(t_start),
      beta_(beta),
      gibbs_initial_(gibbs_initial) {
    const auto ds = sb_.dim_s();
    const auto dsb = Eigen::Index(ds * sb_.dim_b());
    if (rho_sb_.rows() != dsb || rho_sb_.cols() != dsb) throw std::invalid_argument("initial S⊗B state has wrong dimension");
    const auto& outcome_times = sb_.protocol().outcome_times();
    if (outcome_times.size() != steps_.size()) throw std::invalid_argument("protocol outcome times do not match the steps");
    std::vector<std::size_t> alphabets;
    std::vector<FactorRegistry::Factor> factors{{"S", ds}, {"B", sb_.dim_b()}, {"P", 1}};
    for (std::size_t k = 0; k < steps_.size(); ++k) {
        auto& s = steps_[k];
        const std::string tag = "step " + std::to_string(k);
        if (s.variants.empty() || !s.variants.front().prefix.empty())
            throw std::invalid_argument(tag + ": the first variant must have an empty prefix");
        if (!(s.width >= 0.0)) throw std::invalid_argument(tag + ": negative control width");
        if (k == 0 && s.time < t_start_) throw std::invalid_argument("first step precedes the start time");
        if (k > 0 && !(s.time > steps_[k - 1].outcome_time()))
            throw std::invalid_argument(tag + ": starts before the previous step finished");
        if (std::abs(outcome_times[k] - s.outcome_time()) > 0.0)
            throw std::invalid_argument(tag + ": protocol outcome time mismatch");
        const auto m = s.ancilla_dim();
        if (s.h_a.size() == 0) s.h_a = Matrix::Zero(Eigen::Index(m), Eigen::Index(m));
        if (s.h_a.rows() != Eigen::Index(m) || hermiticity_residual(s.h_a) > 1e-12)
            throw std::invalid_argument(tag + ": H_A must be Hermitian on the ancilla");
        for (auto& v : s.variants) {
            if (v.prefix.size() > k) throw std::invalid_argument(tag + ": feedback reads future outcomes");
            if (v.hardware.ancilla_dim != m || v.hardware.system_dim != ds)
                throw std::invalid_argument(tag + ": feedback variants need a common ancilla register");
            if (v.instrument.outcomes() != s.alphabet() || v.hardware.projectors.size() != s.alphabet())
                throw std::invalid_argument(tag + ": feedback variants change the outcome alphabet");
            if (s.width > 0.0 && v.generator.size() == 0) v.generator = unitary_generator(v.hardware.unitary);
        }
        if (s.width > 0.0)
            for (double c : sb_.protocol().candidate_times())
                if (c >= s.time && c < s.outcome_time())
                    throw std::invalid_argument(tag + ": protocol switch inside the control window");
        alphabets.push_back(s.alphabet());
    }
    for (std::size_t k = 0; k < steps_.size(); ++k) factors.push_back({"A" + std::to_string(k), steps_[k].ancilla_dim()});
    for (std::size_t k = 0; k < steps_.size(); ++k) factors.push_back({"I" + std::to_string(k), alphabets[k]});
    for (std::size_t k = 0; k < steps_.size(); ++k) factors.push_back({"N" + std::to_string(k), alphabets[k]});
    registry_ = std::make_shared<FactorRegistry>(std::move(factors));
    memory_ = dilation::MemoryLayout(alphabets, e_i, e_n);
}

channels::InterventionSchedule Model::schedule() const {
    std::vector<channels::Intervention> out;
    for (const auto& s : steps_) {
        channels::Intervention iv{s.time, s.variants.front().instrument, {}};
        for (std::size_t i = 1; i < s.variants.size(); ++i)
            iv.feedback.emplace_back(s.variants[i].prefix, s.variants[i].instrument);
        out.push_back(std::move(iv));
    }
    return channels::InterventionSchedule(std::move(out));
}

bool Model::has_finite_width() const {
    for (const auto& s : steps_)
        if (s.width > 0.0) return true;
    return false;
}

}  // namespace qcm::sim
