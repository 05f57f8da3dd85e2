#include "qcm/sim/reference.hpp"

#include <algorithm>
#include <stdexcept>
#include <string>

#include "qcm/ops/kernels.hpp"
#include "qcm/ops/linalg.hpp"

namespace qcm::sim {

namespace {

Support full_support(const Model& model) {
    std::vector<std::size_t> idx;
    for (std::size_t i = 0; i < model.registry()->size(); ++i)
        if (i != 2) idx.push_back(i);
    return Support(idx);
}

std::vector<Record> all_records(const Model& model, std::size_t n) {
    std::vector<Record> out{Record{}};
    for (std::size_t k = 0; k < n; ++k) {
        std::vector<Record> next;
        for (const auto& r : out)
            for (int a = 1; a <= int(model.step(k).alphabet()); ++a) {
                next.push_back(r);
                next.back().push_back(a);
            }
        out = std::move(next);
    }
    return out;
}

Operator local(const Model& model, std::vector<std::size_t> idx, Matrix m) {
    return {model.registry(), Support(std::move(idx)), std::move(m)};
}

// |r><r| on I(0) .. I(len r - 1)
Operator local_record_projector(const Model& model, const Record& r) {
    std::vector<std::size_t> idx;
    Matrix p = Matrix::Identity(1, 1);
    for (std::size_t j = 0; j < r.size(); ++j) {
        const auto d = Eigen::Index(model.step(j).alphabet());
        Matrix pj = Matrix::Zero(d, d);
        pj(r[j] - 1, r[j] - 1) = 1.0;
        p = kernels::kron(p, pj);
        idx.push_back(model.index_i(j));
    }
    return local(model, std::move(idx), std::move(p));
}

// op ⊗ |r><r| on the full support; op must not touch I(0..len r - 1)
Operator conditioned(const Model& model, const Support& full, const Operator& op, const Record& r) {
    if (r.empty()) return op.embed(full);
    return tensor(op, local_record_projector(model, r)).embed(full);
}

// Hamiltonian on (t, t + eps) or, with `window`, on the control window of step k.
Operator conditional_hamiltonian(const Model& model, const Support& full, double t, std::size_t k_done,
                                 bool left = false) {
    const auto reg = model.registry();
    Operator h = Operator::zero(reg, full);
    for (const auto& r : all_records(model, k_done)) {
        const int id = left ? model.protocol().before(t, r) : model.protocol().after(t, r);
        h += conditioned(model, full, local(model, {model.index_s(), model.index_b()}, model.sb().hamiltonian(id)), r);
    }
    for (std::size_t j = 0; j < model.steps().size(); ++j) {
        h += local(model, {model.index_a(j)}, model.step(j).h_a);
        h += local(model, {model.index_i(j)}, model.memory().h_i(j));
        h += local(model, {model.index_n(j)}, model.memory().h_n(j));
    }
    return h;
}

Operator evolve(const Operator& rho, const Operator& h, double dt) {
    if (dt == 0.0) return rho;
    const Matrix hm = 0.5 * (h.matrix() + h.matrix().adjoint());
    return rho.conjugate(Operator(rho.registry(), rho.support(), propagator(hm, dt)));
}

std::vector<double> cuts_between(const Model& model, double ta, double tb, std::size_t k_done) {
    std::vector<double> cuts;
    for (const auto& r : all_records(model, k_done)) {
        const auto s = model.protocol().switch_times(ta, tb, r);
        cuts.insert(cuts.end(), s.begin(), s.end());
    }
    std::sort(cuts.begin(), cuts.end());
    cuts.erase(std::unique(cuts.begin(), cuts.end()), cuts.end());
    return cuts;
}

}  // namespace

Operator record_projector(const Model& model, const Support& full, const Record& r) {
    return local_record_projector(model, r).embed(full);
}

Operator reference_hamiltonian(const Model& model, const Support& full, double t, std::size_t steps_done) {
    return conditional_hamiltonian(model, full, t, steps_done);
}

ReferenceRun materialized_run(const Model& model, std::span<const double> times, std::size_t max_dim) {
    const auto reg = model.registry();
    const Support full = full_support(model);
    if (full.total_dim(*reg) > max_dim)
        throw std::invalid_argument("materialized reference needs dimension " + std::to_string(full.total_dim(*reg)));
    const auto& steps = model.steps();
    for (const auto& s : steps)
        if (!s.branch_independent_ancilla())
            throw std::invalid_argument("materialized reference needs record-independent ancilla states");

    // initial state; ancillas are back-rotated so that they arrive at t_k as prepared
    Operator rho = local(model, {model.index_s(), model.index_b()}, model.rho_sb());
    for (std::size_t j = 0; j < steps.size(); ++j) {
        const Matrix u = propagator(steps[j].h_a, -(steps[j].time - model.t_start()));
        const Matrix& ra = steps[j].variants.front().hardware.ancilla_state;
        rho = tensor(rho, local(model, {model.index_a(j)}, u * ra * u.adjoint()));
    }
    for (std::size_t j = 0; j < steps.size(); ++j) {
        rho = tensor(rho, local(model, {model.index_i(j)}, model.memory().idf_initial(j)));
        rho = tensor(rho, local(model, {model.index_n(j)}, model.memory().nidf_initial(j)));
    }

    std::vector<double> req(times.begin(), times.end());
    std::sort(req.begin(), req.end());
    ReferenceRun run;
    run.support = full;
    std::size_t next_req = 0;
    auto emit = [&](double t, std::size_t k_done) {
        run.times.push_back(t);
        run.steps_done.push_back(k_done);
        run.states.push_back(rho);
    };
    auto advance = [&](double ta, double tb, std::size_t k_done, bool include_end) {
        auto cuts = cuts_between(model, ta, tb, k_done);
        while (next_req < req.size() && (req[next_req] < tb || (include_end && req[next_req] == tb))) {
            if (req[next_req] > ta) cuts.push_back(req[next_req]);
            ++next_req;
        }
        cuts.push_back(tb);
        std::sort(cuts.begin(), cuts.end());
        cuts.erase(std::unique(cuts.begin(), cuts.end()), cuts.end());
        double t = ta;
        for (double c : cuts) {
            rho = evolve(rho, conditional_hamiltonian(model, full, t, k_done), c - t);
            t = c;
            if (std::binary_search(req.begin(), req.end(), c) && (c < tb || include_end)) emit(c, k_done);
        }
    };

    const double t0 = model.t_start();
    while (next_req < req.size() && req[next_req] <= t0 && (steps.empty() || steps[0].time > t0)) {
        emit(t0, 0);
        ++next_req;
    }
    double tc = t0;
    for (std::size_t k = 0; k < steps.size(); ++k) {
        const auto& s = steps[k];
        advance(tc, s.time, k, false);
        const auto records = all_records(model, k);
        const Support sa({model.index_s(), model.index_a(k)});
        if (s.width == 0.0) {
            Operator u = Operator::zero(reg, full);
            for (const auto& r : records) {
                u += conditioned(model, full, local(model, sa.indices(), s.variant(r).hardware.unitary), r);
            }
            rho = rho.conjugate(u);
        } else {
            Operator h = conditional_hamiltonian(model, full, s.time, k);
            for (const auto& r : records) {
                h += conditioned(model, full, local(model, sa.indices(), s.variant(r).generator / s.width), r);
            }
            rho = evolve(rho, h, s.width);
        }
        Operator u_ai = Operator::zero(reg, full);
        for (const auto& r : records) {
            u_ai += conditioned(model, full,
                                local(model, {model.index_a(k), model.index_i(k)},
                                      dilation::measurement_unitary(s.variant(r).hardware.projectors, s.alphabet())),
                                r);
        }
        rho = rho.conjugate(u_ai);
        rho = rho.conjugate(local(model, {model.index_i(k), model.index_n(k)}, dilation::dephasing_unitary(s.alphabet())));
        tc = s.outcome_time();
        while (next_req < req.size() && req[next_req] <= tc) {
            if (req[next_req] == tc) emit(tc, k + 1);
            ++next_req;
        }
    }
    if (next_req < req.size()) advance(tc, req.back(), steps.size(), true);
    return run;
}

}  // namespace qcm::sim
