#include "qcm/sim/simulator.hpp"

#include <algorithm>
#include <cmath>
#include <map>
#include <mutex>
#include <stdexcept>
#include <string>

#include "qcm/ops/kernels.hpp"
#include "qcm/ops/linalg.hpp"
#include "qcm/thermo/functionals.hpp"

namespace qcm::sim {

// S⊗B propagators shared by all branches of one run.
class PropagatorCache {
public:
    explicit PropagatorCache(const channels::SystemBath& sb) : sb_(sb) {}

    const Matrix& get(int h, double dt) {
        const auto key = std::make_pair(h, dt);
        {
            std::lock_guard<std::mutex> lock(mutex_);
            if (auto it = cache_.find(key); it != cache_.end()) return it->second;
        }
        Matrix u = propagator(sb_.hamiltonian(h), dt);
        std::lock_guard<std::mutex> lock(mutex_);
        return cache_.emplace(key, std::move(u)).first->second;
    }

private:
    const channels::SystemBath& sb_;
    std::mutex mutex_;
    std::map<std::pair<int, double>, Matrix> cache_;
};

namespace {

Matrix symmetrized(Matrix m) { return 0.5 * (m + m.adjoint()); }

std::vector<std::size_t> ancilla_positions(const Model& model, const BranchLedger& ledger) {
    std::vector<std::size_t> pos;
    for (auto j : ledger.ancillas) pos.push_back(ledger.support.position(model.index_a(j)));
    return pos;
}

// Free evolution of one branch state for dt under H_SB(h) and the held ancilla Hamiltonians.
Matrix evolve_state(const Model& model, const BranchLedger& ledger, const Matrix& state, int h, double dt,
                    PropagatorCache& cache) {
    if (dt == 0.0) return state;
    const auto dims = ledger.dims(*model.registry());
    const std::vector<std::size_t> sb{0, 1};
    const Matrix& u = cache.get(h, dt);
    Matrix out = dims.size() == 2 ? Matrix(u * state * u.adjoint()) : kernels::sandwich(state, dims, sb, u, u);
    const auto apos = ancilla_positions(model, ledger);
    for (std::size_t i = 0; i < ledger.ancillas.size(); ++i) {
        const Matrix& ha = model.step(ledger.ancillas[i]).h_a;
        if (max_norm(ha) == 0.0) continue;
        const Matrix ua = propagator(ha, dt);
        const std::vector<std::size_t> p{apos[i]};
        out = kernels::sandwich(out, dims, p, ua, ua);
    }
    return out;
}

Matrix reduce(const Matrix& state, const std::vector<std::size_t>& dims, std::vector<std::size_t> keep) {
    if (keep.size() == dims.size()) return state;
    return kernels::partial_trace(state, dims, keep);
}

// Sum of H_S(h) and the held ancilla Hamiltonians on S ⊗ held ancillas.
Matrix h_system_ancillas(const Model& model, const BranchLedger& ledger, int h) {
    std::vector<std::size_t> dims{model.sb().dim_s()};
    for (auto j : ledger.ancillas) dims.push_back(model.step(j).ancilla_dim());
    const std::vector<std::size_t> s{0};
    Matrix out = kernels::embed(model.protocol().hamiltonian(h), dims, s);
    for (std::size_t i = 0; i < ledger.ancillas.size(); ++i) {
        const std::vector<std::size_t> p{i + 1};
        out += kernels::embed(model.step(ledger.ancillas[i]).h_a, dims, p);
    }
    return out;
}

std::vector<std::size_t> s_and_ancillas(std::size_t n_held) {
    std::vector<std::size_t> keep{0};
    for (std::size_t i = 0; i < n_held; ++i) keep.push_back(2 + i);
    return keep;
}

double max_offdiag_block(const Matrix& m, std::size_t d) {
    // last factor has dimension d
    double r = 0.0;
    for (Eigen::Index i = 0; i < m.rows(); ++i)
        for (Eigen::Index j = 0; j < m.cols(); ++j)
            if (std::size_t(i) % d != std::size_t(j) % d) r = std::max(r, std::abs(m(i, j)));
    return r;
}

Matrix diagonal_block(const Matrix& m, std::size_t d, std::size_t r) {
    const auto n = m.rows() / Eigen::Index(d);
    Matrix b(n, n);
    for (Eigen::Index i = 0; i < n; ++i)
        for (Eigen::Index j = 0; j < n; ++j) b(i, j) = m(i * Eigen::Index(d) + Eigen::Index(r), j * Eigen::Index(d) + Eigen::Index(r));
    return b;
}

MemoryCheck check_memory(const Model& model, std::size_t k, const Matrix& state, const std::vector<std::size_t>& dims,
                         std::size_t pos_a, const std::vector<Matrix>& projectors, const std::vector<Matrix>& children) {
    const auto& step = model.step(k);
    const std::size_t d = step.alphabet();
    const auto& mem = model.memory();
    MemoryCheck mc;
    std::vector<std::size_t> dims_i = dims;
    dims_i.push_back(d);
    const Matrix with_i = kernels::kron(state, mem.idf_initial(k));
    const Matrix u_ai = dilation::measurement_unitary(projectors, d);
    const std::vector<std::size_t> ai{pos_a, dims.size()};
    const Matrix cat = kernels::sandwich(with_i, dims_i, ai, u_ai, u_ai);
    mc.cat_coherence = max_offdiag_block(cat, d);

    std::vector<std::size_t> dims_in = dims_i;
    dims_in.push_back(d);
    const Matrix with_n = kernels::kron(cat, mem.nidf_initial(k));
    const std::vector<std::size_t> in{dims.size(), dims.size() + 1};
    const Matrix u_in = dilation::dephasing_unitary(d);
    const Matrix dephased = kernels::sandwich(with_n, dims_in, in, u_in, u_in);
    const Matrix h_mem = kernels::kron(mem.h_i(k), Matrix::Identity(Eigen::Index(d), Eigen::Index(d))) +
                         kernels::kron(Matrix::Identity(Eigen::Index(d), Eigen::Index(d)), mem.h_n(k));
    mc.energy_cost = thermo::trace_product(kernels::embed(h_mem, dims_in, in), dephased - with_n);

    std::vector<std::size_t> keep(dims_i.size());
    for (std::size_t i = 0; i < keep.size(); ++i) keep[i] = i;
    const Matrix traced = kernels::partial_trace(dephased, dims_in, keep);
    mc.offdiag = max_offdiag_block(traced, d);
    for (std::size_t r = 0; r < d; ++r)
        mc.block_error = std::max(mc.block_error, max_norm(diagonal_block(traced, d, r) - children[r]));
    return mc;
}

void check_branch_cap(std::size_t n, const SimOptions& opt) {
    if (n > opt.max_branches)
        throw std::invalid_argument("branch count " + std::to_string(n) + " exceeds the limit of " +
                                    std::to_string(opt.max_branches));
}

}  // namespace

double BranchLedger::total_weight() const {
    double w = 0.0;
    for (const auto& b : branches) w += b.weight;
    return w;
}

Matrix apply_instantaneous_control(const Matrix& rho, std::span<const std::size_t> dims,
                                   std::span<const std::size_t> positions, const Matrix& u) {
    if (positions.size() == dims.size()) return u * rho * u.adjoint();
    return kernels::sandwich(rho, dims, positions, u, u);
}

BranchLedger initial_ledger(const Model& model) {
    BranchLedger l;
    l.support = Support({model.index_s(), model.index_b()});
    l.branches.push_back({Record{}, 1.0, model.rho_sb(), {}});
    return l;
}

BranchSnapshot snapshot_branch(const Model& model, const BranchLedger& ledger, const Branch& b, int h) {
    const auto dims = ledger.dims(*model.registry());
    BranchSnapshot s;
    s.record = b.record;
    s.weight = b.weight;
    s.h = h;
    s.acc = b.acc;
    s.ancillas = ledger.ancillas;
    s.rho_sb = symmetrized(reduce(b.state, dims, {0, 1}) / b.weight);
    s.rho_sa = symmetrized(reduce(b.state, dims, s_and_ancillas(ledger.ancillas.size())) / b.weight);
    s.e_sb = thermo::trace_product(model.sb().hamiltonian(h), s.rho_sb);
    return s;
}

std::pair<BranchLedger, StepTrace> apply_intervention(const Model& model, const BranchLedger& ledger, std::size_t k,
                                                      const SimOptions& opt, std::vector<SwitchEvent>* switches) {
    const auto& step = model.step(k);
    const auto& reg = *model.registry();
    const auto& proto = model.protocol();
    const auto& sb = model.sb();
    const double t_out = step.outcome_time();

    BranchLedger held;
    held.support = ledger.support.unite(Support({model.index_a(k)}));
    held.ancillas = ledger.ancillas;
    held.ancillas.push_back(k);
    const auto dims = held.dims(reg);
    const std::size_t pos_a = held.support.position(model.index_a(k));
    const std::vector<std::size_t> sa{0, pos_a}, sba{0, 1, pos_a}, a_only{pos_a};
    const auto keep_sa = s_and_ancillas(held.ancillas.size());
    const std::size_t d = step.alphabet();
    const std::size_t n = ledger.branches.size();
    check_branch_cap(n * d, opt);

    struct Out {
        std::vector<Branch> children;
        std::vector<MeasurementRecord> meas;
        std::vector<SwitchEvent> sw;
        ControlRecord ctrl;
        std::vector<MemoryCheck> mem;
        double pruned = 0.0;
    };
    std::vector<Out> outs(n);

#pragma omp parallel for schedule(dynamic)
    for (std::size_t bi = 0; bi < n; ++bi) {
        const Branch& parent = ledger.branches[bi];
        Out& out = outs[bi];
        const StepVariant& v = step.variant(parent.record);
        const auto& hw = v.hardware;
        const double p = parent.weight;
        const int h_ctrl = proto.before(t_out, parent.record);

        Matrix state = kernels::kron(parent.state, hw.ancilla_state);
        const Matrix pre_sba = reduce(state, dims, sba) / p;
        double ctrl_work = 0.0;
        if (step.width == 0.0) {
            state = apply_instantaneous_control(state, dims, sa, hw.unitary);
            ctrl_work = thermo::singular_control_work(pre_sba, hw.unitary, proto.hamiltonian(h_ctrl), sb.v_sb(), step.h_a,
                                                      sb.dim_b());
        } else {
            const std::vector<std::size_t> d3{sb.dim_s(), sb.dim_b(), step.ancilla_dim()};
            const std::vector<std::size_t> p01{0, 1}, p2{2}, p02{0, 2};
            const Matrix x = kernels::embed(v.generator, d3, p02);
            const Matrix h_win = kernels::embed(sb.hamiltonian(h_ctrl), d3, p01) + kernels::embed(step.h_a, d3, p2) +
                                 x / step.width;
            const Matrix u = propagator(0.5 * (h_win + h_win.adjoint()), step.width);
            state = apply_instantaneous_control(state, dims, sba, u);
            // the other held ancillas run freely through the window
            for (std::size_t i = 0; i + 1 < held.ancillas.size(); ++i) {
                const Matrix& ha = model.step(held.ancillas[i]).h_a;
                if (max_norm(ha) == 0.0) continue;
                const Matrix ua = propagator(ha, step.width);
                const std::vector<std::size_t> pj{held.support.position(model.index_a(held.ancillas[i]))};
                state = kernels::sandwich(state, dims, pj, ua, ua);
            }
            const Matrix post_sba = reduce(state, dims, sba) / p;
            ctrl_work = thermo::finite_width_control_work(x, step.width, pre_sba, post_sba);
        }
        out.ctrl = {parent.record, ctrl_work};

        Matrix rho_a_pre, rho_sa_pre, h_sa;
        if (opt.thermo) {
            rho_a_pre = symmetrized(reduce(state, dims, a_only) / p);
            rho_sa_pre = symmetrized(reduce(state, dims, keep_sa) / p);
            h_sa = h_system_ancillas(model, held, h_ctrl);
        }

        std::vector<Matrix> branch_states(d);
        for (std::size_t r = 0; r < d; ++r)
            branch_states[r] = kernels::sandwich(state, dims, a_only, hw.projectors[r], hw.projectors[r]);

        if (opt.check_memory && state.rows() * Eigen::Index(d * d) <= Eigen::Index(opt.memory_check_dim)) {
            out.mem.push_back(check_memory(model, k, state, dims, pos_a, hw.projectors, branch_states));
            out.mem.back().record = parent.record;
        }

        for (std::size_t r = 0; r < d; ++r) {
            Matrix child = symmetrized(std::move(branch_states[r]));
            const double pc = child.trace().real();
            if (pc < opt.tol.prune) {
                out.pruned += std::max(pc, 0.0);
                continue;
            }
            Branch b{parent.record, pc, std::move(child), parent.acc};
            b.record.push_back(int(r + 1));
            b.acc.w_sa += ctrl_work;
            if (opt.thermo) {
                MeasurementRecord m;
                m.record = b.record;
                m.p_conditional = pc / p;
                m.rho_a_pre = rho_a_pre;
                m.rho_a_post = symmetrized(reduce(b.state, dims, a_only) / pc);
                const Matrix rho_sa_post = symmetrized(reduce(b.state, dims, keep_sa) / pc);
                m.w_ai = thermo::work_measurement_canonical(step.h_a, m.rho_a_pre, m.rho_a_post);
                m.w_ai_alt = thermo::work_measurement_alternative(h_sa, rho_sa_pre, rho_sa_post);
                b.acc.w_ai += m.w_ai;
                b.acc.w_ai_alt += m.w_ai_alt;
                out.meas.push_back(std::move(m));
            }
            const int h_new = proto.after(t_out, b.record);
            if (h_new != h_ctrl) {
                const Matrix rho_s = reduce(b.state, dims, {0}) / pc;
                const double w = thermo::switch_work(proto.hamiltonian(h_ctrl), proto.hamiltonian(h_new), rho_s);
                b.acc.w_s += w;
                out.sw.push_back({t_out, b.record, h_ctrl, h_new, w, pc});
            }
            out.children.push_back(std::move(b));
        }
    }

    BranchLedger next;
    next.pruned_mass = ledger.pruned_mass;
    StepTrace trace;
    trace.step = k;
    if (opt.keep_spent_ancillas) {
        next.support = held.support;
        next.ancillas = held.ancillas;
    } else {
        next.support = ledger.support;
        next.ancillas = ledger.ancillas;
    }
    std::vector<std::size_t> keep_after;
    for (std::size_t i = 0; i < dims.size(); ++i)
        if (opt.keep_spent_ancillas || i != pos_a) keep_after.push_back(i);
    for (auto& o : outs) {
        next.pruned_mass += o.pruned;
        trace.pruned_mass += o.pruned;
        trace.controls.push_back(std::move(o.ctrl));
        for (auto& m : o.meas) trace.measurements.push_back(std::move(m));
        for (auto& m : o.mem) trace.memory.push_back(std::move(m));
        if (switches)
            for (auto& s : o.sw) switches->push_back(std::move(s));
        for (auto& c : o.children) {
            if (!opt.keep_spent_ancillas) c.state = kernels::partial_trace(c.state, dims, keep_after);
            next.branches.push_back(std::move(c));
        }
    }
    return {std::move(next), std::move(trace)};
}

BranchLedger evolve_ledger(const Model& model, const BranchLedger& ledger, double ta, double tb,
                           std::span<const double> report_times, bool include_end, std::size_t steps_done,
                           std::vector<Snapshot>* snapshots, std::vector<SwitchEvent>* switches) {
    if (tb < ta) throw std::invalid_argument("evolution backwards in time");
    const auto& proto = model.protocol();
    std::vector<double> reports;
    for (double t : report_times)
        if (t > ta && (t < tb || (include_end && t == tb))) reports.push_back(t);
    std::sort(reports.begin(), reports.end());
    reports.erase(std::unique(reports.begin(), reports.end()), reports.end());

    PropagatorCache cache(model.sb());
    const std::size_t n = ledger.branches.size();
    BranchLedger next = ledger;
    std::vector<std::vector<BranchSnapshot>> snaps(reports.size(), std::vector<BranchSnapshot>(n));
    std::vector<std::vector<SwitchEvent>> sw(n);

#pragma omp parallel for schedule(dynamic)
    for (std::size_t bi = 0; bi < n; ++bi) {
        Branch& b = next.branches[bi];
        auto cuts = proto.switch_times(ta, tb, b.record);
        cuts.insert(cuts.end(), reports.begin(), reports.end());
        cuts.push_back(tb);
        std::sort(cuts.begin(), cuts.end());
        cuts.erase(std::unique(cuts.begin(), cuts.end()), cuts.end());
        double t = ta;
        int h = proto.after(ta, b.record);
        std::size_t ri = 0;
        for (double c : cuts) {
            b.state = evolve_state(model, next, b.state, h, c - t, cache);
            t = c;
            if (c < tb || include_end) {
                const int h_new = proto.after(c, b.record);
                if (h_new != h) {
                    const auto dims = next.dims(*model.registry());
                    const Matrix rho_s = reduce(b.state, dims, {0}) / b.weight;
                    const double w = thermo::switch_work(proto.hamiltonian(h), proto.hamiltonian(h_new), rho_s);
                    b.acc.w_s += w;
                    sw[bi].push_back({c, b.record, h, h_new, w, b.weight});
                    h = h_new;
                }
            }
            if (ri < reports.size() && reports[ri] == c) {
                snaps[ri][bi] = snapshot_branch(model, next, b, h);
                ++ri;
            }
        }
        b.state = symmetrized(std::move(b.state));
    }

    if (snapshots)
        for (std::size_t i = 0; i < reports.size(); ++i)
            snapshots->push_back({reports[i], SnapshotKind::report, steps_done, next.pruned_mass, std::move(snaps[i])});
    if (switches) {
        std::vector<SwitchEvent> all;
        for (auto& v : sw)
            for (auto& e : v) all.push_back(std::move(e));
        std::stable_sort(all.begin(), all.end(), [](const SwitchEvent& a, const SwitchEvent& b) { return a.time < b.time; });
        for (auto& e : all) switches->push_back(std::move(e));
    }
    return next;
}

std::pair<BranchLedger, StepTrace> run_step(const Model& model, const BranchLedger& ledger, std::size_t k,
                                            const SimOptions& opt, double t_end) {
    auto [after, trace] = apply_intervention(model, ledger, k, opt);
    const double t_out = model.step(k).outcome_time();
    const double t_next = k + 1 < model.steps().size() ? model.step(k + 1).time : t_end;
    BranchLedger evolved = evolve_ledger(model, after, t_out, std::max(t_next, t_out), {}, false, k + 1, nullptr, nullptr);
    return {std::move(evolved), std::move(trace)};
}

SimResult simulate(const Model& model, std::span<const double> report_times, const SimOptions& opt) {
    std::vector<double> reports(report_times.begin(), report_times.end());
    std::sort(reports.begin(), reports.end());
    reports.erase(std::unique(reports.begin(), reports.end()), reports.end());
    const auto& steps = model.steps();
    const auto& proto = model.protocol();
    for (double t : reports) {
        if (t < model.t_start()) throw std::invalid_argument("report time precedes the start time");
        for (const auto& s : steps)
            if (s.width > 0.0 && t >= s.time && t < s.outcome_time())
                throw std::invalid_argument("report time " + std::to_string(t) + " lies inside a control window");
    }

    SimResult res;
    BranchLedger ledger = initial_ledger(model);
    const double t0 = model.t_start();
    res.snapshots.push_back({t0, SnapshotKind::initial, 0, 0.0,
                             {snapshot_branch(model, ledger, ledger.branches[0], proto.before(t0, {}))}});

    // a switch exactly at the start time acts on the initial state unless a step is there
    const bool step_at_start = !steps.empty() && steps[0].time == t0;
    if (!step_at_start && proto.before(t0, {}) != proto.after(t0, {})) {
        auto& b = ledger.branches[0];
        const int h_old = proto.before(t0, {}), h_new = proto.after(t0, {});
        const auto dims = ledger.dims(*model.registry());
        const Matrix rho_s = kernels::partial_trace(b.state, dims, std::vector<std::size_t>{0});
        const double w = thermo::switch_work(proto.hamiltonian(h_old), proto.hamiltonian(h_new), rho_s);
        b.acc.w_s += w;
        res.switches.push_back({t0, {}, h_old, h_new, w, 1.0});
    }
    if (!step_at_start && std::binary_search(reports.begin(), reports.end(), t0))
        res.snapshots.push_back({t0, SnapshotKind::report, 0, 0.0,
                                 {snapshot_branch(model, ledger, ledger.branches[0], proto.after(t0, {}))}});

    double tc = t0;
    for (std::size_t k = 0; k < steps.size(); ++k) {
        ledger = evolve_ledger(model, ledger, tc, steps[k].time, reports, false, k, &res.snapshots, &res.switches);
        if (k == 0) {
            Snapshot pre{steps[0].time, SnapshotKind::before_first_step, 0, 0.0, {}};
            for (const auto& b : ledger.branches)
                pre.branches.push_back(snapshot_branch(model, ledger, b, proto.before(steps[0].time, b.record)));
            res.snapshots.push_back(std::move(pre));
        }
        auto [next, trace] = apply_intervention(model, ledger, k, opt, &res.switches);
        ledger = std::move(next);
        res.steps.push_back(std::move(trace));
        tc = steps[k].outcome_time();
        if (std::binary_search(reports.begin(), reports.end(), tc)) {
            Snapshot s{tc, SnapshotKind::report, k + 1, ledger.pruned_mass, {}};
            for (const auto& b : ledger.branches) s.branches.push_back(snapshot_branch(model, ledger, b, proto.after(tc, b.record)));
            res.snapshots.push_back(std::move(s));
        }
    }
    const double t_end = reports.empty() ? tc : std::max(tc, reports.back());
    if (t_end > tc)
        ledger = evolve_ledger(model, ledger, tc, t_end, reports, true, steps.size(), &res.snapshots, &res.switches);
    res.pruned_mass = ledger.pruned_mass;
    return res;
}

std::pair<DensityOperator, double> condition(const Model& model, const BranchLedger& ledger, const Record& r) {
    for (const auto& b : ledger.branches)
        if (b.record == r) {
            Operator op(model.registry(), ledger.support, b.state / b.weight);
            return {DensityOperator::normalized(std::move(op)), b.weight};
        }
    throw std::domain_error("record has zero probability or was pruned");
}

}  // namespace qcm::sim
