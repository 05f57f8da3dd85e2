#include "qcm/harness/run.hpp"

#include <algorithm>
#include <cmath>
#include <cstdio>
#include <map>

#include "qcm/dilation/dilation.hpp"
#include "qcm/harness/build.hpp"
#include "qcm/harness/random.hpp"
#include "qcm/ops/kernels.hpp"
#include "qcm/ops/linalg.hpp"

namespace qcm::harness {

namespace {

// below this weight conditional states are compared unnormalized
constexpr double kNormalizeFloor = 1e-8;

std::vector<BranchState> autonomous_states(const sim::Model& model, const sim::SimResult& res) {
    std::vector<BranchState> out;
    const std::vector<std::size_t> dims{model.sb().dim_s(), model.sb().dim_b()}, keep{0};
    for (const auto& snap : res.snapshots) {
        if (snap.kind != sim::SnapshotKind::report) continue;
        for (const auto& b : snap.branches)
            out.push_back({snap.time, snap.steps_done, b.record, b.weight, kernels::partial_trace(b.rho_sb, dims, keep)});
    }
    return out;
}

std::size_t steps_done_at(const sim::Model& model, double t) {
    std::size_t n = 0;
    for (const auto& s : model.steps())
        if (s.outcome_time() <= t) ++n;
    return n;
}

std::vector<BranchState> direct_states(const sim::Model& model, const std::vector<double>& times, const RunConfig& cfg) {
    const auto sched = model.schedule();
    const auto rho = DensityOperator::normalized(Operator(model.sb().registry(), std::vector<std::string>{"S", "B"}, model.rho_sb()));
    std::vector<BranchState> out;
    for (double t : times) {
        const std::size_t n = steps_done_at(model, t);
        const auto records = sched.records(n);
        if (records.size() > cfg.max_branches)
            throw std::invalid_argument("branch count " + std::to_string(records.size()) + " exceeds the limit of " +
                                        std::to_string(cfg.max_branches));
        for (const auto& r : records) {
            const auto d = channels::evaluate_process_tensor(model.sb(), sched, r, rho, model.t_start(), t);
            const double p = d.weight();
            if (p < cfg.tol.prune) continue;
            out.push_back({t, n, r, p, d.matrix() / p});
        }
    }
    return out;
}

EquivalenceReport compare(const std::vector<BranchState>& a, const std::vector<BranchState>& d, const Tolerances& tol) {
    EquivalenceReport rep;
    rep.applicable = true;
    std::map<std::pair<double, Record>, std::pair<const BranchState*, const BranchState*>> join;
    for (const auto& x : a) join[{x.time, x.record}].first = &x;
    for (const auto& x : d) join[{x.time, x.record}].second = &x;
    for (const auto& [key, pair] : join) {
        EquivalenceRow row;
        row.time = key.first;
        row.record = key.second;
        const auto* x = pair.first;
        const auto* y = pair.second;
        row.p_autonomous = x ? x->p : 0.0;
        row.p_direct = y ? y->p : 0.0;
        row.prob_dev = std::abs(row.p_autonomous - row.p_direct);
        if (x && y) {
            const double scale = std::min(x->p, y->p) >= kNormalizeFloor ? 1.0 : 0.0;
            row.state_dev = scale > 0 ? max_norm(x->rho_s - y->rho_s) : max_norm(x->p * x->rho_s - y->p * y->rho_s);
        }
        rep.max_prob_dev = std::max(rep.max_prob_dev, row.prob_dev);
        rep.max_state_dev = std::max(rep.max_state_dev, row.state_dev);
        rep.rows.push_back(std::move(row));
    }
    rep.passed = rep.max_prob_dev <= tol.equivalence_prob && rep.max_state_dev <= tol.equivalence_state;
    return rep;
}

std::vector<double> sorted_times(const ScenarioFile& s) {
    auto t = s.report_times;
    std::sort(t.begin(), t.end());
    t.erase(std::unique(t.begin(), t.end()), t.end());
    return t;
}

void add(ReportBundle& b, std::string name, double value, double tol, bool passed, std::string detail = {}) {
    b.checks.push_back({std::move(name), value, tol, passed, std::move(detail)});
}

void bound(ReportBundle& b, std::string name, double value, double tol, std::string detail = {}) {
    add(b, std::move(name), value, tol, std::isfinite(value) && value <= tol, std::move(detail));
}

}  // namespace

Mode parse_mode(std::string_view s) {
    if (s == "autonomous") return Mode::autonomous;
    if (s == "process-tensor") return Mode::process_tensor;
    if (s == "both") return Mode::both;
    throw std::invalid_argument("unknown mode '" + std::string(s) + "'");
}

std::string to_string(Mode m) {
    switch (m) {
        case Mode::autonomous: return "autonomous";
        case Mode::process_tensor: return "process-tensor";
        case Mode::both: break;
    }
    return "both";
}

bool ReportBundle::passed() const {
    return std::all_of(checks.begin(), checks.end(), [](const CheckResult& c) { return c.passed; });
}

std::string fnv1a64(std::string_view bytes) {
    std::uint64_t h = 1469598103934665603ull;
    for (unsigned char c : bytes) {
        h ^= c;
        h *= 1099511628211ull;
    }
    char buf[17];
    std::snprintf(buf, sizeof buf, "%016llx", static_cast<unsigned long long>(h));
    return buf;
}

ReportBundle run_scenario(const ScenarioFile& s, std::string_view source, const RunConfig& cfg) {
    ReportBundle b;
    b.command = "run";
    b.scenario_name = s.name;
    b.checksum = fnv1a64(source);
    b.mode = cfg.mode;
    b.seed = cfg.seed;
    b.max_branches = cfg.max_branches;
    b.tol = cfg.tol;
    b.report_times = sorted_times(s);
    const sim::Model model = build_model(s, {cfg.tol, false});

    if (cfg.mode != Mode::process_tensor) {
        sim::SimOptions opt;
        opt.tol = cfg.tol;
        opt.max_branches = cfg.max_branches;
        b.sim = sim::simulate(model, b.report_times, opt);
        b.autonomous = autonomous_states(model, *b.sim);
        b.pruned_mass = b.sim->pruned_mass;
        b.conventions = thermo::convention_checks(*b.sim);
        if (model.beta() > 0.0) {
            b.thermo = thermo::build_ledger(model, *b.sim);
            b.caveats = b.thermo->caveats;
        } else {
            b.caveats.push_back("beta = 0: thermodynamic ledger not computed");
        }
    }
    if (cfg.mode != Mode::autonomous) {
        if (model.has_finite_width()) {
            b.equivalence.reason = "finite-width controls have no instantaneous process-tensor counterpart";
        } else {
            b.direct = direct_states(model, b.report_times, cfg);
        }
    }
    if (cfg.mode == Mode::both) {
        if (model.has_finite_width()) {
            b.equivalence.applicable = false;
        } else {
            b.equivalence = compare(b.autonomous, b.direct, cfg.tol);
            bound(b, "equivalence.probability", b.equivalence.max_prob_dev, cfg.tol.equivalence_prob);
            bound(b, "equivalence.state", b.equivalence.max_state_dev, cfg.tol.equivalence_state);
        }
    }
    return b;
}

ReportBundle verify_scenario(const ScenarioFile& s, std::string_view source, const RunConfig& cfg) {
    const Tolerances& tol = cfg.tol;
    // hardware first: a broken instrument must show up as a failed check
    const sim::Model lenient = build_model(s, {tol, true});
    ReportBundle hw;
    double kraus = 0.0, unit = 0.0, proj = 0.0, recon = 0.0;
    for (const auto& st : lenient.steps())
        for (const auto& v : st.variants) {
            kraus = std::max(kraus, channels::completeness_residual(v.instrument.flattened()));
            unit = std::max(unit, unitarity_residual(v.hardware.unitary));
            proj = std::max(proj, dilation::projector_residual(v.hardware.projectors));
            recon = std::max(recon, dilation::reconstruction_error(v.instrument, v.hardware));
        }
    bound(hw, "instrument.trace_preserving", kraus, tol.kraus);
    bound(hw, "dilation.unitarity", unit, tol.unitary);
    bound(hw, "dilation.projectors", proj, tol.kraus);
    bound(hw, "dilation.reconstruction", recon, tol.reconstruction);
    if (!hw.passed()) {
        hw.command = "verify";
        hw.scenario_name = s.name;
        hw.checksum = fnv1a64(source);
        hw.mode = Mode::both;
        hw.seed = cfg.seed;
        hw.max_branches = cfg.max_branches;
        hw.tol = tol;
        hw.caveats.push_back("simulation skipped: the intervention hardware is invalid");
        return hw;
    }

    RunConfig both = cfg;
    both.mode = Mode::both;
    ReportBundle b = run_scenario(s, source, both);
    b.command = "verify";
    b.checks.insert(b.checks.begin(), hw.checks.begin(), hw.checks.end());
    const sim::Model model = build_model(s, {tol, false});

    double total = 0.0;
    for (const auto& snap : b.sim->snapshots) {
        double w = snap.pruned_mass;
        for (const auto& br : snap.branches) w += br.weight;
        total = std::max(total, std::abs(w - 1.0));
    }
    bound(b, "probability.total", total, tol.probability);

    // IDF/NIDF dephasing on the actual branch states
    sim::SimOptions mem;
    mem.tol = tol;
    mem.max_branches = cfg.max_branches;
    mem.check_memory = true;
    mem.memory_check_dim = 4096;
    const auto mres = sim::simulate(model, b.report_times, mem);
    double cost = 0.0, offdiag = 0.0, block = 0.0;
    std::size_t checked = 0;
    for (const auto& st : mres.steps)
        for (const auto& m : st.memory) {
            cost = std::max(cost, std::abs(m.energy_cost));
            offdiag = std::max(offdiag, m.offdiag);
            block = std::max(block, m.block_error);
            ++checked;
        }
    const std::string mem_detail = std::to_string(checked) + " parent branches materialized";
    bound(b, "memory.dephasing_cost", cost, tol.dephasing, mem_detail);
    bound(b, "memory.offdiagonal", offdiag, tol.dephasing, mem_detail);
    bound(b, "memory.blocks", block, tol.equivalence_state, mem_detail);

    // linearity of the process tensor in each slot, against random operations
    if (!model.steps().empty()) {
        random::Rng rng(cfg.seed);
        std::vector<double> times;
        std::vector<std::vector<Matrix>> ops, alt;
        Record rec;
        for (const auto& st : model.steps()) {
            times.push_back(st.time);
            ops.push_back(st.variants.front().instrument.kraus(1));
            alt.push_back(random::kraus(model.sb().dim_s(), 2, rng));
            rec.push_back(1);
        }
        const double t_end = b.report_times.empty() ? times.back() : std::max(times.back(), b.report_times.back());
        double dev = 0.0;
        for (double a : {0.0, 0.37, 1.0})
            dev = std::max(dev, channels::multilinearity_check(model.sb(), times, ops, alt, a, rec, model.rho_sb(),
                                                               model.t_start(), t_end)
                                    .max_deviation);
        bound(b, "process_tensor.multilinearity", dev, tol.equivalence_prob);
    }

    double conv = 0.0;
    for (const auto& c : b.conventions) conv = std::max(conv, c.max_average_gap);
    bound(b, "work.convention_average", conv, tol.convention_average);

    if (b.thermo) {
        double fl = 0.0, bal = 0.0, sigma_min = 0.0, forms = 0.0;
        const double u0 = b.thermo->rows.front().u;
        for (const auto& r : b.thermo->rows) fl = std::max(fl, std::abs(r.q - ((r.u - u0) - r.w)));
        for (const auto& e : b.thermo->ensemble) {
            fl = std::max(fl, std::abs(e.Q - ((e.U - u0) - e.W)));
            bal = std::max(bal, std::abs(e.energy_balance));
            sigma_min = std::min(sigma_min, e.sigma_first_law);
            forms = std::max(forms, std::abs(e.sigma_first_law - e.sigma_relent));
        }
        bound(b, "first_law", fl, tol.first_law);
        bound(b, "energy_balance", bal, tol.first_law);
        if (b.thermo->second_law_applicable) {
            add(b, "second_law.nonnegative", sigma_min, -tol.second_law, sigma_min >= -tol.second_law);
            bound(b, "second_law.forms", forms, tol.second_law_forms);
        }
    }
    return b;
}

}  // namespace qcm::harness
