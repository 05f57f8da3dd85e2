#include "qcm/thermo/ledger.hpp"

#include <algorithm>
#include <cmath>
#include <map>
#include <stdexcept>

#include "qcm/ops/density.hpp"
#include "qcm/ops/kernels.hpp"
#include "qcm/thermo/functionals.hpp"

namespace qcm::thermo {

namespace {

bool is_prefix_of(const Record& a, const Record& b) {
    return a.size() <= b.size() && std::equal(a.begin(), a.end(), b.begin());
}

struct Ancilla0 {
    double energy = 0.0;
    double entropy = 0.0;
};

}  // namespace

std::vector<std::string> thermo_preconditions(const sim::Model& model, const sim::SimOptions& opt) {
    std::vector<std::string> out;
    if (!(model.beta() > 0.0)) out.push_back("thermodynamics needs an inverse temperature beta > 0");
    if (!opt.keep_spent_ancillas) out.push_back("thermodynamics needs the spent ancillas kept in the branch states");
    for (std::size_t k = 0; k < model.steps().size(); ++k)
        if (!model.step(k).branch_independent_ancilla())
            out.push_back("step " + std::to_string(k) + ": ancilla preparation depends on earlier outcomes");
    return out;
}

ThermoLedger build_ledger(const sim::Model& model, const sim::SimResult& res, double dbeta) {
    sim::SimOptions probe;
    if (!res.snapshots.empty())
        for (const auto& s : res.snapshots)
            for (const auto& b : s.branches)
                if (b.ancillas.size() < s.steps_done) probe.keep_spent_ancillas = false;
    if (auto bad = thermo_preconditions(model, probe); !bad.empty()) throw std::domain_error(bad.front());
    if (res.snapshots.empty() || res.snapshots.front().kind != sim::SnapshotKind::initial)
        throw std::invalid_argument("ledger needs the initial snapshot");

    const double beta = model.beta();
    const auto& sb = model.sb();
    const std::size_t ds = sb.dim_s();
    const Matrix h_b = sb.h_b();
    ThermoLedger led;
    led.beta = beta;
    led.second_law_applicable = model.gibbs_initial();
    if (!model.gibbs_initial())
        led.caveats.push_back("initial S-B state is not a declared Gibbs state; the second law is not guaranteed");
    if (max_norm(sb.v_sb()) > 0.0)
        for (const auto& s : model.steps())
            if (s.width == 0.0) {
                led.caveats.push_back(
                    "instantaneous controls with S-B coupling: control work includes the change of <V_SB> and is not "
                    "accessible from S and A alone");
                break;
            }

    std::map<int, MeanForceData> mf;
    auto mean_force = [&](int h) -> const MeanForceData& {
        auto it = mf.find(h);
        if (it == mf.end()) it = mf.emplace(h, mean_force_hamiltonian(sb.hamiltonian(h), h_b, ds, beta, dbeta)).first;
        return it->second;
    };

    std::vector<Ancilla0> anc0;
    double s_ancillas0 = 0.0;
    for (const auto& s : model.steps()) {
        const Matrix& ra = s.variants.front().hardware.ancilla_state;
        anc0.push_back({trace_product(s.h_a, ra), von_neumann_entropy(ra)});
        s_ancillas0 += anc0.back().entropy;
    }
    const double s_sb0 = von_neumann_entropy(model.rho_sb());
    const double ln_zb = log_partition(h_b, beta);

    double u0 = 0.0, s0 = 0.0, e0 = 0.0;
    for (std::size_t si = 0; si < res.snapshots.size(); ++si) {
        const auto& snap = res.snapshots[si];
        EnsembleRow ens;
        ens.time = snap.time;
        ens.kind = snap.kind;
        ens.steps_done = snap.steps_done;
        ens.pruned_mass = snap.pruned_mass;
        double relent_bracket = 0.0;  // Σ p [ln p - S - S_fut + β<H*> + β<H_A>]
        for (const auto& b : snap.branches) {
            const auto& m = mean_force(b.h);
            std::vector<std::size_t> dims{ds};
            for (auto j : b.ancillas) dims.push_back(model.step(j).ancilla_dim());
            const std::vector<std::size_t> s_only{0};
            const Matrix rho_s = kernels::partial_trace(b.rho_sa, dims, s_only);
            double ha = 0.0, ha_fut = 0.0, s_fut = 0.0;
            for (std::size_t i = 0; i < b.ancillas.size(); ++i) {
                const std::vector<std::size_t> p{i + 1};
                ha += trace_product(model.step(b.ancillas[i]).h_a, kernels::partial_trace(b.rho_sa, dims, p));
            }
            for (std::size_t j = snap.steps_done; j < model.steps().size(); ++j) {
                ha_fut += anc0[j].energy;
                s_fut += anc0[j].entropy;
            }
            ThermoRow r;
            r.time = snap.time;
            r.kind = snap.kind;
            r.steps_done = snap.steps_done;
            r.record = b.record;
            r.p = b.weight;
            const double h_star = trace_product(m.h_star, rho_s);
            const double dh_star = trace_product(m.dbeta_h_star, rho_s);
            const double s_vn = von_neumann_entropy(b.rho_sa);
            r.u = h_star + beta * dh_star + ha + ha_fut;
            r.s = -std::log(b.weight) + s_vn + beta * beta * dh_star + s_fut;
            r.f = r.u - r.s / beta;
            r.e_tot = b.e_sb + ha + ha_fut;
            r.w_s = b.acc.w_s;
            r.w_sa = b.acc.w_sa;
            r.w_ai = b.acc.w_ai;
            r.w_ai_alt = b.acc.w_ai_alt;
            r.w = r.w_s + r.w_sa + r.w_ai;
            r.w_alt = r.w_s + r.w_sa + r.w_ai_alt;
            if (si == 0) {
                u0 = r.u;
                s0 = r.s;
                e0 = r.e_tot;
            }
            r.q = (r.u - u0) - r.w;
            r.q_alt = (r.u - u0) - r.w_alt;
            r.sigma = (r.s - s0) - beta * r.q;

            ens.total_p += r.p;
            ens.U += r.p * r.u;
            ens.W += r.p * r.w;
            ens.W_alt += r.p * r.w_alt;
            ens.S += r.p * r.s;
            ens.e_tot += r.p * r.e_tot;
            relent_bracket += r.p * (std::log(b.weight) - s_vn - s_fut + beta * h_star + beta * (ha + ha_fut));
            led.rows.push_back(std::move(r));
        }
        ens.Q = (ens.U - u0) - ens.W;
        ens.Q_alt = (ens.U - u0) - ens.W_alt;
        ens.F = ens.U - ens.S / beta;
        ens.sigma_first_law = (ens.S - s0) - beta * ens.Q;
        // D[ρ_tot || π_XB ⊗ π_N] - D[ρ_X || π*_X]; ln Z_XB enters both and cancels,
        // the NIDF and the stored-outcome registers cancel as well
        const double d_tot = beta * ens.e_tot - s_sb0 - s_ancillas0;
        const double d_x = relent_bracket - ln_zb;
        ens.sigma_relent = d_tot - d_x;
        ens.energy_balance = ens.W - (ens.e_tot - e0);
        led.ensemble.push_back(ens);
    }
    return led;
}

std::vector<ConventionCheck> convention_checks(const sim::SimResult& res) {
    std::vector<ConventionCheck> out;
    for (const auto& st : res.steps) {
        ConventionCheck c;
        c.step = st.step;
        std::map<Record, double> by_parent;
        for (const auto& m : st.measurements) {
            const double gap = m.w_ai - m.w_ai_alt;
            c.max_branch_gap = std::max(c.max_branch_gap, std::abs(gap));
            const Record parent(m.record.begin(), m.record.end() - 1);
            by_parent[parent] += m.p_conditional * gap;
        }
        for (const auto& [r, g] : by_parent) c.max_average_gap = std::max(c.max_average_gap, std::abs(g));
        out.push_back(c);
    }
    return out;
}

std::vector<TpmBin> tpm_histogram(const sim::Model& model, const ThermoLedger& ledger, double t_from, double t_to,
                                  double merge_tol) {
    if (model.sb().dim_b() > 1 && max_norm(model.sb().v_sb()) > 0.0)
        throw std::domain_error("two-point statistics are reproduced for isolated systems only");
    if (t_to < t_from) throw std::invalid_argument("tpm window runs backwards");
    auto rows_at = [&](double t) {
        std::vector<const ThermoRow*> rows;
        // the last snapshot at that time is the post-intervention one
        std::size_t last_kind_idx = 0;
        for (std::size_t i = 0; i < ledger.ensemble.size(); ++i)
            if (ledger.ensemble[i].time == t) last_kind_idx = i + 1;
        if (last_kind_idx == 0) throw std::invalid_argument("no snapshot at the requested time");
        const auto& e = ledger.ensemble[last_kind_idx - 1];
        for (const auto& r : ledger.rows)
            if (r.time == t && r.kind == e.kind && r.steps_done == e.steps_done) rows.push_back(&r);
        return rows;
    };
    const auto from = rows_at(t_from), to = rows_at(t_to);
    std::vector<TpmBin> bins;
    for (const auto* r : to) {
        const ThermoRow* parent = nullptr;
        for (const auto* f : from)
            if (is_prefix_of(f->record, r->record) && (!parent || f->record.size() > parent->record.size())) parent = f;
        if (!parent) throw std::invalid_argument("tpm: branch has no ancestor at the start time");
        const double w = r->w_alt - parent->w_alt;
        auto it = std::find_if(bins.begin(), bins.end(), [&](const TpmBin& b) { return std::abs(b.work - w) <= merge_tol; });
        if (it == bins.end())
            bins.push_back({w, r->p});
        else
            it->probability += r->p;
    }
    std::sort(bins.begin(), bins.end(), [](const TpmBin& a, const TpmBin& b) { return a.work < b.work; });
    return bins;
}

}  // namespace qcm::thermo
