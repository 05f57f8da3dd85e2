#include <charconv>
#include <fstream>
#include <map>
#include <sstream>

#include <json.hpp>

#include "qcm/harness/run.hpp"

namespace qcm::harness {

namespace {

using json = nlohmann::ordered_json;

constexpr const char* kVersion = "qcm 0.1.0";

std::string num(double x) {
    char buf[32];
    const auto r = std::to_chars(buf, buf + sizeof buf, x);
    return std::string(buf, r.ptr);
}

std::string record_string(const Record& r) {
    std::string s;
    for (std::size_t i = 0; i < r.size(); ++i) {
        if (i) s += '.';
        s += std::to_string(r[i]);
    }
    return s;
}

json matrix_json(const Matrix& m) {
    json rows = json::array();
    for (Eigen::Index i = 0; i < m.rows(); ++i) {
        json row = json::array();
        for (Eigen::Index j = 0; j < m.cols(); ++j) row.push_back(format_complex(m(i, j)));
        rows.push_back(std::move(row));
    }
    return rows;
}

std::string kind_string(sim::SnapshotKind k) {
    switch (k) {
        case sim::SnapshotKind::initial: return "initial";
        case sim::SnapshotKind::before_first_step: return "before_first_step";
        case sim::SnapshotKind::report: break;
    }
    return "report";
}

json branches_json(const std::vector<BranchState>& v) {
    json out = json::array();
    for (const auto& b : v)
        out.push_back({{"time", b.time},
                       {"steps_done", b.steps_done},
                       {"record", b.record},
                       {"p", b.p},
                       {"rho_s", matrix_json(b.rho_s)}});
    return out;
}

json thermo_json(const thermo::ThermoLedger& l) {
    json ens = json::array();
    for (const auto& e : l.ensemble)
        ens.push_back({{"time", e.time},         {"kind", kind_string(e.kind)},
                       {"steps_done", e.steps_done}, {"total_p", e.total_p},
                       {"pruned_mass", e.pruned_mass}, {"U", e.U},
                       {"W", e.W},               {"W_alt", e.W_alt},
                       {"Q", e.Q},               {"Q_alt", e.Q_alt},
                       {"S", e.S},               {"F", e.F},
                       {"sigma_first_law", e.sigma_first_law}, {"sigma_relent", e.sigma_relent},
                       {"E_total", e.e_tot},     {"energy_balance", e.energy_balance}});
    json rows = json::array();
    for (const auto& r : l.rows)
        rows.push_back({{"time", r.time},     {"kind", kind_string(r.kind)}, {"steps_done", r.steps_done},
                        {"record", r.record}, {"p", r.p},                   {"u", r.u},
                        {"w_switch", r.w_s},  {"w_control", r.w_sa},        {"w_measure", r.w_ai},
                        {"w_measure_alt", r.w_ai_alt}, {"w", r.w},          {"w_alt", r.w_alt},
                        {"q", r.q},           {"q_alt", r.q_alt},           {"s", r.s},
                        {"f", r.f},           {"sigma", r.sigma},           {"E_total", r.e_tot}});
    return {{"beta", l.beta},
            {"second_law_applicable", l.second_law_applicable},
            {"work_conventions",
             {{"canonical", "w: measurement work from the ancilla energy change (default)"},
              {"alternative", "w_alt: measurement work from the system and ancilla energy change (TPM-compatible)"}}},
            {"ensemble", std::move(ens)},
            {"trajectories", std::move(rows)}};
}

json steps_json(const sim::SimResult& res, const std::vector<thermo::ConventionCheck>& conv) {
    json out = json::array();
    for (const auto& st : res.steps) {
        json controls = json::array(), meas = json::array();
        for (const auto& c : st.controls) controls.push_back({{"record", c.record}, {"work", c.work}});
        for (const auto& m : st.measurements)
            meas.push_back({{"record", m.record},
                            {"p_conditional", m.p_conditional},
                            {"w_measure", m.w_ai},
                            {"w_measure_alt", m.w_ai_alt}});
        json j{{"step", st.step}, {"pruned_mass", st.pruned_mass}, {"controls", std::move(controls)},
               {"measurements", std::move(meas)}};
        for (const auto& c : conv)
            if (c.step == st.step)
                j["convention"] = {{"max_average_gap", c.max_average_gap}, {"max_branch_gap", c.max_branch_gap}};
        out.push_back(std::move(j));
    }
    return out;
}

}  // namespace

std::string report_json(const ReportBundle& b) {
    json tol = json::object();
    for (const auto& [k, v] : b.tol.as_map()) tol[k] = v;
    json checks = json::array();
    for (const auto& c : b.checks) {
        json j{{"name", c.name}, {"value", c.value}, {"tolerance", c.tolerance}, {"passed", c.passed}};
        if (!c.detail.empty()) j["detail"] = c.detail;
        checks.push_back(std::move(j));
    }
    json eq{{"applicable", b.equivalence.applicable}};
    if (!b.equivalence.reason.empty()) eq["reason"] = b.equivalence.reason;
    if (b.equivalence.applicable) {
        eq["max_prob_dev"] = b.equivalence.max_prob_dev;
        eq["max_state_dev"] = b.equivalence.max_state_dev;
        eq["passed"] = b.equivalence.passed;
        json rows = json::array();
        for (const auto& r : b.equivalence.rows)
            rows.push_back({{"time", r.time},
                            {"record", r.record},
                            {"p_autonomous", r.p_autonomous},
                            {"p_process_tensor", r.p_direct},
                            {"prob_dev", r.prob_dev},
                            {"state_dev", r.state_dev}});
        eq["rows"] = std::move(rows);
    }

    json j{{"format", "qcm-report/1"},
           {"version", kVersion},
           {"command", b.command},
           {"scenario", {{"name", b.scenario_name}, {"checksum_fnv1a64", b.checksum}}},
           {"mode", to_string(b.mode)},
           {"seed", b.seed},
           {"max_branches", b.max_branches},
           {"tolerances", std::move(tol)},
           {"report_times", b.report_times},
           {"passed", b.passed()},
           {"checks", std::move(checks)},
           {"caveats", b.caveats},
           {"pruned_mass", b.pruned_mass},
           {"equivalence", std::move(eq)}};
    json branches = json::object();
    if (b.mode != Mode::process_tensor) branches["autonomous"] = branches_json(b.autonomous);
    if (b.mode != Mode::autonomous) branches["process_tensor"] = branches_json(b.direct);
    j["branches"] = std::move(branches);
    if (b.sim) {
        j["steps"] = steps_json(*b.sim, b.conventions);
        json sw = json::array();
        for (const auto& s : b.sim->switches)
            sw.push_back({{"time", s.time},   {"record", s.record}, {"from", s.h_old},
                          {"to", s.h_new},    {"work", s.work},     {"weight", s.weight}});
        j["switches"] = std::move(sw);
    }
    if (b.thermo) j["thermo"] = thermo_json(*b.thermo);
    return j.dump(2) + "\n";
}

std::string report_csv(const ReportBundle& b) {
    std::map<std::pair<double, Record>, const thermo::ThermoRow*> trow;
    if (b.thermo)
        for (const auto& r : b.thermo->rows)
            if (r.kind == sim::SnapshotKind::report) trow[{r.time, r.record}] = &r;

    std::size_t dim = 0;
    for (const auto* v : {&b.autonomous, &b.direct})
        if (!v->empty()) dim = static_cast<std::size_t>(v->front().rho_s.rows());

    std::ostringstream out;
    out << "source,time,steps_done,record,p";
    for (std::size_t i = 0; i < dim; ++i) out << ",pop_" << i;
    out << ",u,w,w_alt,q,q_alt,s,f,sigma,w_switch,w_control,w_measure,w_measure_alt,e_total\n";
    auto emit = [&](const char* source, const BranchState& s) {
        out << source << ',' << num(s.time) << ',' << s.steps_done << ',' << record_string(s.record) << ',' << num(s.p);
        for (std::size_t i = 0; i < dim; ++i) out << ',' << num(s.rho_s(i, i).real());
        const auto it = source[0] == 'a' ? trow.find({s.time, s.record}) : trow.end();
        if (it == trow.end()) {
            for (int i = 0; i < 13; ++i) out << ',';
        } else {
            const auto& r = *it->second;
            for (double x : {r.u, r.w, r.w_alt, r.q, r.q_alt, r.s, r.f, r.sigma, r.w_s, r.w_sa, r.w_ai, r.w_ai_alt, r.e_tot})
                out << ',' << num(x);
        }
        out << '\n';
    };
    for (const auto& s : b.autonomous) emit("autonomous", s);
    for (const auto& s : b.direct) emit("process-tensor", s);
    return out.str();
}

void write_report(const ReportBundle& b, const std::filesystem::path& dir) {
    std::filesystem::create_directories(dir);
    auto put = [&](const char* name, const std::string& text) {
        std::ofstream f(dir / name, std::ios::binary);
        if (!f) throw std::runtime_error("cannot write " + (dir / name).string());
        f << text;
    };
    put("report.json", report_json(b));
    put("branches.csv", report_csv(b));
    if (b.thermo) {
        std::ostringstream e;
        e << "time,kind,steps_done,total_p,pruned_mass,U,W,W_alt,Q,Q_alt,S,F,sigma_first_law,sigma_relent,e_total,"
             "energy_balance\n";
        for (const auto& r : b.thermo->ensemble) {
            e << num(r.time) << ',' << kind_string(r.kind) << ',' << r.steps_done;
            for (double x : {r.total_p, r.pruned_mass, r.U, r.W, r.W_alt, r.Q, r.Q_alt, r.S, r.F, r.sigma_first_law,
                             r.sigma_relent, r.e_tot, r.energy_balance})
                e << ',' << num(x);
            e << '\n';
        }
        put("ensemble.csv", e.str());
    }
}

}  // namespace qcm::harness
