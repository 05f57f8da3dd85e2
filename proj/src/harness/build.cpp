#include "qcm/harness/build.hpp"

#include <algorithm>
#include <cmath>
#include <limits>

#include "qcm/dilation/dilation.hpp"
#include "qcm/harness/random.hpp"
#include "qcm/ops/density.hpp"
#include "qcm/ops/kernels.hpp"
#include "qcm/ops/linalg.hpp"

namespace qcm::harness {

namespace {

constexpr double kLoose = std::numeric_limits<double>::max();

Matrix local_state(const StateSpec& st, const Matrix& h, std::size_t d) {
    switch (st.kind) {
        case StateSpec::Kind::gibbs: {
            const auto sp = eigh(h);
            const double e0 = sp.values.minCoeff();
            Matrix g = spectral_function(sp, [&](double e) { return cplx(std::exp(-st.beta * (e - e0)), 0.0); });
            return g / g.trace();
        }
        case StateSpec::Kind::matrix: return st.matrix;
        case StateSpec::Kind::pure: return st.vector * st.vector.adjoint();
        case StateSpec::Kind::maximally_mixed: break;
    }
    return Matrix::Identity(Eigen::Index(d), Eigen::Index(d)) / double(d);
}

sim::StepVariant make_variant(const InstrumentSpec& spec, Record prefix, std::size_t ds, std::size_t m,
                              const std::string& path, const BuildOptions& opt) {
    const double tol = opt.lenient ? kLoose : opt.tol.kraus;
    try {
        if (spec.dilation) {
            Tolerances t = opt.tol;
            if (opt.lenient) t.unitary = kLoose;
            auto hw = dilation::make_dilation(ds, spec.dilation->ancilla_state, spec.dilation->unitary,
                                              spec.dilation->projectors, t);
            auto inst = dilation::reconstruct_instrument(hw, opt.tol);
            return sim::StepVariant{std::move(prefix), std::move(inst), std::move(hw), {}};
        }
        channels::Instrument inst({"S"}, spec.outcomes, tol);
        auto hw = dilation::dilate_instrument(inst, m);
        return sim::StepVariant{std::move(prefix), std::move(inst), std::move(hw), {}};
    } catch (const std::invalid_argument& e) {
        throw ScenarioError(path, e.what());
    }
}

}  // namespace

Tolerances scenario_tolerances(const ScenarioFile& s, Tolerances base) {
    for (const auto& [k, v] : s.tolerances) {
        try {
            base.set(k, v);
        } catch (const std::invalid_argument& e) {
            throw ScenarioError("/tolerances/" + k, e.what());
        }
    }
    return base;
}

sim::Model build_model(const ScenarioFile& s, const BuildOptions& opt) {
    const std::size_t ds = s.system.dim, db = s.bath.dim;
    std::vector<Matrix> hs;
    std::vector<std::string> names;
    for (const auto& [name, m] : s.hamiltonians) {
        names.push_back(name);
        hs.push_back(m);
    }
    auto id_of = [&](const std::string& n) {
        return int(std::find(names.begin(), names.end(), n) - names.begin());
    };
    std::vector<channels::Segment> base;
    for (const auto& seg : s.segments) base.push_back({seg.start, id_of(seg.hamiltonian)});
    std::vector<channels::ProtocolOverride> ov;
    for (const auto& o : s.overrides) {
        channels::ProtocolOverride x{o.prefix, {}};
        for (const auto& seg : o.segments) x.segments.push_back({seg.start, id_of(seg.hamiltonian)});
        ov.push_back(std::move(x));
    }
    std::vector<double> outs;
    for (const auto& st : s.steps) outs.push_back(st.time + st.width);

    std::optional<channels::SystemBath> sb;
    try {
        sb.emplace(s.h_b, s.v_sb, channels::Protocol(hs, base, ov, outs));
    } catch (const std::invalid_argument& e) {
        throw ScenarioError("/protocol", e.what());
    }

    std::vector<sim::StepModel> steps;
    for (std::size_t k = 0; k < s.steps.size(); ++k) {
        const auto& st = s.steps[k];
        const std::string path = "/steps/" + std::to_string(k);
        const std::size_t m = ancilla_dim_of(st);
        sim::StepModel sm;
        sm.time = st.time;
        sm.width = st.width;
        sm.h_a = st.h_a ? *st.h_a : Matrix::Zero(Eigen::Index(m), Eigen::Index(m));
        sm.variants.push_back(make_variant(st.instrument, {}, ds, m, path + "/instrument", opt));
        for (std::size_t i = 0; i < st.feedback.size(); ++i)
            sm.variants.push_back(make_variant(st.feedback[i].instrument, st.feedback[i].prefix, ds, m,
                                               path + "/feedback/" + std::to_string(i), opt));
        steps.push_back(std::move(sm));
    }

    const int h0 = sb->protocol().before(s.t_start, {});
    Matrix rho;
    bool gibbs = false;
    if (s.joint_gibbs) {
        const auto sp = eigh(sb->hamiltonian(h0));
        const double e0 = sp.values.minCoeff(), b = *s.joint_gibbs;
        rho = spectral_function(sp, [&](double e) { return cplx(std::exp(-b * (e - e0)), 0.0); });
        rho /= rho.trace();
        gibbs = s.beta > 0.0 && b == s.beta;
    } else {
        const Matrix rs = local_state(*s.system.state, hs[std::size_t(h0)], ds);
        const StateSpec bath_state = s.bath.state.value_or(StateSpec{});
        const Matrix rb = local_state(bath_state, s.h_b, db);
        rho = kernels::kron(rs, rb);
        const bool s_g = s.system.state->kind == StateSpec::Kind::gibbs && s.system.state->beta == s.beta;
        const bool b_g = db == 1 || (bath_state.kind == StateSpec::Kind::gibbs && bath_state.beta == s.beta);
        gibbs = s.beta > 0.0 && s_g && b_g && max_norm(s.v_sb) == 0.0;
    }
    if (s.beta > 0.0 && s.second_law_checks && !gibbs)
        throw ScenarioError("/initial_state",
                            "second-law checks need a Gibbs S-B state at the scenario beta (set checks.second_law to false)");
    try {
        return sim::Model(std::move(*sb), std::move(steps), rho, s.t_start, s.beta, gibbs, s.e_idf, s.e_nidf);
    } catch (const std::invalid_argument& e) {
        throw ScenarioError("/steps", e.what());
    }
}

ScenarioFile random_scenario(std::uint64_t seed, const RandomScenarioOptions& opt) {
    random::Rng rng(seed);
    std::uniform_int_distribution<std::size_t> sq(1, std::max<std::size_t>(opt.max_system_qubits, 1));
    std::uniform_int_distribution<std::size_t> bq(1, std::max<std::size_t>(opt.max_bath_qubits, 1));
    std::uniform_int_distribution<std::size_t> ns(1, std::max<std::size_t>(opt.max_steps, 1));
    std::uniform_real_distribution<double> unit(0.0, 1.0);
    ScenarioFile s;
    s.name = "random-" + std::to_string(seed);
    s.system.dim = std::size_t(1) << sq(rng);
    s.bath.dim = std::size_t(1) << bq(rng);
    s.beta = 0.5 + 1.5 * unit(rng);
    s.joint_gibbs = s.beta;
    const std::size_t ds = s.system.dim;
    const std::size_t n_h = 2 + std::size_t(unit(rng) * 2);
    for (std::size_t i = 0; i < n_h; ++i) s.hamiltonians.emplace_back("H" + std::to_string(i), random::hermitian(ds, rng));
    s.h_b = random::hermitian(s.bath.dim, rng);
    s.v_sb = opt.coupling * random::hermitian(ds * s.bath.dim, rng);

    const std::size_t n = ns(rng);
    double t = 0.0;
    for (std::size_t k = 0; k < n; ++k) {
        t += 0.2 + 0.6 * unit(rng);
        StepSpec st;
        st.time = t;
        const std::size_t outcomes = 2 + std::size_t(unit(rng) * 2);
        const std::size_t kraus = outcomes + std::size_t(unit(rng) * 2);
        st.instrument.outcomes = random::instrument(ds, std::min<std::size_t>(kraus, 4), outcomes, rng);
        if (unit(rng) < 0.5) st.h_a = random::hermitian(ancilla_dim_of(st), rng, 0.5);
        if (opt.feedback && k > 0) {
            FeedbackSpec f;
            f.prefix = {int(1 + std::size_t(unit(rng) * double(s.steps.front().instrument.outcomes.size())))};
            f.instrument.outcomes = random::instrument(ds, outcomes, outcomes, rng);
            st.feedback.push_back(std::move(f));
            if (st.h_a) st.h_a = random::hermitian(ancilla_dim_of(st), rng, 0.5);
        }
        s.steps.push_back(std::move(st));
    }
    // base protocol switches between the steps, one override keyed on the first outcome
    s.segments.push_back({0.0, "H0"});
    s.segments.push_back({0.1 + (t + 0.2) * unit(rng), "H1"});
    if (s.segments[1].start <= 0.0) s.segments[1].start = 0.05;
    if (opt.feedback) {
        OverrideSpec o;
        o.prefix = {2};
        o.segments.push_back({s.steps.front().time + 0.05 + 0.3 * unit(rng), "H" + std::to_string(n_h - 1)});
        s.overrides.push_back(std::move(o));
    }
    for (const auto& st : s.steps) s.report_times.push_back(st.time);
    s.report_times.push_back(0.5 * s.steps.front().time);
    s.report_times.push_back(t + 0.3);
    std::sort(s.report_times.begin(), s.report_times.end());
    return s;
}

}  // namespace qcm::harness
