#include <gtest/gtest.h>

#include "oracles.hpp"
#include "qcm/channels/kraus.hpp"
#include "qcm/channels/process_tensor.hpp"
#include "qcm/harness/random.hpp"
#include "qcm/ops/kernels.hpp"
#include "qcm/ops/linalg.hpp"

using namespace qcm;
using namespace qcm::channels;

namespace {

Matrix diag2(double a, double b) {
    Matrix m = Matrix::Zero(2, 2);
    m(0, 0) = a;
    m(1, 1) = b;
    return m;
}

Matrix sx() {
    Matrix x(2, 2);
    x << 0, 1, 1, 0;
    return x;
}

std::vector<std::vector<Matrix>> z_measurement() { return {{diag2(1, 0)}, {diag2(0, 1)}}; }

// driven qubit, qubit bath with exchange coupling
SystemBath driven_qubit(double g, const Record& fb_prefix = {}, std::vector<double> outcome_times = {}) {
    std::vector<Matrix> hs{diag2(0, 1), diag2(0, 1) + 0.4 * sx(), diag2(0, 1.5)};
    std::vector<Segment> base{{0.0, 0}, {0.35, 1}, {0.9, 0}};
    std::vector<ProtocolOverride> ov;
    if (!fb_prefix.empty()) ov.push_back({fb_prefix, {{0.6, 2}}});
    Protocol p(hs, base, ov, std::move(outcome_times));
    Matrix v = g * (kernels::kron(sx(), sx()));
    return {diag2(0, 0.8), v, p};
}

// p(r) and states by explicit propagation with Schur-Parlett exponentials
Matrix brute_force(const SystemBath& sb, const std::vector<std::vector<Matrix>>& ops, const std::vector<double>& times,
                   const Matrix& rho0, double t_end, const std::vector<std::pair<double, int>>& pieces) {
    // pieces: (start time, hamiltonian id) valid for the whole run
    auto evolve = [&](Matrix rho, double ta, double tb) {
        for (std::size_t i = 0; i < pieces.size(); ++i) {
            const double s = std::max(ta, pieces[i].first);
            const double e = std::min(tb, i + 1 < pieces.size() ? pieces[i + 1].first : 1e300);
            if (e <= s) continue;
            const Matrix u = oracle::expm(cplx(0, -(e - s)) * sb.hamiltonian(pieces[i].second));
            rho = u * rho * u.adjoint();
        }
        return rho;
    };
    Matrix rho = rho0;
    double t = 0.0;
    for (std::size_t k = 0; k < ops.size(); ++k) {
        rho = evolve(rho, t, times[k]);
        Matrix out = Matrix::Zero(rho.rows(), rho.cols());
        for (const auto& kr : ops[k]) {
            const Matrix big = kernels::kron(kr, Matrix::Identity(2, 2));
            out += big * rho * big.adjoint();
        }
        rho = out;
        t = times[k];
    }
    return evolve(rho, t, t_end);
}

DensityOperator gibbs_sb(const SystemBath& sb, int h, double beta) {
    return gibbs_state(Operator(sb.registry(), {"S", "B"}, sb.hamiltonian(h)), beta).state;
}

}  // namespace

TEST(ApplyCp, IdentityAndBornRule) {
    auto reg = std::make_shared<FactorRegistry>(std::vector<FactorRegistry::Factor>{{"S", 2}});
    const auto rho = DensityOperator::normalized(Operator(reg, {"S"}, diag2(0.3, 0.7)));
    const auto id = apply_cp(KrausChannel::identity({"S"}, 2), rho);
    EXPECT_NEAR(id.weight(), 1.0, 1e-15);
    EXPECT_LT(max_norm(id.matrix() - rho.matrix()), 1e-15);
    const Instrument z({"S"}, z_measurement());
    const auto r1 = apply_cp(z, 1, rho);
    EXPECT_NEAR(r1.weight(), 0.3, 1e-15);
    EXPECT_LT(max_norm(r1.normalize().matrix() - diag2(1, 0)), 1e-15);
    EXPECT_THROW(apply_cp(z, 3, rho), std::invalid_argument);
}

TEST(ApplyCp, RandomInstrumentMatchesSuperoperatorOracle) {
    random::Rng rng(31);
    auto reg = std::make_shared<FactorRegistry>(std::vector<FactorRegistry::Factor>{{"S", 3}});
    for (int trial = 0; trial < 10; ++trial) {
        const Instrument inst({"S"}, random::instrument(3, 4, 3, rng));
        const Matrix rho = random::density(3, rng);
        const auto state = DensityOperator::normalized(Operator(reg, {"S"}, rho));
        double total = 0.0;
        for (int r = 1; r <= 3; ++r) {
            // vec(out)_{ij} = sum_a sum_kl K_ik rho_kl conj(K_jl)
            Matrix expect = Matrix::Zero(3, 3);
            for (const auto& k : inst.kraus(r))
                for (int i = 0; i < 3; ++i)
                    for (int j = 0; j < 3; ++j)
                        for (int a = 0; a < 3; ++a)
                            for (int b = 0; b < 3; ++b) expect(i, j) += k(i, a) * rho(a, b) * std::conj(k(j, b));
            const auto out = apply_cp(inst, r, state);
            EXPECT_LT(max_norm(out.matrix() - expect), 1e-13);
            Vector vec(9);
            for (int i = 0; i < 9; ++i) vec(i) = rho(i / 3, i % 3);
            const Vector sv = superoperator(inst.kraus(r)) * vec;
            for (int i = 0; i < 9; ++i) EXPECT_NEAR(std::abs(sv(i) - expect(i / 3, i % 3)), 0.0, 1e-13);
            total += out.weight();
        }
        EXPECT_NEAR(total, 1.0, 1e-12);
        EXPECT_GE(choi_min_eigenvalue(inst.flattened()), -1e-10);
    }
}

TEST(Instrument, Validation) {
    EXPECT_THROW(Instrument({"S"}, {{diag2(1, 0)}}), std::invalid_argument);
    EXPECT_THROW(Instrument({"S"}, {{diag2(1, 0)}, {}}), std::invalid_argument);
    EXPECT_THROW(KrausChannel({"S"}, {0.9 * Matrix::Identity(2, 2)}), std::invalid_argument);
    const Instrument z({"S"}, z_measurement());
    EXPECT_EQ(z.outcomes(), 2u);
    EXPECT_EQ(z.flattened_outcomes(), (std::vector<int>{1, 2}));
}

TEST(Protocol, BeforeAfterAndOverrides) {
    std::vector<Matrix> hs{diag2(0, 1), diag2(0, 2), diag2(0, 3), diag2(0, 4)};
    Protocol p(hs, {{0.0, 0}, {1.0, 1}}, {{{2}, {{0.5, 2}}}, {{2, 1}, {{1.5, 3}}}}, {0.5, 1.2});
    EXPECT_EQ(p.before(1.0, {}), 0);
    EXPECT_EQ(p.after(1.0, {}), 1);
    EXPECT_EQ(p.before(-5.0, {}), 0);
    // override for r_0 = 2 acts after t_0 = 0.5, not before
    EXPECT_EQ(p.before(0.5, {2}), 0);
    EXPECT_EQ(p.after(0.5, {2}), 2);
    EXPECT_EQ(p.after(0.5, {1}), 0);
    EXPECT_EQ(p.after(1.1, {2}), 2);
    EXPECT_EQ(p.after(1.6, {2, 1}), 3);
    EXPECT_EQ(p.after(1.6, {2, 2}), 2);
    EXPECT_EQ(p.switch_times(0.0, 2.0, {}), (std::vector<double>{1.0}));
    EXPECT_EQ(p.switch_times(0.5, 2.0, {2, 1}), (std::vector<double>{1.5}));
    EXPECT_THROW(Protocol(hs, {{0.0, 0}}, {{{1, 1, 1}, {{0.0, 1}}}}, {0.5, 1.2}), std::invalid_argument);
    EXPECT_THROW(Protocol(hs, {{1.0, 0}, {0.5, 1}}), std::invalid_argument);
}

TEST(ProcessTensor, GlobalGibbsIsStationary) {
    Protocol p({diag2(0, 1)}, {{0.0, 0}}, {}, {});
    SystemBath sb(diag2(0, 0.7), 0.3 * kernels::kron(sx(), sx()), p);
    const auto pi = gibbs_sb(sb, 0, 1.1);
    const auto out = evaluate_process_tensor(sb, InterventionSchedule{}, {}, pi, 0.0, 3.7);
    EXPECT_NEAR(out.weight(), 1.0, 1e-12);
    EXPECT_LT(max_norm(out.matrix() - pi.op().partial_trace(std::vector<std::string>{"S"}).matrix()), 1e-12);
}

TEST(ProcessTensor, IdentityInterventionIsBareEvolution) {
    const SystemBath sb = driven_qubit(0.4, {}, {0.5});
    random::Rng rng(2);
    const auto rho = DensityOperator::normalized(Operator(sb.registry(), {"S", "B"}, random::density(4, rng)));
    InterventionSchedule sched({{0.5, Instrument(KrausChannel::identity({"S"}, 2)), {}}});
    const auto with = evaluate_process_tensor_sb(sb, sched, {1}, rho, 0.0, 1.3);
    const Matrix bare = sb.evolve(rho.matrix(), 0.0, 1.3, {});
    EXPECT_LT(max_norm(with.matrix() - bare), 1e-13);
}

TEST(ProcessTensor, MatchesKrausSequenceEnumeration) {
    const SystemBath sb = driven_qubit(0.35, {}, {0.2, 0.7});
    Matrix h(2, 2);
    h << 1, 1, 1, -1;
    h /= std::sqrt(2.0);
    const Instrument z({"S"}, z_measurement());
    const Instrument xm({"S"}, {{h * diag2(1, 0) * h}, {h * diag2(0, 1) * h}});
    InterventionSchedule sched({{0.2, z, {}}, {0.7, xm, {}}});
    const auto pi = gibbs_sb(sb, 0, 0.9);
    const std::vector<std::pair<double, int>> pieces{{0.0, 0}, {0.35, 1}, {0.9, 0}};
    double total = 0.0;
    for (const auto& r : sched.records(2)) {
        const auto out = evaluate_process_tensor_sb(sb, sched, r, pi, 0.0, 1.2);
        const Matrix expect = brute_force(sb, {z.kraus(r[0]), xm.kraus(r[1])}, {0.2, 0.7}, pi.matrix(), 1.2, pieces);
        EXPECT_LT(max_norm(out.matrix() - expect), 1e-12);
        total += out.weight();
    }
    EXPECT_NEAR(total, 1.0, 1e-10);
}

TEST(ProcessTensor, FeedbackTotalProbabilityAndErrors) {
    const SystemBath sb = driven_qubit(0.5, {2}, {0.2, 0.7, 1.0});
    random::Rng rng(4);
    const Instrument a({"S"}, random::instrument(2, 3, 2, rng));
    const Instrument b({"S"}, random::instrument(2, 2, 2, rng));
    InterventionSchedule sched({{0.2, a, {}}, {0.7, a, {{{2}, b}}}, {1.0, b, {{{1, 1}, a}}}});
    const auto pi = gibbs_sb(sb, 0, 1.0);
    double total = 0.0;
    for (const auto& r : sched.records(3)) total += evaluate_process_tensor(sb, sched, r, pi, 0.0, 1.4).weight();
    EXPECT_NEAR(total, 1.0, 1e-10);
    EXPECT_THROW(evaluate_process_tensor(sb, sched, {1, 2, 1}, pi, 0.0, 0.9), std::invalid_argument);
    EXPECT_THROW(evaluate_process_tensor(sb, sched, {1, 3, 1}, pi, 0.0, 1.4), std::invalid_argument);
    EXPECT_THROW(InterventionSchedule({{0.2, a, {{{1}, b}}}}), std::invalid_argument);
    EXPECT_THROW(InterventionSchedule({{0.2, a, {}}, {0.1, a, {}}}), std::invalid_argument);
}

TEST(ProcessTensor, Multilinearity) {
    const SystemBath sb = driven_qubit(0.3, {}, {0.2, 0.6});
    random::Rng rng(5);
    const std::vector<std::vector<Matrix>> ops{random::kraus(2, 2, rng), random::instrument(2, 3, 2, rng)[0]};
    const std::vector<std::vector<Matrix>> alt{random::instrument(2, 2, 2, rng)[1], random::kraus(2, 1, rng)};
    const Matrix rho = gibbs_sb(sb, 0, 1.0).matrix();
    const std::vector<double> times{0.2, 0.6};
    for (double alpha : {1.0, 0.0, 0.37}) {
        const auto rep = multilinearity_check(sb, times, ops, alt, alpha, {1, 1}, rho, 0.0, 1.0);
        EXPECT_TRUE(rep.passed) << alpha << " " << rep.max_deviation;
    }
}
