#include <gtest/gtest.h>

#include <numbers>

#include "oracles.hpp"
#include "qcm/harness/random.hpp"
#include "qcm/ops/density.hpp"
#include "qcm/ops/kernels.hpp"
#include "qcm/ops/linalg.hpp"
#include "qcm/ops/operator.hpp"

using namespace qcm;

namespace {

RegistryPtr make_registry(std::vector<FactorRegistry::Factor> f) { return std::make_shared<FactorRegistry>(std::move(f)); }

Matrix diag(std::initializer_list<double> v) {
    Matrix m = Matrix::Zero(Eigen::Index(v.size()), Eigen::Index(v.size()));
    Eigen::Index i = 0;
    for (double x : v) {
        m(i, i) = x;
        ++i;
    }
    return m;
}

Matrix pauli_x() {
    Matrix x(2, 2);
    x << 0, 1, 1, 0;
    return x;
}

}  // namespace

TEST(Registry, RejectsBadLabelsAndDims) {
    EXPECT_THROW(FactorRegistry({{"S", 2}, {"S", 2}}), std::invalid_argument);
    EXPECT_THROW(FactorRegistry({{"Q", 2}}), std::invalid_argument);
    EXPECT_THROW(FactorRegistry({{"S", 0}}), std::invalid_argument);
    FactorRegistry reg({{"S", 2}, {"B", 3}, {"A0", 2}, {"I0", 2}, {"N0", 2}, {"P", 1}});
    EXPECT_EQ(reg.total_dim(), 48u);
    EXPECT_EQ(reg.index_of("A0"), 2u);
    EXPECT_THROW(reg.index_of("A1"), std::invalid_argument);
}

TEST(Tensor, IdentityAndProjectors) {
    auto reg = make_registry({{"S", 2}, {"B", 2}});
    const Operator a(reg, {"S"}, Matrix::Identity(2, 2));
    const Operator b(reg, {"B"}, Matrix::Identity(2, 2));
    EXPECT_LT(max_norm(tensor(a, b).matrix() - Matrix::Identity(4, 4)), 1e-15);
    const Operator p(reg, {"S"}, diag({1, 0}));
    const Operator q(reg, {"B"}, diag({0, 1}));
    EXPECT_LT(max_norm(tensor(p, q).matrix() - diag({0, 1, 0, 0})), 1e-15);
    // order of arguments does not change the registry order
    EXPECT_LT(max_norm(tensor(q, p).matrix() - diag({0, 1, 0, 0})), 1e-15);
}

TEST(Tensor, MatchesIndexFormula) {
    random::Rng rng(11);
    auto reg = make_registry({{"S", 2}, {"B", 3}});
    const Matrix a = random::hermitian(2, rng), b = random::hermitian(3, rng);
    const Matrix k = tensor(Operator(reg, {"S"}, a), Operator(reg, {"B"}, b)).matrix();
    for (int i = 0; i < 2; ++i)
        for (int j = 0; j < 3; ++j)
            for (int kk = 0; kk < 2; ++kk)
                for (int l = 0; l < 3; ++l) EXPECT_NEAR(std::abs(k(i * 3 + j, kk * 3 + l) - a(i, kk) * b(j, l)), 0.0, 1e-14);
}

TEST(Tensor, RejectsOverlapAndForeignRegistry) {
    auto reg = make_registry({{"S", 2}, {"B", 2}});
    auto other = make_registry({{"S", 2}, {"B", 2}});
    const Operator a(reg, {"S"}, Matrix::Identity(2, 2));
    EXPECT_THROW(tensor(a, a), std::invalid_argument);
    EXPECT_THROW(tensor(a, Operator(other, {"B"}, Matrix::Identity(2, 2))), std::invalid_argument);
}

TEST(PartialTrace, ProductAndBellState) {
    random::Rng rng(3);
    auto reg = make_registry({{"S", 2}, {"B", 3}});
    const Matrix rs = random::density(2, rng), rb = random::density(3, rng);
    const auto prod = DensityOperator::normalized(tensor(Operator(reg, {"S"}, rs), Operator(reg, {"B"}, rb)));
    EXPECT_LT(max_norm(partial_trace(prod, Support::of(*reg, {"S"})).matrix() - rs), 1e-14);
    EXPECT_LT(max_norm(partial_trace(prod, Support::of(*reg, {"B"})).matrix() - rb), 1e-14);

    auto reg2 = make_registry({{"S", 2}, {"A0", 2}});
    Vector bell = Vector::Zero(4);
    bell(0) = bell(3) = 1.0 / std::sqrt(2.0);
    const auto rho = DensityOperator::normalized(Operator(reg2, {"S", "A0"}, bell * bell.adjoint()));
    EXPECT_LT(max_norm(partial_trace(rho, Support::of(*reg2, {"S"})).matrix() - 0.5 * Matrix::Identity(2, 2)), 1e-15);
}

TEST(PartialTrace, MatchesIndexSumOnThreeFactors) {
    random::Rng rng(5);
    auto reg = make_registry({{"S", 2}, {"B", 3}, {"A0", 2}});
    const Matrix rho = random::density(12, rng);
    const auto op = DensityOperator::normalized(Operator(reg, {"S", "B", "A0"}, rho));
    const std::vector<std::size_t> dims{2, 3, 2};
    const char* labels[] = {"S", "B", "A0"};
    for (std::size_t out = 0; out < 3; ++out) {
        std::vector<std::string> keep;
        for (std::size_t i = 0; i < 3; ++i)
            if (i != out) keep.push_back(labels[i]);
        const auto r = partial_trace(op, Support::of(*reg, keep));
        EXPECT_LT(max_norm(r.matrix() - oracle::trace_factor(rho, dims, out)), 1e-14);
        EXPECT_NEAR(r.matrix().trace().real(), 1.0, 1e-12);
    }
    EXPECT_THROW(op.op().partial_trace(std::vector<std::string>{"P"}), std::invalid_argument);
}

TEST(PartialTrace, RecoversMarginalsOfRandomProducts) {
    random::Rng rng(21);
    auto reg = make_registry({{"S", 3}, {"B", 2}, {"A0", 2}});
    for (int trial = 0; trial < 10; ++trial) {
        const Matrix a = random::density(3, rng), b = random::density(2, rng), c = random::density(2, rng);
        const Operator t = tensor(tensor(Operator(reg, {"S"}, a), Operator(reg, {"A0"}, c)), Operator(reg, {"B"}, b));
        EXPECT_LT(max_norm(t.partial_trace(std::vector<std::string>{"B"}).matrix() - b), 1e-14);
        EXPECT_LT(max_norm(t.partial_trace(std::vector<std::string>{"A0"}).matrix() - c), 1e-14);
        EXPECT_LT(max_norm(t.partial_trace(std::vector<std::string>{"S", "A0"}).matrix() - kernels::kron(a, c)), 1e-14);
    }
}

TEST(HermExp, ZeroTimeAndPauli) {
    random::Rng rng(1);
    const Matrix h = random::hermitian(3, rng);
    EXPECT_LT(max_norm(herm_exp(h, cplx(0.0, 0.0)) - Matrix::Identity(3, 3)), 1e-14);
    const Matrix u = herm_exp(pauli_x(), cplx(0.0, -std::numbers::pi / 2));
    EXPECT_LT(max_norm(u - cplx(0.0, -1.0) * pauli_x()), 1e-15);
}

TEST(HermExp, MatchesTaylorOracle) {
    random::Rng rng(2);
    for (int trial = 0; trial < 5; ++trial) {
        const Matrix h = random::hermitian(4, rng);
        const cplx scale(0.0, -0.7 - trial);
        EXPECT_LT(max_norm(herm_exp(h, scale) - oracle::taylor_exp(scale * h)), 1e-10);
        EXPECT_LT(max_norm(herm_exp(h, cplx(-0.3, 0.0)) - oracle::taylor_exp(-0.3 * h)), 1e-10);
    }
}

TEST(HermExp, UnitaryForImaginaryScale) {
    random::Rng rng(4);
    for (int trial = 0; trial < 20; ++trial) {
        const std::size_t d = 2 + trial % 6;
        const Matrix u = herm_exp(random::hermitian(d, rng, 3.0), cplx(0.0, 10.0 * (trial - 10)));
        EXPECT_LT(unitarity_residual(u), 1e-11);
    }
    Matrix nh = Matrix::Zero(2, 2);
    nh(0, 1) = 1.0;
    EXPECT_THROW(herm_exp(nh, cplx(0.0, 1.0)), std::invalid_argument);
}

TEST(UnitaryGenerator, InvertsExponential) {
    random::Rng rng(8);
    for (int trial = 0; trial < 10; ++trial) {
        const Matrix u = random::unitary(4, rng);
        const Matrix x = unitary_generator(u);
        EXPECT_LT(hermiticity_residual(x), 1e-12);
        EXPECT_LT(max_norm(oracle::expm(cplx(0.0, -1.0) * x) - u), 1e-10);
    }
}

TEST(Entropy, PureMixedAndScalar) {
    random::Rng rng(6);
    const Vector v = random::pure(3, rng);
    EXPECT_NEAR(von_neumann_entropy(Matrix(v * v.adjoint())), 0.0, 1e-12);
    EXPECT_NEAR(von_neumann_entropy(Matrix(Matrix::Identity(5, 5) / 5.0)), std::log(5.0), 1e-13);
    EXPECT_NEAR(von_neumann_entropy(diag({0.25, 0.75})), 0.5623351446188083, 1e-15);
    EXPECT_NEAR(von_neumann_entropy(diag({0.25, 0.75})), oracle::entropy_of({0.25, 0.75}), 1e-15);
    EXPECT_THROW(von_neumann_entropy(diag({1.1, -0.1})), std::domain_error);
}

TEST(Entropy, InvariantUnderUnitaries) {
    random::Rng rng(7);
    for (int trial = 0; trial < 20; ++trial) {
        const Matrix rho = random::density(4, rng, 1 + trial % 4);
        const Matrix u = random::unitary(4, rng);
        const double s = von_neumann_entropy(rho);
        EXPECT_GE(s, -1e-12);
        EXPECT_NEAR(von_neumann_entropy(Matrix(u * rho * u.adjoint())), s, 1e-10);
    }
}

TEST(RelativeEntropy, AnalyticCases) {
    random::Rng rng(9);
    const Matrix rho = random::density(3, rng);
    EXPECT_NEAR(relative_entropy(rho, rho), 0.0, 1e-12);
    EXPECT_NEAR(relative_entropy(diag({1, 0}), Matrix(0.5 * Matrix::Identity(2, 2))), std::log(2.0), 1e-14);
    EXPECT_TRUE(is_infinite_divergence(relative_entropy(Matrix(0.5 * Matrix::Identity(2, 2)), diag({1, 0}))));
}

TEST(RelativeEntropy, MatchesLogmOracle) {
    random::Rng rng(10);
    for (int trial = 0; trial < 20; ++trial) {
        const Matrix a = random::density(2, rng), b = random::density(2, rng);
        EXPECT_NEAR(relative_entropy(a, b), oracle::relative_entropy(a, b), 1e-10);
    }
}

TEST(RelativeEntropy, ZeroExactlyForEqualStates) {
    random::Rng rng(12);
    for (int trial = 0; trial < 30; ++trial) {
        const Matrix a = random::density(3, rng);
        const Matrix b = trial % 2 ? a : random::density(3, rng);
        const double d = relative_entropy(a, b);
        EXPECT_GE(d, -1e-10);
        EXPECT_EQ(std::abs(d) < 1e-9, max_norm(a - b) < 1e-9) << "trial " << trial;
    }
}

TEST(Gibbs, DegenerateQubitAndOracle) {
    auto reg = make_registry({{"S", 3}});
    const Operator h(reg, {"S"}, 1.7 * Matrix::Identity(3, 3));
    const auto g = gibbs_state(h, 0.4);
    EXPECT_LT(max_norm(g.state.matrix() - Matrix::Identity(3, 3) / 3.0), 1e-15);
    EXPECT_NEAR(g.partition_function, 3.0 * std::exp(-0.4 * 1.7), 1e-13);

    auto reg2 = make_registry({{"S", 2}});
    const double omega = 1.3, beta = 0.8;
    const auto q = gibbs_state(Operator(reg2, {"S"}, diag({0, omega})), beta);
    const double e = std::exp(-beta * omega);
    EXPECT_LT(max_norm(q.state.matrix() - diag({1 / (1 + e), e / (1 + e)})), 1e-15);

    random::Rng rng(13);
    auto reg4 = make_registry({{"S", 4}});
    const Matrix hm = random::hermitian(4, rng);
    const auto r = gibbs_state(Operator(reg4, {"S"}, hm), 0.7);
    const Matrix ex = oracle::expm(-0.7 * hm);
    EXPECT_LT(max_norm(r.state.matrix() - ex / ex.trace()), 1e-12);
    EXPECT_NEAR(r.partition_function, ex.trace().real(), 1e-12);
    EXPECT_LT(max_norm(r.state.matrix() * hm - hm * r.state.matrix()), 1e-11);
    EXPECT_THROW(gibbs_state(Operator(reg4, {"S"}, hm), 0.0), std::invalid_argument);
}

TEST(Density, Validation) {
    auto reg = make_registry({{"S", 2}});
    EXPECT_THROW(DensityOperator::normalized(Operator(reg, {"S"}, diag({0.5, 0.4}))), std::invalid_argument);
    EXPECT_THROW(DensityOperator::normalized(Operator(reg, {"S"}, diag({1.2, -0.2}))), std::invalid_argument);
    const auto u = DensityOperator::unnormalized(Operator(reg, {"S"}, diag({0.1, 0.2})));
    EXPECT_NEAR(u.weight(), 0.3, 1e-15);
    EXPECT_LT(max_norm(u.normalize().matrix() - diag({1.0 / 3, 2.0 / 3})), 1e-15);
    EXPECT_THROW(DensityOperator::unnormalized(Operator(reg, {"S"}, diag({0, 0}))).normalize(), std::domain_error);
}

TEST(Kernels, ParallelMatchesSerial) {
    random::Rng rng(14);
    const std::vector<std::vector<std::size_t>> shapes{{2, 3, 2}, {4, 2, 2, 2}, {3, 3}, {2, 1, 4, 2}, {4, 4, 4}};
    for (const auto& dims : shapes) {
        std::size_t n = 1;
        for (auto d : dims) n *= d;
        const Matrix m = random::gaussian(n, n, rng);
        const std::vector<std::size_t> keep{0, dims.size() - 1};
        EXPECT_LT(max_norm(kernels::partial_trace(m, dims, keep) - kernels::serial::partial_trace(m, dims, keep)), 1e-12);
        std::vector<std::size_t> order(dims.size());
        for (std::size_t i = 0; i < order.size(); ++i) order[i] = order.size() - 1 - i;
        EXPECT_LT(max_norm(kernels::permute(m, dims, order) - kernels::serial::permute(m, dims, order)), 0.0 + 1e-15);
        const auto pos = dims.size() > 2 ? std::vector<std::size_t>{1, dims.size() - 1} : std::vector<std::size_t>{1};
        const std::size_t sub = dims.size() > 2 ? dims[1] * dims.back() : dims[1];
        const Matrix l = random::gaussian(sub, sub, rng), r = random::gaussian(sub, sub, rng);
        EXPECT_LT(max_norm(kernels::embed(l, dims, pos) - kernels::serial::embed(l, dims, pos)), 1e-15);
        EXPECT_LT(max_norm(kernels::sandwich(m, dims, pos, l, r) - kernels::serial::sandwich(m, dims, pos, l, r)), 1e-11);
        EXPECT_LT(max_norm(kernels::apply_left(m, dims, pos, l) - kernels::serial::embed(l, dims, pos) * m), 1e-11);
    }
}

TEST(Operator, ArithmeticEmbedsIntoUnion) {
    auto reg = make_registry({{"S", 2}, {"B", 2}});
    const Operator a(reg, {"S"}, pauli_x());
    const Operator b(reg, {"B"}, diag({1, -1}));
    const Operator sum = a + b;
    EXPECT_EQ(sum.support(), Support::of(*reg, {"S", "B"}));
    EXPECT_LT(max_norm(sum.matrix() - (kernels::kron(pauli_x(), Matrix::Identity(2, 2)) +
                                       kernels::kron(Matrix::Identity(2, 2), diag({1, -1})))),
              1e-15);
    const Operator prod = a * b;
    EXPECT_LT(max_norm(prod.matrix() - kernels::kron(pauli_x(), diag({1, -1}))), 1e-15);
    const auto rho = Operator(reg, {"S", "B"}, kernels::kron(diag({0.25, 0.75}), diag({0.5, 0.5})));
    EXPECT_NEAR(rho.expectation(b).real(), 0.0, 1e-15);
    EXPECT_NEAR(rho.expectation(Operator(reg, {"S"}, diag({0, 1}))).real(), 0.75, 1e-15);
}
