#include <gtest/gtest.h>

#include "qcm/dilation/dilation.hpp"
#include "qcm/harness/random.hpp"
#include "qcm/ops/kernels.hpp"
#include "qcm/ops/linalg.hpp"

using namespace qcm;
using namespace qcm::dilation;
using channels::Instrument;
using channels::KrausChannel;

namespace {

Matrix pauli(char c) {
    Matrix m(2, 2);
    if (c == 'I') m << 1, 0, 0, 1;
    if (c == 'X') m << 0, 1, 1, 0;
    if (c == 'Y') m << 0, cplx(0, -1), cplx(0, 1), 0;
    if (c == 'Z') m << 1, 0, 0, -1;
    return m;
}

Matrix proj(std::size_t d, std::size_t i) {
    Matrix p = Matrix::Zero(Eigen::Index(d), Eigen::Index(d));
    p(Eigen::Index(i), Eigen::Index(i)) = 1.0;
    return p;
}

// applies the dilation with all outcomes summed, straight from its definition
Matrix channel_from_dilation(const DilationResult& d, const Matrix& rho) {
    const Matrix joint = d.unitary * kernels::kron(rho, d.ancilla_state) * d.unitary.adjoint();
    const auto ds = Eigen::Index(d.system_dim), m = Eigen::Index(d.ancilla_dim);
    Matrix out = Matrix::Zero(ds, ds);
    for (Eigen::Index i = 0; i < ds; ++i)
        for (Eigen::Index j = 0; j < ds; ++j)
            for (Eigen::Index a = 0; a < m; ++a) out(i, j) += joint(i * m + a, j * m + a);
    return out;
}

Matrix rand_projector_frame(std::size_t m, std::size_t outcomes, random::Rng& rng, std::vector<Matrix>& ps) {
    const Matrix u = random::unitary(m, rng);
    ps.assign(outcomes, Matrix::Zero(Eigen::Index(m), Eigen::Index(m)));
    for (std::size_t i = 0; i < m; ++i) ps[std::min(i, outcomes - 1)] += u.col(Eigen::Index(i)) * u.col(Eigen::Index(i)).adjoint();
    return u;
}

}  // namespace

TEST(DilateChannel, IdentityIsTrivial) {
    const auto d = dilate_channel(KrausChannel::identity({"S"}, 3));
    EXPECT_EQ(d.ancilla_dim, 1u);
    EXPECT_LT(max_norm(d.unitary - Matrix::Identity(3, 3)), 1e-15);
}

TEST(DilateChannel, DephasingOnPauliBasis) {
    const KrausChannel deph({"S"}, {std::sqrt(0.5) * pauli('I'), std::sqrt(0.5) * pauli('Z')});
    const auto d = dilate_channel(deph);
    EXPECT_EQ(d.ancilla_dim, 2u);
    EXPECT_LT(unitarity_residual(d.unitary), 1e-12);
    for (char c : {'I', 'X', 'Y', 'Z'}) {
        const Matrix b = pauli(c) / 2.0;
        const Matrix expect = 0.5 * (b + pauli('Z') * b * pauli('Z'));
        EXPECT_LT(max_norm(channel_from_dilation(d, b) - expect), 1e-12) << c;
    }
}

TEST(DilateChannel, RandomQutritChannel) {
    random::Rng rng(40);
    for (int trial = 0; trial < 5; ++trial) {
        const KrausChannel ch({"S"}, random::kraus(3, 3, rng));
        const auto d = dilate_channel(ch);
        EXPECT_EQ(d.ancilla_dim, 3u);
        EXPECT_LT(unitarity_residual(d.unitary), 1e-10);
        double err = 0.0;
        for (int i = 0; i < 3; ++i)
            for (int j = 0; j < 3; ++j) {
                Matrix e = Matrix::Zero(3, 3);
                e(i, j) = 1.0;
                Matrix direct = Matrix::Zero(3, 3);
                for (const auto& k : ch.kraus()) direct += k * e * k.adjoint();
                err = std::max(err, max_norm(channel_from_dilation(d, e) - direct));
            }
        EXPECT_LT(err, 1e-10);
    }
    EXPECT_THROW(KrausChannel({"S"}, {pauli('I'), pauli('Z')}), std::invalid_argument);
}

TEST(DilateInstrument, ProjectiveAndTrivial) {
    const Instrument z({"S"}, {{proj(2, 0)}, {proj(2, 1)}});
    const auto d = dilate_instrument(z);
    EXPECT_EQ(d.ancilla_dim, 2u);
    for (const auto& p : d.projectors) EXPECT_NEAR(p.trace().real(), 1.0, 1e-15);
    Matrix rho(2, 2);
    rho << 0.3, cplx(0.1, 0.2), cplx(0.1, -0.2), 0.7;
    EXPECT_NEAR(dilated_action(d, 1, rho).trace().real(), 0.3, 1e-14);
    EXPECT_NEAR(dilated_action(d, 2, rho).trace().real(), 0.7, 1e-14);

    random::Rng rng(41);
    const KrausChannel ch({"S"}, random::kraus(2, 3, rng));
    const auto a = dilate_instrument(Instrument(ch));
    const auto b = dilate_channel(ch);
    EXPECT_LT(max_norm(a.unitary - b.unitary), 1e-15);
    EXPECT_EQ(a.projectors.size(), 1u);
}

TEST(DilateInstrument, UnsharpQubitMeasurement) {
    Matrix k1 = Matrix::Zero(2, 2), k2 = Matrix::Zero(2, 2);
    k1(0, 0) = std::sqrt(0.8);
    k1(1, 1) = std::sqrt(0.2);
    k2(0, 0) = std::sqrt(0.2);
    k2(1, 1) = std::sqrt(0.8);
    const Instrument inst({"S"}, {{k1}, {k2}});
    const auto d = dilate_instrument(inst);
    random::Rng rng(42);
    for (int trial = 0; trial < 5; ++trial) {
        const Matrix rho = random::density(2, rng);
        EXPECT_NEAR(dilated_action(d, 1, rho).trace().real(), (k1 * rho * k1.adjoint()).trace().real(), 1e-13);
        EXPECT_LT(max_norm(dilated_action(d, 2, rho) - k2 * rho * k2.adjoint()), 1e-13);
    }
    EXPECT_LT(reconstruction_error(inst, d), 1e-12);
}

TEST(DilateInstrument, RandomInstrumentsReconstruct) {
    random::Rng rng(43);
    for (int trial = 0; trial < 20; ++trial) {
        const std::size_t ds = 2 + trial % 2, m = 1 + trial % 4, outcomes = 1 + trial % m;
        const Instrument inst({"S"}, random::instrument(ds, m, outcomes, rng));
        const auto d = dilate_instrument(inst);
        EXPECT_LT(unitarity_residual(d.unitary), 1e-10);
        EXPECT_LT(projector_residual(d.projectors), 1e-15);
        EXPECT_LT(reconstruction_error(inst, d), 1e-9);
        // probability conservation for normalized inputs
        const Matrix rho = random::density(ds, rng);
        double total = 0.0;
        for (int r = 1; r <= int(outcomes); ++r) total += dilated_action(d, r, rho).trace().real();
        EXPECT_NEAR(total, 1.0, 1e-10);
        // padding keeps the instrument
        const auto padded = dilate_instrument(inst, m + 2);
        EXPECT_EQ(padded.ancilla_dim, m + 2);
        EXPECT_LT(reconstruction_error(inst, padded), 1e-9);
    }
}

TEST(DilateInstrument, CompletionBlockDoesNotMatter) {
    random::Rng rng(44);
    const Instrument inst({"S"}, random::instrument(3, 3, 2, rng));
    const auto d0 = dilate_instrument(inst);
    const auto d1 = dilate_instrument(inst, 0, random::unitary(3 * 2, rng));
    EXPECT_GT(max_norm(d0.unitary - d1.unitary), 1e-3);
    EXPECT_LT(reconstruction_error(inst, d1), 1e-9);
    for (int trial = 0; trial < 3; ++trial) {
        const Matrix rho = random::density(3, rng);
        for (int r = 1; r <= 2; ++r) EXPECT_LT(max_norm(dilated_action(d0, r, rho) - dilated_action(d1, r, rho)), 1e-12);
    }
}

TEST(ExplicitDilation, MixedAncillaReconstruction) {
    random::Rng rng(45);
    const Matrix u = random::unitary(6, rng);
    std::vector<Matrix> ps;
    rand_projector_frame(3, 2, rng, ps);
    const auto d = make_dilation(2, random::density(3, rng), u, ps);
    const auto inst = reconstruct_instrument(d);
    EXPECT_LT(reconstruction_error(inst, d), 1e-10);
    EXPECT_THROW(make_dilation(2, random::density(3, rng), 1.01 * u, ps), std::invalid_argument);
    ps.pop_back();
    EXPECT_THROW(make_dilation(2, random::density(3, rng), u, ps), std::invalid_argument);
}

TEST(MeasurementUnitary, TrivialAndZMeasurement) {
    const Matrix u1 = measurement_unitary({Matrix::Identity(2, 2)}, 1);
    EXPECT_LT(max_norm(u1 - Matrix::Identity(2, 2)), 1e-15);

    const auto u = measurement_unitary({proj(2, 0), proj(2, 1)}, 2);
    Vector plus(2);
    plus << 1 / std::sqrt(2.0), 1 / std::sqrt(2.0);
    const Matrix in = kernels::kron(plus * plus.adjoint(), proj(2, 0));
    const Matrix out = u * in * u.adjoint();
    // A ⊗ I ordering: block (r, r') over the IDF holds P(r) rho P(r')
    EXPECT_NEAR(out(0, 0).real(), 0.5, 1e-15);  // |0>_A |0>_I
    EXPECT_NEAR(out(3, 3).real(), 0.5, 1e-15);  // |1>_A |1>_I
    EXPECT_NEAR(std::abs(out(0, 3)), 0.5, 1e-15);  // coherence before dephasing
    EXPECT_NEAR(std::abs(out(1, 1)) + std::abs(out(2, 2)), 0.0, 1e-15);

    random::Rng rng(46);
    for (int trial = 0; trial < 5; ++trial) {
        std::vector<Matrix> ps;
        rand_projector_frame(3, 3, rng, ps);
        EXPECT_LT(unitarity_residual(measurement_unitary(ps, 3)), 1e-12);
    }
    EXPECT_THROW(measurement_unitary({proj(2, 0)}, 1), std::invalid_argument);
}

TEST(DephasingUnitary, DephasesAtZeroCost) {
    random::Rng rng(47);
    for (std::size_t d : {2u, 3u, 4u}) {
        const Matrix u = dephasing_unitary(d);
        const MemoryLayout mem({d}, 0.3, -1.1);
        const Matrix h = kernels::kron(mem.h_i(0), Matrix::Identity(Eigen::Index(d), Eigen::Index(d))) +
                         kernels::kron(Matrix::Identity(Eigen::Index(d), Eigen::Index(d)), mem.h_n(0));
        EXPECT_LT(max_norm(u * h - h * u), 1e-15);
        const Matrix rho_i = random::density(d, rng);
        const Matrix full = u * kernels::kron(rho_i, mem.nidf_initial(0)) * u.adjoint();
        const std::vector<std::size_t> dims{d, d}, keep{0};
        Matrix expect = Matrix::Zero(Eigen::Index(d), Eigen::Index(d));
        for (std::size_t r = 0; r < d; ++r) expect += proj(d, r) * rho_i * proj(d, r);
        EXPECT_LT(max_norm(kernels::partial_trace(full, dims, keep) - expect), 1e-12);
        EXPECT_LT(max_norm(dephase(rho_i) - expect), 1e-15);
    }
    Matrix plus = Matrix::Constant(2, 2, 0.5);
    EXPECT_LT(max_norm(dephase(plus) - 0.5 * Matrix::Identity(2, 2)), 1e-15);
}
