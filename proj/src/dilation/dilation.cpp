#include "qcm/dilation/dilation.hpp"

#include <cmath>
#include <stdexcept>
#include <string>

#include <Eigen/QR>

#include "qcm/ops/kernels.hpp"
#include "qcm/ops/linalg.hpp"

namespace qcm::dilation {

namespace {

Matrix shift(std::size_t d, std::size_t by) {
    Matrix s = Matrix::Zero(Eigen::Index(d), Eigen::Index(d));
    for (std::size_t i = 0; i < d; ++i) s(Eigen::Index((i + by) % d), Eigen::Index(i)) = 1.0;
    return s;
}

Matrix basis_projector(std::size_t d, std::size_t i) {
    Matrix p = Matrix::Zero(Eigen::Index(d), Eigen::Index(d));
    p(Eigen::Index(i), Eigen::Index(i)) = 1.0;
    return p;
}

// U with U[:, s'·m] = V[:, s'] and the orthogonal complement elsewhere.
Matrix complete_isometry(const Matrix& v, std::size_t ds, std::size_t m, const Matrix& complement) {
    const auto n = Eigen::Index(ds * m);
    const Eigen::MatrixXcd vc = v;
    Eigen::HouseholderQR<Eigen::MatrixXcd> qr(vc);
    const Eigen::MatrixXcd q = qr.householderQ();
    Eigen::MatrixXcd rest = q.rightCols(n - Eigen::Index(ds));
    if (complement.size() > 0) {
        if (complement.rows() != rest.cols() || unitarity_residual(complement) > 1e-10)
            throw std::invalid_argument("completion rotation must be a unitary on the complement");
        rest = rest * Eigen::MatrixXcd(complement);
    }
    Matrix u(n, n);
    Eigen::Index next = 0;
    for (std::size_t s = 0; s < ds; ++s)
        for (std::size_t a = 0; a < m; ++a) {
            const auto col = Eigen::Index(s * m + a);
            if (a == 0)
                u.col(col) = v.col(Eigen::Index(s));
            else
                u.col(col) = rest.col(next++);
        }
    return u;
}

DilationResult dilate_kraus(const std::vector<Matrix>& kraus, std::vector<int> owner, std::size_t n_outcomes,
                            const Matrix& complement) {
    const auto ds = static_cast<std::size_t>(kraus.front().rows());
    const std::size_t m = kraus.size();
    DilationResult d;
    d.system_dim = ds;
    d.ancilla_dim = m;
    d.ancilla_state = basis_projector(m, 0);
    d.unitary = complete_isometry(stinespring_isometry(kraus), ds, m, complement);
    if (n_outcomes > 0) {
        d.projectors.assign(n_outcomes, Matrix::Zero(Eigen::Index(m), Eigen::Index(m)));
        for (std::size_t i = 0; i < m; ++i) d.projectors[std::size_t(owner[i] - 1)](Eigen::Index(i), Eigen::Index(i)) = 1.0;
    }
    return d;
}

}  // namespace

Matrix stinespring_isometry(const std::vector<Matrix>& kraus) {
    const auto ds = kraus.front().rows();
    const auto m = Eigen::Index(kraus.size());
    Matrix v(ds * m, ds);
    for (Eigen::Index a = 0; a < m; ++a)
        for (Eigen::Index s = 0; s < ds; ++s) v.row(s * m + a) = kraus[std::size_t(a)].row(s);
    return v;
}

DilationResult dilate_channel(const channels::KrausChannel& ch, const Matrix& complement) {
    return dilate_kraus(ch.kraus(), std::vector<int>(ch.kraus().size(), 1), 0, complement);
}

DilationResult dilate_instrument(const channels::Instrument& inst, std::size_t ancilla_dim, const Matrix& complement) {
    auto kraus = inst.flattened();
    auto owner = inst.flattened_outcomes();
    if (ancilla_dim != 0) {
        if (ancilla_dim < kraus.size())
            throw std::invalid_argument("ancilla dimension " + std::to_string(ancilla_dim) + " is below the Kraus count " +
                                        std::to_string(kraus.size()));
        const auto ds = Eigen::Index(inst.dim());
        while (kraus.size() < ancilla_dim) {
            kraus.push_back(Matrix::Zero(ds, ds));
            owner.push_back(int(inst.outcomes()));
        }
    }
    return dilate_kraus(kraus, owner, inst.outcomes(), complement);
}

double projector_residual(const std::vector<Matrix>& projectors) {
    if (projectors.empty()) return std::numeric_limits<double>::infinity();
    const auto m = projectors.front().rows();
    Matrix sum = Matrix::Zero(m, m);
    double r = 0.0;
    for (std::size_t i = 0; i < projectors.size(); ++i) {
        if (projectors[i].rows() != m || projectors[i].cols() != m) return std::numeric_limits<double>::infinity();
        sum += projectors[i];
        for (std::size_t j = 0; j < projectors.size(); ++j) {
            Matrix prod = projectors[i] * projectors[j];
            if (i == j) prod -= projectors[i];
            r = std::max(r, max_norm(prod));
        }
    }
    return std::max(r, max_norm(sum - Matrix::Identity(m, m)));
}

DilationResult make_dilation(std::size_t system_dim, Matrix ancilla_state, Matrix unitary,
                             std::vector<Matrix> projectors, const Tolerances& tol) {
    const auto m = static_cast<std::size_t>(ancilla_state.rows());
    if (system_dim == 0 || m == 0 || ancilla_state.cols() != ancilla_state.rows())
        throw std::invalid_argument("dilation: ancilla state must be a nonempty square matrix");
    if (unitary.rows() != Eigen::Index(system_dim * m) || unitary.cols() != unitary.rows())
        throw std::invalid_argument("dilation: unitary must act on S ⊗ A");
    const double ur = unitarity_residual(unitary);
    if (ur > tol.unitary) throw std::invalid_argument("dilation: U is not unitary (residual " + std::to_string(ur) + ")");
    const auto spec = eigh(ancilla_state, tol.hermitian);
    if (spec.values.minCoeff() < -tol.psd || std::abs(ancilla_state.trace().real() - 1.0) > tol.probability)
        throw std::invalid_argument("dilation: ancilla state is not a density matrix");
    const double pr = projector_residual(projectors);
    if (pr > tol.kraus)
        throw std::invalid_argument("dilation: projectors do not form an orthogonal resolution of the identity (residual " +
                                    std::to_string(pr) + ")");
    return {system_dim, m, std::move(ancilla_state), std::move(unitary), std::move(projectors)};
}

Matrix dilated_action(const DilationResult& d, int r, const Matrix& rho) {
    const std::vector<std::size_t> dims{d.system_dim, d.ancilla_dim};
    const std::vector<std::size_t> keep{0};
    const Matrix joint = d.unitary * kernels::kron(rho, d.ancilla_state) * d.unitary.adjoint();
    const Matrix p = kernels::kron(Matrix::Identity(Eigen::Index(d.system_dim), Eigen::Index(d.system_dim)),
                                   d.projectors.at(std::size_t(r - 1)));
    return kernels::partial_trace(p * joint * p, dims, keep);
}

channels::Instrument reconstruct_instrument(const DilationResult& d, const Tolerances& tol) {
    const auto ds = Eigen::Index(d.system_dim);
    const auto m = Eigen::Index(d.ancilla_dim);
    const auto anc = eigh(d.ancilla_state, tol.hermitian);
    const Matrix id_s = Matrix::Identity(ds, ds);
    std::vector<std::vector<Matrix>> outcomes;
    for (const auto& p : d.projectors) {
        std::vector<Matrix> ks;
        const auto range = eigh(p, 1e-10);
        for (Eigen::Index a = 0; a < m; ++a) {
            if (range.values(a) < 0.5) continue;
            const Matrix bra = kernels::kron(id_s, Matrix(range.vectors.col(a).adjoint()));
            for (Eigen::Index j = 0; j < m; ++j) {
                const double lam = anc.values(j);
                if (lam <= tol.eigen_clip) continue;
                const Matrix ket = kernels::kron(id_s, Matrix(anc.vectors.col(j)));
                Matrix k = std::sqrt(lam) * (bra * d.unitary * ket);
                if (max_norm(k) > 1e-15) ks.push_back(std::move(k));
            }
        }
        if (ks.empty()) ks.push_back(Matrix::Zero(ds, ds));
        outcomes.push_back(std::move(ks));
    }
    return {{"S"}, std::move(outcomes), tol.reconstruction};
}

double reconstruction_error(const channels::Instrument& inst, const DilationResult& d) {
    if (inst.outcomes() != d.projectors.size() || inst.dim() != d.system_dim)
        return std::numeric_limits<double>::infinity();
    const auto ds = Eigen::Index(d.system_dim);
    double err = 0.0;
    for (Eigen::Index i = 0; i < ds; ++i)
        for (Eigen::Index j = 0; j < ds; ++j) {
            Matrix e = Matrix::Zero(ds, ds);
            e(i, j) = 1.0;
            for (int r = 1; r <= int(inst.outcomes()); ++r) {
                Matrix direct = Matrix::Zero(ds, ds);
                for (const auto& k : inst.kraus(r)) direct += k * e * k.adjoint();
                err = std::max(err, max_norm(direct - dilated_action(d, r, e)));
            }
        }
    return err;
}

Matrix measurement_unitary(const std::vector<Matrix>& projectors, std::size_t d) {
    if (projectors.size() != d) throw std::invalid_argument("measurement unitary: need one projector per outcome");
    if (projector_residual(projectors) > 1e-10)
        throw std::invalid_argument("measurement unitary: projectors are not a resolution of the identity");
    const auto m = projectors.front().rows();
    Matrix u = Matrix::Zero(m * Eigen::Index(d), m * Eigen::Index(d));
    for (std::size_t r = 0; r < d; ++r) u += kernels::kron(projectors[r], shift(d, r));
    return u;
}

Matrix dephasing_unitary(std::size_t d) {
    if (d == 0) throw std::invalid_argument("dephasing unitary: dimension must be positive");
    Matrix u = Matrix::Zero(Eigen::Index(d * d), Eigen::Index(d * d));
    for (std::size_t r = 0; r < d; ++r) u += kernels::kron(basis_projector(d, r), shift(d, r + 1));
    return u;
}

Matrix dephase(const Matrix& rho) {
    Matrix out = Matrix::Zero(rho.rows(), rho.cols());
    out.diagonal() = rho.diagonal();
    return out;
}

MemoryLayout::MemoryLayout(std::vector<std::size_t> alphabets, double e_i, double e_n)
    : dims_(std::move(alphabets)), e_i_(e_i), e_n_(e_n) {
    for (auto d : dims_)
        if (d == 0) throw std::invalid_argument("memory register needs a positive dimension");
}

Matrix MemoryLayout::idf_initial(std::size_t k) const { return basis_projector(dim(k), 0); }

Matrix MemoryLayout::nidf_initial(std::size_t k) const {
    const auto d = Eigen::Index(dim(k));
    return Matrix::Identity(d, d) / double(d);
}

Matrix MemoryLayout::h_i(std::size_t k) const {
    const auto d = Eigen::Index(dim(k));
    return e_i_ * Matrix::Identity(d, d);
}

Matrix MemoryLayout::h_n(std::size_t k) const {
    const auto d = Eigen::Index(dim(k));
    return e_n_ * Matrix::Identity(d, d);
}

}  // namespace qcm::dilation
