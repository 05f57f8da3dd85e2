#include "qcm/harness/random.hpp"

#include <stdexcept>

#include <Eigen/QR>

namespace qcm::random {

Matrix gaussian(std::size_t rows, std::size_t cols, Rng& rng) {
    std::normal_distribution<double> n(0.0, 1.0);
    Matrix m(static_cast<Eigen::Index>(rows), static_cast<Eigen::Index>(cols));
    for (Eigen::Index i = 0; i < m.rows(); ++i)
        for (Eigen::Index j = 0; j < m.cols(); ++j) {
            const double re = n(rng);
            const double im = n(rng);
            m(i, j) = cplx(re, im);
        }
    return m;
}

Matrix hermitian(std::size_t d, Rng& rng, double scale) {
    const Matrix g = gaussian(d, d, rng);
    return 0.5 * scale * (g + g.adjoint());
}

Matrix unitary(std::size_t d, Rng& rng) {
    const Eigen::MatrixXcd g = gaussian(d, d, rng);
    Eigen::HouseholderQR<Eigen::MatrixXcd> qr(g);
    Eigen::MatrixXcd q = qr.householderQ();
    const Eigen::MatrixXcd r = qr.matrixQR();
    // fix column phases so the distribution is Haar
    for (Eigen::Index j = 0; j < q.cols(); ++j) {
        const cplx rjj = r(j, j);
        if (std::abs(rjj) > 0.0) q.col(j) *= rjj / std::abs(rjj);
    }
    return q;
}

Matrix density(std::size_t d, Rng& rng, std::size_t rank) {
    if (rank == 0 || rank > d) rank = d;
    const Matrix g = gaussian(d, rank, rng);
    Matrix rho = g * g.adjoint();
    rho /= rho.trace();
    return 0.5 * (rho + rho.adjoint());
}

Vector pure(std::size_t d, Rng& rng) {
    Vector v = gaussian(d, 1, rng).col(0);
    return v / v.norm();
}

std::vector<Matrix> kraus(std::size_t d, std::size_t m, Rng& rng) {
    if (m == 0) throw std::invalid_argument("need at least one Kraus operator");
    const Matrix u = unitary(d * m, rng);
    std::vector<Matrix> ks;
    for (std::size_t a = 0; a < m; ++a) ks.push_back(u.block(Eigen::Index(a * d), 0, Eigen::Index(d), Eigen::Index(d)));
    return ks;
}

std::vector<std::vector<Matrix>> instrument(std::size_t d, std::size_t n_kraus, std::size_t outcomes, Rng& rng) {
    if (outcomes == 0 || outcomes > n_kraus) throw std::invalid_argument("need 1 <= outcomes <= Kraus count");
    auto ks = kraus(d, n_kraus, rng);
    std::vector<std::vector<Matrix>> out(outcomes);
    for (std::size_t i = 0; i < n_kraus; ++i) out[std::min(i, outcomes - 1)].push_back(std::move(ks[i]));
    return out;
}

}  // namespace qcm::random
