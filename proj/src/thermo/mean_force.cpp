#include "qcm/thermo/mean_force.hpp"

#include <cmath>
#include <stdexcept>

#include "qcm/ops/density.hpp"
#include "qcm/ops/kernels.hpp"
#include "qcm/ops/linalg.hpp"
#include "qcm/thermo/functionals.hpp"

namespace qcm::thermo {

namespace {

void check_shapes(const Matrix& h_xb, const Matrix& h_b, std::size_t dim_x) {
    const auto db = std::size_t(h_b.rows());
    if (dim_x == 0 || h_b.rows() != h_b.cols() || std::size_t(h_xb.rows()) != dim_x * db || h_xb.rows() != h_xb.cols())
        throw std::invalid_argument("mean force: H_XB does not match dim_x * dim_b");
}

}  // namespace

Matrix mean_force_only(const Matrix& h_xb, const Matrix& h_b, std::size_t dim_x, double beta) {
    if (!(beta > 0.0)) throw std::invalid_argument("mean force needs beta > 0");
    check_shapes(h_xb, h_b, dim_x);
    const auto spec = eigh(h_xb);
    const double e0 = spec.values.minCoeff();
    // tr_B e^{-β(H - e0)}, largest eigenvalue ~ 1
    const Matrix w = spectral_function(spec, [&](double e) { return cplx(std::exp(-beta * (e - e0)), 0.0); });
    const std::vector<std::size_t> dims{dim_x, std::size_t(h_b.rows())}, keep{0};
    const Matrix reduced = kernels::partial_trace(w, dims, keep);
    const Matrix ln = herm_log(0.5 * (reduced + reduced.adjoint()));
    const double ln_zb = log_partition(h_b, beta);
    Matrix h = (-1.0 / beta) * ln;
    h.diagonal().array() += e0 + ln_zb / beta;
    return 0.5 * (h + h.adjoint());
}

MeanForceData mean_force_hamiltonian(const Matrix& h_xb, const Matrix& h_b, std::size_t dim_x, double beta,
                                     double dbeta) {
    if (!(beta > 0.0)) throw std::invalid_argument("mean force needs beta > 0");
    if (dbeta <= 0.0) dbeta = 1e-4 * beta;
    if (dbeta >= beta) throw std::invalid_argument("mean force: beta step must be smaller than beta");
    MeanForceData m;
    m.beta = beta;
    m.h_star = mean_force_only(h_xb, h_b, dim_x, beta);
    auto central = [&](double h) {
        return Matrix((mean_force_only(h_xb, h_b, dim_x, beta + h) - mean_force_only(h_xb, h_b, dim_x, beta - h)) /
                      (2.0 * h));
    };
    const Matrix d1 = central(dbeta), d2 = central(0.5 * dbeta);
    m.dbeta_h_star = (4.0 * d2 - d1) / 3.0;
    m.dbeta_h_star = 0.5 * (m.dbeta_h_star + m.dbeta_h_star.adjoint());
    m.log_z_star = log_partition(h_xb, beta) - log_partition(h_b, beta);
    m.z_star = std::exp(m.log_z_star);
    return m;
}

double internal_energy(const Matrix& rho_x, const MeanForceData& mfd) {
    return trace_product(mfd.h_star + mfd.beta * mfd.dbeta_h_star, rho_x);
}

}  // namespace qcm::thermo
