#include "qcm/thermo/functionals.hpp"

#include <stdexcept>

#include "qcm/ops/kernels.hpp"

namespace qcm::thermo {

double trace_product(const Matrix& a, const Matrix& b) {
    if (a.rows() != b.cols() || a.cols() != b.rows()) throw std::invalid_argument("trace_product: shape mismatch");
    return (a.array() * b.transpose().array()).sum().real();
}

double switch_work(const Matrix& h_old, const Matrix& h_new, const Matrix& rho) {
    return trace_product(h_new - h_old, rho);
}

double work_measurement_canonical(const Matrix& h_a, const Matrix& rho_a_pre, const Matrix& rho_a_post) {
    return trace_product(h_a, rho_a_post - rho_a_pre);
}

double work_measurement_alternative(const Matrix& h_sa, const Matrix& rho_sa_pre, const Matrix& rho_sa_post) {
    return trace_product(h_sa, rho_sa_post - rho_sa_pre);
}

double singular_control_work(const Matrix& rho_sba, const Matrix& u_sa, const Matrix& h_s, const Matrix& v_sb,
                             const Matrix& h_a, std::size_t dim_b) {
    const auto ds = static_cast<std::size_t>(h_s.rows());
    const auto da = static_cast<std::size_t>(h_a.rows());
    const std::vector<std::size_t> dims{ds, dim_b, da};
    const std::vector<std::size_t> sa{0, 2}, sb{0, 1}, s{0}, a{2};
    const Matrix after = kernels::sandwich(rho_sba, dims, sa, u_sa, u_sa);
    const Matrix h = kernels::embed(h_s, dims, s) + kernels::embed(v_sb, dims, sb) + kernels::embed(h_a, dims, a);
    return trace_product(h, after - rho_sba);
}

double finite_width_control_work(const Matrix& x_sba, double width, const Matrix& rho_pre, const Matrix& rho_post) {
    if (!(width > 0.0)) throw std::invalid_argument("finite-width control work needs a positive width");
    return trace_product(x_sba, rho_pre - rho_post) / width;
}

}  // namespace qcm::thermo
