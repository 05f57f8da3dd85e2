#pragma once

#include "qcm/types.hpp"

namespace qcm::thermo {

/// Re tr{A B}
double trace_product(const Matrix& a, const Matrix& b);

/// tr{(H_new - H_old) rho}: work of a sudden protocol switch.
double switch_work(const Matrix& h_old, const Matrix& h_new, const Matrix& rho);

/// tr{H_A (rho''_A - rho'_A)}
double work_measurement_canonical(const Matrix& h_a, const Matrix& rho_a_pre, const Matrix& rho_a_post);

/// tr{(H_S + H_A)(rho''_SA - rho'_SA)} with the Hamiltonian already on S⊗A.
double work_measurement_alternative(const Matrix& h_sa, const Matrix& rho_sa_pre, const Matrix& rho_sa_post);

/// tr{[H_S + V_SB + H_A](U rho U^dag - rho)} for rho on S⊗B⊗A and U on S⊗A.
double singular_control_work(const Matrix& rho_sba, const Matrix& u_sa, const Matrix& h_s, const Matrix& v_sb,
                             const Matrix& h_a, std::size_t dim_b);

/// Switch-on/switch-off work of a window coupling X/width on S⊗B⊗A.
double finite_width_control_work(const Matrix& x_sba, double width, const Matrix& rho_pre, const Matrix& rho_post);

}  // namespace qcm::thermo
