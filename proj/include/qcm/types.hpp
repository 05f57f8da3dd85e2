#pragma once

#include <complex>
#include <cstddef>
#include <vector>

#include <Eigen/Dense>

namespace qcm {

using cplx = std::complex<double>;

/// Dense complex matrix, row-major.
using Matrix = Eigen::Matrix<cplx, Eigen::Dynamic, Eigen::Dynamic, Eigen::RowMajor>;
using Vector = Eigen::Matrix<cplx, Eigen::Dynamic, 1>;
using RealVector = Eigen::VectorXd;

/// Outcome record r_k = (r_0, ..., r_k). Labels are 1-based.
using Record = std::vector<int>;

/// Largest absolute entry.
inline double max_norm(const Matrix& m) {
    return m.size() == 0 ? 0.0 : m.cwiseAbs().maxCoeff();
}

inline double hermiticity_residual(const Matrix& m) {
    return max_norm(m - m.adjoint());
}

inline bool is_prefix(const Record& prefix, const Record& record) {
    if (prefix.size() > record.size()) return false;
    for (std::size_t i = 0; i < prefix.size(); ++i)
        if (prefix[i] != record[i]) return false;
    return true;
}

}  // namespace qcm
