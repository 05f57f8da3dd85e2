#pragma once

// Independent reference computations for tests. Nothing here calls the
// spectral routines of the library.

#include <cmath>
#include <vector>

#include <unsupported/Eigen/MatrixFunctions>

#include "qcm/types.hpp"

namespace oracle {

using qcm::cplx;
using qcm::Matrix;

inline Eigen::MatrixXcd col(const Matrix& m) { return Eigen::MatrixXcd(m); }

/// exp(a) by scaling and squaring of a truncated Taylor series.
inline Matrix taylor_exp(const Matrix& a) {
    const double norm = a.cwiseAbs().rowwise().sum().maxCoeff();
    int s = 0;
    while (norm / std::pow(2.0, s) > 0.25) ++s;
    const Matrix b = a / std::pow(2.0, s);
    Matrix term = Matrix::Identity(a.rows(), a.cols());
    Matrix sum = term;
    for (int k = 1; k < 30; ++k) {
        term = term * b / double(k);
        sum += term;
    }
    for (int i = 0; i < s; ++i) sum = sum * sum;
    return sum;
}

inline Matrix expm(const Matrix& a) { return Matrix(col(a).exp()); }
inline Matrix logm(const Matrix& a) { return Matrix(col(a).log()); }

/// Row-major multi-index digits of `idx` for the given dims.
inline std::vector<std::size_t> digits(std::size_t idx, const std::vector<std::size_t>& dims) {
    std::vector<std::size_t> d(dims.size());
    for (std::size_t i = dims.size(); i-- > 0;) {
        d[i] = idx % dims[i];
        idx /= dims[i];
    }
    return d;
}

inline std::size_t index_of(const std::vector<std::size_t>& dg, const std::vector<std::size_t>& dims) {
    std::size_t idx = 0;
    for (std::size_t i = 0; i < dims.size(); ++i) idx = idx * dims[i] + dg[i];
    return idx;
}

/// Partial trace over factor `out` by explicit summation.
inline Matrix trace_factor(const Matrix& m, const std::vector<std::size_t>& dims, std::size_t out) {
    std::vector<std::size_t> rd;
    for (std::size_t i = 0; i < dims.size(); ++i)
        if (i != out) rd.push_back(dims[i]);
    std::size_t n = 1;
    for (auto d : rd) n *= d;
    Matrix r = Matrix::Zero(Eigen::Index(n), Eigen::Index(n));
    std::size_t full = 1;
    for (auto d : dims) full *= d;
    for (std::size_t i = 0; i < full; ++i)
        for (std::size_t j = 0; j < full; ++j) {
            auto di = digits(i, dims), dj = digits(j, dims);
            if (di[out] != dj[out]) continue;
            di.erase(di.begin() + std::ptrdiff_t(out));
            dj.erase(dj.begin() + std::ptrdiff_t(out));
            r(Eigen::Index(index_of(di, rd)), Eigen::Index(index_of(dj, rd))) += m(Eigen::Index(i), Eigen::Index(j));
        }
    return r;
}

inline double entropy_of(const std::vector<double>& p) {
    double h = 0.0;
    for (double x : p)
        if (x > 0.0) h -= x * std::log(x);
    return h;
}

/// tr{rho (log rho - log sigma)} through Schur-Parlett logarithms.
inline double relative_entropy(const Matrix& rho, const Matrix& sigma) {
    return (col(rho) * (col(rho).log() - col(sigma).log())).trace().real();
}

}  // namespace oracle
