#include "qcm/ops/kernels.hpp"

#include <algorithm>
#include <stdexcept>

namespace qcm::kernels {

namespace {

// Below this size the OpenMP fork costs more than the loop.
constexpr std::ptrdiff_t kParallelMinRows = 64;

std::size_t product(std::span<const std::size_t> dims) {
    std::size_t d = 1;
    for (auto x : dims) d *= x;
    return d;
}

void check_positions(std::span<const std::size_t> dims, std::span<const std::size_t> positions) {
    for (std::size_t i = 0; i < positions.size(); ++i) {
        if (positions[i] >= dims.size()) throw std::invalid_argument("factor position out of range");
        if (i > 0 && positions[i] <= positions[i - 1])
            throw std::invalid_argument("factor positions must be strictly increasing");
    }
}

std::vector<std::size_t> complement(std::size_t n, std::span<const std::size_t> positions) {
    std::vector<std::size_t> rest;
    for (std::size_t f = 0; f < n; ++f)
        if (std::find(positions.begin(), positions.end(), f) == positions.end()) rest.push_back(f);
    return rest;
}

}  // namespace

FactorLayout::FactorLayout(std::span<const std::size_t> dims, std::span<const std::size_t> positions) {
    check_positions(dims, positions);
    full_dim_ = product(dims);
    const auto rest_pos = complement(dims.size(), positions);
    for (auto p : positions) sub_dim_ *= dims[p];
    for (auto p : rest_pos) rest_dim_ *= dims[p];

    sub_of_.resize(full_dim_);
    rest_of_.resize(full_dim_);
    join_.resize(full_dim_);
    std::vector<std::size_t> digit(dims.size(), 0);
    for (std::size_t i = 0; i < full_dim_; ++i) {
        std::size_t s = 0, r = 0;
        for (auto p : positions) s = s * dims[p] + digit[p];
        for (auto p : rest_pos) r = r * dims[p] + digit[p];
        sub_of_[i] = s;
        rest_of_[i] = r;
        join_[s * rest_dim_ + r] = i;
        for (std::size_t f = dims.size(); f-- > 0;) {
            if (++digit[f] < dims[f]) break;
            digit[f] = 0;
        }
    }
}

Matrix kron(const Matrix& a, const Matrix& b) {
    Matrix out(a.rows() * b.rows(), a.cols() * b.cols());
    for (Eigen::Index i = 0; i < a.rows(); ++i)
        for (Eigen::Index j = 0; j < a.cols(); ++j)
            out.block(i * b.rows(), j * b.cols(), b.rows(), b.cols()) = a(i, j) * b;
    return out;
}

Matrix partial_trace(const Matrix& m, std::span<const std::size_t> dims, std::span<const std::size_t> keep) {
    const FactorLayout lay(dims, keep);
    if (static_cast<std::size_t>(m.rows()) != lay.full_dim() || m.rows() != m.cols())
        throw std::invalid_argument("partial_trace: matrix does not match factor dimensions");
    const auto ks = static_cast<std::ptrdiff_t>(lay.sub_dim());
    const auto ts = lay.rest_dim();
    Matrix out = Matrix::Zero(ks, ks);
#pragma omp parallel for if (ks >= kParallelMinRows) schedule(static)
    for (std::ptrdiff_t a = 0; a < ks; ++a) {
        for (std::ptrdiff_t b = 0; b < ks; ++b) {
            cplx acc = 0.0;
            for (std::size_t t = 0; t < ts; ++t)
                acc += m(lay.join(a, t), lay.join(b, t));
            out(a, b) = acc;
        }
    }
    return out;
}

Matrix permute(const Matrix& m, std::span<const std::size_t> dims, std::span<const std::size_t> order) {
    if (order.size() != dims.size()) throw std::invalid_argument("permute: order has wrong length");
    std::vector<std::size_t> new_dims(dims.size());
    std::vector<bool> used(dims.size(), false);
    for (std::size_t j = 0; j < order.size(); ++j) {
        if (order[j] >= dims.size() || used[order[j]]) throw std::invalid_argument("permute: not a permutation");
        used[order[j]] = true;
        new_dims[j] = dims[order[j]];
    }
    const std::size_t n = product(dims);
    if (static_cast<std::size_t>(m.rows()) != n) throw std::invalid_argument("permute: dimension mismatch");

    // new stride of each old factor
    std::vector<std::size_t> new_stride(dims.size());
    std::size_t s = 1;
    for (std::size_t j = order.size(); j-- > 0;) {
        new_stride[order[j]] = s;
        s *= new_dims[j];
    }
    std::vector<std::size_t> map(n);
    std::vector<std::size_t> digit(dims.size(), 0);
    for (std::size_t i = 0; i < n; ++i) {
        std::size_t idx = 0;
        for (std::size_t f = 0; f < dims.size(); ++f) idx += digit[f] * new_stride[f];
        map[i] = idx;
        for (std::size_t f = dims.size(); f-- > 0;) {
            if (++digit[f] < dims[f]) break;
            digit[f] = 0;
        }
    }
    Matrix out(m.rows(), m.cols());
    const auto rows = static_cast<std::ptrdiff_t>(n);
#pragma omp parallel for if (rows >= kParallelMinRows) schedule(static)
    for (std::ptrdiff_t i = 0; i < rows; ++i)
        for (std::size_t j = 0; j < n; ++j) out(map[i], map[j]) = m(i, j);
    return out;
}

Matrix embed(const Matrix& op, std::span<const std::size_t> dims, std::span<const std::size_t> positions) {
    const FactorLayout lay(dims, positions);
    if (static_cast<std::size_t>(op.rows()) != lay.sub_dim() || op.rows() != op.cols())
        throw std::invalid_argument("embed: operator does not match factor dimensions");
    const auto n = static_cast<std::ptrdiff_t>(lay.full_dim());
    Matrix out = Matrix::Zero(n, n);
#pragma omp parallel for if (n >= kParallelMinRows) schedule(static)
    for (std::ptrdiff_t i = 0; i < n; ++i) {
        const auto a = lay.sub_of(i);
        const auto r = lay.rest_of(i);
        for (std::size_t c = 0; c < lay.sub_dim(); ++c) out(i, lay.join(c, r)) = op(a, c);
    }
    return out;
}

Matrix apply_left(const Matrix& m, std::span<const std::size_t> dims, std::span<const std::size_t> positions,
                  const Matrix& left) {
    const FactorLayout lay(dims, positions);
    if (static_cast<std::size_t>(m.rows()) != lay.full_dim())
        throw std::invalid_argument("apply_left: matrix does not match factor dimensions");
    if (static_cast<std::size_t>(left.rows()) != lay.sub_dim() || left.rows() != left.cols())
        throw std::invalid_argument("apply_left: operator does not match factor dimensions");
    const auto n = static_cast<std::ptrdiff_t>(lay.full_dim());
    Matrix out = Matrix::Zero(m.rows(), m.cols());
#pragma omp parallel for if (n >= kParallelMinRows) schedule(static)
    for (std::ptrdiff_t i = 0; i < n; ++i) {
        const auto a = lay.sub_of(i);
        const auto x = lay.rest_of(i);
        for (std::size_t c = 0; c < lay.sub_dim(); ++c) {
            const cplx l = left(a, c);
            if (l != cplx(0.0)) out.row(i) += l * m.row(lay.join(c, x));
        }
    }
    return out;
}

Matrix sandwich(const Matrix& rho, std::span<const std::size_t> dims, std::span<const std::size_t> positions,
                const Matrix& left, const Matrix& right) {
    const FactorLayout lay(dims, positions);
    if (static_cast<std::size_t>(rho.rows()) != lay.full_dim() || rho.rows() != rho.cols())
        throw std::invalid_argument("sandwich: matrix does not match factor dimensions");
    if (left.rows() != right.rows() || static_cast<std::size_t>(left.cols()) != lay.sub_dim() ||
        static_cast<std::size_t>(right.cols()) != lay.sub_dim() || left.rows() != left.cols())
        throw std::invalid_argument("sandwich: operator does not match factor dimensions");
    const auto n = static_cast<std::ptrdiff_t>(lay.full_dim());
    const auto ds = lay.sub_dim();

    // T = (L ⊗ 1) rho
    Matrix t = Matrix::Zero(n, n);
#pragma omp parallel for if (n >= kParallelMinRows) schedule(static)
    for (std::ptrdiff_t i = 0; i < n; ++i) {
        const auto a = lay.sub_of(i);
        const auto x = lay.rest_of(i);
        for (std::size_t c = 0; c < ds; ++c) {
            const cplx l = left(a, c);
            if (l != cplx(0.0)) t.row(i) += l * rho.row(lay.join(c, x));
        }
    }
    // out = T (R ⊗ 1)^dagger
    const Matrix rc = right.conjugate();
    Matrix out(n, n);
#pragma omp parallel for if (n >= kParallelMinRows) schedule(static)
    for (std::ptrdiff_t i = 0; i < n; ++i) {
        for (std::ptrdiff_t j = 0; j < n; ++j) {
            const auto b = lay.sub_of(j);
            const auto y = lay.rest_of(j);
            cplx acc = 0.0;
            for (std::size_t d = 0; d < ds; ++d) acc += t(i, lay.join(d, y)) * rc(b, d);
            out(i, j) = acc;
        }
    }
    return out;
}

namespace serial {

namespace {

std::vector<std::size_t> digits_of(std::size_t index, std::span<const std::size_t> dims) {
    std::vector<std::size_t> d(dims.size());
    for (std::size_t f = dims.size(); f-- > 0;) {
        d[f] = index % dims[f];
        index /= dims[f];
    }
    return d;
}

std::size_t index_of(const std::vector<std::size_t>& digits, std::span<const std::size_t> dims,
                     std::span<const std::size_t> which) {
    std::size_t idx = 0;
    for (auto f : which) idx = idx * dims[f] + digits[f];
    return idx;
}

}  // namespace

Matrix partial_trace(const Matrix& m, std::span<const std::size_t> dims, std::span<const std::size_t> keep) {
    check_positions(dims, keep);
    const auto traced = complement(dims.size(), keep);
    std::size_t dk = 1;
    for (auto p : keep) dk *= dims[p];
    const std::size_t n = product(dims);
    Matrix out = Matrix::Zero(dk, dk);
    for (std::size_t i = 0; i < n; ++i) {
        const auto di = digits_of(i, dims);
        for (std::size_t j = 0; j < n; ++j) {
            const auto dj = digits_of(j, dims);
            if (index_of(di, dims, traced) != index_of(dj, dims, traced)) continue;
            out(index_of(di, dims, keep), index_of(dj, dims, keep)) += m(i, j);
        }
    }
    return out;
}

Matrix permute(const Matrix& m, std::span<const std::size_t> dims, std::span<const std::size_t> order) {
    const std::size_t n = product(dims);
    std::vector<std::size_t> new_dims;
    for (auto o : order) new_dims.push_back(dims[o]);
    auto new_index = [&](std::size_t i) {
        const auto d = digits_of(i, dims);
        std::size_t idx = 0;
        for (std::size_t j = 0; j < order.size(); ++j) idx = idx * new_dims[j] + d[order[j]];
        return idx;
    };
    Matrix out(m.rows(), m.cols());
    for (std::size_t i = 0; i < n; ++i)
        for (std::size_t j = 0; j < n; ++j) out(new_index(i), new_index(j)) = m(i, j);
    return out;
}

Matrix embed(const Matrix& op, std::span<const std::size_t> dims, std::span<const std::size_t> positions) {
    check_positions(dims, positions);
    // op ⊗ 1 with op's factors first, then move them into place
    const auto rest = complement(dims.size(), positions);
    std::size_t dr = 1;
    for (auto p : rest) dr *= dims[p];
    const Matrix big = kron(op, Matrix::Identity(dr, dr));
    std::vector<std::size_t> cur_dims, order(dims.size());
    for (auto p : positions) cur_dims.push_back(dims[p]);
    for (auto p : rest) cur_dims.push_back(dims[p]);
    // factor f of the target sits at position pos_in_cur[f] of cur
    std::vector<std::size_t> pos_in_cur(dims.size());
    std::size_t k = 0;
    for (auto p : positions) pos_in_cur[p] = k++;
    for (auto p : rest) pos_in_cur[p] = k++;
    for (std::size_t f = 0; f < dims.size(); ++f) order[f] = pos_in_cur[f];
    return permute(big, cur_dims, order);
}

Matrix sandwich(const Matrix& rho, std::span<const std::size_t> dims, std::span<const std::size_t> positions,
                const Matrix& left, const Matrix& right) {
    const Matrix l = embed(left, dims, positions);
    const Matrix r = embed(right, dims, positions);
    return l * rho * r.adjoint();
}

}  // namespace serial

}  // namespace qcm::kernels
