#include "qcm/channels/kraus.hpp"

#include <limits>
#include <stdexcept>
#include <string>

#include "qcm/ops/kernels.hpp"
#include "qcm/ops/linalg.hpp"

namespace qcm::channels {

namespace {

std::size_t check_square_family(const std::vector<Matrix>& kraus, std::size_t dim) {
    for (const auto& k : kraus) {
        if (k.rows() != k.cols()) throw std::invalid_argument("Kraus operator is not square");
        if (dim == 0) dim = static_cast<std::size_t>(k.rows());
        if (static_cast<std::size_t>(k.rows()) != dim) throw std::invalid_argument("Kraus operators differ in dimension");
    }
    return dim;
}

void check_complete(const std::vector<Matrix>& kraus, double tol) {
    const double r = completeness_residual(kraus);
    if (r > tol)
        throw std::invalid_argument("Kraus operators are not trace preserving: ||sum K^dag K - 1||_max = " +
                                    std::to_string(r));
}

}  // namespace

double completeness_residual(const std::vector<Matrix>& kraus) {
    if (kraus.empty()) return std::numeric_limits<double>::infinity();
    const auto d = kraus.front().rows();
    Matrix sum = Matrix::Zero(d, d);
    for (const auto& k : kraus) sum += k.adjoint() * k;
    return max_norm(sum - Matrix::Identity(d, d));
}

KrausChannel::KrausChannel(std::vector<std::string> support, std::vector<Matrix> kraus, double tol)
    : support_(std::move(support)), kraus_(std::move(kraus)) {
    if (kraus_.empty()) throw std::invalid_argument("channel needs at least one Kraus operator");
    check_square_family(kraus_, 0);
    check_complete(kraus_, tol);
}

KrausChannel KrausChannel::identity(std::vector<std::string> support, std::size_t dim) {
    const auto d = static_cast<Eigen::Index>(dim);
    return {std::move(support), {Matrix::Identity(d, d)}};
}

Instrument::Instrument(std::vector<std::string> support, std::vector<std::vector<Matrix>> outcomes, double tol)
    : support_(std::move(support)), outcomes_(std::move(outcomes)) {
    if (outcomes_.empty()) throw std::invalid_argument("instrument needs at least one outcome");
    for (std::size_t r = 0; r < outcomes_.size(); ++r) {
        if (outcomes_[r].empty())
            throw std::invalid_argument("instrument outcome " + std::to_string(r + 1) + " has no Kraus operators");
        dim_ = check_square_family(outcomes_[r], dim_);
    }
    check_complete(flattened(), tol);
}

Instrument::Instrument(const KrausChannel& channel)
    : support_(channel.support()), outcomes_{channel.kraus()}, dim_(channel.dim()) {}

const std::vector<Matrix>& Instrument::kraus(int r) const {
    if (r < 1 || static_cast<std::size_t>(r) > outcomes_.size())
        throw std::invalid_argument("unknown outcome label " + std::to_string(r));
    return outcomes_[static_cast<std::size_t>(r - 1)];
}

std::vector<Matrix> Instrument::flattened() const {
    std::vector<Matrix> all;
    for (const auto& o : outcomes_) all.insert(all.end(), o.begin(), o.end());
    return all;
}

std::vector<int> Instrument::flattened_outcomes() const {
    std::vector<int> labels;
    for (std::size_t r = 0; r < outcomes_.size(); ++r) labels.insert(labels.end(), outcomes_[r].size(), int(r + 1));
    return labels;
}

KrausChannel Instrument::average() const { return {support_, flattened()}; }

Matrix superoperator(const std::vector<Matrix>& kraus) {
    const auto d = kraus.front().rows();
    Matrix s = Matrix::Zero(d * d, d * d);
    for (const auto& k : kraus) s += kernels::kron(k, k.conjugate());
    return s;
}

Matrix choi_matrix(const std::vector<Matrix>& kraus) {
    const auto d = kraus.front().rows();
    Matrix c = Matrix::Zero(d * d, d * d);
    for (Eigen::Index i = 0; i < d; ++i)
        for (Eigen::Index j = 0; j < d; ++j) {
            Matrix out = Matrix::Zero(d, d);
            for (const auto& k : kraus) out += k.col(i) * k.col(j).adjoint();
            c.block(i * d, j * d, d, d) = out;
        }
    return c;
}

double choi_min_eigenvalue(const std::vector<Matrix>& kraus) {
    return eigh(choi_matrix(kraus), 1e-10).values.minCoeff();
}

Matrix apply_kraus(const std::vector<Matrix>& kraus, const Matrix& rho, std::span<const std::size_t> dims,
                   std::span<const std::size_t> positions) {
    Matrix out = Matrix::Zero(rho.rows(), rho.cols());
    const bool whole = positions.size() == dims.size();
    for (const auto& k : kraus) {
        if (whole)
            out += k * rho * k.adjoint();
        else
            out += kernels::sandwich(rho, dims, positions, k, k);
    }
    return out;
}

DensityOperator apply_cp(const std::vector<Matrix>& kraus, const std::vector<std::string>& support,
                         const DensityOperator& rho, const Tolerances& tol) {
    const auto& reg = rho.registry();
    const Support sup = Support::of(*reg, support);
    if (!rho.support().contains(sup)) throw std::invalid_argument("apply_cp: map acts outside the state support");
    Operator out = Operator::zero(reg, rho.support());
    for (const auto& k : kraus) {
        const Operator kop(reg, sup, k);
        out += rho.op().sandwich(kop, kop);
    }
    return DensityOperator::unnormalized(std::move(out), tol);
}

DensityOperator apply_cp(const Instrument& inst, int r, const DensityOperator& rho, const Tolerances& tol) {
    return apply_cp(inst.kraus(r), inst.support(), rho, tol);
}

DensityOperator apply_cp(const KrausChannel& ch, const DensityOperator& rho, const Tolerances& tol) {
    return apply_cp(ch.kraus(), ch.support(), rho, tol);
}

}  // namespace qcm::channels
