#include "qcm/ops/operator.hpp"

#include <algorithm>
#include <stdexcept>

#include "qcm/ops/kernels.hpp"

namespace qcm {

namespace {

std::vector<std::size_t> positions_within(const Support& outer, const Support& inner) {
    std::vector<std::size_t> pos;
    pos.reserve(inner.size());
    for (auto idx : inner.indices()) pos.push_back(outer.position(idx));
    return pos;
}

}  // namespace

Operator::Operator(RegistryPtr registry, Support support, Matrix matrix)
    : registry_(std::move(registry)), support_(std::move(support)), matrix_(std::move(matrix)) {
    if (!registry_) throw std::invalid_argument("operator needs a registry");
    for (auto i : support_.indices())
        if (i >= registry_->size()) throw std::invalid_argument("support index outside registry");
    const auto d = static_cast<Eigen::Index>(support_.total_dim(*registry_));
    if (matrix_.rows() != d || matrix_.cols() != d)
        throw std::invalid_argument("operator matrix is " + std::to_string(matrix_.rows()) + "x" +
                                    std::to_string(matrix_.cols()) + " but its support has dimension " +
                                    std::to_string(d));
}

Operator::Operator(RegistryPtr registry, const std::vector<std::string>& labels, Matrix matrix)
    : Operator(registry, Support::of(*registry, labels), std::move(matrix)) {}

Operator Operator::identity(RegistryPtr registry, Support support) {
    const auto d = static_cast<Eigen::Index>(support.total_dim(*registry));
    return {std::move(registry), std::move(support), Matrix::Identity(d, d)};
}

Operator Operator::zero(RegistryPtr registry, Support support) {
    const auto d = static_cast<Eigen::Index>(support.total_dim(*registry));
    return {std::move(registry), std::move(support), Matrix::Zero(d, d)};
}

Operator Operator::hermitian(RegistryPtr registry, Support support, Matrix matrix, double tol) {
    Operator op(std::move(registry), std::move(support), std::move(matrix));
    const double r = hermiticity_residual(op.matrix_);
    if (r > tol)
        throw std::invalid_argument("operator is not Hermitian (residual " + std::to_string(r) + ")");
    return op;
}

void Operator::check_same_registry(const Operator& other) const {
    if (!registry_ || registry_ != other.registry_)
        throw std::invalid_argument("operators belong to different registries");
}

Operator Operator::embed(const Support& target) const {
    if (target == support_) return *this;
    if (!target.contains(support_)) throw std::invalid_argument("embed target does not contain the support");
    const auto dims = target.dims(*registry_);
    const auto pos = positions_within(target, support_);
    return {registry_, target, kernels::embed(matrix_, dims, pos)};
}

Operator Operator::partial_trace(const Support& keep) const {
    if (keep == support_) return *this;
    if (!support_.contains(keep)) throw std::invalid_argument("partial_trace: kept factors not in support");
    const auto dims = support_.dims(*registry_);
    const auto pos = positions_within(support_, keep);
    return {registry_, keep, kernels::partial_trace(matrix_, dims, pos)};
}

Operator Operator::partial_trace(const std::vector<std::string>& keep_labels) const {
    return partial_trace(Support::of(*registry_, keep_labels));
}

Operator Operator::trace_out(const Support& factors) const {
    if (!support_.contains(factors)) throw std::invalid_argument("trace_out: factor not in support");
    return partial_trace(support_.minus(factors));
}

Operator Operator::sandwich(const Operator& left, const Operator& right) const {
    check_same_registry(left);
    check_same_registry(right);
    if (left.support_ != right.support_) throw std::invalid_argument("sandwich: left/right supports differ");
    if (!support_.contains(left.support_)) throw std::invalid_argument("sandwich: operator support not contained");
    if (left.support_ == support_) return {registry_, support_, left.matrix_ * matrix_ * right.matrix_.adjoint()};
    const auto dims = support_.dims(*registry_);
    const auto pos = positions_within(support_, left.support_);
    return {registry_, support_, kernels::sandwich(matrix_, dims, pos, left.matrix_, right.matrix_)};
}

cplx Operator::expectation(const Operator& observable) const {
    check_same_registry(observable);
    if (!support_.contains(observable.support_))
        throw std::invalid_argument("expectation: observable acts outside the state support");
    const Operator reduced = partial_trace(observable.support_);
    // tr{A ρ} = sum_ij A_ij ρ_ji
    return (observable.matrix_.array() * reduced.matrix_.transpose().array()).sum();
}

Operator& Operator::operator+=(const Operator& other) {
    check_same_registry(other);
    const Support u = support_.unite(other.support_);
    if (u != support_) *this = embed(u);
    matrix_ += other.embed(u).matrix_;
    return *this;
}

Operator& Operator::operator-=(const Operator& other) {
    check_same_registry(other);
    const Support u = support_.unite(other.support_);
    if (u != support_) *this = embed(u);
    matrix_ -= other.embed(u).matrix_;
    return *this;
}

Operator& Operator::operator*=(cplx s) {
    matrix_ *= s;
    return *this;
}

Operator operator*(const Operator& a, const Operator& b) {
    a.check_same_registry(b);
    const Support u = a.support_.unite(b.support_);
    return {a.registry_, u, a.embed(u).matrix_ * b.embed(u).matrix_};
}

Operator tensor(const Operator& a, const Operator& b) {
    if (!a.registry() || a.registry() != b.registry())
        throw std::invalid_argument("tensor: operators belong to different registries");
    if (!a.support().disjoint(b.support())) throw std::invalid_argument("tensor: supports overlap");
    const Support u = a.support().unite(b.support());
    const Matrix k = kernels::kron(a.matrix(), b.matrix());
    // k is ordered (a factors, b factors); move into registry order
    std::vector<std::size_t> cur_dims = a.support().dims(*a.registry());
    for (auto d : b.support().dims(*b.registry())) cur_dims.push_back(d);
    std::vector<std::size_t> cur_index = a.support().indices();
    for (auto i : b.support().indices()) cur_index.push_back(i);
    std::vector<std::size_t> order;
    bool identity = true;
    for (auto idx : u.indices()) {
        const auto it = std::find(cur_index.begin(), cur_index.end(), idx);
        order.push_back(static_cast<std::size_t>(it - cur_index.begin()));
        identity = identity && order.back() == order.size() - 1;
    }
    if (identity) return {a.registry(), u, k};
    return {a.registry(), u, kernels::permute(k, cur_dims, order)};
}

double max_norm(const Operator& a) { return max_norm(a.matrix()); }

}  // namespace qcm
