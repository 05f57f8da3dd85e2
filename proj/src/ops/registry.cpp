#include "qcm/ops/registry.hpp"

#include <algorithm>
#include <cctype>
#include <set>
#include <stdexcept>

namespace qcm {

FactorRegistry::FactorRegistry(std::vector<Factor> factors) : factors_(std::move(factors)) {
    std::set<std::string> seen;
    for (const auto& f : factors_) {
        if (!valid_label(f.label))
            throw std::invalid_argument("invalid factor label '" + f.label + "'");
        if (f.dim < 1)
            throw std::invalid_argument("factor '" + f.label + "' has dimension 0");
        if (!seen.insert(f.label).second)
            throw std::invalid_argument("duplicate factor label '" + f.label + "'");
    }
}

std::size_t FactorRegistry::total_dim() const {
    std::size_t d = 1;
    for (const auto& f : factors_) d *= f.dim;
    return d;
}

std::optional<std::size_t> FactorRegistry::find(std::string_view label) const {
    for (std::size_t i = 0; i < factors_.size(); ++i)
        if (factors_[i].label == label) return i;
    return std::nullopt;
}

std::size_t FactorRegistry::index_of(std::string_view label) const {
    if (auto i = find(label)) return *i;
    throw std::invalid_argument("unknown factor label '" + std::string(label) + "'");
}

bool FactorRegistry::valid_label(std::string_view label) {
    if (label == "S" || label == "B" || label == "P") return true;
    if (label.size() < 2) return false;
    if (label[0] != 'A' && label[0] != 'I' && label[0] != 'N') return false;
    return std::all_of(label.begin() + 1, label.end(),
                       [](char c) { return std::isdigit(static_cast<unsigned char>(c)); });
}

Support::Support(std::vector<std::size_t> indices) : indices_(std::move(indices)) {
    std::sort(indices_.begin(), indices_.end());
    if (std::adjacent_find(indices_.begin(), indices_.end()) != indices_.end())
        throw std::invalid_argument("support lists a factor twice");
}

Support Support::of(const FactorRegistry& reg, const std::vector<std::string>& labels) {
    std::vector<std::size_t> idx;
    idx.reserve(labels.size());
    for (const auto& l : labels) idx.push_back(reg.index_of(l));
    return Support(std::move(idx));
}

bool Support::contains(std::size_t index) const {
    return std::binary_search(indices_.begin(), indices_.end(), index);
}

bool Support::contains(const Support& other) const {
    return std::includes(indices_.begin(), indices_.end(), other.indices_.begin(), other.indices_.end());
}

bool Support::disjoint(const Support& other) const {
    for (auto i : other.indices_)
        if (contains(i)) return false;
    return true;
}

std::size_t Support::position(std::size_t index) const {
    auto it = std::lower_bound(indices_.begin(), indices_.end(), index);
    if (it == indices_.end() || *it != index) throw std::invalid_argument("factor not in support");
    return static_cast<std::size_t>(it - indices_.begin());
}

Support Support::unite(const Support& other) const {
    std::vector<std::size_t> out;
    std::set_union(indices_.begin(), indices_.end(), other.indices_.begin(), other.indices_.end(),
                   std::back_inserter(out));
    return Support(std::move(out));
}

Support Support::minus(const Support& other) const {
    std::vector<std::size_t> out;
    std::set_difference(indices_.begin(), indices_.end(), other.indices_.begin(), other.indices_.end(),
                        std::back_inserter(out));
    return Support(std::move(out));
}

std::vector<std::size_t> Support::dims(const FactorRegistry& reg) const {
    std::vector<std::size_t> d;
    d.reserve(indices_.size());
    for (auto i : indices_) d.push_back(reg.dim(i));
    return d;
}

std::size_t Support::total_dim(const FactorRegistry& reg) const {
    std::size_t d = 1;
    for (auto i : indices_) d *= reg.dim(i);
    return d;
}

std::vector<std::string> Support::labels(const FactorRegistry& reg) const {
    std::vector<std::string> l;
    for (auto i : indices_) l.push_back(reg.factor(i).label);
    return l;
}

}  // namespace qcm
