#pragma once

#include <cstddef>
#include <memory>
#include <optional>
#include <string>
#include <string_view>
#include <vector>

namespace qcm {

/// Ordered set of labeled tensor factors. Labels are S, B, P or one of
/// A<k>, I<k>, N<k> (ancilla, informational and non-informational memory
/// of step k). Declaration order fixes the canonical factor order.
class FactorRegistry {
public:
    struct Factor {
        std::string label;
        std::size_t dim;
    };

    explicit FactorRegistry(std::vector<Factor> factors);

    std::size_t size() const { return factors_.size(); }
    const std::vector<Factor>& factors() const { return factors_; }
    const Factor& factor(std::size_t index) const { return factors_.at(index); }
    std::size_t dim(std::size_t index) const { return factors_.at(index).dim; }
    std::size_t total_dim() const;

    std::optional<std::size_t> find(std::string_view label) const;
    /// Throws std::invalid_argument for an unknown label.
    std::size_t index_of(std::string_view label) const;

    static bool valid_label(std::string_view label);

private:
    std::vector<Factor> factors_;
};

using RegistryPtr = std::shared_ptr<const FactorRegistry>;

/// Sorted list of factor indices into one registry.
class Support {
public:
    Support() = default;
    explicit Support(std::vector<std::size_t> indices);

    static Support of(const FactorRegistry& reg, const std::vector<std::string>& labels);

    const std::vector<std::size_t>& indices() const { return indices_; }
    std::size_t size() const { return indices_.size(); }
    bool empty() const { return indices_.empty(); }
    bool contains(std::size_t index) const;
    bool contains(const Support& other) const;
    bool disjoint(const Support& other) const;
    /// Position of a registry index inside this support.
    std::size_t position(std::size_t index) const;

    Support unite(const Support& other) const;
    Support minus(const Support& other) const;

    std::vector<std::size_t> dims(const FactorRegistry& reg) const;
    std::size_t total_dim(const FactorRegistry& reg) const;
    std::vector<std::string> labels(const FactorRegistry& reg) const;

    friend bool operator==(const Support&, const Support&) = default;

private:
    std::vector<std::size_t> indices_;
};

}  // namespace qcm
