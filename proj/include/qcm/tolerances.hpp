#pragma once

#include <map>
#include <string>

namespace qcm {

/// Numerical tolerances used across the library. Defaults follow the
/// per-module contracts; the CLI can override any entry by name.
struct Tolerances {
    double hermitian = 1e-12;        // Hermitian flag check, max-norm
    double psd = 1e-10;              // smallest admissible eigenvalue (negated)
    double trace = 1e-12;            // trace preservation of partial traces
    double eigen_clip = 1e-14;       // eigenvalues below contribute 0 ln 0 = 0
    double kraus = 1e-10;            // sum K^dag K = 1
    double unitary = 1e-10;          // U^dag U = 1
    double probability = 1e-10;      // total probability, weight sums
    double prune = 1e-14;            // branch pruning threshold
    double equivalence_state = 1e-9; // autonomous vs process tensor, states
    double equivalence_prob = 1e-10; // autonomous vs process tensor, p(r)
    double first_law = 1e-9;
    double second_law = 1e-9;        // Sigma >= -tol
    double second_law_forms = 1e-8;  // |Sigma_FL - Sigma_relent|
    double convention_average = 1e-10;
    double dephasing = 1e-12;
    double reconstruction = 1e-9;    // instrument rebuilt from its dilation
    double tpm = 1e-10;

    /// Set a tolerance by field name; throws std::invalid_argument on an
    /// unknown key.
    void set(const std::string& key, double value);
    std::map<std::string, double> as_map() const;
};

}  // namespace qcm
