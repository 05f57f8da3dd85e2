#include "qcm/tolerances.hpp"

#include <stdexcept>

namespace qcm {

namespace {

template <typename F>
void for_each_field(Tolerances& t, F&& f) {
    f("hermitian", t.hermitian);
    f("psd", t.psd);
    f("trace", t.trace);
    f("eigen_clip", t.eigen_clip);
    f("kraus", t.kraus);
    f("unitary", t.unitary);
    f("probability", t.probability);
    f("prune", t.prune);
    f("equivalence_state", t.equivalence_state);
    f("equivalence_prob", t.equivalence_prob);
    f("first_law", t.first_law);
    f("second_law", t.second_law);
    f("second_law_forms", t.second_law_forms);
    f("convention_average", t.convention_average);
    f("dephasing", t.dephasing);
    f("reconstruction", t.reconstruction);
    f("tpm", t.tpm);
}

}  // namespace

void Tolerances::set(const std::string& key, double value) {
    bool found = false;
    for_each_field(*this, [&](const char* name, double& field) {
        if (key == name) {
            field = value;
            found = true;
        }
    });
    if (!found) throw std::invalid_argument("unknown tolerance key '" + key + "'");
    if (!(value >= 0.0)) throw std::invalid_argument("tolerance '" + key + "' must be non-negative");
}

std::map<std::string, double> Tolerances::as_map() const {
    std::map<std::string, double> out;
    auto copy = *this;
    for_each_field(copy, [&](const char* name, double& field) { out[name] = field; });
    return out;
}

}  // namespace qcm
