#pragma once

#include <filesystem>
#include <map>
#include <optional>
#include <stdexcept>
#include <string>
#include <string_view>
#include <vector>

#include "qcm/types.hpp"

namespace qcm::harness {

/// Input error with the offending field (JSON-pointer path) and, for
/// syntax errors, the line and column.
class ScenarioError : public std::runtime_error {
public:
    ScenarioError(std::string field, const std::string& msg, std::size_t line = 0, std::size_t column = 0);
    const std::string& field() const { return field_; }
    std::size_t line() const { return line_; }
    std::size_t column() const { return column_; }

private:
    std::string field_;
    std::size_t line_ = 0, column_ = 0;
};

struct StateSpec {
    enum class Kind { gibbs, matrix, pure, maximally_mixed };
    Kind kind = Kind::maximally_mixed;
    double beta = 0.0;  // gibbs
    Matrix matrix;      // matrix
    Vector vector;      // pure
};

struct RegisterSpec {
    std::string label;
    std::size_t dim = 1;
    std::optional<StateSpec> state;
};

struct ExplicitDilation {
    Matrix ancilla_state;
    Matrix unitary;
    std::vector<Matrix> projectors;
};

/// Either Kraus operators grouped by outcome, or an explicit dilation
/// (the instrument is then derived from it).
struct InstrumentSpec {
    std::vector<std::vector<Matrix>> outcomes;
    std::optional<ExplicitDilation> dilation;
};

struct FeedbackSpec {
    Record prefix;
    InstrumentSpec instrument;
};

struct StepSpec {
    double time = 0.0;
    double width = 0.0;
    std::size_t ancilla_dim = 0;  // 0: minimal
    std::optional<Matrix> h_a;
    InstrumentSpec instrument;
    std::vector<FeedbackSpec> feedback;
};

struct SegmentSpec {
    double start = 0.0;
    std::string hamiltonian;
};

struct OverrideSpec {
    Record prefix;
    std::vector<SegmentSpec> segments;
};

struct ScenarioFile {
    std::string name;
    double beta = 0.0;
    double t_start = 0.0;
    RegisterSpec system{"S", 2, {}};
    RegisterSpec bath{"B", 1, {}};
    /// Joint Gibbs state of S⊗B at this β (overrides register states).
    std::optional<double> joint_gibbs;
    std::vector<std::pair<std::string, Matrix>> hamiltonians;  // named H_S, declaration order
    Matrix h_b, v_sb;
    std::vector<SegmentSpec> segments;
    std::vector<OverrideSpec> overrides;
    std::vector<StepSpec> steps;
    double e_idf = 0.0, e_nidf = 0.0;
    std::vector<double> report_times;
    bool second_law_checks = true;
    std::map<std::string, double> tolerances;
};

struct ParseOptions {
    /// Reject Kraus sets that are not trace preserving. `verify` turns
    /// this off so that a broken instrument becomes a failed check.
    bool check_kraus = true;
    double kraus_tol = 1e-10;
};

ScenarioFile parse_scenario_text(std::string_view text, const ParseOptions& opt = {});
ScenarioFile parse_scenario(const std::filesystem::path& path, const ParseOptions& opt = {});

/// Canonical JSON: every operator as an explicit matrix, fixed key order.
std::string emit_scenario(const ScenarioFile& s);

/// Ancilla register size of a step: explicit dilation, declared size, or
/// the largest Kraus count over its variants.
std::size_t ancilla_dim_of(const StepSpec& step);

bool same_scenario(const ScenarioFile& a, const ScenarioFile& b);

/// "a+bi" literals; plain reals also accepted.
cplx parse_complex(std::string_view text);
std::string format_complex(cplx z);

}  // namespace qcm::harness
