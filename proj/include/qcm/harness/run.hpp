#pragma once

#include <cstdint>
#include <filesystem>
#include <limits>
#include <optional>
#include <string>
#include <string_view>
#include <vector>

#include "qcm/harness/scenario.hpp"
#include "qcm/sim/simulator.hpp"
#include "qcm/thermo/ledger.hpp"
#include "qcm/tolerances.hpp"

namespace qcm::harness {

enum class Mode { autonomous, process_tensor, both };
Mode parse_mode(std::string_view s);
std::string to_string(Mode m);

struct RunConfig {
    Mode mode = Mode::both;
    Tolerances tol;
    std::uint64_t seed = 0;
    std::size_t max_branches = std::numeric_limits<std::size_t>::max();
};

/// Normalized system state of one record at one time.
struct BranchState {
    double time = 0.0;
    std::size_t steps_done = 0;
    Record record;
    double p = 0.0;
    Matrix rho_s;
};

struct EquivalenceRow {
    double time = 0.0;
    Record record;
    double p_autonomous = 0.0, p_direct = 0.0;
    double prob_dev = 0.0, state_dev = 0.0;
};

struct EquivalenceReport {
    bool applicable = false;
    std::string reason;
    std::vector<EquivalenceRow> rows;
    double max_prob_dev = 0.0, max_state_dev = 0.0;
    bool passed = true;
};

struct CheckResult {
    std::string name;
    double value = 0.0;
    double tolerance = 0.0;
    bool passed = true;
    std::string detail;
};

struct ReportBundle {
    std::string command;
    std::string scenario_name;
    std::string checksum;  // FNV-1a 64 of the scenario bytes
    Mode mode = Mode::both;
    std::uint64_t seed = 0;
    std::size_t max_branches = 0;
    Tolerances tol;
    std::vector<double> report_times;
    std::vector<BranchState> autonomous, direct;
    std::optional<sim::SimResult> sim;
    std::optional<thermo::ThermoLedger> thermo;
    std::vector<thermo::ConventionCheck> conventions;
    EquivalenceReport equivalence;
    std::vector<CheckResult> checks;
    std::vector<std::string> caveats;
    double pruned_mass = 0.0;

    bool passed() const;
};

std::string fnv1a64(std::string_view bytes);

/// Simulation in the requested mode with thermodynamic ledgers (autonomous
/// side, when beta > 0) and, in `both` mode, the equivalence comparison.
ReportBundle run_scenario(const ScenarioFile& s, std::string_view source, const RunConfig& cfg);

/// Every invariant suite on one scenario; failures are results.
ReportBundle verify_scenario(const ScenarioFile& s, std::string_view source, const RunConfig& cfg);

std::string report_json(const ReportBundle& b);
std::string report_csv(const ReportBundle& b);
/// report.json and branches.csv in `dir` (created if needed).
void write_report(const ReportBundle& b, const std::filesystem::path& dir);

}  // namespace qcm::harness
