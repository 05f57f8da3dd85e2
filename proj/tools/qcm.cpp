// qcm: run, verify and compare quantum causal model scenarios.

#include <cstdio>
#include <fstream>
#include <iostream>
#include <sstream>

#include <CLI11.hpp>
#include <json.hpp>

#include "qcm/channels/kraus.hpp"
#include "qcm/dilation/dilation.hpp"
#include "qcm/harness/build.hpp"
#include "qcm/harness/run.hpp"
#include "qcm/ops/linalg.hpp"

namespace {

using namespace qcm;
using namespace qcm::harness;

enum Exit { ok = 0, check_failed = 1, input_error = 2 };

struct Common {
    std::string scenario;
    std::string mode = "both";
    std::string out;
    std::vector<std::string> overrides;
    std::uint64_t seed = 0;
    std::size_t max_branches = 1u << 16;
};

std::string slurp(const std::string& path) {
    std::ifstream f(path, std::ios::binary);
    if (!f) throw ScenarioError("", "cannot open '" + path + "'");
    std::ostringstream s;
    s << f.rdbuf();
    return s.str();
}

RunConfig config(const Common& c, const ScenarioFile& s) {
    RunConfig cfg;
    cfg.mode = parse_mode(c.mode);
    cfg.tol = scenario_tolerances(s);
    for (const auto& kv : c.overrides) {
        const auto eq = kv.find('=');
        if (eq == std::string::npos) throw std::invalid_argument("--tol-override expects key=value, got '" + kv + "'");
        std::size_t used = 0;
        const double v = std::stod(kv.substr(eq + 1), &used);
        if (used != kv.size() - eq - 1) throw std::invalid_argument("bad tolerance value in '" + kv + "'");
        cfg.tol.set(kv.substr(0, eq), v);
    }
    cfg.seed = c.seed;
    cfg.max_branches = c.max_branches;
    return cfg;
}

void print_checks(const ReportBundle& b) {
    for (const auto& c : b.checks)
        std::printf("%-32s %-4s value=%.3e tol=%.1e%s%s\n", c.name.c_str(), c.passed ? "ok" : "FAIL", c.value,
                    c.tolerance, c.detail.empty() ? "" : "  ", c.detail.c_str());
    for (const auto& c : b.caveats) std::printf("caveat: %s\n", c.c_str());
}

void summarize(const ReportBundle& b) {
    std::printf("scenario %s  checksum %s  mode %s\n", b.scenario_name.c_str(), b.checksum.c_str(),
                to_string(b.mode).c_str());
    std::printf("branches: %zu autonomous, %zu process-tensor, pruned mass %.3e\n", b.autonomous.size(),
                b.direct.size(), b.pruned_mass);
    if (b.thermo && !b.thermo->ensemble.empty()) {
        const auto& e = b.thermo->ensemble.back();
        std::printf("t=%g  W=%.10g  Q=%.10g  dU=%.10g  Sigma=%.10g\n", e.time, e.W, e.Q, e.U - b.thermo->ensemble.front().U,
                    e.sigma_first_law);
    }
    if (b.mode == Mode::both && !b.equivalence.applicable && !b.equivalence.reason.empty())
        std::printf("equivalence not checked: %s\n", b.equivalence.reason.c_str());
}

int finish(const ReportBundle& b, const Common& c) {
    if (!c.out.empty()) write_report(b, c.out);
    print_checks(b);
    return b.passed() ? ok : check_failed;
}

int cmd_run(const Common& c) {
    const std::string text = slurp(c.scenario);
    const auto s = parse_scenario_text(text);
    const auto b = run_scenario(s, text, config(c, s));
    summarize(b);
    return finish(b, c);
}

int cmd_equiv(Common c) {
    c.mode = "both";
    const std::string text = slurp(c.scenario);
    const auto s = parse_scenario_text(text);
    const auto b = run_scenario(s, text, config(c, s));
    if (!b.equivalence.applicable) {
        std::fprintf(stderr, "equiv: %s\n", b.equivalence.reason.c_str());
        return input_error;
    }
    std::printf("%zu conditional states compared: max |dp| = %.3e, max state deviation = %.3e\n",
                b.equivalence.rows.size(), b.equivalence.max_prob_dev, b.equivalence.max_state_dev);
    return finish(b, c);
}

int cmd_verify(const Common& c, std::size_t random_count) {
    if (random_count > 0) {
        bool all = true;
        for (std::size_t i = 0; i < random_count; ++i) {
            const auto s = random_scenario(c.seed + i);
            const std::string text = emit_scenario(s);
            const auto b = verify_scenario(s, text, config(c, s));
            std::printf("%s %s\n", b.passed() ? "ok  " : "FAIL", s.name.c_str());
            if (!b.passed()) print_checks(b);
            if (!c.out.empty()) write_report(b, std::filesystem::path(c.out) / s.name);
            all = all && b.passed();
        }
        return all ? ok : check_failed;
    }
    const std::string text = slurp(c.scenario);
    const auto s = parse_scenario_text(text, {.check_kraus = false});
    const auto b = verify_scenario(s, text, config(c, s));
    std::printf("verify %s  checksum %s\n", b.scenario_name.c_str(), b.checksum.c_str());
    return finish(b, c);
}

int cmd_dilate(const Common& c, int step) {
    const std::string text = slurp(c.scenario);
    const auto s = parse_scenario_text(text);
    const auto model = build_model(s, {config(c, s).tol, false});
    using json = nlohmann::ordered_json;
    auto mat = [](const Matrix& m) {
        json rows = json::array();
        for (Eigen::Index i = 0; i < m.rows(); ++i) {
            json row = json::array();
            for (Eigen::Index j = 0; j < m.cols(); ++j) row.push_back(format_complex(m(i, j)));
            rows.push_back(std::move(row));
        }
        return rows;
    };
    json out = json::array();
    for (std::size_t k = 0; k < model.steps().size(); ++k) {
        if (step >= 0 && static_cast<std::size_t>(step) != k) continue;
        for (const auto& v : model.step(k).variants) {
            const auto& d = v.hardware;
            json proj = json::array();
            for (const auto& p : d.projectors) proj.push_back(mat(p));
            out.push_back({{"step", k},
                           {"prefix", v.prefix},
                           {"system_dim", d.system_dim},
                           {"ancilla_dim", d.ancilla_dim},
                           {"ancilla_state", mat(d.ancilla_state)},
                           {"unitary", mat(d.unitary)},
                           {"projectors", std::move(proj)},
                           {"unitarity_residual", unitarity_residual(d.unitary)},
                           {"reconstruction_error", dilation::reconstruction_error(v.instrument, d)}});
        }
    }
    if (step >= 0 && out.empty()) throw std::invalid_argument("no step " + std::to_string(step));
    const std::string dump = out.dump(2) + "\n";
    if (c.out.empty()) {
        std::fputs(dump.c_str(), stdout);
    } else {
        std::filesystem::create_directories(c.out);
        std::ofstream(std::filesystem::path(c.out) / "dilation.json", std::ios::binary) << dump;
    }
    return ok;
}

void add_common(CLI::App* app, Common& c, bool scenario_required = true) {
    auto* opt = app->add_option("--scenario", c.scenario, "scenario file");
    if (scenario_required) opt->required()->check(CLI::ExistingFile);
    app->add_option("--mode", c.mode, "autonomous, process-tensor or both")
        ->check(CLI::IsMember({"autonomous", "process-tensor", "both"}));
    app->add_option("--out", c.out, "output directory for report.json and the CSV files");
    app->add_option("--tol-override", c.overrides, "tolerance override, key=value (repeatable)");
    app->add_option("--seed", c.seed, "seed for randomized checks");
    app->add_option("--max-branches", c.max_branches, "abort when more branches survive")->check(CLI::PositiveNumber);
}

}  // namespace

int main(int argc, char** argv) {
    CLI::App app{"Autonomous quantum causal model simulator"};
    app.require_subcommand(1);
    Common run_c, verify_c, equiv_c, dilate_c;
    std::size_t random_count = 0;
    int dilate_step = -1;

    auto* run = app.add_subcommand("run", "simulate a scenario and write reports");
    add_common(run, run_c);
    auto* verify = app.add_subcommand("verify", "run every invariant check on a scenario");
    add_common(verify, verify_c, false);
    verify->add_option("--random", random_count, "verify this many random scenarios instead (seeded by --seed)");
    auto* equiv = app.add_subcommand("equiv", "compare autonomous and process-tensor evaluations");
    add_common(equiv, equiv_c);
    auto* dilate = app.add_subcommand("dilate", "dump the dilation of each instrument");
    add_common(dilate, dilate_c);
    dilate->add_option("--step", dilate_step, "only this step (0-based)");

    try {
        app.parse(argc, argv);
    } catch (const CLI::ParseError& e) {
        const int rc = app.exit(e);
        return rc == 0 ? ok : input_error;
    }

    try {
        if (*run) return cmd_run(run_c);
        if (*verify) {
            if (verify_c.scenario.empty() && random_count == 0) {
                std::fprintf(stderr, "verify: --scenario or --random is required\n");
                return input_error;
            }
            return cmd_verify(verify_c, random_count);
        }
        if (*equiv) return cmd_equiv(equiv_c);
        if (*dilate) return cmd_dilate(dilate_c, dilate_step);
    } catch (const ScenarioError& e) {
        std::fprintf(stderr, "input error: %s\n", e.what());
        return input_error;
    } catch (const std::invalid_argument& e) {
        std::fprintf(stderr, "input error: %s\n", e.what());
        return input_error;
    } catch (const std::domain_error& e) {
        std::fprintf(stderr, "cannot evaluate: %s\n", e.what());
        return input_error;
    } catch (const std::exception& e) {
        std::fprintf(stderr, "error: %s\n", e.what());
        return input_error;
    }
    return ok;
}
