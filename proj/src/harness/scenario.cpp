#include "qcm/harness/scenario.hpp"

#include <charconv>
#include <cmath>
#include <fstream>
#include <sstream>

#include <json.hpp>

#include "qcm/ops/kernels.hpp"
#include "qcm/ops/linalg.hpp"

namespace qcm::harness {

using json = nlohmann::ordered_json;

ScenarioError::ScenarioError(std::string field, const std::string& msg, std::size_t line, std::size_t column)
    : std::runtime_error(line ? "line " + std::to_string(line) + ", column " + std::to_string(column) + ": " + msg
                              : (field.empty() ? msg : field + ": " + msg)),
      field_(std::move(field)),
      line_(line),
      column_(column) {}

namespace {

[[noreturn]] void fail(const std::string& path, const std::string& msg) { throw ScenarioError(path, msg); }

double to_double(std::string_view s, const std::string& path) {
    double v = 0.0;
    if (s.empty()) fail(path, "empty number");
    if (s.front() == '+') s.remove_prefix(1);
    const auto [p, ec] = std::from_chars(s.data(), s.data() + s.size(), v);
    if (ec != std::errc() || p != s.data() + s.size()) fail(path, "malformed number '" + std::string(s) + "'");
    return v;
}

cplx complex_from(std::string_view text, const std::string& path) {
    std::string s;
    for (char c : text)
        if (!std::isspace(static_cast<unsigned char>(c))) s.push_back(c);
    if (s.empty()) fail(path, "empty complex literal");
    if (s.back() != 'i' && s.back() != 'j') return {to_double(s, path), 0.0};
    s.pop_back();
    // split at the last sign that is not an exponent sign
    std::size_t split = std::string::npos;
    for (std::size_t i = s.size(); i-- > 1;)
        if ((s[i] == '+' || s[i] == '-') && s[i - 1] != 'e' && s[i - 1] != 'E') {
            split = i;
            break;
        }
    const std::string re = split == std::string::npos ? "" : s.substr(0, split);
    std::string im = split == std::string::npos ? s : s.substr(split);
    if (im.empty() || im == "+") im = "1";
    if (im == "-") im = "-1";
    return {re.empty() ? 0.0 : to_double(re, path), to_double(im, path)};
}

const json& need(const json& j, const char* key, const std::string& path) {
    if (!j.is_object()) fail(path, "expected an object");
    auto it = j.find(key);
    if (it == j.end()) fail(path, std::string("missing field '") + key + "'");
    return *it;
}

double number(const json& j, const std::string& path) {
    if (!j.is_number()) fail(path, "expected a number");
    return j.get<double>();
}

double number_or(const json& j, const char* key, double def, const std::string& path) {
    auto it = j.find(key);
    return it == j.end() ? def : number(*it, path + "/" + key);
}

cplx complex_value(const json& j, const std::string& path) {
    if (j.is_number()) return {j.get<double>(), 0.0};
    if (j.is_string()) return complex_from(j.get<std::string>(), path);
    fail(path, "expected a number or an \"a+bi\" string");
}

Matrix matrix_value(const json& j, const std::string& path) {
    if (!j.is_array() || j.empty()) fail(path, "expected a non-empty array of rows");
    const auto rows = Eigen::Index(j.size());
    Eigen::Index cols = -1;
    Matrix m;
    for (Eigen::Index r = 0; r < rows; ++r) {
        const auto& row = j[std::size_t(r)];
        const std::string rp = path + "/" + std::to_string(r);
        if (!row.is_array()) fail(rp, "expected a row array");
        if (cols < 0) {
            cols = Eigen::Index(row.size());
            m = Matrix::Zero(rows, cols);
        }
        if (Eigen::Index(row.size()) != cols) fail(rp, "rows differ in length");
        for (Eigen::Index c = 0; c < cols; ++c) m(r, c) = complex_value(row[std::size_t(c)], rp + "/" + std::to_string(c));
    }
    return m;
}

Vector vector_value(const json& j, const std::string& path) {
    if (!j.is_array() || j.empty()) fail(path, "expected a non-empty array");
    Vector v(Eigen::Index(j.size()));
    for (std::size_t i = 0; i < j.size(); ++i) v(Eigen::Index(i)) = complex_value(j[i], path + "/" + std::to_string(i));
    return v;
}

Record record_value(const json& j, const std::string& path) {
    if (!j.is_array() || j.empty()) fail(path, "expected a non-empty outcome prefix");
    Record r;
    for (std::size_t i = 0; i < j.size(); ++i) {
        if (!j[i].is_number_integer() || j[i].get<int>() < 1) fail(path + "/" + std::to_string(i), "outcomes are integers >= 1");
        r.push_back(j[i].get<int>());
    }
    return r;
}

void check_square(const Matrix& m, std::size_t d, const std::string& path) {
    if (m.rows() != m.cols() || std::size_t(m.rows()) != d)
        fail(path, "expected a " + std::to_string(d) + "x" + std::to_string(d) + " matrix, got " +
                       std::to_string(m.rows()) + "x" + std::to_string(m.cols()));
}

void check_hermitian(const Matrix& m, const std::string& path) {
    const double r = hermiticity_residual(m);
    if (r > 1e-10 * std::max(1.0, max_norm(m))) fail(path, "matrix is not Hermitian (residual " + std::to_string(r) + ")");
}

void check_density(const Matrix& m, const std::string& path) {
    check_hermitian(m, path);
    if (std::abs(m.trace() - cplx(1.0)) > 1e-10) fail(path, "state does not have unit trace");
    if (eigh(0.5 * (m + m.adjoint()), 1.0).values.minCoeff() < -1e-10) fail(path, "state is not positive semidefinite");
}

Matrix pauli(char c, const std::string& path) {
    Matrix m(2, 2);
    switch (c) {
        case 'I': m << 1, 0, 0, 1; break;
        case 'X': m << 0, 1, 1, 0; break;
        case 'Y': m << 0, cplx(0, -1), cplx(0, 1), 0; break;
        case 'Z': m << 1, 0, 0, -1; break;
        default: fail(path, std::string("unknown Pauli letter '") + c + "'");
    }
    return m;
}

std::size_t qubits_of(std::size_t d) {
    std::size_t n = 0;
    while ((std::size_t(1) << n) < d) ++n;
    return (std::size_t(1) << n) == d ? n : std::size_t(-1);
}

using Registers = std::vector<std::pair<std::string, std::size_t>>;

Matrix term_value(const json& t, const Registers& regs, const std::string& path) {
    if (!t.is_object()) fail(path, "expected a term object");
    std::vector<std::size_t> pos;
    if (auto it = t.find("support"); it != t.end()) {
        if (!it->is_array() || it->empty()) fail(path + "/support", "expected register labels");
        for (std::size_t i = 0; i < it->size(); ++i) {
            const std::string lab = (*it)[i].is_string() ? (*it)[i].get<std::string>() : "";
            std::size_t p = regs.size();
            for (std::size_t k = 0; k < regs.size(); ++k)
                if (regs[k].first == lab) p = k;
            if (p == regs.size()) fail(path + "/support/" + std::to_string(i), "unknown register '" + lab + "'");
            if (!pos.empty() && p <= pos.back()) fail(path + "/support", "registers must be listed in order without repeats");
            pos.push_back(p);
        }
    } else {
        for (std::size_t k = 0; k < regs.size(); ++k) pos.push_back(k);
    }
    std::vector<std::size_t> dims;
    std::size_t sub = 1;
    for (const auto& r : regs) dims.push_back(r.second);
    for (auto p : pos) sub *= dims[p];
    const cplx coef = t.contains("coef") ? complex_value(t["coef"], path + "/coef") : cplx(1.0);
    Matrix local;
    int kinds = int(t.contains("pauli")) + int(t.contains("matrix")) + int(t.contains("number"));
    if (kinds != 1) fail(path, "a term has exactly one of 'pauli', 'matrix', 'number'");
    if (t.contains("pauli")) {
        if (!t["pauli"].is_string()) fail(path + "/pauli", "expected a string");
        const auto word = t["pauli"].get<std::string>();
        local = Matrix::Identity(1, 1);
        std::size_t need_len = 0;
        for (auto p : pos) {
            const auto q = qubits_of(dims[p]);
            if (q == std::size_t(-1)) fail(path + "/pauli", "Pauli products need qubit registers");
            need_len += q;
        }
        if (word.size() != need_len) fail(path + "/pauli", "expected " + std::to_string(need_len) + " Pauli letters");
        for (char c : word) local = kernels::kron(local, pauli(c, path + "/pauli"));
    } else if (t.contains("matrix")) {
        local = matrix_value(t["matrix"], path + "/matrix");
        check_square(local, sub, path + "/matrix");
    } else {
        if (pos.size() != 1) fail(path + "/number", "the number operator acts on one register");
        local = Matrix::Zero(Eigen::Index(sub), Eigen::Index(sub));
        for (Eigen::Index i = 0; i < Eigen::Index(sub); ++i) local(i, i) = double(i);
    }
    return kernels::embed(coef * local, dims, pos);
}

Matrix operator_value(const json& j, const Registers& regs, const std::string& path) {
    std::size_t d = 1;
    for (const auto& r : regs) d *= r.second;
    Matrix m;
    const json* terms = nullptr;
    if (j.is_object()) {
        terms = &need(j, "terms", path);
    } else if (j.is_array() && !j.empty() && j[0].is_object()) {
        terms = &j;
    }
    if (terms) {
        if (!terms->is_array()) fail(path, "expected a list of terms");
        m = Matrix::Zero(Eigen::Index(d), Eigen::Index(d));
        for (std::size_t i = 0; i < terms->size(); ++i) m += term_value((*terms)[i], regs, path + "/" + std::to_string(i));
    } else {
        m = matrix_value(j, path);
        check_square(m, d, path);
    }
    check_hermitian(m, path);
    return 0.5 * (m + m.adjoint());
}

StateSpec state_value(const json& j, std::size_t d, const std::string& path) {
    StateSpec s;
    if (j.is_string() && j.get<std::string>() == "maximally_mixed") return s;
    if (!j.is_object() || j.size() != 1) fail(path, "expected one of gibbs, matrix, pure, maximally_mixed");
    if (j.contains("maximally_mixed")) return s;
    if (j.contains("gibbs")) {
        s.kind = StateSpec::Kind::gibbs;
        s.beta = number(j["gibbs"], path + "/gibbs");
        if (!(s.beta > 0.0)) fail(path + "/gibbs", "beta must be positive");
    } else if (j.contains("matrix")) {
        s.kind = StateSpec::Kind::matrix;
        s.matrix = matrix_value(j["matrix"], path + "/matrix");
        check_square(s.matrix, d, path + "/matrix");
        check_density(s.matrix, path + "/matrix");
    } else if (j.contains("pure")) {
        s.kind = StateSpec::Kind::pure;
        s.vector = vector_value(j["pure"], path + "/pure");
        if (std::size_t(s.vector.size()) != d) fail(path + "/pure", "vector has the wrong dimension");
        if (std::abs(s.vector.norm() - 1.0) > 1e-10) fail(path + "/pure", "vector is not normalized");
    } else {
        fail(path, "unknown state kind");
    }
    return s;
}

std::vector<SegmentSpec> segments_value(const json& j, const ScenarioFile& s, const std::string& path) {
    if (!j.is_array() || j.empty()) fail(path, "expected a non-empty list of segments");
    std::vector<SegmentSpec> out;
    for (std::size_t i = 0; i < j.size(); ++i) {
        const std::string p = path + "/" + std::to_string(i);
        SegmentSpec seg;
        seg.start = number(need(j[i], "start", p), p + "/start");
        const auto& h = need(j[i], "h", p);
        if (!h.is_string()) fail(p + "/h", "expected a Hamiltonian name");
        seg.hamiltonian = h.get<std::string>();
        bool known = false;
        for (const auto& [name, m] : s.hamiltonians) known = known || name == seg.hamiltonian;
        if (!known) fail(p + "/h", "unknown Hamiltonian '" + seg.hamiltonian + "'");
        if (!out.empty() && !(seg.start > out.back().start)) fail(p + "/start", "segment starts must increase");
        out.push_back(seg);
    }
    return out;
}

std::size_t kraus_count(const InstrumentSpec& inst) {
    std::size_t n = 0;
    for (const auto& o : inst.outcomes) n += o.size();
    return n;
}

InstrumentSpec instrument_value(const json& j, std::size_t ds, const ParseOptions& opt, const std::string& path) {
    InstrumentSpec inst;
    if (!j.is_object()) fail(path, "expected an object with 'outcomes' or 'dilation'");
    if (j.contains("dilation")) {
        const auto& d = j["dilation"];
        const std::string p = path + "/dilation";
        ExplicitDilation e;
        e.ancilla_state = matrix_value(need(d, "ancilla_state", p), p + "/ancilla_state");
        const auto m = std::size_t(e.ancilla_state.rows());
        check_square(e.ancilla_state, m, p + "/ancilla_state");
        check_density(e.ancilla_state, p + "/ancilla_state");
        e.unitary = matrix_value(need(d, "unitary", p), p + "/unitary");
        check_square(e.unitary, ds * m, p + "/unitary");
        const auto& pj = need(d, "projectors", p);
        if (!pj.is_array() || pj.empty()) fail(p + "/projectors", "expected a list of projectors");
        for (std::size_t r = 0; r < pj.size(); ++r) {
            e.projectors.push_back(matrix_value(pj[r], p + "/projectors/" + std::to_string(r)));
            check_square(e.projectors.back(), m, p + "/projectors/" + std::to_string(r));
        }
        if (opt.check_kraus && unitarity_residual(e.unitary) > opt.kraus_tol)
            fail(p + "/unitary", "matrix is not unitary (residual " + std::to_string(unitarity_residual(e.unitary)) + ")");
        inst.dilation = std::move(e);
        if (j.contains("outcomes")) fail(path, "give either 'outcomes' or 'dilation', not both");
        return inst;
    }
    const auto& oc = need(j, "outcomes", path);
    if (!oc.is_array() || oc.empty()) fail(path + "/outcomes", "expected a list of outcomes");
    Matrix sum = Matrix::Zero(Eigen::Index(ds), Eigen::Index(ds));
    for (std::size_t r = 0; r < oc.size(); ++r) {
        const std::string p = path + "/outcomes/" + std::to_string(r);
        if (!oc[r].is_array() || oc[r].empty()) fail(p, "each outcome needs at least one Kraus operator");
        std::vector<Matrix> ks;
        for (std::size_t a = 0; a < oc[r].size(); ++a) {
            ks.push_back(matrix_value(oc[r][a], p + "/" + std::to_string(a)));
            check_square(ks.back(), ds, p + "/" + std::to_string(a));
            sum += ks.back().adjoint() * ks.back();
        }
        inst.outcomes.push_back(std::move(ks));
    }
    const double res = max_norm(sum - Matrix::Identity(Eigen::Index(ds), Eigen::Index(ds)));
    if (opt.check_kraus && res > opt.kraus_tol) {
        std::ostringstream os;
        os << "Kraus operators are not trace preserving: ||sum K^dag K - 1||_max = " << res;
        fail(path + "/outcomes", os.str());
    }
    return inst;
}

std::size_t outcomes_of(const InstrumentSpec& inst) {
    return inst.dilation ? inst.dilation->projectors.size() : inst.outcomes.size();
}

}  // namespace

std::size_t ancilla_dim_of(const StepSpec& st) {
    if (st.instrument.dilation) return std::size_t(st.instrument.dilation->ancilla_state.rows());
    std::size_t m = std::max<std::size_t>(kraus_count(st.instrument), 1);
    for (const auto& f : st.feedback)
        m = std::max(m, f.instrument.dilation ? std::size_t(f.instrument.dilation->ancilla_state.rows())
                                              : kraus_count(f.instrument));
    return std::max(m, st.ancilla_dim);
}

namespace {

StepSpec step_value(const json& j, std::size_t k, const ScenarioFile& s, const ParseOptions& opt,
                    const std::string& path) {
    StepSpec st;
    st.time = number(need(j, "time", path), path + "/time");
    st.width = number_or(j, "width", 0.0, path);
    if (st.width < 0.0) fail(path + "/width", "control width must be >= 0");
    if (j.contains("ancilla_dim")) {
        if (!j["ancilla_dim"].is_number_integer() || j["ancilla_dim"].get<long>() < 1)
            fail(path + "/ancilla_dim", "expected a positive integer");
        st.ancilla_dim = j["ancilla_dim"].get<std::size_t>();
    }
    const std::size_t ds = s.system.dim;
    st.instrument = instrument_value(need(j, "instrument", path), ds, opt, path + "/instrument");
    if (auto it = j.find("feedback"); it != j.end()) {
        if (!it->is_array()) fail(path + "/feedback", "expected a list");
        for (std::size_t i = 0; i < it->size(); ++i) {
            const std::string p = path + "/feedback/" + std::to_string(i);
            FeedbackSpec f;
            f.prefix = record_value(need((*it)[i], "prefix", p), p + "/prefix");
            if (f.prefix.size() > k) fail(p + "/prefix", "feedback can only read earlier outcomes");
            f.instrument = instrument_value(need((*it)[i], "instrument", p), ds, opt, p + "/instrument");
            if (outcomes_of(f.instrument) != outcomes_of(st.instrument))
                fail(p + "/instrument", "feedback variants must keep the outcome alphabet");
            st.feedback.push_back(std::move(f));
        }
    }
    const std::size_t m = ancilla_dim_of(st);
    if (st.instrument.dilation && st.ancilla_dim && st.ancilla_dim != m)
        fail(path + "/ancilla_dim", "conflicts with the explicit dilation");
    for (const auto& f : st.feedback)
        if (f.instrument.dilation && std::size_t(f.instrument.dilation->ancilla_state.rows()) != m)
            fail(path + "/feedback", "explicit dilations of one step must share the ancilla dimension");
    if (auto it = j.find("ancilla_hamiltonian"); it != j.end())
        st.h_a = operator_value(*it, {{"A", m}}, path + "/ancilla_hamiltonian");
    return st;
}

json complex_json(cplx z) {
    if (z.imag() == 0.0) return z.real();
    return format_complex(z);
}

json matrix_json(const Matrix& m) {
    json rows = json::array();
    for (Eigen::Index r = 0; r < m.rows(); ++r) {
        json row = json::array();
        for (Eigen::Index c = 0; c < m.cols(); ++c) row.push_back(complex_json(m(r, c)));
        rows.push_back(std::move(row));
    }
    return rows;
}

json state_json(const StateSpec& s) {
    switch (s.kind) {
        case StateSpec::Kind::gibbs: return json{{"gibbs", s.beta}};
        case StateSpec::Kind::matrix: return json{{"matrix", matrix_json(s.matrix)}};
        case StateSpec::Kind::pure: {
            json v = json::array();
            for (Eigen::Index i = 0; i < s.vector.size(); ++i) v.push_back(complex_json(s.vector(i)));
            return json{{"pure", v}};
        }
        case StateSpec::Kind::maximally_mixed: break;
    }
    return "maximally_mixed";
}

json register_json(const RegisterSpec& r) {
    json j{{"dim", r.dim}};
    if (r.state) j["state"] = state_json(*r.state);
    return j;
}

json instrument_json(const InstrumentSpec& inst) {
    if (inst.dilation) {
        json p = json::array();
        for (const auto& m : inst.dilation->projectors) p.push_back(matrix_json(m));
        return json{{"dilation",
                     {{"ancilla_state", matrix_json(inst.dilation->ancilla_state)},
                      {"unitary", matrix_json(inst.dilation->unitary)},
                      {"projectors", p}}}};
    }
    json oc = json::array();
    for (const auto& o : inst.outcomes) {
        json ks = json::array();
        for (const auto& k : o) ks.push_back(matrix_json(k));
        oc.push_back(std::move(ks));
    }
    return json{{"outcomes", oc}};
}

json segments_json(const std::vector<SegmentSpec>& segs) {
    json a = json::array();
    for (const auto& s : segs) a.push_back({{"start", s.start}, {"h", s.hamiltonian}});
    return a;
}

bool same_matrix(const Matrix& a, const Matrix& b) {
    return a.rows() == b.rows() && a.cols() == b.cols() && (a.size() == 0 || a == b);
}

bool same_instrument(const InstrumentSpec& a, const InstrumentSpec& b) {
    if (a.dilation.has_value() != b.dilation.has_value() || a.outcomes.size() != b.outcomes.size()) return false;
    if (a.dilation) {
        const auto &x = *a.dilation, &y = *b.dilation;
        if (!same_matrix(x.ancilla_state, y.ancilla_state) || !same_matrix(x.unitary, y.unitary) ||
            x.projectors.size() != y.projectors.size())
            return false;
        for (std::size_t i = 0; i < x.projectors.size(); ++i)
            if (!same_matrix(x.projectors[i], y.projectors[i])) return false;
    }
    for (std::size_t r = 0; r < a.outcomes.size(); ++r) {
        if (a.outcomes[r].size() != b.outcomes[r].size()) return false;
        for (std::size_t i = 0; i < a.outcomes[r].size(); ++i)
            if (!same_matrix(a.outcomes[r][i], b.outcomes[r][i])) return false;
    }
    return true;
}

bool same_state(const std::optional<StateSpec>& a, const std::optional<StateSpec>& b) {
    if (a.has_value() != b.has_value()) return false;
    if (!a) return true;
    return a->kind == b->kind && a->beta == b->beta && same_matrix(a->matrix, b->matrix) &&
           a->vector.size() == b->vector.size() && (a->vector.size() == 0 || a->vector == b->vector);
}

bool same_segments(const std::vector<SegmentSpec>& a, const std::vector<SegmentSpec>& b) {
    if (a.size() != b.size()) return false;
    for (std::size_t i = 0; i < a.size(); ++i)
        if (a[i].start != b[i].start || a[i].hamiltonian != b[i].hamiltonian) return false;
    return true;
}

std::pair<std::size_t, std::size_t> line_column(std::string_view text, std::size_t byte) {
    std::size_t line = 1, col = 1;
    for (std::size_t i = 0; i < byte && i < text.size(); ++i) {
        if (text[i] == '\n') {
            ++line;
            col = 1;
        } else {
            ++col;
        }
    }
    return {line, col};
}

}  // namespace

cplx parse_complex(std::string_view text) { return complex_from(text, ""); }

std::string format_complex(cplx z) {
    char buf[64];
    auto put = [&](char* p, double v) { return std::to_chars(p, buf + sizeof buf, v).ptr; };
    char* p = buf;
    if (z.real() != 0.0 || z.imag() == 0.0) p = put(p, z.real());
    if (z.imag() != 0.0) {
        if (p != buf && z.imag() >= 0.0) *p++ = '+';
        p = put(p, z.imag());
        *p++ = 'i';
    }
    return std::string(buf, p);
}

ScenarioFile parse_scenario_text(std::string_view text, const ParseOptions& opt) {
    json j;
    try {
        j = json::parse(text.begin(), text.end());
    } catch (const json::parse_error& e) {
        const auto [line, col] = line_column(text, e.byte == 0 ? 0 : e.byte - 1);
        std::string msg = e.what();
        if (auto pos = msg.find("syntax error"); pos != std::string::npos) msg = msg.substr(pos);
        throw ScenarioError("", msg, line, col);
    }
    if (!j.is_object()) fail("", "a scenario is a JSON object");
    static const char* known[] = {"format", "name",     "beta",         "t_start", "registers", "initial_state",
                                  "hamiltonians", "protocol", "steps", "memory",  "report_times", "checks",
                                  "tolerances"};
    for (const auto& [key, v] : j.items()) {
        bool ok = false;
        for (const char* k : known) ok = ok || key == k;
        if (!ok) fail("/" + key, "unknown field");
    }
    ScenarioFile s;
    if (auto it = j.find("name"); it != j.end()) {
        if (!it->is_string()) fail("/name", "expected a string");
        s.name = it->get<std::string>();
    }
    s.beta = number_or(j, "beta", 0.0, "");
    if (s.beta < 0.0) fail("/beta", "beta must be >= 0");
    s.t_start = number_or(j, "t_start", 0.0, "");

    const auto& regs = need(j, "registers", "");
    auto reg = [&](const char* label, bool required) {
        RegisterSpec r{label, 1, {}};
        auto it = regs.find(label);
        if (it == regs.end()) {
            if (required) fail("/registers", std::string("missing register '") + label + "'");
            return r;
        }
        const std::string p = std::string("/registers/") + label;
        const auto& d = need(*it, "dim", p);
        if (!d.is_number_integer() || d.get<long>() < 1) fail(p + "/dim", "expected a positive integer");
        r.dim = d.get<std::size_t>();
        if (it->contains("state")) r.state = state_value((*it)["state"], r.dim, p + "/state");
        return r;
    };
    for (const auto& [key, v] : regs.items())
        if (key != "S" && key != "B") fail("/registers/" + key, "registers are S and B (ancillas come with the steps)");
    s.system = reg("S", true);
    s.bath = reg("B", false);

    if (auto it = j.find("initial_state"); it != j.end()) {
        if (it->is_string() && it->get<std::string>() == "gibbs") {
            if (!(s.beta > 0.0)) fail("/initial_state", "a Gibbs initial state needs beta > 0");
            s.joint_gibbs = s.beta;
        } else if (it->is_object() && it->contains("gibbs") && it->size() == 1) {
            s.joint_gibbs = number((*it)["gibbs"], "/initial_state/gibbs");
            if (!(*s.joint_gibbs > 0.0)) fail("/initial_state/gibbs", "beta must be positive");
        } else {
            fail("/initial_state", "expected \"gibbs\" or {\"gibbs\": beta}; product states go on the registers");
        }
    } else {
        if (!s.system.state) fail("/registers/S", "needs a state unless a joint initial_state is given");
        if (s.bath.dim > 1 && !s.bath.state) fail("/registers/B", "needs a state unless a joint initial_state is given");
    }

    const auto& hs = need(j, "hamiltonians", "");
    const Registers s_only{{"S", s.system.dim}}, b_only{{"B", s.bath.dim}};
    const Registers sb{{"S", s.system.dim}, {"B", s.bath.dim}};
    const auto& sys = need(hs, "system", "/hamiltonians");
    if (!sys.is_object() || sys.empty()) fail("/hamiltonians/system", "expected named system Hamiltonians");
    for (const auto& [name, v] : sys.items())
        s.hamiltonians.emplace_back(name, operator_value(v, s_only, "/hamiltonians/system/" + name));
    const auto db = Eigen::Index(s.bath.dim), dsb = Eigen::Index(s.system.dim * s.bath.dim);
    s.h_b = hs.contains("bath") ? operator_value(hs["bath"], b_only, "/hamiltonians/bath") : Matrix::Zero(db, db);
    s.v_sb = hs.contains("coupling") ? operator_value(hs["coupling"], sb, "/hamiltonians/coupling")
                                     : Matrix::Zero(dsb, dsb);
    for (const auto& [key, v] : hs.items())
        if (key != "system" && key != "bath" && key != "coupling") fail("/hamiltonians/" + key, "unknown field");

    if (auto it = j.find("protocol"); it != j.end()) {
        s.segments = segments_value(need(*it, "segments", "/protocol"), s, "/protocol/segments");
        if (auto ov = it->find("overrides"); ov != it->end()) {
            if (!ov->is_array()) fail("/protocol/overrides", "expected a list");
            for (std::size_t i = 0; i < ov->size(); ++i) {
                const std::string p = "/protocol/overrides/" + std::to_string(i);
                OverrideSpec o;
                o.prefix = record_value(need((*ov)[i], "prefix", p), p + "/prefix");
                o.segments = segments_value(need((*ov)[i], "segments", p), s, p + "/segments");
                s.overrides.push_back(std::move(o));
            }
        }
    } else {
        s.segments.push_back({s.t_start, s.hamiltonians.front().first});
    }

    if (auto it = j.find("steps"); it != j.end()) {
        if (!it->is_array()) fail("/steps", "expected a list");
        for (std::size_t k = 0; k < it->size(); ++k)
            s.steps.push_back(step_value((*it)[k], k, s, opt, "/steps/" + std::to_string(k)));
    }
    for (const auto& o : s.overrides)
        if (o.prefix.size() > s.steps.size()) fail("/protocol/overrides", "prefix longer than the number of steps");

    if (auto it = j.find("memory"); it != j.end()) {
        s.e_idf = number_or(*it, "e_idf", 0.0, "/memory");
        s.e_nidf = number_or(*it, "e_nidf", 0.0, "/memory");
    }
    if (auto it = j.find("report_times"); it != j.end()) {
        if (!it->is_array()) fail("/report_times", "expected a list of times");
        for (std::size_t i = 0; i < it->size(); ++i) {
            const double t = number((*it)[i], "/report_times/" + std::to_string(i));
            if (t < s.t_start) fail("/report_times/" + std::to_string(i), "report time precedes t_start");
            s.report_times.push_back(t);
        }
    }
    if (auto it = j.find("checks"); it != j.end()) {
        if (auto sl = it->find("second_law"); sl != it->end()) {
            if (!sl->is_boolean()) fail("/checks/second_law", "expected true or false");
            s.second_law_checks = sl->get<bool>();
        }
    }
    if (auto it = j.find("tolerances"); it != j.end()) {
        if (!it->is_object()) fail("/tolerances", "expected an object");
        for (const auto& [key, v] : it->items()) s.tolerances[key] = number(v, "/tolerances/" + key);
    }
    return s;
}

ScenarioFile parse_scenario(const std::filesystem::path& path, const ParseOptions& opt) {
    std::ifstream in(path, std::ios::binary);
    if (!in) throw ScenarioError("", "cannot open " + path.string());
    std::ostringstream ss;
    ss << in.rdbuf();
    return parse_scenario_text(ss.str(), opt);
}

std::string emit_scenario(const ScenarioFile& s) {
    json j;
    j["format"] = "qcm-scenario/1";
    j["name"] = s.name;
    j["beta"] = s.beta;
    j["t_start"] = s.t_start;
    json regs;
    regs["S"] = register_json(s.system);
    regs["B"] = register_json(s.bath);
    j["registers"] = regs;
    if (s.joint_gibbs) j["initial_state"] = json{{"gibbs", *s.joint_gibbs}};
    json sys;
    for (const auto& [name, m] : s.hamiltonians) sys[name] = matrix_json(m);
    j["hamiltonians"] = json{{"system", sys}, {"bath", matrix_json(s.h_b)}, {"coupling", matrix_json(s.v_sb)}};
    json proto{{"segments", segments_json(s.segments)}};
    if (!s.overrides.empty()) {
        json ov = json::array();
        for (const auto& o : s.overrides) ov.push_back({{"prefix", o.prefix}, {"segments", segments_json(o.segments)}});
        proto["overrides"] = ov;
    }
    j["protocol"] = proto;
    json steps = json::array();
    for (const auto& st : s.steps) {
        json x{{"time", st.time}, {"width", st.width}};
        if (st.ancilla_dim) x["ancilla_dim"] = st.ancilla_dim;
        if (st.h_a) x["ancilla_hamiltonian"] = matrix_json(*st.h_a);
        x["instrument"] = instrument_json(st.instrument);
        if (!st.feedback.empty()) {
            json fb = json::array();
            for (const auto& f : st.feedback) fb.push_back({{"prefix", f.prefix}, {"instrument", instrument_json(f.instrument)}});
            x["feedback"] = fb;
        }
        steps.push_back(std::move(x));
    }
    j["steps"] = steps;
    j["memory"] = json{{"e_idf", s.e_idf}, {"e_nidf", s.e_nidf}};
    j["report_times"] = s.report_times;
    j["checks"] = json{{"second_law", s.second_law_checks}};
    if (!s.tolerances.empty()) {
        json t = json::object();
        for (const auto& [k, v] : s.tolerances) t[k] = v;
        j["tolerances"] = t;
    }
    return j.dump(2) + "\n";
}

bool same_scenario(const ScenarioFile& a, const ScenarioFile& b) {
    if (a.name != b.name || a.beta != b.beta || a.t_start != b.t_start || a.joint_gibbs != b.joint_gibbs) return false;
    if (a.system.dim != b.system.dim || a.bath.dim != b.bath.dim || !same_state(a.system.state, b.system.state) ||
        !same_state(a.bath.state, b.bath.state))
        return false;
    if (a.hamiltonians.size() != b.hamiltonians.size()) return false;
    for (std::size_t i = 0; i < a.hamiltonians.size(); ++i)
        if (a.hamiltonians[i].first != b.hamiltonians[i].first ||
            !same_matrix(a.hamiltonians[i].second, b.hamiltonians[i].second))
            return false;
    if (!same_matrix(a.h_b, b.h_b) || !same_matrix(a.v_sb, b.v_sb) || !same_segments(a.segments, b.segments)) return false;
    if (a.overrides.size() != b.overrides.size()) return false;
    for (std::size_t i = 0; i < a.overrides.size(); ++i)
        if (a.overrides[i].prefix != b.overrides[i].prefix || !same_segments(a.overrides[i].segments, b.overrides[i].segments))
            return false;
    if (a.steps.size() != b.steps.size()) return false;
    for (std::size_t k = 0; k < a.steps.size(); ++k) {
        const auto &x = a.steps[k], &y = b.steps[k];
        if (x.time != y.time || x.width != y.width || x.ancilla_dim != y.ancilla_dim || x.h_a.has_value() != y.h_a.has_value())
            return false;
        if (x.h_a && !same_matrix(*x.h_a, *y.h_a)) return false;
        if (!same_instrument(x.instrument, y.instrument) || x.feedback.size() != y.feedback.size()) return false;
        for (std::size_t i = 0; i < x.feedback.size(); ++i)
            if (x.feedback[i].prefix != y.feedback[i].prefix || !same_instrument(x.feedback[i].instrument, y.feedback[i].instrument))
                return false;
    }
    return a.e_idf == b.e_idf && a.e_nidf == b.e_nidf && a.report_times == b.report_times &&
           a.second_law_checks == b.second_law_checks && a.tolerances == b.tolerances;
}

}  // namespace qcm::harness
