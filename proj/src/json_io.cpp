#include "halfstrip/json_io.hpp"

#include <cmath>
#include <fstream>
#include <initializer_list>
#include <set>
#include <sstream>

#include "halfstrip/error.hpp"

namespace halfstrip {

namespace {

[[noreturn]] void schema(const std::string& msg) { throw Error(ErrorKind::Schema, msg); }

void check_keys(const Json& obj, const std::string& where, std::initializer_list<const char*> allowed) {
    if (!obj.is_object()) schema(where + ": expected an object");
    const std::set<std::string> ok(allowed.begin(), allowed.end());
    for (const auto& [key, value] : obj.items())
        if (!ok.count(key)) schema(where + ": unknown key '" + key + "'");
}

double read_number(const Json& v, const std::string& where) {
    if (v.is_number()) return v.get<double>();
    if (v.is_string()) {
        const std::string s = v.get<std::string>();
        if (s == "inf") return std::numeric_limits<double>::infinity();
        if (s == "-inf") return -std::numeric_limits<double>::infinity();
    }
    schema(where + ": expected a number");
}

double required(const Json& obj, const char* key, const std::string& where) {
    if (!obj.contains(key)) schema(where + ": missing '" + key + "'");
    return read_number(obj.at(key), where + "." + key);
}

double optional_number(const Json& obj, const char* key, double fallback, const std::string& where) {
    return obj.contains(key) ? read_number(obj.at(key), where + "." + key) : fallback;
}

std::string optional_string(const Json& obj, const char* key, const std::string& where) {
    if (!obj.contains(key)) return {};
    if (!obj.at(key).is_string()) schema(where + "." + key + ": expected a string");
    return obj.at(key).get<std::string>();
}

bool optional_bool(const Json& obj, const char* key, const std::string& where) {
    if (!obj.contains(key)) return false;
    if (!obj.at(key).is_boolean()) schema(where + "." + key + ": expected a boolean");
    return obj.at(key).get<bool>();
}

std::vector<std::string> read_labels(const Json& obj, const std::string& where) {
    if (!obj.contains("labels") || !obj.at("labels").is_array() || obj.at("labels").empty())
        schema(where + ": 'labels' must be a non-empty array");
    std::vector<std::string> out;
    for (const Json& l : obj.at("labels")) {
        if (!l.is_string()) schema(where + ": labels must be strings");
        out.push_back(l.get<std::string>());
    }
    return out;
}

Eigen::VectorXd read_vector(const Json& obj, const char* key, Eigen::Index n, const std::string& where) {
    if (!obj.contains(key)) schema(where + ": missing '" + key + "'");
    const Json& v = obj.at(key);
    if (!v.is_array() || static_cast<Eigen::Index>(v.size()) != n)
        schema(where + "." + key + ": expected an array of " + std::to_string(n) + " numbers");
    Eigen::VectorXd out(n);
    for (Eigen::Index i = 0; i < n; ++i)
        out(i) = read_number(v[static_cast<std::size_t>(i)], where + "." + key);
    return out;
}

Eigen::MatrixXd read_matrix(const Json& obj, const char* key, Eigen::Index n, const std::string& where) {
    if (!obj.contains(key)) schema(where + ": missing '" + key + "'");
    const Json& m = obj.at(key);
    if (!m.is_array() || static_cast<Eigen::Index>(m.size()) != n)
        schema(where + "." + key + ": expected " + std::to_string(n) + " rows");
    Eigen::MatrixXd out(n, n);
    for (Eigen::Index i = 0; i < n; ++i) {
        const Json& row = m[static_cast<std::size_t>(i)];
        if (!row.is_array() || static_cast<Eigen::Index>(row.size()) != n)
            schema(where + "." + key + ": row " + std::to_string(i) + " must have " + std::to_string(n) + " entries");
        for (Eigen::Index j = 0; j < n; ++j)
            out(i, j) = read_number(row[static_cast<std::size_t>(j)], where + "." + key);
    }
    return out;
}

TabularAtom read_atom(const Json& a, const std::string& where) {
    check_keys(a, where, {"jump", "to", "p", "p_inv_x", "p_corr"});
    TabularAtom atom;
    atom.jump = required(a, "jump", where);
    if (!a.contains("to") || !a.at("to").is_string()) schema(where + ": 'to' must be a label string");
    atom.to = a.at("to").get<std::string>();
    atom.p = optional_number(a, "p", 0.0, where);
    atom.p_inv_x = optional_number(a, "p_inv_x", 0.0, where);
    atom.p_corr = optional_number(a, "p_corr", 0.0, where);
    return atom;
}

}  // namespace

std::uint64_t fnv1a64(const std::string& bytes) noexcept {
    std::uint64_t h = 0xcbf29ce484222325ULL;
    for (unsigned char ch : bytes) {
        h ^= ch;
        h *= 0x100000001b3ULL;
    }
    return h;
}

CrwParams crw_from_json(const Json& doc) {
    const std::string where = "crw spec";
    check_keys(doc, where,
               {"type", "q", "c_plus", "c_minus", "delta", "amp", "formula_floor", "description", "refined_rates_hold"});
    CrwParams p;
    p.q = required(doc, "q", where);
    p.c_plus = required(doc, "c_plus", where);
    p.c_minus = required(doc, "c_minus", where);
    p.delta = optional_number(doc, "delta", 1.0, where);
    p.correction_amplitude = optional_number(doc, "amp", 0.0, where);
    if (doc.contains("formula_floor")) p.formula_floor = read_number(doc.at("formula_floor"), where + ".formula_floor");
    return p;
}

TabularSpec tabular_from_json(const Json& doc) {
    const std::string where = "tabular spec";
    check_keys(doc, where,
               {"type", "labels", "lines", "delta", "boundary", "boundary_atom", "description", "refined_rates_hold"});
    TabularSpec spec;
    spec.labels = read_labels(doc, where);
    spec.delta = optional_number(doc, "delta", 1.0, where);
    spec.description = optional_string(doc, "description", where);
    const std::string boundary = optional_string(doc, "boundary", where);
    if (boundary.empty() || boundary == "reflect") {
        spec.boundary = BoundaryRule::Reflect;
    } else if (boundary == "clamp") {
        spec.boundary = BoundaryRule::Clamp;
    } else if (boundary == "redirect") {
        spec.boundary = BoundaryRule::Redirect;
    } else {
        schema(where + ": boundary must be reflect, clamp or redirect");
    }
    if (doc.contains("boundary_atom")) spec.boundary_atom = read_atom(doc.at("boundary_atom"), where + ".boundary_atom");

    if (!doc.contains("lines") || !doc.at("lines").is_object()) schema(where + ": 'lines' must be an object");
    const Json& lines = doc.at("lines");
    for (const auto& [key, value] : lines.items())
        if (std::find(spec.labels.begin(), spec.labels.end(), key) == spec.labels.end())
            schema(where + ".lines: unknown label '" + key + "'");
    for (const std::string& label : spec.labels) {
        const std::string lw = where + ".lines." + label;
        if (!lines.contains(label)) schema(where + ".lines: missing line for label '" + label + "'");
        const Json& segs = lines.at(label);
        if (!segs.is_array() || segs.empty()) schema(lw + ": expected a non-empty array of segments");
        std::vector<TabularSegment> line;
        for (const Json& s : segs) {
            check_keys(s, lw, {"from", "atoms"});
            TabularSegment seg;
            seg.from = optional_number(s, "from", 0.0, lw);
            if (!s.contains("atoms") || !s.at("atoms").is_array()) schema(lw + ": segment needs an 'atoms' array");
            for (const Json& a : s.at("atoms")) seg.atoms.push_back(read_atom(a, lw + ".atoms"));
            line.push_back(std::move(seg));
        }
        spec.lines.push_back(std::move(line));
    }
    return spec;
}

AsymptoticCoefficients coefficients_from_json(const Json& doc) {
    const std::string where = "coefficients";
    check_keys(doc, where,
               {"type", "labels", "Q", "d", "e", "t2", "d_cross", "gamma", "pi", "p", "description",
                "refined_rates_hold", "fit_residuals", "fit_warning"});
    AsymptoticCoefficients c;
    c.labels = read_labels(doc, where);
    const auto n = static_cast<Eigen::Index>(c.labels.size());
    c.q_limit = read_matrix(doc, "Q", n, where);
    c.d = read_vector(doc, "d", n, where);
    c.e = read_vector(doc, "e", n, where);
    c.t2 = read_vector(doc, "t2", n, where);
    c.d_cross = read_matrix(doc, "d_cross", n, where);
    c.gamma = read_matrix(doc, "gamma", n, where);
    c.moment_order = optional_number(doc, "p", std::numeric_limits<double>::infinity(), where);
    c.refined_rates_hold = optional_bool(doc, "refined_rates_hold", where);
    c.fit_warning = optional_bool(doc, "fit_warning", where);
    if (doc.contains("fit_residuals")) {
        if (!doc.at("fit_residuals").is_object()) schema(where + ".fit_residuals: expected an object");
        for (const auto& [k, v] : doc.at("fit_residuals").items()) c.fit_residuals[k] = read_number(v, where + ".fit_residuals");
    }
    finalize_coefficients(c);
    if (doc.contains("pi")) {
        const Eigen::VectorXd pi = read_vector(doc, "pi", n, where);
        if ((pi - c.pi).cwiseAbs().maxCoeff() > 1e-8)
            throw Error(ErrorKind::InvalidCoefficients, "given pi is not the stationary distribution of Q");
    }
    return c;
}

LoadedSpec parse_spec(const Json& doc) {
    if (!doc.is_object()) schema("spec must be a JSON object");
    if (!doc.contains("type") || !doc.at("type").is_string()) schema("spec needs a string 'type'");
    LoadedSpec out;
    out.type = doc.at("type").get<std::string>();
    out.description = optional_string(doc, "description", "spec");
    out.refined_rates_hold = optional_bool(doc, "refined_rates_hold", "spec");
    out.hash = fnv1a64(doc.dump());
    if (out.type == "crw") {
        out.crw = crw_from_json(doc);
        out.model = make_crw(*out.crw);
    } else if (out.type == "tabular") {
        out.model = make_tabular(tabular_from_json(doc));
    } else if (out.type == "coefficients") {
        out.coeffs = coefficients_from_json(doc);
    } else {
        schema("unknown spec type '" + out.type + "'");
    }
    if (out.description.empty()) out.description = out.model ? out.model->description() : out.type;
    return out;
}

LoadedSpec parse_spec_text(const std::string& text) {
    Json doc;
    try {
        doc = Json::parse(text);
    } catch (const Json::parse_error& e) {
        schema(std::string("malformed JSON: ") + e.what());
    }
    return parse_spec(doc);
}

LoadedSpec load_spec_file(const std::string& path) {
    std::ifstream in(path, std::ios::binary);
    if (!in) throw Error(ErrorKind::InvalidArgument, "cannot read " + path);
    std::ostringstream buf;
    buf << in.rdbuf();
    return parse_spec_text(buf.str());
}

// ---------------------------------------------------------------------------
// Writers

Json number(double v) {
    if (std::isnan(v)) return nullptr;
    if (std::isinf(v)) return v > 0 ? "inf" : "-inf";
    return v;
}

Json to_json(const Eigen::VectorXd& v) {
    Json out = Json::array();
    for (Eigen::Index i = 0; i < v.size(); ++i) out.push_back(number(v(i)));
    return out;
}

Json to_json(const Eigen::MatrixXd& m) {
    Json out = Json::array();
    for (Eigen::Index i = 0; i < m.rows(); ++i) out.push_back(to_json(Eigen::VectorXd(m.row(i).transpose())));
    return out;
}

Json to_json(const AsymptoticCoefficients& c) {
    Json out;
    out["type"] = "coefficients";
    out["labels"] = c.labels;
    out["Q"] = to_json(c.q_limit);
    out["d"] = to_json(c.d);
    out["e"] = to_json(c.e);
    out["t2"] = to_json(c.t2);
    out["d_cross"] = to_json(c.d_cross);
    out["gamma"] = to_json(c.gamma);
    out["pi"] = to_json(c.pi);
    out["p"] = number(c.moment_order);
    out["refined_rates_hold"] = c.refined_rates_hold;
    if (!c.fit_residuals.empty()) {
        Json res;
        for (const auto& [k, v] : c.fit_residuals) res[k] = number(v);
        out["fit_residuals"] = res;
        out["fit_warning"] = c.fit_warning;
    }
    return out;
}

Json to_json(const LampertiCoefficients& lc) {
    return Json{{"c", to_json(lc.c)}, {"s2", to_json(lc.s2)}, {"Q", to_json(lc.q_limit)}, {"pi", to_json(lc.pi)}};
}

Json to_json(const PoissonSolution<double>& s) {
    return Json{{"a", to_json(s.values)}, {"residual", number(s.residual)}};
}

Json to_json(const Classification& c) {
    Json out;
    out["verdict"] = to_string(c.verdict);
    out["regime"] = to_string(c.regime);
    out["U"] = number(c.U);
    out["V"] = number(c.V);
    out["margin"] = number(c.margin);
    out["tol"] = number(c.tol);
    out["refined"] = c.refined;
    out["notes"] = c.notes;
    return out;
}

Json to_json(const Interval& iv) {
    return Json{{"lo", number(iv.lo)}, {"hi", number(iv.hi)}, {"lo_closed", iv.lo_closed}, {"hi_closed", iv.hi_closed}};
}

Json to_json(const MomentReport& m) {
    Json out;
    out["theta_star"] = number(m.theta_star);
    out["p_cap"] = number(m.p_cap);
    out["finite_range"] = to_json(m.finite_range);
    out["infinite_range"] = m.infinite_range_known ? to_json(m.infinite_range) : Json(nullptr);
    out["gap_note"] = m.gap_note;
    return out;
}

Json to_json(const ValidationReport& r) {
    Json out;
    out["ok"] = r.ok();
    out["stochastic"] = r.stochastic;
    out["landings_nonnegative"] = r.landings_nonnegative;
    out["irreducible"] = r.irreducible;
    out["limiting_q"] = to_json(r.limiting_q);
    out["moment_order"] = number(r.moment_order);
    out["moment_bound"] = number(r.moment_bound);
    out["max_abs_jump"] = number(r.max_abs_jump);
    Json failures = Json::array();
    for (const StateCheck& f : r.failures)
        failures.push_back({{"x", number(f.state.position)},
                            {"label", f.state.label},
                            {"probability_sum", number(f.probability_sum)},
                            {"stochastic", f.stochastic},
                            {"landings_nonnegative", f.landings_nonnegative}});
    out["failures"] = failures;
    return out;
}

Json to_json(const TailEstimate& t) {
    Json out;
    out["exponent"] = number(t.exponent);
    out["stderr"] = number(t.stderr_);
    out["n_samples"] = t.n_samples;
    out["censored_fraction"] = number(t.censored_fraction);
    out["method"] = to_string(t.method);
    out["regression_exponent"] = number(t.regression_exponent);
    out["hill_exponent"] = number(t.hill_exponent);
    out["lower_half_exponent"] = number(t.lower_half_exponent);
    out["upper_half_exponent"] = number(t.upper_half_exponent);
    out["power_law_consistent"] = t.power_law_consistent;
    out["window"] = Json::array({number(t.window_lo), number(t.window_hi)});
    return out;
}

Json to_json(const MomentEstimate& m) {
    return Json{{"estimate", number(m.estimate)}, {"lower_bound", m.lower_bound}};
}

Json to_json(const DiagnosticReport& d) {
    Json out;
    out["horizons"] = d.horizons;
    Json rf = Json::array(), mp = Json::array(), mt = Json::array(), oc = Json::array();
    for (std::size_t k = 0; k < d.horizons.size(); ++k) {
        rf.push_back(number(d.return_fraction[k]));
        mp.push_back(number(d.median_position[k]));
        mt.push_back(number(d.mean_truncated_passage[k]));
        oc.push_back(number(d.occupation[k]));
    }
    out["return_fraction"] = rf;
    out["median_position"] = mp;
    out["mean_truncated_passage"] = mt;
    out["occupation"] = oc;
    out["median_growth_ratio"] = number(d.median_growth_ratio);
    out["mean_passage_ratio"] = number(d.mean_passage_ratio);
    out["call"] = to_string(d.call);
    out["rule"] = d.rule;
    return out;
}

}  // namespace halfstrip
