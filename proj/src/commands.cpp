#include "halfstrip/commands.hpp"

#include <cinttypes>
#include <cmath>
#include <cstdio>
#include <fstream>
#include <ostream>

#include "halfstrip/error.hpp"

namespace halfstrip {

namespace {

std::string hex64(std::uint64_t v) {
    char buf[17];
    std::snprintf(buf, sizeof buf, "%016" PRIx64, v);
    return buf;
}

std::string fmt(double v) {
    if (std::isnan(v)) return "nan";
    char buf[32];
    std::snprintf(buf, sizeof buf, "%.17g", v);
    return buf;
}

Json state_json(const ChainModel& model, const State& s) {
    return Json{{"x", number(s.position)}, {"label", model.labels()[s.label]}};
}

Json check(const std::string& name, const std::string& status, Json details) {
    return Json{{"name", name}, {"status", status}, {"details", std::move(details)}};
}

double max_abs_diff(const Eigen::MatrixXd& a, const Eigen::MatrixXd& b) {
    if (a.rows() != b.rows() || a.cols() != b.cols()) return std::numeric_limits<double>::infinity();
    return (a - b).cwiseAbs().maxCoeff();
}

struct Pipeline {
    AsymptoticCoefficients coeffs;
    double tol = kAnalyticTol;
    bool refined = false;
};

Pipeline coefficients_for(const LoadedSpec& spec, const CommonOptions& opts, Json& rep) {
    Pipeline p;
    if (spec.model) {
        const ValidationReport v = validate(*spec.model);
        rep["validation"] = to_json(v);
        if (!v.ok()) throw Error(ErrorKind::InvalidModel, "kernel failed validation; see the validation report");
        p.coeffs = fit_asymptotics(*spec.model);
        p.tol = opts.tol.value_or(kFittedTol);
    } else {
        p.coeffs = *spec.coeffs;
        p.tol = opts.tol.value_or(kAnalyticTol);
    }
    p.refined = opts.refined || spec.refined_rates_hold || p.coeffs.refined_rates_hold;
    p.coeffs.refined_rates_hold = p.refined;
    return p;
}

}  // namespace

State parse_start(const ChainModel& model, const std::string& text) {
    const auto comma = text.find(',');
    if (comma == std::string::npos)
        throw Error(ErrorKind::InvalidArgument, "start must look like X,LABEL (got '" + text + "')");
    State s;
    try {
        std::size_t used = 0;
        const std::string x = text.substr(0, comma);
        s.position = std::stod(x, &used);
        if (used != x.size()) throw std::invalid_argument(x);
    } catch (const std::exception&) {
        throw Error(ErrorKind::InvalidArgument, "start position is not a number: '" + text + "'");
    }
    s.label = model.label_index(text.substr(comma + 1));
    model.check_state(s);
    return s;
}

AnalysisOutput cmd_analyze(const LoadedSpec& spec, const CommonOptions& opts) {
    AnalysisOutput out;
    Json& rep = out.report;
    rep["model"] = Json{{"type", spec.type}, {"description", spec.description}, {"spec_hash", hex64(spec.hash)}};
    const Pipeline p = coefficients_for(spec, opts, rep);
    const AsymptoticCoefficients& c = p.coeffs;
    rep["coefficients"] = to_json(c);

    out.classification = classify(c, p.refined, p.tol, opts.centering_tol);
    rep["regime"] = to_string(out.classification.regime);
    if (out.classification.regime == Regime::ConstantDrift) {
        rep["transform"] = nullptr;
    } else {
        const auto [lc, sol] = transform_generalized(c, opts.centering_tol);
        Json t = to_json(sol);
        t["lamperti"] = to_json(lc);
        rep["transform"] = t;
    }
    rep["classification"] = to_json(out.classification);
    if (out.classification.regime != Regime::ConstantDrift) {
        out.moments = moment_threshold(out.classification.U, out.classification.V, c.moment_order / 2);
        rep["moments"] = to_json(*out.moments);
    } else {
        rep["moments"] = nullptr;
    }
    rep["provenance"] = Json{{"tool", "halfstrip"}, {"version", kVersion}, {"spec_hash", hex64(spec.hash)},
                             {"seed", opts.seed}, {"centering_tol", number(opts.centering_tol)}};
    return out;
}

Json cmd_fit(const LoadedSpec& spec, const FitOptions& fit) {
    if (!spec.model) throw Error(ErrorKind::InvalidArgument, "fit needs a kernel spec (crw or tabular)");
    AsymptoticCoefficients c = fit_asymptotics(*spec.model, fit);
    c.refined_rates_hold = spec.refined_rates_hold;
    Json out = to_json(c);
    out["description"] = spec.description;
    return out;
}

Json cmd_simulate(const ChainModel& model, const SimulateOptions& sim, const CommonOptions& opts, std::ostream& csv) {
    const std::vector<PassageSample> samples =
        sample_passage_times(model, sim.start, sim.level, sim.cap, sim.n, opts.seed, opts.threads);
    csv << "tau,censored,steps\n";
    for (const PassageSample& s : samples) csv << s.tau << ',' << (s.censored ? 1 : 0) << ',' << s.steps() << '\n';

    Json rep;
    rep["n"] = sim.n;
    rep["cap"] = sim.cap;
    rep["start"] = state_json(model, sim.start);
    rep["level"] = number(sim.level);
    rep["seed"] = opts.seed;
    rep["censored_fraction"] = number(censored_fraction(samples));
    try {
        rep["tail"] = to_json(tail_exponent(samples));
    } catch (const Error& e) {
        rep["tail"] = Json{{"error", e.what()}};
    }
    Json moments = Json::array();
    for (double s : sim.moment_orders) {
        const MomentEstimate full = empirical_moment(samples, s);
        const MomentEstimate half = empirical_moment(samples, s, sim.cap / 2);
        moments.push_back({{"s", number(s)},
                           {"estimate", number(full.estimate)},
                           {"lower_bound", full.lower_bound},
                           {"half_cap_estimate", number(half.estimate)},
                           {"doubling_ratio", number(half.estimate > 0 ? full.estimate / half.estimate : NAN)}});
    }
    rep["moments"] = moments;
    if (sim.diagnostic) {
        DiagnosticParams dp;
        dp.start = sim.start;
        dp.level = sim.level;
        dp.base_horizon = std::max<std::uint64_t>(sim.cap / 4, 1);
        dp.n = sim.diagnostic_n;
        dp.seed = opts.seed;
        dp.threads = opts.threads;
        rep["diagnostic"] = to_json(recurrence_diagnostic(model, dp));
    }
    return rep;
}

void write_lyapunov_csv(const ChainModel& model, const std::vector<VerificationReport>& reports, std::ostream& out) {
    out << "nu,x,label,increment,leading,ratio\n";
    for (const VerificationReport& r : reports)
        for (const RatioRow& row : r.rows)
            out << fmt(r.nu) << ',' << fmt(row.x) << ',' << model.labels()[row.label] << ',' << fmt(row.increment)
                << ',' << fmt(row.leading) << ',' << fmt(row.ratio) << '\n';
}

VerifyOutput cmd_verify(const LoadedSpec& spec, const VerifyOptions& v, const CommonOptions& opts) {
    VerifyOutput out;
    Json checks = Json::array();
    const AnalysisOutput analysis = cmd_analyze(spec, opts);
    const Classification& cls = analysis.classification;
    const Verdict verdict = cls.verdict;

    if (spec.model) checks.push_back(check("validation", "PASS", analysis.report["validation"]));

    // Asserted coefficients against the fit.
    if (v.coeffs_path) {
        Json details;
        std::string status = "PASS";
        try {
            const LoadedSpec asserted = load_spec_file(*v.coeffs_path);
            if (!asserted.coeffs) throw Error(ErrorKind::Schema, "--coeffs file must be a coefficients spec");
            const AsymptoticCoefficients& a = *asserted.coeffs;
            const Json& fitted_json = analysis.report["coefficients"];
            const AsymptoticCoefficients fitted = coefficients_from_json(fitted_json);
            Json diffs;
            double worst = 0.0;
            auto record = [&](const char* name, double d) {
                diffs[name] = number(d);
                worst = std::max(worst, d);
            };
            record("Q", max_abs_diff(a.q_limit, fitted.q_limit));
            record("d", max_abs_diff(a.d, fitted.d));
            record("e", max_abs_diff(a.e, fitted.e));
            record("t2", max_abs_diff(a.t2, fitted.t2));
            record("d_cross", max_abs_diff(a.d_cross, fitted.d_cross));
            record("gamma", max_abs_diff(a.gamma, fitted.gamma));
            details["max_abs_diff"] = diffs;
            details["tolerance"] = number(v.coeffs_tolerance);
            if (!(worst <= v.coeffs_tolerance)) status = "FAIL";
            try {
                const Classification ac = classify(a, cls.refined, kAnalyticTol, opts.centering_tol);
                details["asserted_verdict"] = to_string(ac.verdict);
                if (ac.verdict != verdict) status = "FAIL";
            } catch (const Error& e) {
                details["asserted_error"] = e.what();
                status = "FAIL";
            }
        } catch (const Error& e) {
            details["error"] = e.what();
            status = "FAIL";
        }
        checks.push_back(check("coefficients", status, details));
    }

    const bool kernel = spec.model.has_value();
    const bool lamperti_like = cls.regime != Regime::ConstantDrift;

    // Drift estimate of the Lyapunov function on the transformed chain.
    if (kernel && lamperti_like) {
        const AsymptoticCoefficients fitted = coefficients_from_json(analysis.report["coefficients"]);
        const auto [lc, sol] = transform_generalized(fitted, opts.centering_tol);
        const ChainModel shifted = shift_model(*spec.model, sol.values);
        std::vector<double> nus = v.nus;
        if (nus.empty()) nus = {2.0 * analysis.moments->theta_star, 1.0, 2.0};
        const std::vector<double> grid = v.lyapunov_grid.empty() ? geometric_grid(2, 5, 7) : v.lyapunov_grid;
        Json rows = Json::array();
        bool all = true;
        for (double nu : nus) {
            const Eigen::VectorXd u = lyapunov_drift_terms(lc, nu);
            Eigen::VectorXd b;
            std::string weights;
            if (std::abs(lc.pi.dot(u)) > 1e-9) {
                b = choose_b(lc, nu, lc.pi.dot(u) < 0 ? Direction::Negative : Direction::Positive);
                weights = "strict-drift solution";
            } else {
                b = Eigen::VectorXd::Unit(u.size(), 0);
                weights = "unit weight on the first line (stationary drift term vanishes)";
            }
            const LyapunovFunction f(nu, b);
            VerificationReport r = verify_drift_estimate(shifted, lc, f, grid);
            all = all && r.passed;
            Json last = Json::array();
            for (const RatioRow& row : r.rows)
                if (row.x == grid.back()) last.push_back({{"label", shifted.labels()[row.label]}, {"ratio", number(row.ratio)}});
            rows.push_back({{"nu", number(nu)},
                            {"b", to_json(b)},
                            {"weights", weights},
                            {"bracket", to_json(lyapunov_bracket(lc, f))},
                            {"passed", r.passed},
                            {"ratio_at_largest_x", last},
                            {"notes", r.notes}});
            out.lyapunov.push_back(std::move(r));
        }
        checks.push_back(check("lyapunov", all ? "PASS" : "FAIL", Json{{"offsets", to_json(sol.values)}, {"runs", rows}}));
    } else {
        checks.push_back(check("lyapunov", "SKIP",
                               Json{{"reason", kernel ? "constant-drift regime" : "no kernel to evaluate"}}));
    }

    // Monte Carlo evidence.
    if (kernel && v.simulate) {
        const ChainModel& model = *spec.model;
        const State start = v.start.value_or(State{50.0, 0});
        model.check_state(start);
        const std::vector<PassageSample> samples =
            sample_passage_times(model, start, v.level, v.cap, v.n, opts.seed, opts.threads);
        const double censored = censored_fraction(samples);
        const MomentEstimate mean_full = empirical_moment(samples, 1.0);
        const MomentEstimate mean_half = empirical_moment(samples, 1.0, v.cap / 2);
        const double mean_ratio = mean_full.estimate / mean_half.estimate;
        Json sim{{"start", state_json(model, start)}, {"level", number(v.level)}, {"cap", v.cap}, {"n", v.n},
                 {"seed", opts.seed}, {"censored_fraction", number(censored)}, {"mean_doubling_ratio", number(mean_ratio)}};

        std::string status = "SKIP";
        std::optional<TailEstimate> tail;
        try {
            tail = tail_exponent(samples);
            sim["tail"] = to_json(*tail);
        } catch (const Error& e) {
            sim["tail"] = Json{{"error", e.what()}};
        }
        switch (verdict) {
            case Verdict::Transient:
                status = censored > 0.5 ? "PASS" : "FAIL";
                sim["rule"] = "censored fraction > 0.5";
                break;
            case Verdict::PositiveRecurrent:
                status = censored < 0.01 && mean_ratio >= 0.9 && mean_ratio <= 1.1 ? "PASS" : "FAIL";
                sim["rule"] = "censored fraction < 0.01 and mean passage time ratio under cap doubling in [0.9, 1.1]";
                break;
            case Verdict::NullRecurrent: {
                const double theta = analysis.moments->theta_star;
                sim["theta_star"] = number(theta);
                sim["band"] = number(v.tail_band);
                status = tail && std::abs(tail->exponent - theta) <= v.tail_band ? "PASS" : "FAIL";
                sim["rule"] = "tail exponent within band of theta*";
                break;
            }
            case Verdict::BoundaryNullRecurrent:
            case Verdict::Indeterminate:
                sim["rule"] = "no tail prediction at the boundary";
                break;
        }
        checks.push_back(check("simulation", status, sim));

        DiagnosticParams dp;
        dp.start = start;
        dp.level = v.level;
        dp.base_horizon = std::max<std::uint64_t>(v.cap / 4, 1);
        dp.n = v.diagnostic_n;
        dp.seed = opts.seed;
        dp.threads = opts.threads;
        const DiagnosticReport diag = recurrence_diagnostic(model, dp);
        Json dj = to_json(diag);
        std::string dstatus = "SKIP";
        switch (verdict) {
            case Verdict::Transient: dstatus = diag.call == EmpiricalCall::Escaping ? "PASS" : "FAIL"; break;
            case Verdict::NullRecurrent:
                dstatus = diag.call == EmpiricalCall::ReturningDivergingMean ? "PASS" : "FAIL";
                break;
            case Verdict::PositiveRecurrent:
                dstatus = diag.call == EmpiricalCall::ReturningStableMean ? "PASS" : "FAIL";
                break;
            case Verdict::BoundaryNullRecurrent:
                dstatus = diag.call != EmpiricalCall::Escaping ? "PASS" : "FAIL";
                break;
            case Verdict::Indeterminate: break;
        }
        checks.push_back(check("diagnostic", dstatus, dj));
    } else {
        checks.push_back(check("simulation", "SKIP", Json{{"reason", kernel ? "disabled" : "no kernel to simulate"}}));
    }

    for (const Json& c : checks) out.passed = out.passed && c["status"] != "FAIL";
    out.report["verdict"] = to_string(verdict);
    out.report["result"] = out.passed ? "PASS" : "FAIL";
    out.report["checks"] = checks;
    out.report["analysis"] = analysis.report;
    return out;
}

}  // namespace halfstrip
