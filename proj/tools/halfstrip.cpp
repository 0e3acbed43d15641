// halfstrip: classify and simulate Markov chains on half-strips.

#include <CLI11.hpp>

#include <fstream>
#include <iostream>
#include <sstream>

#include "halfstrip/commands.hpp"
#include "halfstrip/error.hpp"

using namespace halfstrip;

namespace {

constexpr int kExitError = 1;
constexpr int kExitVerifyFailed = 3;

void emit(const std::string& text, const std::string& path) {
    if (path.empty()) {
        std::cout << text;
        return;
    }
    std::ofstream f(path, std::ios::binary);
    if (!f) throw Error(ErrorKind::InvalidArgument, "cannot write " + path);
    f << text;
}

}  // namespace

int main(int argc, char** argv) {
    CLI::App app{"Recurrence, transience and passage-time moments of half-strip Markov chains"};
    app.require_subcommand(1);
    app.fallthrough();

    CommonOptions common;
    std::string out_path;
    double tol = 0.0;
    app.add_option("--seed", common.seed, "Master seed for simulation")->capture_default_str();
    app.add_option("--out", out_path, "Write the primary output here instead of stdout");
    auto* tol_opt = app.add_option("--tol", tol, "Half-width of the |U| = V boundary band");
    app.add_option("--centering-tol", common.centering_tol, "Tolerance on sum_i pi_i d_i")->capture_default_str();
    app.add_flag("--refined", common.refined, "Assert the refined rate hypotheses (decides the |U| = V boundary)");
    app.add_option("--threads", common.threads, "Worker threads for simulation")->capture_default_str()
        ->check(CLI::PositiveNumber);

    std::string model_path;

    auto* analyze = app.add_subcommand("analyze", "Classify a model or coefficient set; JSON report");
    analyze->add_option("spec", model_path, "Model or coefficients JSON")->required();

    auto* fit = app.add_subcommand("fit", "Fit asymptotic coefficients of a kernel; JSON");
    fit->add_option("spec", model_path, "Model JSON")->required();

    SimulateOptions sim;
    std::string start_text, json_path;
    auto* simulate = app.add_subcommand("simulate", "Sample passage times; CSV of samples, JSON of estimates");
    simulate->add_option("--model", model_path, "Model JSON")->required();
    simulate->add_option("--start", start_text, "Start state as X,LABEL")->required();
    simulate->add_option("--level", sim.level, "Passage level R")->required();
    simulate->add_option("--cap", sim.cap, "Censoring cap in steps")->capture_default_str()->check(CLI::PositiveNumber);
    simulate->add_option("--n", sim.n, "Number of samples")->capture_default_str();
    simulate->add_option("--json", json_path, "Write estimates and diagnostics as JSON to this file");
    simulate->add_option("--moments", sim.moment_orders, "Orders s for empirical E[min(tau, cap)^s]")
        ->capture_default_str();
    simulate->add_flag("--diagnostic", sim.diagnostic, "Also run the recurrence diagnostic");

    VerifyOptions ver;
    std::string coeffs_path, verify_start;
    bool lyapunov_only = false, no_sim = false;
    auto* verify = app.add_subcommand("verify", "Cross-check the analytic verdict; exit 3 on any FAIL");
    verify->add_option("spec", model_path, "Model JSON")->required();
    verify->add_option("--coeffs", coeffs_path, "Asserted coefficients JSON to compare with the fit");
    verify->add_flag("--lyapunov", lyapunov_only, "Emit the Lyapunov ratio table as CSV instead of the JSON report");
    verify->add_option("--nu", ver.nus, "Lyapunov exponents (default 2 theta*, 1, 2)");
    verify->add_option("--start", verify_start, "Simulation start X,LABEL (default 50,<first label>)");
    verify->add_option("--level", ver.level, "Simulation passage level")->capture_default_str();
    verify->add_option("--cap", ver.cap, "Simulation censoring cap")->capture_default_str()->check(CLI::PositiveNumber);
    verify->add_option("--n", ver.n, "Simulation samples")->capture_default_str();
    verify->add_option("--tail-band", ver.tail_band, "Allowed |tail exponent - theta*|")->capture_default_str();
    verify->add_flag("--no-sim", no_sim, "Skip the Monte Carlo checks");

    CLI11_PARSE(app, argc, argv);
    if (*tol_opt) common.tol = tol;

    try {
        if (*analyze) {
            const LoadedSpec spec = load_spec_file(model_path);
            emit(cmd_analyze(spec, common).report.dump(2) + "\n", out_path);
        } else if (*fit) {
            const LoadedSpec spec = load_spec_file(model_path);
            emit(cmd_fit(spec).dump(2) + "\n", out_path);
        } else if (*simulate) {
            const LoadedSpec spec = load_spec_file(model_path);
            if (!spec.model) throw Error(ErrorKind::InvalidArgument, "simulate needs a kernel spec (crw or tabular)");
            sim.start = parse_start(*spec.model, start_text);
            std::ostringstream csv;
            const Json rep = cmd_simulate(*spec.model, sim, common, csv);
            emit(csv.str(), out_path);
            if (!json_path.empty()) emit(rep.dump(2) + "\n", json_path);
        } else if (*verify) {
            const LoadedSpec spec = load_spec_file(model_path);
            if (!coeffs_path.empty()) ver.coeffs_path = coeffs_path;
            if (!verify_start.empty()) {
                if (!spec.model) throw Error(ErrorKind::InvalidArgument, "--start needs a kernel spec");
                ver.start = parse_start(*spec.model, verify_start);
            }
            ver.simulate = !no_sim && !lyapunov_only;
            const VerifyOutput result = cmd_verify(spec, ver, common);
            if (lyapunov_only) {
                if (!spec.model) throw Error(ErrorKind::InvalidArgument, "--lyapunov needs a kernel spec");
                std::ostringstream csv;
                write_lyapunov_csv(*spec.model, result.lyapunov, csv);
                emit(csv.str(), out_path);
            } else {
                emit(result.report.dump(2) + "\n", out_path);
            }
            for (const Json& c : result.report["checks"])
                std::cerr << c["status"].get<std::string>() << "  " << c["name"].get<std::string>() << "\n";
            if (!result.passed) return kExitVerifyFailed;
        }
    } catch (const Error& e) {
        std::cerr << "halfstrip: " << e.what() << "\n";
        return kExitError;
    } catch (const std::exception& e) {
        std::cerr << "halfstrip: " << e.what() << "\n";
        return kExitError;
    }
    return 0;
}
