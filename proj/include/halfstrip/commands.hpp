#pragma once

// Subcommand implementations behind the `halfstrip` binary. Each takes parsed
// options and writes its primary output to a stream; argument parsing lives
// in the tool itself.

#include <cstdint>
#include <iosfwd>
#include <optional>
#include <string>
#include <vector>

#include "halfstrip/json_io.hpp"

namespace halfstrip {

inline constexpr const char* kVersion = "0.1.0";

struct CommonOptions {
    std::uint64_t seed = 1;
    std::optional<double> tol;  // boundary band; default depends on where coefficients came from
    double centering_tol = 1e-9;
    bool refined = false;
    unsigned threads = 1;
};

struct AnalysisOutput {
    Json report;
    Classification classification;
    std::optional<MomentReport> moments;
};

/// Full pipeline: validate and fit (kernel specs), transform, classify, moment ranges.
AnalysisOutput cmd_analyze(const LoadedSpec& spec, const CommonOptions& opts);

/// Fitted coefficients with residual diagnostics; the output is itself a valid coefficients spec.
Json cmd_fit(const LoadedSpec& spec, const FitOptions& fit = {});

struct SimulateOptions {
    State start;
    double level = 0.0;
    std::uint64_t cap = 1'000'000;
    std::size_t n = 1000;
    std::vector<double> moment_orders{0.2, 0.6, 1.0};
    bool diagnostic = false;
    std::size_t diagnostic_n = 200;
};

/// Writes "tau,censored,steps" rows to `csv`; returns estimates and diagnostics.
Json cmd_simulate(const ChainModel& model, const SimulateOptions& sim, const CommonOptions& opts, std::ostream& csv);

/// Parses "X,LABEL" against the model's labels.
State parse_start(const ChainModel& model, const std::string& text);

struct VerifyOptions {
    std::optional<std::string> coeffs_path;  // asserted coefficients to check against the fit
    double coeffs_tolerance = 1e-3;
    bool simulate = true;
    std::optional<State> start;  // default (50, first label)
    double level = 10.0;
    std::uint64_t cap = 100'000;
    std::size_t n = 2000;
    std::size_t diagnostic_n = 200;
    double tail_band = 0.12;
    std::vector<double> nus;  // empty: {2 theta*, 1, 2}
    std::vector<double> lyapunov_grid;  // empty: 10^2 .. 10^5, 7 points
};

struct VerifyOutput {
    Json report;
    bool passed = true;
    std::vector<VerificationReport> lyapunov;
};

VerifyOutput cmd_verify(const LoadedSpec& spec, const VerifyOptions& verify, const CommonOptions& opts);

/// Ratio table of Lyapunov verification reports as CSV: nu,x,label,increment,leading,ratio.
void write_lyapunov_csv(const ChainModel& model, const std::vector<VerificationReport>& reports, std::ostream& out);

}  // namespace halfstrip
