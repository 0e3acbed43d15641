// Acceptance checks: one PASS/FAIL line per criterion, numbers alongside.
// Exit status is nonzero when any criterion fails.

#include <sys/wait.h>

#include <algorithm>
#include <chrono>
#include <cmath>
#include <cstdio>
#include <cstdlib>
#include <filesystem>
#include <fstream>
#include <functional>
#include <iostream>
#include <random>
#include <sstream>
#include <string>

#include "halfstrip/classify.hpp"
#include "halfstrip/lyapunov.hpp"
#include "halfstrip/sim.hpp"

using namespace halfstrip;

namespace {

// Pinned tolerances and run sizes.
constexpr double kGoldenTol = 1e-10;
constexpr double kInvarianceTol = 1e-10;
constexpr double kResidualTol = 1e-10;
constexpr std::size_t kSamples = 10'000;
constexpr std::uint64_t kCap = 1'000'000;
constexpr double kReflectedLo = 0.40, kReflectedHi = 0.60;
constexpr double kNullTailLo = 0.21, kNullTailHi = 0.45;
constexpr double kStableLo = 0.95, kStableHi = 1.05;
constexpr double kGrowthMin = 1.20;
constexpr double kTransientCensoredMin = 0.5;
constexpr double kLinearLo = 1.8, kLinearHi = 2.2;
constexpr double kPositiveCensoredMax = 0.001;
constexpr double kMeanRatioLo = 0.9, kMeanRatioHi = 1.1;
constexpr double kLyapunovTol = 0.05;
constexpr std::size_t kDiagnosticPaths = 1000;
constexpr std::uint64_t kSeed = 20240601;

int failures = 0;

void report(int id, const std::string& name, bool ok, const std::string& detail, double seconds) {
    if (!ok) ++failures;
    std::printf("[%s] %d. %s: %s (%.2f s)\n", ok ? "PASS" : "FAIL", id, name.c_str(), detail.c_str(), seconds);
    std::fflush(stdout);
}

double seconds_since(std::chrono::steady_clock::time_point t0) {
    return std::chrono::duration<double>(std::chrono::steady_clock::now() - t0).count();
}

std::string fmt(const char* f, double a, double b = 0, double c = 0, double d = 0) {
    char buf[256];
    std::snprintf(buf, sizeof buf, f, a, b, c, d);
    return buf;
}

CrwParams crw(double q, double c) {
    CrwParams p;
    p.q = q;
    p.c_plus = c;
    p.c_minus = c;
    return p;
}

// Limiting data of the correlated walk, worked out by hand from its kernel.
AsymptoticCoefficients crw_coefficients(double q, double c) {
    AsymptoticCoefficients co;
    co.labels = {"+1", "-1"};
    co.d = Eigen::Vector2d(2 * q - 1, 1 - 2 * q);
    co.e = Eigen::Vector2d(c, c);
    co.t2 = Eigen::Vector2d(1, 1);
    co.d_cross.resize(2, 2);
    co.d_cross << q, -(1 - q), 1 - q, -q;
    co.gamma.resize(2, 2);
    co.gamma << c / 2, -c / 2, c / 2, -c / 2;
    co.q_limit.resize(2, 2);
    co.q_limit << q, 1 - q, 1 - q, q;
    finalize_coefficients(co);
    return co;
}

Eigen::MatrixXd random_stochastic(int n, std::mt19937_64& rng) {
    std::uniform_real_distribution<double> u(0.05, 1.0);
    Eigen::MatrixXd q(n, n);
    for (int i = 0; i < n; ++i)
        for (int j = 0; j < n; ++j) q(i, j) = u(rng);
    for (int i = 0; i < n; ++i) q.row(i) /= q.row(i).sum();
    return q;
}

// Random centered generalized-Lamperti data with V > 0.
AsymptoticCoefficients random_coefficients(std::mt19937_64& rng) {
    std::uniform_int_distribution<int> size(1, 6);
    std::normal_distribution<double> g;
    for (;;) {
        const int n = size(rng);
        AsymptoticCoefficients c;
        for (int i = 0; i < n; ++i) c.labels.push_back("s" + std::to_string(i));
        c.q_limit = random_stochastic(n, rng);
        const Eigen::VectorXd pi = stationary_distribution(c.q_limit);
        c.d.resize(n);
        c.e.resize(n);
        c.t2.resize(n);
        c.d_cross.resize(n, n);
        c.gamma.resize(n, n);
        for (int i = 0; i < n; ++i) {
            c.d(i) = g(rng);
            c.e(i) = g(rng);
            c.t2(i) = 2.0 + std::abs(g(rng));
            for (int j = 0; j < n; ++j) {
                c.d_cross(i, j) = g(rng);
                c.gamma(i, j) = g(rng);
            }
        }
        c.d.array() -= pi.dot(c.d);
        for (int i = 0; i < n; ++i) {
            c.d_cross.row(i).array() += (c.d(i) - c.d_cross.row(i).sum()) / n;
            c.gamma.row(i).array() -= c.gamma.row(i).sum() / n;
        }
        finalize_coefficients(c);
        const auto sol = solve_poisson(c.q_limit, c.d);
        if (compute_uv(c, sol.values).second > 0.1) return c;
    }
}

bool run_cli(const std::string& args) {
    const std::string cmd = std::string(HALFSTRIP_CLI) + " " + args;
    const int raw = std::system(cmd.c_str());
    return raw != -1 && WIFEXITED(raw) && WEXITSTATUS(raw) == 0;
}

std::string slurp(const std::filesystem::path& p) {
    std::ifstream f(p, std::ios::binary);
    std::ostringstream s;
    s << f.rdbuf();
    return s.str();
}

void phase_diagram() {
    const auto t0 = std::chrono::steady_clock::now();
    int mismatches = 0, band = 0, cells = 0;
    for (int a = 0; a <= 20; ++a) {
        const double q = 0.1 + 0.8 * a / 20;
        for (int b = 0; b <= 20; ++b) {
            const double c = -1.5 + 3.0 * b / 20;
            ++cells;
            const Verdict got = classify_generalized(crw_coefficients(q, c), true).verdict;
            if (std::abs(std::abs(c) - q) < kAnalyticTol) {
                ++band;
                if (!is_null_recurrent(got)) ++mismatches;
                continue;
            }
            const Verdict want = c < -q ? Verdict::PositiveRecurrent : c > q ? Verdict::Transient : Verdict::NullRecurrent;
            if (got != want) ++mismatches;
        }
    }
    report(1, "phase diagram on the 21x21 (q, c) grid", mismatches == 0,
           std::to_string(cells) + " cells, " + std::to_string(band) + " in the boundary band, " +
               std::to_string(mismatches) + " mismatches",
           seconds_since(t0));
}

void golden_numbers() {
    const auto t0 = std::chrono::steady_clock::now();
    const double q = 0.6, c = 0.2;
    const double a_plus = (2 * q - 1) / (1 - q), U_ref = (c + c) / (2 * (1 - q)), V_ref = q / (1 - q);
    double worst = 0.0;
    auto check = [&](const AsymptoticCoefficients& co) {
        const auto sol = solve_poisson(co.q_limit, co.d);
        const auto [U, V] = compute_uv(co, sol.values);
        worst = std::max({worst, std::abs(co.pi(0) - 0.5), std::abs(co.pi(1) - 0.5), std::abs(sol.values(0) - a_plus),
                          std::abs(sol.values(1)), std::abs(U - U_ref), std::abs(V - V_ref)});
        return std::pair{U, V};
    };
    check(crw_coefficients(q, c));
    const auto [U, V] = check(fit_asymptotics(make_crw(crw(q, c))));
    report(2, "golden numbers for q=0.6, c=0.2", worst <= kGoldenTol,
           fmt("U=%.15g V=%.15g, max deviation from closed forms %.2e (analytic and fitted)", U, V, worst),
           seconds_since(t0));
}

void translation_invariance() {
    const auto t0 = std::chrono::steady_clock::now();
    std::mt19937_64 rng(kSeed);
    std::normal_distribution<double> g;
    double worst_shift = 0.0, worst_residual = 0.0;
    for (int k = 0; k < 20; ++k) {
        const AsymptoticCoefficients co = random_coefficients(rng);
        const auto sol = solve_poisson(co.q_limit, co.d);
        const auto [U, V] = compute_uv(co, sol.values);
        const double shift = 10 * g(rng);
        const Eigen::VectorXd moved = sol.values.array() + shift;
        const auto [U2, V2] = compute_uv(co, moved);
        worst_shift = std::max({worst_shift, std::abs(U - U2), std::abs(V - V2)});
    }
    for (int k = 0; k < 100; ++k) {
        const AsymptoticCoefficients co = random_coefficients(rng);
        worst_residual = std::max(worst_residual, solve_poisson(co.q_limit, co.d).residual);
    }
    report(3, "translation invariance and Poisson residuals",
           worst_shift <= kInvarianceTol && worst_residual <= kResidualTol,
           fmt("max (U,V) change under 20 shifts %.2e, max residual over 100 systems %.2e", worst_shift, worst_residual),
           seconds_since(t0));
}

void transform_consistency() {
    const auto t0 = std::chrono::steady_clock::now();
    std::mt19937_64 rng(kSeed + 1);
    double worst = 0.0;
    int verdict_mismatch = 0;
    for (int k = 0; k < 200; ++k) {
        const AsymptoticCoefficients co = random_coefficients(rng);
        const Classification direct = classify_generalized(co, true);
        const Classification via = classify_lamperti(transform_generalized(co).first, true);
        worst = std::max({worst, std::abs(direct.U - via.U), std::abs(direct.V - via.V)});
        if (direct.verdict != via.verdict) ++verdict_mismatch;
    }
    report(4, "direct classification equals transform then Lamperti", worst <= kInvarianceTol && verdict_mismatch == 0,
           fmt("200 random sets, max (U,V) gap %.2e, %g verdict mismatches", worst, verdict_mismatch),
           seconds_since(t0));
}

void reflected_walk_tail() {
    const auto t0 = std::chrono::steady_clock::now();
    TabularSpec s;
    s.labels = {"0"};
    s.lines = {{TabularSegment{0.0, {TabularAtom{1.0, "0", 0.5}, TabularAtom{-1.0, "0", 0.5}}}}};
    const auto samples = sample_passage_times(make_tabular(s), {20.0, 0}, 0.0, kCap, kSamples, kSeed);
    const TailEstimate t = tail_exponent(samples);
    report(5, "reflected symmetric walk tail exponent", t.exponent >= kReflectedLo && t.exponent <= kReflectedHi,
           fmt("exponent %.4f (stderr %.4f, Hill %.4f), censored %.4f", t.exponent, t.stderr_, t.hill_exponent,
               t.censored_fraction),
           seconds_since(t0));
}

void null_walk_tail_and_moments() {
    const auto t0 = std::chrono::steady_clock::now();
    const auto samples = sample_passage_times(make_crw(crw(0.6, 0.2)), {50.0, kCrwPlus}, 10.0, kCap, kSamples, kSeed);
    const TailEstimate t = tail_exponent(samples);
    const double low = empirical_moment(samples, 0.2).estimate / empirical_moment(samples, 0.2, kCap / 2).estimate;
    const double high = empirical_moment(samples, 0.6).estimate / empirical_moment(samples, 0.6, kCap / 2).estimate;
    const bool ok = t.exponent >= kNullTailLo && t.exponent <= kNullTailHi && low >= kStableLo && low <= kStableHi &&
                    high >= kGrowthMin;
    report(6, "null-recurrent walk tail and moments", ok,
           fmt("exponent %.4f (theta* = 1/3, Hill %.4f); s=0.2 doubling ratio %.4f; s=0.6 doubling ratio %.4f",
               t.exponent, t.hill_exponent, low, high) +
               fmt("; censored %.4f", t.censored_fraction),
           seconds_since(t0));
}

void regime_endpoints() {
    auto t0 = std::chrono::steady_clock::now();
    const ChainModel transient = make_crw(crw(0.6, 1.5));
    const auto ts = sample_passage_times(transient, {50.0, kCrwPlus}, 10.0, kCap, kSamples, kSeed);
    const double escaped = censored_fraction(ts);
    DiagnosticParams dp;
    dp.start = {50.0, kCrwPlus};
    dp.level = 10.0;
    dp.base_horizon = kCap / 2;
    dp.doublings = 2;
    dp.n = kDiagnosticPaths;
    dp.seed = kSeed;
    const DiagnosticReport diag = recurrence_diagnostic(transient, dp);
    const double growth = diag.median_growth_ratio;
    report(7, "transient walk escapes with linear median growth",
           escaped > kTransientCensoredMin && growth >= kLinearLo && growth <= kLinearHi,
           fmt("censored %.4f; median X %.1f at T=5e5, %.1f at 2T, ratio %.4f", escaped, diag.median_position[0],
               diag.median_position[1], growth) +
               " (call " + to_string(diag.call) + ")",
           seconds_since(t0));

    t0 = std::chrono::steady_clock::now();
    const auto ps = sample_passage_times(make_crw(crw(0.6, -1.0)), {50.0, kCrwPlus}, 10.0, kCap, kSamples, kSeed);
    const double censored = censored_fraction(ps);
    const double ratio = empirical_moment(ps, 1.0).estimate / empirical_moment(ps, 1.0, kCap / 2).estimate;
    report(7, "positive-recurrent walk returns with stable mean",
           censored < kPositiveCensoredMax && ratio >= kMeanRatioLo && ratio <= kMeanRatioHi,
           fmt("censored %.5f; mean passage %.1f; doubling ratio %.4f", censored, empirical_moment(ps, 1.0).estimate,
               ratio),
           seconds_since(t0));
}

void lyapunov_ratios() {
    const auto t0 = std::chrono::steady_clock::now();
    const ChainModel m = make_crw(crw(0.6, 0.2));
    const auto [lc, sol] = transform_generalized(fit_asymptotics(m));
    const ChainModel shifted = shift_model(m, sol.values);
    const auto grid = geometric_grid(2, 5, 7);
    bool ok = true;
    std::string detail;
    for (double nu : {2.0 / 3, 1.0, 2.0}) {
        const Eigen::VectorXd u = lyapunov_drift_terms(lc, nu);
        const double mean = lc.pi.dot(u);
        const Eigen::VectorXd b = std::abs(mean) > 1e-9
                                      ? choose_b(lc, nu, mean < 0 ? Direction::Negative : Direction::Positive)
                                      : Eigen::VectorXd::Unit(u.size(), 0);
        const VerificationReport r = verify_drift_estimate(shifted, lc, LyapunovFunction(nu, b), grid, kLyapunovTol);
        double worst = 0.0;
        for (const RatioRow& row : r.rows)
            if (row.x == grid.back() && row.defined) worst = std::max(worst, std::abs(row.ratio - 1.0));
        ok = ok && r.passed && r.undefined_lines.empty();
        detail += fmt("nu=%.4f max|ratio-1| at 1e5 = %.2e", nu, worst) + (r.passed ? "; " : " (" + r.notes + "); ");
    }
    report(8, "drift estimate ratios on the transformed walk", ok, detail.substr(0, detail.size() - 2), seconds_since(t0));
}

void reproducibility() {
    const auto t0 = std::chrono::steady_clock::now();
    const auto dir = std::filesystem::temp_directory_path() / "halfstrip_acceptance";
    std::filesystem::create_directories(dir);
    const std::string base = std::string("simulate --model ") + HALFSTRIP_TEST_DATA +
                             "/crw_null.json --start 50,+1 --level 10 --cap 100000 --n 2000 --seed 4242";
    bool ran = true;
    ran = ran && run_cli(base + " --threads 1 --out " + (dir / "a.csv").string());
    ran = ran && run_cli(base + " --threads 1 --out " + (dir / "b.csv").string());
    ran = ran && run_cli(base + " --threads 8 --out " + (dir / "c.csv").string());
    const std::string a = slurp(dir / "a.csv"), b = slurp(dir / "b.csv"), c = slurp(dir / "c.csv");
    const bool same = ran && !a.empty() && a == b && a == c;
    report(9, "simulate output is byte-identical across runs and thread counts", same,
           std::to_string(a.size()) + " bytes; runs equal: " + (a == b ? "yes" : "no") +
               ", threads 1 vs 8 equal: " + (a == c ? "yes" : "no"),
           seconds_since(t0));
}

}  // namespace

// Optional arguments pick a subset of criteria by number.
int main(int argc, char** argv) {
    const std::pair<const char*, std::function<void()>> steps[] = {
        {"1", phase_diagram},      {"2", golden_numbers},   {"3", translation_invariance},
        {"4", transform_consistency}, {"5", reflected_walk_tail}, {"6", null_walk_tail_and_moments},
        {"7", regime_endpoints},   {"8", lyapunov_ratios},  {"9", reproducibility},
    };
    for (const auto& [id, fn] : steps) {
        if (argc > 1 && std::find_if(argv + 1, argv + argc, [&](const char* a) { return std::string(a) == id; }) == argv + argc)
            continue;
        try {
            fn();
        } catch (const std::exception& e) {
            report(std::atoi(id), "criterion raised an error", false, e.what(), 0.0);
        }
    }
    std::printf("%d failing criteria line(s)\n", failures);
    return failures == 0 ? 0 : 1;
}
