#include "halfstrip/classify.hpp"

#include <cmath>
#include <sstream>

#include "halfstrip/error.hpp"

namespace halfstrip {

const char* to_string(Verdict v) noexcept {
    switch (v) {
        case Verdict::Transient: return "Transient";
        case Verdict::NullRecurrent: return "NullRecurrent";
        case Verdict::PositiveRecurrent: return "PositiveRecurrent";
        case Verdict::BoundaryNullRecurrent: return "BoundaryNullRecurrent";
        case Verdict::Indeterminate: return "Indeterminate";
    }
    return "Unknown";
}

LampertiCoefficients lamperti_from(const AsymptoticCoefficients& coeffs) {
    return {coeffs.e, coeffs.t2, coeffs.q_limit, coeffs.pi};
}

Classification classify_constant(const AsymptoticCoefficients& coeffs) {
    const double mean = coeffs.pi.dot(coeffs.d);
    if (mean == 0.0 || check_regime(coeffs) != Regime::ConstantDrift)
        throw Error(ErrorKind::WrongRegime, "constant-drift classification needs sum_i pi_i d_i != 0");
    Classification out;
    out.regime = Regime::ConstantDrift;
    out.verdict = mean > 0 ? Verdict::Transient : Verdict::PositiveRecurrent;
    out.U = mean;
    out.margin = std::abs(mean);
    out.notes = "sign of the stationary mean drift sum_i pi_i d_i";
    return out;
}

namespace {

Classification decide(double U, double V, bool refined, double tol) {
    if (!(V > tol))
        throw Error(ErrorKind::DegenerateVariance,
                    "V = " + std::to_string(V) + " is not positive; the classification hypotheses fail");
    Classification out;
    out.U = U;
    out.V = V;
    out.margin = V - std::abs(U);
    out.tol = tol;
    out.refined = refined;
    if (U - V > tol) {
        out.verdict = Verdict::Transient;
    } else if (U + V < -tol) {
        out.verdict = Verdict::PositiveRecurrent;
    } else if (std::abs(U) < V - tol) {
        out.verdict = Verdict::NullRecurrent;
    } else if (refined) {
        out.verdict = Verdict::BoundaryNullRecurrent;
        out.notes = "|U| = V within tolerance; null recurrent under the refined rate hypotheses";
    } else {
        out.verdict = Verdict::Indeterminate;
        out.notes = "|U| = V within tolerance; refined rate hypotheses not asserted";
    }
    return out;
}

}  // namespace

Classification classify_lamperti(const LampertiCoefficients& lc, bool refined, double tol) {
    const double U = 2.0 * lc.pi.dot(lc.c);
    const double V = lc.pi.dot(lc.s2);
    Classification out = decide(U, V, refined, tol);
    out.regime = Regime::Lamperti;
    return out;
}

std::pair<LampertiCoefficients, PoissonSolution<double>> transform_generalized(
    const AsymptoticCoefficients& coeffs, double centering_tol) {
    PoissonSolution<double> sol = solve_poisson(coeffs.q_limit, coeffs.d, centering_tol);
    const Eigen::VectorXd& a = sol.values;
    const Eigen::Index n = coeffs.size();

    LampertiCoefficients lc;
    lc.q_limit = coeffs.q_limit;
    lc.pi = coeffs.pi;
    lc.c = coeffs.e + coeffs.gamma * a;
    const Eigen::VectorXd a2 = a.array().square();
    lc.s2.resize(n);
    for (Eigen::Index i = 0; i < n; ++i) {
        double jump_shift = 0.0;
        for (Eigen::Index j = 0; j < n; ++j) jump_shift += (a2(j) - a2(i)) * coeffs.q_limit(i, j);
        lc.s2(i) = coeffs.t2(i) + 2.0 * coeffs.d_cross.row(i).dot(a) + jump_shift;
    }
    return {std::move(lc), std::move(sol)};
}

std::pair<double, double> compute_uv(const AsymptoticCoefficients& coeffs, const Eigen::VectorXd& a) {
    if (a.size() != coeffs.size()) throw Error(ErrorKind::InvalidArgument, "offset vector size mismatch");
    const Eigen::VectorXd u_line = 2.0 * coeffs.e + 2.0 * coeffs.gamma * a;
    const Eigen::VectorXd v_line = coeffs.t2 + 2.0 * coeffs.d_cross * a;
    return {coeffs.pi.dot(u_line), coeffs.pi.dot(v_line)};
}

Classification classify_generalized(const AsymptoticCoefficients& coeffs, bool refined, double tol,
                                    double centering_tol) {
    const PoissonSolution<double> sol = solve_poisson(coeffs.q_limit, coeffs.d, centering_tol);
    const auto [U, V] = compute_uv(coeffs, sol.values);
    Classification out = decide(U, V, refined, tol);
    out.regime = check_regime(coeffs, centering_tol);
    std::ostringstream note;
    note << (out.notes.empty() ? "" : out.notes + "; ") << "Poisson residual " << sol.residual;
    out.notes = note.str();
    return out;
}

Classification classify(const AsymptoticCoefficients& coeffs, bool refined, double tol, double centering_tol) {
    switch (check_regime(coeffs, centering_tol)) {
        case Regime::ConstantDrift: return classify_constant(coeffs);
        case Regime::Lamperti: return classify_lamperti(lamperti_from(coeffs), refined, tol);
        case Regime::GeneralizedLamperti: break;
    }
    return classify_generalized(coeffs, refined, tol, centering_tol);
}

MomentReport moment_threshold(double U, double V, double p_cap) {
    if (!(V > 0)) throw Error(ErrorKind::DegenerateVariance, "moment thresholds need V > 0");
    constexpr double inf = std::numeric_limits<double>::infinity();
    MomentReport r;
    r.p_cap = p_cap;
    r.theta_star = (V - U) / (2.0 * V);
    const double t = r.theta_star;

    if (t <= 0) {
        // U >= V: every theta in (0, p_cap] satisfies the non-existence condition.
        r.finite_range = {0.0, 0.0, true, true};
        r.infinite_range = {0.0, inf, false, false};
        r.gap_note = "theta* <= 0: E[tau^s] is infinite for every s > 0";
        return r;
    }
    if (t <= p_cap) {
        r.finite_range = {0.0, t, true, false};
        r.infinite_range = {t, inf, false, false};
        r.gap_note = "finiteness of E[tau^s] at s = theta* exactly is not decided";
    } else {
        r.finite_range = {0.0, p_cap, true, true};
        r.infinite_range = {inf, inf, false, false};
        r.infinite_range_known = false;
        r.gap_note = "theta* exceeds p/2; nothing is decided for s > p/2";
    }
    return r;
}

}  // namespace halfstrip
