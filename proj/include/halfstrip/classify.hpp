#pragma once

#include <Eigen/Dense>

#include <limits>
#include <string>
#include <utility>

#include "halfstrip/drift.hpp"
#include "halfstrip/markov.hpp"

namespace halfstrip {

/// Per-line data of a chain with Lamperti drift: mu_i(x) = c_i/x + o(1/x), sigma_i^2(x) -> s2_i.
struct LampertiCoefficients {
    Eigen::VectorXd c, s2;
    Eigen::MatrixXd q_limit;
    Eigen::VectorXd pi;
};

enum class Verdict { Transient, NullRecurrent, PositiveRecurrent, BoundaryNullRecurrent, Indeterminate };

const char* to_string(Verdict v) noexcept;

/// Null recurrence, including the boundary case decided under the refined hypotheses.
constexpr bool is_null_recurrent(Verdict v) noexcept {
    return v == Verdict::NullRecurrent || v == Verdict::BoundaryNullRecurrent;
}

struct Classification {
    Verdict verdict = Verdict::Indeterminate;
    double U = 0.0;
    double V = 0.0;
    double margin = 0.0;  // V - |U|: positive inside the null-recurrent band
    Regime regime = Regime::Lamperti;
    double tol = 0.0;
    bool refined = false;
    std::string notes;
};

/// s in [lo, hi] with per-end closedness; hi may be +inf.
struct Interval {
    double lo = 0.0;
    double hi = 0.0;
    bool lo_closed = true;
    bool hi_closed = false;
    bool contains(double s) const noexcept {
        return (lo_closed ? s >= lo : s > lo) && (hi_closed ? s <= hi : s < hi);
    }
};

struct MomentReport {
    double theta_star = 0.0;
    double p_cap = std::numeric_limits<double>::infinity();
    Interval finite_range;    // E[tau^s] < inf
    Interval infinite_range;  // E[tau^s] = inf
    bool infinite_range_known = true;
    std::string gap_note;
};

inline constexpr double kAnalyticTol = 1e-9;
inline constexpr double kFittedTol = 1e-4;

LampertiCoefficients lamperti_from(const AsymptoticCoefficients& coeffs);

Classification classify_constant(const AsymptoticCoefficients& coeffs);

Classification classify_lamperti(const LampertiCoefficients& lc, bool refined, double tol = kAnalyticTol);

/// Lamperti data of the chain (X + a_eta, eta), with a the min-normalized Poisson solution.
std::pair<LampertiCoefficients, PoissonSolution<double>> transform_generalized(
    const AsymptoticCoefficients& coeffs, double centering_tol = 1e-9);

/// U = sum_i (2 e_i + 2 sum_j a_j gamma_ij) pi_i, V = sum_i (t2_i + 2 sum_j a_j d_ij) pi_i.
std::pair<double, double> compute_uv(const AsymptoticCoefficients& coeffs, const Eigen::VectorXd& a);

Classification classify_generalized(const AsymptoticCoefficients& coeffs, bool refined,
                                    double tol = kAnalyticTol, double centering_tol = 1e-9);

/// Routes by regime to the constant, Lamperti or generalized classifier.
Classification classify(const AsymptoticCoefficients& coeffs, bool refined, double tol = kAnalyticTol,
                        double centering_tol = 1e-9);

/// Passage-time moment ranges from the critical exponent theta* = (V - U) / (2V).
MomentReport moment_threshold(double U, double V, double p_cap = std::numeric_limits<double>::infinity());

}  // namespace halfstrip
