#pragma once

#include <Eigen/Dense>

#include <string>
#include <vector>

#include "halfstrip/classify.hpp"
#include "halfstrip/markov.hpp"
#include "halfstrip/model.hpp"

namespace halfstrip {

/// f(x, i) = x^nu + (nu/2) b_i x^(nu-2) for x >= x0, frozen at x0 below it,
/// with x0 = 1 + sqrt(|nu| max_i |b_i|).
class LyapunovFunction {
public:
    LyapunovFunction(double nu, Eigen::VectorXd b);

    double nu() const noexcept { return nu_; }
    const Eigen::VectorXd& b() const noexcept { return b_; }
    double x0() const noexcept { return x0_; }

    double operator()(const State& s) const;
    /// f(to) - f(from), evaluated without cancellation when both are above x0.
    double difference(const State& from, const State& to) const;

private:
    double nu_;
    Eigen::VectorXd b_;
    double x0_;
};

struct LyapunovBounds {
    double k1 = 0.0;  // min over the grid of f / (1 + x)^nu
    double k2 = 0.0;  // max
};

LyapunovBounds lyapunov_bounds(const LyapunovFunction& f, const std::vector<double>& grid);

/// u_i = 2 c_i + (nu - 1) s2_i.
Eigen::VectorXd lyapunov_drift_terms(const LampertiCoefficients& lc, double nu);

/// Weights b making 2c_i + (nu-1)s2_i + sum_j (b_j - b_i) q_ij uniformly negative (or positive).
Eigen::VectorXd choose_b(const LampertiCoefficients& lc, double nu, Direction direction);

/// The bracket 2c_i + (nu-1)s2_i + sum_j (b_j - b_i) q_ij for every line.
Eigen::VectorXd lyapunov_bracket(const LampertiCoefficients& lc, const LyapunovFunction& f);

/// Exact E[f(X1, eta1) - f(x, i)] as a sum over kernel atoms.
double expected_f_increment(const ChainModel& model, const LyapunovFunction& f, const State& s);

struct RatioRow {
    double x = 0.0;
    Label label = 0;
    double increment = 0.0;
    double leading = 0.0;  // (nu/2) x^(nu-2) * bracket_i
    double ratio = 0.0;
    bool defined = true;
};

struct VerificationReport {
    double nu = 0.0;
    std::vector<RatioRow> rows;
    std::vector<Label> undefined_lines;  // bracket within 1e-6 of zero
    bool passed = false;
    std::string notes;
};

/// Compares the exact increment with the leading-order term along `grid`.
///
/// A line passes when |ratio - 1| decreases along the grid (or has already
/// dropped below 1e-8) and is at most `final_tolerance` at the largest point;
/// lines with a vanishing bracket are reported and skipped.
VerificationReport verify_drift_estimate(const ChainModel& model, const LampertiCoefficients& lc,
                                         const LyapunovFunction& f, const std::vector<double>& grid,
                                         double final_tolerance = 0.05);

}  // namespace halfstrip
