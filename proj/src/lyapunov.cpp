#include "halfstrip/lyapunov.hpp"

#include <algorithm>
#include <cmath>
#include <limits>
#include <sstream>

#include "halfstrip/error.hpp"

namespace halfstrip {

namespace {

// |ratio - 1| at this level is cancellation noise in the atom sum, not a trend.
constexpr double kRatioNoise = 1e-8;

}  // namespace

LyapunovFunction::LyapunovFunction(double nu, Eigen::VectorXd b) : nu_(nu), b_(std::move(b)) {
    if (!std::isfinite(nu_) || b_.size() == 0 || !b_.allFinite())
        throw Error(ErrorKind::InvalidArgument, "Lyapunov parameters must be finite with at least one weight");
    x0_ = 1.0 + std::sqrt(std::abs(nu_) * b_.cwiseAbs().maxCoeff());
}

double LyapunovFunction::operator()(const State& s) const {
    const double x = std::max(s.position, x0_);
    const double bi = b_(static_cast<Eigen::Index>(s.label));
    return std::pow(x, nu_) + 0.5 * nu_ * bi * std::pow(x, nu_ - 2);
}

double LyapunovFunction::difference(const State& from, const State& to) const {
    // Below x0 the function is frozen, so clamping both ends is exact.
    const double xf = std::max(from.position, x0_);
    const double xt = std::max(to.position, x0_);
    const double bi = b_(static_cast<Eigen::Index>(from.label));
    const double bj = b_(static_cast<Eigen::Index>(to.label));
    const double log_ratio = std::log1p((xt - xf) / xf);
    const double main = std::pow(xf, nu_) * std::expm1(nu_ * log_ratio);
    const double low = std::pow(xf, nu_ - 2);
    const double weight = bj * low * std::expm1((nu_ - 2) * log_ratio) + (bj - bi) * low;
    return main + 0.5 * nu_ * weight;
}

LyapunovBounds lyapunov_bounds(const LyapunovFunction& f, const std::vector<double>& grid) {
    LyapunovBounds out{std::numeric_limits<double>::infinity(), 0.0};
    for (double x : grid) {
        for (Eigen::Index i = 0; i < f.b().size(); ++i) {
            const double r = f({x, static_cast<Label>(i)}) / std::pow(1.0 + x, f.nu());
            out.k1 = std::min(out.k1, r);
            out.k2 = std::max(out.k2, r);
        }
    }
    return out;
}

Eigen::VectorXd lyapunov_drift_terms(const LampertiCoefficients& lc, double nu) {
    return 2.0 * lc.c + (nu - 1.0) * lc.s2;
}

Eigen::VectorXd choose_b(const LampertiCoefficients& lc, double nu, Direction direction) {
    return solve_strict_drift(lc.q_limit, lyapunov_drift_terms(lc, nu), direction);
}

Eigen::VectorXd lyapunov_bracket(const LampertiCoefficients& lc, const LyapunovFunction& f) {
    const Eigen::VectorXd u = lyapunov_drift_terms(lc, f.nu());
    const Eigen::VectorXd& b = f.b();
    if (b.size() != u.size()) throw Error(ErrorKind::InvalidArgument, "weight vector size mismatch");
    // sum_j (b_j - b_i) q_ij = (Q b)_i - b_i for a stochastic Q.
    return u + lc.q_limit * b - b;
}

double expected_f_increment(const ChainModel& model, const LyapunovFunction& f, const State& s) {
    double total = 0.0;
    for (const Atom& a : model.distribution(s))
        total += a.probability * f.difference(s, {s.position + a.jump, a.next_label});
    return total;
}

VerificationReport verify_drift_estimate(const ChainModel& model, const LampertiCoefficients& lc,
                                         const LyapunovFunction& f, const std::vector<double>& grid,
                                         double final_tolerance) {
    VerificationReport rep;
    rep.nu = f.nu();
    const Eigen::VectorXd bracket = lyapunov_bracket(lc, f);
    std::vector<double> xs = grid;
    std::sort(xs.begin(), xs.end());
    if (xs.empty()) throw Error(ErrorKind::InvalidArgument, "verification grid is empty");

    std::ostringstream notes;
    bool all_ok = true;
    std::size_t checked = 0;
    for (Label i = 0; i < model.label_count(); ++i) {
        const double br = bracket(static_cast<Eigen::Index>(i));
        const bool defined = std::abs(br) > 1e-6;
        if (!defined) rep.undefined_lines.push_back(i);
        double previous = std::numeric_limits<double>::infinity();
        bool decreasing = true;
        double last = 0.0;
        for (double x : xs) {
            RatioRow row;
            row.x = x;
            row.label = i;
            row.increment = expected_f_increment(model, f, {x, i});
            row.leading = 0.5 * f.nu() * std::pow(x, f.nu() - 2) * br;
            row.defined = defined;
            if (defined) {
                row.ratio = row.increment / row.leading;
                const double dev = std::abs(row.ratio - 1.0);
                if (!(dev < previous) && dev > kRatioNoise) decreasing = false;
                previous = dev;
                last = dev;
            } else {
                row.ratio = std::numeric_limits<double>::quiet_NaN();
            }
            rep.rows.push_back(row);
        }
        if (!defined) {
            notes << "line " << model.labels()[i] << ": bracket " << br << " too close to 0, ratio undefined; ";
            continue;
        }
        ++checked;
        const bool ok = decreasing && last <= final_tolerance;
        if (!ok)
            notes << "line " << model.labels()[i] << ": " << (decreasing ? "" : "|ratio-1| not decreasing; ")
                  << "final |ratio-1| = " << last << "; ";
        all_ok = all_ok && ok;
    }
    rep.passed = all_ok && checked > 0;
    if (checked == 0) notes << "no line had a usable bracket";
    rep.notes = notes.str();
    return rep;
}

}  // namespace halfstrip
