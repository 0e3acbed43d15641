#include "halfstrip/drift.hpp"

#include <algorithm>
#include <cmath>

#include "halfstrip/error.hpp"
#include "halfstrip/markov.hpp"

namespace halfstrip {

PointMoments moment_functionals(const ChainModel& model, double x, Label i) {
    const auto n = static_cast<Eigen::Index>(model.label_count());
    PointMoments pm;
    pm.at_x = x;
    pm.label = i;
    pm.mu_cross = Eigen::VectorXd::Zero(n);
    pm.q = Eigen::VectorXd::Zero(n);
    for (const Atom& a : model.distribution({x, i})) {
        const auto j = static_cast<Eigen::Index>(a.next_label);
        pm.mu += a.probability * a.jump;
        pm.sigma2 += a.probability * a.jump * a.jump;
        pm.mu_cross(j) += a.probability * a.jump;
        pm.q(j) += a.probability;
    }
    return pm;
}

std::vector<double> geometric_grid(double lo_exponent, double hi_exponent, int points) {
    std::vector<double> grid;
    for (int k = 0; k < points; ++k)
        grid.push_back(std::pow(10.0, lo_exponent + (hi_exponent - lo_exponent) * k / (points - 1)));
    return grid;
}

std::vector<double> default_fit_grid() { return geometric_grid(2.0, 5.0, 7); }

const char* to_string(Regime r) noexcept {
    switch (r) {
        case Regime::ConstantDrift: return "ConstantDrift";
        case Regime::Lamperti: return "Lamperti";
        case Regime::GeneralizedLamperti: return "GeneralizedLamperti";
    }
    return "Unknown";
}

void finalize_coefficients(AsymptoticCoefficients& c) {
    const Eigen::Index n = c.d.size();
    if (n == 0) throw Error(ErrorKind::InvalidCoefficients, "empty coefficient set");
    if (c.e.size() != n || c.t2.size() != n || c.d_cross.rows() != n || c.d_cross.cols() != n ||
        c.gamma.rows() != n || c.gamma.cols() != n || c.q_limit.rows() != n || c.q_limit.cols() != n)
        throw Error(ErrorKind::InvalidCoefficients, "coefficient shapes disagree");
    if (c.labels.empty())
        for (Eigen::Index i = 0; i < n; ++i) c.labels.push_back(std::to_string(i));
    if (static_cast<Eigen::Index>(c.labels.size()) != n)
        throw Error(ErrorKind::InvalidCoefficients, "one label per coefficient row required");
    if (!c.d.allFinite() || !c.e.allFinite() || !c.t2.allFinite() || !c.d_cross.allFinite() ||
        !c.gamma.allFinite() || !c.q_limit.allFinite())
        throw Error(ErrorKind::InvalidCoefficients, "coefficients must be finite");
    if ((c.t2.array() < 0).any()) throw Error(ErrorKind::InvalidCoefficients, "t2 must be non-negative");
    if (!(c.t2.array() > 0).any())
        throw Error(ErrorKind::InvalidCoefficients, "at least one t2 must be positive");
    for (Eigen::Index i = 0; i < n; ++i) {
        if (std::abs(c.gamma.row(i).sum()) > 1e-8)
            throw Error(ErrorKind::InvalidCoefficients, "gamma row " + std::to_string(i) + " must sum to 0");
        if (std::abs(c.d_cross.row(i).sum() - c.d(i)) > 1e-8)
            throw Error(ErrorKind::InvalidCoefficients,
                        "d_cross row " + std::to_string(i) + " must sum to d_i");
    }
    try {
        check_stochastic(c.q_limit, 1e-9);
    } catch (const Error& e) {
        throw Error(ErrorKind::InvalidCoefficients, e.what());
    }
    c.pi = stationary_distribution(c.q_limit);
}

namespace {

struct LineFit {
    double intercept = 0.0;
    double slope = 0.0;
    double residual = 0.0;  // max |error| * x
};

class InverseFit {
public:
    explicit InverseFit(const std::vector<double>& grid) : grid_(grid) {
        Eigen::MatrixXd design(static_cast<Eigen::Index>(grid.size()), 2);
        for (std::size_t k = 0; k < grid.size(); ++k) {
            design(static_cast<Eigen::Index>(k), 0) = 1.0;
            design(static_cast<Eigen::Index>(k), 1) = 1.0 / grid[k];
        }
        design_ = design;
        qr_ = design.colPivHouseholderQr();
    }

    LineFit operator()(const Eigen::VectorXd& y) const {
        const Eigen::Vector2d beta = qr_.solve(y);
        LineFit f{beta(0), beta(1), 0.0};
        const Eigen::VectorXd err = y - design_ * beta;
        for (std::size_t k = 0; k < grid_.size(); ++k)
            f.residual = std::max(f.residual, std::abs(err(static_cast<Eigen::Index>(k))) * grid_[k]);
        return f;
    }

private:
    std::vector<double> grid_;
    Eigen::MatrixXd design_;
    Eigen::ColPivHouseholderQR<Eigen::MatrixXd> qr_;
};

}  // namespace

AsymptoticCoefficients fit_asymptotics(const ChainModel& model, const FitOptions& options) {
    const std::vector<double> grid = options.grid.empty() ? default_fit_grid() : options.grid;
    if (grid.size() < 4) throw Error(ErrorKind::InvalidArgument, "fit grid needs at least 4 points");
    const auto [lo, hi] = std::minmax_element(grid.begin(), grid.end());
    if (!(*lo > 0) || *hi / *lo < 100.0 * (1 - 1e-12))
        throw Error(ErrorKind::InvalidArgument, "fit grid must be positive and span at least two decades");

    const auto n = static_cast<Eigen::Index>(model.label_count());
    const auto m = static_cast<Eigen::Index>(grid.size());
    const InverseFit fit(grid);

    AsymptoticCoefficients c;
    c.labels = model.labels();
    c.d.resize(n);
    c.e.resize(n);
    c.t2.resize(n);
    c.d_cross.resize(n, n);
    c.gamma.resize(n, n);
    c.q_limit.resize(n, n);
    double res_mu = 0, res_sigma = 0, res_cross = 0, res_q = 0;

    for (Eigen::Index i = 0; i < n; ++i) {
        Eigen::VectorXd mu(m), sigma2(m);
        Eigen::MatrixXd cross(m, n), q(m, n);
        for (Eigen::Index k = 0; k < m; ++k) {
            const PointMoments pm = moment_functionals(model, grid[static_cast<std::size_t>(k)], static_cast<Label>(i));
            mu(k) = pm.mu;
            sigma2(k) = pm.sigma2;
            cross.row(k) = pm.mu_cross.transpose();
            q.row(k) = pm.q.transpose();
        }
        const LineFit fmu = fit(mu);
        c.d(i) = fmu.intercept;
        c.e(i) = fmu.slope;
        res_mu = std::max(res_mu, fmu.residual);
        const LineFit fs = fit(sigma2);
        c.t2(i) = fs.intercept;
        res_sigma = std::max(res_sigma, fs.residual);
        for (Eigen::Index j = 0; j < n; ++j) {
            const LineFit fc = fit(cross.col(j));
            c.d_cross(i, j) = fc.intercept;
            res_cross = std::max(res_cross, fc.residual);
            const LineFit fq = fit(q.col(j));
            c.q_limit(i, j) = fq.intercept;
            c.gamma(i, j) = fq.slope;
            res_q = std::max(res_q, fq.residual);
        }
        // Rounding-level cleanup so the limit is an exact stochastic matrix.
        for (Eigen::Index j = 0; j < n; ++j)
            if (std::abs(c.q_limit(i, j)) < 1e-13) c.q_limit(i, j) = 0.0;
        c.q_limit.row(i) /= c.q_limit.row(i).sum();
    }

    c.fit_residuals = {{"mu", res_mu}, {"sigma2", res_sigma}, {"mu_cross", res_cross}, {"q", res_q}};
    c.fit_warning = std::max({res_mu, res_sigma, res_cross, res_q}) > options.residual_threshold;
    finalize_coefficients(c);
    return c;
}

Regime check_regime(const AsymptoticCoefficients& coeffs, double tol) {
    if (std::abs(coeffs.pi.dot(coeffs.d)) > tol) return Regime::ConstantDrift;
    if ((coeffs.d.array().abs() <= tol).all()) return Regime::Lamperti;
    return Regime::GeneralizedLamperti;
}

}  // namespace halfstrip
