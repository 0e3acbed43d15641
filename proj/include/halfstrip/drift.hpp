#pragma once

#include <Eigen/Dense>

#include <limits>
#include <map>
#include <string>
#include <vector>

#include "halfstrip/model.hpp"

namespace halfstrip {

/// Exact one-step moments of the kernel at a single state (x, i).
struct PointMoments {
    double at_x = 0.0;
    Label label = 0;
    double mu = 0.0;           // E[dX]
    double sigma2 = 0.0;       // E[dX^2]
    Eigen::VectorXd mu_cross;  // E[dX; next label = j]
    Eigen::VectorXd q;         // P(next label = j)
};

PointMoments moment_functionals(const ChainModel& model, double x, Label i);

/// Generalized-Lamperti data of a chain, one entry per label.
///
/// mu_i(x) = d_i + e_i/x + o(1/x), sigma_i^2(x) -> t2_i, mu_ij(x) -> d_cross_ij,
/// q_ij(x) = q_limit_ij + gamma_ij/x + o(1/x).
struct AsymptoticCoefficients {
    std::vector<std::string> labels;
    Eigen::VectorXd d, e, t2;
    Eigen::MatrixXd d_cross, gamma, q_limit;
    Eigen::VectorXd pi;
    std::map<std::string, double> fit_residuals;
    bool fit_warning = false;
    bool refined_rates_hold = false;
    double moment_order = std::numeric_limits<double>::infinity();  // p in the bounded-moment hypothesis

    Eigen::Index size() const noexcept { return d.size(); }
};

/// Fills `pi` from `q_limit` and checks shapes and the row-sum identities
/// sum_j gamma_ij = 0 and sum_j d_cross_ij = d_i (within 1e-8). Throws
/// InvalidCoefficients or Reducible.
void finalize_coefficients(AsymptoticCoefficients& coeffs);

struct FitOptions {
    std::vector<double> grid;             // empty: default_fit_grid()
    double residual_threshold = 1e-6;
};

/// 10^2, 10^2.5, ..., 10^5.
std::vector<double> default_fit_grid();

/// Geometric grid with `points` entries between 10^lo and 10^hi.
std::vector<double> geometric_grid(double lo_exponent, double hi_exponent, int points);

/// Least-squares fits of the exact moment functionals against [1, 1/x].
///
/// Residuals are max_k |fit error at x_k| * x_k per family; a residual above
/// the threshold sets `fit_warning` rather than failing.
AsymptoticCoefficients fit_asymptotics(const ChainModel& model, const FitOptions& options = {});

enum class Regime { ConstantDrift, Lamperti, GeneralizedLamperti };

const char* to_string(Regime r) noexcept;

Regime check_regime(const AsymptoticCoefficients& coeffs, double tol = 1e-9);

}  // namespace halfstrip
