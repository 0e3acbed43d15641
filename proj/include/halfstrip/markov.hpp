#pragma once

// Linear algebra on the limiting modulating chain: irreducibility, the
// stationary law, the centered Poisson system (Q - I) a = -d, and the
// strict-inequality variant used to tune Lyapunov weights.
//
// Everything here is header-only and templated on the scalar type so the
// same code runs in double and long double.

#include <Eigen/Dense>

#include <algorithm>
#include <cmath>
#include <cstddef>
#include <string>
#include <vector>

#include "halfstrip/error.hpp"

namespace halfstrip {

template <typename Scalar>
using Matrix = Eigen::Matrix<Scalar, Eigen::Dynamic, Eigen::Dynamic>;
template <typename Scalar>
using Vector = Eigen::Matrix<Scalar, Eigen::Dynamic, 1>;

enum class Direction { Negative, Positive };

template <typename Scalar>
struct PoissonSolution {
    Vector<Scalar> values;  // min-normalized, so min(values) == 0
    Scalar residual{0};     // max_i |d_i + sum_j (a_j - a_i) q_ij|
};

/// True iff the support digraph of `q` (edge i -> j when q(i, j) > 0) is strongly connected.
template <typename Derived>
bool is_irreducible(const Eigen::MatrixBase<Derived>& q) {
    const Eigen::Index n = q.rows();
    if (n == 0 || q.cols() != n) return false;
    auto reaches_all = [&](bool transpose) {
        std::vector<char> seen(static_cast<std::size_t>(n), 0);
        std::vector<Eigen::Index> stack{0};
        seen[0] = 1;
        while (!stack.empty()) {
            const Eigen::Index i = stack.back();
            stack.pop_back();
            for (Eigen::Index j = 0; j < n; ++j) {
                const auto w = transpose ? q(j, i) : q(i, j);
                if (w > 0 && !seen[static_cast<std::size_t>(j)]) {
                    seen[static_cast<std::size_t>(j)] = 1;
                    stack.push_back(j);
                }
            }
        }
        return std::all_of(seen.begin(), seen.end(), [](char s) { return s != 0; });
    };
    return reaches_all(false) && reaches_all(true);
}

/// Throws InvalidArgument unless `q` is square, non-negative and row-stochastic within `tol`.
template <typename Derived>
void check_stochastic(const Eigen::MatrixBase<Derived>& q, double tol = 1e-12) {
    using std::abs;
    if (q.rows() == 0 || q.rows() != q.cols())
        throw Error(ErrorKind::InvalidArgument, "transition matrix must be square and non-empty");
    for (Eigen::Index i = 0; i < q.rows(); ++i) {
        for (Eigen::Index j = 0; j < q.cols(); ++j) {
            if (!(q(i, j) >= 0))
                throw Error(ErrorKind::InvalidArgument,
                            "negative or non-finite transition entry at row " + std::to_string(i));
        }
        if (abs(static_cast<double>(q.row(i).sum()) - 1.0) > tol)
            throw Error(ErrorKind::InvalidArgument,
                        "row " + std::to_string(i) + " does not sum to 1");
    }
}

/// Unique stationary law of an irreducible stochastic matrix.
///
/// Solves (Q^T - I) pi = 0 with the last equation replaced by sum(pi) = 1.
template <typename Derived>
Vector<typename Derived::Scalar> stationary_distribution(const Eigen::MatrixBase<Derived>& q) {
    using Scalar = typename Derived::Scalar;
    check_stochastic(q, 1e-9);
    if (!is_irreducible(q))
        throw Error(ErrorKind::Reducible, "stationary distribution requires an irreducible matrix");
    const Eigen::Index n = q.rows();
    Matrix<Scalar> system = q.transpose() - Matrix<Scalar>::Identity(n, n);
    system.row(n - 1).setOnes();
    Vector<Scalar> rhs = Vector<Scalar>::Zero(n);
    rhs(n - 1) = Scalar(1);
    Vector<Scalar> pi = system.fullPivLu().solve(rhs);
    // Irreducibility makes every weight positive; clip rounding noise.
    for (Eigen::Index i = 0; i < n; ++i) pi(i) = std::max(pi(i), Scalar(0));
    return pi / pi.sum();
}

/// Max over rows of |d_i + sum_j (a_j - a_i) q_ij|.
template <typename DerivedQ, typename DerivedA, typename DerivedD>
typename DerivedQ::Scalar poisson_residual(const Eigen::MatrixBase<DerivedQ>& q,
                                           const Eigen::MatrixBase<DerivedA>& a,
                                           const Eigen::MatrixBase<DerivedD>& d) {
    using Scalar = typename DerivedQ::Scalar;
    Scalar worst{0};
    for (Eigen::Index i = 0; i < q.rows(); ++i) {
        Scalar row = d(i);
        for (Eigen::Index j = 0; j < q.cols(); ++j) row += (a(j) - a(i)) * q(i, j);
        worst = std::max(worst, Scalar(std::abs(row)));
    }
    return worst;
}

/// Solves d_i + sum_j (a_j - a_i) q_ij = 0, normalized so that min_i a_i = 0.
///
/// Solvable iff sum_i pi_i d_i = 0; a centering defect above `tol` throws
/// NonCentered. A defect within `tol` is projected out before solving and the
/// reported residual is measured against the caller's `d`.
template <typename DerivedQ, typename DerivedD>
PoissonSolution<typename DerivedQ::Scalar> solve_poisson(const Eigen::MatrixBase<DerivedQ>& q,
                                                         const Eigen::MatrixBase<DerivedD>& d,
                                                         double tol = 1e-9) {
    using Scalar = typename DerivedQ::Scalar;
    const Eigen::Index n = q.rows();
    if (d.size() != n) throw Error(ErrorKind::InvalidArgument, "drift vector size mismatch");
    const Vector<Scalar> pi = stationary_distribution(q);
    const Scalar mean_drift = pi.dot(d.template cast<Scalar>());
    if (std::abs(static_cast<double>(mean_drift)) > tol)
        throw Error(ErrorKind::NonCentered,
                    "sum_i pi_i d_i = " + std::to_string(static_cast<double>(mean_drift)) +
                        " exceeds the centering tolerance");
    const Vector<Scalar> centered = d.template cast<Scalar>() - Vector<Scalar>::Constant(n, mean_drift);

    Matrix<Scalar> system = q - Matrix<Scalar>::Identity(n, n);
    Vector<Scalar> rhs = -centered;
    system.row(n - 1).setZero();
    system(n - 1, n - 1) = Scalar(1);
    rhs(n - 1) = Scalar(0);

    PoissonSolution<Scalar> out;
    out.values = system.fullPivLu().solve(rhs);
    out.values.array() -= out.values.minCoeff();
    out.residual = poisson_residual(q, out.values, d.template cast<Scalar>());
    return out;
}

/// Weights b with u_i + sum_j (b_j - b_i) q_ij strictly negative (or positive) for every i.
///
/// With eps = |sum pi u| the construction shifts u by eps / (|S| pi_i) toward
/// zero mean and solves the resulting Poisson system.
template <typename DerivedQ, typename DerivedU>
Vector<typename DerivedQ::Scalar> solve_strict_drift(const Eigen::MatrixBase<DerivedQ>& q,
                                                     const Eigen::MatrixBase<DerivedU>& u,
                                                     Direction direction) {
    using Scalar = typename DerivedQ::Scalar;
    const Eigen::Index n = q.rows();
    if (u.size() != n) throw Error(ErrorKind::InvalidArgument, "u vector size mismatch");
    const Vector<Scalar> pi = stationary_distribution(q);
    const Scalar mean_u = pi.dot(u.template cast<Scalar>());
    const bool ok = direction == Direction::Negative ? mean_u < 0 : mean_u > 0;
    if (!ok)
        throw Error(ErrorKind::WrongSign, "sum_i pi_i u_i = " + std::to_string(static_cast<double>(mean_u)) +
                                              " has the wrong sign for the requested direction");
    const Scalar eps = std::abs(mean_u);
    const Scalar sign = direction == Direction::Negative ? Scalar(1) : Scalar(-1);
    Vector<Scalar> shifted(n);
    for (Eigen::Index i = 0; i < n; ++i)
        shifted(i) = u(i) + sign * eps / (Scalar(n) * pi(i));
    // The shift is centered by construction; the loose tolerance only absorbs rounding.
    Vector<Scalar> b = solve_poisson(q, shifted, 1e-8 * (1.0 + static_cast<double>(eps))).values;

    for (Eigen::Index i = 0; i < n; ++i) {
        Scalar row = u(i);
        for (Eigen::Index j = 0; j < n; ++j) row += (b(j) - b(i)) * q(i, j);
        const bool strict = direction == Direction::Negative ? row < 0 : row > 0;
        if (!strict)
            throw Error(ErrorKind::WrongSign,
                        "strict drift construction failed at row " + std::to_string(i));
    }
    return b;
}

}  // namespace halfstrip
