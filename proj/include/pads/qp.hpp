#pragma once

// Small dense box-constrained least squares:
//
//   minimize ||A x - y||^2   subject to   lo <= C x <= hi
//
// A is reduced by QR to a least-distance problem in z = R x, which is solved
// with a dual active-set method (Goldfarb-Idnani with identity Hessian). The
// dual method starts from the unconstrained optimum, needs no feasible start
// and reports infeasibility as the constraint it could not add.

#include "pads/errors.hpp"

#include <Eigen/Dense>

#include <cmath>
#include <limits>
#include <optional>
#include <variant>
#include <string>
#include <vector>

namespace pads::qp {

struct BoxLsqResult {
    Eigen::VectorXd x;
    std::vector<int> active; ///< indices into the constraint rows that ended active
    int iterations = 0;
};

/// Returned instead of a solution when the boxes have no common point.
struct Infeasible {
    int constraint = -1; ///< row of C (0-based) that could not be satisfied
};

namespace detail {

/// min 1/2 ||z - c||^2  s.t.  G z >= b, rows of G unit length.
/// Returns nullopt on success (z filled), otherwise the blocking row.
inline std::optional<int> least_distance(const Eigen::MatrixXd& G, const Eigen::VectorXd& b, const Eigen::VectorXd& c,
                                         Eigen::VectorXd& z, std::vector<int>& active, int& iterations) {
    const int m = static_cast<int>(G.rows());
    const int p = static_cast<int>(G.cols());
    z = c;
    active.clear();
    std::vector<double> u;
    std::vector<char> is_active(static_cast<std::size_t>(m), 0);
    const double inf = std::numeric_limits<double>::infinity();
    iterations = 0;
    const int max_iter = 100 * (m + p + 1);

    auto violation_tol = [&](int i) { return 1e-12 * (1.0 + std::abs(b(i)) + z.lpNorm<Eigen::Infinity>()); };

    while (iterations++ < max_iter) {
        int q = -1;
        double worst = 0.0;
        for (int i = 0; i < m; ++i) {
            if (is_active[static_cast<std::size_t>(i)]) continue;
            const double s = G.row(i).dot(z) - b(i);
            if (s < -violation_tol(i) && s < worst) {
                worst = s;
                q = i;
            }
        }
        if (q < 0) return std::nullopt;

        const Eigen::VectorXd nq = G.row(q).transpose();
        double uq = 0.0;
        for (;;) {
            if (iterations++ > max_iter) return q;
            Eigen::VectorXd d = nq;
            Eigen::VectorXd r;
            const int na = static_cast<int>(active.size());
            if (na > 0) {
                Eigen::MatrixXd N(p, na);
                for (int j = 0; j < na; ++j) N.col(j) = G.row(active[static_cast<std::size_t>(j)]).transpose();
                r = (N.transpose() * N).ldlt().solve(N.transpose() * nq);
                d = nq - N * r;
            }
            const double sq = nq.dot(z) - b(q);
            const double nd = nq.dot(d);
            const double t2 = (d.norm() > 1e-11) ? -sq / nd : inf;
            double t1 = inf;
            int k = -1;
            for (int j = 0; j < na; ++j) {
                if (r(j) > 1e-12) {
                    const double ratio = u[static_cast<std::size_t>(j)] / r(j);
                    if (ratio < t1) {
                        t1 = ratio;
                        k = j;
                    }
                }
            }
            const double t = std::min(t1, t2);
            if (!std::isfinite(t)) return q;

            if (!std::isfinite(t2)) {
                for (int j = 0; j < na; ++j) u[static_cast<std::size_t>(j)] -= t * r(j);
                uq += t;
                is_active[static_cast<std::size_t>(active[static_cast<std::size_t>(k)])] = 0;
                active.erase(active.begin() + k);
                u.erase(u.begin() + k);
                continue;
            }
            z += t * d;
            for (int j = 0; j < na; ++j) u[static_cast<std::size_t>(j)] -= t * r(j);
            uq += t;
            if (t2 <= t1) {
                active.push_back(q);
                u.push_back(uq);
                is_active[static_cast<std::size_t>(q)] = 1;
                break;
            }
            is_active[static_cast<std::size_t>(active[static_cast<std::size_t>(k)])] = 0;
            active.erase(active.begin() + k);
            u.erase(u.begin() + k);
        }
    }
    fail(ErrorCode::numerical, "active-set iteration limit reached");
}

} // namespace detail

/// Solves the box-constrained least-squares problem. Throws `degenerate` when
/// A has deficient column rank and returns `Infeasible` when no x satisfies
/// the boxes.
inline std::variant<BoxLsqResult, Infeasible> solve_box_lsq(const Eigen::MatrixXd& A, const Eigen::VectorXd& y,
                                                            const Eigen::MatrixXd& C, const Eigen::VectorXd& lo,
                                                            const Eigen::VectorXd& hi) {
    const Eigen::Index p = A.cols();
    if (A.rows() < p) fail(ErrorCode::degenerate, "fewer rows than unknowns in least-squares basis");

    Eigen::HouseholderQR<Eigen::MatrixXd> qr(A);
    const Eigen::MatrixXd R = qr.matrixQR().topRows(p).triangularView<Eigen::Upper>();
    const double rmax = R.diagonal().cwiseAbs().maxCoeff();
    for (Eigen::Index i = 0; i < p; ++i) {
        if (!(std::abs(R(i, i)) > 1e-13 * rmax) || rmax == 0.0) {
            fail(ErrorCode::degenerate, "rank-deficient regression basis");
        }
    }
    const Eigen::VectorXd qty = (qr.householderQ().transpose() * y).head(p);

    // Constraint rows mapped into z = R x and normalised; each box gives two rows.
    const Eigen::Index nc = C.rows();
    Eigen::MatrixXd G(2 * nc, p);
    Eigen::VectorXd b(2 * nc);
    for (Eigen::Index i = 0; i < nc; ++i) {
        Eigen::RowVectorXd g = R.transpose().triangularView<Eigen::Lower>().solve(C.row(i).transpose()).transpose();
        const double norm = g.norm();
        if (norm == 0.0) fail(ErrorCode::degenerate, "zero constraint row");
        G.row(2 * i) = g / norm;
        b(2 * i) = lo(i) / norm;
        G.row(2 * i + 1) = -g / norm;
        b(2 * i + 1) = -hi(i) / norm;
    }

    Eigen::VectorXd z;
    std::vector<int> active;
    int iterations = 0;
    if (auto bad = detail::least_distance(G, b, qty, z, active, iterations)) return Infeasible{*bad / 2};

    BoxLsqResult out;
    out.x = R.triangularView<Eigen::Upper>().solve(z);
    out.iterations = iterations;
    for (int a : active) out.active.push_back(a / 2);
    return out;
}

} // namespace pads::qp
