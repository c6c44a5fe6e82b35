#pragma once

#include <Eigen/Dense>
#include <limits>
#include <vector>

#include "pbo/common.hpp"

// Dense two-phase tableau simplex for small LPs:
//
//     min c'z   s.t.  A z <= b,  z >= 0.
//
// Bland's rule for both the entering and leaving choices, so the iteration
// cannot cycle. Problem sizes here are a few hundred variables at most.

namespace pbo {

struct LpResult {
    enum class Status { Optimal, Infeasible, Unbounded };
    Status status = Status::Optimal;
    Eigen::VectorXd z;
    double objective = 0.0;
};

namespace detail {

// One simplex phase on tableau T (m+1 rows; last row = reduced costs, last
// column = rhs). basis[i] is the column basic in row i. ncols_active limits
// candidate entering columns. Returns false on unboundedness.
inline bool simplex_iterate(Eigen::MatrixXd& T, std::vector<int>& basis,
                            int ncols_active) {
    const int m = static_cast<int>(T.rows()) - 1;
    const int rhs = static_cast<int>(T.cols()) - 1;
    const double eps = 1e-9;
    while (true) {
        int enter = -1;
        for (int j = 0; j < ncols_active; ++j)
            if (T(m, j) < -eps) { enter = j; break; }  // Bland: lowest index
        if (enter < 0) return true;
        int leave = -1;
        double best_ratio = std::numeric_limits<double>::infinity();
        for (int i = 0; i < m; ++i) {
            if (T(i, enter) <= eps) continue;
            const double ratio = T(i, rhs) / T(i, enter);
            if (ratio < best_ratio - 1e-12 ||
                (ratio < best_ratio + 1e-12 &&
                 (leave < 0 || basis[i] < basis[leave]))) {
                best_ratio = ratio;
                leave = i;
            }
        }
        if (leave < 0) return false;
        const double piv = T(leave, enter);
        T.row(leave) /= piv;
        for (int i = 0; i <= m; ++i) {
            if (i == leave) continue;
            const double f = T(i, enter);
            if (f != 0.0) T.row(i) -= f * T.row(leave);
        }
        basis[leave] = enter;
    }
}

}  // namespace detail

inline LpResult solve_lp(const Eigen::MatrixXd& A, const Eigen::VectorXd& b,
                         const Eigen::VectorXd& c) {
    const int m = static_cast<int>(A.rows());
    const int n = static_cast<int>(A.cols());
    if (b.size() != m || c.size() != n)
        throw InputError("solve_lp: inconsistent dimensions");

    // columns: n structural | m slacks | up to m artificials | rhs
    int n_art = 0;
    for (int i = 0; i < m; ++i)
        if (b[i] < 0.0) ++n_art;
    const int cols = n + m + n_art + 1;
    Eigen::MatrixXd T = Eigen::MatrixXd::Zero(m + 1, cols);
    std::vector<int> basis(m, -1);

    int art = 0;
    for (int i = 0; i < m; ++i) {
        const double sign = b[i] < 0.0 ? -1.0 : 1.0;
        T.block(i, 0, 1, n) = sign * A.row(i);
        T(i, n + i) = sign;  // slack
        T(i, cols - 1) = sign * b[i];
        if (b[i] < 0.0) {
            T(i, n + m + art) = 1.0;
            basis[i] = n + m + art;
            ++art;
        } else {
            basis[i] = n + i;
        }
    }

    LpResult res;
    if (n_art > 0) {
        // phase 1: minimize the artificial sum
        for (int j = n + m; j < cols - 1; ++j) T(m, j) = 1.0;
        for (int i = 0; i < m; ++i)
            if (basis[i] >= n + m) T.row(m) -= T.row(i);
        if (!detail::simplex_iterate(T, basis, cols - 1))
            throw NumericError("solve_lp: phase-1 unbounded");
        if (T(m, cols - 1) < -1e-7) {
            res.status = LpResult::Status::Infeasible;
            return res;
        }
        // pivot any artificial still basic (at zero) out on a structural or
        // slack column; an all-zero row is redundant and harmless
        for (int i = 0; i < m; ++i) {
            if (basis[i] < n + m) continue;
            for (int j = 0; j < n + m; ++j) {
                if (std::abs(T(i, j)) > 1e-9) {
                    const double piv = T(i, j);
                    T.row(i) /= piv;
                    for (int r = 0; r <= m; ++r) {
                        if (r == i) continue;
                        const double f = T(r, j);
                        if (f != 0.0) T.row(r) -= f * T.row(i);
                    }
                    basis[i] = j;
                    break;
                }
            }
        }
    }

    // phase 2: rebuild the cost row for the original objective
    T.row(m).setZero();
    T.block(m, 0, 1, n) = c.transpose();
    for (int i = 0; i < m; ++i)
        if (basis[i] < n + m) T.row(m) -= T(m, basis[i]) * T.row(i);
    if (!detail::simplex_iterate(T, basis, n + m)) {
        res.status = LpResult::Status::Unbounded;
        return res;
    }

    res.z = Eigen::VectorXd::Zero(n);
    for (int i = 0; i < m; ++i)
        if (basis[i] < n) res.z[basis[i]] = T(i, cols - 1);
    res.objective = c.dot(res.z);
    res.status = LpResult::Status::Optimal;
    return res;
}

}  // namespace pbo
