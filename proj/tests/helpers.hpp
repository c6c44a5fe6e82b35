#pragma once

#include <Eigen/Dense>
#include <functional>
#include <vector>

#include "pbo/domain.hpp"
#include "pbo/gp.hpp"

// Test-only oracles, kept independent of the library code paths they check.

namespace testutil {

// Posterior mean/variance via an explicit dense inverse of the jittered
// kernel matrix; mirrors the textbook formulas, not the library solve.
struct DenseGpOracle {
    Eigen::MatrixXd Kinv;
    Eigen::MatrixXd X;
    Eigen::VectorXd y;
    pbo::KernelParams params;

    DenseGpOracle(const pbo::TrainedGP& gp) {
        X = gp.train_inputs_scaled();
        y = gp.train_targets_scaled();
        params = gp.params();
        const Eigen::Index k = X.rows();
        Eigen::MatrixXd K(k, k);
        for (Eigen::Index a = 0; a < k; ++a)
            for (Eigen::Index b = 0; b < k; ++b)
                K(a, b) = pbo::matern_kernel(X.row(a), X.row(b), params);
        K.diagonal().array() += gp.jitter();
        Kinv = K.inverse();
    }

    double mean(const Eigen::VectorXd& xs) const {
        const Eigen::Index k = X.rows();
        Eigen::VectorXd kv(k);
        for (Eigen::Index i = 0; i < k; ++i)
            kv[i] = pbo::matern_kernel(xs, X.row(i), params);
        const Eigen::VectorXd resid = y.array() - params.constant_mean;
        return params.constant_mean + kv.dot(Kinv * resid);
    }

    double variance(const Eigen::VectorXd& xs) const {
        const Eigen::Index k = X.rows();
        Eigen::VectorXd kv(k);
        for (Eigen::Index i = 0; i < k; ++i)
            kv[i] = pbo::matern_kernel(xs, X.row(i), params);
        return pbo::matern_kernel(xs, xs, params) - kv.dot(Kinv * kv);
    }
};

inline Eigen::VectorXd central_diff(
    const std::function<double(const Eigen::VectorXd&)>& f,
    const Eigen::VectorXd& x, double h = 1e-5) {
    Eigen::VectorXd g(x.size());
    for (Eigen::Index i = 0; i < x.size(); ++i) {
        Eigen::VectorXd xp = x, xm = x;
        xp[i] += h;
        xm[i] -= h;
        g[i] = (f(xp) - f(xm)) / (2.0 * h);
    }
    return g;
}

inline double rel_err(const Eigen::VectorXd& got, const Eigen::VectorXd& want) {
    return (got - want).norm() / std::max(want.norm(), 1e-6);
}

// 2-D hypervolume of the non-dominated subset w.r.t. a reference point
// (minimization; points must dominate ref to contribute)
inline double hypervolume2d(std::vector<std::array<double, 2>> pts,
                            const std::array<double, 2>& ref) {
    std::vector<std::array<double, 2>> keep;
    for (const auto& p : pts)
        if (p[0] < ref[0] && p[1] < ref[1]) keep.push_back(p);
    std::sort(keep.begin(), keep.end());
    double hv = 0.0;
    double best_f2 = ref[1];
    for (const auto& p : keep) {
        if (p[1] < best_f2) {
            hv += (ref[0] - p[0]) * (best_f2 - p[1]);
            best_f2 = p[1];
        }
    }
    return hv;
}

}  // namespace testutil
