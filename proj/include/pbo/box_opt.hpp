#pragma once

#include <Eigen/Dense>
#include <deque>
#include <functional>

#include "pbo/common.hpp"

namespace pbo {

// f(x) with gradient written to *g when g != nullptr
using BoxFn = std::function<double(const Eigen::VectorXd&, Eigen::VectorXd*)>;

struct BoxOptResult {
    Eigen::VectorXd x;
    double value = 0.0;
    int iterations = 0;
};

// Minimizes f over the box [lo, hi] with a projected limited-memory
// quasi-Newton iteration (two-loop recursion, memory `memory`, gradient
// components frozen on the active bounds, backtracking line search along the
// projection arc). Always returns a point in the closed box with value <= f(x0).
inline BoxOptResult minimize_box(const BoxFn& fn, const Eigen::VectorXd& x0,
                                 const Eigen::VectorXd& lo,
                                 const Eigen::VectorXd& hi, int max_iters,
                                 int memory = 10) {
    const Eigen::Index d = x0.size();
    const auto clip = [&](Eigen::VectorXd v) {
        return v.cwiseMax(lo).cwiseMin(hi).eval();
    };

    Eigen::VectorXd x = clip(x0);
    Eigen::VectorXd g(d);
    double f = fn(x, &g);

    struct Pair {
        Eigen::VectorXd s, y;
        double rho;
    };
    std::deque<Pair> hist;
    const Eigen::VectorXd eps = 1e-10 * (hi - lo);

    BoxOptResult res;
    int iter = 0;
    for (; iter < max_iters; ++iter) {
        // freeze coordinates pinned at a bound with the gradient pushing out
        Eigen::VectorXd gm = g;
        for (Eigen::Index i = 0; i < d; ++i)
            if ((x[i] <= lo[i] + eps[i] && g[i] > 0.0) ||
                (x[i] >= hi[i] - eps[i] && g[i] < 0.0))
                gm[i] = 0.0;
        if (gm.lpNorm<Eigen::Infinity>() < 1e-12) break;

        // two-loop recursion on the masked gradient
        Eigen::VectorXd q = gm;
        std::vector<double> alpha(hist.size());
        for (int i = static_cast<int>(hist.size()) - 1; i >= 0; --i) {
            alpha[i] = hist[i].rho * hist[i].s.dot(q);
            q -= alpha[i] * hist[i].y;
        }
        if (!hist.empty()) {
            const auto& last = hist.back();
            q *= last.s.dot(last.y) / last.y.squaredNorm();
        }
        for (std::size_t i = 0; i < hist.size(); ++i) {
            const double beta = hist[i].rho * hist[i].y.dot(q);
            q += (alpha[i] - beta) * hist[i].s;
        }
        Eigen::VectorXd dir = -q;
        for (Eigen::Index i = 0; i < d; ++i)
            if (gm[i] == 0.0) dir[i] = 0.0;
        if (dir.dot(gm) > -1e-14) {
            hist.clear();
            dir = -gm;
        }

        bool accepted = false;
        Eigen::VectorXd xn, gn(d);
        double fnval = f;
        for (int attempt = 0; attempt < 2 && !accepted; ++attempt) {
            double t = 1.0;
            for (int h = 0; h < 40; ++h) {
                xn = clip(x + t * dir);
                if ((xn - x).lpNorm<Eigen::Infinity>() == 0.0) break;
                fnval = fn(xn, &gn);
                if (fnval <= f + 1e-4 * g.dot(xn - x)) {
                    accepted = true;
                    break;
                }
                t *= 0.5;
            }
            if (!accepted && attempt == 0 && !hist.empty()) {
                hist.clear();
                dir = -gm;
            }
        }
        if (!accepted) break;

        Pair pr;
        pr.s = xn - x;
        pr.y = gn - g;
        const double sy = pr.s.dot(pr.y);
        if (sy > 1e-12 * pr.s.norm() * pr.y.norm()) {
            pr.rho = 1.0 / sy;
            hist.push_back(std::move(pr));
            if (static_cast<int>(hist.size()) > memory) hist.pop_front();
        }
        x = xn;
        g = gn;
        f = fnval;
    }

    res.x = x;
    res.value = f;
    res.iterations = iter;
    return res;
}

}  // namespace pbo
