#pragma once

#include <Eigen/Dense>
#include <algorithm>
#include <cmath>
#include <cassert>
#include <limits>
#include <vector>

#include "pbo/common.hpp"

namespace pbo {

struct ClusteringResult {
    Eigen::MatrixXd centers;      // k x d
    std::vector<int> assignments; // nearest center per sample
    double inertia = 0.0;         // sum of squared distances
};

namespace detail {

inline double sq_dist(const Eigen::VectorXd& a, const Eigen::VectorXd& b) {
    return (a - b).squaredNorm();
}

// greedy k-means++: each new center is the best of a few D^2-weighted draws
inline Eigen::MatrixXd kmeanspp_seed(const Eigen::MatrixXd& S, int k, Rng& rng) {
    const int m = static_cast<int>(S.rows());
    const int trials = 2 + static_cast<int>(std::log(static_cast<double>(k)));
    Eigen::MatrixXd centers(k, S.cols());
    centers.row(0) = S.row(static_cast<int>(rng.index(m)));
    Eigen::VectorXd d2(m);
    for (int i = 0; i < m; ++i)
        d2[i] = sq_dist(S.row(i), centers.row(0));
    for (int c = 1; c < k; ++c) {
        const double total = d2.sum();
        int best_idx = -1;
        double best_pot = std::numeric_limits<double>::infinity();
        Eigen::VectorXd best_d2;
        for (int t = 0; t < trials; ++t) {
            int pick = m - 1;
            if (total > 0.0) {
                const double r = rng.u01() * total;
                double acc = 0.0;
                for (int i = 0; i < m; ++i) {
                    acc += d2[i];
                    if (acc >= r) { pick = i; break; }
                }
            } else {
                pick = static_cast<int>(rng.index(m));
            }
            Eigen::VectorXd nd2 = d2;
            for (int i = 0; i < m; ++i)
                nd2[i] = std::min(nd2[i], sq_dist(S.row(i), S.row(pick)));
            const double pot = nd2.sum();
            if (pot < best_pot) {
                best_pot = pot;
                best_idx = pick;
                best_d2 = std::move(nd2);
            }
        }
        centers.row(c) = S.row(best_idx);
        d2 = best_d2;
    }
    return centers;
}

inline double lloyd(const Eigen::MatrixXd& S, Eigen::MatrixXd& centers,
                    std::vector<int>& assign, int max_iters, double tol) {
    const int m = static_cast<int>(S.rows());
    const int k = static_cast<int>(centers.rows());
    assign.assign(m, 0);
    double prev_inertia = std::numeric_limits<double>::infinity();
    for (int it = 0; it < max_iters; ++it) {
        double inertia = 0.0;
        for (int i = 0; i < m; ++i) {
            int best = 0;
            double bd = sq_dist(S.row(i), centers.row(0));
            for (int c = 1; c < k; ++c) {
                const double d = sq_dist(S.row(i), centers.row(c));
                if (d < bd) { bd = d; best = c; }
            }
            assign[i] = best;
            inertia += bd;
        }
        assert(inertia <= prev_inertia + 1e-9 * (1.0 + prev_inertia));
        prev_inertia = inertia;

        std::vector<int> counts(k, 0);
        bool repaired = false;
        for (int i = 0; i < m; ++i) ++counts[assign[i]];
        for (int c = 0; c < k; ++c) {
            if (counts[c] > 0) continue;
            repaired = true;
            // steal the farthest member of the largest cluster
            int big = 0;
            for (int cc = 1; cc < k; ++cc)
                if (counts[cc] > counts[big]) big = cc;
            int far_i = -1;
            double far_d = -1.0;
            for (int i = 0; i < m; ++i)
                if (assign[i] == big) {
                    const double d = sq_dist(S.row(i), centers.row(big));
                    if (d > far_d) { far_d = d; far_i = i; }
                }
            assign[far_i] = c;
            --counts[big];
            ++counts[c];
        }

        // a repair forces a non-nearest assignment, so the descent restarts
        if (repaired) prev_inertia = std::numeric_limits<double>::infinity();

        Eigen::MatrixXd next = Eigen::MatrixXd::Zero(k, S.cols());
        for (int i = 0; i < m; ++i) next.row(assign[i]) += S.row(i);
        for (int c = 0; c < k; ++c) next.row(c) /= static_cast<double>(counts[c]);
        const double moved = (next - centers).rowwise().norm().maxCoeff();
        centers = next;
        if (moved < tol) break;
    }
    // final nearest-center assignment and the matching inertia
    double inertia = 0.0;
    for (int i = 0; i < m; ++i) {
        int best = 0;
        double bd = sq_dist(S.row(i), centers.row(0));
        for (int c = 1; c < k; ++c) {
            const double d = sq_dist(S.row(i), centers.row(c));
            if (d < bd) { bd = d; best = c; }
        }
        assign[i] = best;
        inertia += bd;
    }
    return inertia;
}

}  // namespace detail

// Lloyd iterations from greedy k-means++ seeding, 10 restarts, 300 iterations
// or center movement below 1e-9; the best-inertia restart wins.
inline ClusteringResult kmeans(const std::vector<Eigen::VectorXd>& samples,
                               int k, std::uint64_t seed) {
    if (k < 1) throw InputError("kmeans: k must be >= 1");
    if (static_cast<int>(samples.size()) < k)
        throw InputError("kmeans: fewer samples than clusters");
    const int m = static_cast<int>(samples.size());
    const int d = static_cast<int>(samples.front().size());
    Eigen::MatrixXd S(m, d);
    for (int i = 0; i < m; ++i) S.row(i) = samples[i];

    Rng rng(mix_seed(seed, 0x6b6d6e73ULL));
    ClusteringResult best;
    best.inertia = std::numeric_limits<double>::infinity();
    for (int restart = 0; restart < 10; ++restart) {
        Eigen::MatrixXd centers = detail::kmeanspp_seed(S, k, rng);
        std::vector<int> assign;
        const double inertia = detail::lloyd(S, centers, assign, 300, 1e-9);
        if (inertia < best.inertia) {
            best.inertia = inertia;
            best.centers = centers;
            best.assignments = assign;
        }
    }
    return best;
}

}  // namespace pbo
