#pragma once

#include <Eigen/Dense>
#include <algorithm>
#include <cmath>
#include <vector>

#include "pbo/common.hpp"
#include "pbo/domain.hpp"
#include "pbo/lp.hpp"
#include "pbo/moo.hpp"

// Memetic layer on top of the NSGA-II machinery: steepest partial descent
// directions (an exact LP over the unit-infinity ball intersected with the
// feasible cone), an Armijo line search over objective subsets, and the
// population drivers. Every n_opt generations the highest-ranked points are
// refined with descent steps, which is what separates the memetic driver from
// the plain genetic one.

namespace pbo::moo {

struct DirectionResult {
    Eigen::VectorXd d;    // ||d||_inf <= 1, feasible at the active bounds
    double theta = 0.0;   // max_{j in I} grad_j . d at the optimum; always <= 0
};

struct DescentParams {
    double stationarity_tol = 1e-6;  // gate for attempting a descent step
    double armijo_gamma = 1e-4;
    double armijo_decay = 0.5;
    int armijo_max_halvings = 30;
    int max_refine_seeds = 10;
    double active_bound_tol = 1e-9;  // relative to the coordinate range
};

// theta^I(x) = min_{d in D(x), ||d||_inf <= 1} max_{j in I} grad_j . d,
// solved exactly: variables (shifted d, split beta), constraints
// grad_j . d <= beta plus the per-coordinate sign boxes.
inline DirectionResult partial_descent_direction(
    const std::vector<Eigen::VectorXd>& grads, const Eigen::VectorXd& x,
    const BoxDomain& domain, double active_tol = 1e-9) {
    const int m = static_cast<int>(grads.size());
    const int n = domain.dim();
    if (m < 1 || m > 2) throw InputError("partial_descent_direction: |I| in {1,2}");

    // d_i in [lo_i, hi_i]: a coordinate at its lower bound may not decrease,
    // one at its upper bound may not increase
    Eigen::VectorXd lo(n), hi(n);
    for (int i = 0; i < n; ++i) {
        const double tol = active_tol * (domain.upper()[i] - domain.lower()[i]);
        lo[i] = (x[i] - domain.lower()[i] <= tol) ? 0.0 : -1.0;
        hi[i] = (domain.upper()[i] - x[i] <= tol) ? 0.0 : 1.0;
    }

    // structural variables z = (s_1..s_n, bp, bm); d = lo + s, beta = bp - bm
    const int nv = n + 2;
    const int rows = m + n;
    Eigen::MatrixXd A = Eigen::MatrixXd::Zero(rows, nv);
    Eigen::VectorXd b(rows);
    for (int j = 0; j < m; ++j) {
        A.block(j, 0, 1, n) = grads[j].transpose();
        A(j, n) = -1.0;
        A(j, n + 1) = 1.0;
        b[j] = -grads[j].dot(lo);
    }
    for (int i = 0; i < n; ++i) {
        A(m + i, i) = 1.0;
        b[m + i] = hi[i] - lo[i];
    }
    Eigen::VectorXd c = Eigen::VectorXd::Zero(nv);
    c[n] = 1.0;
    c[n + 1] = -1.0;

    const LpResult lp = solve_lp(A, b, c);
    if (lp.status != LpResult::Status::Optimal)
        throw NumericError("partial_descent_direction: LP did not solve");

    DirectionResult out;
    out.d = lo + lp.z.head(n);
    double theta = grads[0].dot(out.d);
    for (int j = 1; j < m; ++j) theta = std::max(theta, grads[j].dot(out.d));
    out.theta = std::min(theta, 0.0);  // d = 0 is feasible, so 0 bounds above
    return out;
}

// Largest t = delta^h with x + t d in the box and sufficient decrease on
// every objective in I; (0, x) when no halving succeeds.
inline std::pair<double, Eigen::VectorXd> armijo_line_search(
    const BiObjective& obj, const Eigen::VectorXd& x, const Eigen::VectorXd& d,
    double theta, const std::vector<int>& subset,
    const DescentParams& params = {}) {
    if (!(theta < 0.0))
        throw InputError("armijo_line_search: needs a descent direction");
    const ObjectivePair f0 = obj.evaluate(x);
    double t = 1.0;
    for (int h = 0; h <= params.armijo_max_halvings; ++h) {
        const Eigen::VectorXd xt = x + t * d;
        if (obj.domain.contains(xt, 1e-12)) {
            const ObjectivePair ft = obj.evaluate(obj.domain.clip(xt));
            bool ok = true;
            for (int j : subset)
                if (ft[j] > f0[j] + params.armijo_gamma * t * theta) {
                    ok = false;
                    break;
                }
            if (ok) return {t, obj.domain.clip(xt)};
        }
        t *= params.armijo_decay;
    }
    return {0.0, x};
}

inline bool is_pareto_stationary(const BiObjective& obj, const Eigen::VectorXd& x,
                                 double tol) {
    const auto g = obj.gradients(x);
    const DirectionResult dir =
        partial_descent_direction({g[0], g[1]}, x, obj.domain);
    return dir.theta >= -tol;
}

// Refines selected members with partial descent steps: seeds are the rank-0
// members (by descending crowding) topped up with the highest-crowding rest,
// capped at max_refine_seeds. Each seed tries I = {1,2}, {1}, {2}; accepted
// Armijo points are appended, originals kept.
inline Population optimize_population(const BiObjective& obj, Population pop,
                                      const DescentParams& params = {}) {
    rank_and_crowd(pop);
    std::vector<int> order(pop.size());
    std::iota(order.begin(), order.end(), 0);
    std::stable_sort(order.begin(), order.end(), [&](int a, int b) {
        const bool a0 = pop[a].rank == 0, b0 = pop[b].rank == 0;
        if (a0 != b0) return a0;
        return pop[a].crowding > pop[b].crowding;
    });
    const int n_seeds =
        std::min<int>(params.max_refine_seeds, static_cast<int>(order.size()));

    static const std::vector<std::vector<int>> subsets = {{0, 1}, {0}, {1}};
    Population appended;
    for (int s = 0; s < n_seeds; ++s) {
        const Eigen::VectorXd& x = pop[order[s]].x;
        const auto g = obj.gradients(x);
        for (const auto& subset : subsets) {
            std::vector<Eigen::VectorXd> grads;
            for (int j : subset) grads.push_back(g[j]);
            const DirectionResult dir =
                partial_descent_direction(grads, x, obj.domain,
                                          params.active_bound_tol);
            if (dir.theta >= -params.stationarity_tol) continue;
            const auto [step, xn] =
                armijo_line_search(obj, x, dir.d, dir.theta, subset, params);
            if (step > 0.0) {
                Individual ind;
                ind.x = xn;
                ind.f = obj.evaluate(xn);
                appended.push_back(std::move(ind));
            }
        }
    }
    pop.insert(pop.end(), appended.begin(), appended.end());
    return pop;
}

struct MooRunParams {
    int population = 100;  // N
    int iterations = 20;
    int n_opt = 5;         // descent cadence (memetic driver only)
    GeneticParams genetic;
    DescentParams descent;
};

namespace detail {

inline Population run_driver(const BiObjective& obj,
                             const std::vector<Eigen::VectorXd>& init,
                             const MooRunParams& params, std::uint64_t seed,
                             bool memetic, EventLog* log) {
    if (init.empty()) throw InputError("moo run: empty initial set");
    Rng rng(mix_seed(seed, memetic ? 0x6e736d61ULL : 0x6e736732ULL));

    Population pop;
    pop.reserve(init.size());
    for (const auto& x : init) {
        if (!obj.domain.contains(x, 1e-12))
            throw InputError("moo run: initial point outside the box");
        Individual ind;
        ind.x = obj.domain.clip(x);
        ind.f = obj.evaluate(ind.x);
        pop.push_back(std::move(ind));
    }
    // pad undersized initial sets with uniform points so selection sees N
    if (static_cast<int>(pop.size()) < params.population) {
        log_event(log, "moo run: padded initial set from " +
                           std::to_string(pop.size()) + " to N=" +
                           std::to_string(params.population));
        while (static_cast<int>(pop.size()) < params.population) {
            Individual ind;
            ind.x = sample_uniform_one(obj.domain, rng);
            ind.f = obj.evaluate(ind.x);
            pop.push_back(std::move(ind));
        }
    }
    pop = selection(std::move(pop), params.population, log);

    for (int t = 0; t < params.iterations; ++t) {
        const auto parents = get_parents(pop, rng);
        auto offspring = crossover(parents, pop, obj.domain, rng, params.genetic);
        mutation(offspring, obj.domain, rng, params.genetic);
        Population merged = pop;
        for (auto& x : offspring) {
            Individual ind;
            ind.x = std::move(x);
            ind.f = obj.evaluate(ind.x);
            merged.push_back(std::move(ind));
        }
        pop = selection(std::move(merged), params.population, log);
        if (memetic && t % params.n_opt == 0) {
            pop = optimize_population(obj, std::move(pop), params.descent);
            pop = selection(std::move(pop), params.population, log);
        }
    }
    rank_and_crowd(pop);
    return pop;
}

}  // namespace detail

inline Population nsma_run(const BiObjective& obj,
                           const std::vector<Eigen::VectorXd>& init,
                           const MooRunParams& params, std::uint64_t seed,
                           EventLog* log = nullptr) {
    return detail::run_driver(obj, init, params, seed, true, log);
}

inline Population nsga2_run(const BiObjective& obj,
                            const std::vector<Eigen::VectorXd>& init,
                            const MooRunParams& params, std::uint64_t seed,
                            EventLog* log = nullptr) {
    return detail::run_driver(obj, init, params, seed, false, log);
}

}  // namespace pbo::moo
