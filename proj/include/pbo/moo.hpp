#pragma once

#include <Eigen/Dense>
#include <algorithm>
#include <array>
#include <cmath>
#include <functional>
#include <limits>
#include <numeric>
#include <vector>

#include "pbo/common.hpp"
#include "pbo/domain.hpp"

// NSGA-II style population machinery for the bi-objective acquisition
// problem: dominance ranking, crowding distance, binary tournaments,
// simulated binary crossover and polynomial mutation. Both objectives are
// minimized.

namespace pbo::moo {

using ObjectivePair = std::array<double, 2>;

struct Individual {
    Eigen::VectorXd x;
    ObjectivePair f{0.0, 0.0};
    int rank = 0;
    double crowding = 0.0;
};

using Population = std::vector<Individual>;

// x -> (f1, f2) and its gradients over a box
struct BiObjective {
    std::function<ObjectivePair(const Eigen::VectorXd&)> evaluate;
    std::function<std::array<Eigen::VectorXd, 2>(const Eigen::VectorXd&)> gradients;
    BoxDomain domain;
};

inline bool dominates(const ObjectivePair& u, const ObjectivePair& v) {
    return u[0] <= v[0] && u[1] <= v[1] && (u[0] < v[0] || u[1] < v[1]);
}

// Deb's fast non-dominated sort; assigns ranks and returns fronts as index
// lists in stable input order.
inline std::vector<std::vector<int>> nondominated_sort(Population& pop) {
    const int n = static_cast<int>(pop.size());
    if (n == 0) throw InputError("nondominated_sort: empty population");
    std::vector<std::vector<int>> dominated(n);
    std::vector<int> count(n, 0);
    for (int a = 0; a < n; ++a)
        for (int b = 0; b < n; ++b) {
            if (a == b) continue;
            if (dominates(pop[a].f, pop[b].f)) dominated[a].push_back(b);
            else if (dominates(pop[b].f, pop[a].f)) ++count[a];
        }
    std::vector<std::vector<int>> fronts;
    std::vector<int> current;
    for (int i = 0; i < n; ++i)
        if (count[i] == 0) current.push_back(i);
    while (!current.empty()) {
        for (int i : current) pop[i].rank = static_cast<int>(fronts.size());
        fronts.push_back(current);
        std::vector<int> next;
        for (int i : current)
            for (int j : dominated[i])
                if (--count[j] == 0) next.push_back(j);
        std::sort(next.begin(), next.end());
        current = std::move(next);
    }
    return fronts;
}

// Per-objective extremes get +inf; interior points sum the normalized
// neighbor gaps. A constant objective contributes nothing. Ties are broken by
// stable input order.
inline void crowding_distance(Population& pop, const std::vector<int>& front) {
    const int m = static_cast<int>(front.size());
    for (int i : front) pop[i].crowding = 0.0;
    if (m <= 2) {
        for (int i : front)
            pop[i].crowding = std::numeric_limits<double>::infinity();
        return;
    }
    for (int obj = 0; obj < 2; ++obj) {
        std::vector<int> order = front;
        std::stable_sort(order.begin(), order.end(), [&](int a, int b) {
            return pop[a].f[obj] < pop[b].f[obj];
        });
        const double span = pop[order.back()].f[obj] - pop[order.front()].f[obj];
        if (span <= 0.0) continue;  // constant objective: no contribution
        pop[order.front()].crowding = std::numeric_limits<double>::infinity();
        pop[order.back()].crowding = std::numeric_limits<double>::infinity();
        for (int i = 1; i + 1 < m; ++i)
            pop[order[i]].crowding +=
                (pop[order[i + 1]].f[obj] - pop[order[i - 1]].f[obj]) / span;
    }
}

inline void rank_and_crowd(Population& pop) {
    const auto fronts = nondominated_sort(pop);
    for (const auto& front : fronts) crowding_distance(pop, front);
}

namespace detail {

// tournament order: lower rank first, then larger crowding; ties keep a
inline bool beats(const Individual& a, const Individual& b) {
    if (a.rank != b.rank) return a.rank < b.rank;
    return a.crowding > b.crowding;
}

}  // namespace detail

// binary tournaments over a ranked, crowded population; floor(N/2) pairs
inline std::vector<std::pair<int, int>> get_parents(const Population& pop,
                                                    Rng& rng) {
    if (pop.size() < 2) throw InputError("get_parents: population too small");
    const auto pick = [&]() {
        const int a = static_cast<int>(rng.index(pop.size()));
        const int b = static_cast<int>(rng.index(pop.size()));
        return detail::beats(pop[b], pop[a]) ? b : a;
    };
    std::vector<std::pair<int, int>> pairs(pop.size() / 2);
    for (auto& pr : pairs) pr = {pick(), pick()};
    return pairs;
}

struct GeneticParams {
    double crossover_prob = 0.9;
    double sbx_index = 20.0;
    double mutation_prob = -1.0;  // <0 means 1/n
    double mutation_index = 20.0;
};

// simulated binary crossover (two children per pair), clipped to the box
inline std::vector<Eigen::VectorXd> crossover(
    const std::vector<std::pair<int, int>>& parents, const Population& pop,
    const BoxDomain& domain, Rng& rng, const GeneticParams& gp = {}) {
    std::vector<Eigen::VectorXd> children;
    children.reserve(parents.size() * 2);
    const int n = domain.dim();
    for (const auto& [ia, ib] : parents) {
        Eigen::VectorXd c1 = pop[ia].x, c2 = pop[ib].x;
        if (rng.u01() <= gp.crossover_prob) {
            for (int d = 0; d < n; ++d) {
                if (rng.u01() > 0.5) continue;
                const double p1 = c1[d], p2 = c2[d];
                if (std::abs(p1 - p2) < 1e-14) continue;
                const double u = rng.u01();
                const double beta =
                    u <= 0.5 ? std::pow(2.0 * u, 1.0 / (gp.sbx_index + 1.0))
                             : std::pow(1.0 / (2.0 * (1.0 - u)),
                                        1.0 / (gp.sbx_index + 1.0));
                c1[d] = 0.5 * ((1.0 + beta) * p1 + (1.0 - beta) * p2);
                c2[d] = 0.5 * ((1.0 - beta) * p1 + (1.0 + beta) * p2);
            }
        }
        children.push_back(domain.clip(c1));
        children.push_back(domain.clip(c2));
    }
    return children;
}

// bounded polynomial mutation, per-gene probability 1/n by default
inline void mutation(std::vector<Eigen::VectorXd>& offspring,
                     const BoxDomain& domain, Rng& rng,
                     const GeneticParams& gp = {}) {
    const int n = domain.dim();
    const double prob = gp.mutation_prob < 0.0
                            ? 1.0 / static_cast<double>(n)
                            : gp.mutation_prob;
    const double eta = gp.mutation_index;
    for (auto& x : offspring) {
        for (int d = 0; d < n; ++d) {
            if (rng.u01() >= prob) continue;
            const double lo = domain.lower()[d], hi = domain.upper()[d];
            const double range = hi - lo;
            const double d1 = (x[d] - lo) / range, d2 = (hi - x[d]) / range;
            const double u = rng.u01();
            double dq;
            if (u < 0.5) {
                const double b = 2.0 * u + (1.0 - 2.0 * u) *
                                               std::pow(1.0 - d1, eta + 1.0);
                dq = std::pow(b, 1.0 / (eta + 1.0)) - 1.0;
            } else {
                const double b = 2.0 * (1.0 - u) + 2.0 * (u - 0.5) *
                                                       std::pow(1.0 - d2, eta + 1.0);
                dq = 1.0 - std::pow(b, 1.0 / (eta + 1.0));
            }
            x[d] = std::clamp(x[d] + dq * range, lo, hi);
        }
    }
}

// Environmental selection: whole fronts by ascending rank, the boundary front
// split by descending crowding (stable). A population smaller than N is
// returned unchanged apart from re-ranking.
inline Population selection(Population pop, int N, EventLog* log = nullptr) {
    if (pop.empty()) throw InputError("selection: empty population");
    rank_and_crowd(pop);
    if (static_cast<int>(pop.size()) <= N) {
        if (static_cast<int>(pop.size()) < N)
            log_event(log, "selection: population shrank to " +
                               std::to_string(pop.size()) + " < N=" +
                               std::to_string(N));
        return pop;
    }
    std::vector<int> order(pop.size());
    std::iota(order.begin(), order.end(), 0);
    std::stable_sort(order.begin(), order.end(), [&](int a, int b) {
        if (pop[a].rank != pop[b].rank) return pop[a].rank < pop[b].rank;
        return pop[a].crowding > pop[b].crowding;
    });
    Population out;
    out.reserve(N);
    for (int i = 0; i < N; ++i) out.push_back(pop[order[i]]);
    rank_and_crowd(out);
    return out;
}

}  // namespace pbo::moo
