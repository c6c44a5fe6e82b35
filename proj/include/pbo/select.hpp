#pragma once

#include <Eigen/Dense>
#include <algorithm>
#include <limits>
#include <numeric>
#include <vector>

#include "pbo/common.hpp"
#include "pbo/domain.hpp"
#include "pbo/kmeans.hpp"
#include "pbo/moo.hpp"

// Batch selection from the final solver population: k-means over the rank-0
// set either in variable space (cluster centers become the batch) or in
// objective space (the member nearest each center is picked). Degenerate
// fronts fall back to the whole population and finally to uniform padding;
// every fallback is logged.

namespace pbo::select {

struct BatchProposal {
    Eigen::MatrixXd points;           // q x n rows inside the domain
    Eigen::MatrixXd centers;          // the k-means centers that produced them
    std::vector<int> member_indices;  // population indices (F-mode only)
};

namespace detail {

inline bool near_duplicate(const Eigen::VectorXd& a, const Eigen::VectorXd& b) {
    return (a - b).lpNorm<Eigen::Infinity>() < 1e-12;
}

inline std::vector<Eigen::VectorXd> dedup(const std::vector<Eigen::VectorXd>& v) {
    std::vector<Eigen::VectorXd> out;
    for (const auto& x : v) {
        bool dup = false;
        for (const auto& y : out)
            if (near_duplicate(x, y)) { dup = true; break; }
        if (!dup) out.push_back(x);
    }
    return out;
}

inline std::vector<Eigen::VectorXd> rank0_points(const moo::Population& pop) {
    std::vector<Eigen::VectorXd> xs;
    for (const auto& ind : pop)
        if (ind.rank == 0) xs.push_back(ind.x);
    return xs;
}

// distinct q x n batch; any colliding or missing rows are replaced with fresh
// uniform points
inline Eigen::MatrixXd finalize_batch(std::vector<Eigen::VectorXd> rows, int q,
                                      const BoxDomain& domain, Rng& rng,
                                      EventLog* log) {
    std::vector<Eigen::VectorXd> unique = dedup(rows);
    if (static_cast<int>(unique.size()) < static_cast<int>(rows.size()))
        log_event(log, "select: replaced duplicate batch candidates");
    while (static_cast<int>(unique.size()) < q) {
        log_event(log, "select: padded batch with a uniform random point");
        for (int tries = 0; tries < 64; ++tries) {
            Eigen::VectorXd x = sample_uniform_one(domain, rng);
            bool dup = false;
            for (const auto& y : unique)
                if (near_duplicate(x, y)) { dup = true; break; }
            if (!dup) {
                unique.push_back(std::move(x));
                break;
            }
        }
    }
    Eigen::MatrixXd out(q, domain.dim());
    for (int i = 0; i < q; ++i) out.row(i) = domain.clip(unique[i]).transpose();
    return out;
}

}  // namespace detail

// Clustering in variable space: the q cluster centers are the batch.
inline BatchProposal select_batch_X(const moo::Population& pop, int q,
                                    const BoxDomain& domain, std::uint64_t seed,
                                    EventLog* log = nullptr) {
    if (pop.empty()) throw InputError("select_batch_X: empty population");
    if (q < 1) throw InputError("select_batch_X: q must be >= 1");
    std::vector<Eigen::VectorXd> cands = detail::dedup(detail::rank0_points(pop));
    if (static_cast<int>(cands.size()) < q) {
        log_event(log, "select_batch_X: rank-0 set too small, using the whole "
                       "population");
        std::vector<Eigen::VectorXd> all;
        for (const auto& ind : pop) all.push_back(ind.x);
        cands = detail::dedup(all);
    }
    Rng rng(mix_seed(seed, 0x73656c58ULL));
    BatchProposal prop;
    if (static_cast<int>(cands.size()) >= q) {
        const ClusteringResult km = kmeans(cands, q, seed);
        prop.centers = km.centers;
        std::vector<Eigen::VectorXd> rows;
        for (int i = 0; i < q; ++i) rows.push_back(km.centers.row(i));
        prop.points = detail::finalize_batch(std::move(rows), q, domain, rng, log);
    } else {
        prop.points = detail::finalize_batch(std::move(cands), q, domain, rng, log);
        prop.centers = prop.points;
    }
    return prop;
}

// Clustering in objective space: k-means over the (normalized) rank-0 images,
// then the member whose image is nearest each center joins the batch.
inline BatchProposal select_batch_F(const moo::Population& pop, int q,
                                    const BoxDomain& domain, std::uint64_t seed,
                                    EventLog* log = nullptr) {
    if (pop.empty()) throw InputError("select_batch_F: empty population");
    if (q < 1) throw InputError("select_batch_F: q must be >= 1");

    std::vector<int> members;
    for (int i = 0; i < static_cast<int>(pop.size()); ++i)
        if (pop[i].rank == 0) members.push_back(i);
    if (static_cast<int>(members.size()) < q) {
        log_event(log, "select_batch_F: rank-0 set too small, using the whole "
                       "population");
        members.resize(pop.size());
        std::iota(members.begin(), members.end(), 0);
    }

    // per-axis min-max normalization: the two objectives live on different
    // scales and would otherwise dominate the metric
    Eigen::Vector2d fmin(std::numeric_limits<double>::infinity(),
                         std::numeric_limits<double>::infinity());
    Eigen::Vector2d fmax = -fmin;
    for (int i : members)
        for (int o = 0; o < 2; ++o) {
            fmin[o] = std::min(fmin[o], pop[i].f[o]);
            fmax[o] = std::max(fmax[o], pop[i].f[o]);
        }
    const auto normalize = [&](const moo::ObjectivePair& f) {
        Eigen::VectorXd v(2);
        for (int o = 0; o < 2; ++o) {
            const double span = fmax[o] - fmin[o];
            v[o] = span > 0.0 ? (f[o] - fmin[o]) / span : 0.0;
        }
        return v;
    };
    std::vector<Eigen::VectorXd> images;
    images.reserve(members.size());
    for (int i : members) images.push_back(normalize(pop[i].f));

    Rng rng(mix_seed(seed, 0x73656c46ULL));
    std::vector<Eigen::VectorXd> rows;
    std::vector<int> picked;
    const std::vector<Eigen::VectorXd> distinct = detail::dedup(images);
    BatchProposal prop;
    if (static_cast<int>(distinct.size()) >= q) {
        const ClusteringResult km = kmeans(distinct, q, seed);
        prop.centers = km.centers;
        for (int c = 0; c < q; ++c) {
            // members ordered by image distance to this center, stable index
            std::vector<int> order(members.size());
            std::iota(order.begin(), order.end(), 0);
            std::stable_sort(order.begin(), order.end(), [&](int a, int b) {
                return (images[a] - km.centers.row(c).transpose()).squaredNorm() <
                       (images[b] - km.centers.row(c).transpose()).squaredNorm();
            });
            for (int oi : order) {
                const Eigen::VectorXd& x = pop[members[oi]].x;
                bool dup = false;
                for (const auto& y : rows)
                    if (detail::near_duplicate(x, y)) { dup = true; break; }
                if (!dup) {
                    rows.push_back(x);
                    picked.push_back(members[oi]);
                    break;
                }
            }
        }
        if (static_cast<int>(rows.size()) < q)
            log_event(log, "select_batch_F: fewer distinct members than q");
    } else {
        log_event(log, "select_batch_F: degenerate objective images");
        for (int i : members) rows.push_back(pop[i].x);
        rows = detail::dedup(rows);
        if (static_cast<int>(rows.size()) > q) rows.resize(q);
    }
    prop.points = detail::finalize_batch(std::move(rows), q, domain, rng, log);
    prop.member_indices = std::move(picked);
    return prop;
}

}  // namespace pbo::select
