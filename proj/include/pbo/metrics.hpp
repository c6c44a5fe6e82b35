#pragma once

#include <algorithm>
#include <cmath>
#include <limits>
#include <map>
#include <string>
#include <vector>

#include "pbo/common.hpp"

// Run-quality metrics: normalized regret and its area under the curve,
// boundary-clearance traces, relative-gap cumulative distributions across
// solvers, and normal-approximation confidence intervals over seeds.

namespace pbo::metrics {

// NR_k = (f_k^best - f*) / (f_0^best - f*); the all-zeros series with a
// degenerate flag when the initial best already equals f*.
inline std::vector<double> normalized_regret(const std::vector<double>& f_best,
                                             double f_star,
                                             EventLog* log = nullptr) {
    if (f_best.empty()) throw InputError("normalized_regret: empty trace");
    const double denom = f_best.front() - f_star;
    std::vector<double> nr(f_best.size(), 0.0);
    if (denom <= 0.0) {
        log_event(log, "normalized_regret: degenerate trace, f_best_0 == f*");
        return nr;
    }
    for (std::size_t i = 0; i < f_best.size(); ++i)
        nr[i] = (f_best[i] - f_star) / denom;
    return nr;
}

// trapezoidal integral of NR over evaluation-count knots
inline double nr_auc(const std::vector<double>& nr,
                     const std::vector<double>& knots) {
    if (nr.size() != knots.size() || nr.size() < 2)
        throw InputError("nr_auc: need matching knot/value series");
    double auc = 0.0;
    for (std::size_t i = 0; i + 1 < nr.size(); ++i)
        auc += 0.5 * (nr[i] + nr[i + 1]) * (knots[i + 1] - knots[i]);
    return auc;
}

// mean +/- 1.96 sd/sqrt(n); a single value gives the degenerate (v, v)
inline std::pair<double, double> confidence_interval(
    const std::vector<double>& values, EventLog* log = nullptr) {
    if (values.empty()) throw InputError("confidence_interval: no values");
    double mean = 0.0;
    for (double v : values) mean += v;
    mean /= static_cast<double>(values.size());
    if (values.size() < 2) {
        log_event(log, "confidence_interval: single value, degenerate interval");
        return {values[0], values[0]};
    }
    double ss = 0.0;
    for (double v : values) ss += (v - mean) * (v - mean);
    const double sd = std::sqrt(ss / static_cast<double>(values.size() - 1));
    const double half = 1.96 * sd / std::sqrt(static_cast<double>(values.size()));
    return {mean - half, mean + half};
}

// Relative-gap cumulative distributions (lower scores are better): for every
// problem, gap_s = (score_s - best) / max(|best|, 1e-12); each solver's curve
// is the fraction of problems with gap <= tau. Problems missing any solver
// are dropped for all solvers.
struct GapCurve {
    std::string solver;
    std::vector<double> gaps;  // sorted; curve(tau) = #(gaps <= tau) / n
};

inline std::vector<GapCurve> relative_gap_distribution(
    const std::map<std::string, std::map<std::string, double>>& scores,
    EventLog* log = nullptr) {
    if (scores.empty())
        throw InputError("relative_gap_distribution: no solvers");
    // keep problems scored by every solver
    std::map<std::string, int> seen;
    for (const auto& [solver, per_problem] : scores)
        for (const auto& [problem, v] : per_problem) ++seen[problem];
    std::vector<std::string> problems;
    for (const auto& [problem, count] : seen) {
        if (count == static_cast<int>(scores.size()))
            problems.push_back(problem);
        else
            log_event(log, "relative_gap_distribution: dropped problem '" +
                               problem + "' with missing scores");
    }
    if (problems.empty())
        throw InputError("relative_gap_distribution: no fully scored problems");

    std::vector<GapCurve> curves;
    for (const auto& [solver, per_problem] : scores)
        curves.push_back({solver, {}});
    for (const auto& problem : problems) {
        double best = std::numeric_limits<double>::infinity();
        for (const auto& [solver, per_problem] : scores)
            best = std::min(best, per_problem.at(problem));
        const double denom = std::max(std::abs(best), 1e-12);
        std::size_t idx = 0;
        for (const auto& [solver, per_problem] : scores)
            curves[idx++].gaps.push_back((per_problem.at(problem) - best) / denom);
    }
    for (auto& c : curves) std::sort(c.gaps.begin(), c.gaps.end());
    return curves;
}

inline double gap_curve_fraction(const GapCurve& curve, double tau) {
    const auto it = std::upper_bound(curve.gaps.begin(), curve.gaps.end(), tau);
    return static_cast<double>(it - curve.gaps.begin()) /
           static_cast<double>(curve.gaps.size());
}

}  // namespace pbo::metrics
