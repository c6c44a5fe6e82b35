#pragma once

#include <Eigen/Dense>
#include <chrono>
#include <cmath>
#include <functional>
#include <limits>
#include <memory>
#include <string>
#include <vector>

#include "pbo/acq.hpp"
#include "pbo/common.hpp"
#include "pbo/domain.hpp"
#include "pbo/gp.hpp"
#include "pbo/metrics.hpp"
#include "pbo/moo.hpp"
#include "pbo/nsma.hpp"
#include "pbo/select.hpp"

// The batch Bayesian-optimization loop: evaluate an initial uniform design,
// then repeatedly refit the GP, let the configured acquisition strategy
// propose q points, and evaluate them, until the evaluation budget N_i + N_M
// is spent. The objective is only ever reached through a counting wrapper, so
// budget discipline is checked, not assumed.

namespace pbo::driver {

enum class Strategy { NsmaX, NsmaF, Nsga2X, Nsga2F, Qei, Qlcb };

inline const char* strategy_name(Strategy s) {
    switch (s) {
        case Strategy::NsmaX: return "nsma_x";
        case Strategy::NsmaF: return "nsma_f";
        case Strategy::Nsga2X: return "nsga2_x";
        case Strategy::Nsga2F: return "nsga2_f";
        case Strategy::Qei: return "qei";
        case Strategy::Qlcb: return "qlcb";
    }
    throw LookupError("unknown strategy");
}

inline Strategy parse_strategy(const std::string& name) {
    for (Strategy s : {Strategy::NsmaX, Strategy::NsmaF, Strategy::Nsga2X,
                       Strategy::Nsga2F, Strategy::Qei, Strategy::Qlcb})
        if (name == strategy_name(s)) return s;
    throw LookupError("unknown strategy '" + name + "'");
}

struct StrategyParams {
    int population = 100;   // solver population N
    int moo_iters = 20;     // solver iterations
    int n_opt = 5;          // descent cadence
    int moo_starts = 100;   // uniform initial points for the solver
    int mc_samples = 512;   // Sobol normal samples for q-EI / q-LCB
    double beta = std::sqrt(3.0);
    int acq_starts = 100;   // uniform starts for the inner optimizer
    int acq_refine = 10;    // starts polished with the quasi-Newton loop
    int acq_maxiter = 100;
};

struct ExperimentConfig {
    std::string benchmark;  // "name:dim", informational here
    Strategy strategy = Strategy::NsmaF;
    int q = 3;
    int n_init = 10;    // N_i
    int max_evals = 60; // N_M
    StrategyParams params;

    void validate() const {
        if (n_init < 1) throw InputError("config: N_i must be >= 1");
        if (q < 2) throw InputError("config: q must be >= 2");
        if (max_evals != 0 && max_evals < q)
            throw InputError("config: N_M must be >= q (or 0)");
    }
};

struct Evaluation {
    Eigen::VectorXd x;
    double f = 0.0;
    int batch = 0;  // 0 for the initial design, then 1, 2, ...
};

struct RunHistory {
    std::vector<Evaluation> evaluations;   // exactly N_i + N_M entries
    std::vector<double> f_best_trace;      // index j: best after N_i + j evals
    std::vector<double> d_omega_trace;     // clearance running max, [0] = 0
    std::vector<double> wall_times;        // seconds per BO iteration
    EventLog notes;
    Eigen::VectorXd incumbent;
    double incumbent_value = 0.0;

    // best-so-far after the first `evals` evaluations (inf when evals == 0)
    double best_after(int evals) const {
        double best = std::numeric_limits<double>::infinity();
        for (int i = 0; i < evals && i < static_cast<int>(evaluations.size()); ++i)
            best = std::min(best, evaluations[i].f);
        return best;
    }
};

namespace detail {

class CountingObjective {
  public:
    CountingObjective(std::function<double(const Eigen::VectorXd&)> fn,
                      const BoxDomain& domain)
        : fn_(std::move(fn)), domain_(&domain) {}

    double operator()(const Eigen::VectorXd& x) {
        if (!domain_->contains(x, 1e-12))
            throw InputError("objective evaluated outside the box");
        ++count_;
        return fn_(domain_->clip(x));
    }

    int count() const { return count_; }

  private:
    std::function<double(const Eigen::VectorXd&)> fn_;
    const BoxDomain* domain_;
    int count_ = 0;
};

inline moo::BiObjective make_biobjective(const TrainedGP& gp) {
    return moo::BiObjective{
        [&gp](const Eigen::VectorXd& xs) {
            const Posterior p = gp.posterior_scaled(xs);
            return moo::ObjectivePair{p.mean, -p.variance};
        },
        [&gp](const Eigen::VectorXd& xs) {
            auto [gm, gv] = gp.posterior_gradients_scaled(xs);
            return std::array<Eigen::VectorXd, 2>{gm, (-gv).eval()};
        },
        BoxDomain::unit(gp.dim())};
}

}  // namespace detail

// One batch of q proposals in original coordinates, rows inside the box.
inline Eigen::MatrixXd dispatch_strategy(Strategy strategy, const TrainedGP& gp,
                                         int q, std::uint64_t seed,
                                         const StrategyParams& params,
                                         EventLog* log = nullptr) {
    const BoxDomain unit = BoxDomain::unit(gp.dim());
    Eigen::MatrixXd scaled_rows;

    if (strategy == Strategy::Qei || strategy == Strategy::Qlcb) {
        acq::MCConfig mc{params.mc_samples, mix_seed(seed, 0x6d63ULL)};
        acq::BatchObjective objective;
        if (strategy == Strategy::Qei) {
            auto eval = std::make_shared<acq::QeiEvaluator>(gp, gp.best_scaled(), mc);
            objective.value = [eval](const Eigen::MatrixXd& X) {
                return eval->value_scaled(X);
            };
            objective.value_and_grad = [eval](const Eigen::MatrixXd& X,
                                              Eigen::MatrixXd& G) {
                return eval->value_and_grad_scaled(X, G);
            };
        } else {
            auto eval = std::make_shared<acq::QlcbEvaluator>(gp, params.beta, mc);
            objective.value = [eval](const Eigen::MatrixXd& X) {
                return -eval->value_scaled(X);
            };
            objective.value_and_grad = [eval](const Eigen::MatrixXd& X,
                                              Eigen::MatrixXd& G) {
                const double v = eval->value_and_grad_scaled(X, G);
                G = -G;
                return -v;
            };
        }
        scaled_rows = acq::optimize_acquisition(objective, unit, q,
                                                params.acq_starts,
                                                params.acq_maxiter, seed,
                                                params.acq_refine)
                          .points;
    } else {
        const moo::BiObjective objective = detail::make_biobjective(gp);
        moo::MooRunParams run;
        run.population = params.population;
        run.iterations = params.moo_iters;
        run.n_opt = params.n_opt;
        Rng init_rng(mix_seed(seed, 0x696e6974ULL));
        const auto init = sample_uniform(unit, params.moo_starts, init_rng);
        const bool memetic =
            strategy == Strategy::NsmaX || strategy == Strategy::NsmaF;
        const moo::Population pop =
            memetic ? moo::nsma_run(objective, init, run, seed, log)
                    : moo::nsga2_run(objective, init, run, seed, log);
        const bool x_space =
            strategy == Strategy::NsmaX || strategy == Strategy::Nsga2X;
        const std::uint64_t sel_seed = mix_seed(seed, 0x73656cULL);
        scaled_rows = x_space
                          ? select::select_batch_X(pop, q, unit, sel_seed, log).points
                          : select::select_batch_F(pop, q, unit, sel_seed, log).points;
    }

    Eigen::MatrixXd rows(q, gp.dim());
    for (int i = 0; i < q; ++i)
        rows.row(i) = gp.domain().from_unit(scaled_rows.row(i)).transpose();
    return rows;
}

inline RunHistory run_bayesopt(
    const std::function<double(const Eigen::VectorXd&)>& objective,
    const BoxDomain& domain, const ExperimentConfig& cfg, std::uint64_t seed) {
    cfg.validate();
    detail::CountingObjective f(objective, domain);
    RunHistory hist;
    Rng rng(mix_seed(seed, 0x72756eULL));

    for (const auto& x : sample_uniform(domain, cfg.n_init, rng))
        hist.evaluations.push_back({x, f(x), 0});
    hist.f_best_trace.push_back(hist.best_after(cfg.n_init));
    hist.d_omega_trace.push_back(0.0);  // base case: no proposed points yet

    const Eigen::VectorXd range = domain.range();
    const auto is_duplicate = [&](const Eigen::VectorXd& x) {
        for (const auto& ev : hist.evaluations) {
            bool close = true;
            for (int i = 0; i < domain.dim() && close; ++i)
                close = std::abs(x[i] - ev.x[i]) <= 1e-12 * range[i];
            if (close) return true;
        }
        return false;
    };

    int batch_index = 1;
    while (f.count() < cfg.n_init + cfg.max_evals) {
        const auto t0 = std::chrono::steady_clock::now();
        const int remaining = cfg.n_init + cfg.max_evals - f.count();
        const int take = std::min(cfg.q, remaining);

        std::vector<Eigen::VectorXd> xs;
        std::vector<double> ys;
        for (const auto& ev : hist.evaluations) {
            xs.push_back(ev.x);
            ys.push_back(ev.f);
        }
        const TrainedGP gp =
            pbo::fit(xs, ys, domain, mix_seed(seed, 0x666974ULL + batch_index));

        Eigen::MatrixXd proposals = dispatch_strategy(
            cfg.strategy, gp, cfg.q, mix_seed(seed, 0x64697370ULL + batch_index),
            cfg.params, &hist.notes);

        // points colliding with history make the noise-free refit singular
        Rng jitter_rng(mix_seed(seed, 0x6a697474ULL + batch_index));
        for (int i = 0; i < take; ++i) {
            Eigen::VectorXd x = proposals.row(i);
            for (int tries = 0; tries < 16 && is_duplicate(x); ++tries) {
                log_event(&hist.notes, "run: jittered a duplicate proposal");
                Eigen::VectorXd perturbed = x;
                for (int d = 0; d < domain.dim(); ++d)
                    perturbed[d] += jitter_rng.uniform(-1e-6, 1e-6) * range[d];
                x = domain.clip(perturbed);
            }
            hist.evaluations.push_back({x, f(x), batch_index});
            hist.f_best_trace.push_back(
                std::min(hist.f_best_trace.back(), hist.evaluations.back().f));
            hist.d_omega_trace.push_back(
                std::max(hist.d_omega_trace.back(), domain.clearance(x)));
        }
        hist.wall_times.push_back(
            std::chrono::duration<double>(std::chrono::steady_clock::now() - t0)
                .count());
        ++batch_index;
    }

    if (f.count() != cfg.n_init + cfg.max_evals)
        throw NumericError("run_bayesopt: evaluation budget violated");

    hist.incumbent_value = std::numeric_limits<double>::infinity();
    for (const auto& ev : hist.evaluations)
        if (ev.f < hist.incumbent_value) {
            hist.incumbent_value = ev.f;
            hist.incumbent = ev.x;
        }
    return hist;
}

// evaluation-count knots for the NR-AUC integral: 0, then each batch end
inline std::vector<double> batch_knots(const RunHistory& hist) {
    std::vector<double> knots{0.0};
    int last_batch = 0;
    int proposed = 0;
    for (const auto& ev : hist.evaluations) {
        if (ev.batch == 0) continue;
        if (ev.batch != last_batch && last_batch != 0)
            knots.push_back(static_cast<double>(proposed));
        last_batch = ev.batch;
        ++proposed;
    }
    if (proposed > 0) knots.push_back(static_cast<double>(proposed));
    return knots;
}

// NR-AUC over batch-completion knots; the trace is indexed by proposed
// evaluations, so knot k maps to f_best_trace[k]
inline double nr_auc_of_run(const RunHistory& hist, double f_star,
                            EventLog* log = nullptr) {
    const std::vector<double> nr =
        metrics::normalized_regret(hist.f_best_trace, f_star, log);
    const std::vector<double> knots = batch_knots(hist);
    std::vector<double> nr_at_knots;
    for (double k : knots) nr_at_knots.push_back(nr[static_cast<int>(k)]);
    return metrics::nr_auc(nr_at_knots, knots);
}

}  // namespace pbo::driver
