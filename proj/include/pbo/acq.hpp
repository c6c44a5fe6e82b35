#pragma once

#include <Eigen/Dense>
#include <algorithm>
#include <cmath>
#include <functional>
#include <numbers>
#include <numeric>
#include <vector>

#include "pbo/box_opt.hpp"
#include "pbo/common.hpp"
#include "pbo/domain.hpp"
#include "pbo/gp.hpp"
#include "pbo/normal.hpp"
#include "pbo/sobol.hpp"

// Acquisition criteria over the fitted GP. Everything here works in the
// model's scaled space: inputs in the unit cube, targets in [0, 1], and the
// incumbent f_best taken over scaled observations. The loop minimizes f, so
// improvement means falling below the incumbent and batch values aggregate
// through the batch minimum.

namespace pbo::acq {

struct MCConfig {
    int num_samples = 512;
    std::uint64_t seed = 0;
};

struct BatchCandidate {
    Eigen::MatrixXd points;  // q x n rows inside the domain
};

// closed-form expected improvement at a scaled point
inline double ei_scaled(const TrainedGP& gp, const Eigen::VectorXd& xs,
                        double f_best) {
    const Posterior post = gp.posterior_scaled(xs);
    const double sigma = std::sqrt(post.variance);
    const double delta = f_best - post.mean;
    if (sigma < 1e-12) return std::max(delta, 0.0);
    const double z = delta / sigma;
    return std::max(delta * normal_cdf(z) + sigma * normal_pdf(z), 0.0);
}

inline double ei(const TrainedGP& gp, const Eigen::VectorXd& x, double f_best) {
    return ei_scaled(gp, gp.domain().to_unit(x), f_best);
}

inline double lcb_scaled(const TrainedGP& gp, const Eigen::VectorXd& xs,
                         double beta) {
    const Posterior post = gp.posterior_scaled(xs);
    return post.mean - std::sqrt(beta) * std::sqrt(post.variance);
}

inline double lcb(const TrainedGP& gp, const Eigen::VectorXd& x, double beta) {
    return lcb_scaled(gp, gp.domain().to_unit(x), beta);
}

namespace detail {

// lexicographic row order; qei/qlcb evaluate in this canonical order so their
// values are exactly invariant under batch permutations
inline std::vector<int> canonical_order(const Eigen::MatrixXd& X) {
    std::vector<int> idx(X.rows());
    std::iota(idx.begin(), idx.end(), 0);
    std::stable_sort(idx.begin(), idx.end(), [&](int a, int b) {
        for (Eigen::Index d = 0; d < X.cols(); ++d) {
            if (X(a, d) < X(b, d)) return true;
            if (X(a, d) > X(b, d)) return false;
        }
        return false;
    });
    return idx;
}

// Cholesky of S + jitter I with escalation; S is PSD up to roundoff.
inline Eigen::MatrixXd chol_with_jitter(Eigen::MatrixXd S, double scale) {
    for (double jf = 1e-10; jf <= 1.1e-4; jf *= 10.0) {
        Eigen::MatrixXd Sj = S;
        Sj.diagonal().array() += jf * std::max(scale, 1e-300);
        Eigen::LLT<Eigen::MatrixXd> llt(Sj);
        if (llt.info() == Eigen::Success) return llt.matrixL();
    }
    throw NumericError("batch covariance Cholesky failed after jitter");
}

// lower-triangular mask with halved diagonal, used by the Cholesky adjoint
inline Eigen::MatrixXd phi_lower(Eigen::MatrixXd M) {
    const Eigen::Index q = M.rows();
    for (Eigen::Index i = 0; i < q; ++i) {
        M(i, i) *= 0.5;
        for (Eigen::Index j = i + 1; j < q; ++j) M(i, j) = 0.0;
    }
    return M;
}

// reverse-mode map of Lbar = df/dL to Sbar = df/dSigma (symmetrized)
inline Eigen::MatrixXd chol_adjoint(const Eigen::MatrixXd& L,
                                    const Eigen::MatrixXd& Lbar) {
    const Eigen::MatrixXd P = phi_lower(L.transpose() * Lbar);
    Eigen::MatrixXd S = L.triangularView<Eigen::Lower>().transpose().solve(P);
    S = L.triangularView<Eigen::Lower>()
            .transpose()
            .solve(S.transpose())
            .transpose();
    // S = L^{-T} P L^{-1}; symmetrize because Sigma is constrained symmetric
    return 0.5 * (S + S.transpose());
}

// Shared batch geometry in canonical order: means, covariance factor, kernel
// cross terms needed by the pathwise gradients.
struct BatchModel {
    std::vector<int> order;        // canonical permutation
    Eigen::MatrixXd X;             // q x n, permuted scaled rows
    Eigen::VectorXd mu;            // posterior means
    Eigen::MatrixXd L;             // chol(Sigma + jitter I)
    Eigen::MatrixXd W;             // k x q: K^{-1} kernel vectors
    std::vector<Eigen::MatrixXd> J;     // per row: n x k kernel-vector gradient
    std::vector<Eigen::VectorXd> gmean; // per row: posterior mean gradient

    BatchModel(const TrainedGP& gp, const Eigen::MatrixXd& Xs, bool with_grads) {
        order = canonical_order(Xs);
        const Eigen::Index q = Xs.rows();
        X.resize(q, Xs.cols());
        for (Eigen::Index i = 0; i < q; ++i) X.row(i) = Xs.row(order[i]);

        Eigen::MatrixXd C(gp.num_points(), q);
        mu.resize(q);
        for (Eigen::Index i = 0; i < q; ++i) {
            C.col(i) = gp.kernel_vector(X.row(i));
            mu[i] = gp.params().constant_mean + C.col(i).dot(gp.alpha());
        }

        const Eigen::MatrixXd Sigma = gp.posterior_cov_scaled(X);
        L = chol_with_jitter(Sigma, gp.params().output_scale);
        if (with_grads) {
            W = gp.solve_kernel(C);
            J.resize(q);
            gmean.resize(q);
            for (Eigen::Index i = 0; i < q; ++i) {
                J[i] = gp.kernel_vector_gradient(X.row(i));
                gmean[i] = gp.posterior_gradients_scaled(X.row(i)).first;
            }
        }
    }

    // df/dX rows (in canonical order) from adjoints on mu and L
    Eigen::MatrixXd chain(const TrainedGP& gp, const Eigen::VectorXd& mu_bar,
                          const Eigen::MatrixXd& L_bar) const {
        const Eigen::Index q = X.rows(), n = X.cols();
        const Eigen::MatrixXd S_bar = chol_adjoint(L, L_bar);
        Eigen::MatrixXd grad = Eigen::MatrixXd::Zero(q, n);
        KernelParams params = gp.params();
        for (Eigen::Index j = 0; j < q; ++j) {
            // dSigma_{jb}/dx_j = grad_x k(x_j, x_b) - J_j^T w_b  (zero kernel
            // term when b = j; the diagonal picks up the factor 2 below)
            Eigen::MatrixXd Gc = Eigen::MatrixXd::Zero(n, q);
            for (Eigen::Index b = 0; b < q; ++b)
                if (b != j)
                    Gc.col(b) = matern_kernel_gradient(X.row(j), X.row(b), params);
            const Eigen::MatrixXd M = J[j] * W;  // n x q
            grad.row(j) = (mu_bar[j] * gmean[j] +
                           2.0 * ((Gc - M) * S_bar.row(j).transpose()))
                              .transpose();
        }
        return grad;
    }
};

}  // namespace detail

namespace detail {

// log-sum-exp soft minimum with weights; exact minimum at temp = 0
inline double softmin(const Eigen::VectorXd& y, double temp,
                      Eigen::VectorXd* weights) {
    Eigen::Index imin = 0;
    for (Eigen::Index i = 1; i < y.size(); ++i)
        if (y[i] < y[imin]) imin = i;
    if (temp <= 0.0) {
        if (weights != nullptr) {
            weights->setZero(y.size());
            (*weights)[imin] = 1.0;
        }
        return y[imin];
    }
    const Eigen::ArrayXd e = (-(y.array() - y[imin]) / temp).exp();
    const double total = e.sum();
    if (weights != nullptr) *weights = (e / total).matrix();
    return y[imin] - temp * std::log(total);
}

}  // namespace detail

// Monte-Carlo q-EI with frozen Sobol normal base samples: the estimate of
// E[ max(f_best - min_i y_i, 0) ], y ~ N(mu, Sigma), via y = mu + L z.
// A positive smooth_temp switches to the softmin/softplus surrogate used by
// the finite-difference gradient checks; optimization runs at temp 0.
class QeiEvaluator {
  public:
    QeiEvaluator(const TrainedGP& gp, double f_best, const MCConfig& mc,
                 double smooth_temp = 0.0)
        : gp_(&gp), f_best_(f_best), temp_(smooth_temp) {
        if (mc.num_samples < 2)
            throw InputError("MCConfig: num_samples must be >= 2");
        Z_ = Eigen::MatrixXd();  // sized on first use (q unknown until then)
        samples_ = mc.num_samples;
        seed_ = mc.seed;
    }

    double value_scaled(const Eigen::MatrixXd& Xs) const {
        detail::BatchModel bm(*gp_, Xs, false);
        return reduce(bm, nullptr, nullptr);
    }

    double value_and_grad_scaled(const Eigen::MatrixXd& Xs,
                                 Eigen::MatrixXd& grad) const {
        detail::BatchModel bm(*gp_, Xs, true);
        Eigen::VectorXd mu_bar = Eigen::VectorXd::Zero(Xs.rows());
        Eigen::MatrixXd L_bar = Eigen::MatrixXd::Zero(Xs.rows(), Xs.rows());
        const double v = reduce(bm, &mu_bar, &L_bar);
        const Eigen::MatrixXd g = bm.chain(*gp_, mu_bar, L_bar);
        grad.resize(Xs.rows(), Xs.cols());
        for (Eigen::Index i = 0; i < Xs.rows(); ++i)
            grad.row(bm.order[i]) = g.row(i);
        return v;
    }

  private:
    const Eigen::MatrixXd& base_samples(Eigen::Index q) const {
        if (Z_.rows() != samples_ || Z_.cols() != q)
            Z_ = sobol_normal(static_cast<int>(q), samples_, seed_);
        return Z_;
    }

    double reduce(const detail::BatchModel& bm, Eigen::VectorXd* mu_bar,
                  Eigen::MatrixXd* L_bar) const {
        const Eigen::Index q = bm.mu.size();
        const Eigen::MatrixXd& Z = base_samples(q);
        const double inv_s = 1.0 / static_cast<double>(Z.rows());
        double acc = 0.0;
        Eigen::VectorXd y(q), w(q);
        for (Eigen::Index s = 0; s < Z.rows(); ++s) {
            y = bm.mu + bm.L * Z.row(s).transpose();
            const double ymin = detail::softmin(y, temp_, &w);
            const double imp = f_best_ - ymin;
            double gate;  // d value / d imp
            if (temp_ > 0.0) {
                // softplus hinge, numerically stable on both tails
                const double a = imp / temp_;
                acc += a > 0.0 ? imp + temp_ * std::log1p(std::exp(-a))
                               : temp_ * std::log1p(std::exp(a));
                gate = 1.0 / (1.0 + std::exp(-a));
            } else {
                if (imp <= 0.0) continue;
                acc += imp;
                gate = 1.0;
            }
            if (mu_bar != nullptr) {
                *mu_bar -= (inv_s * gate) * w;
                *L_bar -= (inv_s * gate) * (w * Z.row(s));
            }
        }
        return acc * inv_s;
    }

    const TrainedGP* gp_;
    double f_best_;
    double temp_;
    int samples_;
    std::uint64_t seed_;
    mutable Eigen::MatrixXd Z_;
};

// Monte-Carlo q-LCB with frozen base samples: the estimate of
// E[ min_i (mu_i - |y_i - mu_i|) ], y ~ N(mu, beta (pi/2) Sigma).
class QlcbEvaluator {
  public:
    QlcbEvaluator(const TrainedGP& gp, double beta, const MCConfig& mc,
                  double smooth_temp = 0.0)
        : gp_(&gp), beta_(beta), temp_(smooth_temp) {
        if (mc.num_samples < 2)
            throw InputError("MCConfig: num_samples must be >= 2");
        if (beta < 0.0) throw InputError("qlcb: beta must be >= 0");
        samples_ = mc.num_samples;
        seed_ = mc.seed;
    }

    double value_scaled(const Eigen::MatrixXd& Xs) const {
        detail::BatchModel bm(*gp_, Xs, false);
        return reduce(bm, nullptr, nullptr);
    }

    double value_and_grad_scaled(const Eigen::MatrixXd& Xs,
                                 Eigen::MatrixXd& grad) const {
        detail::BatchModel bm(*gp_, Xs, true);
        Eigen::VectorXd mu_bar = Eigen::VectorXd::Zero(Xs.rows());
        Eigen::MatrixXd L_bar = Eigen::MatrixXd::Zero(Xs.rows(), Xs.rows());
        const double v = reduce(bm, &mu_bar, &L_bar);
        const Eigen::MatrixXd g = bm.chain(*gp_, mu_bar, L_bar);
        grad.resize(Xs.rows(), Xs.cols());
        for (Eigen::Index i = 0; i < Xs.rows(); ++i)
            grad.row(bm.order[i]) = g.row(i);
        return v;
    }

  private:
    const Eigen::MatrixXd& base_samples(Eigen::Index q) const {
        if (Z_.rows() != samples_ || Z_.cols() != q)
            Z_ = sobol_normal(static_cast<int>(q), samples_, seed_);
        return Z_;
    }

    double reduce(const detail::BatchModel& bm, Eigen::VectorXd* mu_bar,
                  Eigen::MatrixXd* L_bar) const {
        const Eigen::Index q = bm.mu.size();
        const Eigen::MatrixXd& Z = base_samples(q);
        const double inv_s = 1.0 / static_cast<double>(Z.rows());
        // |y - mu| = c |L z| with c = sqrt(beta pi / 2)
        const double c = std::sqrt(beta_ * std::numbers::pi / 2.0);
        double acc = 0.0;
        Eigen::VectorXd t(q), v(q), w(q);
        for (Eigen::Index s = 0; s < Z.rows(); ++s) {
            t = bm.L * Z.row(s).transpose();
            v = bm.mu - c * t.cwiseAbs();
            acc += detail::softmin(v, temp_, &w);
            if (mu_bar != nullptr) {
                *mu_bar += inv_s * w;
                for (Eigen::Index i = 0; i < q; ++i) {
                    const double sgn =
                        t[i] > 0.0 ? 1.0 : (t[i] < 0.0 ? -1.0 : 0.0);
                    L_bar->row(i) -= (inv_s * c * sgn * w[i]) * Z.row(s);
                }
            }
        }
        return acc * inv_s;
    }

    const TrainedGP* gp_;
    double beta_;
    double temp_;
    int samples_;
    std::uint64_t seed_;
    mutable Eigen::MatrixXd Z_;
};

inline double qei(const TrainedGP& gp, const BatchCandidate& cand, double f_best,
                  const MCConfig& mc) {
    if (cand.points.rows() < 1) throw InputError("qei: empty batch");
    Eigen::MatrixXd Xs(cand.points.rows(), cand.points.cols());
    for (Eigen::Index i = 0; i < cand.points.rows(); ++i)
        Xs.row(i) = gp.domain().to_unit(cand.points.row(i));
    return QeiEvaluator(gp, f_best, mc).value_scaled(Xs);
}

inline double qlcb(const TrainedGP& gp, const BatchCandidate& cand, double beta,
                   const MCConfig& mc) {
    if (cand.points.rows() < 1) throw InputError("qlcb: empty batch");
    Eigen::MatrixXd Xs(cand.points.rows(), cand.points.cols());
    for (Eigen::Index i = 0; i < cand.points.rows(); ++i)
        Xs.row(i) = gp.domain().to_unit(cand.points.row(i));
    return QlcbEvaluator(gp, beta, mc).value_scaled(Xs);
}

// Batch acquisition surface to maximize; gradients row-shaped like the batch.
struct BatchObjective {
    std::function<double(const Eigen::MatrixXd&)> value;
    std::function<double(const Eigen::MatrixXd&, Eigen::MatrixXd&)> value_and_grad;
};

// Multi-start maximization over q x n stacked batch variables: `starts`
// uniform batches are scored, the best `refine` of them polished with the
// projected quasi-Newton iteration. The result is never worse than the best
// evaluated start.
inline BatchCandidate optimize_acquisition(const BatchObjective& objective,
                                           const BoxDomain& domain, int q,
                                           int starts, int maxiter,
                                           std::uint64_t seed, int refine = 10) {
    if (q < 1 || starts < 1) throw InputError("optimize_acquisition: q, starts >= 1");
    const int n = domain.dim();
    Rng rng(mix_seed(seed, 0x61637155ULL));

    std::vector<Eigen::MatrixXd> cands(starts, Eigen::MatrixXd(q, n));
    std::vector<double> vals(starts);
    for (int s = 0; s < starts; ++s) {
        for (int i = 0; i < q; ++i)
            cands[s].row(i) = sample_uniform_one(domain, rng).transpose();
        vals[s] = objective.value(cands[s]);
    }
    std::vector<int> idx(starts);
    std::iota(idx.begin(), idx.end(), 0);
    std::stable_sort(idx.begin(), idx.end(),
                     [&](int a, int b) { return vals[a] > vals[b]; });

    double best_val = vals[idx[0]];
    Eigen::MatrixXd best = cands[idx[0]];

    Eigen::VectorXd lo(q * n), hi(q * n);
    for (int i = 0; i < q; ++i) {
        lo.segment(i * n, n) = domain.lower();
        hi.segment(i * n, n) = domain.upper();
    }
    const auto unflatten = [&](const Eigen::VectorXd& v) {
        Eigen::MatrixXd X(q, n);
        for (int i = 0; i < q; ++i) X.row(i) = v.segment(i * n, n).transpose();
        return X;
    };

    const int to_refine = std::min(refine, starts);
    for (int r = 0; r < to_refine; ++r) {
        Eigen::VectorXd x0(q * n);
        for (int i = 0; i < q; ++i)
            x0.segment(i * n, n) = cands[idx[r]].row(i).transpose();
        const BoxFn neg = [&](const Eigen::VectorXd& v, Eigen::VectorXd* g) {
            const Eigen::MatrixXd X = unflatten(v);
            if (g == nullptr) return -objective.value(X);
            Eigen::MatrixXd G;
            const double val = objective.value_and_grad(X, G);
            for (int i = 0; i < q; ++i)
                g->segment(i * n, n) = -G.row(i).transpose();
            return -val;
        };
        const BoxOptResult res = minimize_box(neg, x0, lo, hi, maxiter);
        if (-res.value > best_val) {
            best_val = -res.value;
            best = unflatten(res.x);
        }
    }
    return BatchCandidate{best};
}

}  // namespace pbo::acq
