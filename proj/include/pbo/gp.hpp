#pragma once

#include <Eigen/Cholesky>
#include <Eigen/Dense>
#include <algorithm>
#include <cmath>
#include <limits>
#include <numbers>
#include <numeric>
#include <utility>
#include <vector>

#include "pbo/common.hpp"
#include "pbo/domain.hpp"

// Noise-free Gaussian-process regression with a Matern covariance at fixed
// smoothness 5/2 and per-coordinate inverse-lengthscale weights:
//
//     k(x, y) = a0 (1 + sqrt5 r + 5 r^2 / 3) exp(-sqrt5 r),
//     r^2     = sum_i alpha_i (x_i - y_i)^2.
//
// The half-integer smoothness gives a closed form (no Bessel evaluation) and
// a twice-differentiable posterior, which the descent steps downstream need.
// Inputs are modelled in the unit cube, targets min-max scaled to [0, 1].

namespace pbo {

struct KernelParams {
    double output_scale = 1.0;         // a0 > 0
    Eigen::VectorXd inv_lengthscales;  // alpha_1..alpha_n, each in [1e-6, 1e6]
    double constant_mean = 0.0;        // mu of the constant prior mean
    static constexpr double smoothness = 2.5;
};

struct Posterior {
    double mean = 0.0;
    double variance = 0.0;  // clamped to [0, a0]
};

namespace detail {

inline constexpr double kSqrt5 = 2.23606797749978969640917366873;

// g(r) with g(0) = 1
inline double matern_profile(double r) {
    return (1.0 + kSqrt5 * r + 5.0 / 3.0 * r * r) * std::exp(-kSqrt5 * r);
}

// g'(r) / r, finite at r = 0: g'(r) = -(5/3) r (1 + sqrt5 r) e^{-sqrt5 r}
inline double matern_profile_dr_over_r(double r) {
    return -(5.0 / 3.0) * (1.0 + kSqrt5 * r) * std::exp(-kSqrt5 * r);
}

}  // namespace detail

inline double matern_kernel(const Eigen::VectorXd& x, const Eigen::VectorXd& y,
                            const KernelParams& p) {
    if (x.size() != y.size() || x.size() != p.inv_lengthscales.size())
        throw InputError("matern_kernel: dimension mismatch");
    double r2 = 0.0;
    for (Eigen::Index i = 0; i < x.size(); ++i) {
        const double d = x[i] - y[i];
        r2 += p.inv_lengthscales[i] * d * d;
    }
    if (!std::isfinite(r2)) throw NumericError("matern_kernel: non-finite input");
    return p.output_scale * detail::matern_profile(std::sqrt(r2));
}

// gradient w.r.t. x; the zero vector at x = y
inline Eigen::VectorXd matern_kernel_gradient(const Eigen::VectorXd& x,
                                              const Eigen::VectorXd& y,
                                              const KernelParams& p) {
    if (x.size() != y.size() || x.size() != p.inv_lengthscales.size())
        throw InputError("matern_kernel_gradient: dimension mismatch");
    double r2 = 0.0;
    for (Eigen::Index i = 0; i < x.size(); ++i) {
        const double d = x[i] - y[i];
        r2 += p.inv_lengthscales[i] * d * d;
    }
    if (!std::isfinite(r2))
        throw NumericError("matern_kernel_gradient: non-finite input");
    const double scale =
        p.output_scale * detail::matern_profile_dr_over_r(std::sqrt(r2));
    return scale * p.inv_lengthscales.cwiseProduct(x - y);
}

namespace detail {

// Pairwise data reused across likelihood evaluations of one dataset:
// sq_diffs(a + k*b, i) = (X(a,i) - X(b,i))^2, so r2 = sq_diffs * alpha.
struct GpWorkspace {
    Eigen::MatrixXd X;         // k x n, scaled rows
    Eigen::VectorXd y;         // scaled targets
    Eigen::MatrixXd sq_diffs;  // k^2 x n

    void init(const Eigen::MatrixXd& Xin, const Eigen::VectorXd& yin) {
        X = Xin;
        y = yin;
        const Eigen::Index k = X.rows(), n = X.cols();
        sq_diffs.resize(k * k, n);
        for (Eigen::Index b = 0; b < k; ++b)
            for (Eigen::Index a = 0; a < k; ++a)
                sq_diffs.row(a + k * b) =
                    (X.row(a) - X.row(b)).array().square().matrix();
    }
};

inline constexpr double kJitterBase = 1e-8;
inline constexpr double kJitterMax = 1e-2;

// Kernel matrix (with jitter_factor * a0 on the diagonal) and its Cholesky
// factor; escalates the jitter tenfold on failure. Returns false only when
// even the largest jitter fails.
inline bool build_chol(const GpWorkspace& ws, const KernelParams& p,
                       Eigen::MatrixXd& K, Eigen::MatrixXd& L,
                       double* jitter_used) {
    const Eigen::Index k = ws.X.rows();
    const Eigen::VectorXd r2 = ws.sq_diffs * p.inv_lengthscales;
    K.resize(k, k);
    for (Eigen::Index b = 0; b < k; ++b)
        for (Eigen::Index a = 0; a <= b; ++a) {
            const double v =
                p.output_scale * matern_profile(std::sqrt(std::max(0.0, r2[a + k * b])));
            K(a, b) = v;
            K(b, a) = v;
        }
    for (double jf = kJitterBase; jf <= kJitterMax * 1.0000001; jf *= 10.0) {
        Eigen::MatrixXd Kj = K;
        Kj.diagonal().array() += jf * p.output_scale;
        Eigen::LLT<Eigen::MatrixXd> llt(Kj);
        if (llt.info() == Eigen::Success) {
            K = Kj;
            L = llt.matrixL();
            if (jitter_used != nullptr) *jitter_used = jf * p.output_scale;
            return true;
        }
    }
    return false;
}

inline double lml_from_chol(const Eigen::MatrixXd& L, const Eigen::VectorXd& resid,
                            Eigen::VectorXd* alpha_out) {
    const Eigen::Index k = resid.size();
    const Eigen::VectorXd v = L.triangularView<Eigen::Lower>().solve(resid);
    const Eigen::VectorXd alpha =
        L.triangularView<Eigen::Lower>().transpose().solve(v);
    if (alpha_out != nullptr) *alpha_out = alpha;
    double logdet = 0.0;
    for (Eigen::Index i = 0; i < k; ++i) logdet += std::log(L(i, i));
    return -0.5 * v.squaredNorm() - logdet -
           0.5 * static_cast<double>(k) * std::log(2.0 * std::numbers::pi);
}

}  // namespace detail

// log p(y | X, params) with the module's jitter policy applied to the kernel
// matrix. Throws FitError if the Cholesky fails at every jitter level.
inline double log_marginal_likelihood(const KernelParams& p,
                                      const Eigen::MatrixXd& X_scaled,
                                      const Eigen::VectorXd& y_scaled) {
    detail::GpWorkspace ws;
    ws.init(X_scaled, y_scaled);
    Eigen::MatrixXd K, L;
    if (!detail::build_chol(ws, p, K, L, nullptr))
        throw FitError("log_marginal_likelihood: kernel matrix not positive "
                       "definite after jitter escalation");
    const Eigen::VectorXd resid =
        y_scaled.array() - p.constant_mean;
    return detail::lml_from_chol(L, resid, nullptr);
}

class TrainedGP {
  public:
    TrainedGP(Eigen::MatrixXd X_scaled, Eigen::VectorXd y_scaled,
              KernelParams params, Eigen::MatrixXd chol, Eigen::VectorXd alpha,
              BoxDomain domain, double y_min, double y_max, double jitter)
        : X_(std::move(X_scaled)),
          y_(std::move(y_scaled)),
          params_(std::move(params)),
          chol_(std::move(chol)),
          alpha_(std::move(alpha)),
          domain_(std::move(domain)),
          y_min_(y_min),
          y_max_(y_max),
          jitter_(jitter) {}

    int num_points() const { return static_cast<int>(X_.rows()); }
    int dim() const { return static_cast<int>(X_.cols()); }
    const Eigen::MatrixXd& train_inputs_scaled() const { return X_; }
    const Eigen::VectorXd& train_targets_scaled() const { return y_; }
    const KernelParams& params() const { return params_; }
    const BoxDomain& domain() const { return domain_; }
    const Eigen::MatrixXd& chol() const { return chol_; }
    double y_min() const { return y_min_; }
    double y_max() const { return y_max_; }
    double jitter() const { return jitter_; }
    const Eigen::VectorXd& alpha() const { return alpha_; }

    // best (lowest) scaled observation, the incumbent f* for EI
    double best_scaled() const { return y_.minCoeff(); }

    Eigen::VectorXd kernel_vector(const Eigen::VectorXd& xs) const {
        const Eigen::Index k = X_.rows();
        Eigen::VectorXd kv(k);
        for (Eigen::Index i = 0; i < k; ++i) {
            double r2 = 0.0;
            for (Eigen::Index d = 0; d < X_.cols(); ++d) {
                const double dd = xs[d] - X_(i, d);
                r2 += params_.inv_lengthscales[d] * dd * dd;
            }
            kv[i] = params_.output_scale * detail::matern_profile(std::sqrt(r2));
        }
        return kv;
    }

    // columns: d k(xs, x_i) / d xs, an n x k matrix
    Eigen::MatrixXd kernel_vector_gradient(const Eigen::VectorXd& xs) const {
        const Eigen::Index k = X_.rows(), n = X_.cols();
        Eigen::MatrixXd J(n, k);
        for (Eigen::Index i = 0; i < k; ++i) {
            double r2 = 0.0;
            for (Eigen::Index d = 0; d < n; ++d) {
                const double dd = xs[d] - X_(i, d);
                r2 += params_.inv_lengthscales[d] * dd * dd;
            }
            const double s = params_.output_scale *
                             detail::matern_profile_dr_over_r(std::sqrt(r2));
            J.col(i) = s * params_.inv_lengthscales.cwiseProduct(
                               (xs - X_.row(i).transpose()));
        }
        return J;
    }

    Eigen::VectorXd solve_kernel(const Eigen::VectorXd& rhs) const {
        Eigen::VectorXd v = chol_.triangularView<Eigen::Lower>().solve(rhs);
        return chol_.triangularView<Eigen::Lower>().transpose().solve(v);
    }

    Eigen::MatrixXd solve_kernel(const Eigen::MatrixXd& rhs) const {
        Eigen::MatrixXd v = chol_.triangularView<Eigen::Lower>().solve(rhs);
        return chol_.triangularView<Eigen::Lower>().transpose().solve(v);
    }

    Posterior posterior_scaled(const Eigen::VectorXd& xs) const {
        const Eigen::VectorXd kv = kernel_vector(xs);
        const Eigen::VectorXd v = chol_.triangularView<Eigen::Lower>().solve(kv);
        Posterior post;
        post.mean = params_.constant_mean + kv.dot(alpha_);
        post.variance = std::clamp(params_.output_scale - v.squaredNorm(), 0.0,
                                   params_.output_scale);
        return post;
    }

    Posterior posterior(const Eigen::VectorXd& x) const {
        return posterior_scaled(domain_.to_unit(x));
    }

    double posterior_mean_unscaled(const Eigen::VectorXd& x) const {
        return y_min_ + (y_max_ - y_min_) * posterior(x).mean;
    }

    // posterior covariance of q scaled query rows (no sampling jitter)
    Eigen::MatrixXd posterior_cov_scaled(const Eigen::MatrixXd& Xq) const {
        const Eigen::Index q = Xq.rows(), k = X_.rows();
        Eigen::MatrixXd Kq(q, q);
        KernelParams p = params_;
        for (Eigen::Index a = 0; a < q; ++a)
            for (Eigen::Index b = 0; b <= a; ++b) {
                const double v = matern_kernel(Xq.row(a), Xq.row(b), p);
                Kq(a, b) = v;
                Kq(b, a) = v;
            }
        Eigen::MatrixXd C(k, q);
        for (Eigen::Index a = 0; a < q; ++a) C.col(a) = kernel_vector(Xq.row(a));
        const Eigen::MatrixXd V = chol_.triangularView<Eigen::Lower>().solve(C);
        Eigen::MatrixXd S = Kq - V.transpose() * V;
        S = 0.5 * (S + S.transpose()).eval();
        for (Eigen::Index a = 0; a < q; ++a) S(a, a) = std::max(S(a, a), 0.0);
        return S;
    }

    Eigen::MatrixXd posterior_cov(const Eigen::MatrixXd& Xq_original) const {
        Eigen::MatrixXd Xs(Xq_original.rows(), Xq_original.cols());
        for (Eigen::Index a = 0; a < Xq_original.rows(); ++a)
            Xs.row(a) = domain_.to_unit(Xq_original.row(a));
        return posterior_cov_scaled(Xs);
    }

    // analytic (grad mean, grad variance) w.r.t. the scaled coordinates
    std::pair<Eigen::VectorXd, Eigen::VectorXd> posterior_gradients_scaled(
        const Eigen::VectorXd& xs) const {
        const Eigen::VectorXd kv = kernel_vector(xs);
        const Eigen::MatrixXd J = kernel_vector_gradient(xs);
        const Eigen::VectorXd w = solve_kernel(kv);
        return {J * alpha_, -2.0 * (J * w)};
    }

  private:
    Eigen::MatrixXd X_;
    Eigen::VectorXd y_;
    KernelParams params_;
    Eigen::MatrixXd chol_;   // lower factor of K + jitter I
    Eigen::VectorXd alpha_;  // (K + jitter I)^{-1} (y - mu)
    BoxDomain domain_;
    double y_min_, y_max_;
    double jitter_;
};

namespace detail {

// analytic gradient of the log marginal likelihood in the optimization
// parameterization (log10 a0, log10 alpha_1..n, mu)
inline Eigen::VectorXd lml_gradient(const GpWorkspace& ws, const KernelParams& p,
                                    const Eigen::MatrixXd& K,
                                    const Eigen::MatrixXd& L,
                                    const Eigen::VectorXd& alpha) {
    const Eigen::Index k = ws.X.rows(), n = ws.X.cols();
    const double ln10 = std::numbers::ln10;
    Eigen::VectorXd grad(n + 2);

    Eigen::MatrixXd Kinv = Eigen::MatrixXd::Identity(k, k);
    Kinv = L.triangularView<Eigen::Lower>().solve(Kinv);
    Kinv = L.triangularView<Eigen::Lower>().transpose().solve(Kinv);

    const Eigen::VectorXd resid = ws.y.array() - p.constant_mean;
    // d/d ln a0: K scales linearly with a0 (jitter included)
    grad[0] = ln10 * (0.5 * resid.dot(alpha) - 0.5 * static_cast<double>(k));

    // d/d alpha_i through dK_ab = -(5/6) a0 (1 + sqrt5 r) e^{-sqrt5 r} D_ab,i
    const Eigen::VectorXd r2 = ws.sq_diffs * p.inv_lengthscales;
    Eigen::MatrixXd W(k, k);
    for (Eigen::Index b = 0; b < k; ++b)
        for (Eigen::Index a = 0; a < k; ++a) {
            const double r = std::sqrt(std::max(0.0, r2[a + k * b]));
            const double c = -(5.0 / 6.0) * p.output_scale * (1.0 + kSqrt5 * r) *
                             std::exp(-kSqrt5 * r);
            W(a, b) = (alpha[a] * alpha[b] - Kinv(a, b)) * c;
        }
    const Eigen::VectorXd galpha =
        0.5 * (ws.sq_diffs.transpose() *
               Eigen::Map<const Eigen::VectorXd>(W.data(), k * k));
    for (Eigen::Index i = 0; i < n; ++i)
        grad[1 + i] = ln10 * p.inv_lengthscales[i] * galpha[i];

    grad[n + 1] = alpha.sum();
    return grad;
}

struct MleObjective {
    const GpWorkspace* ws;

    KernelParams unpack(const Eigen::VectorXd& theta) const {
        const Eigen::Index n = ws->X.cols();
        KernelParams p;
        p.output_scale = std::pow(10.0, theta[0]);
        p.inv_lengthscales.resize(n);
        for (Eigen::Index i = 0; i < n; ++i)
            p.inv_lengthscales[i] = std::pow(10.0, theta[1 + i]);
        p.constant_mean = theta[n + 1];
        return p;
    }

    // value only; -inf when the kernel matrix cannot be factorized
    double value(const Eigen::VectorXd& theta) const {
        const KernelParams p = unpack(theta);
        Eigen::MatrixXd K, L;
        if (!build_chol(*ws, p, K, L, nullptr))
            return -std::numeric_limits<double>::infinity();
        const Eigen::VectorXd resid = ws->y.array() - p.constant_mean;
        return lml_from_chol(L, resid, nullptr);
    }

    bool value_and_grad(const Eigen::VectorXd& theta, double& f,
                        Eigen::VectorXd& g) const {
        const KernelParams p = unpack(theta);
        Eigen::MatrixXd K, L;
        if (!build_chol(*ws, p, K, L, nullptr)) return false;
        const Eigen::VectorXd resid = ws->y.array() - p.constant_mean;
        Eigen::VectorXd alpha;
        f = lml_from_chol(L, resid, &alpha);
        g = lml_gradient(*ws, p, K, L, alpha);
        return true;
    }
};

// projected gradient ascent with step halving; bounds are boxes on theta
inline double ascend(const MleObjective& obj, Eigen::VectorXd& theta,
                     const Eigen::VectorXd& lo, const Eigen::VectorXd& hi,
                     int max_iters) {
    const auto project = [&](Eigen::VectorXd v) {
        return v.cwiseMax(lo).cwiseMin(hi).eval();
    };
    double f;
    Eigen::VectorXd g;
    if (!obj.value_and_grad(theta, f, g))
        return -std::numeric_limits<double>::infinity();
    double step = 1.0;
    for (int iter = 0; iter < max_iters; ++iter) {
        bool improved = false;
        double t = step;
        for (int h = 0; h < 30; ++h) {
            const Eigen::VectorXd cand = project(theta + t * g);
            if ((cand - theta).lpNorm<Eigen::Infinity>() < 1e-14) break;
            const double fc = obj.value(cand);
            if (fc > f) {
                theta = cand;
                f = fc;
                double fg;
                Eigen::VectorXd gg;
                if (obj.value_and_grad(theta, fg, gg)) g = gg;
                step = std::min(t * 2.0, 16.0);
                improved = true;
                break;
            }
            t *= 0.5;
        }
        if (!improved) break;  // no halving improves: stationary or stalled
        if ((project(theta + g) - theta).lpNorm<Eigen::Infinity>() < 1e-9) break;
    }
    return f;
}

}  // namespace detail

namespace detail {

inline void scale_observations(const std::vector<Eigen::VectorXd>& points,
                               const std::vector<double>& values,
                               const BoxDomain& domain, Eigen::MatrixXd& X,
                               Eigen::VectorXd& y, std::vector<int>& order,
                               double& y_min, double& y_max) {
    const int k = static_cast<int>(points.size());
    const int n = domain.dim();
    if (k < 1 || values.size() != points.size())
        throw InputError("fit: need k >= 1 observations with matching values");
    for (const auto& x : points)
        if (x.size() != n || !domain.contains(x, 1e-12))
            throw InputError("fit: observation outside the domain");

    // scale inputs to the unit cube; sort rows so the model is a function of
    // the observation multiset, not of its order
    order.resize(k);
    std::iota(order.begin(), order.end(), 0);
    std::vector<Eigen::VectorXd> scaled(k);
    for (int i = 0; i < k; ++i) scaled[i] = domain.to_unit(points[i]);
    std::stable_sort(order.begin(), order.end(), [&](int a, int b) {
        for (int d = 0; d < n; ++d) {
            if (scaled[a][d] < scaled[b][d]) return true;
            if (scaled[a][d] > scaled[b][d]) return false;
        }
        return values[a] < values[b];
    });

    X.resize(k, n);
    Eigen::VectorXd y_raw(k);
    for (int i = 0; i < k; ++i) {
        X.row(i) = scaled[order[i]];
        y_raw[i] = values[order[i]];
    }
    y_min = y_raw.minCoeff();
    y_max = y_raw.maxCoeff();
    y.resize(k);
    if (y_max > y_min)
        y = (y_raw.array() - y_min) / (y_max - y_min);
    else
        y.setConstant(0.5);  // constant data: center the scaled target
}

}  // namespace detail

// Builds the model at fixed hyperparameters (no likelihood maximization).
inline TrainedGP train_with_params(const std::vector<Eigen::VectorXd>& points,
                                   const std::vector<double>& values,
                                   const BoxDomain& domain,
                                   const KernelParams& params) {
    Eigen::MatrixXd X;
    Eigen::VectorXd y;
    std::vector<int> order;
    double y_min, y_max;
    detail::scale_observations(points, values, domain, X, y, order, y_min, y_max);
    detail::GpWorkspace ws;
    ws.init(X, y);
    Eigen::MatrixXd K, L;
    double jitter = 0.0;
    if (!detail::build_chol(ws, params, K, L, &jitter))
        throw FitError("train_with_params: kernel matrix not positive definite");
    Eigen::VectorXd alpha;
    detail::lml_from_chol(L, Eigen::VectorXd(y.array() - params.constant_mean),
                          &alpha);
    return TrainedGP(std::move(X), std::move(y), params, std::move(L),
                     std::move(alpha), domain, y_min, y_max, jitter);
}

// Fits hyperparameters by maximum likelihood: multi-start (one heuristic +
// seven seeded random starts in log10 bounds [-6, 6]) projected gradient
// ascent with analytic gradients, up to 200 iterations per start.
inline TrainedGP fit(const std::vector<Eigen::VectorXd>& points,
                     const std::vector<double>& values, const BoxDomain& domain,
                     std::uint64_t seed) {
    const int k = static_cast<int>(points.size());
    const int n = domain.dim();
    Eigen::MatrixXd X;
    Eigen::VectorXd y;
    std::vector<int> order;
    double y_min, y_max;
    detail::scale_observations(points, values, domain, X, y, order, y_min, y_max);

    detail::GpWorkspace ws;
    ws.init(X, y);
    detail::MleObjective obj{&ws};

    Eigen::VectorXd lo(n + 2), hi(n + 2);
    lo.head(n + 1).setConstant(-6.0);
    hi.head(n + 1).setConstant(6.0);
    lo[n + 1] = -5.0;
    hi[n + 1] = 5.0;

    const double y_var =
        k > 1 ? (y.array() - y.mean()).square().sum() / static_cast<double>(k - 1)
              : 0.0;
    Eigen::VectorXd theta0(n + 2);
    theta0[0] = std::log10(std::max(y_var, 1e-3));
    theta0.segment(1, n).setZero();  // unit inverse lengthscales
    theta0[n + 1] = y.mean();

    Rng rng(mix_seed(seed, 0x6d6c65ULL));
    double best_f = -std::numeric_limits<double>::infinity();
    Eigen::VectorXd best_theta = theta0.cwiseMax(lo).cwiseMin(hi);
    for (int s = 0; s < 8; ++s) {
        Eigen::VectorXd theta(n + 2);
        if (s == 0) {
            theta = best_theta;
        } else {
            for (int i = 0; i <= n; ++i) theta[i] = rng.uniform(-6.0, 6.0);
            theta[n + 1] = rng.uniform(0.0, 1.0);
        }
        const double f = detail::ascend(obj, theta, lo, hi, 200);
        if (f > best_f) {
            best_f = f;
            best_theta = theta;
        }
    }
    if (!std::isfinite(best_f)) {
        // every start failed to factorize; duplicates are the usual culprit
        std::string dup;
        for (int i = 0; i + 1 < k; ++i)
            if ((X.row(i + 1) - X.row(i)).lpNorm<Eigen::Infinity>() < 1e-12)
                dup += " (" + std::to_string(order[i]) + "," +
                       std::to_string(order[i + 1]) + ")";
        throw FitError(dup.empty()
                           ? std::string("fit: kernel matrix irrecoverably "
                                         "singular")
                           : "fit: duplicate observations at input indices" + dup);
    }

    const KernelParams params = obj.unpack(best_theta);
    Eigen::MatrixXd K, L;
    double jitter = 0.0;
    if (!detail::build_chol(ws, params, K, L, &jitter))
        throw FitError("fit: Cholesky failed at the selected hyperparameters");
    const Eigen::VectorXd resid = y.array() - params.constant_mean;
    Eigen::VectorXd alpha;
    detail::lml_from_chol(L, resid, &alpha);
    return TrainedGP(std::move(X), std::move(y), params, std::move(L),
                     std::move(alpha), domain, y_min, y_max, jitter);
}

inline TrainedGP fit(const std::pair<std::vector<Eigen::VectorXd>,
                                     std::vector<double>>& observations,
                     const BoxDomain& domain, std::uint64_t seed) {
    return fit(observations.first, observations.second, domain, seed);
}

}  // namespace pbo
