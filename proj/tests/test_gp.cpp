#include <catch2/catch_amalgamated.hpp>

#include "helpers.hpp"
#include "pbo/bench.hpp"
#include "pbo/gp.hpp"

using namespace pbo;

namespace {

KernelParams unit_params(int n) {
    KernelParams p;
    p.output_scale = 1.0;
    p.inv_lengthscales = Eigen::VectorXd::Ones(n);
    p.constant_mean = 0.0;
    return p;
}

std::pair<std::vector<Eigen::VectorXd>, std::vector<double>> random_dataset(
    const BoxDomain& box, int k, Rng& rng) {
    std::vector<Eigen::VectorXd> xs = sample_uniform(box, k, rng);
    std::vector<double> ys;
    for (const auto& x : xs) ys.push_back(std::sin(3.0 * x.sum()) + 0.3 * x.norm());
    return {xs, ys};
}

}  // namespace

TEST_CASE("matern kernel closed form", "[gp]") {
    KernelParams p = unit_params(3);
    p.output_scale = 2.5;
    Eigen::VectorXd x(3);
    x << 0.2, -0.4, 1.1;
    REQUIRE(matern_kernel(x, x, p) == Catch::Approx(2.5));  // r = 0 gives a0

    Rng rng(5);
    for (int t = 0; t < 20; ++t) {
        Eigen::VectorXd a(3), b(3);
        for (int i = 0; i < 3; ++i) {
            a[i] = rng.uniform(-2, 2);
            b[i] = rng.uniform(-2, 2);
        }
        REQUIRE(matern_kernel(a, b, p) == matern_kernel(b, a, p));
        REQUIRE(matern_kernel(a, b, p) > 0.0);
    }

    // r = 1 with unit scales: (1 + sqrt5 + 5/3) exp(-sqrt5), high-precision
    KernelParams u = unit_params(1);
    Eigen::VectorXd x0(1), x1(1);
    x0 << 0.0;
    x1 << 1.0;
    REQUIRE(matern_kernel(x0, x1, u) ==
            Catch::Approx(0.52399410883182031).epsilon(1e-14));

    Eigen::VectorXd bad(3);
    bad << 1.0, std::numeric_limits<double>::infinity(), 0.0;
    REQUIRE_THROWS_AS(matern_kernel(bad, x, p), NumericError);
}

TEST_CASE("matern kernel gradient", "[gp]") {
    KernelParams p = unit_params(4);
    p.output_scale = 1.7;
    p.inv_lengthscales << 0.5, 2.0, 1.0, 3.0;

    Eigen::VectorXd x(4);
    x << 0.1, 0.2, 0.3, 0.4;
    REQUIRE(matern_kernel_gradient(x, x, p).norm() == 0.0);

    Rng rng(11);
    for (int t = 0; t < 10; ++t) {
        Eigen::VectorXd a(4), b(4);
        for (int i = 0; i < 4; ++i) {
            a[i] = rng.uniform(-1, 1);
            b[i] = rng.uniform(-1, 1);
        }
        const Eigen::VectorXd g = matern_kernel_gradient(a, b, p);
        const Eigen::VectorXd fd = testutil::central_diff(
            [&](const Eigen::VectorXd& v) { return matern_kernel(v, b, p); }, a);
        REQUIRE(testutil::rel_err(g, fd) < 1e-5);
        // k depends on x - y, so grad_x = -grad_y
        const Eigen::VectorXd gy = matern_kernel_gradient(b, a, p);
        REQUIRE((g + gy).norm() < 1e-12);
    }
}

TEST_CASE("log marginal likelihood", "[gp]") {
    // single point with y = mu: -(1/2) log(a0 + jitter) - (1/2) log 2 pi
    KernelParams p = unit_params(1);
    p.output_scale = 3.0;
    p.constant_mean = 0.4;
    Eigen::MatrixXd X(1, 1);
    X << 0.5;
    Eigen::VectorXd y(1);
    y << 0.4;
    const double jitter = 1e-8 * p.output_scale;
    const double expect = -0.5 * std::log(p.output_scale + jitter) -
                          0.5 * std::log(2.0 * std::numbers::pi);
    REQUIRE(log_marginal_likelihood(p, X, y) == Catch::Approx(expect).epsilon(1e-12));

    // dense-inverse oracle on k <= 10
    Rng rng(21);
    for (int trial = 0; trial < 5; ++trial) {
        const int k = 2 + static_cast<int>(rng.index(9));
        Eigen::MatrixXd Xr(k, 2);
        Eigen::VectorXd yr(k);
        for (int i = 0; i < k; ++i) {
            Xr(i, 0) = rng.u01();
            Xr(i, 1) = rng.u01();
            yr[i] = rng.uniform(-1, 1);
        }
        KernelParams pr = unit_params(2);
        pr.output_scale = 0.8;
        pr.inv_lengthscales << 4.0, 9.0;
        pr.constant_mean = 0.1;

        Eigen::MatrixXd K(k, k);
        for (int a = 0; a < k; ++a)
            for (int b = 0; b < k; ++b)
                K(a, b) = matern_kernel(Xr.row(a), Xr.row(b), pr);
        K.diagonal().array() += 1e-8 * pr.output_scale;
        const Eigen::VectorXd resid = yr.array() - pr.constant_mean;
        const double oracle =
            -0.5 * resid.dot(K.inverse() * resid) - 0.5 * std::log(K.determinant()) -
            0.5 * k * std::log(2.0 * std::numbers::pi);
        REQUIRE(log_marginal_likelihood(pr, Xr, yr) ==
                Catch::Approx(oracle).margin(1e-8));
    }

    // moving y away from mu can only lower the quadratic form
    Eigen::VectorXd y2(1);
    y2 << 1.9;
    REQUIRE(log_marginal_likelihood(p, X, y2) < log_marginal_likelihood(p, X, y));
}

TEST_CASE("fit interpolates and is deterministic", "[gp]") {
    const auto box = BoxDomain::cube(2, -1.0, 3.0);

    // single observation: posterior mean reproduces it after unscaling
    std::vector<Eigen::VectorXd> xs{Eigen::VectorXd::Zero(2)};
    std::vector<double> ys{2.5};
    const TrainedGP g1 = fit(xs, ys, box, 3);
    REQUIRE(g1.posterior_mean_unscaled(xs[0]) == Catch::Approx(2.5).margin(1e-9));

    Rng rng(17);
    auto [pts, vals] = random_dataset(box, 8, rng);
    const TrainedGP a = fit(pts, vals, box, 99);
    const TrainedGP b = fit(pts, vals, box, 99);
    REQUIRE(a.params().output_scale == b.params().output_scale);
    REQUIRE(a.params().inv_lengthscales == b.params().inv_lengthscales);
    REQUIRE(a.params().constant_mean == b.params().constant_mean);

    for (const auto& x : pts) {
        const Posterior post = a.posterior(x);
        REQUIRE(post.variance <= 1e-6 * a.params().output_scale);
    }
}

TEST_CASE("fitted likelihood beats random search", "[gp]") {
    const auto bench2 = bench::make_benchmark("rastrigin", 2);
    Rng rng(4);
    std::vector<Eigen::VectorXd> xs = sample_uniform(bench2.domain, 10, rng);
    std::vector<double> ys;
    for (const auto& x : xs) ys.push_back(bench::evaluate(bench2, x));

    const TrainedGP gp = fit(xs, ys, bench2.domain, 12);
    const double fitted = log_marginal_likelihood(
        gp.params(), gp.train_inputs_scaled(), gp.train_targets_scaled());

    Rng draw(5150);
    for (int t = 0; t < 100; ++t) {
        KernelParams p;
        p.output_scale = std::pow(10.0, draw.uniform(-6, 6));
        p.inv_lengthscales.resize(2);
        for (int i = 0; i < 2; ++i)
            p.inv_lengthscales[i] = std::pow(10.0, draw.uniform(-6, 6));
        p.constant_mean = draw.u01();
        double lml;
        try {
            lml = log_marginal_likelihood(p, gp.train_inputs_scaled(),
                                          gp.train_targets_scaled());
        } catch (const FitError&) {
            continue;
        }
        REQUIRE(fitted >= lml - 1e-9);
    }
}

TEST_CASE("fit is invariant to observation order", "[gp]") {
    const auto box = BoxDomain::cube(3, 0.0, 1.0);
    Rng rng(77);
    auto [pts, vals] = random_dataset(box, 7, rng);
    const TrainedGP a = fit(pts, vals, box, 31);

    std::vector<Eigen::VectorXd> rp(pts.rbegin(), pts.rend());
    std::vector<double> rv(vals.rbegin(), vals.rend());
    const TrainedGP b = fit(rp, rv, box, 31);

    Eigen::VectorXd probe(3);
    probe << 0.3, 0.6, 0.9;
    REQUIRE(std::abs(a.posterior(probe).mean - b.posterior(probe).mean) < 1e-10);
    REQUIRE(std::abs(a.posterior(probe).variance - b.posterior(probe).variance) <
            1e-10);
}

TEST_CASE("fit rejects irrecoverable duplicates by name", "[gp]") {
    const auto box = BoxDomain::cube(1, 0.0, 1.0);
    Eigen::VectorXd x(1);
    x << 0.25;
    std::vector<Eigen::VectorXd> xs{x, x};
    std::vector<double> ys{0.0, 1.0};  // same input, contradictory targets
    try {
        const TrainedGP gp = fit(xs, ys, box, 1);
        // jitter may absorb the duplicate; then the fit must still be sane
        REQUIRE(std::isfinite(gp.posterior(x).mean));
    } catch (const FitError& e) {
        REQUIRE(std::string(e.what()).find("duplicate") != std::string::npos);
    }
}

TEST_CASE("posterior matches the dense-inverse oracle", "[gp]") {
    const auto box = BoxDomain::cube(2, -2.0, 2.0);
    Rng rng(8);
    auto [pts, vals] = random_dataset(box, 6, rng);
    const TrainedGP gp = fit(pts, vals, box, 55);
    const testutil::DenseGpOracle oracle(gp);

    for (int t = 0; t < 25; ++t) {
        Eigen::VectorXd xs(2);
        xs << rng.u01(), rng.u01();
        const Posterior post = gp.posterior_scaled(xs);
        REQUIRE(post.mean == Catch::Approx(oracle.mean(xs)).margin(1e-8));
        REQUIRE(post.variance ==
                Catch::Approx(std::max(0.0, oracle.variance(xs))).margin(1e-8));
    }

    // prior reversion far from the data (fixed spiky hyperparameters)
    KernelParams p = unit_params(2);
    p.output_scale = 1.5;
    p.inv_lengthscales << 900.0, 900.0;
    p.constant_mean = 0.37;
    std::vector<Eigen::VectorXd> near;
    std::vector<double> nvals;
    for (int i = 0; i < 4; ++i) {
        Eigen::VectorXd v(2);
        v << -1.9 + 0.05 * i, -1.9;
        near.push_back(v);
        nvals.push_back(static_cast<double>(i));
    }
    const TrainedGP far_gp = train_with_params(near, nvals, box, p);
    Eigen::VectorXd corner(2);
    corner << 1.0, 1.0;  // scaled coordinates, far from the cluster near 0
    const Posterior post = far_gp.posterior_scaled(corner);
    REQUIRE(post.mean == Catch::Approx(p.constant_mean).margin(1e-3));
    REQUIRE(post.variance == Catch::Approx(p.output_scale).margin(1e-3));
}

TEST_CASE("two-point posterior against the hand-computed solve", "[gp]") {
    const auto box = BoxDomain::cube(1, 0.0, 1.0);
    Eigen::VectorXd x1(1), x2(1);
    x1 << 0.2;
    x2 << 0.7;
    std::vector<Eigen::VectorXd> xs{x1, x2};
    std::vector<double> ys{0.0, 1.0};  // min-max scaling keeps these values
    KernelParams p = unit_params(1);
    p.output_scale = 2.0;
    p.inv_lengthscales << 5.0;
    p.constant_mean = 0.25;
    const TrainedGP gp = train_with_params(xs, ys, box, p);

    const auto kf = [&](double a, double b) {
        Eigen::VectorXd va(1), vb(1);
        va << a;
        vb << b;
        return matern_kernel(va, vb, p);
    };
    const double jit = gp.jitter();
    const double k11 = kf(0.2, 0.2) + jit, k22 = kf(0.7, 0.7) + jit;
    const double k12 = kf(0.2, 0.7);
    const double det = k11 * k22 - k12 * k12;

    Eigen::VectorXd q(1);
    q << 0.4;
    const double kq1 = kf(0.4, 0.2), kq2 = kf(0.4, 0.7);
    const double r1 = 0.0 - 0.25, r2 = 1.0 - 0.25;
    // explicit 2x2 inverse: [[k22,-k12],[-k12,k11]] / det
    const double mean = 0.25 + (kq1 * (k22 * r1 - k12 * r2) +
                                kq2 * (-k12 * r1 + k11 * r2)) / det;
    const double var = kf(0.4, 0.4) - (kq1 * (k22 * kq1 - k12 * kq2) +
                                       kq2 * (-k12 * kq1 + k11 * kq2)) / det;

    const Posterior post = gp.posterior_scaled(q);
    REQUIRE(post.mean == Catch::Approx(mean).margin(1e-10));
    REQUIRE(post.variance == Catch::Approx(var).margin(1e-10));

    // unscaled mean is the affine image of the scaled one (y in {0,1} here)
    Eigen::VectorXd q_orig(1);
    q_orig << 0.4;
    REQUIRE(gp.posterior_mean_unscaled(q_orig) ==
            Catch::Approx(gp.y_min() + (gp.y_max() - gp.y_min()) * mean)
                .margin(1e-10));
}

TEST_CASE("degenerate constant targets", "[gp]") {
    const auto box = BoxDomain::cube(2, 0.0, 1.0);
    std::vector<Eigen::VectorXd> xs;
    std::vector<double> ys;
    Rng rng(6);
    for (int i = 0; i < 4; ++i) {
        xs.push_back(sample_uniform_one(box, rng));
        ys.push_back(7.25);
    }
    const TrainedGP gp = fit(xs, ys, box, 2);
    REQUIRE(gp.y_min() == gp.y_max());
    REQUIRE(gp.posterior_mean_unscaled(xs[0]) == Catch::Approx(7.25));
}

TEST_CASE("posterior covariance", "[gp]") {
    const auto box = BoxDomain::cube(2, 0.0, 4.0);
    Rng rng(13);
    auto [pts, vals] = random_dataset(box, 5, rng);
    const TrainedGP gp = fit(pts, vals, box, 42);

    // q = 1 equals the scalar variance
    Eigen::MatrixXd one(1, 2);
    one << 0.3, 0.8;
    REQUIRE(gp.posterior_cov_scaled(one)(0, 0) ==
            Catch::Approx(gp.posterior_scaled(one.row(0)).variance).margin(1e-12));

    // a repeated row gives an equal-entry 2x2 block
    Eigen::MatrixXd rep(2, 2);
    rep << 0.3, 0.8, 0.3, 0.8;
    const Eigen::MatrixXd S = gp.posterior_cov_scaled(rep);
    REQUIRE(S(0, 0) == Catch::Approx(S(0, 1)).margin(1e-10));
    REQUIRE(S(1, 1) == Catch::Approx(S(1, 0)).margin(1e-10));

    // symmetry and near-positive-semidefiniteness on random batches
    for (int t = 0; t < 5; ++t) {
        Eigen::MatrixXd Xq(3, 2);
        for (int i = 0; i < 3; ++i)
            for (int j = 0; j < 2; ++j) Xq(i, j) = rng.u01();
        const Eigen::MatrixXd Sq = gp.posterior_cov_scaled(Xq);
        REQUIRE((Sq - Sq.transpose()).lpNorm<Eigen::Infinity>() < 1e-10);
        const Eigen::SelfAdjointEigenSolver<Eigen::MatrixXd> es(Sq);
        REQUIRE(es.eigenvalues().minCoeff() > -1e-8);
    }

    // q = 2, k = 2 dense-inverse oracle
    std::vector<Eigen::VectorXd> two{pts[0], pts[1]};
    std::vector<double> twov{vals[0], vals[1]};
    const TrainedGP g2 = fit(two, twov, box, 5);
    const testutil::DenseGpOracle oracle(g2);
    Eigen::MatrixXd Xq(2, 2);
    Xq << 0.1, 0.9, 0.6, 0.2;
    const Eigen::MatrixXd Sq = g2.posterior_cov_scaled(Xq);
    const Eigen::Index k = g2.num_points();
    Eigen::MatrixXd C(k, 2);
    for (int a = 0; a < 2; ++a)
        for (Eigen::Index i = 0; i < k; ++i)
            C(i, a) = matern_kernel(Xq.row(a), g2.train_inputs_scaled().row(i),
                                    g2.params());
    Eigen::MatrixXd Kq(2, 2);
    for (int a = 0; a < 2; ++a)
        for (int b = 0; b < 2; ++b)
            Kq(a, b) = matern_kernel(Xq.row(a), Xq.row(b), g2.params());
    const Eigen::MatrixXd oracle_cov = Kq - C.transpose() * oracle.Kinv * C;
    REQUIRE((Sq - oracle_cov).lpNorm<Eigen::Infinity>() < 1e-8);
}

TEST_CASE("posterior gradients", "[gp]") {
    const auto box = BoxDomain::cube(2, -1.0, 1.0);
    Rng rng(23);
    auto [pts, vals] = random_dataset(box, 7, rng);
    const TrainedGP gp = fit(pts, vals, box, 9);

    for (int t = 0; t < 30; ++t) {
        Eigen::VectorXd xs(2);
        xs << 0.02 + 0.96 * rng.u01(), 0.02 + 0.96 * rng.u01();
        const auto [gm, gv] = gp.posterior_gradients_scaled(xs);
        const Eigen::VectorXd fdm = testutil::central_diff(
            [&](const Eigen::VectorXd& v) { return gp.posterior_scaled(v).mean; },
            xs);
        const Eigen::VectorXd fdv = testutil::central_diff(
            [&](const Eigen::VectorXd& v) {
                return gp.posterior_scaled(v).variance;
            },
            xs);
        REQUIRE(testutil::rel_err(gm, fdm) < 1e-4);
        REQUIRE(testutil::rel_err(gv, fdv) < 1e-4);
    }

    // variance attains its minimum at a training point
    const Eigen::VectorXd xt = gp.train_inputs_scaled().row(0);
    REQUIRE(gp.posterior_gradients_scaled(xt).second.norm() < 1e-6);
}

TEST_CASE("mean gradient vanishes at a grid-located interior minimum", "[gp]") {
    const auto box = BoxDomain::cube(1, 0.0, 1.0);
    std::vector<Eigen::VectorXd> xs;
    std::vector<double> ys;
    for (double v : {0.05, 0.3, 0.5, 0.75, 0.95}) {
        Eigen::VectorXd x(1);
        x << v;
        xs.push_back(x);
        ys.push_back(std::cos(6.0 * v));
    }
    const TrainedGP gp = fit(xs, ys, box, 70);

    // dense grid, then bisection refinement of the bracketed interior minimum
    const auto mean_at = [&](double v) {
        Eigen::VectorXd x(1);
        x << v;
        return gp.posterior_scaled(x).mean;
    };
    const int G = 10000;
    int best = -1;
    for (int i = 1; i + 1 < G; ++i) {
        const double m = mean_at(i / double(G - 1));
        if (m < mean_at((i - 1) / double(G - 1)) &&
            m < mean_at((i + 1) / double(G - 1))) {
            best = i;
            break;
        }
    }
    REQUIRE(best > 0);
    double a = (best - 1) / double(G - 1), b = (best + 1) / double(G - 1);
    for (int it = 0; it < 60; ++it) {
        const double m1 = a + (b - a) / 3.0, m2 = b - (b - a) / 3.0;
        if (mean_at(m1) < mean_at(m2)) b = m2;
        else a = m1;
    }
    Eigen::VectorXd xmin(1);
    xmin << 0.5 * (a + b);
    REQUIRE(std::abs(gp.posterior_gradients_scaled(xmin).first[0]) < 1e-3);
}
