#include <catch2/catch_amalgamated.hpp>

#include "helpers.hpp"
#include "pbo/bench.hpp"
#include "pbo/driver.hpp"
#include "pbo/metrics.hpp"
#include "pbo/normal.hpp"

using namespace pbo;

namespace {

// tiny strategy settings so the full loop stays fast in unit tests
driver::StrategyParams tiny_params() {
    driver::StrategyParams p;
    p.population = 16;
    p.moo_iters = 3;
    p.n_opt = 2;
    p.moo_starts = 16;
    p.mc_samples = 64;
    p.acq_starts = 8;
    p.acq_refine = 2;
    p.acq_maxiter = 15;
    return p;
}

driver::ExperimentConfig tiny_config(driver::Strategy s) {
    driver::ExperimentConfig cfg;
    cfg.benchmark = "rastrigin:2";
    cfg.strategy = s;
    cfg.q = 2;
    cfg.n_init = 4;
    cfg.max_evals = 4;
    cfg.params = tiny_params();
    return cfg;
}

}  // namespace

TEST_CASE("normalized regret arithmetic", "[metrics]") {
    const std::vector<double> trace{10.0, 6.0, 4.0};
    const auto nr = metrics::normalized_regret(trace, 2.0);
    REQUIRE(nr[0] == Catch::Approx(1.0));
    REQUIRE(nr[1] == Catch::Approx(0.5));
    REQUIRE(nr[2] == Catch::Approx(0.25));

    EventLog log;
    const auto degenerate = metrics::normalized_regret({5.0, 5.0}, 5.0, &log);
    REQUIRE(degenerate == std::vector<double>{0.0, 0.0});
    REQUIRE_FALSE(log.empty());
}

TEST_CASE("NR-AUC trapezoid", "[metrics]") {
    REQUIRE(metrics::nr_auc({1.0, 0.5, 0.25}, {0.0, 30.0, 60.0}) ==
            Catch::Approx(33.75));
    REQUIRE(metrics::nr_auc({1.0, 1.0}, {0.0, 60.0}) == Catch::Approx(60.0));
    REQUIRE(metrics::nr_auc({0.0, 0.0}, {0.0, 60.0}) == Catch::Approx(0.0));
}

TEST_CASE("confidence interval", "[metrics]") {
    const auto same = metrics::confidence_interval({3.0, 3.0, 3.0});
    REQUIRE(same.first == Catch::Approx(3.0));
    REQUIRE(same.second == Catch::Approx(3.0));

    const auto two = metrics::confidence_interval({0.0, 2.0});
    REQUIRE(two.first == Catch::Approx(1.0 - 1.96));
    REQUIRE(two.second == Catch::Approx(1.0 + 1.96));

    Rng rng(4);
    std::vector<double> vals;
    for (int i = 0; i < 9; ++i) vals.push_back(rng.uniform(-3, 5));
    const auto ci = metrics::confidence_interval(vals);
    double mean = 0;
    for (double v : vals) mean += v;
    mean /= vals.size();
    REQUIRE(ci.first <= mean);
    REQUIRE(mean <= ci.second);

    EventLog log;
    const auto single = metrics::confidence_interval({1.5}, &log);
    REQUIRE(single.first == 1.5);
    REQUIRE_FALSE(log.empty());
}

TEST_CASE("relative gap distributions", "[metrics]") {
    // single solver: curve identically one
    std::map<std::string, std::map<std::string, double>> solo{
        {"a", {{"p1", 3.0}, {"p2", 1.0}}}};
    const auto curves = metrics::relative_gap_distribution(solo);
    REQUIRE(metrics::gap_curve_fraction(curves[0], 0.0) == 1.0);

    // two solvers, scores (1, 2): gaps (0, 1)
    std::map<std::string, std::map<std::string, double>> duo{
        {"a", {{"p", 1.0}}}, {"b", {{"p", 2.0}}}};
    const auto c2 = metrics::relative_gap_distribution(duo);
    REQUIRE(c2[0].gaps == std::vector<double>{0.0});
    REQUIRE(c2[1].gaps == std::vector<double>{1.0});
    REQUIRE(metrics::gap_curve_fraction(c2[1], 0.5) == 0.0);
    REQUIRE(metrics::gap_curve_fraction(c2[1], 1.0) == 1.0);

    // synthetic 3-solver 4-problem table vs hand enumeration
    std::map<std::string, std::map<std::string, double>> table{
        {"s1", {{"p1", 1.0}, {"p2", 4.0}, {"p3", 2.0}, {"p4", 8.0}}},
        {"s2", {{"p1", 2.0}, {"p2", 2.0}, {"p3", 2.0}, {"p4", 4.0}}},
        {"s3", {{"p1", 4.0}, {"p2", 6.0}, {"p3", 4.0}, {"p4", 2.0}}}};
    const auto c3 = metrics::relative_gap_distribution(table);
    // s1 gaps: 0, 1, 0, 3 ; s2 gaps: 1, 0, 0, 1 ; s3 gaps: 3, 2, 1, 0
    REQUIRE(c3[0].gaps == std::vector<double>{0.0, 0.0, 1.0, 3.0});
    REQUIRE(c3[1].gaps == std::vector<double>{0.0, 0.0, 1.0, 1.0});
    REQUIRE(c3[2].gaps == std::vector<double>{0.0, 1.0, 2.0, 3.0});
    REQUIRE(metrics::gap_curve_fraction(c3[0], 0.0) == Catch::Approx(0.5));

    // a problem missing one solver's score is dropped everywhere
    table["s3"].erase("p4");
    EventLog log;
    const auto dropped = metrics::relative_gap_distribution(table, &log);
    REQUIRE(dropped[0].gaps.size() == 3);
    REQUIRE_FALSE(log.empty());
}

TEST_CASE("boundary clearance trace in a run", "[driver]") {
    const auto bench = bench::make_benchmark("rastrigin", 2);
    const auto cfg = tiny_config(driver::Strategy::NsmaX);
    const auto hist = driver::run_bayesopt(
        [&](const Eigen::VectorXd& x) { return bench::evaluate(bench, x); },
        bench.domain, cfg, 3);
    REQUIRE(hist.d_omega_trace.size() == static_cast<std::size_t>(cfg.max_evals) + 1);
    REQUIRE(hist.d_omega_trace[0] == 0.0);
    for (std::size_t i = 1; i < hist.d_omega_trace.size(); ++i)
        REQUIRE(hist.d_omega_trace[i] >= hist.d_omega_trace[i - 1]);

    // the clearance definition itself
    REQUIRE(BoxDomain::cube(2, 0.0, 1.0).clearance(Eigen::VectorXd::Constant(2, 0.5)) ==
            Catch::Approx(0.5));
}

TEST_CASE("run history bookkeeping", "[driver]") {
    const auto bench = bench::make_benchmark("sixhumpcamel", 2);
    auto cfg = tiny_config(driver::Strategy::Qei);
    cfg.benchmark = "sixhumpcamel:2";
    cfg.max_evals = 5;  // forces a truncated final batch (5 = 2 + 2 + 1)

    int calls = 0;
    const auto hist = driver::run_bayesopt(
        [&](const Eigen::VectorXd& x) {
            ++calls;
            return bench::evaluate(bench, x);
        },
        bench.domain, cfg, 11);

    REQUIRE(calls == cfg.n_init + cfg.max_evals);
    REQUIRE(hist.evaluations.size() ==
            static_cast<std::size_t>(cfg.n_init + cfg.max_evals));
    REQUIRE(hist.f_best_trace.size() == static_cast<std::size_t>(cfg.max_evals) + 1);
    for (std::size_t i = 1; i < hist.f_best_trace.size(); ++i)
        REQUIRE(hist.f_best_trace[i] <= hist.f_best_trace[i - 1]);

    double best = std::numeric_limits<double>::infinity();
    for (const auto& ev : hist.evaluations) {
        REQUIRE(bench.domain.contains(ev.x));
        best = std::min(best, ev.f);
    }
    REQUIRE(hist.incumbent_value == best);
    REQUIRE(bench::evaluate(bench, hist.incumbent) == best);

    // zero-budget loop: only the initial design is evaluated
    auto cfg0 = cfg;
    cfg0.max_evals = 0;
    const auto h0 = driver::run_bayesopt(
        [&](const Eigen::VectorXd& x) { return bench::evaluate(bench, x); },
        bench.domain, cfg0, 11);
    REQUIRE(h0.evaluations.size() == static_cast<std::size_t>(cfg.n_init));
    REQUIRE(h0.f_best_trace.size() == 1);
}

TEST_CASE("runs are bit-identical for a fixed seed", "[driver]") {
    const auto bench = bench::make_benchmark("branin", 2);
    for (auto strategy : {driver::Strategy::NsmaF, driver::Strategy::Nsga2X,
                          driver::Strategy::Qlcb}) {
        auto cfg = tiny_config(strategy);
        cfg.benchmark = "branin:2";
        const auto f = [&](const Eigen::VectorXd& x) {
            return bench::evaluate(bench, x);
        };
        const auto a = driver::run_bayesopt(f, bench.domain, cfg, 7);
        const auto b = driver::run_bayesopt(f, bench.domain, cfg, 7);
        REQUIRE(a.evaluations.size() == b.evaluations.size());
        for (std::size_t i = 0; i < a.evaluations.size(); ++i) {
            REQUIRE(a.evaluations[i].x == b.evaluations[i].x);
            REQUIRE(a.evaluations[i].f == b.evaluations[i].f);
        }
    }
}

TEST_CASE("strategy dispatch produces valid batches", "[driver]") {
    const auto bench = bench::make_benchmark("styblinskitang", 2);
    Rng rng(5);
    std::vector<Eigen::VectorXd> xs = sample_uniform(bench.domain, 8, rng);
    std::vector<double> ys;
    for (const auto& x : xs) ys.push_back(bench::evaluate(bench, x));
    const TrainedGP gp = fit(xs, ys, bench.domain, 13);

    const auto params = tiny_params();
    for (auto strategy :
         {driver::Strategy::NsmaX, driver::Strategy::NsmaF, driver::Strategy::Nsga2X,
          driver::Strategy::Nsga2F, driver::Strategy::Qei, driver::Strategy::Qlcb}) {
        const auto batch = driver::dispatch_strategy(strategy, gp, 3, 99, params);
        REQUIRE(batch.rows() == 3);
        for (int i = 0; i < 3; ++i) {
            REQUIRE(bench.domain.contains(batch.row(i), 1e-12));
            for (int j = i + 1; j < 3; ++j)
                REQUIRE((batch.row(i) - batch.row(j)).norm() > 1e-12);
        }
        const auto batch2 = driver::dispatch_strategy(strategy, gp, 3, 99, params);
        REQUIRE(batch == batch2);
    }
}

TEST_CASE("single-proposal q-EI lands on the EI argmax", "[driver]") {
    // 1-D model with a clean EI basin
    const auto box = BoxDomain::cube(1, 0.0, 1.0);
    std::vector<Eigen::VectorXd> xs;
    std::vector<double> ys;
    for (double v : {0.05, 0.2, 0.4, 0.55, 0.75, 0.95}) {
        Eigen::VectorXd x(1);
        x << v;
        xs.push_back(x);
        ys.push_back((v - 0.6) * (v - 0.6) + 0.3 * v);
    }
    const TrainedGP gp = fit(xs, ys, box, 61);

    driver::StrategyParams params;
    params.mc_samples = 512;
    params.acq_starts = 100;
    params.acq_refine = 10;
    params.acq_maxiter = 100;
    const auto batch =
        driver::dispatch_strategy(driver::Strategy::Qei, gp, 1, 123, params);

    const double fb = gp.best_scaled();
    double best_v = -1.0, best_x = 0.0;
    for (int i = 0; i < 10000; ++i) {
        Eigen::VectorXd x(1);
        x << i / 9999.0;
        const double v = acq::ei_scaled(gp, x, fb);
        if (v > best_v) {
            best_v = v;
            best_x = i / 9999.0;
        }
    }
    REQUIRE(std::abs(batch(0, 0) - best_x) < 1e-3);
}

TEST_CASE("full loop beats random search on rastrigin", "[driver]") {
    const auto bench = bench::make_benchmark("rastrigin", 2);
    const auto f = [&](const Eigen::VectorXd& x) {
        return bench::evaluate(bench, x);
    };

    driver::ExperimentConfig cfg;
    cfg.benchmark = "rastrigin:2";
    cfg.strategy = driver::Strategy::NsmaF;
    cfg.q = 3;
    cfg.n_init = 6;
    cfg.max_evals = 18;
    cfg.params = tiny_params();
    cfg.params.population = 40;
    cfg.params.moo_iters = 8;
    cfg.params.moo_starts = 40;

    int wins = 0;
    const int seeds = 5;
    for (std::uint64_t seed = 0; seed < seeds; ++seed) {
        const auto hist = driver::run_bayesopt(f, bench.domain, cfg, seed);
        // paired random-search baseline with the identical total budget
        Rng rng(mix_seed(seed, 0xba5eULL));
        double rs_best = std::numeric_limits<double>::infinity();
        for (int i = 0; i < cfg.n_init + cfg.max_evals; ++i)
            rs_best = std::min(rs_best, f(sample_uniform_one(bench.domain, rng)));
        if (hist.incumbent_value < rs_best) ++wins;
    }
    REQUIRE(wins >= 3);
}
