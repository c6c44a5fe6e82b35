#pragma once

#include <atomic>
#include <filesystem>
#include <fstream>
#include <map>
#include <mutex>
#include <set>
#include <string>
#include <thread>
#include <vector>

#include <json.hpp>

#include "pbo/bench.hpp"
#include "pbo/common.hpp"
#include "pbo/driver.hpp"
#include "pbo/record.hpp"

// Experiment-suite execution: a JSON file names the (benchmark, strategy, q)
// cells and the seeds; the runner executes every cell, skips ones whose
// record already exists unless forced, and writes a manifest at the end. Each
// cell is a pure function of its config and seed, so workers can run cells in
// any order without changing any output byte.

namespace pbo::io {

struct SuiteExperiment {
    std::string id;
    std::string benchmark;  // "name:dim"
    driver::Strategy strategy = driver::Strategy::NsmaF;
    int q = 3;
    int n_init = 10;
    int max_evals = 60;
    std::vector<std::int64_t> seeds;
    driver::StrategyParams params;
};

struct ExperimentSuite {
    std::string name;
    std::filesystem::path output_dir;
    int parallelism = 1;
    std::vector<SuiteExperiment> experiments;
};

namespace detail {

inline std::string sanitize(std::string s) {
    for (char& c : s)
        if (c == ':' || c == '/' || c == ' ') c = '_';
    return s;
}

inline void apply_params(const nlohmann::json& j, driver::StrategyParams& p) {
    if (j.contains("population")) p.population = j.at("population").get<int>();
    if (j.contains("moo_iters")) p.moo_iters = j.at("moo_iters").get<int>();
    if (j.contains("n_opt")) p.n_opt = j.at("n_opt").get<int>();
    if (j.contains("moo_starts")) p.moo_starts = j.at("moo_starts").get<int>();
    if (j.contains("mc_samples")) p.mc_samples = j.at("mc_samples").get<int>();
    if (j.contains("beta")) p.beta = j.at("beta").get<double>();
    if (j.contains("acq_starts")) p.acq_starts = j.at("acq_starts").get<int>();
    if (j.contains("acq_refine")) p.acq_refine = j.at("acq_refine").get<int>();
    if (j.contains("acq_maxiter")) p.acq_maxiter = j.at("acq_maxiter").get<int>();
}

inline std::vector<std::int64_t> parse_seeds(const nlohmann::json& j) {
    std::vector<std::int64_t> seeds;
    if (j.is_number_integer()) {
        for (std::int64_t s = 0; s < j.get<std::int64_t>(); ++s)
            seeds.push_back(s);
    } else if (j.is_array()) {
        for (const auto& v : j) seeds.push_back(v.get<std::int64_t>());
    } else {
        throw InputError("suite: 'seeds' must be a count or a list");
    }
    if (seeds.empty()) throw InputError("suite: empty seed list");
    return seeds;
}

}  // namespace detail

inline ExperimentSuite parse_suite_json(const nlohmann::json& j,
                                        const std::filesystem::path& base_dir) {
    ExperimentSuite suite;
    try {
        suite.name = j.at("name").get<std::string>();
        std::filesystem::path out = j.at("output_dir").get<std::string>();
        suite.output_dir = out.is_absolute() ? out : base_dir / out;
        if (j.contains("parallelism"))
            suite.parallelism = j.at("parallelism").get<int>();

        const auto parse_experiment = [&](const nlohmann::json& e,
                                          const std::string& fallback_id) {
            SuiteExperiment exp;
            exp.benchmark = e.at("benchmark").get<std::string>();
            exp.strategy =
                driver::parse_strategy(e.at("strategy").get<std::string>());
            if (e.contains("q")) exp.q = e.at("q").get<int>();
            if (e.contains("n_init")) exp.n_init = e.at("n_init").get<int>();
            if (e.contains("max_evals"))
                exp.max_evals = e.at("max_evals").get<int>();
            exp.seeds = detail::parse_seeds(e.at("seeds"));
            if (e.contains("params")) detail::apply_params(e.at("params"), exp.params);
            exp.id = e.contains("id") ? e.at("id").get<std::string>() : fallback_id;
            return exp;
        };

        if (j.contains("experiments"))
            for (const auto& e : j.at("experiments")) {
                const std::string fallback =
                    detail::sanitize(e.at("benchmark").get<std::string>()) + "__" +
                    e.at("strategy").get<std::string>();
                suite.experiments.push_back(parse_experiment(e, fallback));
            }

        // grid blocks expand to the cross product of their axes
        if (j.contains("grids"))
            for (const auto& g : j.at("grids")) {
                const auto seeds = detail::parse_seeds(g.at("seeds"));
                std::vector<int> qs;
                if (g.contains("q"))
                    for (const auto& v : g.at("q")) qs.push_back(v.get<int>());
                else
                    qs.push_back(3);
                for (const auto& bench_spec : g.at("benchmarks"))
                    for (const auto& strat : g.at("strategies"))
                        for (int q : qs) {
                            SuiteExperiment exp;
                            exp.benchmark = bench_spec.get<std::string>();
                            exp.strategy = driver::parse_strategy(
                                strat.get<std::string>());
                            exp.q = q;
                            if (g.contains("n_init"))
                                exp.n_init = g.at("n_init").get<int>();
                            if (g.contains("max_evals"))
                                exp.max_evals = g.at("max_evals").get<int>();
                            exp.seeds = seeds;
                            if (g.contains("params"))
                                detail::apply_params(g.at("params"), exp.params);
                            exp.id = detail::sanitize(exp.benchmark) + "__" +
                                     strat.get<std::string>() + "__q" +
                                     std::to_string(q);
                            suite.experiments.push_back(exp);
                        }
            }
    } catch (const nlohmann::json::exception& e) {
        throw InputError(std::string("suite: malformed field: ") + e.what());
    }

    if (suite.experiments.empty() && !j.contains("experiments") &&
        !j.contains("grids"))
        throw InputError("suite: no 'experiments' or 'grids' section");

    std::set<std::string> ids;
    for (const auto& e : suite.experiments) {
        if (!ids.insert(e.id).second)
            throw InputError("suite: duplicate experiment id '" + e.id + "'");
        bench::parse_benchmark(e.benchmark);  // validates name:dim early
    }
    return suite;
}

inline ExperimentSuite parse_suite(const std::filesystem::path& file) {
    std::ifstream in(file);
    if (!in) throw InputError("suite: cannot open " + file.string());
    nlohmann::json j;
    try {
        in >> j;
    } catch (const nlohmann::json::parse_error& e) {
        throw InputError("suite: JSON parse error in " + file.string() + ": " +
                         e.what());
    }
    return parse_suite_json(j, file.parent_path());
}

struct CellStatus {
    std::string experiment;
    std::int64_t seed = 0;
    std::string file;
    std::string status;  // "ok", "cached", "failed: <why>"
    double wall_time = 0.0;
};

struct SuiteRunResult {
    int executed = 0;
    int cached = 0;
    int failed = 0;
    std::vector<CellStatus> cells;
};

inline ResultRecord run_cell(const SuiteExperiment& exp, std::int64_t seed) {
    const bench::Benchmark b = bench::parse_benchmark(exp.benchmark);
    driver::ExperimentConfig cfg;
    cfg.benchmark = exp.benchmark;
    cfg.strategy = exp.strategy;
    cfg.q = exp.q;
    cfg.n_init = exp.n_init;
    cfg.max_evals = exp.max_evals;
    cfg.params = exp.params;

    const auto hist = driver::run_bayesopt(
        [&](const Eigen::VectorXd& x) { return bench::evaluate(b, x); }, b.domain,
        cfg, static_cast<std::uint64_t>(seed));

    ResultRecord rec;
    rec.experiment = exp.id;
    rec.strategy = driver::strategy_name(exp.strategy);
    rec.benchmark = exp.benchmark;
    rec.n = b.dimension;
    rec.q = exp.q;
    rec.seed = seed;
    rec.f_best_trace = hist.f_best_trace;
    rec.d_omega_trace = hist.d_omega_trace;
    rec.final_best = hist.incumbent_value;
    rec.nr_auc = driver::nr_auc_of_run(hist, bench::known_optimum(b));
    for (double w : hist.wall_times) rec.wall_time += w;
    return rec;
}

inline SuiteRunResult run_suite(const ExperimentSuite& suite, bool force,
                                int jobs_override = 0,
                                std::ostream* progress = nullptr) {
    namespace fs = std::filesystem;
    fs::create_directories(suite.output_dir);

    struct Cell {
        const SuiteExperiment* exp;
        std::int64_t seed;
    };
    std::vector<Cell> cells;
    for (const auto& exp : suite.experiments)
        for (std::int64_t seed : exp.seeds) cells.push_back({&exp, seed});

    SuiteRunResult result;
    result.cells.resize(cells.size());

    std::atomic<std::size_t> next{0};
    std::mutex io_mutex;
    const int jobs = std::max(1, jobs_override > 0 ? jobs_override
                                                   : suite.parallelism);
    const auto worker = [&]() {
        while (true) {
            const std::size_t i = next.fetch_add(1);
            if (i >= cells.size()) return;
            const auto& cell = cells[i];
            CellStatus st;
            st.experiment = cell.exp->id;
            st.seed = cell.seed;
            st.file = record_filename(cell.exp->id, cell.seed);
            const fs::path path = suite.output_dir / st.file;
            if (!force && fs::exists(path)) {
                st.status = "cached";
            } else {
                const auto t0 = std::chrono::steady_clock::now();
                try {
                    const ResultRecord rec = run_cell(*cell.exp, cell.seed);
                    write_atomic(path, record_to_json(rec).dump(2) + "\n");
                    st.status = "ok";
                } catch (const std::exception& e) {
                    st.status = std::string("failed: ") + e.what();
                }
                st.wall_time = std::chrono::duration<double>(
                                   std::chrono::steady_clock::now() - t0)
                                   .count();
            }
            result.cells[i] = st;
            if (progress != nullptr) {
                std::lock_guard<std::mutex> lock(io_mutex);
                (*progress) << st.file << ": " << st.status << "\n";
            }
        }
    };

    std::vector<std::thread> pool;
    for (int t = 0; t < jobs; ++t) pool.emplace_back(worker);
    for (auto& th : pool) th.join();

    nlohmann::json manifest;
    manifest["suite"] = suite.name;
    nlohmann::json jcells = nlohmann::json::array();
    for (const auto& st : result.cells) {
        if (st.status == "ok") ++result.executed;
        else if (st.status == "cached") ++result.cached;
        else ++result.failed;
        nlohmann::json c;
        c["experiment"] = st.experiment;
        c["seed"] = st.seed;
        c["file"] = st.file;
        c["status"] = st.status;
        c["wall_time"] = st.wall_time;
        jcells.push_back(c);
    }
    manifest["cells"] = jcells;
    write_atomic(suite.output_dir / "manifest.json", manifest.dump(2) + "\n");
    return result;
}

}  // namespace pbo::io
