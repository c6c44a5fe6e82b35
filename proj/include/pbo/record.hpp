#pragma once

#include <filesystem>
#include <fstream>
#include <string>
#include <vector>

#include <json.hpp>

#include "pbo/common.hpp"

// On-disk result format: one self-describing JSON record per (experiment,
// seed) cell. Record files contain only deterministic payload, so reruns with
// the same seeds are byte-identical; wall-clock timings live in the suite
// manifest instead.

namespace pbo::io {

struct ResultRecord {
    std::string experiment;
    std::string strategy;
    std::string benchmark;  // "name:dim"
    int n = 0;
    int q = 0;
    std::int64_t seed = 0;
    std::vector<double> f_best_trace;   // index j: best after j proposed evals
    std::vector<double> d_omega_trace;  // boundary-clearance running max
    double nr_auc = 0.0;
    double final_best = 0.0;
    double wall_time = 0.0;  // seconds; serialized via the manifest
};

inline nlohmann::json record_to_json(const ResultRecord& r) {
    nlohmann::json j;
    j["experiment"] = r.experiment;
    j["strategy"] = r.strategy;
    j["benchmark"] = r.benchmark;
    j["n"] = r.n;
    j["q"] = r.q;
    j["seed"] = r.seed;
    j["f_best_trace"] = r.f_best_trace;
    j["d_omega_trace"] = r.d_omega_trace;
    j["nr_auc"] = r.nr_auc;
    j["final_best"] = r.final_best;
    return j;
}

inline ResultRecord record_from_json(const nlohmann::json& j) {
    ResultRecord r;
    r.experiment = j.at("experiment").get<std::string>();
    r.strategy = j.at("strategy").get<std::string>();
    r.benchmark = j.at("benchmark").get<std::string>();
    r.n = j.at("n").get<int>();
    r.q = j.at("q").get<int>();
    r.seed = j.at("seed").get<std::int64_t>();
    r.f_best_trace = j.at("f_best_trace").get<std::vector<double>>();
    r.d_omega_trace = j.at("d_omega_trace").get<std::vector<double>>();
    r.nr_auc = j.at("nr_auc").get<double>();
    r.final_best = j.at("final_best").get<double>();
    return r;
}

// write-temp-then-rename so concurrent readers never see partial files
inline void write_atomic(const std::filesystem::path& path,
                         const std::string& contents) {
    const std::filesystem::path tmp = path.string() + ".tmp";
    {
        std::ofstream out(tmp, std::ios::binary | std::ios::trunc);
        if (!out) throw NumericError("cannot write " + tmp.string());
        out << contents;
    }
    std::filesystem::rename(tmp, path);
}

inline std::string record_filename(const std::string& experiment,
                                   std::int64_t seed) {
    return experiment + "__s" + std::to_string(seed) + ".json";
}

inline ResultRecord load_record(const std::filesystem::path& path) {
    std::ifstream in(path);
    if (!in) throw LookupError("cannot read record " + path.string());
    nlohmann::json j;
    in >> j;
    return record_from_json(j);
}

}  // namespace pbo::io
