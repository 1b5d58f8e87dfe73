#include "brscn/bench.hpp"

#include <algorithm>
#include <chrono>
#include <cmath>
#include <fstream>
#include <numeric>
#include <set>
#include <sstream>

#include "json.hpp"

#include "brscn/errors.hpp"

namespace brscn {

using nlohmann::json;

namespace {

std::string lower(std::string s) {
    std::transform(s.begin(), s.end(), s.begin(), [](unsigned char c) { return static_cast<char>(std::tolower(c)); });
    return s;
}

}  // namespace

std::string to_string(ModelKind k) {
    switch (k) {
        case ModelKind::ESN: return "ESN";
        case ModelKind::RSCN: return "RSCN";
        case ModelKind::BRSCN: return "BRSCN";
    }
    return "unknown";
}

ModelKind model_kind_from_string(const std::string& name) {
    const std::string n = lower(name);
    if (n == "esn") return ModelKind::ESN;
    if (n == "rscn") return ModelKind::RSCN;
    if (n == "brscn") return ModelKind::BRSCN;
    throw InvalidArgument("unknown model kind '" + name + "'");
}

TaskKind task_kind_from_string(const std::string& name) {
    const std::string n = lower(name);
    if (n == "mg") return TaskKind::MG;
    if (n == "mg1") return TaskKind::MG1;
    if (n == "mg2") return TaskKind::MG2;
    if (n == "plant") return TaskKind::Plant;
    if (n == "csv") return TaskKind::Csv;
    throw InvalidArgument("unknown task '" + name + "'");
}

Splits make_splits(const Task& task, std::uint64_t seed) {
    switch (task.kind) {
        case TaskKind::MG:
        case TaskKind::MG1:
        case TaskKind::MG2: {
            MGConfig mg;
            mg.seed = seed;
            const MGVariant v = task.kind == TaskKind::MG ? MGVariant::MG
                                : task.kind == TaskKind::MG1 ? MGVariant::MG1
                                                             : MGVariant::MG2;
            return build_mg_task(gen_mackey_glass(mg), v);
        }
        case TaskKind::Plant: return gen_plant(seed);
        case TaskKind::Csv: return task.fixed;
    }
    throw InvalidArgument("unknown task");
}

std::pair<double, double> mean_std(const std::vector<double>& v) {
    if (v.empty()) return {0.0, 0.0};
    const double mean = std::accumulate(v.begin(), v.end(), 0.0) / static_cast<double>(v.size());
    if (v.size() == 1) return {mean, 0.0};
    double ss = 0.0;
    for (double x : v) ss += (x - mean) * (x - mean);
    return {mean, std::sqrt(ss / static_cast<double>(v.size() - 1))};
}

namespace {

struct Fitted {
    BlockModel model;
    ConvergenceLog log;
};

Fitted fit(ModelKind kind, const Splits& s, const TrainConfig& cfg, Eigen::Index esn_nodes) {
    switch (kind) {
        case ModelKind::ESN: return {train_esn(s.train, cfg, esn_nodes), {}};
        case ModelKind::RSCN: {
            auto r = train_rscn(s.train, s.val, cfg);
            return {std::move(r.model), std::move(r.log)};
        }
        case ModelKind::BRSCN: {
            auto r = train_brscn(s.train, s.val, cfg);
            return {std::move(r.model), std::move(r.log)};
        }
    }
    throw InvalidArgument("unknown model kind");
}

double score(const BlockModel& m, const Dataset& d) {
    return nrmse(predict(m, d.u, d.washout), d.scored_targets());
}

}  // namespace

TrialRun run_trials(const Task& task, ModelKind kind, const TrainConfig& cfg, long trials, std::uint64_t base_seed,
                    Eigen::Index esn_nodes) {
    if (trials < 1) throw InvalidArgument("run_trials: trials must be >= 1");
    TrialRun run;
    std::vector<double> train_err, test_err, times, nodes;
    for (long i = 0; i < trials; ++i) {
        const std::uint64_t seed = base_seed + static_cast<std::uint64_t>(i);
        const Splits splits = make_splits(task, seed);
        TrainConfig c = cfg;
        c.base_seed = seed;

        const auto start = std::chrono::steady_clock::now();
        Fitted f = fit(kind, splits, c, esn_nodes);
        const double elapsed = std::chrono::duration<double>(std::chrono::steady_clock::now() - start).count();

        TrialOutcome o;
        o.seed = seed;
        o.train_nrmse = score(f.model, splits.train);
        o.val_nrmse = score(f.model, splits.val);
        o.test_nrmse = score(f.model, splits.test);
        o.train_time = elapsed;
        o.total_nodes = f.model.state_dim();
        o.log = std::move(f.log);
        train_err.push_back(o.train_nrmse);
        test_err.push_back(o.test_nrmse);
        times.push_back(o.train_time);
        nodes.push_back(static_cast<double>(o.total_nodes));
        run.outcomes.push_back(std::move(o));
    }
    TrialReport& r = run.report;
    r.model_kind = kind;
    r.n_sub = kind == ModelKind::BRSCN ? cfg.n_sub : 1;
    r.reservoir_size = std::lround(mean_std(nodes).first);
    r.trials = trials;
    std::tie(r.train_nrmse_mean, r.train_nrmse_std) = mean_std(train_err);
    std::tie(r.test_nrmse_mean, r.test_nrmse_std) = mean_std(test_err);
    std::tie(r.train_time_mean, r.train_time_std) = mean_std(times);
    return run;
}

GridResult grid_search(const Task& task, ModelKind kind, const TrainConfig& cfg, const std::string& param,
                       const std::vector<double>& values, long trials_per_point, std::uint64_t base_seed,
                       Eigen::Index esn_nodes) {
    if (values.empty()) throw InvalidArgument("grid_search: empty value list");
    if (param != "nsub" && param != "nodes") throw InvalidArgument("grid_search: param must be nsub or nodes");
    GridResult out;
    out.param = param;
    for (double v : values) {
        if (!(v >= 1.0) || v != std::floor(v)) throw InvalidArgument("grid_search: values must be positive integers");
        TrainConfig c = cfg;
        Eigen::Index nodes = esn_nodes;
        const auto iv = static_cast<long>(v);
        if (param == "nsub") {
            c.n_sub = static_cast<int>(iv);
        } else if (kind == ModelKind::ESN) {
            nodes = iv;
        } else {
            c.j_max = static_cast<int>(std::max<long>(c.j_step + 1, (iv + c.n_sub - 1) / c.n_sub));
        }
        const TrialRun run = run_trials(task, kind, c, trials_per_point, base_seed, nodes);
        std::vector<double> val;
        for (const auto& o : run.outcomes) val.push_back(o.val_nrmse);
        out.curve.emplace_back(v, mean_std(val).first);
    }
    auto best = out.curve.begin();
    for (auto it = out.curve.begin(); it != out.curve.end(); ++it)
        if (it->second < best->second || (it->second == best->second && it->first < best->first)) best = it;
    out.chosen = best->first;
    return out;
}

std::string report_to_json(const TrialReport& r) {
    json j{{"model_kind", to_string(r.model_kind)},
           {"n_sub", r.n_sub},
           {"reservoir_size", r.reservoir_size},
           {"trials", r.trials},
           {"train_nrmse_mean", r.train_nrmse_mean},
           {"train_nrmse_std", r.train_nrmse_std},
           {"test_nrmse_mean", r.test_nrmse_mean},
           {"test_nrmse_std", r.test_nrmse_std},
           {"train_time_mean", r.train_time_mean},
           {"train_time_std", r.train_time_std}};
    return j.dump(2);
}

TrialReport report_from_json(const std::string& text) {
    TrialReport r;
    try {
        const json j = json::parse(text);
        r.model_kind = model_kind_from_string(j.at("model_kind").get<std::string>());
        j.at("n_sub").get_to(r.n_sub);
        j.at("reservoir_size").get_to(r.reservoir_size);
        j.at("trials").get_to(r.trials);
        j.at("train_nrmse_mean").get_to(r.train_nrmse_mean);
        j.at("train_nrmse_std").get_to(r.train_nrmse_std);
        j.at("test_nrmse_mean").get_to(r.test_nrmse_mean);
        j.at("test_nrmse_std").get_to(r.test_nrmse_std);
        j.at("train_time_mean").get_to(r.train_time_mean);
        j.at("train_time_std").get_to(r.train_time_std);
    } catch (const json::exception& e) {
        throw ParseError(std::string("report: ") + e.what());
    }
    return r;
}

void emit_report(const TrialReport& r, const std::string& path) {
    std::ofstream out(path);
    if (!out) throw IoError("cannot open '" + path + "' for writing");
    out << report_to_json(r) << '\n';
    if (!out) throw IoError("failed writing '" + path + "'");
}

void emit_grid(const GridResult& g, const std::string& path) {
    std::ofstream out(path);
    if (!out) throw IoError("cannot open '" + path + "' for writing");
    out.precision(17);
    out << "param_value,val_nrmse_mean\n";
    for (const auto& [v, m] : g.curve) out << v << ',' << m << '\n';
    if (!out) throw IoError("failed writing '" + path + "'");
}

}  // namespace brscn
