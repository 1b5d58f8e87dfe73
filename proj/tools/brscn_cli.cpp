// Command-line front end: data generation, training, evaluation, benchmarks
// and online adaptation.

#include <filesystem>
#include <iomanip>
#include <iostream>
#include <optional>
#include <sstream>
#include <string>
#include <vector>

#include "CLI11.hpp"

#include "brscn/bench.hpp"
#include "brscn/builder.hpp"
#include "brscn/data.hpp"
#include "brscn/errors.hpp"
#include "brscn/online.hpp"
#include "brscn/reservoir.hpp"

namespace fs = std::filesystem;
using namespace brscn;

namespace {

TrainConfig config_or_default(const std::string& path) {
    return path.empty() ? TrainConfig{} : load_config(path);
}

void write_splits(const Splits& s, const std::string& dir) {
    std::error_code ec;
    fs::create_directories(dir, ec);
    if (ec) throw IoError("cannot create directory '" + dir + "': " + ec.message());
    write_csv(s.train, (fs::path(dir) / "train.csv").string());
    write_csv(s.val, (fs::path(dir) / "val.csv").string());
    write_csv(s.test, (fs::path(dir) / "test.csv").string());
}

std::vector<double> parse_values(const std::string& text) {
    std::vector<double> out;
    std::stringstream ss(text);
    std::string item;
    while (std::getline(ss, item, ',')) {
        try {
            std::size_t used = 0;
            out.push_back(std::stod(item, &used));
            if (used != item.size()) throw std::invalid_argument(item);
        } catch (const std::exception&) {
            throw InvalidArgument("--values: '" + item + "' is not a number");
        }
    }
    if (out.empty()) throw InvalidArgument("--values: empty list");
    return out;
}

struct TaskArgs {
    std::string task = "mg";
    std::string train, val, test;
};

Task make_task(const TaskArgs& a, const TrainConfig& cfg) {
    Task t;
    t.kind = task_kind_from_string(a.task);
    if (t.kind == TaskKind::Csv) {
        if (a.train.empty() || a.val.empty() || a.test.empty())
            throw InvalidArgument("--task csv needs --train, --val and --test");
        t.fixed.train = load_csv(a.train, cfg.washout);
        t.fixed.val = load_csv(a.val, cfg.washout);
        t.fixed.test = load_csv(a.test, cfg.washout);
    }
    return t;
}

void add_task_options(CLI::App* cmd, TaskArgs& a) {
    cmd->add_option("--task", a.task, "mg|mg1|mg2|plant|csv")->required();
    cmd->add_option("--train", a.train, "training CSV (csv task)");
    cmd->add_option("--val", a.val, "validation CSV (csv task)");
    cmd->add_option("--test", a.test, "test CSV (csv task)");
}

}  // namespace

int main(int argc, char** argv) {
    CLI::App app{"Block recurrent stochastic configuration networks"};
    app.require_subcommand(1);

    // gen
    auto* gen = app.add_subcommand("gen", "generate benchmark splits as CSV");
    gen->require_subcommand(1);
    std::string variant = "mg", out_dir;
    std::uint64_t gen_seed = 1;
    auto* gen_mg = gen->add_subcommand("mg", "Mackey-Glass task");
    gen_mg->add_option("--variant", variant, "mg|mg1|mg2");
    gen_mg->add_option("--seed", gen_seed);
    gen_mg->add_option("--out", out_dir)->required();
    auto* plant_cmd = gen->add_subcommand("plant", "nonlinear plant task");
    plant_cmd->add_option("--seed", gen_seed);
    plant_cmd->add_option("--out", out_dir)->required();

    // train
    auto* train = app.add_subcommand("train", "train a model");
    std::string model_kind, config_path, train_path, val_path, model_out, log_path;
    long esn_nodes = 96;
    train->add_option("--model", model_kind, "esn|rscn|brscn")->required();
    train->add_option("--config", config_path, "TrainConfig JSON");
    train->add_option("--train", train_path)->required();
    train->add_option("--val", val_path)->required();
    train->add_option("--out", model_out)->required();
    train->add_option("--log", log_path, "convergence CSV");
    train->add_option("--nodes", esn_nodes, "ESN reservoir size");

    // eval
    auto* eval = app.add_subcommand("eval", "print the NRMSE of a model on a CSV");
    std::string eval_model, eval_data;
    eval->add_option("--model", eval_model)->required();
    eval->add_option("--data", eval_data)->required();

    // bench
    auto* bench = app.add_subcommand("bench", "repeated seeded trials");
    TaskArgs bench_task;
    std::string bench_model = "brscn", bench_config, bench_out;
    long trials = 20;
    std::uint64_t bench_seed = 1;
    add_task_options(bench, bench_task);
    bench->add_option("--model", bench_model, "esn|rscn|brscn");
    bench->add_option("--config", bench_config);
    bench->add_option("--trials", trials);
    bench->add_option("--seed", bench_seed);
    bench->add_option("--out", bench_out)->required();
    bench->add_option("--nodes", esn_nodes, "ESN reservoir size");

    // gridsearch
    auto* grid = app.add_subcommand("gridsearch", "sweep block size or reservoir size");
    TaskArgs grid_task;
    std::string param, values_text, grid_model = "brscn", grid_config, grid_out;
    long per_point = 5;
    std::uint64_t grid_seed = 1;
    add_task_options(grid, grid_task);
    grid->add_option("--param", param, "nsub|nodes")->required();
    grid->add_option("--values", values_text, "comma-separated values")->required();
    grid->add_option("--model", grid_model, "esn|rscn|brscn");
    grid->add_option("--config", grid_config);
    grid->add_option("--trials", per_point, "trials per value");
    grid->add_option("--seed", grid_seed);
    grid->add_option("--out", grid_out)->required();
    grid->add_option("--nodes", esn_nodes, "ESN reservoir size");

    // online
    auto* online = app.add_subcommand("online", "projection-algorithm readout updates over a stream");
    std::string online_model, stream_path, wref_path, online_log, pe_log;
    OnlineOptions opts;
    online->add_option("--model", online_model)->required();
    online->add_option("--stream", stream_path)->required();
    online->add_option("--gamma", opts.gamma);
    online->add_option("--c", opts.c);
    online->add_option("--nw", opts.n_w);
    online->add_option("--eta1", opts.eta1)->required();
    online->add_option("--eta2", opts.eta2)->required();
    online->add_option("--wref", wref_path, "model whose readout is the reference");
    online->add_option("--log", online_log)->required();
    online->add_option("--pe-log", pe_log, "companion CSV of excitation windows");

    try {
        app.parse(argc, argv);
    } catch (const CLI::ParseError& e) {
        const int rc = app.exit(e);
        return rc == 0 ? 0 : 2;
    }

    try {
        if (gen->parsed()) {
            if (gen_mg->parsed()) {
                MGConfig mg;
                mg.seed = gen_seed;
                write_splits(build_mg_task(gen_mackey_glass(mg), mg_variant_from_string(variant)), out_dir);
            } else {
                write_splits(gen_plant(gen_seed), out_dir);
            }
        } else if (train->parsed()) {
            const TrainConfig cfg = config_or_default(config_path);
            const ModelKind kind = model_kind_from_string(model_kind);
            const Dataset tr = load_csv(train_path, cfg.washout);
            const Dataset va = load_csv(val_path, cfg.washout);
            if (kind == ModelKind::ESN) {
                save_model(train_esn(tr, cfg, esn_nodes), model_out);
            } else {
                const TrainResult r = kind == ModelKind::RSCN ? train_rscn(tr, va, cfg) : train_brscn(tr, va, cfg);
                save_model(r.model, model_out);
                if (!log_path.empty()) write_convergence_csv(r.log, log_path);
                std::cerr << "termination: " << to_string(r.log.termination) << ", nodes: " << r.model.state_dim()
                          << '\n';
                // The partial model is still written; the status tells scripts it stalled.
                if (r.log.termination == Termination::Stalled) return ConstructionStalled("").exit_code();
            }
        } else if (eval->parsed()) {
            const BlockModel m = load_model(eval_model);
            const Dataset d = load_csv(eval_data, m.input_dim, m.output_dim, m.washout);
            std::cout << std::setprecision(10) << nrmse(predict(m, d.u, d.washout), d.scored_targets()) << '\n';
        } else if (bench->parsed()) {
            const TrainConfig cfg = config_or_default(bench_config);
            const TrialRun run = run_trials(make_task(bench_task, cfg), model_kind_from_string(bench_model), cfg,
                                            trials, bench_seed, esn_nodes);
            emit_report(run.report, bench_out);
        } else if (grid->parsed()) {
            const TrainConfig cfg = config_or_default(grid_config);
            const GridResult g = grid_search(make_task(grid_task, cfg), model_kind_from_string(grid_model), cfg, param,
                                             parse_values(values_text), per_point, grid_seed, esn_nodes);
            emit_grid(g, grid_out);
            std::cout << "chosen " << param << " = " << g.chosen << '\n';
        } else if (online->parsed()) {
            const BlockModel m = load_model(online_model);
            if (!wref_path.empty()) opts.w_reference = load_model(wref_path).w_out;
            const Dataset stream = load_csv(stream_path, m.input_dim, m.output_dim, m.washout);
            const OnlineLog log = run_online(m, stream, opts);
            write_online_csv(log, online_log);
            if (!pe_log.empty()) write_pe_csv(log, pe_log);
        }
    } catch (const Error& e) {
        std::cerr << "error: " << e.what() << '\n';
        return e.exit_code();
    } catch (const std::exception& e) {
        std::cerr << "error: " << e.what() << '\n';
        return 1;
    }
    return 0;
}
