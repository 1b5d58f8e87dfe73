#pragma once

#include <cstdint>
#include <string>
#include <vector>

#include "brscn/builder.hpp"
#include "brscn/data.hpp"

namespace brscn {

enum class ModelKind { ESN, RSCN, BRSCN };
std::string to_string(ModelKind k);
ModelKind model_kind_from_string(const std::string& name);  // case-insensitive

enum class TaskKind { MG, MG1, MG2, Plant, Csv };
TaskKind task_kind_from_string(const std::string& name);

/// Data source for a benchmark. Synthetic tasks regenerate their data per
/// trial seed; Csv tasks reuse `fixed` for every trial.
struct Task {
    TaskKind kind = TaskKind::MG;
    Splits fixed;
};

/// Splits for one trial. Every model kind sees the same data for a given seed.
Splits make_splits(const Task& task, std::uint64_t seed);

struct TrialReport {
    ModelKind model_kind = ModelKind::BRSCN;
    long n_sub = 0;
    long reservoir_size = 0;   // rounded mean of the final node counts
    long trials = 0;
    double train_nrmse_mean = 0.0;
    double train_nrmse_std = 0.0;
    double test_nrmse_mean = 0.0;
    double test_nrmse_std = 0.0;
    double train_time_mean = 0.0;
    double train_time_std = 0.0;
};

struct TrialOutcome {
    std::uint64_t seed = 0;
    double train_nrmse = 0.0;
    double val_nrmse = 0.0;
    double test_nrmse = 0.0;
    double train_time = 0.0;
    Eigen::Index total_nodes = 0;
    ConvergenceLog log;   // empty for ESN
};

struct TrialRun {
    TrialReport report;
    std::vector<TrialOutcome> outcomes;
};

/// Trial i uses seed base_seed + i for both data and model. `esn_nodes`
/// sizes the ESN reservoir and is ignored by the other kinds.
TrialRun run_trials(const Task& task, ModelKind kind, const TrainConfig& cfg, long trials, std::uint64_t base_seed,
                    Eigen::Index esn_nodes = 96);

/// Mean and sample standard deviation (0 for a single value).
std::pair<double, double> mean_std(const std::vector<double>& v);

struct GridResult {
    std::string param;
    std::vector<std::pair<double, double>> curve;   // (value, mean validation NRMSE)
    double chosen = 0.0;
};

/// `param` is "nsub" (block size; ESN reservoir unchanged) or "nodes"
/// (ESN reservoir size; constructive learners grow to at most that many).
GridResult grid_search(const Task& task, ModelKind kind, const TrainConfig& cfg, const std::string& param,
                       const std::vector<double>& values, long trials_per_point, std::uint64_t base_seed,
                       Eigen::Index esn_nodes = 96);

std::string report_to_json(const TrialReport& r);
TrialReport report_from_json(const std::string& text);
void emit_report(const TrialReport& r, const std::string& path);
void emit_grid(const GridResult& g, const std::string& path);

}  // namespace brscn
