#pragma once

#include <cstdint>
#include <optional>
#include <string>
#include <utility>
#include <vector>

#include "brscn/data.hpp"
#include "brscn/numeric.hpp"
#include "brscn/reservoir.hpp"

namespace brscn {

/// Hyperparameters of the constructive learners. JSON field names match the
/// member names.
struct TrainConfig {
    std::vector<double> lambda_grid{0.5, 1, 5, 10, 30, 50, 100};
    double r_initial = 0.9;
    int g_max = 100;
    double epsilon = 1e-6;
    int j_max = 10;   // blocks for BRSCN; RSCN grows to j_max * n_sub nodes
    int j_step = 2;
    int n_sub = 10;
    double alpha = 0.8;
    std::pair<double, double> sparsity_band{0.01, 0.03};
    Eigen::Index washout = 20;
    std::uint64_t base_seed = 1;
    int max_r_anneals = 20;
    bool readout_includes_input = false;
};

/// Throws InvalidArgument on an inconsistent config.
void validate(const TrainConfig& cfg);

std::string config_to_json(const TrainConfig& cfg);
TrainConfig config_from_json(const std::string& text);
TrainConfig load_config(const std::string& path);

struct CandidateScore {
    std::vector<double> xi_per_output;
    double xi_total = 0.0;
    double lambda = 0.0;
    std::size_t candidate_index = 0;

    bool passes() const noexcept;
};

/// Supervisory score of candidate states x_cand (N_sub x n) against the
/// residual e (L x n):
///   xi_q = e_q X^T (X X^T)^{-1} X e_q^T - (1 - r - mu) e_q e_q^T.
/// A rank-deficient Gram matrix gets a 1e-8 * trace / N_sub ridge; returns
/// nullopt if that is still singular.
std::optional<CandidateScore> xi_scores(const Matrix& e, const Matrix& x_cand, double r, double mu);

enum class Termination { Epsilon, JMax, EarlyStop, Stalled };
std::string to_string(Termination t);

/// Per-block diagnostics that do not go to the CSV log.
struct BlockAudit {
    SubReservoir block;
    Matrix residual_before;   // e_j on the training split
    double residual_sq_before = 0.0;
    double residual_sq_after = 0.0;
    double mu = 0.0;
    CandidateScore score;
};

struct ConvergenceRow {
    int block_index = 0;
    Eigen::Index total_nodes = 0;
    double train_nrmse = 0.0;
    double val_nrmse = 0.0;
    double xi_total = 0.0;
    double lambda_used = 0.0;
    double r_used = 0.0;
};

struct ConvergenceLog {
    std::vector<ConvergenceRow> rows;
    std::vector<BlockAudit> audit;  // one per row after the first
    Termination termination = Termination::JMax;
};

void write_convergence_csv(const ConvergenceLog& log, const std::string& path);

/// Accepted block for position j + 1 together with its states and score.
struct BlockChoice {
    SubReservoir block;
    StateMatrix states;
    CandidateScore score;
    double r_used = 0.0;
    double mu = 0.0;
};

/// One supervisory configuration step. `e` is the training residual after
/// washout, `j` the number of blocks already in the model. Throws
/// ConstructionStalled once every r anneal is exhausted.
BlockChoice configure_block(const Matrix& e, const Dataset& train, int j, const TrainConfig& cfg,
                            Activation act = Activation::Tanh);

struct Refit {
    Matrix w_out;
    Matrix residual;  // W_out X - T
};

/// Global least-squares readout over the stacked block states.
Refit refit_readout(const std::vector<const Matrix*>& states, const Matrix& u_scored, const Matrix& t,
                    bool include_input);

/// True when the last j_step + 1 validation errors are non-decreasing.
bool early_stop(const std::vector<double>& val_errors, int j_step);

struct TrainResult {
    BlockModel model;
    ConvergenceLog log;
};

TrainResult train_brscn(const Dataset& train, const Dataset& val, const TrainConfig& cfg);

/// Point-incremental learner: one node at a time with a lower-triangular
/// recurrent matrix, starting from five nodes. Grows to j_max * n_sub
/// nodes; early stopping looks back j_step * n_sub nodes.
TrainResult train_rscn(const Dataset& train, const Dataset& val, const TrainConfig& cfg);

/// Single random reservoir with input rows in the readout.
BlockModel train_esn(const Dataset& train, const TrainConfig& cfg, Eigen::Index n_nodes);

/// Weight scale used by the ESN baseline: the first grid entry clamped to [0.1, 1].
double esn_lambda(const TrainConfig& cfg);

}  // namespace brscn
