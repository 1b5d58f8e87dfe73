#pragma once

#include <string>
#include <string_view>
#include <vector>

#include "brscn/numeric.hpp"

namespace brscn {

enum class Activation { Tanh, Logistic };

std::string_view to_string(Activation a) noexcept;
Activation activation_from_string(std::string_view name);

/// One randomly generated block of reservoir nodes.
struct SubReservoir {
    Matrix w_in;   // n_sub x K
    Matrix w_r;    // n_sub x n_sub
    Vector bias;   // n_sub
    double lambda_used = 1.0;
    double alpha_effective = 0.0;
    bool scaled = false;

    Eigen::Index size() const noexcept { return w_r.rows(); }
};

/// Reservoir built from decoupled blocks plus a linear readout.
struct BlockModel {
    std::vector<SubReservoir> blocks;
    Matrix w_out;  // L x D
    bool readout_includes_input = false;
    Activation activation = Activation::Tanh;
    Eigen::Index washout = 0;
    Eigen::Index input_dim = 0;
    Eigen::Index output_dim = 0;

    Eigen::Index state_dim() const noexcept;
    /// D: state rows plus K when the input feeds the readout directly.
    Eigen::Index readout_dim() const noexcept;
};

/// Harvested states, one column per post-washout time step.
struct StateMatrix {
    Matrix values;
    Eigen::Index washout_dropped = 0;
};

/// Draws a block. w_r has max(1, round(density * n_sub^2)) nonzero entries.
SubReservoir sample_subreservoir(RngStream& rng, Eigen::Index n_sub, Eigen::Index k,
                                 double lambda, double density);

/// Rescales w_r so that its largest singular value is below one.
///
/// With rho the spectral radius and sigma the largest singular value,
/// w_r is multiplied by alpha_eff / rho where alpha_eff = min(alpha,
/// 0.99 rho / sigma). Nilpotent matrices (rho ~ 0) fall back to the factor
/// 0.99 alpha / sigma. An all-zero w_r is left as is.
SubReservoir scale_for_esp(SubReservoir sub, double alpha);

double activate(Activation a, double v) noexcept;

/// Advances every block by one step. Blocks see only their own slice of
/// x_prev.
Vector step_block(const BlockModel& model, const Vector& x_prev, const Vector& u);

/// States of a single block driven from x(0) = 0, all n columns kept.
Matrix run_block(const SubReservoir& block, const Matrix& u_seq, Activation act);

/// Drives the blocks from x(0) = 0 over u_seq (K x n), drops the first
/// `washout` columns and optionally appends the input rows below the states.
StateMatrix harvest_states(const std::vector<SubReservoir>& blocks, const Matrix& u_seq,
                           Eigen::Index washout, bool include_input,
                           Activation act = Activation::Tanh);

/// Block-diagonal recurrent matrix of the whole model.
Matrix assembled_recurrent(const BlockModel& model);

/// Readout regressors for a sequence (states, plus inputs if configured).
StateMatrix readout_regressors(const BlockModel& model, const Matrix& u_seq, Eigen::Index washout);

/// Model output over a sequence after washout (L x (n - washout)).
Matrix predict(const BlockModel& model, const Matrix& u_seq, Eigen::Index washout);

// JSON model files.
std::string model_to_json(const BlockModel& model);
BlockModel model_from_json(std::string_view text);
void save_model(const BlockModel& model, const std::string& path);
BlockModel load_model(const std::string& path);

}  // namespace brscn
