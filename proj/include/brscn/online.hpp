#pragma once

#include <optional>
#include <string>
#include <vector>

#include "brscn/data.hpp"
#include "brscn/reservoir.hpp"

namespace brscn {

struct OnlineState {
    Matrix w_current;  // L x D
    double gamma = 1.0;
    double c = 1e-4;
    long step = 0;
};

/// W <- W + gamma (y - W g) g^T / (c + g^T g). Throws InvalidArgument on a
/// shape mismatch or when c + g^T g is zero.
OnlineState projection_step(const OnlineState& state, const Vector& g, const Vector& y);

struct PEWindowReport {
    long window_length = 0;
    double windowed_sum = 0.0;    // sum of g^T g over the window
    double pointwise_min = 0.0;
    double pointwise_max = 0.0;
    double eta1 = 0.0;
    double eta2 = 0.0;
    bool pe_satisfied = false;
    bool gain_ok = false;         // filled in by run_online
};

/// Excitation check over a window of regressor energies g^T g:
/// eta1 >= sum >= eta2, eta1 >= max and min >= eta2 / n_w.
PEWindowReport pe_window_check(const std::vector<double>& energies, double eta1, double eta2);
PEWindowReport pe_window_check(const std::vector<Vector>& g_history, double eta1, double eta2);

/// delta_p_inverse <= 2 gamma eta2 - gamma^2 eta1^2.
bool gain_condition_check(double delta_p_inverse, double gamma, double eta1, double eta2);

struct OnlineOptions {
    double gamma = 1.0;
    double c = 1e-4;
    long n_w = 50;
    double eta1 = 0.0;
    double eta2 = 0.0;
    std::optional<Matrix> w_reference;
};

struct OnlineRow {
    long n = 0;
    Vector prediction;
    Vector target;
    double weight_error_fro = 0.0;   // NaN without a reference
    double v_lyapunov = 0.0;         // NaN without a reference
    double delta_v = 0.0;            // 0 at the first step
    double p_inverse = 0.0;
    double delta_p_inverse = 0.0;    // 0 at the first step
};

struct OnlineLog {
    std::vector<OnlineRow> rows;
    std::vector<PEWindowReport> windows;   // one per full window of n_w steps
    std::vector<long> window_ends;
    Matrix w_final;
};

/// Runs the reservoir over the stream from a zero state, starting from the
/// model's readout. Steps inside the stream's washout only warm the state.
/// Each logged step predicts first, then updates on the observed target.
OnlineLog run_online(const BlockModel& model, const Dataset& stream, const OnlineOptions& opts);

/// Same loop over precomputed regressors (D x n) and targets (L x n).
OnlineLog run_online_regressors(const Matrix& w_start, const Matrix& g, const Matrix& y, const OnlineOptions& opts);

/// Header n,prediction,target,weight_error_fro,v_lyapunov,delta_v,p_inverse.
/// Multi-output predictions and targets are joined with ';'.
void write_online_csv(const OnlineLog& log, const std::string& path);
/// Header window_end,windowed_sum,pointwise_min,pointwise_max,pe_satisfied,gain_ok.
void write_pe_csv(const OnlineLog& log, const std::string& path);

}  // namespace brscn
