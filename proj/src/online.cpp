#include "brscn/online.hpp"

#include <algorithm>
#include <cmath>
#include <fstream>
#include <limits>

#include "brscn/errors.hpp"

namespace brscn {

OnlineState projection_step(const OnlineState& state, const Vector& g, const Vector& y) {
    if (state.w_current.cols() != g.size() || state.w_current.rows() != y.size())
        throw InvalidArgument("projection_step: regressor or target size does not match the weights");
    if (!(state.gamma > 0.0) || state.c < 0.0) throw InvalidArgument("projection_step: need gamma > 0 and c >= 0");
    const double denom = state.c + g.squaredNorm();
    if (!(denom > 0.0)) throw InvalidArgument("projection_step: c + g'g is zero");
    OnlineState next = state;
    next.w_current.noalias() += (state.gamma / denom) * (y - state.w_current * g) * g.transpose();
    ++next.step;
    return next;
}

PEWindowReport pe_window_check(const std::vector<double>& energies, double eta1, double eta2) {
    PEWindowReport r;
    r.window_length = static_cast<long>(energies.size());
    r.eta1 = eta1;
    r.eta2 = eta2;
    if (energies.empty()) return r;
    r.pointwise_min = *std::min_element(energies.begin(), energies.end());
    r.pointwise_max = *std::max_element(energies.begin(), energies.end());
    for (double e : energies) r.windowed_sum += e;
    r.pe_satisfied = eta1 >= r.windowed_sum && r.windowed_sum >= eta2 && eta1 >= r.pointwise_max &&
                     r.pointwise_min >= eta2 / static_cast<double>(r.window_length);
    return r;
}

PEWindowReport pe_window_check(const std::vector<Vector>& g_history, double eta1, double eta2) {
    std::vector<double> energies;
    energies.reserve(g_history.size());
    for (const auto& g : g_history) energies.push_back(g.squaredNorm());
    return pe_window_check(energies, eta1, eta2);
}

bool gain_condition_check(double delta_p_inverse, double gamma, double eta1, double eta2) {
    return delta_p_inverse <= 2.0 * gamma * eta2 - gamma * gamma * eta1 * eta1;
}

OnlineLog run_online_regressors(const Matrix& w_start, const Matrix& g, const Matrix& y, const OnlineOptions& opts) {
    if (g.cols() != y.cols()) throw InvalidArgument("run_online: regressor and target lengths differ");
    if (w_start.rows() != y.rows() || w_start.cols() != g.rows())
        throw InvalidArgument("run_online: readout shape does not match the stream");
    if (opts.n_w < 1) throw InvalidArgument("run_online: n_w must be >= 1");
    if (opts.w_reference && (opts.w_reference->rows() != w_start.rows() || opts.w_reference->cols() != w_start.cols()))
        throw InvalidArgument("run_online: reference weights have the wrong shape");

    OnlineLog log;
    OnlineState state{w_start, opts.gamma, opts.c, 0};
    constexpr double nan = std::numeric_limits<double>::quiet_NaN();
    double prev_p_inv = 0.0;
    double prev_v = 0.0;
    std::vector<double> window;
    bool window_gain = true;
    for (Eigen::Index t = 0; t < g.cols(); ++t) {
        const Vector gt = g.col(t);
        OnlineRow row;
        row.n = t + 1;
        row.prediction = state.w_current * gt;
        row.target = y.col(t);
        state = projection_step(state, gt, row.target);
        row.p_inverse = opts.c + gt.squaredNorm();
        row.delta_p_inverse = t == 0 ? 0.0 : row.p_inverse - prev_p_inv;
        if (opts.w_reference) {
            const double err_sq = (*opts.w_reference - state.w_current).squaredNorm();
            row.weight_error_fro = std::sqrt(err_sq);
            row.v_lyapunov = row.p_inverse * err_sq;
            row.delta_v = t == 0 ? 0.0 : row.v_lyapunov - prev_v;
            prev_v = row.v_lyapunov;
        } else {
            row.weight_error_fro = row.v_lyapunov = nan;
            row.delta_v = nan;
        }
        prev_p_inv = row.p_inverse;

        window.push_back(gt.squaredNorm());
        window_gain = window_gain && gain_condition_check(row.delta_p_inverse, opts.gamma, opts.eta1, opts.eta2);
        log.rows.push_back(std::move(row));
        if (static_cast<long>(window.size()) == opts.n_w) {
            PEWindowReport rep = pe_window_check(window, opts.eta1, opts.eta2);
            rep.gain_ok = window_gain;
            log.windows.push_back(rep);
            log.window_ends.push_back(t + 1);
            window.clear();
            window_gain = true;
        }
    }
    log.w_final = state.w_current;
    return log;
}

OnlineLog run_online(const BlockModel& model, const Dataset& stream, const OnlineOptions& opts) {
    if (stream.input_dim() != model.input_dim || stream.output_dim() != model.output_dim)
        throw InvalidArgument("run_online: stream K or L does not match the model");
    if (stream.t.cols() != stream.u.cols()) throw InvalidArgument("run_online: stream input and target lengths differ");
    if (stream.length() == 0) {
        OnlineLog empty;
        empty.w_final = model.w_out;
        return empty;
    }
    const StateMatrix x = readout_regressors(model, stream.u, stream.washout);
    return run_online_regressors(model.w_out, x.values, stream.scored_targets(), opts);
}

namespace {

void put_vector(std::ostream& out, const Vector& v) {
    for (Eigen::Index i = 0; i < v.size(); ++i) {
        if (i > 0) out << ';';
        out << v(i);
    }
}

}  // namespace

void write_online_csv(const OnlineLog& log, const std::string& path) {
    std::ofstream out(path);
    if (!out) throw IoError("cannot open '" + path + "' for writing");
    out.precision(17);
    out << "n,prediction,target,weight_error_fro,v_lyapunov,delta_v,p_inverse\n";
    for (const auto& r : log.rows) {
        out << r.n << ',';
        put_vector(out, r.prediction);
        out << ',';
        put_vector(out, r.target);
        out << ',' << r.weight_error_fro << ',' << r.v_lyapunov << ',' << r.delta_v << ',' << r.p_inverse << '\n';
    }
    if (!out) throw IoError("failed writing '" + path + "'");
}

void write_pe_csv(const OnlineLog& log, const std::string& path) {
    std::ofstream out(path);
    if (!out) throw IoError("cannot open '" + path + "' for writing");
    out.precision(17);
    out << "window_end,windowed_sum,pointwise_min,pointwise_max,pe_satisfied,gain_ok\n";
    for (std::size_t i = 0; i < log.windows.size(); ++i) {
        const auto& w = log.windows[i];
        out << log.window_ends[i] << ',' << w.windowed_sum << ',' << w.pointwise_min << ',' << w.pointwise_max << ','
            << (w.pe_satisfied ? 1 : 0) << ',' << (w.gain_ok ? 1 : 0) << '\n';
    }
    if (!out) throw IoError("failed writing '" + path + "'");
}

}  // namespace brscn
