#include "brscn/reservoir.hpp"

#include <algorithm>
#include <cmath>
#include <fstream>
#include <numeric>
#include <sstream>

#include "json.hpp"

#include "brscn/errors.hpp"

namespace brscn {

using nlohmann::json;

std::string_view to_string(Activation a) noexcept {
    return a == Activation::Tanh ? "tanh" : "logistic";
}

Activation activation_from_string(std::string_view name) {
    if (name == "tanh") return Activation::Tanh;
    if (name == "logistic") return Activation::Logistic;
    throw InvalidArgument("unknown activation '" + std::string(name) + "'");
}

Eigen::Index BlockModel::state_dim() const noexcept {
    Eigen::Index n = 0;
    for (const auto& b : blocks) n += b.size();
    return n;
}

Eigen::Index BlockModel::readout_dim() const noexcept {
    return state_dim() + (readout_includes_input ? input_dim : 0);
}

SubReservoir sample_subreservoir(RngStream& rng, Eigen::Index n_sub, Eigen::Index k,
                                 double lambda, double density) {
    if (n_sub < 1 || k < 1) throw InvalidArgument("sample_subreservoir: n_sub and k must be >= 1");
    if (!(density > 0.0 && density <= 1.0))
        throw InvalidArgument("sample_subreservoir: density must lie in (0, 1]");
    if (!(lambda > 0.0)) throw InvalidArgument("sample_subreservoir: lambda must be positive");

    SubReservoir sub;
    sub.lambda_used = lambda;
    sub.w_in = seeded_uniform(rng, n_sub, k, lambda);

    const auto cells = static_cast<std::size_t>(n_sub * n_sub);
    const auto nnz = std::max<std::size_t>(
        1, static_cast<std::size_t>(std::llround(density * static_cast<double>(cells))));
    // Partial Fisher-Yates picks the mask positions.
    std::vector<std::size_t> order(cells);
    std::iota(order.begin(), order.end(), std::size_t{0});
    for (std::size_t i = 0; i < nnz; ++i) {
        const std::size_t j = i + static_cast<std::size_t>(rng.below(cells - i));
        std::swap(order[i], order[j]);
    }
    sub.w_r = Matrix::Zero(n_sub, n_sub);
    for (std::size_t i = 0; i < nnz; ++i) {
        const auto pos = static_cast<Eigen::Index>(order[i]);
        sub.w_r(pos / n_sub, pos % n_sub) = rng.uniform(-lambda, lambda);
    }
    sub.bias = seeded_uniform(rng, n_sub, 1, lambda).col(0);
    return sub;
}

SubReservoir scale_for_esp(SubReservoir sub, double alpha) {
    if (!(alpha > 0.0 && alpha < 1.0)) throw InvalidArgument("scale_for_esp: alpha must lie in (0, 1)");
    if (sub.scaled) throw InvalidArgument("scale_for_esp: block is already scaled");
    const double sigma = max_singular_value(sub.w_r);
    sub.scaled = true;
    if (sigma == 0.0) {
        sub.alpha_effective = alpha;
        return sub;
    }
    const double rho = spectral_radius(sub.w_r);
    if (rho > 1e-12) {
        sub.alpha_effective = std::min(alpha, 0.99 * rho / sigma);
        sub.w_r *= sub.alpha_effective / rho;
    } else {
        sub.alpha_effective = 0.99 * alpha;
        sub.w_r *= sub.alpha_effective / sigma;
    }
    return sub;
}

double activate(Activation a, double v) noexcept {
    return a == Activation::Tanh ? std::tanh(v) : 1.0 / (1.0 + std::exp(-v));
}

namespace {

void check_block_input(const SubReservoir& b, Eigen::Index k) {
    if (b.w_in.cols() != k) throw InvalidArgument("block input width does not match the input dimension");
    if (b.w_r.rows() != b.w_r.cols() || b.w_r.rows() != b.w_in.rows() || b.bias.size() != b.w_r.rows())
        throw InvalidArgument("block weight shapes are inconsistent");
}

}  // namespace

Vector step_block(const BlockModel& model, const Vector& x_prev, const Vector& u) {
    if (x_prev.size() != model.state_dim()) throw InvalidArgument("step_block: state size mismatch");
    if (u.size() != model.input_dim) throw InvalidArgument("step_block: input size mismatch");
    Vector next(x_prev.size());
    Eigen::Index off = 0;
    for (const auto& b : model.blocks) {
        check_block_input(b, model.input_dim);
        const Eigen::Index n = b.size();
        Vector pre = b.w_in * u + b.w_r * x_prev.segment(off, n) + b.bias;
        for (Eigen::Index i = 0; i < n; ++i) next(off + i) = activate(model.activation, pre(i));
        off += n;
    }
    return next;
}

Matrix run_block(const SubReservoir& block, const Matrix& u_seq, Activation act) {
    check_block_input(block, u_seq.rows());
    const Eigen::Index n = u_seq.cols();
    const Eigen::Index m = block.size();
    Matrix states = block.w_in * u_seq;
    states.colwise() += block.bias;
    Vector x = Vector::Zero(m);
    const bool has_recurrence = !block.w_r.isZero(0.0);
    for (Eigen::Index t = 0; t < n; ++t) {
        auto col = states.col(t);
        if (has_recurrence) col.noalias() += block.w_r * x;
        for (Eigen::Index i = 0; i < m; ++i) col(i) = activate(act, col(i));
        x = col;
    }
    return states;
}

StateMatrix harvest_states(const std::vector<SubReservoir>& blocks, const Matrix& u_seq,
                           Eigen::Index washout, bool include_input, Activation act) {
    const Eigen::Index n = u_seq.cols();
    if (washout < 0 || washout >= n) throw InvalidArgument("harvest_states: washout must be < sequence length");
    Eigen::Index rows = include_input ? u_seq.rows() : 0;
    for (const auto& b : blocks) rows += b.size();
    StateMatrix out;
    out.washout_dropped = washout;
    out.values.resize(rows, n - washout);
    Eigen::Index off = 0;
    for (const auto& b : blocks) {
        out.values.middleRows(off, b.size()) = run_block(b, u_seq, act).rightCols(n - washout);
        off += b.size();
    }
    if (include_input) out.values.bottomRows(u_seq.rows()) = u_seq.rightCols(n - washout);
    return out;
}

Matrix assembled_recurrent(const BlockModel& model) {
    const Eigen::Index n = model.state_dim();
    Matrix w = Matrix::Zero(n, n);
    Eigen::Index off = 0;
    for (const auto& b : model.blocks) {
        w.block(off, off, b.size(), b.size()) = b.w_r;
        off += b.size();
    }
    return w;
}

StateMatrix readout_regressors(const BlockModel& model, const Matrix& u_seq, Eigen::Index washout) {
    if (u_seq.rows() != model.input_dim) throw InvalidArgument("input dimension does not match the model");
    return harvest_states(model.blocks, u_seq, washout, model.readout_includes_input, model.activation);
}

Matrix predict(const BlockModel& model, const Matrix& u_seq, Eigen::Index washout) {
    const StateMatrix x = readout_regressors(model, u_seq, washout);
    if (model.w_out.cols() != x.values.rows()) throw InvalidArgument("readout width does not match the regressors");
    return model.w_out * x.values;
}

// ---------------------------------------------------------------------------
// JSON

namespace {

json matrix_json(const Matrix& m) {
    json data = json::array();
    for (Eigen::Index i = 0; i < m.rows(); ++i)
        for (Eigen::Index j = 0; j < m.cols(); ++j) data.push_back(m(i, j));
    return json{{"rows", m.rows()}, {"cols", m.cols()}, {"data", std::move(data)}};
}

Matrix matrix_from(const json& j, const char* what) {
    try {
        const auto rows = j.at("rows").get<Eigen::Index>();
        const auto cols = j.at("cols").get<Eigen::Index>();
        const auto& data = j.at("data");
        if (rows < 0 || cols < 0 || static_cast<Eigen::Index>(data.size()) != rows * cols)
            throw ParseError(std::string("model: matrix '") + what + "' has inconsistent size");
        Matrix m(rows, cols);
        for (Eigen::Index i = 0; i < rows; ++i)
            for (Eigen::Index c = 0; c < cols; ++c) m(i, c) = data[i * cols + c].get<double>();
        if (!m.allFinite()) throw ParseError(std::string("model: matrix '") + what + "' has non-finite entries");
        return m;
    } catch (const json::exception& e) {
        throw ParseError(std::string("model: bad matrix '") + what + "': " + e.what());
    }
}

}  // namespace

std::string model_to_json(const BlockModel& model) {
    json blocks = json::array();
    for (const auto& b : model.blocks) {
        blocks.push_back({{"w_in", matrix_json(b.w_in)},
                          {"w_r", matrix_json(b.w_r)},
                          {"bias", matrix_json(Matrix(b.bias))},
                          {"lambda_used", b.lambda_used},
                          {"alpha_effective", b.alpha_effective}});
    }
    json doc{{"blocks", std::move(blocks)},
             {"w_out", matrix_json(model.w_out)},
             {"readout_includes_input", model.readout_includes_input},
             {"activation", std::string(to_string(model.activation))},
             {"washout", model.washout},
             {"K", model.input_dim},
             {"L", model.output_dim}};
    return doc.dump(1);
}

BlockModel model_from_json(std::string_view text) {
    json doc;
    try {
        doc = json::parse(text);
    } catch (const json::exception& e) {
        throw ParseError(std::string("model: invalid JSON: ") + e.what());
    }
    BlockModel model;
    try {
        model.readout_includes_input = doc.at("readout_includes_input").get<bool>();
        model.activation = activation_from_string(doc.at("activation").get<std::string>());
        model.washout = doc.at("washout").get<Eigen::Index>();
        model.input_dim = doc.at("K").get<Eigen::Index>();
        model.output_dim = doc.at("L").get<Eigen::Index>();
        for (const auto& jb : doc.at("blocks")) {
            SubReservoir b;
            b.w_in = matrix_from(jb.at("w_in"), "w_in");
            b.w_r = matrix_from(jb.at("w_r"), "w_r");
            b.bias = matrix_from(jb.at("bias"), "bias").col(0);
            b.lambda_used = jb.at("lambda_used").get<double>();
            b.alpha_effective = jb.at("alpha_effective").get<double>();
            b.scaled = true;
            check_block_input(b, model.input_dim);
            model.blocks.push_back(std::move(b));
        }
        model.w_out = matrix_from(doc.at("w_out"), "w_out");
    } catch (const json::exception& e) {
        throw ParseError(std::string("model: missing or mistyped field: ") + e.what());
    } catch (const InvalidArgument& e) {
        throw ParseError(std::string("model: ") + e.what());
    }
    if (model.w_out.rows() != model.output_dim || model.w_out.cols() != model.readout_dim())
        throw ParseError("model: w_out shape does not match L x D");
    return model;
}

void save_model(const BlockModel& model, const std::string& path) {
    std::ofstream out(path);
    if (!out) throw IoError("cannot open '" + path + "' for writing");
    out << model_to_json(model) << '\n';
    if (!out) throw IoError("failed writing '" + path + "'");
}

BlockModel load_model(const std::string& path) {
    std::ifstream in(path);
    if (!in) throw IoError("cannot open model file '" + path + "'");
    std::stringstream ss;
    ss << in.rdbuf();
    return model_from_json(ss.str());
}

}  // namespace brscn
