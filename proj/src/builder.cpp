#include "brscn/builder.hpp"

#include <algorithm>
#include <cmath>
#include <fstream>
#include <functional>
#include <limits>
#include <set>
#include <sstream>

#include "json.hpp"

#include "brscn/errors.hpp"

namespace brscn {

using nlohmann::json;

// ---------------------------------------------------------------------------
// Config

void validate(const TrainConfig& cfg) {
    if (cfg.lambda_grid.empty()) throw InvalidArgument("config: lambda_grid must not be empty");
    for (std::size_t i = 0; i < cfg.lambda_grid.size(); ++i) {
        if (!(cfg.lambda_grid[i] > 0.0)) throw InvalidArgument("config: lambda_grid entries must be positive");
        if (i > 0 && !(cfg.lambda_grid[i] > cfg.lambda_grid[i - 1]))
            throw InvalidArgument("config: lambda_grid must be strictly ascending");
    }
    if (!(cfg.r_initial > 0.0 && cfg.r_initial < 1.0)) throw InvalidArgument("config: r_initial must lie in (0, 1)");
    if (cfg.g_max < 1) throw InvalidArgument("config: g_max must be >= 1");
    if (!(cfg.epsilon > 0.0)) throw InvalidArgument("config: epsilon must be positive");
    if (cfg.j_max < 1) throw InvalidArgument("config: j_max must be >= 1");
    if (cfg.j_step < 0 || cfg.j_step >= cfg.j_max) throw InvalidArgument("config: need 0 <= j_step < j_max");
    if (cfg.n_sub < 1) throw InvalidArgument("config: n_sub must be >= 1");
    if (!(cfg.alpha > 0.0 && cfg.alpha < 1.0)) throw InvalidArgument("config: alpha must lie in (0, 1)");
    const auto [lo, hi] = cfg.sparsity_band;
    if (!(lo > 0.0 && hi <= 1.0 && lo <= hi)) throw InvalidArgument("config: sparsity_band must satisfy 0 < low <= high <= 1");
    if (cfg.washout < 0) throw InvalidArgument("config: washout must be >= 0");
    if (cfg.max_r_anneals < 0) throw InvalidArgument("config: max_r_anneals must be >= 0");
}

std::string config_to_json(const TrainConfig& cfg) {
    json j{{"lambda_grid", cfg.lambda_grid},
           {"r_initial", cfg.r_initial},
           {"g_max", cfg.g_max},
           {"epsilon", cfg.epsilon},
           {"j_max", cfg.j_max},
           {"j_step", cfg.j_step},
           {"n_sub", cfg.n_sub},
           {"alpha", cfg.alpha},
           {"sparsity_band", {cfg.sparsity_band.first, cfg.sparsity_band.second}},
           {"washout", cfg.washout},
           {"base_seed", cfg.base_seed},
           {"max_r_anneals", cfg.max_r_anneals},
           {"readout_includes_input", cfg.readout_includes_input}};
    return j.dump(2);
}

TrainConfig config_from_json(const std::string& text) {
    static const std::set<std::string> known{"lambda_grid", "r_initial", "g_max",    "epsilon",
                                             "j_max",       "j_step",    "n_sub",    "alpha",
                                             "sparsity_band", "washout", "base_seed", "max_r_anneals",
                                             "readout_includes_input"};
    TrainConfig cfg;
    try {
        const json j = json::parse(text);
        if (!j.is_object()) throw ParseError("config: top level must be an object");
        for (const auto& [key, _] : j.items())
            if (!known.contains(key)) throw ParseError("config: unknown field '" + key + "'");
        auto read = [&](const char* key, auto& field) {
            if (j.contains(key)) j.at(key).get_to(field);
        };
        read("lambda_grid", cfg.lambda_grid);
        read("r_initial", cfg.r_initial);
        read("g_max", cfg.g_max);
        read("epsilon", cfg.epsilon);
        read("j_max", cfg.j_max);
        read("j_step", cfg.j_step);
        read("n_sub", cfg.n_sub);
        read("alpha", cfg.alpha);
        if (j.contains("sparsity_band")) {
            const auto band = j.at("sparsity_band").get<std::vector<double>>();
            if (band.size() != 2) throw ParseError("config: sparsity_band must have two entries");
            cfg.sparsity_band = {band[0], band[1]};
        }
        read("washout", cfg.washout);
        read("base_seed", cfg.base_seed);
        read("max_r_anneals", cfg.max_r_anneals);
        read("readout_includes_input", cfg.readout_includes_input);
    } catch (const json::exception& e) {
        throw ParseError(std::string("config: ") + e.what());
    }
    try {
        validate(cfg);
    } catch (const InvalidArgument& e) {
        throw ParseError(e.what());
    }
    return cfg;
}

TrainConfig load_config(const std::string& path) {
    std::ifstream in(path);
    if (!in) throw IoError("cannot open config file '" + path + "'");
    std::stringstream ss;
    ss << in.rdbuf();
    return config_from_json(ss.str());
}

// ---------------------------------------------------------------------------
// Scoring

bool CandidateScore::passes() const noexcept {
    return std::all_of(xi_per_output.begin(), xi_per_output.end(), [](double x) { return x >= 0.0; });
}

namespace {

// Energy of each residual row inside the row space of x (e_q X^T (X X^T)^-1 X e_q^T).
std::optional<Vector> projected_energy(const Matrix& e, const Matrix& x) {
    const Eigen::Index rows = x.rows();
    Eigen::ColPivHouseholderQR<Matrix> qr(x.transpose());
    if (qr.rank() == rows) {
        const Matrix rotated = qr.householderQ().transpose() * e.transpose();
        return rotated.topRows(rows).colwise().squaredNorm().transpose();
    }
    Matrix gram = x * x.transpose();
    const double trace = gram.trace();
    if (!(trace > 0.0)) return std::nullopt;
    gram.diagonal().array() += 1e-8 * trace / static_cast<double>(rows);
    Eigen::LLT<Matrix> llt(gram);
    if (llt.info() != Eigen::Success) return std::nullopt;
    const Matrix b = x * e.transpose();
    return (b.array() * llt.solve(b).array()).colwise().sum().transpose();
}

CandidateScore score_from(const Vector& projected, const Vector& energy, double r, double mu) {
    CandidateScore s;
    s.xi_per_output.resize(static_cast<std::size_t>(energy.size()));
    for (Eigen::Index q = 0; q < energy.size(); ++q) {
        const double xi = projected(q) - (1.0 - r - mu) * energy(q);
        s.xi_per_output[static_cast<std::size_t>(q)] = xi;
        s.xi_total += xi;
    }
    return s;
}

}  // namespace

std::optional<CandidateScore> xi_scores(const Matrix& e, const Matrix& x_cand, double r, double mu) {
    if (e.cols() != x_cand.cols()) throw InvalidArgument("xi_scores: residual and state column counts differ");
    if (x_cand.rows() < 1) throw InvalidArgument("xi_scores: empty candidate");
    const auto projected = projected_energy(e, x_cand);
    if (!projected) return std::nullopt;
    return score_from(*projected, e.rowwise().squaredNorm(), r, mu);
}

std::string to_string(Termination t) {
    switch (t) {
        case Termination::Epsilon: return "epsilon";
        case Termination::JMax: return "j_max";
        case Termination::EarlyStop: return "early_stop";
        case Termination::Stalled: return "stalled";
    }
    return "unknown";
}

void write_convergence_csv(const ConvergenceLog& log, const std::string& path) {
    std::ofstream out(path);
    if (!out) throw IoError("cannot open '" + path + "' for writing");
    out.precision(17);
    out << "block_index,total_nodes,train_nrmse,val_nrmse,xi_total,lambda_used,r_used\n";
    for (const auto& r : log.rows) {
        out << r.block_index << ',' << r.total_nodes << ',' << r.train_nrmse << ',' << r.val_nrmse << ','
            << r.xi_total << ',' << r.lambda_used << ',' << r.r_used << '\n';
    }
    if (!out) throw IoError("failed writing '" + path + "'");
}

// ---------------------------------------------------------------------------
// Candidate selection shared by the block and point-incremental learners.

namespace {

struct Pooled {
    std::size_t index = 0;
    Vector projected;  // per output
};

struct Selection {
    std::size_t lambda_index = 0;
    std::size_t candidate_index = 0;
    CandidateScore score;
    double r = 0.0;
    double mu = 0.0;
};

/// Walks the lambda grid in order. At each lambda a fresh pool is drawn and
/// r is relaxed (r += tau, tau ~ U(0, 1 - r)) until some candidate passes;
/// the next lambda starts again from r_initial. `pool(li, attempt)` draws
/// and evaluates one pool; the selection always refers to the latest pool.
Selection select_candidate(const std::function<std::vector<Pooled>(std::size_t, int)>& pool,
                           const Vector& energy, const TrainConfig& cfg, double mu_denominator,
                           RngStream anneal_rng) {
    for (std::size_t li = 0; li < cfg.lambda_grid.size(); ++li) {
        double r = cfg.r_initial;
        for (int attempt = 0; attempt <= cfg.max_r_anneals; ++attempt) {
            if (attempt > 0) r = std::min(r + anneal_rng.uniform(0.0, 1.0 - r), 1.0 - 1e-6);
            const double mu = (1.0 - r) / mu_denominator;
            const std::vector<Pooled> candidates = pool(li, attempt);
            const Pooled* best = nullptr;
            CandidateScore best_score;
            for (const Pooled& p : candidates) {
                CandidateScore s = score_from(p.projected, energy, r, mu);
                if (!s.passes()) continue;
                if (best == nullptr || s.xi_total > best_score.xi_total) {
                    best = &p;
                    best_score = std::move(s);
                }
            }
            if (best != nullptr) {
                best_score.lambda = cfg.lambda_grid[li];
                best_score.candidate_index = best->index;
                return Selection{li, best->index, std::move(best_score), r, mu};
            }
        }
    }
    throw ConstructionStalled("no candidate satisfied the supervisory inequality at any lambda after " +
                              std::to_string(cfg.max_r_anneals) + " r anneals each");
}

double draw_density(RngStream& rng, const TrainConfig& cfg) {
    return rng.uniform(cfg.sparsity_band.first, cfg.sparsity_band.second);
}

constexpr std::uint64_t kAnnealTag = 0xA22EA1ULL;

}  // namespace

BlockChoice configure_block(const Matrix& e, const Dataset& train, int j, const TrainConfig& cfg, Activation act) {
    const Eigen::Index scored = train.length() - train.washout;
    if (e.cols() != scored) throw InvalidArgument("configure_block: residual does not match the training split");
    const RngStream root(cfg.base_seed);
    const auto block_id = static_cast<std::uint64_t>(j + 1);

    struct Candidate {
        SubReservoir block;
        StateMatrix states;
    };
    std::vector<Candidate> latest;

    auto pool = [&](std::size_t li, int attempt) {
        latest.clear();
        std::vector<Pooled> out;
        for (int k = 0; k < cfg.g_max; ++k) {
            RngStream rng = root.derive(
                {block_id, li, static_cast<std::uint64_t>(attempt), static_cast<std::uint64_t>(k)});
            const double density = draw_density(rng, cfg);
            SubReservoir sub = scale_for_esp(
                sample_subreservoir(rng, cfg.n_sub, train.input_dim(), cfg.lambda_grid[li], density), cfg.alpha);
            StateMatrix states = harvest_states({sub}, train.u, train.washout, false, act);
            const auto projected = projected_energy(e, states.values);
            latest.push_back({std::move(sub), std::move(states)});
            if (projected) out.push_back({static_cast<std::size_t>(k), *projected});
        }
        return out;
    };

    const Selection sel = select_candidate(pool, e.rowwise().squaredNorm(), cfg,
                                           static_cast<double>(j + 1) * cfg.n_sub,
                                           root.derive({block_id, kAnnealTag}));
    Candidate& chosen = latest[sel.candidate_index];
    return BlockChoice{std::move(chosen.block), std::move(chosen.states), sel.score, sel.r, sel.mu};
}

Refit refit_readout(const std::vector<const Matrix*>& states, const Matrix& u_scored, const Matrix& t,
                    bool include_input) {
    Eigen::Index rows = include_input ? u_scored.rows() : 0;
    for (const Matrix* s : states) {
        if (s->cols() != t.cols()) throw InvalidArgument("refit_readout: state and target column counts differ");
        rows += s->rows();
    }
    if (include_input && u_scored.cols() != t.cols())
        throw InvalidArgument("refit_readout: input and target column counts differ");
    Matrix x(rows, t.cols());
    Eigen::Index off = 0;
    for (const Matrix* s : states) {
        x.middleRows(off, s->rows()) = *s;
        off += s->rows();
    }
    if (include_input) x.bottomRows(u_scored.rows()) = u_scored;
    Refit out;
    out.w_out = least_squares_readout(x, t);
    out.residual = out.w_out * x - t;
    return out;
}

bool early_stop(const std::vector<double>& val_errors, int j_step) {
    if (j_step < 0 || val_errors.size() < static_cast<std::size_t>(j_step) + 1) return false;
    const std::size_t start = val_errors.size() - static_cast<std::size_t>(j_step) - 1;
    for (std::size_t i = start; i + 1 < val_errors.size(); ++i)
        if (val_errors[i] > val_errors[i + 1]) return false;
    return true;
}

// ---------------------------------------------------------------------------
// Training loops

namespace {

void check_pair(const Dataset& train, const Dataset& val) {
    if (train.length() == 0) throw InvalidArgument("training split is empty");
    validate(train);
    validate(val);
    if (train.input_dim() != val.input_dim() || train.output_dim() != val.output_dim())
        throw InvalidArgument("training and validation splits differ in K or L");
}

Matrix scored_inputs(const Dataset& d) { return d.u.rightCols(d.length() - d.washout); }

// Shared bookkeeping for growing models: readout refits and error traces.
struct Tracker {
    const Dataset& train;
    const Dataset& val;
    bool include_input;
    Matrix t_train, t_val, u_train, u_val;

    Tracker(const Dataset& tr, const Dataset& va, bool inc)
        : train(tr), val(va), include_input(inc),
          t_train(tr.scored_targets()), t_val(va.scored_targets()),
          u_train(scored_inputs(tr)), u_val(scored_inputs(va)) {}

    struct Eval {
        Refit fit;
        double train_nrmse;
        double val_nrmse;
        double val_error;  // Frobenius
    };

    Eval evaluate(const std::vector<const Matrix*>& train_states, const std::vector<const Matrix*>& val_states) const {
        Eval ev{refit_readout(train_states, u_train, t_train, include_input), 0, 0, 0};
        Eigen::Index rows = include_input ? u_val.rows() : 0;
        for (const Matrix* s : val_states) rows += s->rows();
        Matrix xv(rows, t_val.cols());
        Eigen::Index off = 0;
        for (const Matrix* s : val_states) {
            xv.middleRows(off, s->rows()) = *s;
            off += s->rows();
        }
        if (include_input) xv.bottomRows(u_val.rows()) = u_val;
        const Matrix yv = ev.fit.w_out * xv;
        ev.train_nrmse = nrmse(ev.fit.residual + t_train, t_train);
        ev.val_nrmse = nrmse(yv, t_val);
        ev.val_error = (yv - t_val).norm();
        return ev;
    }
};

std::vector<const Matrix*> pointers(const std::vector<Matrix>& v, std::size_t count) {
    std::vector<const Matrix*> out;
    for (std::size_t i = 0; i < count; ++i) out.push_back(&v[i]);
    return out;
}

}  // namespace

TrainResult train_brscn(const Dataset& train, const Dataset& val, const TrainConfig& cfg) {
    validate(cfg);
    check_pair(train, val);
    const Activation act = Activation::Tanh;
    const Tracker tracker(train, val, cfg.readout_includes_input);
    const RngStream root(cfg.base_seed);

    TrainResult result;
    BlockModel& model = result.model;
    model.readout_includes_input = cfg.readout_includes_input;
    model.activation = act;
    model.washout = train.washout;
    model.input_dim = train.input_dim();
    model.output_dim = train.output_dim();

    std::vector<Matrix> train_states, val_states;
    std::vector<double> val_errors;
    auto add_block = [&](SubReservoir block, Matrix states) {
        val_states.push_back(harvest_states({block}, val.u, val.washout, false, act).values);
        train_states.push_back(std::move(states));
        model.blocks.push_back(std::move(block));
    };

    // First block: random, scaled, no supervisory test.
    {
        RngStream rng = root.derive({1, 0, 0});
        const double density = draw_density(rng, cfg);
        SubReservoir first = scale_for_esp(
            sample_subreservoir(rng, cfg.n_sub, train.input_dim(), cfg.lambda_grid.front(), density), cfg.alpha);
        Matrix states = harvest_states({first}, train.u, train.washout, false, act).values;
        add_block(std::move(first), std::move(states));
    }
    auto ev = tracker.evaluate(pointers(train_states, 1), pointers(val_states, 1));
    Matrix e = ev.fit.residual;
    model.w_out = ev.fit.w_out;
    val_errors.push_back(ev.val_error);
    result.log.rows.push_back({1, model.state_dim(), ev.train_nrmse, ev.val_nrmse, 0.0, cfg.lambda_grid.front(),
                               cfg.r_initial});

    bool stopped = false;
    int j = 1;
    while (j < cfg.j_max && e.norm() > cfg.epsilon) {
        if (early_stop(val_errors, cfg.j_step)) {
            const auto keep = static_cast<std::size_t>(j - cfg.j_step);
            model.blocks.resize(keep);
            train_states.resize(keep);
            val_states.resize(keep);
            ev = tracker.evaluate(pointers(train_states, keep), pointers(val_states, keep));
            model.w_out = ev.fit.w_out;
            e = ev.fit.residual;
            result.log.termination = Termination::EarlyStop;
            stopped = true;
            break;
        }
        BlockChoice choice;
        try {
            choice = configure_block(e, train, j, cfg, act);
        } catch (const ConstructionStalled&) {
            result.log.termination = Termination::Stalled;
            stopped = true;
            break;
        }
        BlockAudit audit;
        audit.block = choice.block;
        audit.residual_before = e;
        audit.residual_sq_before = e.squaredNorm();
        audit.mu = choice.mu;
        audit.score = choice.score;

        add_block(std::move(choice.block), std::move(choice.states.values));
        ++j;
        ev = tracker.evaluate(pointers(train_states, train_states.size()), pointers(val_states, val_states.size()));
        e = ev.fit.residual;
        model.w_out = ev.fit.w_out;
        val_errors.push_back(ev.val_error);
        audit.residual_sq_after = e.squaredNorm();
        result.log.audit.push_back(std::move(audit));
        result.log.rows.push_back({j, model.state_dim(), ev.train_nrmse, ev.val_nrmse, choice.score.xi_total,
                                   choice.score.lambda, choice.r_used});
    }
    if (!stopped) result.log.termination = e.norm() <= cfg.epsilon ? Termination::Epsilon : Termination::JMax;
    return result;
}

// ---------------------------------------------------------------------------
// Point-incremental baseline

namespace {

// Sparse row of `width` entries in [-lambda, lambda].
Vector sparse_row(RngStream& rng, Eigen::Index width, double lambda, double density) {
    Vector row = Vector::Zero(width);
    const auto nnz = std::max<Eigen::Index>(1, std::llround(density * static_cast<double>(width)));
    std::vector<Eigen::Index> order(static_cast<std::size_t>(width));
    for (Eigen::Index i = 0; i < width; ++i) order[static_cast<std::size_t>(i)] = i;
    for (Eigen::Index i = 0; i < std::min(nnz, width); ++i) {
        const auto pick = i + static_cast<Eigen::Index>(rng.below(static_cast<std::uint64_t>(width - i)));
        std::swap(order[static_cast<std::size_t>(i)], order[static_cast<std::size_t>(pick)]);
        row(order[static_cast<std::size_t>(i)]) = rng.uniform(-lambda, lambda);
    }
    return row;
}

}  // namespace

TrainResult train_rscn(const Dataset& train, const Dataset& val, const TrainConfig& cfg) {
    validate(cfg);
    check_pair(train, val);
    constexpr Eigen::Index kInitialNodes = 5;
    const Activation act = Activation::Tanh;
    const Tracker tracker(train, val, cfg.readout_includes_input);
    const RngStream root(cfg.base_seed);
    const Eigen::Index k = train.input_dim();
    const Eigen::Index n_max = std::max<Eigen::Index>(kInitialNodes, static_cast<Eigen::Index>(cfg.j_max) * cfg.n_sub);
    const Eigen::Index n_all = train.length();
    const Eigen::Index wash = train.washout;
    // Early stopping counts nodes at the same granularity as the block learner.
    const int node_step = cfg.j_step * cfg.n_sub;

    // Unscaled lower-triangular reservoir; the scaled copy drives the states.
    SubReservoir raw;
    {
        RngStream rng = root.derive({0, 0, 0});
        const double lambda = cfg.lambda_grid.front();
        const double density = draw_density(rng, cfg);
        raw.lambda_used = lambda;
        raw.w_in = seeded_uniform(rng, kInitialNodes, k, lambda);
        raw.w_r = Matrix::Zero(kInitialNodes, kInitialNodes);
        for (Eigen::Index i = 0; i < kInitialNodes; ++i)
            raw.w_r.row(i).head(i + 1) = sparse_row(rng, i + 1, lambda, density).transpose();
        raw.bias = seeded_uniform(rng, kInitialNodes, 1, lambda).col(0);
    }

    SubReservoir scaled;
    Matrix full_states;  // every column, washout included
    Matrix val_states;
    auto rescale = [&] {
        scaled = scale_for_esp(raw, cfg.alpha);
        full_states = run_block(scaled, train.u, act);
        val_states = harvest_states({scaled}, val.u, val.washout, false, act).values;
    };
    rescale();

    TrainResult result;
    std::vector<double> val_errors;
    auto evaluate = [&] {
        const Matrix train_scored = full_states.rightCols(n_all - wash);
        return tracker.evaluate({&train_scored}, {&val_states});
    };
    auto ev = evaluate();
    Matrix e = ev.fit.residual;
    val_errors.push_back(ev.val_error);
    result.log.rows.push_back({1, kInitialNodes, ev.train_nrmse, ev.val_nrmse, 0.0, cfg.lambda_grid.front(),
                               cfg.r_initial});

    bool stopped = false;
    int step = 1;
    Eigen::Index nodes = kInitialNodes;
    Matrix kept_w_out = ev.fit.w_out;
    while (nodes < n_max && e.norm() > cfg.epsilon) {
        if (early_stop(val_errors, node_step)) {
            const Eigen::Index keep = nodes - node_step;
            raw.w_in.conservativeResize(keep, Eigen::NoChange);
            raw.w_r.conservativeResize(keep, keep);
            raw.bias.conservativeResize(keep);
            rescale();
            ev = evaluate();
            kept_w_out = ev.fit.w_out;
            e = ev.fit.residual;
            nodes = keep;
            result.log.termination = Termination::EarlyStop;
            stopped = true;
            break;
        }

        // Scale applied to the existing matrix; candidate rows are drawn raw
        // and multiplied by the same factor.
        const double factor = raw.w_r.isZero(0.0) ? 1.0 : scaled.w_r.norm() / raw.w_r.norm();
        const auto node_id = static_cast<std::uint64_t>(nodes + 1);
        struct NodeCandidate {
            Vector w_in;
            Vector w_r_row;
            double bias;
        };
        std::vector<NodeCandidate> latest;
        auto pool = [&](std::size_t li, int attempt) {
            latest.clear();
            std::vector<Pooled> out;
            const double lambda = cfg.lambda_grid[li];
            for (int c = 0; c < cfg.g_max; ++c) {
                RngStream rng = root.derive(
                    {node_id, li, static_cast<std::uint64_t>(attempt), static_cast<std::uint64_t>(c)});
                const double density = draw_density(rng, cfg);
                NodeCandidate cand;
                cand.w_in = seeded_uniform(rng, k, 1, lambda).col(0);
                cand.w_r_row = sparse_row(rng, nodes + 1, lambda, density);
                cand.bias = rng.uniform(-lambda, lambda);

                const Vector feedback = factor * cand.w_r_row.head(nodes);
                const double self = factor * cand.w_r_row(nodes);
                Eigen::RowVectorXd drive = cand.w_in.transpose() * train.u;
                for (Eigen::Index i = 0; i < nodes; ++i)
                    if (feedback(i) != 0.0) drive.tail(n_all - 1) += feedback(i) * full_states.row(i).head(n_all - 1);
                Eigen::RowVectorXd g(n_all);
                double x = 0.0;
                for (Eigen::Index t = 0; t < n_all; ++t) {
                    x = activate(act, drive(t) + self * x + cand.bias);
                    g(t) = x;
                }
                const Eigen::RowVectorXd g_scored = g.tail(n_all - wash);
                const double gg = g_scored.squaredNorm();
                latest.push_back(std::move(cand));
                if (!(gg > 0.0)) continue;
                const Vector eg = e * g_scored.transpose();
                out.push_back({static_cast<std::size_t>(c), (eg.array().square() / gg).matrix()});
            }
            return out;
        };

        Selection sel;
        try {
            sel = select_candidate(pool, e.rowwise().squaredNorm(), cfg, static_cast<double>(nodes + 1),
                                   root.derive({node_id, kAnnealTag}));
        } catch (const ConstructionStalled&) {
            result.log.termination = Termination::Stalled;
            stopped = true;
            break;
        }
        const NodeCandidate& chosen = latest[sel.candidate_index];
        raw.w_in.conservativeResize(nodes + 1, Eigen::NoChange);
        raw.w_in.row(nodes) = chosen.w_in.transpose();
        raw.w_r.conservativeResize(nodes + 1, nodes + 1);
        raw.w_r.col(nodes).setZero();
        raw.w_r.row(nodes) = chosen.w_r_row.transpose();
        raw.bias.conservativeResize(nodes + 1);
        raw.bias(nodes) = chosen.bias;
        ++nodes;
        ++step;
        rescale();

        ev = evaluate();
        e = ev.fit.residual;
        kept_w_out = ev.fit.w_out;
        val_errors.push_back(ev.val_error);
        result.log.rows.push_back({step, nodes, ev.train_nrmse, ev.val_nrmse, sel.score.xi_total, sel.score.lambda,
                                   sel.r});
    }
    if (!stopped) result.log.termination = e.norm() <= cfg.epsilon ? Termination::Epsilon : Termination::JMax;

    BlockModel& model = result.model;
    model.blocks = {scaled};
    model.w_out = kept_w_out;
    model.readout_includes_input = cfg.readout_includes_input;
    model.activation = act;
    model.washout = train.washout;
    model.input_dim = k;
    model.output_dim = train.output_dim();
    return result;
}

// ---------------------------------------------------------------------------
// ESN baseline

double esn_lambda(const TrainConfig& cfg) {
    return std::clamp(cfg.lambda_grid.front(), 0.1, 1.0);
}

BlockModel train_esn(const Dataset& train, const TrainConfig& cfg, Eigen::Index n_nodes) {
    validate(cfg);
    validate(train);
    if (n_nodes < 1) throw InvalidArgument("train_esn: n_nodes must be >= 1");
    RngStream rng = RngStream(cfg.base_seed).derive({0xE5, static_cast<std::uint64_t>(n_nodes)});
    const double density = draw_density(rng, cfg);
    BlockModel model;
    model.blocks.push_back(
        scale_for_esp(sample_subreservoir(rng, n_nodes, train.input_dim(), esn_lambda(cfg), density), cfg.alpha));
    model.readout_includes_input = true;
    model.activation = Activation::Tanh;
    model.washout = train.washout;
    model.input_dim = train.input_dim();
    model.output_dim = train.output_dim();
    const StateMatrix x = readout_regressors(model, train.u, train.washout);
    model.w_out = least_squares_readout(x.values, train.scored_targets());
    return model;
}

}  // namespace brscn
