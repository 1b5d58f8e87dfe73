#include <cmath>
#include <fstream>

#include "doctest.h"
#include "tmpdir.hpp"

#include "brscn/builder.hpp"
#include "brscn/errors.hpp"
#include "brscn/online.hpp"

using namespace brscn;

namespace {

OnlineState scalar_state(double w, double gamma, double c) {
    return OnlineState{Matrix::Constant(1, 1, w), gamma, c, 0};
}

}  // namespace

TEST_CASE("projection_step") {
    const Vector one = Vector::Constant(1, 1.0);
    CHECK(projection_step(scalar_state(0, 1, 0), one, one).w_current(0, 0) == 1.0);
    CHECK(projection_step(scalar_state(0, 1, 1), one, one).w_current(0, 0) == 0.5);
    CHECK(projection_step(scalar_state(0, 1, 1), one, one).step == 1);

    RngStream rng(1);
    const OnlineState s{seeded_uniform(rng, 2, 5, 1.0), 0.7, 1e-4, 3};
    const Vector g = seeded_uniform(rng, 5, 1, 1.0).col(0);
    const OnlineState fixed = projection_step(s, g, s.w_current * g);
    CHECK((fixed.w_current - s.w_current).norm() < 1e-15);

    CHECK_THROWS_AS(projection_step(scalar_state(0, 1, 0), Vector::Zero(1), one), InvalidArgument);
    CHECK_THROWS_AS(projection_step(s, Vector::Zero(4), Vector::Zero(2)), InvalidArgument);
}

TEST_CASE("pe_window_check") {
    auto r = pe_window_check(std::vector<double>(10, 1.0), 20, 5);
    CHECK(r.windowed_sum == 10.0);
    CHECK(r.pe_satisfied);
    CHECK(r.window_length == 10);

    std::vector<double> gap(10, 1.0);
    gap[4] = 0.0;
    CHECK_FALSE(pe_window_check(gap, 20, 5).pe_satisfied);

    r = pe_window_check(std::vector<double>{1, 3, 1, 3}, 12, 4);
    CHECK(r.windowed_sum == 8.0);
    CHECK(r.pointwise_max == 3.0);
    CHECK(r.pointwise_min == 1.0);
    CHECK(r.pe_satisfied);

    std::vector<Vector> gs{Vector::Constant(2, 1.0), Vector::Constant(2, 2.0)};
    r = pe_window_check(gs, 100, 1);
    CHECK(r.windowed_sum == 10.0);
    CHECK(r.pointwise_min == 2.0);
    CHECK_FALSE(pe_window_check(std::vector<double>{1, 30}, 20, 1).pe_satisfied);
}

TEST_CASE("gain_condition_check") {
    CHECK(gain_condition_check(0.0, 0.1, 1.0, 0.5));
    CHECK_FALSE(gain_condition_check(0.0, 1.0, 2.0, 0.5));
    const double rhs = 2 * 0.5 * 3.0 - 0.25 * 4.0;
    CHECK(gain_condition_check(rhs, 0.5, 2.0, 3.0));
}

TEST_CASE("realizable stream converges toward the reference") {
    RngStream rng(7);
    const Matrix w0 = seeded_uniform(rng, 2, 6, 1.0);
    const Matrix g = seeded_uniform(rng, 6, 300, 1.0);
    OnlineOptions opts;
    opts.c = 1e-6;
    opts.n_w = 30;
    opts.eta1 = 1e3;
    opts.eta2 = 1.0;
    opts.w_reference = w0;
    const OnlineLog log = run_online_regressors(Matrix::Zero(2, 6), g, w0 * g, opts);
    REQUIRE(log.rows.size() == 300);
    CHECK(log.windows.size() == 10);
    CHECK(log.window_ends.back() == 300);
    CHECK(log.rows[0].delta_v == 0.0);
    CHECK(log.rows[0].delta_p_inverse == 0.0);
    for (std::size_t i = 1; i < log.rows.size(); ++i) {
        CHECK(log.rows[i].weight_error_fro <= log.rows[i - 1].weight_error_fro + 1e-12);
        CHECK(log.rows[i].p_inverse == doctest::Approx(opts.c + g.col(static_cast<Eigen::Index>(i)).squaredNorm()));
    }
    CHECK(log.rows.back().weight_error_fro < 1e-3);
    CHECK((log.w_final - w0).norm() == doctest::Approx(log.rows.back().weight_error_fro));
}

TEST_CASE("fixed point when the readout already fits") {
    RngStream rng(8);
    const Matrix w = seeded_uniform(rng, 1, 4, 1.0);
    const Matrix g = seeded_uniform(rng, 4, 50, 1.0);
    OnlineOptions opts;
    const OnlineLog log = run_online_regressors(w, g, w * g, opts);
    CHECK((log.w_final - w).norm() < 1e-13);
    CHECK(std::isnan(log.rows[0].weight_error_fro));
}

TEST_CASE("run_online on a trained model") {
    const Splits s = build_mg_task(gen_mackey_glass(MGConfig{}), MGVariant::MG);
    TrainConfig cfg;
    cfg.g_max = 10;
    cfg.j_max = 3;
    const BlockModel m = train_brscn(s.train, s.val, cfg).model;
    OnlineOptions opts;
    opts.eta1 = 1e4;
    opts.eta2 = 1.0;
    opts.w_reference = m.w_out;
    const OnlineLog log = run_online(m, s.test, opts);
    CHECK(static_cast<Eigen::Index>(log.rows.size()) == s.test.length() - s.test.washout);
    // The first prediction is made before any update.
    const Matrix y = predict(m, s.test.u, s.test.washout);
    CHECK(log.rows[0].prediction(0) == doctest::Approx(y(0, 0)));
    CHECK(log.rows[0].weight_error_fro >= 0.0);

    Dataset empty = s.test;
    empty.u = Matrix(4, 0);
    empty.t = Matrix(1, 0);
    empty.washout = 0;
    const OnlineLog none = run_online(m, empty, opts);
    CHECK(none.rows.empty());
    CHECK(none.windows.empty());

    Dataset wrong = s.test;
    wrong.u = wrong.u.topRows(3);
    CHECK_THROWS_AS(run_online(m, wrong, opts), InvalidArgument);

    TempDir dir;
    write_online_csv(log, dir.file("o.csv"));
    write_pe_csv(log, dir.file("p.csv"));
    std::ifstream o(dir.file("o.csv")), p(dir.file("p.csv"));
    std::string line;
    std::getline(o, line);
    CHECK(line == "n,prediction,target,weight_error_fro,v_lyapunov,delta_v,p_inverse");
    std::getline(p, line);
    CHECK(line == "window_end,windowed_sum,pointwise_min,pointwise_max,pe_satisfied,gain_ok");
    long lines = 0;
    while (std::getline(p, line)) ++lines;
    CHECK(lines == static_cast<long>(log.windows.size()));
}
