#include "brscn/data.hpp"

#include <charconv>
#include <cmath>
#include <fstream>
#include <numbers>
#include <sstream>
#include <string_view>

#include "brscn/errors.hpp"

namespace brscn {

void validate(const Dataset& d) {
    if (d.u.cols() != d.t.cols()) throw InvalidArgument("dataset '" + d.name + "': u and t lengths differ");
    if (d.washout < 0 || d.washout >= d.u.cols())
        throw InvalidArgument("dataset '" + d.name + "': washout must be smaller than the length");
}

// ---------------------------------------------------------------------------
// Mackey-Glass

std::vector<double> gen_mackey_glass(const MGConfig& cfg) {
    if (cfg.tau_delay < 1) throw InvalidArgument("mackey-glass: tau_delay must be >= 1");
    if (cfg.length <= cfg.tau_delay) throw InvalidArgument("mackey-glass: length must exceed tau_delay");
    if (!(cfg.dt > 0.0)) throw InvalidArgument("mackey-glass: dt must be positive");

    RngStream rng(cfg.seed);
    const auto tau = static_cast<std::size_t>(cfg.tau_delay);
    const auto len = static_cast<std::size_t>(cfg.length);
    std::vector<double> s;
    s.reserve(len);
    // Constant initial function x(t) = x0 on the delay interval.
    const double x0 = rng.uniform(cfg.init_low, cfg.init_high);
    s.assign(std::min(tau + 1, len), x0);

    auto rhs = [&](double x, double delayed) {
        return cfg.upsilon * x + cfg.alpha_mg * delayed / (1.0 + std::pow(delayed, 10));
    };
    while (s.size() < len) {
        const std::size_t i = s.size() - 1;
        const double x = s[i];
        const double d0 = s[i - tau];
        const double d_half = 0.5 * (s[i - tau] + s[i - tau + 1]);
        const double k1 = rhs(x, d0);
        const double k2 = rhs(x + 0.5 * cfg.dt * k1, d_half);
        s.push_back(x + cfg.dt * k2);
    }
    return s;
}

MGVariant mg_variant_from_string(const std::string& name) {
    if (name == "mg" || name == "MG") return MGVariant::MG;
    if (name == "mg1" || name == "MG1") return MGVariant::MG1;
    if (name == "mg2" || name == "MG2") return MGVariant::MG2;
    throw InvalidArgument("unknown MG variant '" + name + "'");
}

namespace {

Dataset slice(const Matrix& u, const Matrix& t, Eigen::Index begin, Eigen::Index count,
              Eigen::Index washout, std::string name) {
    Dataset d;
    d.u = u.middleCols(begin, count);
    d.t = t.middleCols(begin, count);
    d.washout = washout;
    d.name = std::move(name);
    validate(d);
    return d;
}

}  // namespace

Splits build_mg_task(const std::vector<double>& series, MGVariant variant) {
    constexpr Eigen::Index kMaxLag = 18, kHorizon = 6, kWashout = 20;
    constexpr Eigen::Index kTrain = 500, kVal = 300;
    std::vector<int> lags;
    switch (variant) {
        case MGVariant::MG: lags = {0, 6, 12, 18}; break;
        case MGVariant::MG1: lags = {6, 12, 18}; break;
        case MGVariant::MG2: lags = {12, 18}; break;
    }
    const auto len = static_cast<Eigen::Index>(series.size());
    const Eigen::Index samples = len - kMaxLag - kHorizon;
    if (samples < kTrain + kVal + kWashout + 1)
        throw InvalidArgument("mackey-glass series too short for the task splits");

    Matrix u(static_cast<Eigen::Index>(lags.size()), samples);
    Matrix t(1, samples);
    for (Eigen::Index s = 0; s < samples; ++s) {
        const Eigen::Index n = s + kMaxLag;
        for (std::size_t r = 0; r < lags.size(); ++r) u(static_cast<Eigen::Index>(r), s) = series[n - lags[r]];
        t(0, s) = series[n + kHorizon];
    }
    Splits out;
    out.train = slice(u, t, 0, kTrain, kWashout, "train");
    out.val = slice(u, t, kTrain, kVal, kWashout, "val");
    out.test = slice(u, t, kTrain + kVal, samples - kTrain - kVal, kWashout, "test");
    return out;
}

// ---------------------------------------------------------------------------
// Nonlinear plant

double plant_test_input(int n) {
    const double pi = std::numbers::pi;
    if (n < 250) return std::sin(pi * n / 25.0);
    if (n < 500) return 1.0;
    if (n < 750) return -1.0;
    return 0.6 * std::cos(pi * n / 10.0) + 0.1 * std::cos(pi * n / 32.0) + 0.3 * std::sin(pi * n / 25.0);
}

std::vector<double> simulate_plant(const std::vector<double>& u) {
    // 1-based: u[n - 1] is u(n), y[n] is y(n).
    const std::size_t len = u.size();
    std::vector<double> y(len + 2, 0.0);
    if (len + 1 >= 4) y[4] = 0.1;
    auto uu = [&](std::size_t n) { return u[n - 1]; };
    for (std::size_t n = 4; n <= len; ++n) {
        y[n + 1] = 0.72 * y[n] + 0.025 * y[n - 1] * uu(n - 1) + 0.01 * uu(n - 2) * uu(n - 2) + 0.2 * uu(n - 3);
    }
    return std::vector<double>(y.begin() + 1, y.end());
}

namespace {

Dataset plant_split(const std::vector<double>& u, std::string name) {
    const std::vector<double> y = simulate_plant(u);  // y(1..len+1)
    const auto n = static_cast<Eigen::Index>(u.size());
    Dataset d;
    d.u.resize(2, n);
    d.t.resize(1, n);
    for (Eigen::Index i = 0; i < n; ++i) {
        d.u(0, i) = y[i];
        d.u(1, i) = u[i];
        d.t(0, i) = y[i + 1];
    }
    d.washout = 100;
    d.name = std::move(name);
    validate(d);
    return d;
}

}  // namespace

Splits gen_plant(std::uint64_t seed) {
    RngStream root(seed);
    auto uniform_input = [&](std::uint64_t tag, std::size_t len) {
        RngStream rng = root.derive({tag});
        std::vector<double> u(len);
        for (auto& v : u) v = rng.uniform(-1.0, 1.0);
        return u;
    };
    std::vector<double> test_u(1000);
    for (int n = 1; n <= 1000; ++n) test_u[static_cast<std::size_t>(n - 1)] = plant_test_input(n);

    Splits out;
    out.train = plant_split(uniform_input(1, 2000), "train");
    out.val = plant_split(uniform_input(2, 1000), "val");
    out.test = plant_split(test_u, "test");
    return out;
}

// ---------------------------------------------------------------------------
// CSV

namespace {

std::vector<std::string_view> split_fields(std::string_view line) {
    std::vector<std::string_view> out;
    std::size_t start = 0;
    while (true) {
        const std::size_t comma = line.find(',', start);
        out.push_back(line.substr(start, comma == std::string_view::npos ? std::string_view::npos : comma - start));
        if (comma == std::string_view::npos) break;
        start = comma + 1;
    }
    return out;
}

std::string_view trim(std::string_view s) {
    while (!s.empty() && (s.front() == ' ' || s.front() == '\t')) s.remove_prefix(1);
    while (!s.empty() && (s.back() == ' ' || s.back() == '\t' || s.back() == '\r')) s.remove_suffix(1);
    return s;
}

std::string expected_header(Eigen::Index k, Eigen::Index l) {
    std::string h;
    for (Eigen::Index i = 1; i <= k; ++i) h += (h.empty() ? "" : ",") + ("u_" + std::to_string(i));
    for (Eigen::Index i = 1; i <= l; ++i) h += ",t_" + std::to_string(i);
    return h;
}

}  // namespace

std::pair<Eigen::Index, Eigen::Index> csv_dims(const std::string& path) {
    std::ifstream in(path);
    if (!in) throw ParseError("cannot open data file '" + path + "'");
    std::string line;
    if (!std::getline(in, line)) throw ParseError(path + ": missing header row");
    Eigen::Index k = 0, l = 0;
    for (const auto& f : split_fields(trim(line))) {
        const std::string_view name = trim(f);
        if (name.starts_with("u_")) ++k;
        else if (name.starts_with("t_")) ++l;
        else throw ParseError(path + ": unexpected header column '" + std::string(name) + "'");
    }
    if (k < 1 || l < 1) throw ParseError(path + ": header needs at least one u_ and one t_ column");
    return {k, l};
}

Dataset load_csv(const std::string& path, Eigen::Index washout) {
    const auto [k, l] = csv_dims(path);
    return load_csv(path, k, l, washout);
}

Dataset load_csv(const std::string& path, Eigen::Index k, Eigen::Index l, Eigen::Index washout) {
    if (k < 1 || l < 1) throw InvalidArgument("load_csv: k and l must be >= 1");
    std::ifstream in(path);
    if (!in) throw ParseError("cannot open data file '" + path + "'");

    std::string line;
    if (!std::getline(in, line)) throw ParseError(path + ": missing header row");
    const auto header = split_fields(trim(line));
    const auto width = static_cast<std::size_t>(k + l);
    if (header.size() != width)
        throw ParseError(path + ": header has " + std::to_string(header.size()) + " columns, expected " +
                         std::to_string(width));
    const std::string expected_line = expected_header(k, l);
    const auto expected = split_fields(expected_line);
    for (std::size_t c = 0; c < width; ++c) {
        if (trim(header[c]) != expected[c])
            throw ParseError(path + ": header column " + std::to_string(c + 1) + " is '" +
                             std::string(trim(header[c])) + "', expected '" + std::string(expected[c]) + "'");
    }

    std::vector<double> values;
    std::size_t row = 0;
    while (std::getline(in, line)) {
        if (trim(line).empty()) continue;
        ++row;
        const auto fields = split_fields(trim(line));
        if (fields.size() != width)
            throw ParseError(path + ": row " + std::to_string(row) + " has " + std::to_string(fields.size()) +
                             " columns, expected " + std::to_string(width));
        for (std::size_t c = 0; c < width; ++c) {
            const std::string_view f = trim(fields[c]);
            double v = 0.0;
            const auto [ptr, ec] = std::from_chars(f.data(), f.data() + f.size(), v);
            if (ec != std::errc() || ptr != f.data() + f.size() || f.empty() || !std::isfinite(v))
                throw ParseError(path + ": row " + std::to_string(row) + ", column " + std::to_string(c + 1) +
                                 ": '" + std::string(f) + "' is not a number");
            values.push_back(v);
        }
    }
    if (row == 0) throw ParseError(path + ": no data rows");

    Dataset d;
    const auto n = static_cast<Eigen::Index>(row);
    d.u.resize(k, n);
    d.t.resize(l, n);
    for (Eigen::Index r = 0; r < n; ++r) {
        for (Eigen::Index c = 0; c < k; ++c) d.u(c, r) = values[static_cast<std::size_t>(r * (k + l) + c)];
        for (Eigen::Index c = 0; c < l; ++c) d.t(c, r) = values[static_cast<std::size_t>(r * (k + l) + k + c)];
    }
    d.washout = washout;
    d.name = path;
    if (washout < 0 || washout >= n)
        throw InvalidArgument(path + ": washout " + std::to_string(washout) + " is not below the row count " +
                              std::to_string(n));
    return d;
}

void write_csv(const Dataset& d, const std::string& path) {
    std::ofstream out(path);
    if (!out) throw IoError("cannot open '" + path + "' for writing");
    out << expected_header(d.u.rows(), d.t.rows()) << '\n';
    char buf[32];
    auto put = [&](double v) {
        const auto res = std::to_chars(buf, buf + sizeof buf, v, std::chars_format::general, 17);
        out.write(buf, res.ptr - buf);
    };
    for (Eigen::Index c = 0; c < d.u.cols(); ++c) {
        for (Eigen::Index r = 0; r < d.u.rows(); ++r) {
            if (r) out << ',';
            put(d.u(r, c));
        }
        for (Eigen::Index r = 0; r < d.t.rows(); ++r) {
            out << ',';
            put(d.t(r, c));
        }
        out << '\n';
    }
    if (!out) throw IoError("failed writing '" + path + "'");
}

// ---------------------------------------------------------------------------
// Industrial data

Splits debutanizer_features(const Dataset& raw, DebutanizerMode mode, std::uint64_t noise_seed,
                            double sigma_rel) {
    if (raw.u.rows() != 7 || raw.t.rows() != 1)
        throw InvalidArgument("debutanizer: expected 7 input columns and 1 target column");
    constexpr Eigen::Index kTrainEnd = 1500, kWashout = 100;
    const Eigen::Index n = raw.u.cols();
    const Eigen::Index max_lag = mode == DebutanizerMode::Reduced ? 1 : 4;
    const Eigen::Index k = mode == DebutanizerMode::Reduced ? 6 : 13;
    if (n <= kTrainEnd + kWashout) throw InvalidArgument("debutanizer: too few rows for the 1500-sample training split");

    const Eigen::Index samples = n - max_lag;
    Matrix u(k, samples), t(1, samples);
    auto raw_u = [&](int var, Eigen::Index i) { return raw.u(var - 1, i); };
    auto raw_y = [&](Eigen::Index i) { return raw.t(0, i); };
    for (Eigen::Index s = 0; s < samples; ++s) {
        const Eigen::Index i = s + max_lag;
        Eigen::Index r = 0;
        for (int var = 1; var <= 5; ++var) u(r++, s) = raw_u(var, i);
        if (mode == DebutanizerMode::Reduced) {
            u(r++, s) = raw_y(i - 1);
        } else {
            for (int lag = 1; lag <= 3; ++lag) u(r++, s) = raw_u(5, i - lag);
            u(r++, s) = 0.5 * (raw_u(1, i) + raw_u(2, i));
            for (int lag = 1; lag <= 4; ++lag) u(r++, s) = raw_y(i - lag);
        }
        t(0, s) = raw_y(i);
    }
    const Eigen::Index train_count = kTrainEnd - max_lag;
    Splits out;
    out.train = slice(u, t, 0, train_count, kWashout, "train");
    out.test = slice(u, t, train_count, samples - train_count, kWashout, "test");
    out.val = add_noise_validation(out.test, sigma_rel, noise_seed);
    out.val.name = "val";
    return out;
}

Dataset add_noise_validation(const Dataset& base, double sigma_rel, std::uint64_t seed) {
    if (sigma_rel < 0.0) throw InvalidArgument("add_noise_validation: sigma_rel must be >= 0");
    Dataset out = base;
    out.name = base.name + "+noise";
    if (sigma_rel == 0.0) return out;
    RngStream root(seed);
    auto perturb = [&](Matrix& m, std::uint64_t tag) {
        for (Eigen::Index r = 0; r < m.rows(); ++r) {
            const double sd = std::sqrt(pooled_variance(m.row(r)));
            RngStream rng = root.derive({tag, static_cast<std::uint64_t>(r)});
            for (Eigen::Index c = 0; c < m.cols(); ++c) m(r, c) += sigma_rel * sd * rng.normal();
        }
    };
    perturb(out.u, 0);
    perturb(out.t, 1);
    return out;
}

}  // namespace brscn
