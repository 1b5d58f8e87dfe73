#pragma once

#include <cstdint>
#include <string>
#include <utility>
#include <vector>

#include "brscn/numeric.hpp"

namespace brscn {

/// Input/target sequences of one split. Columns are time steps.
struct Dataset {
    Matrix u;  // K x n
    Matrix t;  // L x n
    Eigen::Index washout = 0;
    std::string name;

    Eigen::Index length() const noexcept { return u.cols(); }
    Eigen::Index input_dim() const noexcept { return u.rows(); }
    Eigen::Index output_dim() const noexcept { return t.rows(); }
    /// Targets after the washout columns.
    Matrix scored_targets() const { return t.rightCols(length() - washout); }
};

/// Throws InvalidArgument unless u and t share n and washout < n.
void validate(const Dataset& d);

struct Splits {
    Dataset train;
    Dataset val;
    Dataset test;
};

/// Mackey-Glass delay equation du/dt = upsilon u(t) + alpha_mg u(t - tau) / (1 + u(t - tau)^10).
struct MGConfig {
    double upsilon = -0.1;
    double alpha_mg = 0.2;
    int tau_delay = 17;  // delay in integration steps
    double dt = 1.0;
    int length = 1177;
    double init_low = 0.1;
    double init_high = 1.3;
    std::uint64_t seed = 1;
};

/// Midpoint RK2. The first tau_delay + 1 points hold the initial history, a
/// constant drawn from [init_low, init_high]; the delayed term at half steps
/// is linearly interpolated.
std::vector<double> gen_mackey_glass(const MGConfig& cfg);

enum class MGVariant { MG, MG1, MG2 };
MGVariant mg_variant_from_string(const std::string& name);

/// Lagged-input prediction of y(n + 6). Splits: samples 1-500 train,
/// 501-800 validation, the rest test; washout 20 each.
Splits build_mg_task(const std::vector<double>& series, MGVariant variant);

/// Test-phase excitation of the plant benchmark, defined for n in [1, 1000].
double plant_test_input(int n);

/// Simulates the nonlinear plant for the given input sequence, with
/// y(1) = y(2) = y(3) = 0 and y(4) = 0.1. Returns y(1..len(u)+1).
std::vector<double> simulate_plant(const std::vector<double>& u);

/// Training (2000, uniform input), validation (1000, fresh uniform input)
/// and test (1000, piecewise input) splits. Inputs [y(n), u(n)], target
/// y(n+1), washout 100.
Splits gen_plant(std::uint64_t seed);

/// CSV with header u_1..u_K,t_1..t_L.
Dataset load_csv(const std::string& path, Eigen::Index k, Eigen::Index l, Eigen::Index washout);
/// K and L read from the header (number of u_ and t_ columns).
std::pair<Eigen::Index, Eigen::Index> csv_dims(const std::string& path);
Dataset load_csv(const std::string& path, Eigen::Index washout);
void write_csv(const Dataset& d, const std::string& path);

enum class DebutanizerMode { Reduced, Full };

/// Soft-sensor regressors from raw columns u1..u7 and y. Reduced mode:
/// [u1..u5, y(n-1)]; full mode: u1..u5, u5 lags 1-3, (u1+u2)/2, y lags 1-4.
/// Rows before raw index 1500 train, the rest test; validation is the test
/// split with Gaussian noise (add_noise_validation). Washout 100.
Splits debutanizer_features(const Dataset& raw, DebutanizerMode mode, std::uint64_t noise_seed = 0,
                            double sigma_rel = 0.05);

/// Adds N(0, (sigma_rel * std(channel))^2) noise to every input and target channel.
Dataset add_noise_validation(const Dataset& base, double sigma_rel, std::uint64_t seed);

}  // namespace brscn
