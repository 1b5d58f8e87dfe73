#pragma once

#include <cstdint>
#include <initializer_list>

#include <Eigen/Dense>

namespace brscn {

using Matrix = Eigen::MatrixXd;
using Vector = Eigen::VectorXd;

/// Counter-based random stream. Draw i of a stream is a pure function of
/// (seed, i), so independent streams can be derived for every candidate
/// without sharing state between them.
class RngStream {
public:
    explicit RngStream(std::uint64_t seed = 0, std::uint64_t position = 0)
        : seed_(seed), position_(position) {}

    std::uint64_t seed() const noexcept { return seed_; }
    std::uint64_t position() const noexcept { return position_; }

    std::uint64_t next_u64() noexcept;
    /// Uniform on [0, 1).
    double next_unit() noexcept;
    /// Uniform on [lo, hi].
    double uniform(double lo, double hi) noexcept;
    /// Standard normal (Box-Muller, consumes two draws).
    double normal() noexcept;
    /// Uniform integer in [0, n).
    std::uint64_t below(std::uint64_t n) noexcept;

    /// Child stream keyed by `path`; identical (seed, path) gives an
    /// identical child regardless of this stream's position.
    RngStream derive(std::initializer_list<std::uint64_t> path) const noexcept;

private:
    std::uint64_t seed_;
    std::uint64_t position_;
};

/// rows x cols matrix with entries uniform on [-lambda, lambda].
Matrix seeded_uniform(RngStream& rng, Eigen::Index rows, Eigen::Index cols, double lambda);

/// Largest eigenvalue magnitude. The matrix is split into the strongly
/// connected components of its sparsity graph first, so structurally
/// nilpotent parts report exactly 0 instead of rounding noise.
double spectral_radius(const Matrix& m, double tol = 1e-12);

double max_singular_value(const Matrix& m, double tol = 1e-12);

/// W minimizing ||t - W x||_F (ridge = 0, minimum-norm when x is rank
/// deficient) or ||t - W x||_F^2 + ridge ||W||_F^2. x is D x n, t is L x n.
Matrix least_squares_readout(const Matrix& x, const Matrix& t, double ridge = 0.0);

/// Population variance of all entries of t, pooled across outputs.
double pooled_variance(const Matrix& t);

/// sqrt(sum_n ||y(n) - t(n)||^2 / (n var(t))).
double nrmse(const Matrix& y, const Matrix& t);

}  // namespace brscn
