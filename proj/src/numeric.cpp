#include "brscn/numeric.hpp"

#include <algorithm>
#include <cmath>
#include <numbers>
#include <vector>

#include "brscn/errors.hpp"

namespace brscn {

namespace {

constexpr std::uint64_t kGolden = 0x9E3779B97F4A7C15ULL;

std::uint64_t mix64(std::uint64_t z) noexcept {
    z = (z ^ (z >> 30)) * 0xBF58476D1CE4E5B9ULL;
    z = (z ^ (z >> 27)) * 0x94D049BB133111EBULL;
    return z ^ (z >> 31);
}

// Strongly connected components of the graph i -> j for m(i, j) != 0.
std::vector<std::vector<Eigen::Index>> components(const Matrix& m) {
    const Eigen::Index n = m.rows();
    std::vector<int> index(n, -1), low(n, 0);
    std::vector<bool> on_stack(n, false);
    std::vector<Eigen::Index> stack;
    std::vector<std::vector<Eigen::Index>> out;
    int counter = 0;

    // Iterative Tarjan; frame = (node, next column to inspect).
    std::vector<std::pair<Eigen::Index, Eigen::Index>> frames;
    for (Eigen::Index root = 0; root < n; ++root) {
        if (index[root] >= 0) continue;
        frames.emplace_back(root, 0);
        index[root] = low[root] = counter++;
        stack.push_back(root);
        on_stack[root] = true;
        while (!frames.empty()) {
            auto& [v, next] = frames.back();
            bool descended = false;
            while (next < n) {
                const Eigen::Index w = next++;
                if (m(v, w) == 0.0) continue;
                if (index[w] < 0) {
                    index[w] = low[w] = counter++;
                    stack.push_back(w);
                    on_stack[w] = true;
                    frames.emplace_back(w, 0);
                    descended = true;
                    break;
                }
                if (on_stack[w]) low[v] = std::min(low[v], index[w]);
            }
            if (descended) continue;
            const Eigen::Index done = v;
            if (low[done] == index[done]) {
                std::vector<Eigen::Index> comp;
                Eigen::Index w;
                do {
                    w = stack.back();
                    stack.pop_back();
                    on_stack[w] = false;
                    comp.push_back(w);
                } while (w != done);
                out.push_back(std::move(comp));
            }
            frames.pop_back();
            if (!frames.empty()) {
                const Eigen::Index parent = frames.back().first;
                low[parent] = std::min(low[parent], low[done]);
            }
        }
    }
    return out;
}

}  // namespace

std::uint64_t RngStream::next_u64() noexcept {
    ++position_;
    return mix64(seed_ + position_ * kGolden);
}

double RngStream::next_unit() noexcept {
    return static_cast<double>(next_u64() >> 11) * 0x1.0p-53;
}

double RngStream::uniform(double lo, double hi) noexcept {
    return lo + (hi - lo) * next_unit();
}

double RngStream::normal() noexcept {
    // 1 - u keeps the log argument in (0, 1].
    const double u1 = 1.0 - next_unit();
    const double u2 = next_unit();
    return std::sqrt(-2.0 * std::log(u1)) * std::cos(2.0 * std::numbers::pi * u2);
}

std::uint64_t RngStream::below(std::uint64_t n) noexcept {
    if (n == 0) return 0;
    // Lemire's multiply-shift; bias is below 2^-64 * n, irrelevant here.
    return static_cast<std::uint64_t>((static_cast<unsigned __int128>(next_u64()) * n) >> 64);
}

RngStream RngStream::derive(std::initializer_list<std::uint64_t> path) const noexcept {
    std::uint64_t h = mix64(seed_ ^ 0xA0761D6478BD642FULL);
    for (std::uint64_t p : path) h = mix64(h + kGolden + mix64(p + 0xE7037ED1A0B428DBULL));
    return RngStream(h);
}

Matrix seeded_uniform(RngStream& rng, Eigen::Index rows, Eigen::Index cols, double lambda) {
    if (!(lambda > 0.0)) throw InvalidArgument("seeded_uniform: lambda must be positive");
    if (rows < 0 || cols < 0) throw InvalidArgument("seeded_uniform: negative shape");
    Matrix m(rows, cols);
    // Row-major fill so the draw order matches the serialized layout.
    for (Eigen::Index i = 0; i < rows; ++i)
        for (Eigen::Index j = 0; j < cols; ++j) m(i, j) = rng.uniform(-lambda, lambda);
    return m;
}

double spectral_radius(const Matrix& m, double tol) {
    if (m.rows() != m.cols()) throw InvalidArgument("spectral_radius: matrix must be square");
    if (!m.allFinite()) throw InvalidArgument("spectral_radius: non-finite entry");
    double rho = 0.0;
    for (const auto& comp : components(m)) {
        const auto k = static_cast<Eigen::Index>(comp.size());
        if (k == 1) {
            rho = std::max(rho, std::abs(m(comp[0], comp[0])));
            continue;
        }
        Matrix sub(k, k);
        for (Eigen::Index a = 0; a < k; ++a)
            for (Eigen::Index b = 0; b < k; ++b) sub(a, b) = m(comp[a], comp[b]);
        Eigen::EigenSolver<Matrix> es(sub, /*computeEigenvectors=*/false);
        if (es.info() != Eigen::Success) {
            // Gelfand-style bound from a single norm is the best we have.
            throw NumericFailure("spectral_radius: eigenvalue iteration did not converge",
                                 std::max(rho, sub.norm()));
        }
        rho = std::max(rho, es.eigenvalues().cwiseAbs().maxCoeff());
    }
    return rho < tol ? 0.0 : rho;
}

double max_singular_value(const Matrix& m, double /*tol*/) {
    if (!m.allFinite()) throw InvalidArgument("max_singular_value: non-finite entry");
    if (m.size() == 0) return 0.0;
    Eigen::JacobiSVD<Matrix> svd(m);
    if (svd.info() != Eigen::Success)
        throw NumericFailure("max_singular_value: SVD did not converge", m.norm());
    return svd.singularValues()(0);
}

Matrix least_squares_readout(const Matrix& x, const Matrix& t, double ridge) {
    if (x.cols() != t.cols())
        throw InvalidArgument("least_squares_readout: x and t column counts differ");
    if (x.cols() < 1) throw InvalidArgument("least_squares_readout: need at least one column");
    if (ridge < 0.0) throw InvalidArgument("least_squares_readout: negative ridge");
    if (ridge > 0.0) {
        Matrix gram = x * x.transpose();
        gram.diagonal().array() += ridge;
        return gram.ldlt().solve(x * t.transpose()).transpose();
    }
    // Minimum-norm least squares: x^T W^T = t^T.
    Eigen::CompleteOrthogonalDecomposition<Matrix> cod(x.transpose());
    return cod.solve(t.transpose()).transpose();
}

double pooled_variance(const Matrix& t) {
    if (t.size() == 0 || t.maxCoeff() == t.minCoeff()) return 0.0;
    const double mean = t.mean();
    return (t.array() - mean).square().sum() / static_cast<double>(t.size());
}

double nrmse(const Matrix& y, const Matrix& t) {
    if (y.rows() != t.rows() || y.cols() != t.cols())
        throw InvalidArgument("nrmse: prediction and target shapes differ");
    if (t.cols() == 0) throw InvalidArgument("nrmse: empty target");
    const double var = pooled_variance(t);
    if (!(var > 0.0)) throw DegenerateTarget("nrmse: target variance is zero");
    const double sse = (y - t).squaredNorm();
    return std::sqrt(sse / (static_cast<double>(t.cols()) * var));
}

}  // namespace brscn
