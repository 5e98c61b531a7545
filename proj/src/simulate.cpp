#include "mti/simulate.hpp"

#include "mti/posdef.hpp"
#include "mti/solver.hpp"

#include <algorithm>
#include <cmath>
#include <random>
#include <sstream>

namespace mti {

namespace {

constexpr Index kBatch = 4096;

void requireShapes(const DecayKernel& kernel, const TimeGrid& grid, const Strategy& s) {
    if (s.trades.rows() != grid.size() || s.trades.cols() != kernel.dimension())
        throw DomainError("strategy shape does not match grid size and kernel dimension");
}

// Fills paths [first, first + count) of batch b.
template <class Sink>
void generateBatch(const MartingaleModel& m, const TimeGrid& grid, std::uint64_t seed, Index batch, Index count,
                   Sink&& sink) {
    std::mt19937_64 rng(splitmix64(seed ^ splitmix64(static_cast<std::uint64_t>(batch) + 1)));
    std::normal_distribution<double> nd;
    const Index n = grid.size(), k = m.dimension();
    std::vector<double> sq(static_cast<size_t>(n), 0.0);
    for (Index i = 1; i < n; ++i) sq[i] = std::sqrt(grid[i] - grid[i - 1]);
    Matrix path(n, k);
    Vector z(k);
    for (Index p = 0; p < count; ++p) {
        path.row(0) = m.s0().transpose();
        for (Index i = 1; i < n; ++i) {
            for (Index j = 0; j < k; ++j) z(j) = nd(rng);
            path.row(i) = path.row(i - 1) + sq[i] * (m.factor() * z).transpose();
        }
        sink(path);
    }
}

template <class Sink>
void generate(const MartingaleModel& m, const TimeGrid& grid, Index nPaths, std::uint64_t seed, Sink&& sink) {
    if (nPaths < 1) throw DomainError("nPaths must be >= 1");
    if (grid.horizon() > m.horizon() * (1 + 1e-12) + 1e-12)
        throw DomainError("grid extends past the model horizon");
    for (Index b = 0; b * kBatch < nPaths; ++b)
        generateBatch(m, grid, seed, b, std::min(kBatch, nPaths - b * kBatch), sink);
}

}  // namespace

MartingaleModel::MartingaleModel(Vector s0, Matrix covariance, double horizon)
    : s0_(std::move(s0)), covariance_(std::move(covariance)), horizon_(horizon) {
    const Index k = s0_.size();
    if (k == 0 || !s0_.allFinite()) throw DomainError("S0 must be a nonempty finite vector");
    if (covariance_.rows() != k || covariance_.cols() != k || !covariance_.allFinite())
        throw DomainError("covariance must be a finite KxK matrix");
    if (!(horizon_ >= 0) || !std::isfinite(horizon_)) throw DomainError("model horizon must be >= 0");
    const double scale = std::max(1.0, infNorm(covariance_));
    if (infNorm(covariance_ - covariance_.transpose()) > 1e-10 * scale)
        throw DomainError("covariance is not symmetric");
    SymmetricEigen e = symmetricEigen(symmetricPart(covariance_));
    if (e.values(0) < -1e-10 * scale) {
        std::ostringstream os;
        os << "covariance is not PSD (eigenvalue " << e.values(0) << ")";
        throw DomainError(os.str());
    }
    const Vector root = e.values.cwiseMax(0.0).cwiseSqrt();
    factor_ = e.vectors * root.asDiagonal() * e.vectors.transpose();
}

PathSet samplePaths(const MartingaleModel& model, const TimeGrid& grid, Index nPaths, std::uint64_t seed) {
    PathSet out{grid, {}};
    out.paths.reserve(static_cast<size_t>(std::max<Index>(nPaths, 0)));
    generate(model, grid, nPaths, seed, [&](const Matrix& p) { out.paths.push_back(p); });
    return out;
}

Vector impactedPrice(const DecayKernel& kernel, const TimeGrid& grid, const Strategy& s, const Matrix& path,
                     Index k) {
    requireShapes(kernel, grid, s);
    if (k < 0 || k >= grid.size()) throw DomainError("impactedPrice: time index out of range");
    if (path.rows() != grid.size() || path.cols() != kernel.dimension()) throw DomainError("path shape mismatch");
    Vector price = path.row(k).transpose();
    for (Index l = 0; l < k; ++l) price += kernel.eval(grid[k] - grid[l]) * s.trade(l);
    return price;
}

double revenues(const DecayKernel& kernel, const TimeGrid& grid, const Strategy& s, const Matrix& path) {
    requireShapes(kernel, grid, s);
    const Matrix g0 = kernel.eval(0.0);
    double r = 0;
    for (Index k = 0; k < grid.size(); ++k) {
        const Vector xi = s.trade(k);
        r -= xi.dot(impactedPrice(kernel, grid, s, path, k) + 0.5 * g0 * xi);
    }
    return r;
}

SimulationReport estimateExpectedCost(const DecayKernel& kernel, const TimeGrid& grid, const Strategy& s,
                                      const Vector& x0, const MartingaleModel& model, Index nPaths,
                                      std::uint64_t seed) {
    requireShapes(kernel, grid, s);
    if (x0.size() != kernel.dimension() || model.dimension() != kernel.dimension())
        throw DomainError("portfolio and model dimension must match the kernel");
    const double err = (s.total() + x0).cwiseAbs().maxCoeff();
    if (!(err <= 1e-10 * std::max(1.0, x0.cwiseAbs().maxCoeff()))) {
        std::ostringstream os;
        os << "strategy does not liquidate the portfolio (column sums off by " << err << ")";
        throw DomainError(os.str());
    }

    // Shortfall on a path = X0^T S0 + sum_k xi_k^T S^0_{t_k} + D, with D the deterministic impact part.
    const Matrix g0 = kernel.eval(0.0);
    double impact = 0;
    for (Index k = 0; k < grid.size(); ++k) {
        const Vector xi = s.trade(k);
        Vector drift = 0.5 * g0 * xi;
        for (Index l = 0; l < k; ++l) drift += kernel.eval(grid[k] - grid[l]) * s.trade(l);
        impact += xi.dot(drift);
    }
    const double book = x0.dot(model.s0());

    double mean = 0, m2 = 0;
    Index count = 0;
    generate(model, grid, nPaths, seed, [&](const Matrix& path) {
        double linear = 0;
        for (Index k = 0; k < grid.size(); ++k) linear += s.trades.row(k).dot(path.row(k));
        const double shortfall = book + linear + impact;
        ++count;
        const double delta = shortfall - mean;
        mean += delta / static_cast<double>(count);
        m2 += delta * (shortfall - mean);
    });

    SimulationReport r;
    r.meanShortfall = mean;
    r.stdError = count > 1 ? std::sqrt(m2 / static_cast<double>(count - 1)) / std::sqrt(static_cast<double>(count)) : 0.0;
    r.nPaths = count;
    r.seed = seed;
    r.analyticCost = cost(kernel, grid, s);
    return r;
}

}  // namespace mti
