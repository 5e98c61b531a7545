#include "mti/core.hpp"

#include <unsupported/Eigen/MatrixFunctions>

#include <cmath>
#include <sstream>

namespace mti {

TimeGrid::TimeGrid(std::vector<double> times) : times_(std::move(times)) {
    if (times_.empty()) throw DomainError("time grid must contain at least one time");
    if (times_.front() != 0.0) throw DomainError("time grid must start at 0");
    for (size_t k = 0; k < times_.size(); ++k) {
        if (!std::isfinite(times_[k])) throw DomainError("time grid contains a non-finite time");
        if (k > 0 && !(times_[k] - times_[k - 1] >= 1e-12)) {
            std::ostringstream os;
            os << "time grid not strictly increasing at index " << k << " (gap "
               << times_[k] - times_[k - 1] << ")";
            throw DomainError(os.str());
        }
    }
}

TimeGrid TimeGrid::equidistant(double horizon, Index count) {
    if (count < 1) throw DomainError("grid count must be >= 1");
    if (count == 1) return TimeGrid({0.0});
    if (!(horizon > 0) || !std::isfinite(horizon)) throw DomainError("grid horizon must be positive");
    std::vector<double> t(static_cast<size_t>(count));
    for (Index k = 0; k < count; ++k) t[k] = horizon * static_cast<double>(k) / static_cast<double>(count - 1);
    t.back() = horizon;
    return TimeGrid(std::move(t));
}

TimeGrid TimeGrid::geometric(double horizon, Index count, double ratio) {
    if (!(ratio > 0) || !std::isfinite(ratio)) throw DomainError("geometric ratio must be positive");
    if (count <= 2 || std::abs(ratio - 1.0) < 1e-12) return equidistant(horizon, count);
    if (!(horizon > 0) || !std::isfinite(horizon)) throw DomainError("grid horizon must be positive");
    std::vector<double> t(static_cast<size_t>(count));
    const double denom = std::expm1(static_cast<double>(count - 1) * std::log(ratio));
    for (Index k = 0; k < count; ++k)
        t[k] = horizon * std::expm1(static_cast<double>(k) * std::log(ratio)) / denom;
    t.back() = horizon;
    return TimeGrid(std::move(t));
}

bool TimeGrid::isEquidistant(double relTol) const {
    if (size() <= 2) return true;
    const double h = times_[1] - times_[0];
    for (size_t k = 2; k < times_.size(); ++k)
        if (std::abs((times_[k] - times_[k - 1]) - h) > relTol * std::max(1.0, horizon())) return false;
    return true;
}

Vector Strategy::flatten() const {
    Vector v(trades.size());
    for (Index k = 0; k < trades.rows(); ++k)
        for (Index i = 0; i < trades.cols(); ++i) v(k * trades.cols() + i) = trades(k, i);
    return v;
}

Strategy Strategy::fromFlat(const TimeGrid& grid, const Vector& flat, Index dimension) {
    if (flat.size() != grid.size() * dimension) throw DomainError("flat strategy length mismatch");
    Strategy s{grid, Matrix(grid.size(), dimension)};
    for (Index k = 0; k < grid.size(); ++k)
        for (Index i = 0; i < dimension; ++i) s.trades(k, i) = flat(k * dimension + i);
    return s;
}

double infNorm(const Matrix& m) {
    if (m.size() == 0) return 0.0;
    return m.cwiseAbs().rowwise().sum().maxCoeff();
}

Matrix symmetricPart(const Matrix& m) { return 0.5 * (m + m.transpose()); }

SymmetricEigen symmetricEigen(const Matrix& m, bool withVectors) {
    Eigen::SelfAdjointEigenSolver<Matrix> es(m, withVectors ? Eigen::ComputeEigenvectors : Eigen::EigenvaluesOnly);
    if (es.info() != Eigen::Success) throw NumericError("symmetric eigensolver failed to converge");
    SymmetricEigen out;
    out.values = es.eigenvalues();
    if (withVectors) out.vectors = es.eigenvectors();
    return out;
}

double minEigenvalue(const Matrix& symmetric) { return symmetricEigen(symmetric, false).values(0); }

Matrix expNegTimes(const Matrix& b, double t) {
    Matrix arg = -t * b;
    return arg.exp();
}

std::uint64_t splitmix64(std::uint64_t x) {
    x += 0x9E3779B97F4A7C15ull;
    x = (x ^ (x >> 30)) * 0xBF58476D1CE4E5B9ull;
    x = (x ^ (x >> 27)) * 0x94D049BB133111EBull;
    return x ^ (x >> 31);
}

}  // namespace mti
