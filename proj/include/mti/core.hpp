#pragma once

#include <Eigen/Dense>

#include <cstdint>
#include <stdexcept>
#include <string>
#include <vector>

namespace mti {

using Matrix = Eigen::MatrixXd;
using Vector = Eigen::VectorXd;
using Index = Eigen::Index;

// Base for every error raised by the library.
class Error : public std::runtime_error {
public:
    using std::runtime_error::runtime_error;
};

// Invalid argument: negative lag, shape mismatch, parameter outside its family's range.
class DomainError : public Error {
public:
    using Error::Error;
};

// A documented precondition (symmetric, commuting, positive definite, ...) does not hold.
class PreconditionError : public Error {
public:
    using Error::Error;
};

// Eigensolver failure, residual certificate failure, disagreeing cross-checks.
class NumericError : public Error {
public:
    using Error::Error;
};

class TimeGrid {
public:
    TimeGrid() = default;
    // Throws DomainError unless times[0] == 0 and gaps are >= 1e-12.
    explicit TimeGrid(std::vector<double> times);

    static TimeGrid equidistant(double horizon, Index count);
    // t_k = T * (r^k - 1) / (r^(N-1) - 1); ratio 1 falls back to equidistant.
    static TimeGrid geometric(double horizon, Index count, double ratio);

    Index size() const { return static_cast<Index>(times_.size()); }
    double operator[](Index k) const { return times_[static_cast<size_t>(k)]; }
    const std::vector<double>& times() const { return times_; }
    double horizon() const { return times_.empty() ? 0.0 : times_.back(); }
    bool isEquidistant(double relTol = 1e-12) const;

private:
    std::vector<double> times_;
};

struct Strategy {
    TimeGrid grid;
    Matrix trades;  // N x K, row k is the trade vector at grid time k

    Index size() const { return trades.rows(); }
    Index dimension() const { return trades.cols(); }
    Vector trade(Index k) const { return trades.row(k).transpose(); }
    Vector total() const { return trades.colwise().sum().transpose(); }
    // Time-major stacking: entry k*K + i is trade k, asset i.
    Vector flatten() const;
    static Strategy fromFlat(const TimeGrid& grid, const Vector& flat, Index dimension);
};

// Thrown when a Gram matrix has a negative direction; the direction makes cost unbounded below.
class NotPositiveDefiniteError : public Error {
public:
    NotPositiveDefiniteError(const std::string& what, Strategy direction, double eigenvalue)
        : Error(what), direction_(std::move(direction)), eigenvalue_(eigenvalue) {}
    const Strategy& direction() const { return direction_; }
    double eigenvalue() const { return eigenvalue_; }

private:
    Strategy direction_;
    double eigenvalue_;
};

double infNorm(const Matrix& m);
Matrix symmetricPart(const Matrix& m);

// Eigen-decomposition of a symmetric matrix with eigenvalues ascending; throws NumericError on failure.
struct SymmetricEigen {
    Vector values;
    Matrix vectors;  // columns are eigenvectors
};
SymmetricEigen symmetricEigen(const Matrix& m, bool withVectors = true);
double minEigenvalue(const Matrix& symmetric);

// exp(-t B) by scaling and squaring Pade (independent of any eigendecomposition).
Matrix expNegTimes(const Matrix& b, double t);

// Deterministic 64-bit mixer used to derive sub-streams from a master seed.
std::uint64_t splitmix64(std::uint64_t x);

}  // namespace mti
