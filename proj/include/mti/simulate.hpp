#pragma once

#include "mti/kernel.hpp"

#include <cstdint>
#include <vector>

namespace mti {

// Arithmetic Gaussian martingale: S_{t+h} = S_t + sqrt(h) C Z with C C^T = covariance. Prices may go negative.
class MartingaleModel {
public:
    MartingaleModel(Vector s0, Matrix covariance, double horizon);

    const Vector& s0() const { return s0_; }
    const Matrix& covariance() const { return covariance_; }
    const Matrix& factor() const { return factor_; }
    double horizon() const { return horizon_; }
    Index dimension() const { return s0_.size(); }

private:
    Vector s0_;
    Matrix covariance_;
    Matrix factor_;
    double horizon_;
};

struct PathSet {
    TimeGrid grid;
    std::vector<Matrix> paths;  // each N x K, row k = S^0 at grid time k
};

// Paths are generated in batches of 4096 whose seeds derive from the master seed.
PathSet samplePaths(const MartingaleModel& model, const TimeGrid& grid, Index nPaths, std::uint64_t seed);

// Unaffected price plus the impact of trades strictly before t_k.
Vector impactedPrice(const DecayKernel& kernel, const TimeGrid& grid, const Strategy& strategy, const Matrix& path,
                     Index k);

// -sum_k xi_k^T (S^xi_{t_k} + G(0) xi_k / 2), with G(0) including any temporary jump.
double revenues(const DecayKernel& kernel, const TimeGrid& grid, const Strategy& strategy, const Matrix& path);

struct SimulationReport {
    double meanShortfall = 0.0;
    double stdError = 0.0;  // sample standard deviation / sqrt(nPaths)
    Index nPaths = 0;
    std::uint64_t seed = 0;
    double analyticCost = 0.0;
};

// Rejects strategies whose trades do not sum to -x0.
SimulationReport estimateExpectedCost(const DecayKernel& kernel, const TimeGrid& grid, const Strategy& strategy,
                                      const Vector& x0, const MartingaleModel& model, Index nPaths,
                                      std::uint64_t seed);

}  // namespace mti
