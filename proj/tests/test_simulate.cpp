#include "mti/simulate.hpp"
#include "mti/solver.hpp"
#include "oracles.hpp"

#include <gtest/gtest.h>

#include <cmath>

using namespace mti;

namespace {

Matrix m2(double a, double b, double c, double d) {
    Matrix m(2, 2);
    m << a, b, c, d;
    return m;
}

Vector v2(double a, double b) { return Vector{{a, b}}; }

}  // namespace

TEST(Paths, ZeroCovarianceIsConstant) {
    MartingaleModel m(v2(10, 20), Matrix::Zero(2, 2), 1);
    TimeGrid g = TimeGrid::equidistant(1, 5);
    PathSet p = samplePaths(m, g, 10, 1);
    ASSERT_EQ(p.paths.size(), 10u);
    for (const Matrix& path : p.paths)
        for (Index k = 0; k < 5; ++k) EXPECT_EQ(path.row(k), m.s0().transpose());
}

TEST(Paths, MartingaleMean) {
    MartingaleModel m(v2(10, 20), m2(1, 0.3, 0.3, 2), 2);
    TimeGrid g = TimeGrid::equidistant(2, 4);
    const Index n = 100000;
    PathSet p = samplePaths(m, g, n, 5);
    Vector sum = Vector::Zero(2), sq = Vector::Zero(2);
    for (const Matrix& path : p.paths) {
        Vector last = path.row(3).transpose();
        sum += last;
        sq += last.cwiseProduct(last);
    }
    Vector mean = sum / n;
    Vector var = sq / n - mean.cwiseProduct(mean);
    for (Index i = 0; i < 2; ++i) {
        EXPECT_LE(std::abs(mean(i) - m.s0()(i)), 3 * std::sqrt(var(i) / n));
        EXPECT_NEAR(var(i), 2 * m.covariance()(i, i), 0.05 * 2 * m.covariance()(i, i));
    }
}

TEST(Paths, SeedDeterminism) {
    MartingaleModel m(v2(1, 2), m2(1, 0.3, 0.3, 2), 1);
    TimeGrid g = TimeGrid::equidistant(1, 6);
    PathSet a = samplePaths(m, g, 5000, 17), b = samplePaths(m, g, 5000, 17), c = samplePaths(m, g, 5000, 18);
    for (size_t i = 0; i < a.paths.size(); ++i) ASSERT_EQ(a.paths[i], b.paths[i]);
    EXPECT_NE(a.paths[0], c.paths[0]);
}

TEST(Paths, RejectsBadModel) {
    EXPECT_THROW(MartingaleModel(v2(1, 1), m2(1, 2, 2, 1), 1), DomainError);
    EXPECT_THROW(MartingaleModel(v2(1, 1), m2(1, 0.5, 0, 1), 1), DomainError);
    MartingaleModel m(v2(1, 1), Matrix::Identity(2, 2), 1);
    EXPECT_THROW(samplePaths(m, TimeGrid::equidistant(2, 3), 10, 0), DomainError);
    EXPECT_THROW(samplePaths(m, TimeGrid::equidistant(1, 3), 0, 0), DomainError);
}

TEST(Impact, PriceBeforeTrade) {
    DecayKernel k = makeCrossExp(1, 1.8, 0.3);
    TimeGrid g({0.0, 0.7, 1.5});
    Matrix path = Matrix::Constant(3, 2, 5.0);
    path(1, 0) = 6;
    Strategy zero{g, Matrix::Zero(3, 2)};
    for (Index k2 = 0; k2 < 3; ++k2) EXPECT_EQ(impactedPrice(k, g, zero, path, k2), path.row(k2).transpose());
    Matrix trades = Matrix::Zero(3, 2);
    trades.row(0) << 1, -2;
    Strategy one{g, trades};
    EXPECT_EQ(impactedPrice(k, g, one, path, 0), path.row(0).transpose());
    EXPECT_LT((impactedPrice(k, g, one, path, 1) - path.row(1).transpose() - k.eval(0.7) * v2(1, -2))
                  .cwiseAbs()
                  .maxCoeff(),
              1e-15);
}

TEST(Revenues, ZeroAndSingleTrade) {
    DecayKernel k = plusTemporary(m2(0.4, 0, 0, 0.2), makeExp2x2({1, 2, 0, 1, 1, 1, 1, 1}));
    TimeGrid g = TimeGrid::equidistant(1, 4);
    Vector s0 = v2(10, 7), x0 = v2(3, -1);
    Matrix path = s0.transpose().replicate(4, 1);
    EXPECT_EQ(revenues(k, g, Strategy{g, Matrix::Zero(4, 2)}, path), 0.0);
    Matrix trades = Matrix::Zero(4, 2);
    trades.row(0) = -x0.transpose();
    EXPECT_NEAR(revenues(k, g, Strategy{g, trades}, path), x0.dot(s0) - 0.5 * x0.dot(k.eval(0) * x0), 1e-12);
}

TEST(Shortfall, IdentityHoldsPathwiseWithoutVolatility) {
    oracle::Random r(61);
    std::vector<DecayKernel> ks{makeJordanExp(0.7), makeClampedExp(), makeCrossExp(1, 1.8, 0.3),
                                plusTemporary(m2(1, 0.5, 0, 1), makeLinear2x2({1, 0.5, 0.2, 1, 1, 1, 0.5, 2}))};
    for (const DecayKernel& k : ks) {
        for (int i = 0; i < 10; ++i) {
            TimeGrid g(r.grid(r.integer(1, 9), r.uniform(0.5, 5)));
            Vector x0 = r.vector(2, 3), s0 = r.vector(2, 10);
            Matrix trades = r.gaussian(g.size(), 2);
            trades.row(g.size() - 1) -= trades.colwise().sum() + x0.transpose();
            Strategy s{g, trades};
            Matrix path = s0.transpose().replicate(g.size(), 1);
            const double shortfall = x0.dot(s0) - revenues(k, g, s, path);
            const double c = cost(k, g, s);
            EXPECT_NEAR(shortfall, c, 1e-10 * (1 + std::abs(c))) << k.tag();
            MartingaleModel m(s0, Matrix::Zero(2, 2), g.horizon());
            SimulationReport rep = estimateExpectedCost(k, g, s, x0, m, 3, 1);
            EXPECT_NEAR(rep.meanShortfall, c, 1e-10 * (1 + std::abs(c)));
            EXPECT_EQ(rep.stdError, 0.0);
        }
    }
}

TEST(Shortfall, PathwiseRevenueMatchesEstimator) {
    DecayKernel k = makeCrossExp(1, 1.8, 0.3);
    TimeGrid g = TimeGrid::equidistant(5, 11);
    Vector x0 = v2(-50, 1), s0 = v2(100, 50);
    SolveResult s = solveKKT(k, g, x0);
    MartingaleModel m(s0, m2(1, 0.2, 0.2, 0.5), 5);
    PathSet p = samplePaths(m, g, 500, 9);
    double mean = 0;
    for (const Matrix& path : p.paths) mean += x0.dot(s0) - revenues(k, g, s.strategy, path);
    mean /= 500;
    SimulationReport rep = estimateExpectedCost(k, g, s.strategy, x0, m, 500, 9);
    EXPECT_NEAR(rep.meanShortfall, mean, 1e-9 * (1 + std::abs(mean)));
}

TEST(Shortfall, MonteCarloMatchesCost) {
    DecayKernel k = makeMatrixExp(m2(1, 0.3, 0.3, 2));
    TimeGrid g = TimeGrid::equidistant(1, 10);
    Vector x0 = v2(10, 5);
    SolveResult s = solveKKT(k, g, x0);
    MartingaleModel m(v2(20, 30), m2(2, 0.5, 0.5, 1), 1);
    SimulationReport rep = estimateExpectedCost(k, g, s.strategy, x0, m, 100000, 3);
    EXPECT_LE(std::abs(rep.meanShortfall - rep.analyticCost), 3 * rep.stdError);
    EXPECT_NEAR(rep.analyticCost, s.cost, 1e-10 * (1 + s.cost));
    EXPECT_GT(rep.stdError, 0);
    SimulationReport again = estimateExpectedCost(k, g, s.strategy, x0, m, 100000, 3);
    EXPECT_EQ(again.meanShortfall, rep.meanShortfall);
    EXPECT_EQ(again.stdError, rep.stdError);
}

TEST(Shortfall, MeanIsCovarianceInvariant) {
    DecayKernel k = makeCrossExp(1, 1.8, 0.3);
    TimeGrid g = TimeGrid::equidistant(5, 11);
    Vector x0 = v2(-50, 1);
    SolveResult s = solveKKT(k, g, x0);
    SimulationReport a = estimateExpectedCost(k, g, s.strategy, x0, MartingaleModel(v2(100, 50), m2(1, 0.2, 0.2, 0.5), 5),
                                              50000, 1);
    SimulationReport b = estimateExpectedCost(k, g, s.strategy, x0, MartingaleModel(v2(100, 50), m2(4, -1, -1, 3), 5),
                                              50000, 2);
    EXPECT_LE(std::abs(a.meanShortfall - b.meanShortfall), 3 * std::hypot(a.stdError, b.stdError));
}

TEST(Shortfall, RejectsNonLiquidatingStrategy) {
    DecayKernel k = makeCrossExp(1, 1.8, 0.3);
    TimeGrid g = TimeGrid::equidistant(1, 3);
    Matrix trades = Matrix::Constant(3, 2, -1.0);
    MartingaleModel m(v2(1, 1), Matrix::Identity(2, 2), 1);
    EXPECT_THROW(estimateExpectedCost(k, g, Strategy{g, trades}, v2(3, 2), m, 10, 0), DomainError);
    EXPECT_NO_THROW(estimateExpectedCost(k, g, Strategy{g, trades}, v2(3, 3), m, 10, 0));
}
