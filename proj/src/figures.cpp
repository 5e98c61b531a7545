#include "mti/figures.hpp"

namespace mti {

namespace {

// The Gaussian Gram is near-singular on fine grids; residuals stay small even when trades are noise.
constexpr double kOscillationAgreement = 1e-6;

}  // namespace

DecayKernel oscillationKernel(double rho) {
    Matrix b(2, 2);
    b << 1.0, rho, rho, 1.0;
    return makeMatrixFunctionKernel(b, ScalarFunction::gaussianSq());
}

SolveResult oscillationSolve(double rho, double horizon) {
    return solveKKT(oscillationKernel(rho), TimeGrid::equidistant(horizon, 23), Vector::Unit(2, 0) * 10.0);
}

std::vector<OscillationRow> oscillationSweep() {
    std::vector<OscillationRow> rows;
    for (int r = 1; r <= 19; ++r) {
        const double rho = 0.05 * r;
        for (int t = 1; t <= 10; ++t) {
            OscillationRow row{rho, static_cast<double>(t), 0.0, 0.0, false};
            try {
                SolveResult s = oscillationSolve(rho, t);
                SolveResult c = solveCommuting(oscillationKernel(rho), s.strategy.grid, Vector::Unit(2, 0) * 10.0);
                row.maxAbsTrade = s.strategy.trades.cwiseAbs().maxCoeff();
                row.ratio = row.maxAbsTrade / 10.0;
                row.certified = (s.strategy.trades - c.strategy.trades).cwiseAbs().maxCoeff() <=
                                kOscillationAgreement * row.maxAbsTrade;
            } catch (const Error&) {
            }
            rows.push_back(row);
        }
    }
    return rows;
}

DecayKernel roundTripKernel() { return makeCrossExp(1.0, 1.8, 0.3); }
TimeGrid roundTripGrid() { return TimeGrid::equidistant(5.0, 11); }
Vector roundTripPortfolio() {
    Vector x(2);
    x << -50.0, 1.0;
    return x;
}

}  // namespace mti
