#pragma once

#include "mti/solver.hpp"

#include <vector>

namespace mti {

// Oscillating optimal strategies for G(t) = exp(-(tB)^2), B = [[1, rho], [rho, 1]], X0 = (10, 0), N = 23.
struct OscillationRow {
    double rho;
    double horizon;
    double maxAbsTrade;
    double ratio;  // maxAbsTrade / |X0|_inf
    bool certified;  // KKT and commuting solvers agree to 1e-6 of maxAbsTrade
};
DecayKernel oscillationKernel(double rho);
std::vector<OscillationRow> oscillationSweep();
SolveResult oscillationSolve(double rho, double horizon);

// Cross-asset round trip: cross_exp(1, 1.8, 0.3), X0 = (-50, 1), T = 5, N = 11.
DecayKernel roundTripKernel();
TimeGrid roundTripGrid();
Vector roundTripPortfolio();

}  // namespace mti
