#pragma once

#include "mti/kernel.hpp"
#include "mti/posdef.hpp"

#include <cstdint>
#include <optional>
#include <string>
#include <vector>

namespace mti {

struct SolveResult {
    Strategy strategy;
    Vector lambda;
    double cost = 0.0;
    bool unique = false;
    double residual = 0.0;
    std::string method;
};

double cost(const DecayKernel& kernel, const TimeGrid& grid, const Strategy& strategy);
double cost(const GramMatrix& gram, const Strategy& strategy);

struct LagrangeResidual {
    Vector lambdaHat;
    double residual;
};
LagrangeResidual lagrangeResidual(const DecayKernel& kernel, const TimeGrid& grid, const Strategy& strategy);
LagrangeResidual lagrangeResidual(const GramMatrix& gram, const Strategy& strategy);

enum class KktPath { Automatic, Direct, LeastSquares };

// Solves [Gram A^T; A 0][xi; -lambda] = [0; -X0] for a prebuilt Gram. Throws NotPositiveDefiniteError
// on a negative Gram direction and NumericError when the residual certificate fails.
SolveResult solveGramKKT(const GramMatrix& gram, const Vector& x0, KktPath path = KktPath::Automatic);
SolveResult solveKKT(const DecayKernel& kernel, const TimeGrid& grid, const Vector& x0,
                     KktPath path = KktPath::Automatic);

enum class ClosedFormVariant { Automatic, General, Equidistant };
SolveResult solveExpClosedForm(const Matrix& b, const TimeGrid& grid, const Vector& x0,
                               ClosedFormVariant variant = ClosedFormVariant::Automatic);

// One-dimensional exponential kernel e^{-rate t}; returns the N trades.
Vector solve1DExp(double rate, const TimeGrid& grid, double y);

struct Diagonalization {
    Matrix o;                      // orthogonal, rows are the common eigenvectors v_i
    std::vector<double> times;     // sample times
    Matrix decays;                 // decays(s, i) = g_i(times[s])
};
Diagonalization simultaneousDiagonalize(const DecayKernel& kernel, const std::vector<double>& sampleTimes,
                                        std::uint64_t seed = 0x2545F4914F6CDD1Dull);

SolveResult solveCommuting(const DecayKernel& kernel, const TimeGrid& grid, const Vector& x0);

struct BasisDecomposition {
    std::vector<Vector> basis;       // v_i, unit norm
    std::vector<Strategy> strategies;  // xi^(i) liquidating v_i
    std::vector<Vector> etas;        // 1D programs, eta^i liquidating 1
    Matrix o;                        // rows are v_i
    std::vector<std::string> warnings;
};
BasisDecomposition basisStrategies(const DecayKernel& kernel, const TimeGrid& grid);

struct RefineLevel {
    Index n;
    double cost;
};
struct RefineResult {
    std::vector<RefineLevel> levels;
    SolveResult finest;
    bool monotone = true;
    bool converged = false;
};
RefineResult refine(const DecayKernel& kernel, double horizon, const Vector& x0, Index maxLevels, double relTol);

// Best applicable solver (closed form > commuting > KKT) with a mandatory cross-check against the next one.
struct AutoSolveResult {
    SolveResult primary;
    std::optional<SolveResult> secondary;
    double crossCheckDiff = 0.0;
};
AutoSolveResult solveAuto(const DecayKernel& kernel, const TimeGrid& grid, const Vector& x0,
                          double crossCheckTol = 1e-8);

// Raised by solveAuto when two applicable solvers disagree; carries both results.
class SolverDisagreementError : public NumericError {
public:
    SolverDisagreementError(const std::string& what, SolveResult a, SolveResult b)
        : NumericError(what), first(std::move(a)), second(std::move(b)) {}
    SolveResult first;
    SolveResult second;
};

}  // namespace mti
