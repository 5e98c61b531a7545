#pragma once

#include "mti/kernel.hpp"
#include "mti/properties.hpp"

#include <cstdint>
#include <optional>
#include <string>
#include <vector>

namespace mti {

struct GramMatrix {
    TimeGrid grid;
    Index dimension = 0;
    Matrix blocks;  // NK x NK, block (k, l) = evalTilde(t_k - t_l)

    Index size() const { return grid.size(); }
    double infNorm() const { return mti::infNorm(blocks); }
    Matrix block(Index k, Index l) const { return blocks.block(k * dimension, l * dimension, dimension, dimension); }
};

GramMatrix assembleGram(const DecayKernel& kernel, const TimeGrid& grid);

struct GridPDResult {
    bool psd = false;
    bool strict = false;
    double minEig = 0.0;
    Vector minVector;  // unit eigenvector for minEig
};

// psd iff minEig >= -1e-9 (1 + |Gram|); strict iff minEig > strictTol (default 1e-9 (1 + |Gram|)).
GridPDResult checkGridPD(const GramMatrix& gram, std::optional<double> strictTol = std::nullopt);
GridPDResult checkGridPD(const Matrix& symmetric, std::optional<double> strictTol = std::nullopt);

struct PdWitness {
    TimeGrid grid;
    Strategy xi;             // unit norm
    double quadraticForm;    // xi^T Gram xi
    double gramNorm;
};

enum class PdVerdict { StrictPD, PD, NotPD, Undetermined };
enum class PdMethod { AnalyticTheorem, AnalyticFamily, Spectral, Search };

struct SpectralSample {
    Index n;
    double span;
    double minEig;
    double gramNorm;
};

struct PosDefReport {
    PdVerdict verdict = PdVerdict::Undetermined;
    double minEig = 0.0;  // smallest Gram eigenvalue over the spectral evidence
    std::optional<PdWitness> witness;
    PdMethod method = PdMethod::Spectral;
    std::vector<SpectralSample> evidence;
    std::string note;
};

struct ClassifyOptions {
    std::uint64_t seed = 0;
    Index evidenceGrids = 20;
    Index evidenceMaxN = 12;
    Index searchBudget = 400;
};

PosDefReport classifyPD(const DecayKernel& kernel, const ClassifyOptions& options = {});

// Random grids (first attempt is the single time {0}); returns the first grid with a negative direction.
std::optional<PdWitness> searchViolation(const DecayKernel& kernel, double spanMax, Index nMax, Index budget,
                                         std::uint64_t seed);

// Re-evaluates a witness against a fresh Gram; true iff xi^T Gram xi < -1e-12 |Gram|.
bool witnessIsValid(const DecayKernel& kernel, const PdWitness& witness);

std::string_view toString(PdVerdict v);
std::string_view toString(PdMethod m);

}  // namespace mti
