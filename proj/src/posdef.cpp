#include "mti/posdef.hpp"

#include <algorithm>
#include <cmath>
#include <random>

namespace mti {

namespace {

bool approxEqual(double x, double y) { return std::abs(x - y) <= 1e-12 * std::max(std::abs(x), std::abs(y)); }

struct FamilyRule {
    PdVerdict verdict;
    std::string note;
};

bool symmetricPsd(const Matrix& m, bool* strict) {
    const double scale = std::max(infNorm(m), std::numeric_limits<double>::min());
    if (infNorm(m - m.transpose()) > 1e-12 * scale) return false;
    const double lmin = minEigenvalue(symmetricPart(m));
    if (strict) *strict = lmin > 1e-12 * scale;
    return lmin >= -1e-12 * scale;
}

std::optional<FamilyRule> familyRule(const DecayKernel& k, const ClassifyOptions& opt) {
    using namespace family;
    const auto& var = static_cast<const KernelFamily::variant&>(k.family());
    auto pd = [](bool strict, std::string note = {}) {
        return FamilyRule{strict ? PdVerdict::StrictPD : PdVerdict::PD, std::move(note)};
    };

    if (auto* p = std::get_if<Permanent>(&var)) {
        const bool psd = minEigenvalue(symmetricPart(p->g0)) >= -1e-12 * infNorm(p->g0);
        return psd ? pd(false, "constant kernel: Gram is ones(N) (x) sym(G0)")
                   : FamilyRule{PdVerdict::NotPD, "sym(G0) has a negative eigenvalue"};
    }
    if (auto* p = std::get_if<JordanExp>(&var)) {
        return p->b >= 0.5 ? pd(false, "jordan_exp with b >= 1/2")
                           : FamilyRule{PdVerdict::NotPD, "jordan_exp with b < 1/2"};
    }
    if (auto* p = std::get_if<MatrixExp>(&var)) {
        return pd(minEigenvalue(p->b) > 1e-12, "matrix exponential of a PSD matrix");
    }
    if (auto* p = std::get_if<MatrixFunction>(&var)) {
        bool strict = p->fn.isStrictlyPositiveDefinite();
        for (Index i = 0; i < p->spectrum.size(); ++i) strict = strict && p->spectrum(i) > 0;
        return pd(strict, "diagonalizable with positive definite scalar components");
    }
    if (auto* p = std::get_if<DiagCongruence>(&var)) {
        bool strict = true;
        for (const auto& g : p->decays) strict = strict && g.isStrictlyPositiveDefinite();
        return pd(strict, "diagonalizable with positive definite scalar components");
    }
    if (std::get_if<Exp2x2>(&var) || std::get_if<CrossExp>(&var)) {
        bool symmetricAmplitudes = true;
        if (auto* e = std::get_if<Exp2x2>(&var)) symmetricAmplitudes = approxEqual(e->c.a12, e->c.a21);
        PropertyReport pr = checkShapeProperties(k, ShapeOptions{20.0, 3, 0, opt.seed, false});
        if (pr.nonincreasing.isTrue() && symmetricAmplitudes)
            return pd(false, "nonincreasing with symmetric off-diagonal amplitudes");
        return std::nullopt;
    }
    if (auto* p = std::get_if<Linear2x2>(&var)) {
        const auto& c = p->c;
        const double r11 = c.a11 / c.b11, r12 = c.a12 / c.b12, r21 = c.a21 / c.b21, r22 = c.a22 / c.b22;
        const bool pre = std::max(r12, r21) <= std::min(r11, r22) && approxEqual(c.a12, c.a21);
        if (!pre) return std::nullopt;
        const bool holds = approxEqual(c.b12, c.b21) && approxEqual(r11, r12) && approxEqual(r11, r22) &&
                           c.b12 * c.b12 <= c.b11 * c.b22;
        if (holds) return pd(false, "proportional symmetric linear decay");
        return FamilyRule{PdVerdict::NotPD, "linear decay outside the proportional symmetric form"};
    }
    if (std::get_if<ClampedExp>(&var)) {
        return FamilyRule{PdVerdict::NotPD, "clamped exponential: convex but not positive definite"};
    }
    if (auto* p = std::get_if<ScalarTimesMatrix>(&var)) {
        bool strict = false;
        if (!symmetricPsd(p->l, &strict)) return std::nullopt;
        return pd(strict && p->g.isStrictlyPositiveDefinite(), "positive definite scalar times PSD matrix");
    }
    if (auto* p = std::get_if<Congruence>(&var)) {
        PosDefReport inner = classifyPD(p->inner, ClassifyOptions{opt.seed, 0, opt.evidenceMaxN, 0});
        if (inner.verdict == PdVerdict::PD || inner.verdict == PdVerdict::StrictPD)
            return pd(inner.verdict == PdVerdict::StrictPD, "congruence of a positive definite kernel");
        return std::nullopt;
    }
    if (auto* p = std::get_if<PlusTemporary>(&var)) {
        PosDefReport inner = classifyPD(p->inner, ClassifyOptions{opt.seed, 0, opt.evidenceMaxN, 0});
        if (inner.verdict == PdVerdict::PD || inner.verdict == PdVerdict::StrictPD) {
            bool h0Strict = false;
            const Matrix h = symmetricPart(p->h0);
            const double scale = std::max(infNorm(h), std::numeric_limits<double>::min());
            h0Strict = minEigenvalue(h) > 1e-12 * scale;
            return pd(inner.verdict == PdVerdict::StrictPD || h0Strict,
                      "positive definite kernel plus nonnegative temporary impact");
        }
        return std::nullopt;
    }
    return std::nullopt;
}

double spanHint(const DecayKernel& k) {
    if (auto* p = familyAs<family::Linear2x2>(k)) {
        const auto& c = p->c;
        return 10.0 * std::max({c.a11 / c.b11, c.a12 / c.b12, c.a21 / c.b21, c.a22 / c.b22});
    }
    return 50.0;
}

std::vector<TimeGrid> hintGrids(const DecayKernel& k) {
    if (familyAs<family::ClampedExp>(k)) return {TimeGrid::equidistant(400.0, 512)};
    return {};
}

std::optional<PdWitness> witnessOnGrid(const DecayKernel& k, const TimeGrid& grid, bool eigenvaluesFirst) {
    GramMatrix g = assembleGram(k, grid);
    const double norm = g.infNorm();
    if (eigenvaluesFirst && !(minEigenvalue(g.blocks) < -1e-12 * norm)) return std::nullopt;
    SymmetricEigen e = symmetricEigen(g.blocks);
    if (!(e.values(0) < -1e-12 * norm)) return std::nullopt;
    Vector v = e.vectors.col(0).normalized();
    PdWitness w{grid, Strategy::fromFlat(grid, v, k.dimension()), v.dot(g.blocks * v), norm};
    if (!(w.quadraticForm < -1e-12 * norm)) return std::nullopt;
    return w;
}

TimeGrid randomGrid(std::mt19937_64& rng, double spanMax, Index nMax) {
    std::uniform_real_distribution<double> u(0.0, 1.0);
    const bool wide = u(rng) < 0.5;
    const Index lo = wide ? 2 : std::max<Index>(2, nMax / 2);
    std::uniform_int_distribution<Index> nd(lo, nMax);
    const Index n = nd(rng);
    const double span = spanMax * (u(rng) < 0.5 ? 0.02 + 0.98 * u(rng) : 0.5 + 0.5 * u(rng));
    if (u(rng) < 0.5 || n <= 2) return TimeGrid::equidistant(span, n);
    const double alpha = 0.5 + 5.5 * u(rng);
    std::vector<double> t(static_cast<size_t>(n));
    for (Index i = 0; i < n; ++i)
        t[i] = span * std::expm1(alpha * static_cast<double>(i) / static_cast<double>(n - 1)) / std::expm1(alpha);
    t.back() = span;
    return TimeGrid(std::move(t));
}

}  // namespace

GramMatrix assembleGram(const DecayKernel& kernel, const TimeGrid& grid) {
    const Index n = grid.size(), k = kernel.dimension();
    GramMatrix g{grid, k, Matrix(n * k, n * k)};
    for (Index a = 0; a < n; ++a) {
        g.blocks.block(a * k, a * k, k, k) = kernel.evalTilde(0.0);
        for (Index b = a + 1; b < n; ++b) {
            Matrix blk = kernel.evalTilde(grid[a] - grid[b]);
            g.blocks.block(a * k, b * k, k, k) = blk;
            g.blocks.block(b * k, a * k, k, k) = blk.transpose();
        }
    }
    return g;
}

GridPDResult checkGridPD(const Matrix& m, std::optional<double> strictTol) {
    if (m.rows() != m.cols()) throw DomainError("checkGridPD needs a square matrix");
    SymmetricEigen e = symmetricEigen(m);
    const double norm = infNorm(m);
    GridPDResult r;
    r.minEig = e.values(0);
    r.minVector = e.vectors.col(0);
    r.psd = r.minEig >= -1e-9 * (1 + norm);
    r.strict = r.minEig > strictTol.value_or(1e-9 * (1 + norm));
    return r;
}

GridPDResult checkGridPD(const GramMatrix& gram, std::optional<double> strictTol) {
    return checkGridPD(gram.blocks, strictTol);
}

std::optional<PdWitness> searchViolation(const DecayKernel& kernel, double spanMax, Index nMax, Index budget,
                                         std::uint64_t seed) {
    if (!(spanMax > 0)) throw DomainError("searchViolation: spanMax must be positive");
    if (nMax < 2) throw DomainError("searchViolation: nMax must be >= 2");
    for (Index attempt = 0; attempt < budget; ++attempt) {
        TimeGrid grid;
        if (attempt == 0) {
            grid = TimeGrid({0.0});
        } else {
            std::mt19937_64 rng(splitmix64(seed ^ splitmix64(static_cast<std::uint64_t>(attempt))));
            grid = randomGrid(rng, spanMax, nMax);
        }
        if (auto w = witnessOnGrid(kernel, grid, true)) return w;
    }
    return std::nullopt;
}

bool witnessIsValid(const DecayKernel& kernel, const PdWitness& w) {
    GramMatrix g = assembleGram(kernel, w.grid);
    Vector v = w.xi.flatten();
    if (v.size() != g.blocks.rows()) return false;
    return v.dot(g.blocks * v) < -1e-12 * g.infNorm() * v.squaredNorm();
}

PosDefReport classifyPD(const DecayKernel& kernel, const ClassifyOptions& opt) {
    PosDefReport r;
    std::optional<PdWitness> evidenceWitness;
    r.minEig = std::numeric_limits<double>::infinity();
    for (Index i = 0; i < opt.evidenceGrids; ++i) {
        TimeGrid grid;
        if (i == 0) {
            grid = TimeGrid({0.0});
        } else {
            std::mt19937_64 rng(splitmix64(opt.seed + 0x5bd1e995u * static_cast<std::uint64_t>(i)));
            grid = randomGrid(rng, 20.0, opt.evidenceMaxN);
        }
        GramMatrix g = assembleGram(kernel, grid);
        const double lmin = minEigenvalue(g.blocks);
        r.evidence.push_back({grid.size(), grid.horizon(), lmin, g.infNorm()});
        r.minEig = std::min(r.minEig, lmin);
        if (!evidenceWitness && lmin < -1e-12 * g.infNorm()) evidenceWitness = witnessOnGrid(kernel, grid, false);
    }

    auto findWitness = [&]() -> std::optional<PdWitness> {
        if (evidenceWitness) return evidenceWitness;
        for (const TimeGrid& g : hintGrids(kernel))
            if (auto w = witnessOnGrid(kernel, g, true)) return w;
        return searchViolation(kernel, spanHint(kernel), 64, opt.searchBudget, opt.seed);
    };

    std::optional<FamilyRule> rule = familyRule(kernel, opt);
    if (rule && rule->verdict == PdVerdict::NotPD) {
        r.note = rule->note;
        r.witness = findWitness();
        if (r.witness) {
            r.verdict = PdVerdict::NotPD;
            r.method = PdMethod::AnalyticFamily;
        } else {
            r.verdict = PdVerdict::Undetermined;
            r.method = PdMethod::Search;
            r.note += "; no witness found within the search budget";
        }
        return r;
    }
    if (rule && rule->verdict == PdVerdict::StrictPD) {
        r.verdict = PdVerdict::StrictPD;
        r.method = PdMethod::AnalyticFamily;
        r.note = rule->note;
        return r;
    }

    // Shape route: symmetric + nonnegative + nonincreasing + convex, all decided analytically.
    StructureReport st = checkStructure(kernel, defaultStructureTimes(kernel));
    PropertyReport pr = checkShapeProperties(kernel, ShapeOptions{20.0, 400, 16, opt.seed, false});
    const bool analyticShape = pr.nonnegative.isTrue() && pr.nonincreasing.isTrue() && pr.convex.isTrue() &&
                               pr.nonnegative.method == Method::Analytic &&
                               pr.nonincreasing.method == Method::Analytic && pr.convex.method == Method::Analytic;
    if (st.symmetric && st.symmetricAnalytic && analyticShape) {
        const bool strict = pr.nonconstantForms.isTrue() && pr.nonconstantForms.method == Method::Analytic;
        r.verdict = strict ? PdVerdict::StrictPD : PdVerdict::PD;
        r.method = PdMethod::AnalyticTheorem;
        r.note = strict ? "symmetric, nonnegative, nonincreasing, convex, nonconstant forms"
                        : "symmetric, nonnegative, nonincreasing, convex";
        if (!strict && pr.nonconstantForms.isTrue()) r.note += "; nonconstant forms only sampled";
        return r;
    }
    if (rule) {
        r.verdict = rule->verdict;
        r.method = PdMethod::AnalyticFamily;
        r.note = rule->note;
        return r;
    }
    if (evidenceWitness) {
        r.verdict = PdVerdict::NotPD;
        r.method = PdMethod::Spectral;
        r.witness = evidenceWitness;
        r.note = "negative Gram direction on a random grid";
        return r;
    }
    r.verdict = PdVerdict::Undetermined;
    r.method = PdMethod::Spectral;
    r.note = "no analytic criterion applies; no violation on the evidence grids";
    return r;
}

std::string_view toString(PdVerdict v) {
    switch (v) {
        case PdVerdict::StrictPD: return "StrictPD";
        case PdVerdict::PD: return "PD";
        case PdVerdict::NotPD: return "NotPD";
        case PdVerdict::Undetermined: return "Undetermined";
    }
    return "";
}

std::string_view toString(PdMethod m) {
    switch (m) {
        case PdMethod::AnalyticTheorem: return "analytic_theorem";
        case PdMethod::AnalyticFamily: return "analytic_family";
        case PdMethod::Spectral: return "spectral";
        case PdMethod::Search: return "search";
    }
    return "";
}

}  // namespace mti
