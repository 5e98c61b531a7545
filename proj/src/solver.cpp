#include "mti/solver.hpp"

#include <Eigen/LU>
#include <Eigen/QR>

#include <algorithm>
#include <cmath>
#include <map>
#include <random>
#include <sstream>

namespace mti {

namespace {

void requireVector(const Vector& x0, Index k) {
    if (x0.size() != k) {
        std::ostringstream os;
        os << "portfolio has " << x0.size() << " entries, kernel dimension is " << k;
        throw DomainError(os.str());
    }
    if (!x0.allFinite()) throw DomainError("portfolio has non-finite entries");
}

void requireStrategy(const GramMatrix& g, const Strategy& s) {
    if (s.trades.rows() != g.size() || s.trades.cols() != g.dimension)
        throw DomainError("strategy shape does not match grid size and kernel dimension");
}

double residualAgainst(const GramMatrix& g, const Vector& xi, const Vector& lambda) {
    const Vector v = g.blocks * xi;
    const Index k = g.dimension;
    double r = 0;
    for (Index a = 0; a < g.size(); ++a) r = std::max(r, (v.segment(a * k, k) - lambda).cwiseAbs().maxCoeff());
    return r;
}

// Spreads the roundoff in sum(trades) + X0 evenly over the trades.
void polishTotals(Matrix& trades, const Vector& x0) {
    const Vector err = trades.colwise().sum().transpose() + x0;
    trades.rowwise() -= err.transpose() / static_cast<double>(trades.rows());
}

void certify(const SolveResult& r, const Vector& x0, const char* who) {
    const double bound = 1e-8 * (1 + r.lambda.cwiseAbs().maxCoeff());
    if (!(r.residual <= bound)) {
        std::ostringstream os;
        os << who << ": Lagrange residual " << r.residual << " exceeds " << bound;
        throw NumericError(os.str());
    }
    const double sumErr = (r.strategy.total() + x0).cwiseAbs().maxCoeff();
    if (!(sumErr <= 1e-10)) {
        std::ostringstream os;
        os << who << ": trades do not liquidate the portfolio (error " << sumErr << ")";
        throw NumericError(os.str());
    }
}

std::vector<double> lagTimes(const TimeGrid& grid) {
    std::vector<double> lags;
    for (Index a = 0; a < grid.size(); ++a)
        for (Index b = 0; b <= a; ++b) lags.push_back(grid[a] - grid[b]);
    std::sort(lags.begin(), lags.end());
    lags.erase(std::unique(lags.begin(), lags.end()), lags.end());
    return lags;
}

struct OneDimensional {
    Vector eta;
    double lambda;
    double cost;
    bool unique;
    bool exponential;
};

struct ExpSolution {
    Vector eta;
    double lambda;  // for the unit-amplitude kernel e^{-rate t}
};

ExpSolution solve1DExpImpl(double rate, const TimeGrid& grid, double y) {
    const Index n = grid.size();
    if (n < 2) throw DomainError("solve1DExp needs N >= 2");
    if (!(rate > 0) || !std::isfinite(rate)) throw DomainError("solve1DExp needs a positive rate");
    Vector a(n);
    a(0) = 0;
    for (Index i = 1; i < n; ++i) a(i) = std::exp(-(grid[i] - grid[i - 1]) * rate);
    double den = 2.0 / (1.0 + a(1));
    for (Index i = 2; i < n; ++i) den += (1.0 - a(i)) / (1.0 + a(i));
    const double lambda = -y / den;
    Vector eta(n);
    eta(0) = lambda / (1.0 + a(1));
    for (Index i = 1; i + 1 < n; ++i) eta(i) = (1.0 / (1.0 + a(i)) - a(i + 1) / (1.0 + a(i + 1))) * lambda;
    eta(n - 1) = lambda / (1.0 + a(n - 1));
    return {eta, lambda};
}

// 1D program for decay values g(lag) on the grid; uses the exponential closed form when g is exponential.
OneDimensional solve1D(const TimeGrid& grid, const std::map<double, Index>& lagIndex, const Vector& g, double y,
                       const Vector& direction) {
    const Index n = grid.size();
    GramMatrix gram{grid, 1, Matrix(n, n)};
    for (Index a = 0; a < n; ++a)
        for (Index b = 0; b <= a; ++b) {
            const double v = g(lagIndex.at(grid[a] - grid[b]));
            gram.blocks(a, b) = v;
            gram.blocks(b, a) = v;
        }
    SymmetricEigen e = symmetricEigen(gram.blocks);
    const double norm = gram.infNorm();
    if (e.values(0) < -1e-9 * (1 + norm)) {
        Strategy dir{grid, e.vectors.col(0) * direction.transpose()};
        throw NotPositiveDefiniteError("commuting kernel has a component that is not positive definite on the grid",
                                       dir, e.values(0));
    }

    const double c = g(lagIndex.at(0.0));
    bool exponential = n >= 2 && c > 0;
    double rate = 0;
    if (exponential) {
        double smallest = grid[1] - grid[0];
        for (const auto& [lag, idx] : lagIndex)
            if (lag > 0) smallest = std::min(smallest, lag);
        const double ratio = g(lagIndex.at(smallest)) / c;
        exponential = ratio > 0 && ratio < 1;
        if (exponential) {
            rate = -std::log(ratio) / smallest;
            for (const auto& [lag, idx] : lagIndex)
                if (std::abs(g(idx) - c * std::exp(-rate * lag)) > 1e-12 * c) exponential = false;
        }
    }
    if (exponential) {
        ExpSolution s = solve1DExpImpl(rate, grid, y);
        return {s.eta, c * s.lambda, 0.5 * s.eta.dot(gram.blocks * s.eta), true, true};
    }
    Vector x0(1);
    x0(0) = y;
    SolveResult r = solveGramKKT(gram, x0);
    return {r.strategy.trades.col(0), r.lambda(0), r.cost, r.unique, false};
}

}  // namespace

double cost(const GramMatrix& gram, const Strategy& s) {
    requireStrategy(gram, s);
    const Vector v = s.flatten();
    return 0.5 * v.dot(gram.blocks * v);
}

double cost(const DecayKernel& kernel, const TimeGrid& grid, const Strategy& s) {
    if (s.trades.rows() != grid.size() || s.trades.cols() != kernel.dimension())
        throw DomainError("strategy shape does not match grid size and kernel dimension");
    return cost(assembleGram(kernel, grid), s);
}

LagrangeResidual lagrangeResidual(const GramMatrix& gram, const Strategy& s) {
    requireStrategy(gram, s);
    const Vector v = gram.blocks * s.flatten();
    const Index k = gram.dimension, n = gram.size();
    Vector mean = Vector::Zero(k);
    for (Index a = 0; a < n; ++a) mean += v.segment(a * k, k);
    mean /= static_cast<double>(n);
    double r = 0;
    for (Index a = 0; a < n; ++a) r = std::max(r, (v.segment(a * k, k) - mean).cwiseAbs().maxCoeff());
    return {mean, r};
}

LagrangeResidual lagrangeResidual(const DecayKernel& kernel, const TimeGrid& grid, const Strategy& s) {
    return lagrangeResidual(assembleGram(kernel, grid), s);
}

SolveResult solveGramKKT(const GramMatrix& gram, const Vector& x0, KktPath path) {
    const Index k = gram.dimension, n = gram.size(), nk = n * k;
    requireVector(x0, k);
    const double norm = gram.infNorm();
    const double lmin = minEigenvalue(gram.blocks);
    if (lmin < -1e-9 * (1 + norm)) {
        SymmetricEigen e = symmetricEigen(gram.blocks);
        throw NotPositiveDefiniteError("Gram matrix has a negative eigenvalue; cost is unbounded below on this grid",
                                       Strategy::fromFlat(gram.grid, e.vectors.col(0), k), e.values(0));
    }
    const bool strict = lmin > 1e-9 * (1 + norm);

    Matrix m = Matrix::Zero(nk + k, nk + k);
    m.topLeftCorner(nk, nk) = gram.blocks;
    for (Index a = 0; a < n; ++a)
        for (Index i = 0; i < k; ++i) {
            m(nk + i, a * k + i) = 1.0;
            m(a * k + i, nk + i) = 1.0;
        }
    Vector rhs = Vector::Zero(nk + k);
    rhs.tail(k) = -x0;

    const bool direct = path == KktPath::Direct || (path == KktPath::Automatic && strict);
    Vector z = direct ? Vector(m.partialPivLu().solve(rhs))
                      : Vector(Eigen::CompleteOrthogonalDecomposition<Matrix>(m).solve(rhs));
    if (!z.allFinite()) throw NumericError("KKT solve produced non-finite values");

    SolveResult r;
    r.strategy = Strategy::fromFlat(gram.grid, z.head(nk), k);
    polishTotals(r.strategy.trades, x0);
    const Vector xi = r.strategy.flatten();
    r.lambda = -z.tail(k);
    r.cost = 0.5 * xi.dot(gram.blocks * xi);
    r.unique = strict;
    r.residual = residualAgainst(gram, xi, r.lambda);
    r.method = "kkt";
    certify(r, x0, "solveKKT");
    return r;
}

SolveResult solveKKT(const DecayKernel& kernel, const TimeGrid& grid, const Vector& x0, KktPath path) {
    requireVector(x0, kernel.dimension());
    return solveGramKKT(assembleGram(kernel, grid), x0, path);
}

Vector solve1DExp(double rate, const TimeGrid& grid, double y) { return solve1DExpImpl(rate, grid, y).eta; }

SolveResult solveExpClosedForm(const Matrix& b, const TimeGrid& grid, const Vector& x0, ClosedFormVariant variant) {
    if (b.rows() != b.cols() || b.rows() == 0) throw DomainError("solveExpClosedForm: B must be square");
    const Index k = b.rows(), n = grid.size();
    requireVector(x0, k);
    if (n < 2) throw DomainError("solveExpClosedForm needs N >= 2");
    DecayKernel kernel = makeMatrixExp(b);
    const Matrix& bs = familyAs<family::MatrixExp>(kernel)->b;
    const double lmin = minEigenvalue(bs);
    if (lmin < -1e-12 * std::max(1.0, infNorm(bs))) {
        std::ostringstream os;
        os << "solveExpClosedForm: B has a negative eigenvalue " << lmin;
        throw DomainError(os.str());
    }
    const bool equidistant = variant == ClosedFormVariant::Equidistant ||
                             (variant == ClosedFormVariant::Automatic && grid.isEquidistant());
    if (variant == ClosedFormVariant::Equidistant && !grid.isEquidistant())
        throw DomainError("solveExpClosedForm: equidistant variant on a non-equidistant grid");

    const Matrix id = Matrix::Identity(k, k);
    Matrix trades(n, k);
    Vector lambda;
    if (equidistant) {
        const Matrix a = expNegTimes(bs, grid[1] - grid[0]);
        const Matrix mm = static_cast<double>(n) * id - static_cast<double>(n - 2) * a;
        const Vector xi1 = -mm.partialPivLu().solve(x0);
        lambda = (id + a) * xi1;
        trades.row(0) = xi1.transpose();
        for (Index i = 1; i + 1 < n; ++i) trades.row(i) = ((id - a) * xi1).transpose();
        trades.row(n - 1) = xi1.transpose();
    } else {
        std::vector<Matrix> a(static_cast<size_t>(n));
        std::vector<Eigen::PartialPivLU<Matrix>> inv(static_cast<size_t>(n));
        for (Index i = 1; i < n; ++i) {
            a[i] = expNegTimes(bs, grid[i] - grid[i - 1]);
            inv[i].compute(id + a[i]);
        }
        Matrix s = 2.0 * inv[1].inverse();
        for (Index i = 2; i < n; ++i) s += (id - a[i]) * inv[i].inverse();
        lambda = -s.partialPivLu().solve(x0);
        trades.row(0) = inv[1].solve(lambda).transpose();
        for (Index i = 1; i + 1 < n; ++i)
            trades.row(i) = (inv[i].solve(lambda) - a[i + 1] * inv[i + 1].solve(lambda)).transpose();
        trades.row(n - 1) = inv[n - 1].solve(lambda).transpose();
    }

    polishTotals(trades, x0);
    GramMatrix gram = assembleGram(kernel, grid);
    SolveResult r;
    r.strategy = Strategy{grid, trades};
    r.lambda = lambda;
    r.cost = cost(gram, r.strategy);
    r.unique = lmin > 1e-12;
    r.residual = residualAgainst(gram, r.strategy.flatten(), lambda);
    r.method = equidistant ? "closed_form_equidistant" : "closed_form";
    certify(r, x0, "solveExpClosedForm");
    return r;
}

Diagonalization simultaneousDiagonalize(const DecayKernel& kernel, const std::vector<double>& times,
                                        std::uint64_t seed) {
    if (times.empty()) throw DomainError("simultaneousDiagonalize needs sample times");
    StructureReport st = checkStructure(kernel, times);
    if (!st.symmetric || !st.commuting)
        throw PreconditionError("simultaneousDiagonalize requires a symmetric commuting kernel");
    const Index k = kernel.dimension();
    std::vector<Matrix> g;
    std::vector<double> norms;
    for (double t : times) {
        Matrix m = kernel.eval(t);
        norms.push_back(infNorm(m));
        g.push_back(symmetricPart(m));
    }
    double worst = 0, worstTime = 0;
    for (int attempt = 0; attempt < 2; ++attempt) {
        std::mt19937_64 rng(splitmix64(seed + static_cast<std::uint64_t>(attempt)));
        std::uniform_real_distribution<double> u(0.5, 1.5);
        Matrix mix = Matrix::Zero(k, k);
        for (size_t s = 0; s < g.size(); ++s) mix += u(rng) * g[s] / (1 + norms[s]);
        Matrix o = symmetricEigen(mix).vectors.transpose();
        Diagonalization d{o, times, Matrix(static_cast<Index>(times.size()), k)};
        worst = 0;
        bool ok = true;
        for (size_t s = 0; s < g.size(); ++s) {
            Matrix dm = o * g[s] * o.transpose();
            d.decays.row(static_cast<Index>(s)) = dm.diagonal().transpose();
            dm.diagonal().setZero();
            const double off = infNorm(dm) / (1 + norms[s]);
            if (off > worst) {
                worst = off;
                worstTime = times[s];
            }
            if (off > 1e-9) ok = false;
        }
        if (ok) return d;
    }
    std::ostringstream os;
    os << "simultaneous diagonalization failed: off-diagonal residual " << worst << " at t=" << worstTime;
    throw NumericError(os.str());
}

namespace {

struct CommutingParts {
    Diagonalization diag;
    std::map<double, Index> lagIndex;
};

CommutingParts diagonalizeOnGrid(const DecayKernel& kernel, const TimeGrid& grid) {
    std::vector<double> lags = lagTimes(grid);
    CommutingParts p{simultaneousDiagonalize(kernel, lags), {}};
    for (size_t i = 0; i < lags.size(); ++i) p.lagIndex[lags[i]] = static_cast<Index>(i);
    return p;
}

}  // namespace

SolveResult solveCommuting(const DecayKernel& kernel, const TimeGrid& grid, const Vector& x0) {
    const Index k = kernel.dimension(), n = grid.size();
    requireVector(x0, k);
    CommutingParts parts = diagonalizeOnGrid(kernel, grid);
    const Matrix& o = parts.diag.o;
    const Vector y = o * x0;
    Matrix eta(n, k);
    Vector lt(k);
    double total = 0;
    bool unique = true;
    for (Index i = 0; i < k; ++i) {
        OneDimensional s = solve1D(grid, parts.lagIndex, parts.diag.decays.col(i), y(i), o.row(i).transpose());
        eta.col(i) = s.eta;
        lt(i) = s.lambda;
        total += s.cost;
        unique = unique && s.unique;
    }
    SolveResult r;
    r.strategy = Strategy{grid, eta * o};
    polishTotals(r.strategy.trades, x0);
    r.lambda = o.transpose() * lt;
    r.cost = total;
    r.unique = unique;
    GramMatrix gram = assembleGram(kernel, grid);
    r.residual = residualAgainst(gram, r.strategy.flatten(), r.lambda);
    r.method = "commuting";
    certify(r, x0, "solveCommuting");
    return r;
}

BasisDecomposition basisStrategies(const DecayKernel& kernel, const TimeGrid& grid) {
    PropertyReport pr = checkShapeProperties(kernel);
    BasisDecomposition out;
    if (!pr.symmetric || !pr.commuting) throw PreconditionError("basisStrategies requires a symmetric commuting kernel");
    for (ShapeProperty p : {ShapeProperty::Nonnegative, ShapeProperty::Nonincreasing, ShapeProperty::Convex}) {
        const PropertyVerdict& v = pr.get(p);
        if (!v.isTrue())
            throw PreconditionError(std::string("basisStrategies requires a ") + std::string(toString(p)) + " kernel");
        if (v.method == Method::Sampled)
            out.warnings.push_back(std::string(toString(p)) + " established by sampling only");
    }
    const Index k = kernel.dimension();
    CommutingParts parts = diagonalizeOnGrid(kernel, grid);
    out.o = parts.diag.o;
    for (Index i = 0; i < k; ++i) {
        const Vector v = out.o.row(i).transpose();
        OneDimensional s = solve1D(grid, parts.lagIndex, parts.diag.decays.col(i), 1.0, v);
        out.basis.push_back(v);
        out.etas.push_back(s.eta);
        out.strategies.push_back(Strategy{grid, s.eta * v.transpose()});
    }
    return out;
}

RefineResult refine(const DecayKernel& kernel, double horizon, const Vector& x0, Index maxLevels, double relTol) {
    if (!(horizon > 0)) throw DomainError("refine needs a positive horizon");
    if (maxLevels < 1) throw DomainError("refine needs maxLevels >= 1");
    requireVector(x0, kernel.dimension());
    PosDefReport pd = classifyPD(kernel);
    if (pd.verdict == PdVerdict::NotPD) {
        if (pd.witness)
            throw NotPositiveDefiniteError("refine: kernel is not positive definite", pd.witness->xi,
                                           pd.witness->quadraticForm);
        throw PreconditionError("refine: kernel is not positive definite");
    }
    if (pd.verdict == PdVerdict::Undetermined)
        throw PreconditionError("refine: positive definiteness of the kernel could not be established");
    RefineResult out;
    for (Index level = 1; level <= maxLevels; ++level) {
        const Index n = (Index{1} << level) + 1;
        SolveResult r = solveKKT(kernel, TimeGrid::equidistant(horizon, n), x0);
        if (!out.levels.empty()) {
            const double prev = out.levels.back().cost;
            if (r.cost > prev + 1e-10 * std::abs(prev)) out.monotone = false;
            out.levels.push_back({n, r.cost});
            out.finest = std::move(r);
            if (relTol > 0 && prev - out.levels.back().cost <= relTol * std::abs(prev)) {
                out.converged = true;
                break;
            }
        } else {
            out.levels.push_back({n, r.cost});
            out.finest = std::move(r);
        }
    }
    return out;
}

AutoSolveResult solveAuto(const DecayKernel& kernel, const TimeGrid& grid, const Vector& x0, double tol) {
    requireVector(x0, kernel.dimension());
    std::vector<int> order;
    if (auto* p = familyAs<family::MatrixExp>(kernel); p && grid.size() >= 2 && minEigenvalue(p->b) > 1e-12)
        order.push_back(0);
    StructureReport st = checkStructure(kernel, lagTimes(grid));
    if (st.symmetric && st.commuting) order.push_back(1);
    order.push_back(2);

    auto run = [&](int which) {
        switch (which) {
            case 0: return solveExpClosedForm(familyAs<family::MatrixExp>(kernel)->b, grid, x0);
            case 1: return solveCommuting(kernel, grid, x0);
            default: return solveKKT(kernel, grid, x0);
        }
    };
    AutoSolveResult out;
    out.primary = run(order[0]);
    if (order.size() > 1) {
        out.secondary = run(order[1]);
        out.crossCheckDiff = (out.primary.strategy.trades - out.secondary->strategy.trades).cwiseAbs().maxCoeff();
        if (!(out.crossCheckDiff <= tol)) {
            std::ostringstream os;
            os << "solvers " << out.primary.method << " and " << out.secondary->method << " disagree by "
               << out.crossCheckDiff;
            throw SolverDisagreementError(os.str(), out.primary, *out.secondary);
        }
    }
    return out;
}

}  // namespace mti
