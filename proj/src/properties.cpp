#include "mti/properties.hpp"

#include <algorithm>
#include <cmath>
#include <limits>
#include <random>

namespace mti {

namespace {

double form(const Matrix& g, const Vector& x) { return x.dot(g * x); }

// A (t, step) pair at which the witness finder tries the minimizing eigendirection.
struct Probe {
    double t;
    double step;
};

Matrix propertyMatrix(const DecayKernel& k, ShapeProperty p, double t, double h, double* scale) {
    switch (p) {
        case ShapeProperty::Nonnegative: {
            Matrix g = k.eval(t);
            *scale = infNorm(g);
            return symmetricPart(g);
        }
        case ShapeProperty::Nonincreasing: {
            Matrix g0 = k.eval(t), g1 = k.eval(t + h);
            *scale = infNorm(g0) + infNorm(g1);
            return symmetricPart(g0 - g1);
        }
        case ShapeProperty::Convex: {
            Matrix g0 = k.eval(t), g1 = k.eval(t + h), g2 = k.eval(t + 2 * h);
            *scale = infNorm(g0) + infNorm(g1) + infNorm(g2);
            return symmetricPart(g0 - 2 * g1 + g2);
        }
        default: break;
    }
    *scale = 0;
    return Matrix();
}

// Best violating (t, step, x) among the probes; empty if none re-evaluates as a violation.
std::optional<ShapeWitness> findWitness(const DecayKernel& k, ShapeProperty p, const std::vector<Probe>& probes) {
    std::optional<ShapeWitness> best;
    double bestRel = 0.0;
    for (const Probe& pr : probes) {
        if (!(pr.t >= 0) || !std::isfinite(pr.t) || !(pr.step >= 0)) continue;
        double scale = 0;
        Matrix m = propertyMatrix(k, p, pr.t, pr.step, &scale);
        if (!(scale > 0) || !m.allFinite()) continue;
        SymmetricEigen e = symmetricEigen(m);
        if (!(e.values(0) < 0)) continue;
        ShapeWitness w{pr.t, pr.step, 0, e.vectors.col(0)};
        const double rel = witnessMargin(k, p, w) / scale;
        if (rel < bestRel && witnessIsViolation(k, p, w)) {
            bestRel = rel;
            best = w;
        }
    }
    return best;
}

std::vector<Probe> genericProbes(double tHigh) {
    std::vector<Probe> out;
    for (int i = 0; i <= 400; ++i) out.push_back({0.05 * i, 0.05});
    for (double h : {1e-4, 1e-3, 1e-2}) out.push_back({0.0, h});
    const double lo = 1e-3, hi = std::max(tHigh, 25.0);
    for (int i = 0; i < 300; ++i) {
        const double t = lo * std::pow(hi / lo, i / 299.0);
        out.push_back({t, 0.05 * t});
        out.push_back({t, 0.5 * t});
    }
    return out;
}

PropertyVerdict analyticTrue() { return {Verdict::True, Method::Analytic, std::nullopt, {}}; }

PropertyVerdict analyticFalse(const DecayKernel& k, ShapeProperty p, std::vector<Probe> probes, double tHigh) {
    auto gen = genericProbes(tHigh);
    probes.insert(probes.end(), gen.begin(), gen.end());
    PropertyVerdict v{Verdict::False, Method::Analytic, findWitness(k, p, probes), {}};
    if (!v.witness) v.note = "criterion fails but the violation lies outside double-precision range";
    return v;
}

PropertyVerdict analyticVerdict(bool holds, const DecayKernel& k, ShapeProperty p, std::vector<Probe> probes,
                                double tHigh) {
    return holds ? analyticTrue() : analyticFalse(k, p, std::move(probes), tHigh);
}

PropertyVerdict constantForm(Vector x, double step = 0.05, Index samples = 401) {
    x.normalize();
    return {Verdict::False, Method::Analytic, ShapeWitness{0.0, step, samples, x}, {}};
}

// Unit x with x^T M x = 0 for every listed symmetric 2x2 matrix, if one exists.
std::optional<Vector> commonIsotropic(const std::vector<Matrix>& ms) {
    std::vector<Vector> candidates;
    bool seeded = false;
    for (const Matrix& m : ms) {
        const double scale = infNorm(m);
        if (!(scale > 0)) continue;
        seeded = true;
        const double a = m(0, 0), b = m(0, 1), c = m(1, 1);
        if (std::abs(c) <= 1e-14 * scale) candidates.push_back(Vector{{0.0, 1.0}});
        if (std::abs(c) > 1e-14 * scale) {
            const double disc = b * b - a * c;
            if (disc < -1e-14 * scale * scale) return std::nullopt;
            const double r = std::sqrt(std::max(disc, 0.0));
            candidates.push_back(Vector{{c, -b + r}});
            candidates.push_back(Vector{{c, -b - r}});
        } else if (std::abs(b) > 1e-14 * scale) {
            candidates.push_back(Vector{{2 * b, -a}});
        } else {
            candidates.push_back(Vector{{1.0, 0.0}});
        }
        break;
    }
    if (!seeded) return Vector{{1.0, 0.0}};
    for (Vector x : candidates) {
        x.normalize();
        bool all = true;
        for (const Matrix& m : ms) all = all && std::abs(form(m, x)) <= 1e-12 * (1 + infNorm(m));
        if (all) return x;
    }
    return std::nullopt;
}

// Every 2x2 family here decays to zero, so a form is constant iff it vanishes identically.
PropertyVerdict nonconstantFromGroups(const std::vector<Matrix>& groups) {
    auto x = commonIsotropic(groups);
    return x ? constantForm(*x) : analyticTrue();
}

struct Analytic {
    std::optional<PropertyVerdict> nonnegative, nonincreasing, convex, nonconstant;
};

// Shared logic for kernels O^T diag(g_i(t)) O: each component is a scalar decay at time scale s_i.
Analytic diagonalFamily(const DecayKernel& k, const Matrix& basis, const std::vector<ScalarFunction>& fns,
                        const Vector& scales) {
    Analytic a;
    a.nonnegative = analyticTrue();
    a.nonincreasing = analyticTrue();
    a.convex = analyticTrue();
    for (size_t i = 0; i < fns.size(); ++i) {
        const double s = scales(static_cast<Index>(i));
        if (!fns[i].isConvex() && s > 0) {
            const double h = 0.2 / s;
            a.convex = analyticFalse(k, ShapeProperty::Convex, {{0.0, h}, {0.0, 0.5 * h}}, 50.0 / s);
            break;
        }
    }
    a.nonconstant = analyticTrue();
    for (size_t i = 0; i < fns.size(); ++i) {
        if (fns[i].isConstant() || scales(static_cast<Index>(i)) == 0) {
            a.nonconstant = constantForm(basis.row(static_cast<Index>(i)).transpose());
            break;
        }
    }
    return a;
}

Analytic analyticFor(const DecayKernel& k) {
    using namespace family;
    Analytic a;
    const auto& var = static_cast<const KernelFamily::variant&>(k.family());

    if (auto* p = std::get_if<Permanent>(&var)) {
        SymmetricEigen e = symmetricEigen(symmetricPart(p->g0));
        a.nonnegative = analyticVerdict(e.values(0) >= -1e-12 * infNorm(p->g0), k, ShapeProperty::Nonnegative,
                                        {{0.0, 0.0}}, 1.0);
        a.nonincreasing = analyticTrue();
        a.convex = analyticTrue();
        Vector x = Vector::Zero(k.dimension());
        x(0) = 1;
        a.nonconstant = constantForm(x, 1.0, 3);
    } else if (auto* p = std::get_if<MatrixExp>(&var)) {
        SymmetricEigen e = symmetricEigen(p->b);
        Vector s = e.values.unaryExpr([](double v) { return v < 1e-12 ? 0.0 : v; });
        a = diagonalFamily(k, e.vectors.transpose(),
                           std::vector<ScalarFunction>(static_cast<size_t>(k.dimension()), ScalarFunction::expDecay(1)),
                           s);
    } else if (auto* p = std::get_if<MatrixFunction>(&var)) {
        a = diagonalFamily(k, p->basis, std::vector<ScalarFunction>(static_cast<size_t>(k.dimension()), p->fn),
                           p->spectrum);
    } else if (auto* p = std::get_if<DiagCongruence>(&var)) {
        a = diagonalFamily(k, p->o, p->decays, Vector::Ones(k.dimension()));
    } else if (std::get_if<Exp2x2>(&var) || std::get_if<CrossExp>(&var)) {
        Coeffs2x2 c;
        if (auto* e = std::get_if<Exp2x2>(&var)) {
            c = e->c;
        } else {
            auto* x = std::get_if<CrossExp>(&var);
            c = {1.0, x->rho, x->rho, 1.0, x->kappa, x->kappaTilde, x->kappaTilde, x->kappa};
        }
        const double half = 0.5 * (c.b11 + c.b22);
        const bool rateOk = (c.a12 == 0 || c.b12 >= half) && (c.a21 == 0 || c.b21 >= half);
        auto sq = [](double v) { return v * v; };
        const bool nonneg = rateOk && 0.25 * sq(c.a12 + c.a21) <= c.a11 * c.a22;
        const bool noninc = rateOk && 0.25 * sq(c.a12 * c.b12 + c.a21 * c.b21) <= c.a11 * c.b11 * c.a22 * c.b22;
        const bool convex = rateOk && 0.25 * sq(c.a12 * sq(c.b12) + c.a21 * sq(c.b21)) <=
                                          c.a11 * sq(c.b11) * c.a22 * sq(c.b22);
        const double bmin = std::min({c.b11, c.b12, c.b21, c.b22});
        const double tHigh = 700.0 / bmin;
        a.nonnegative = analyticVerdict(nonneg, k, ShapeProperty::Nonnegative, {}, tHigh);
        a.nonincreasing = analyticVerdict(noninc, k, ShapeProperty::Nonincreasing, {}, tHigh);
        a.convex = analyticVerdict(convex, k, ShapeProperty::Convex, {}, tHigh);
        // Group the four exponentials by rate; q_x vanishes identically iff every group's form does.
        const double rates[4] = {c.b11, c.b12, c.b21, c.b22};
        const double amps[4] = {c.a11, c.a12, c.a21, c.a22};
        std::vector<double> seen;
        std::vector<Matrix> groups;
        for (int i = 0; i < 4; ++i) {
            size_t g = 0;
            while (g < seen.size() && std::abs(seen[g] - rates[i]) > 1e-12 * rates[i]) ++g;
            if (g == seen.size()) {
                seen.push_back(rates[i]);
                groups.push_back(Matrix::Zero(2, 2));
            }
            Matrix& m = groups[g];
            if (i == 0) m(0, 0) += amps[i];
            if (i == 3) m(1, 1) += amps[i];
            if (i == 1 || i == 2) {
                m(0, 1) += 0.5 * amps[i];
                m(1, 0) += 0.5 * amps[i];
            }
        }
        a.nonconstant = nonconstantFromGroups(groups);
    } else if (auto* p = std::get_if<Linear2x2>(&var)) {
        const auto& c = p->c;
        const double r11 = c.a11 / c.b11, r12 = c.a12 / c.b12, r21 = c.a21 / c.b21, r22 = c.a22 / c.b22;
        const bool ratioOk = std::max(r12, r21) <= std::min(r11, r22);
        auto eq = [](double x, double y) { return std::abs(x - y) <= 1e-12 * std::max(std::abs(x), std::abs(y)); };
        const bool slopes = 0.25 * (c.b12 + c.b21) * (c.b12 + c.b21) <= c.b11 * c.b22;
        const bool nonneg = ratioOk && 0.25 * (c.a12 + c.a21) * (c.a12 + c.a21) <= c.a11 * c.a22;
        const bool noninc = ratioOk && slopes;
        const bool convex = eq(r11, r12) && eq(r11, r21) && eq(r11, r22) && slopes;
        std::vector<double> kinks{0.0, r11, r12, r21, r22};
        std::sort(kinks.begin(), kinks.end());
        std::vector<Probe> probes;
        for (size_t i = 0; i + 1 < kinks.size(); ++i) {
            const double gap = kinks[i + 1] - kinks[i];
            if (gap <= 0) continue;
            probes.push_back({0.5 * (kinks[i] + kinks[i + 1]), 0.0});
            probes.push_back({0.5 * (kinks[i] + kinks[i + 1]) - 0.125 * gap, 0.25 * gap});
        }
        double minGap = kinks.back();
        for (size_t i = 0; i + 1 < kinks.size(); ++i)
            if (kinks[i + 1] > kinks[i]) minGap = std::min(minGap, kinks[i + 1] - kinks[i]);
        for (size_t i = 1; i < kinks.size(); ++i) {
            const double h = std::min(0.25 * minGap, 0.01 * kinks[i]);
            probes.push_back({kinks[i] - h, h});
        }
        const double tHigh = kinks.back() * 2;
        a.nonnegative = analyticVerdict(nonneg, k, ShapeProperty::Nonnegative, probes, tHigh);
        a.nonincreasing = analyticVerdict(noninc, k, ShapeProperty::Nonincreasing, probes, tHigh);
        a.convex = analyticVerdict(convex, k, ShapeProperty::Convex, probes, tHigh);
        // On each segment between kinks the form is affine in t with the active entries only.
        std::vector<Matrix> groups;
        const double as[4] = {c.a11, c.a12, c.a21, c.a22}, bs[4] = {c.b11, c.b12, c.b21, c.b22};
        for (size_t i = 0; i + 1 < kinks.size(); ++i) {
            if (!(kinks[i + 1] > kinks[i])) continue;
            const double mid = 0.5 * (kinks[i] + kinks[i + 1]);
            Matrix ga = Matrix::Zero(2, 2), gb = Matrix::Zero(2, 2);
            for (int e = 0; e < 4; ++e) {
                if (!(as[e] - bs[e] * mid > 0)) continue;
                ga(e / 2, e % 2) = as[e];
                gb(e / 2, e % 2) = bs[e];
            }
            groups.push_back(symmetricPart(ga));
            groups.push_back(symmetricPart(gb));
        }
        a.nonconstant = nonconstantFromGroups(groups);
    } else if (std::get_if<ClampedExp>(&var)) {
        a.nonnegative = a.nonincreasing = a.convex = a.nonconstant = analyticTrue();
    } else if (auto* p = std::get_if<JordanExp>(&var)) {
        const double b = p->b;
        a.nonnegative = analyticFalse(k, ShapeProperty::Nonnegative, {{3.0, 0.0}}, 50.0 / b);
        a.nonincreasing = analyticFalse(k, ShapeProperty::Nonincreasing, {{2.0 + 2.0 / b, 1.0 / b}}, 50.0 / b);
        a.convex = analyticFalse(k, ShapeProperty::Convex, {{2.0 + 3.0 / b, 0.5 / b}}, 50.0 / b);
        a.nonconstant = analyticTrue();
    } else if (auto* p = std::get_if<ScalarTimesMatrix>(&var)) {
        SymmetricEigen e = symmetricEigen(symmetricPart(p->l));
        const double scale = std::max(infNorm(p->l), std::numeric_limits<double>::min());
        if (e.values(0) >= -1e-12 * scale) {
            a.nonnegative = analyticTrue();
            a.nonincreasing = analyticTrue();
            const bool zero = infNorm(p->l) == 0;
            if (p->g.isConvex() || zero) {
                a.convex = analyticTrue();
            } else {
                a.convex = analyticFalse(k, ShapeProperty::Convex, {{0.0, 0.2}, {0.0, 0.1}}, 50.0);
            }
            if (p->g.isConstant()) {
                Vector x = Vector::Zero(k.dimension());
                x(0) = 1;
                a.nonconstant = constantForm(x);
            } else if (e.values(0) <= 1e-12 * scale) {
                a.nonconstant = constantForm(e.vectors.col(0));
            } else {
                a.nonconstant = analyticTrue();
            }
        }
    }
    return a;
}

std::vector<Vector> directionSet(Index k, Index nRandom, std::uint64_t seed) {
    std::vector<Vector> dirs;
    std::mt19937_64 rng(seed);
    std::normal_distribution<double> nd;
    for (Index r = 0; r < nRandom; ++r) {
        Vector x(k);
        for (Index i = 0; i < k; ++i) x(i) = nd(rng);
        if (x.norm() > 0) dirs.push_back(x.normalized());
    }
    for (Index i = 0; i < k; ++i) dirs.push_back(Vector::Unit(k, i));
    const double s = std::sqrt(0.5);
    for (Index i = 0; i < k; ++i)
        for (Index j = i + 1; j < k; ++j) {
            dirs.push_back(s * (Vector::Unit(k, i) + Vector::Unit(k, j)));
            dirs.push_back(s * (Vector::Unit(k, i) - Vector::Unit(k, j)));
        }
    return dirs;
}

struct Sampled {
    PropertyVerdict nonnegative, nonincreasing, convex, nonconstant;
};

Sampled sampledChecks(const DecayKernel& k, double tMax, Index n, Index nDirections, std::uint64_t seed) {
    const double h = tMax / static_cast<double>(n - 1);
    std::vector<double> times(static_cast<size_t>(n));
    std::vector<Matrix> s(static_cast<size_t>(n));
    std::vector<double> norms(static_cast<size_t>(n));
    for (Index i = 0; i < n; ++i) {
        times[i] = h * static_cast<double>(i);
        Matrix g = k.eval(times[i]);
        norms[i] = infNorm(g);
        s[i] = symmetricPart(g);
    }
    auto noViolation = [] { return PropertyVerdict{Verdict::True, Method::Sampled, std::nullopt, {}}; };
    auto violation = [](ShapeWitness w) { return PropertyVerdict{Verdict::False, Method::Sampled, w, {}}; };
    Sampled out{noViolation(), noViolation(), noViolation(), noViolation()};

    // Worst relative eigen-violation of the difference matrices over the sample grid.
    auto scan = [&](ShapeProperty p, int order) {
        double worst = 0;
        std::optional<ShapeWitness> w;
        for (Index i = 0; i + order < n; ++i) {
            Matrix m;
            double scale;
            if (order == 0) {
                m = s[i];
                scale = norms[i];
            } else if (order == 1) {
                m = s[i] - s[i + 1];
                scale = norms[i] + norms[i + 1];
            } else {
                m = s[i] - 2 * s[i + 1] + s[i + 2];
                scale = norms[i] + norms[i + 1] + norms[i + 2];
            }
            SymmetricEigen e = symmetricEigen(m);
            const double rel = e.values(0) / (1 + scale);
            if (rel < -1e-9 && rel < worst) {
                ShapeWitness cand{times[i], order == 0 ? 0.0 : h, 0, e.vectors.col(0)};
                if (witnessIsViolation(k, p, cand)) {
                    worst = rel;
                    w = cand;
                }
            }
        }
        return w;
    };
    if (auto w = scan(ShapeProperty::Nonnegative, 0)) out.nonnegative = violation(*w);
    if (auto w = scan(ShapeProperty::Nonincreasing, 1)) out.nonincreasing = violation(*w);
    if (auto w = scan(ShapeProperty::Convex, 2)) out.convex = violation(*w);

    std::vector<Vector> dirs = directionSet(k.dimension(), nDirections, seed);
    Matrix drift = Matrix::Zero(k.dimension(), k.dimension());
    for (Index i = 1; i < n; ++i) drift += s[0] - s[i];
    SymmetricEigen de = symmetricEigen(drift);
    dirs.push_back(de.vectors.col(0));
    dirs.push_back(de.vectors.col(de.vectors.cols() - 1));
    for (const Vector& x : dirs) {
        ShapeWitness w{0.0, h, n, x};
        if (witnessIsViolation(k, ShapeProperty::NonconstantForms, w)) {
            out.nonconstant = violation(w);
            break;
        }
    }
    return out;
}

}  // namespace

const PropertyVerdict& PropertyReport::get(ShapeProperty p) const {
    switch (p) {
        case ShapeProperty::Nonnegative: return nonnegative;
        case ShapeProperty::Nonincreasing: return nonincreasing;
        case ShapeProperty::Convex: return convex;
        case ShapeProperty::NonconstantForms: return nonconstantForms;
    }
    return nonnegative;
}

double witnessMargin(const DecayKernel& k, ShapeProperty p, const ShapeWitness& w) {
    const Vector& x = w.direction;
    switch (p) {
        case ShapeProperty::Nonnegative: return form(k.eval(w.t), x);
        case ShapeProperty::Nonincreasing: return form(k.eval(w.t), x) - form(k.eval(w.t + w.step), x);
        case ShapeProperty::Convex:
            return form(k.eval(w.t), x) - 2 * form(k.eval(w.t + w.step), x) + form(k.eval(w.t + 2 * w.step), x);
        case ShapeProperty::NonconstantForms: {
            double lo = std::numeric_limits<double>::infinity(), hi = -lo;
            for (Index i = 0; i < std::max<Index>(w.samples, 1); ++i) {
                const double q = form(k.eval(w.t + w.step * static_cast<double>(i)), x);
                lo = std::min(lo, q);
                hi = std::max(hi, q);
            }
            return hi - lo;
        }
    }
    return 0.0;
}

bool witnessIsViolation(const DecayKernel& k, ShapeProperty p, const ShapeWitness& w) {
    if (w.direction.size() != k.dimension() || !(w.direction.norm() > 0)) return false;
    const double margin = witnessMargin(k, p, w);
    if (!std::isfinite(margin)) return false;
    if (p == ShapeProperty::NonconstantForms) {
        double qmax = 0;
        for (Index i = 0; i < std::max<Index>(w.samples, 1); ++i)
            qmax = std::max(qmax, std::abs(form(k.eval(w.t + w.step * static_cast<double>(i)), w.direction)));
        return margin <= 1e-9 * (1 + qmax);
    }
    double scale = infNorm(k.eval(w.t));
    if (p != ShapeProperty::Nonnegative) scale += infNorm(k.eval(w.t + w.step));
    if (p == ShapeProperty::Convex) scale += infNorm(k.eval(w.t + 2 * w.step));
    return margin < 0 && margin < -1e-12 * scale * w.direction.squaredNorm();
}

PropertyReport checkShapeProperties(const DecayKernel& kernel, double tMax, Index nSamples, Index nDirections,
                                    std::uint64_t seed) {
    return checkShapeProperties(kernel, ShapeOptions{tMax, nSamples, nDirections, seed, false});
}

PropertyReport checkShapeProperties(const DecayKernel& kernel, const ShapeOptions& o) {
    if (!(o.tMax > 0)) throw DomainError("checkShapeProperties: tMax must be positive");
    if (o.nSamples < 3) throw DomainError("checkShapeProperties: nSamples must be >= 3");
    PropertyReport r;
    StructureReport st = checkStructure(kernel, defaultStructureTimes(kernel));
    r.symmetric = st.symmetric;
    r.commuting = st.commuting;

    Sampled s = sampledChecks(kernel, o.tMax, o.nSamples, o.nDirections, o.seed);
    Analytic a = o.forceSampled ? Analytic{} : analyticFor(kernel);
    r.nonnegative = a.nonnegative.value_or(s.nonnegative);
    r.nonincreasing = a.nonincreasing.value_or(s.nonincreasing);
    r.convex = a.convex.value_or(s.convex);
    r.nonconstantForms = a.nonconstant.value_or(s.nonconstant);
    return r;
}

std::string_view toString(Verdict v) {
    switch (v) {
        case Verdict::True: return "true";
        case Verdict::False: return "false";
        case Verdict::Undetermined: return "undetermined";
    }
    return "";
}

std::string_view toString(Method m) { return m == Method::Analytic ? "analytic" : "sampled"; }

std::string_view toString(ShapeProperty p) {
    switch (p) {
        case ShapeProperty::Nonnegative: return "nonnegative";
        case ShapeProperty::Nonincreasing: return "nonincreasing";
        case ShapeProperty::Convex: return "convex";
        case ShapeProperty::NonconstantForms: return "nonconstant_forms";
    }
    return "";
}

}  // namespace mti
