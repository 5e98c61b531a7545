#include "mti/kernel.hpp"

#include <Eigen/SVD>

#include <algorithm>
#include <cmath>
#include <sstream>

namespace mti {

struct DecayKernel::Impl {
    Index dim;
    KernelFamily family;
};

namespace {

template <class... Fs>
struct Overloaded : Fs... {
    using Fs::operator()...;
};
template <class... Fs>
Overloaded(Fs...) -> Overloaded<Fs...>;

const KernelFamily::variant& asVariant(const KernelFamily& f) { return f; }

void requireSquare(const Matrix& m, Index k, const char* name) {
    if (m.rows() != k || m.cols() != k) {
        std::ostringstream os;
        os << name << " must be " << k << "x" << k << ", got " << m.rows() << "x" << m.cols();
        throw DomainError(os.str());
    }
    if (!m.allFinite()) throw DomainError(std::string(name) + " has non-finite entries");
}

void requirePositive(double v, const char* name) {
    if (!std::isfinite(v) || !(v > 0)) throw DomainError(std::string(name) + " must be a positive real");
}

// Symmetric PSD check shared by matrix_exp and matrix_function.
Matrix requireSymmetricPsd(const Matrix& b, const char* family) {
    if (b.rows() != b.cols() || b.rows() == 0) throw DomainError(std::string(family) + ": B must be square");
    if (!b.allFinite()) throw DomainError(std::string(family) + ": B has non-finite entries");
    const double scale = std::max(1.0, infNorm(b));
    const double asym = infNorm(b - b.transpose());
    if (asym > 1e-10 * scale) {
        std::ostringstream os;
        os << family << ": B is not symmetric (residual " << asym << ")";
        throw DomainError(os.str());
    }
    Matrix s = symmetricPart(b);
    const double lmin = minEigenvalue(s);
    if (lmin < -1e-10 * scale) {
        std::ostringstream os;
        os.precision(17);
        os << family << ": B is indefinite (eigenvalue " << lmin << ")";
        throw DomainError(os.str());
    }
    return s;
}

Index validate(KernelFamily& fam) {
    return std::visit(
        Overloaded{
            [](family::Permanent& p) -> Index {
                if (p.g0.rows() == 0) throw DomainError("permanent: G0 must be nonempty");
                requireSquare(p.g0, p.g0.rows(), "permanent: G0");
                return p.g0.rows();
            },
            [](family::MatrixExp& p) -> Index {
                p.b = requireSymmetricPsd(p.b, "matrix_exp");
                return p.b.rows();
            },
            [](family::MatrixFunction& p) -> Index {
                p.b = requireSymmetricPsd(p.b, "matrix_function");
                SymmetricEigen e = symmetricEigen(p.b);
                p.basis = e.vectors.transpose();
                p.spectrum = e.values;
                for (Index i = 0; i < p.spectrum.size(); ++i)
                    if (p.spectrum(i) < 1e-12) p.spectrum(i) = 0.0;
                return p.b.rows();
            },
            [](family::DiagCongruence& p) -> Index {
                const Index k = p.o.rows();
                if (k == 0) throw DomainError("diag_congruence: O must be nonempty");
                requireSquare(p.o, k, "diag_congruence: O");
                if (infNorm(p.o * p.o.transpose() - Matrix::Identity(k, k)) > 1e-10)
                    throw DomainError("diag_congruence: O is not orthogonal");
                if (static_cast<Index>(p.decays.size()) != k)
                    throw DomainError("diag_congruence: need one decay per dimension");
                return k;
            },
            [](family::Exp2x2& p) -> Index {
                const auto& c = p.c;
                requirePositive(c.a11, "exp2x2: a11");
                requirePositive(c.a22, "exp2x2: a22");
                if (!std::isfinite(c.a12) || c.a12 < 0 || !std::isfinite(c.a21) || c.a21 < 0)
                    throw DomainError("exp2x2: off-diagonal amplitudes must be >= 0");
                requirePositive(c.b11, "exp2x2: b11");
                requirePositive(c.b12, "exp2x2: b12");
                requirePositive(c.b21, "exp2x2: b21");
                requirePositive(c.b22, "exp2x2: b22");
                return 2;
            },
            [](family::CrossExp& p) -> Index {
                requirePositive(p.kappa, "cross_exp: kappa");
                requirePositive(p.kappaTilde, "cross_exp: kappa_tilde");
                requirePositive(p.rho, "cross_exp: rho");
                return 2;
            },
            [](family::Linear2x2& p) -> Index {
                const auto& c = p.c;
                for (double v : {c.a11, c.a12, c.a21, c.a22, c.b11, c.b12, c.b21, c.b22})
                    requirePositive(v, "linear2x2: coefficient");
                return 2;
            },
            [](family::ClampedExp&) -> Index { return 2; },
            [](family::JordanExp& p) -> Index {
                requirePositive(p.b, "jordan_exp: b");
                return 2;
            },
            [](family::ScalarTimesMatrix& p) -> Index {
                const Index k = p.l.rows();
                if (k == 0) throw DomainError("scalar_times_matrix: L must be nonempty");
                requireSquare(p.l, k, "scalar_times_matrix: L");
                if (p.inner && p.inner->dimension() != k)
                    throw DomainError("scalar_times_matrix: L does not match inner dimension");
                return k;
            },
            [](family::LeftMultiply& p) -> Index {
                requireSquare(p.l, p.inner.dimension(), "left_multiply: L");
                return p.inner.dimension();
            },
            [](family::Congruence& p) -> Index {
                const Index k = p.inner.dimension();
                requireSquare(p.l, k, "congruence: L");
                Eigen::JacobiSVD<Matrix> svd(p.l);
                const Vector& s = svd.singularValues();
                const double smin = s(s.size() - 1);
                p.conditionNumber = smin > 0 ? s(0) / smin : std::numeric_limits<double>::infinity();
                if (!(p.conditionNumber <= 1e12)) {
                    std::ostringstream os;
                    os << "congruence: L is singular or ill-conditioned (condition number " << p.conditionNumber
                       << ")";
                    throw DomainError(os.str());
                }
                return k;
            },
            [](family::PlusTemporary& p) -> Index {
                const Index k = p.inner.dimension();
                requireSquare(p.h0, k, "plus_temporary: H0");
                const double lmin = minEigenvalue(symmetricPart(p.h0));
                if (lmin < -1e-10) {
                    std::ostringstream os;
                    os << "plus_temporary: H0 is not nonnegative (eigenvalue " << lmin << ")";
                    throw DomainError(os.str());
                }
                return k;
            },
        },
        static_cast<KernelFamily::variant&>(fam));
}

Matrix evalFamily(const KernelFamily& fam, double t) {
    return std::visit(
        Overloaded{
            [](const family::Permanent& p) -> Matrix { return p.g0; },
            [t](const family::MatrixExp& p) -> Matrix { return expNegTimes(p.b, t); },
            [t](const family::MatrixFunction& p) -> Matrix {
                Vector d(p.spectrum.size());
                for (Index i = 0; i < d.size(); ++i) d(i) = p.fn(t * p.spectrum(i));
                return p.basis.transpose() * d.asDiagonal() * p.basis;
            },
            [t](const family::DiagCongruence& p) -> Matrix {
                Vector d(static_cast<Index>(p.decays.size()));
                for (Index i = 0; i < d.size(); ++i) d(i) = p.decays[static_cast<size_t>(i)](t);
                return p.o.transpose() * d.asDiagonal() * p.o;
            },
            [t](const family::Exp2x2& p) -> Matrix {
                const auto& c = p.c;
                Matrix g(2, 2);
                g << c.a11 * std::exp(-c.b11 * t), c.a12 * std::exp(-c.b12 * t), c.a21 * std::exp(-c.b21 * t),
                    c.a22 * std::exp(-c.b22 * t);
                return g;
            },
            [t](const family::CrossExp& p) -> Matrix {
                const double d = std::exp(-p.kappa * t);
                const double o = p.rho * std::exp(-p.kappaTilde * t);
                Matrix g(2, 2);
                g << d, o, o, d;
                return g;
            },
            [t](const family::Linear2x2& p) -> Matrix {
                const auto& c = p.c;
                auto f = [t](double a, double b) { return std::max(a - b * t, 0.0); };
                Matrix g(2, 2);
                g << f(c.a11, c.b11), f(c.a12, c.b12), f(c.a21, c.b21), f(c.a22, c.b22);
                return g;
            },
            [t](const family::ClampedExp&) -> Matrix {
                const double s = std::min(t, 1.0);
                Matrix g(2, 2);
                g << std::exp(-s), std::exp(-2 * s) / 8.0, std::exp(-3 * s) / 8.0, std::exp(-s);
                return g;
            },
            [t](const family::JordanExp& p) -> Matrix {
                const double e = std::exp(-t * p.b);
                Matrix g(2, 2);
                g << e, -t * e, 0.0, e;
                return g;
            },
            [t](const family::ScalarTimesMatrix& p) -> Matrix { return p.g(t) * p.l; },
            [t](const family::LeftMultiply& p) -> Matrix { return p.l * p.inner.eval(t); },
            [t](const family::Congruence& p) -> Matrix { return p.l.transpose() * p.inner.eval(t) * p.l; },
            [t](const family::PlusTemporary& p) -> Matrix {
                Matrix g = p.inner.eval(t);
                if (t == 0.0) g += p.h0;
                return g;
            },
        },
        asVariant(fam));
}

bool approxEqual(double x, double y) { return std::abs(x - y) <= 1e-12 * std::max(std::abs(x), std::abs(y)); }

}  // namespace

DecayKernel::DecayKernel(KernelFamily fam) {
    const Index dim = validate(fam);
    impl_ = std::make_shared<const Impl>(Impl{dim, std::move(fam)});
}

Index DecayKernel::dimension() const { return impl_->dim; }
const KernelFamily& DecayKernel::family() const { return impl_->family; }

std::string_view DecayKernel::tag() const {
    static constexpr std::string_view names[] = {"permanent",     "matrix_exp",  "matrix_function",
                                                 "diag_congruence", "exp2x2",    "cross_exp",
                                                 "linear2x2",     "clamped_exp", "jordan_exp",
                                                 "scalar_times_matrix", "left_multiply", "congruence",
                                                 "plus_temporary"};
    return names[impl_->family.index()];
}

Matrix DecayKernel::eval(double t) const {
    if (!(t >= 0)) {
        std::ostringstream os;
        os << "kernel evaluated at invalid lag " << t << " (must be >= 0)";
        throw DomainError(os.str());
    }
    return evalFamily(impl_->family, t);
}

Matrix DecayKernel::evalTilde(double t) const {
    if (t > 0) return eval(t);
    if (t == 0) return symmetricPart(eval(0.0));
    if (t < 0) return eval(-t).transpose();
    throw DomainError("kernel evaluated at NaN lag");
}

DecayKernel makePermanent(const Matrix& g0) { return DecayKernel(family::Permanent{g0}); }
DecayKernel makeMatrixExp(const Matrix& b) { return DecayKernel(family::MatrixExp{b}); }
DecayKernel makeMatrixFunctionKernel(const Matrix& b, const ScalarFunction& fn) {
    return DecayKernel(family::MatrixFunction{b, fn});
}
DecayKernel makeDiagCongruence(const Matrix& o, std::vector<ScalarFunction> decays) {
    return DecayKernel(family::DiagCongruence{o, std::move(decays)});
}
DecayKernel makeExp2x2(const family::Coeffs2x2& c) { return DecayKernel(family::Exp2x2{c}); }
DecayKernel makeCrossExp(double kappa, double kappaTilde, double rho) {
    return DecayKernel(family::CrossExp{kappa, kappaTilde, rho});
}
DecayKernel makeLinear2x2(const family::Coeffs2x2& c) { return DecayKernel(family::Linear2x2{c}); }
DecayKernel makeClampedExp() { return DecayKernel(family::ClampedExp{}); }
DecayKernel makeJordanExp(double b) { return DecayKernel(family::JordanExp{b}); }

DecayKernel transformKernel(TransformMode mode, const TransformArgs& args, const DecayKernel& inner) {
    switch (mode) {
        case TransformMode::ScalarTimesMatrix:
            if (!args.g) throw DomainError("scalar_times_matrix needs a scalar function");
            return DecayKernel(family::ScalarTimesMatrix{*args.g, args.matrix, inner});
        case TransformMode::LeftMultiply: return leftMultiply(args.matrix, inner);
        case TransformMode::Congruence: return congruence(args.matrix, inner);
        case TransformMode::PlusTemporary: return plusTemporary(args.matrix, inner);
    }
    throw DomainError("unknown transform mode");
}

DecayKernel scalarTimesMatrix(const ScalarFunction& g, const Matrix& l) {
    return DecayKernel(family::ScalarTimesMatrix{g, l, std::nullopt});
}
DecayKernel leftMultiply(const Matrix& l, const DecayKernel& inner) {
    return DecayKernel(family::LeftMultiply{l, inner});
}
DecayKernel congruence(const Matrix& l, const DecayKernel& inner) {
    return DecayKernel(family::Congruence{l, inner});
}
DecayKernel plusTemporary(const Matrix& h0, const DecayKernel& inner) {
    return DecayKernel(family::PlusTemporary{h0, inner});
}

std::vector<double> defaultStructureTimes(const DecayKernel&) {
    return {0.0, 0.05, 0.1, 0.25, 0.5, 0.75, 1.0, 1.5, 2.0, 3.0, 5.0, 8.0, 13.0, 20.0};
}

StructureReport checkStructure(const DecayKernel& kernel, const std::vector<double>& sampleTimes) {
    if (sampleTimes.empty()) throw DomainError("checkStructure needs at least one sample time");
    std::vector<Matrix> g;
    g.reserve(sampleTimes.size());
    for (double t : sampleTimes) g.push_back(kernel.eval(t));

    StructureReport r;
    r.sampledSymmetric = true;
    for (const Matrix& m : g)
        if (infNorm(m - m.transpose()) > 1e-10 * (1 + infNorm(m))) r.sampledSymmetric = false;
    r.sampledCommuting = true;
    for (size_t i = 0; i < g.size() && r.sampledCommuting; ++i)
        for (size_t j = i + 1; j < g.size(); ++j)
            if (infNorm(g[i] * g[j] - g[j] * g[i]) > 1e-10 * (1 + infNorm(g[i]) * infNorm(g[j]))) {
                r.sampledCommuting = false;
                break;
            }
    r.symmetric = r.sampledSymmetric;
    r.commuting = r.sampledCommuting;

    auto setSym = [&r](bool v) {
        r.symmetric = v;
        r.symmetricAnalytic = true;
    };
    auto setComm = [&r](bool v) {
        r.commuting = v;
        r.commutingAnalytic = true;
    };
    std::visit(Overloaded{
                   [&](const family::Permanent&) { setComm(true); },
                   [&](const family::MatrixExp&) { setSym(true), setComm(true); },
                   [&](const family::MatrixFunction&) { setSym(true), setComm(true); },
                   [&](const family::DiagCongruence&) { setSym(true), setComm(true); },
                   [&](const family::CrossExp&) { setSym(true), setComm(true); },
                   [&](const family::Exp2x2& p) {
                       const auto& c = p.c;
                       const bool offZero = c.a12 == 0 && c.a21 == 0;
                       setSym(offZero || (approxEqual(c.a12, c.a21) && approxEqual(c.b12, c.b21)));
                       if (offZero) {
                           setComm(true);
                       } else if (c.a12 > 0 && c.a21 > 0) {
                           const bool allEqual = approxEqual(c.b11, c.b12) && approxEqual(c.b11, c.b21) &&
                                                 approxEqual(c.b11, c.b22);
                           setComm(allEqual || (approxEqual(c.b11, c.b22) && approxEqual(c.b12, c.b21) &&
                                                approxEqual(c.a11, c.a22)));
                       }
                   },
                   [&](const family::Linear2x2& p) {
                       setSym(approxEqual(p.c.a12, p.c.a21) && approxEqual(p.c.b12, p.c.b21));
                   },
                   [&](const family::ClampedExp&) { setSym(false); },
                   [&](const family::JordanExp&) { setSym(false), setComm(true); },
                   [&](const family::ScalarTimesMatrix&) { setComm(true); },
                   [&](const auto&) {},
               },
               asVariant(kernel.family()));
    return r;
}

}  // namespace mti
