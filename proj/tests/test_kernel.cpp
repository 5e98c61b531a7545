#include "mti/kernel.hpp"
#include "mti/scalar_function.hpp"
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

family::Coeffs2x2 coeffs(double a11, double a12, double a21, double a22, double b11, double b12, double b21,
                         double b22) {
    return {a11, a12, a21, a22, b11, b12, b21, b22};
}

std::vector<DecayKernel> zoo() {
    std::vector<DecayKernel> ks;
    ks.push_back(makePermanent(m2(2, 1, 0.5, 1)));
    ks.push_back(makeMatrixExp(m2(1, 0.3, 0.3, 2)));
    ks.push_back(makeMatrixFunctionKernel(m2(1, 0.4, 0.4, 1), ScalarFunction::gaussianSq()));
    ks.push_back(makeExp2x2(coeffs(1, 2, 0, 1, 1, 1, 1, 1)));
    ks.push_back(makeExp2x2(coeffs(1, 0.3, 0.7, 2, 1, 2, 3, 1.5)));
    ks.push_back(makeCrossExp(1, 1.8, 0.3));
    ks.push_back(makeLinear2x2(coeffs(1, 0.5, 0.2, 1, 1, 1, 0.5, 2)));
    ks.push_back(makeClampedExp());
    ks.push_back(makeJordanExp(0.4));
    ks.push_back(leftMultiply(m2(1, 2, 0, 1), makeCrossExp(1, 2, 0.5)));
    ks.push_back(congruence(m2(1, 2, 0, 1), makeMatrixExp(m2(1, 0, 0, 3))));
    ks.push_back(plusTemporary(m2(1, 0.5, 0, 1), makeJordanExp(0.7)));
    ks.push_back(scalarTimesMatrix(ScalarFunction::linearPolya(1, 0.5), m2(2, 1, 1, 2)));
    return ks;
}

}  // namespace

TEST(KernelEval, CrossExpAtZero) {
    EXPECT_LT(oracle::maxAbs(makeCrossExp(1, 1.8, 0.3).eval(0) - m2(1, 0.3, 0.3, 1)), 1e-15);
}

TEST(KernelEval, DiagonalMatrixExpAtLn2) {
    Matrix b = m2(1, 0, 0, 2);
    EXPECT_LT(oracle::maxAbs(makeMatrixExp(b).eval(std::log(2.0)) - m2(0.5, 0, 0, 0.25)), 1e-14);
}

TEST(KernelEval, PermanentIsConstant) {
    Matrix g0 = m2(1, 2, 3, 4);
    DecayKernel k = makePermanent(g0);
    for (double t : {0.0, 0.1, 7.0, 1e6}) EXPECT_EQ(k.eval(t), g0);
}

TEST(KernelEval, NegativeLagRejected) {
    EXPECT_THROW(makeCrossExp(1, 1.8, 0.3).eval(-0.5), DomainError);
    EXPECT_THROW(makeCrossExp(1, 1.8, 0.3).eval(std::nan("")), DomainError);
}

TEST(KernelEvalTilde, SymmetricKernelIsEven) {
    DecayKernel k = makeCrossExp(1, 1.8, 0.3);
    for (double t : {0.1, 0.5, 3.0}) EXPECT_LT(oracle::maxAbs(k.evalTilde(-t) - k.evalTilde(t)), 1e-15);
}

TEST(KernelEvalTilde, SymmetrizesAtZeroAndTransposesForNegative) {
    DecayKernel k = makeExp2x2(coeffs(1, 2, 0, 1, 1, 1, 1, 1));
    EXPECT_LT(oracle::maxAbs(k.evalTilde(0) - m2(1, 1, 1, 1)), 1e-15);
    EXPECT_EQ(k.evalTilde(-1), k.eval(1).transpose());
}

TEST(KernelEvalTilde, ReflectionHoldsExactly) {
    oracle::Random r(11);
    for (const DecayKernel& k : zoo()) {
        for (int i = 0; i < 20; ++i) {
            const double t = r.uniform(0, 10);
            EXPECT_EQ(k.evalTilde(-t), k.evalTilde(t).transpose()) << k.tag() << " t=" << t;
        }
        EXPECT_EQ(k.evalTilde(0), k.evalTilde(0).transpose()) << k.tag();
    }
}

TEST(KernelEvalTilde, SymmetricKernelsMatchEvalOfAbsoluteLag) {
    oracle::Random r(12);
    std::vector<DecayKernel> sym{makeMatrixExp(r.spd(3)), makeCrossExp(1, 1.8, 0.3),
                                 makeMatrixFunctionKernel(r.spd(2), ScalarFunction::powerCapped(1.5, 4)),
                                 plusTemporary(m2(1, 0.2, 0.2, 1), makeCrossExp(2, 1, 0.4))};
    for (const DecayKernel& k : sym) {
        for (int i = 0; i < 20; ++i) {
            const double t = r.uniform(0.01, 10);
            EXPECT_EQ(k.evalTilde(t), k.eval(t));
            EXPECT_LT(oracle::maxAbs(k.evalTilde(-t) - k.eval(t)), 1e-15);
        }
    }
    EXPECT_LT(oracle::maxAbs(sym[0].evalTilde(0) - sym[0].eval(0)), 1e-15);
}

TEST(MatrixFunction, ExpDecayAgreesWithMatrixExp) {
    oracle::Random r(1);
    Matrix b = r.spd(3);
    DecayKernel f = makeMatrixFunctionKernel(b, ScalarFunction::expDecay(1));
    DecayKernel e = makeMatrixExp(b);
    for (double t : {0.0, 0.5, 1.0, 2.0}) EXPECT_LT(oracle::maxAbs(f.eval(t) - e.eval(t)), 1e-12);
}

TEST(MatrixFunction, ZeroMatrixGivesScaledIdentity) {
    ScalarFunction fn = ScalarFunction::linearPolya(2, 1);
    DecayKernel k = makeMatrixFunctionKernel(Matrix::Zero(3, 3), fn);
    for (double t : {0.0, 1.0, 5.0}) EXPECT_LT(oracle::maxAbs(k.eval(t) - 2.0 * Matrix::Identity(3, 3)), 1e-15);
}

TEST(MatrixFunction, GaussianMatchesPowerSeries) {
    for (double rho : {0.1, 0.5, 0.9}) {
        Matrix b = m2(1, rho, rho, 1);
        DecayKernel k = makeMatrixFunctionKernel(b, ScalarFunction::gaussianSq());
        for (double t : {0.0, 0.3, 0.7, 1.2, 2.0}) {
            Matrix tb = t * b;
            EXPECT_LT(oracle::maxAbs(k.eval(t) - oracle::seriesExp(-tb * tb)), 1e-10) << rho << " " << t;
        }
    }
}

TEST(MatrixFunction, ConsistentWithMatrixExpOnRandomInputs) {
    oracle::Random r(2);
    for (int draw = 0; draw < 100; ++draw) {
        const Index k = r.integer(1, 4);
        Matrix b = r.spd(k, 0.0, 4.0);
        DecayKernel f = makeMatrixFunctionKernel(b, ScalarFunction::expDecay(1));
        DecayKernel e = makeMatrixExp(b);
        for (int i = 0; i < 50; ++i) {
            const double t = r.uniform(0, 5);
            ASSERT_LT(oracle::maxAbs(f.eval(t) - e.eval(t)), 1e-12) << "draw " << draw;
        }
    }
}

TEST(MatrixFunction, MatrixExpAgreesWithSeries) {
    oracle::Random r(3);
    Matrix b = r.spd(3);
    DecayKernel e = makeMatrixExp(b);
    for (double t : {0.0, 0.4, 1.7}) EXPECT_LT(oracle::maxAbs(e.eval(t) - oracle::seriesExp(-t * b)), 1e-12);
}

TEST(MatrixFunction, RejectsAsymmetricAndIndefinite) {
    EXPECT_THROW(makeMatrixFunctionKernel(m2(1, 0.5, 0, 1), ScalarFunction::gaussianSq()), DomainError);
    EXPECT_THROW(makeMatrixExp(m2(1, 0.5, 0, 1)), DomainError);
    try {
        makeMatrixFunctionKernel(m2(1, 0, 0, -0.25), ScalarFunction::gaussianSq());
        FAIL() << "indefinite B accepted";
    } catch (const DomainError& e) {
        EXPECT_NE(std::string(e.what()).find("-0.25"), std::string::npos) << e.what();
    }
}

TEST(Transform, IdentityCongruenceIsTransparent) {
    DecayKernel inner = makeExp2x2(coeffs(1, 0.3, 0.7, 2, 1, 2, 3, 1.5));
    DecayKernel k = congruence(Matrix::Identity(2, 2), inner);
    for (double t : {0.0, 0.2, 1.0, 4.0}) EXPECT_LT(oracle::maxAbs(k.eval(t) - inner.eval(t)), 1e-15);
}

TEST(Transform, ScalarTimesIdentityIsMatrixExp) {
    DecayKernel a = scalarTimesMatrix(ScalarFunction::expDecay(1), Matrix::Identity(2, 2));
    DecayKernel b = makeMatrixExp(Matrix::Identity(2, 2));
    for (double t : {0.0, 0.2, 1.0, 4.0}) EXPECT_LT(oracle::maxAbs(a.eval(t) - b.eval(t)), 1e-14);
}

TEST(Transform, PlusTemporaryOnlyAtLagZero) {
    DecayKernel inner = makeCrossExp(1, 1.8, 0.3);
    Matrix h0 = m2(0.5, 0.1, 0.1, 0.2);
    DecayKernel k = plusTemporary(h0, inner);
    EXPECT_LT(oracle::maxAbs(k.evalTilde(0) - inner.evalTilde(0) - h0), 1e-15);
    EXPECT_EQ(k.evalTilde(0.1), inner.evalTilde(0.1));
    EXPECT_EQ(k.evalTilde(-0.1), inner.evalTilde(-0.1));
}

TEST(Transform, LeftMultiplyAndCongruenceFormulas) {
    DecayKernel inner = makeCrossExp(1, 2, 0.5);
    Matrix l = m2(1, 2, -1, 3);
    DecayKernel lm = transformKernel(TransformMode::LeftMultiply, {l}, inner);
    DecayKernel cg = transformKernel(TransformMode::Congruence, {l}, inner);
    for (double t : {0.0, 0.7}) {
        EXPECT_LT(oracle::maxAbs(lm.eval(t) - l * inner.eval(t)), 1e-14);
        EXPECT_LT(oracle::maxAbs(cg.eval(t) - l.transpose() * inner.eval(t) * l), 1e-14);
    }
}

TEST(Transform, ScalarTimesMatrixIgnoresInner) {
    Matrix l = m2(2, 1, 0, 1);
    DecayKernel k = transformKernel(TransformMode::ScalarTimesMatrix, {l, ScalarFunction::expDecay(2)},
                                    makeClampedExp());
    EXPECT_LT(oracle::maxAbs(k.eval(0.5) - std::exp(-1.0) * l), 1e-15);
}

TEST(Transform, RejectsSingularCongruenceAndNegativeTemporary) {
    DecayKernel inner = makeCrossExp(1, 1.8, 0.3);
    EXPECT_THROW(congruence(m2(1, 2, 2, 4), inner), DomainError);
    EXPECT_THROW(congruence(m2(1, 0, 0, 1e-14), inner), DomainError);
    EXPECT_THROW(plusTemporary(m2(1, 0, 0, -0.1), inner), DomainError);
    EXPECT_THROW(leftMultiply(Matrix::Identity(3, 3), inner), DomainError);
}

TEST(Structure, CrossExpIsSymmetricAndCommuting) {
    DecayKernel k = makeCrossExp(1, 1.8, 0.3);
    StructureReport s = checkStructure(k, defaultStructureTimes(k));
    EXPECT_TRUE(s.symmetric);
    EXPECT_TRUE(s.commuting);
    EXPECT_TRUE(s.commutingAnalytic);
    EXPECT_TRUE(s.sampledSymmetric);
    EXPECT_TRUE(s.sampledCommuting);
}

TEST(Structure, Exp2x2CommutingCase) {
    DecayKernel k = makeExp2x2(coeffs(1, 0.3, 0.6, 1, 2, 0.5, 0.5, 2));
    StructureReport s = checkStructure(k, defaultStructureTimes(k));
    EXPECT_TRUE(s.commuting);
    EXPECT_TRUE(s.sampledCommuting);
}

TEST(Structure, Exp2x2OffDiagonalMismatchIsNotSymmetric) {
    DecayKernel k = makeExp2x2(coeffs(1, 0.3, 0.6, 1, 1, 1, 1, 1));
    StructureReport s = checkStructure(k, defaultStructureTimes(k));
    EXPECT_FALSE(s.symmetric);
    EXPECT_FALSE(s.sampledSymmetric);
}

TEST(Structure, AnalyticAnswersAgreeWithSampling) {
    oracle::Random r(5);
    for (int i = 0; i < 200; ++i) {
        const bool tie = r.uniform(0, 1) < 0.5;
        const double a11 = r.uniform(0.1, 2), b11 = r.uniform(0.1, 2), b12 = r.uniform(0.1, 2);
        const double a12 = r.uniform(0.1, 2);
        family::Coeffs2x2 c = tie ? coeffs(a11, a12, r.uniform(0.1, 2), a11, b11, b12, b12, b11)
                                  : coeffs(a11, a12, a12, r.uniform(0.1, 2), b11, b12, r.uniform(0.1, 2),
                                           r.uniform(0.1, 2));
        DecayKernel k = makeExp2x2(c);
        StructureReport s = checkStructure(k, defaultStructureTimes(k));
        EXPECT_EQ(s.symmetric, s.sampledSymmetric) << i;
        EXPECT_EQ(s.commuting, s.sampledCommuting) << i;
    }
    for (int i = 0; i < 50; ++i) {
        DecayKernel k = makeMatrixFunctionKernel(r.spd(3, 0, 2), ScalarFunction::gaussianSq());
        StructureReport s = checkStructure(k, defaultStructureTimes(k));
        EXPECT_TRUE(s.symmetric && s.commuting && s.sampledSymmetric && s.sampledCommuting) << i;
    }
}

TEST(ScalarFunctions, ValuesAndDomain) {
    EXPECT_DOUBLE_EQ(ScalarFunction::expDecay(2)(1), std::exp(-2.0));
    EXPECT_DOUBLE_EQ(ScalarFunction::gaussianSq()(1.5), std::exp(-2.25));
    EXPECT_DOUBLE_EQ(ScalarFunction::linearPolya(1, 0.5)(1), 0.5);
    EXPECT_DOUBLE_EQ(ScalarFunction::linearPolya(1, 0.5)(3), 0.0);
    EXPECT_DOUBLE_EQ(ScalarFunction::constant(3)(100), 3.0);
    EXPECT_DOUBLE_EQ(ScalarFunction::powerCapped(2, 1)(5), 0.25);
    EXPECT_THROW(ScalarFunction::expDecay(0), DomainError);
    EXPECT_THROW(ScalarFunction::linearPolya(1, -1), DomainError);
    EXPECT_THROW(ScalarFunction::constant(-1), DomainError);
    oracle::Random r(6);
    for (const ScalarFunction& f : {ScalarFunction::expDecay(3), ScalarFunction::gaussianSq(),
                                    ScalarFunction::linearPolya(2, 3), ScalarFunction::powerCapped(0.5, 2)})
        for (int i = 0; i < 100; ++i) {
            const double v = f(r.uniform(0, 50));
            EXPECT_TRUE(std::isfinite(v) && v >= 0);
        }
}
