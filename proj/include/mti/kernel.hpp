#pragma once

#include "mti/core.hpp"
#include "mti/scalar_function.hpp"

#include <memory>
#include <optional>
#include <string_view>
#include <variant>
#include <vector>

namespace mti {

struct KernelFamily;

// Immutable handle to a matrix-valued decay kernel t -> G(t) in R^{K x K}. Cheap to copy.
class DecayKernel {
public:
    // Validates parameters and precomputes spectral data; throws DomainError.
    explicit DecayKernel(KernelFamily family);

    Index dimension() const;
    const KernelFamily& family() const;
    std::string_view tag() const;

    // G(t) for t >= 0.
    Matrix eval(double t) const;
    // Two-sided extension: G(t), sym(G(0)), or G(-t)^T.
    Matrix evalTilde(double t) const;

private:
    struct Impl;
    std::shared_ptr<const Impl> impl_;
};

namespace family {

struct Coeffs2x2 {
    double a11, a12, a21, a22;
    double b11, b12, b21, b22;
};

struct Permanent {
    Matrix g0;
};
struct MatrixExp {
    Matrix b;
};
// G(t) = O^T diag(fn(t rho_i)) O with B = O^T diag(rho) O; basis/spectrum are filled on construction.
struct MatrixFunction {
    Matrix b;
    ScalarFunction fn;
    Matrix basis = {};     // rows are eigenvectors of B
    Vector spectrum = {};  // clamped eigenvalues of B
};
// G(t) = O^T diag(g_i(t)) O.
struct DiagCongruence {
    Matrix o;
    std::vector<ScalarFunction> decays;
};
struct Exp2x2 {
    Coeffs2x2 c;
};
struct CrossExp {
    double kappa, kappaTilde, rho;
};
struct Linear2x2 {
    Coeffs2x2 c;
};
struct ClampedExp {};
struct JordanExp {
    double b;
};
// g(t) L; the inner kernel only carries the dimension and may be absent.
struct ScalarTimesMatrix {
    ScalarFunction g;
    Matrix l;
    std::optional<DecayKernel> inner = {};
};
struct LeftMultiply {
    Matrix l;
    DecayKernel inner;
};
struct Congruence {
    Matrix l;
    DecayKernel inner;
    double conditionNumber = 0.0;
};
struct PlusTemporary {
    Matrix h0;
    DecayKernel inner;
};

}  // namespace family

struct KernelFamily
    : std::variant<family::Permanent, family::MatrixExp, family::MatrixFunction, family::DiagCongruence,
                   family::Exp2x2, family::CrossExp, family::Linear2x2, family::ClampedExp, family::JordanExp,
                   family::ScalarTimesMatrix, family::LeftMultiply, family::Congruence, family::PlusTemporary> {
    using variant::variant;
};

DecayKernel makePermanent(const Matrix& g0);
DecayKernel makeMatrixExp(const Matrix& b);
DecayKernel makeMatrixFunctionKernel(const Matrix& b, const ScalarFunction& fn);
DecayKernel makeDiagCongruence(const Matrix& o, std::vector<ScalarFunction> decays);
DecayKernel makeExp2x2(const family::Coeffs2x2& c);
DecayKernel makeCrossExp(double kappa, double kappaTilde, double rho);
DecayKernel makeLinear2x2(const family::Coeffs2x2& c);
DecayKernel makeClampedExp();
DecayKernel makeJordanExp(double b);

enum class TransformMode { ScalarTimesMatrix, LeftMultiply, Congruence, PlusTemporary };
struct TransformArgs {
    Matrix matrix;                        // L or H0
    std::optional<ScalarFunction> g = {};  // scalar_times_matrix only
};
DecayKernel transformKernel(TransformMode mode, const TransformArgs& args, const DecayKernel& inner);

DecayKernel scalarTimesMatrix(const ScalarFunction& g, const Matrix& l);
DecayKernel leftMultiply(const Matrix& l, const DecayKernel& inner);
DecayKernel congruence(const Matrix& l, const DecayKernel& inner);
DecayKernel plusTemporary(const Matrix& h0, const DecayKernel& inner);

template <class T>
const T* familyAs(const DecayKernel& k) {
    return std::get_if<T>(&static_cast<const KernelFamily::variant&>(k.family()));
}

struct StructureReport {
    bool symmetric = false;
    bool commuting = false;
    bool symmetricAnalytic = false;
    bool commutingAnalytic = false;
    bool sampledSymmetric = false;
    bool sampledCommuting = false;
};

// Sampled symmetry/commutation checks, replaced by the analytic answer where the family has one.
StructureReport checkStructure(const DecayKernel& kernel, const std::vector<double>& sampleTimes);
std::vector<double> defaultStructureTimes(const DecayKernel& kernel);

}  // namespace mti
