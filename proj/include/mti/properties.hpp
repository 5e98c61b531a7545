#pragma once

#include "mti/kernel.hpp"

#include <cstdint>
#include <optional>
#include <string>

namespace mti {

enum class Verdict { True, False, Undetermined };
enum class Method { Analytic, Sampled };
enum class ShapeProperty { Nonnegative, Nonincreasing, Convex, NonconstantForms };

// Where a quadratic-form shape property fails. For nonnegative the form is read at t; for
// nonincreasing at t, t+step; for convex at t, t+step, t+2 step; for nonconstant_forms over
// t + i*step, i < samples.
struct ShapeWitness {
    double t = 0.0;
    double step = 0.0;
    Index samples = 0;
    Vector direction;
};

struct PropertyVerdict {
    Verdict verdict = Verdict::Undetermined;
    Method method = Method::Sampled;
    std::optional<ShapeWitness> witness;
    std::string note;

    bool isTrue() const { return verdict == Verdict::True; }
    bool isFalse() const { return verdict == Verdict::False; }
};

struct PropertyReport {
    bool symmetric = false;
    bool commuting = false;
    PropertyVerdict nonnegative;
    PropertyVerdict nonincreasing;
    PropertyVerdict convex;
    PropertyVerdict nonconstantForms;

    const PropertyVerdict& get(ShapeProperty p) const;
};

struct ShapeOptions {
    double tMax = 20.0;
    Index nSamples = 400;
    Index nDirections = 16;
    std::uint64_t seed = 0;
    bool forceSampled = false;  // skip analytic shortcuts
};

PropertyReport checkShapeProperties(const DecayKernel& kernel, double tMax, Index nSamples, Index nDirections,
                                    std::uint64_t seed);
PropertyReport checkShapeProperties(const DecayKernel& kernel, const ShapeOptions& options = {});

// Signed margin of the property at the witness; negative means violated (for nonconstant_forms
// it is the range of the form, and small means violated).
double witnessMargin(const DecayKernel& kernel, ShapeProperty property, const ShapeWitness& witness);
bool witnessIsViolation(const DecayKernel& kernel, ShapeProperty property, const ShapeWitness& witness);

std::string_view toString(Verdict v);
std::string_view toString(Method m);
std::string_view toString(ShapeProperty p);

}  // namespace mti
