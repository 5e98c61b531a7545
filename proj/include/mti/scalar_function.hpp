#pragma once

#include <string>
#include <string_view>

namespace mti {

// Scalar decay g : [0, inf) -> [0, inf). All tags are nonnegative and nonincreasing.
class ScalarFunction {
public:
    enum class Tag { ExpDecay, GaussianSq, LinearPolya, Constant, PowerCapped };

    static ScalarFunction expDecay(double rate);                      // e^{-rate x}
    static ScalarFunction gaussianSq();                               // e^{-x^2}
    static ScalarFunction linearPolya(double lambda, double slope);   // (lambda - slope x)^+
    static ScalarFunction constant(double c);                         // c
    static ScalarFunction powerCapped(double exponent, double cap);   // (1 + min(x, cap))^{-exponent}

    double operator()(double x) const;

    Tag tag() const { return tag_; }
    std::string_view name() const;
    double p1() const { return p1_; }
    double p2() const { return p2_; }

    bool isConvex() const { return tag_ != Tag::GaussianSq; }
    bool isConstant() const;
    // g(|t|) is a positive definite function on the real line; strictly so for every tag but a constant.
    bool isStrictlyPositiveDefinite() const { return !isConstant(); }
    // x where the function is known to change shape (kink or inflection); 0 if none.
    double featurePoint() const;

    bool operator==(const ScalarFunction&) const = default;

private:
    ScalarFunction(Tag tag, double p1, double p2) : tag_(tag), p1_(p1), p2_(p2) {}
    Tag tag_;
    double p1_;
    double p2_;
};

}  // namespace mti
