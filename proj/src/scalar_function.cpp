#include "mti/scalar_function.hpp"

#include "mti/core.hpp"

#include <algorithm>
#include <cmath>

namespace mti {

namespace {
void requireFinite(double v, const char* what) {
    if (!std::isfinite(v)) throw DomainError(std::string(what) + " must be finite");
}
}  // namespace

ScalarFunction ScalarFunction::expDecay(double rate) {
    requireFinite(rate, "exp_decay rate");
    if (!(rate > 0)) throw DomainError("exp_decay rate must be > 0");
    return {Tag::ExpDecay, rate, 0.0};
}

ScalarFunction ScalarFunction::gaussianSq() { return {Tag::GaussianSq, 0.0, 0.0}; }

ScalarFunction ScalarFunction::linearPolya(double lambda, double slope) {
    requireFinite(lambda, "linear_polya lambda");
    requireFinite(slope, "linear_polya slope");
    if (!(lambda > 0) || !(slope > 0)) throw DomainError("linear_polya needs lambda > 0 and slope > 0");
    return {Tag::LinearPolya, lambda, slope};
}

ScalarFunction ScalarFunction::constant(double c) {
    requireFinite(c, "constant value");
    if (!(c >= 0)) throw DomainError("constant value must be >= 0");
    return {Tag::Constant, c, 0.0};
}

ScalarFunction ScalarFunction::powerCapped(double exponent, double cap) {
    requireFinite(exponent, "power_capped exponent");
    requireFinite(cap, "power_capped cap");
    if (!(exponent >= 0) || !(cap > 0)) throw DomainError("power_capped needs exponent >= 0 and cap > 0");
    return {Tag::PowerCapped, exponent, cap};
}

double ScalarFunction::operator()(double x) const {
    switch (tag_) {
        case Tag::ExpDecay: return std::exp(-p1_ * x);
        case Tag::GaussianSq: return std::exp(-x * x);
        case Tag::LinearPolya: return std::max(p1_ - p2_ * x, 0.0);
        case Tag::Constant: return p1_;
        case Tag::PowerCapped: return std::pow(1.0 + std::min(x, p2_), -p1_);
    }
    return 0.0;
}

std::string_view ScalarFunction::name() const {
    switch (tag_) {
        case Tag::ExpDecay: return "exp_decay";
        case Tag::GaussianSq: return "gaussian_sq";
        case Tag::LinearPolya: return "linear_polya";
        case Tag::Constant: return "constant";
        case Tag::PowerCapped: return "power_capped";
    }
    return "";
}

bool ScalarFunction::isConstant() const {
    return tag_ == Tag::Constant || (tag_ == Tag::PowerCapped && p1_ == 0.0);
}

double ScalarFunction::featurePoint() const {
    switch (tag_) {
        case Tag::GaussianSq: return std::sqrt(0.5);
        case Tag::LinearPolya: return p1_ / p2_;
        case Tag::PowerCapped: return p2_;
        default: return 0.0;
    }
}

}  // namespace mti
