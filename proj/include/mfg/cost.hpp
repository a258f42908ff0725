#pragma once

#include <string>

namespace mfg {

/// Named state-cost family. In 1D it is evaluated at the battery level x; the 2D models
/// evaluate it at the total reserve z1 + z2.
struct CostPreset {
    enum class Kind { zero, constant, linear, quadratic_shortage };

    Kind kind = Kind::zero;
    double coef = 0.0;       // quadratic_shortage: coef * (target - x)^2
    double target = 1.0;
    double slope = 0.0;      // linear: value + slope * x
    double value = 0.0;      // constant / linear intercept

    static CostPreset zero() { return {}; }
    static CostPreset constant(double c) { return {Kind::constant, 0.0, 1.0, 0.0, c}; }
    static CostPreset linear(double slope, double intercept = 0.0) {
        return {Kind::linear, 0.0, 1.0, slope, intercept};
    }
    static CostPreset quadratic_shortage(double coef, double target) {
        return {Kind::quadratic_shortage, coef, target, 0.0, 0.0};
    }

    double operator()(double x) const noexcept {
        switch (kind) {
            case Kind::zero:
                return 0.0;
            case Kind::constant:
                return value;
            case Kind::linear:
                return value + slope * x;
            case Kind::quadratic_shortage:
                return coef * (target - x) * (target - x);
        }
        return 0.0;
    }

    bool operator==(const CostPreset&) const = default;
};

const char* to_string(CostPreset::Kind kind) noexcept;
CostPreset::Kind cost_kind_from_string(const std::string& name);

/// Maps demand to price: ( coupling * [demand]^+ + base_t + offset )^exponent, where base_t is
/// the exogenous demand d_t (EV) or zero (PHEV).
struct PriceLaw {
    double exponent = 2.0;
    double offset = 0.0;
    bool demand_coupling = true;

    double operator()(double demand, double base) const noexcept;

    bool operator==(const PriceLaw&) const = default;
};

}  // namespace mfg
