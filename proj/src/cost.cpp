#include "mfg/cost.hpp"

#include <algorithm>
#include <cmath>

#include "mfg/errors.hpp"

namespace mfg {

const char* to_string(CostPreset::Kind kind) noexcept {
    switch (kind) {
        case CostPreset::Kind::zero:
            return "zero";
        case CostPreset::Kind::constant:
            return "constant";
        case CostPreset::Kind::linear:
            return "linear";
        case CostPreset::Kind::quadratic_shortage:
            return "quadratic_shortage";
    }
    return "zero";
}

CostPreset::Kind cost_kind_from_string(const std::string& name) {
    if (name == "zero") return CostPreset::Kind::zero;
    if (name == "constant") return CostPreset::Kind::constant;
    if (name == "linear") return CostPreset::Kind::linear;
    if (name == "quadratic_shortage") return CostPreset::Kind::quadratic_shortage;
    throw InputError("unknown cost preset '" + name + "'");
}

double PriceLaw::operator()(double demand, double base) const noexcept {
    const double inner = (demand_coupling ? std::max(demand, 0.0) : 0.0) + base + offset;
    if (exponent == 1.0) return inner;
    if (exponent == 2.0) return inner * inner;
    return std::pow(inner, exponent);
}

}  // namespace mfg
