#pragma once

// Shared helpers for the explicit sweeps. Internal to the library.

#include <algorithm>
#include <cmath>
#include <span>
#include <string>

#include "mfg/errors.hpp"

namespace mfg::detail {

// Fraction of the explicit stability limit actually used.
inline constexpr double kCflSafety = 0.9;
inline constexpr int kMaxSubsteps = 1'000'000;
// Densities below -kHardNegative mean the scheme failed; anything between that and zero is
// roundoff and is clamped.
inline constexpr double kHardNegative = 1e-8;
inline constexpr double kMassTolerance = 1e-6;

/// Smallest number of equal substeps of a dt-long interval with h * rate <= kCflSafety.
/// `rate` is the sum of the explicit stability rates (advection / dx + diffusion / dx^2 terms).
inline int substep_count(double dt, double rate, int node) {
    if (!std::isfinite(rate)) throw DivergenceError("stability bound is not finite", node);
    const double ratio = dt * rate / kCflSafety;
    if (ratio <= 1.0) return 1;
    if (ratio > kMaxSubsteps) throw DivergenceError("stability bound needs too many substeps", node);
    return static_cast<int>(std::ceil(ratio));
}

inline bool all_finite(std::span<const double> v) {
    return std::all_of(v.begin(), v.end(), [](double x) { return std::isfinite(x); });
}

inline void check_initial_density(std::span<const double> m0, double mass) {
    for (double x : m0) {
        if (!std::isfinite(x) || x < 0.0) throw InputError("initial density must be finite and nonnegative");
    }
    if (std::abs(mass - 1.0) > kMassTolerance) {
        throw InputError("initial density has mass " + std::to_string(mass) + ", expected 1");
    }
}

inline void clamp_density(std::span<double> m, int node) {
    for (double& x : m) {
        if (!std::isfinite(x)) throw DivergenceError("density diverged", node);
        if (x < 0.0) {
            if (x < -kHardNegative) throw DivergenceError("density went negative", node);
            x = 0.0;
        }
    }
}

}  // namespace mfg::detail
