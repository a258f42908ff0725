#pragma once

// Explicit time-step kernels for the HJB and FPK sweeps. Each kernel has a plain serial
// reference and an OpenMP path; the two must agree bit for bit, which the tests check.

#include <algorithm>
#include <span>

#include "mfg/exec.hpp"
#include "mfg/grid.hpp"

namespace mfg::kernels {

struct HamiltonianMin {
    double value = 0.0;    // min over a of the discrete Hamiltonian
    double control = 0.0;  // its minimizer
};

/// Upwind Hamiltonian of one direction:
///   min_a  a price + cost a^2 / 2 + (a - drift)^+ dp - (a - drift)^- dm,
/// where dp, dm are the forward and backward differences of v. The state velocity a - drift
/// decides which difference is read, which makes the explicit scheme monotone.
inline HamiltonianMin upwind_hamiltonian(double price, double cost, double drift, double dm, double dp) noexcept {
    HamiltonianMin best{drift * price + 0.5 * cost * drift * drift, drift};
    const double up = -(price + dp) / cost;
    if (up > drift) {
        const double val = up * price + 0.5 * cost * up * up + (up - drift) * dp;
        if (val < best.value) best = {val, up};
    }
    const double down = -(price + dm) / cost;
    if (down < drift) {
        const double val = down * price + 0.5 * cost * down * down + (down - drift) * dm;
        if (val < best.value) best = {val, down};
    }
    return best;
}

/// Largest state speed |a - drift| the upwind Hamiltonian can select at a cell.
inline double upwind_speed(double price, double cost, double drift, double dm, double dp) noexcept {
    const double up = -(price + dp) / cost - drift;
    const double down = -(price + dm) / cost - drift;
    return std::max({up, -down, 0.0});
}

/// One explicit backward substep of the 1D HJB
///   v_t = (v_x + price)^2 / (2H) + g v_x - f - D v_xx,  D = sigma^2 g^2 / 2,
/// written as out = v + h * [ upwind_hamiltonian(price, H, g, .) + f + D v_xx ].
struct Hjb1dStep {
    double h = 0.0;
    double price = 0.0;
    double cost = 0.0;  // H
    double g = 0.0;
    double diffusion = 0.0;
    std::span<const double> running_cost;
};

void hjb1d_step(std::span<const double> v, std::span<double> out, const SpaceGrid1D& grid,
                const Hjb1dStep& step, Exec exec);

/// One explicit forward substep of the 1D FPK in flux form with zero wall flux:
///   out = m - h * d/dx [ u m - D m_x ].
/// `drift` is cell-centered; face velocities are averages of neighbouring cells. The face flux
/// is the exponentially fitted (Scharfetter-Gummel) flux, which reduces to the upwind flux when
/// D = 0 and keeps the scheme positive under the same step bound.
struct Fpk1dStep {
    double h = 0.0;
    double diffusion = 0.0;
    std::span<const double> drift;
};

void fpk1d_step(std::span<const double> m, std::span<double> out, const SpaceGrid1D& grid,
                const Fpk1dStep& step, Exec exec);

/// Directional backward HJB pass on a 2D slice: along `axis`, for every line of the other axis,
///   out = v + h * [ upwind_hamiltonian(price, Q, advect, .) + source ],
/// the discrete form of v_t = (d_axis v + price)^2 / (2Q) + advect d_axis v - source.
struct Hjb2dPass {
    Axis axis = Axis::z1;
    double h = 0.0;
    double price = 0.0;
    double cost = 0.0;  // Q
    std::span<const double> advect;  // per cell
    std::span<const double> source;  // per cell
};

void hjb2d_pass(std::span<const double> v, std::span<double> out, const SpaceGrid2D& grid,
                const Hjb2dPass& pass, Exec exec);

/// Directional conservative upwind FPK pass on a 2D slice (no diffusion):
///   out = m - h * d_axis [ upwind(u m) ],  zero flux through the walls.
struct Fpk2dPass {
    Axis axis = Axis::z1;
    double h = 0.0;
    std::span<const double> velocity;  // per cell
};

void fpk2d_pass(std::span<const double> m, std::span<double> out, const SpaceGrid2D& grid,
                const Fpk2dPass& pass, Exec exec);

}  // namespace mfg::kernels
