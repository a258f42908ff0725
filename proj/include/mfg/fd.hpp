#pragma once

// Finite-difference operators on cell-centered grids with zero-flux (Neumann) walls.
//
// The per-cell stencils are inline so the time-stepping kernels evaluate exactly the
// same arithmetic as the whole-slice operators below.

#include <cstddef>
#include <span>
#include <vector>

#include "mfg/grid.hpp"

namespace mfg::fd {

/// First derivative at cell j of a line of n values spaced `stride` apart.
/// Central in the interior, one-sided at the two wall cells.
inline double central_at(const double* f, std::ptrdiff_t stride, int n, int j, double h) noexcept {
    if (j == 0) return (f[stride] - f[0]) / h;
    if (j == n - 1) return (f[(n - 1) * stride] - f[(n - 2) * stride]) / h;
    return (f[(j + 1) * stride] - f[(j - 1) * stride]) / (2.0 * h);
}

/// Second derivative at cell j; ghost cells mirror the wall cell.
inline double second_at(const double* f, std::ptrdiff_t stride, int n, int j, double h) noexcept {
    const double c = f[j * stride];
    const double left = j == 0 ? c : f[(j - 1) * stride];
    const double right = j == n - 1 ? c : f[(j + 1) * stride];
    return (left - 2.0 * c + right) / (h * h);
}

/// One-sided differences at cell j with mirrored ghosts, so both vanish at the walls.
inline double backward_at(const double* f, std::ptrdiff_t stride, int j, double h) noexcept {
    return j == 0 ? 0.0 : (f[j * stride] - f[(j - 1) * stride]) / h;
}
inline double forward_at(const double* f, std::ptrdiff_t stride, int n, int j, double h) noexcept {
    return j == n - 1 ? 0.0 : (f[(j + 1) * stride] - f[j * stride]) / h;
}

/// Velocity on the face between cells j and j+1 (j = -1 and j = n-1 are walls: zero).
inline double face_velocity(const double* u, std::ptrdiff_t stride, int n, int j) noexcept {
    if (j < 0 || j >= n - 1) return 0.0;
    return 0.5 * (u[j * stride] + u[(j + 1) * stride]);
}

/// Upwind advective flux through a face with velocity `uf` between densities `left`, `right`.
inline double upwind_flux(double uf, double left, double right) noexcept {
    return uf > 0.0 ? uf * left : uf * right;
}

std::vector<double> diff_central(std::span<const double> f, const SpaceGrid1D& grid);
std::vector<double> diff2(std::span<const double> f, const SpaceGrid1D& grid);

/// Conservative upwind divergence d/dx(drift * f). Drift is given at cell centers and
/// averaged onto faces; both wall faces carry zero flux.
std::vector<double> diff_upwind(std::span<const double> f, std::span<const double> drift,
                                const SpaceGrid1D& grid);

/// Midpoint rule: sum_j f_j dx.
double integrate(std::span<const double> f, const SpaceGrid1D& grid);

std::vector<double> diff_central(std::span<const double> f, const SpaceGrid2D& grid, Axis axis);
std::vector<double> diff2(std::span<const double> f, const SpaceGrid2D& grid, Axis axis);
std::vector<double> diff_upwind(std::span<const double> f, std::span<const double> drift,
                                const SpaceGrid2D& grid, Axis axis);
double integrate(std::span<const double> f, const SpaceGrid2D& grid);

/// Forward-difference rate of a per-node series: (s[i+1] - s[i]) / dt, attributed to node i.
/// Returns n_steps values.
std::vector<double> mean_rate(std::span<const double> node_values, const TimeGrid& time);

/// d/dt of the density mean, one value per time interval.
std::vector<double> mean_rate(const Field1D& m, const SpaceGrid1D& grid, const TimeGrid& time);

/// Per-node mean of a 1D density field.
std::vector<double> means(const Field1D& m, const SpaceGrid1D& grid);

/// Extends an n_steps rate series to n_steps+1 nodes by repeating the last interval.
std::vector<double> extend_to_nodes(std::vector<double> rates);

/// max over time slices of the L1 distance between two fields.
double sup_l1_distance(const Field1D& a, const Field1D& b, const SpaceGrid1D& grid);
double sup_l1_distance(const Field2D& a, const Field2D& b, const SpaceGrid2D& grid);

}  // namespace mfg::fd
