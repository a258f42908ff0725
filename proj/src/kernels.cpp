#include "mfg/kernels.hpp"

#include <cmath>
#include <cstddef>
#include <vector>

#ifdef _OPENMP
#include <omp.h>
#endif

#include "mfg/fd.hpp"

namespace mfg {

int max_threads() noexcept {
#ifdef _OPENMP
    return omp_get_max_threads();
#else
    return 1;
#endif
}

namespace kernels {

namespace {

// Below this many cells a parallel region costs more than it saves.
constexpr int kParallelMinCells = 512;

inline double hjb1d_cell(const double* v, int n, int j, double dx, const Hjb1dStep& s) noexcept {
    const double dm = fd::backward_at(v, 1, j, dx);
    const double dp = fd::forward_at(v, 1, n, j, dx);
    const double vxx = fd::second_at(v, 1, n, j, dx);
    const double ham = upwind_hamiltonian(s.price, s.cost, s.g, dm, dp).value;
    return v[j] + s.h * (ham + s.running_cost[j] + s.diffusion * vxx);
}

// z / (e^z - 1), the Bernoulli weight of the fitted flux.
inline double bernoulli(double z) noexcept {
    if (std::abs(z) < 1e-8) return 1.0 - 0.5 * z;
    return z / std::expm1(z);
}

// Total (advective + diffusive) flux through the face left of cell k, 0 < k < n.
inline double fpk1d_face_flux(const double* m, const double* u, int n, int k, double dx,
                              double diffusion) noexcept {
    const double uf = fd::face_velocity(u, 1, n, k - 1);
    if (diffusion <= 0.0) return fd::upwind_flux(uf, m[k - 1], m[k]);
    const double peclet = uf * dx / diffusion;
    return diffusion / dx * (bernoulli(-peclet) * m[k - 1] - bernoulli(peclet) * m[k]);
}

inline double hjb2d_cell(const double* line, std::ptrdiff_t stride, int n, int j, double h_space,
                         std::size_t cell, const Hjb2dPass& p) noexcept {
    const double dm = fd::backward_at(line, stride, j, h_space);
    const double dp = fd::forward_at(line, stride, n, j, h_space);
    const double ham = upwind_hamiltonian(p.price, p.cost, p.advect[cell], dm, dp).value;
    return line[j * stride] + p.h * (ham + p.source[cell]);
}

// Advective flux through the face between positions j and j+1 of a line.
inline double fpk2d_face_flux(const double* line, const double* u, std::ptrdiff_t stride, int n,
                              int j) noexcept {
    if (j < 0 || j >= n - 1) return 0.0;
    const double uf = fd::face_velocity(u, stride, n, j);
    return fd::upwind_flux(uf, line[j * stride], line[(j + 1) * stride]);
}

}  // namespace

void hjb1d_step(std::span<const double> v, std::span<double> out, const SpaceGrid1D& grid,
                const Hjb1dStep& step, Exec exec) {
    const int n = grid.size();
    const double dx = grid.dx();
    if (exec == Exec::serial) {
        for (int j = 0; j < n; ++j) out[j] = hjb1d_cell(v.data(), n, j, dx, step);
        return;
    }
#pragma omp parallel for schedule(static) if (n >= kParallelMinCells)
    for (int j = 0; j < n; ++j) out[j] = hjb1d_cell(v.data(), n, j, dx, step);
}

void fpk1d_step(std::span<const double> m, std::span<double> out, const SpaceGrid1D& grid,
                const Fpk1dStep& step, Exec exec) {
    const int n = grid.size();
    const double dx = grid.dx();
    const double* u = step.drift.data();
    if (exec == Exec::serial) {
        double left = 0.0;
        for (int j = 0; j < n; ++j) {
            const double right = j == n - 1 ? 0.0 : fpk1d_face_flux(m.data(), u, n, j + 1, dx, step.diffusion);
            out[j] = m[j] - step.h * (right - left) / dx;
            left = right;
        }
        return;
    }
    // Faces 0..n; the two walls stay zero.
    std::vector<double> flux(static_cast<std::size_t>(n) + 1, 0.0);
#pragma omp parallel if (n >= kParallelMinCells)
    {
#pragma omp for schedule(static)
        for (int k = 1; k < n; ++k) flux[k] = fpk1d_face_flux(m.data(), u, n, k, dx, step.diffusion);
#pragma omp for schedule(static)
        for (int j = 0; j < n; ++j) out[j] = m[j] - step.h * (flux[j + 1] - flux[j]) / dx;
    }
}

void hjb2d_pass(std::span<const double> v, std::span<double> out, const SpaceGrid2D& grid,
                const Hjb2dPass& pass, Exec exec) {
    const double hs = grid.spacing(pass.axis);
    const bool along_z1 = pass.axis == Axis::z1;
    if (exec == Exec::serial) {
        for (int a = 0; a < grid.n1(); ++a) {
            for (int b = 0; b < grid.n2(); ++b) {
                const std::size_t cell = grid.index(a, b);
                if (along_z1) {
                    out[cell] = hjb2d_cell(v.data() + b, grid.n2(), grid.n1(), a, hs, cell, pass);
                } else {
                    out[cell] = hjb2d_cell(v.data() + grid.index(a, 0), 1, grid.n2(), b, hs, cell, pass);
                }
            }
        }
        return;
    }
    // One line per iteration: rows of fixed z2 for the z1 pass, columns of fixed z1 otherwise.
    const int lines = along_z1 ? grid.n2() : grid.n1();
    const int len = grid.extent(pass.axis);
    const std::ptrdiff_t stride = along_z1 ? grid.n2() : 1;
#pragma omp parallel for schedule(static) if (grid.size() >= kParallelMinCells)
    for (int l = 0; l < lines; ++l) {
        const std::size_t base = along_z1 ? static_cast<std::size_t>(l) : grid.index(l, 0);
        const double* line = v.data() + base;
        for (int j = 0; j < len; ++j) {
            const std::size_t cell = base + j * stride;
            out[cell] = hjb2d_cell(line, stride, len, j, hs, cell, pass);
        }
    }
}

void fpk2d_pass(std::span<const double> m, std::span<double> out, const SpaceGrid2D& grid,
                const Fpk2dPass& pass, Exec exec) {
    const double hs = grid.spacing(pass.axis);
    const bool along_z1 = pass.axis == Axis::z1;
    const int len = grid.extent(pass.axis);
    const std::ptrdiff_t stride = along_z1 ? grid.n2() : 1;
    auto line_base = [&](int a, int b) {
        return along_z1 ? static_cast<std::size_t>(b) : grid.index(a, 0);
    };
    if (exec == Exec::serial) {
        for (int a = 0; a < grid.n1(); ++a) {
            for (int b = 0; b < grid.n2(); ++b) {
                const std::size_t base = line_base(a, b);
                const int j = along_z1 ? a : b;
                const double* line = m.data() + base;
                const double* u = pass.velocity.data() + base;
                const double right = fpk2d_face_flux(line, u, stride, len, j);
                const double left = fpk2d_face_flux(line, u, stride, len, j - 1);
                out[grid.index(a, b)] = line[j * stride] - pass.h * (right - left) / hs;
            }
        }
        return;
    }
    const int lines = along_z1 ? grid.n2() : grid.n1();
#pragma omp parallel if (grid.size() >= kParallelMinCells)
    {
        std::vector<double> flux(static_cast<std::size_t>(len) + 1, 0.0);
#pragma omp for schedule(static)
        for (int l = 0; l < lines; ++l) {
            const std::size_t base = along_z1 ? static_cast<std::size_t>(l) : grid.index(l, 0);
            const double* line = m.data() + base;
            const double* u = pass.velocity.data() + base;
            for (int j = 0; j + 1 < len; ++j) flux[j + 1] = fpk2d_face_flux(line, u, stride, len, j);
            for (int j = 0; j < len; ++j) {
                out[base + j * stride] = line[j * stride] - pass.h * (flux[j + 1] - flux[j]) / hs;
            }
        }
    }
}

}  // namespace kernels
}  // namespace mfg
