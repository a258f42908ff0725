#include "mfg/fd.hpp"

#include <algorithm>
#include <cmath>
#include <string>

#include "mfg/errors.hpp"

namespace mfg::fd {

namespace {

void check_size(std::size_t got, std::size_t want, const char* what) {
    if (got != want) {
        throw DimensionError(std::string(what) + ": expected " + std::to_string(want) +
                             " values, got " + std::to_string(got));
    }
}

// Calls fn(base, stride, n) for every line of the 2D slice running along `axis`.
template <class Fn>
void for_each_line(const SpaceGrid2D& grid, Axis axis, Fn&& fn) {
    if (axis == Axis::z1) {
        for (int b = 0; b < grid.n2(); ++b) fn(static_cast<std::size_t>(b), grid.n2(), grid.n1());
    } else {
        for (int a = 0; a < grid.n1(); ++a) fn(grid.index(a, 0), std::ptrdiff_t{1}, grid.n2());
    }
}

}  // namespace

std::vector<double> diff_central(std::span<const double> f, const SpaceGrid1D& grid) {
    check_size(f.size(), grid.size(), "diff_central");
    std::vector<double> out(f.size());
    for (int j = 0; j < grid.size(); ++j) out[j] = central_at(f.data(), 1, grid.size(), j, grid.dx());
    return out;
}

std::vector<double> diff2(std::span<const double> f, const SpaceGrid1D& grid) {
    check_size(f.size(), grid.size(), "diff2");
    std::vector<double> out(f.size());
    for (int j = 0; j < grid.size(); ++j) out[j] = second_at(f.data(), 1, grid.size(), j, grid.dx());
    return out;
}

std::vector<double> diff_upwind(std::span<const double> f, std::span<const double> drift,
                                const SpaceGrid1D& grid) {
    check_size(f.size(), grid.size(), "diff_upwind");
    check_size(drift.size(), grid.size(), "diff_upwind drift");
    const int n = grid.size();
    std::vector<double> out(n);
    double left_flux = 0.0;
    for (int j = 0; j < n; ++j) {
        const double uf = face_velocity(drift.data(), 1, n, j);
        const double right_flux = j == n - 1 ? 0.0 : upwind_flux(uf, f[j], f[j + 1]);
        out[j] = (right_flux - left_flux) / grid.dx();
        left_flux = right_flux;
    }
    return out;
}

double integrate(std::span<const double> f, const SpaceGrid1D& grid) {
    check_size(f.size(), grid.size(), "integrate");
    double s = 0.0;
    for (double v : f) s += v;
    return s * grid.dx();
}

std::vector<double> diff_central(std::span<const double> f, const SpaceGrid2D& grid, Axis axis) {
    check_size(f.size(), grid.size(), "diff_central");
    std::vector<double> out(f.size());
    const double h = grid.spacing(axis);
    for_each_line(grid, axis, [&](std::size_t base, std::ptrdiff_t stride, int n) {
        for (int j = 0; j < n; ++j) out[base + j * stride] = central_at(f.data() + base, stride, n, j, h);
    });
    return out;
}

std::vector<double> diff2(std::span<const double> f, const SpaceGrid2D& grid, Axis axis) {
    check_size(f.size(), grid.size(), "diff2");
    std::vector<double> out(f.size());
    const double h = grid.spacing(axis);
    for_each_line(grid, axis, [&](std::size_t base, std::ptrdiff_t stride, int n) {
        for (int j = 0; j < n; ++j) out[base + j * stride] = second_at(f.data() + base, stride, n, j, h);
    });
    return out;
}

std::vector<double> diff_upwind(std::span<const double> f, std::span<const double> drift,
                                const SpaceGrid2D& grid, Axis axis) {
    check_size(f.size(), grid.size(), "diff_upwind");
    check_size(drift.size(), grid.size(), "diff_upwind drift");
    std::vector<double> out(f.size());
    const double h = grid.spacing(axis);
    for_each_line(grid, axis, [&](std::size_t base, std::ptrdiff_t stride, int n) {
        const double* line = f.data() + base;
        const double* u = drift.data() + base;
        double left_flux = 0.0;
        for (int j = 0; j < n; ++j) {
            const double uf = face_velocity(u, stride, n, j);
            const double right_flux =
                j == n - 1 ? 0.0 : upwind_flux(uf, line[j * stride], line[(j + 1) * stride]);
            out[base + j * stride] = (right_flux - left_flux) / h;
            left_flux = right_flux;
        }
    });
    return out;
}

double integrate(std::span<const double> f, const SpaceGrid2D& grid) {
    check_size(f.size(), grid.size(), "integrate");
    double s = 0.0;
    for (double v : f) s += v;
    return s * grid.cell_area();
}

std::vector<double> mean_rate(std::span<const double> node_values, const TimeGrid& time) {
    if (node_values.size() < 2) {
        throw DimensionError("mean_rate needs at least 2 time slices");
    }
    check_size(node_values.size(), time.n_nodes(), "mean_rate");
    std::vector<double> rate(node_values.size() - 1);
    for (std::size_t i = 0; i + 1 < node_values.size(); ++i) {
        rate[i] = (node_values[i + 1] - node_values[i]) / time.dt();
    }
    return rate;
}

std::vector<double> means(const Field1D& m, const SpaceGrid1D& grid) {
    check_size(m.n_space(), grid.size(), "means");
    std::vector<double> out(m.n_time());
    for (int i = 0; i < m.n_time(); ++i) {
        const auto s = m.slice(i);
        double acc = 0.0;
        for (int j = 0; j < grid.size(); ++j) acc += grid.node(j) * s[j];
        out[i] = acc * grid.dx();
    }
    return out;
}

std::vector<double> mean_rate(const Field1D& m, const SpaceGrid1D& grid, const TimeGrid& time) {
    if (m.n_time() < 2) throw DimensionError("mean_rate needs at least 2 time slices");
    return mean_rate(means(m, grid), time);
}

std::vector<double> extend_to_nodes(std::vector<double> rates) {
    if (rates.empty()) throw DimensionError("extend_to_nodes: empty rate series");
    rates.push_back(rates.back());
    return rates;
}

double sup_l1_distance(const Field1D& a, const Field1D& b, const SpaceGrid1D& grid) {
    if (a.n_time() != b.n_time() || a.n_space() != b.n_space() || a.n_space() != grid.size()) {
        throw DimensionError("sup_l1_distance: field shapes differ");
    }
    double worst = 0.0;
    for (int i = 0; i < a.n_time(); ++i) {
        const auto sa = a.slice(i);
        const auto sb = b.slice(i);
        double acc = 0.0;
        for (int j = 0; j < grid.size(); ++j) acc += std::abs(sa[j] - sb[j]);
        worst = std::max(worst, acc * grid.dx());
    }
    return worst;
}

double sup_l1_distance(const Field2D& a, const Field2D& b, const SpaceGrid2D& grid) {
    if (a.n_time() != b.n_time() || a.n1() != b.n1() || a.n2() != b.n2() ||
        a.slice_size() != grid.size()) {
        throw DimensionError("sup_l1_distance: field shapes differ");
    }
    double worst = 0.0;
    for (int i = 0; i < a.n_time(); ++i) {
        const auto sa = a.slice(i);
        const auto sb = b.slice(i);
        double acc = 0.0;
        for (int k = 0; k < grid.size(); ++k) acc += std::abs(sa[k] - sb[k]);
        worst = std::max(worst, acc * grid.cell_area());
    }
    return worst;
}

}  // namespace mfg::fd
