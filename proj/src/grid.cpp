#include "mfg/grid.hpp"

#include <algorithm>
#include <cmath>
#include <string>

#include "mfg/errors.hpp"

namespace mfg {

TimeGrid::TimeGrid(double t0, double t1, int n_steps) : t0_(t0), t1_(t1), n_steps_(n_steps) {
    if (n_steps < 2) {
        throw ParameterError("time grid needs at least 2 steps, got " + std::to_string(n_steps));
    }
    if (!(t1 > t0) || !std::isfinite(t1 - t0)) {
        throw ParameterError("time grid needs t1 > t0");
    }
}

SpaceGrid1D::SpaceGrid1D(int n_cells) : n_(n_cells) {
    if (n_cells < 4) {
        throw ParameterError("space grid needs at least 4 cells, got " + std::to_string(n_cells));
    }
}

std::vector<double> SpaceGrid1D::nodes() const {
    std::vector<double> x(n_);
    for (int j = 0; j < n_; ++j) x[j] = node(j);
    return x;
}

SpaceGrid2D::SpaceGrid2D(int n1, int n2) : n1_(n1), n2_(n2) {
    if (n1 < 4 || n2 < 4) {
        throw ParameterError("2D grid needs at least 4 cells per axis, got " + std::to_string(n1) +
                             "x" + std::to_string(n2));
    }
}

namespace {

bool finite_all(const std::vector<double>& v) {
    return std::all_of(v.begin(), v.end(), [](double x) { return std::isfinite(x); });
}

}  // namespace

Field1D::Field1D(int n_time, int n_space, double fill)
    : n_time_(n_time),
      n_space_(n_space),
      data_(static_cast<std::size_t>(n_time) * n_space, fill) {}

std::span<double> Field1D::slice(int i) noexcept {
    return {data_.data() + idx(i, 0), static_cast<std::size_t>(n_space_)};
}

std::span<const double> Field1D::slice(int i) const noexcept {
    return {data_.data() + idx(i, 0), static_cast<std::size_t>(n_space_)};
}

bool Field1D::all_finite() const noexcept { return finite_all(data_); }

Field2D::Field2D(int n_time, int n1, int n2, double fill)
    : n_time_(n_time),
      n1_(n1),
      n2_(n2),
      data_(static_cast<std::size_t>(n_time) * n1 * n2, fill) {}

std::span<double> Field2D::slice(int i) noexcept {
    return {data_.data() + idx(i, 0, 0), static_cast<std::size_t>(slice_size())};
}

std::span<const double> Field2D::slice(int i) const noexcept {
    return {data_.data() + idx(i, 0, 0), static_cast<std::size_t>(slice_size())};
}

bool Field2D::all_finite() const noexcept { return finite_all(data_); }

}  // namespace mfg
