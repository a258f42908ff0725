#pragma once

#include <cstddef>
#include <span>
#include <vector>

namespace mfg {

/// Uniform time discretization of [t0, t1] with `n_steps` intervals.
class TimeGrid {
public:
    TimeGrid(double t0, double t1, int n_steps);

    double t0() const noexcept { return t0_; }
    double t1() const noexcept { return t1_; }
    int n_steps() const noexcept { return n_steps_; }
    int n_nodes() const noexcept { return n_steps_ + 1; }
    double dt() const noexcept { return (t1_ - t0_) / n_steps_; }
    double node(int i) const noexcept { return t0_ + i * dt(); }

    bool operator==(const TimeGrid&) const = default;

private:
    double t0_;
    double t1_;
    int n_steps_;
};

/// Cell-centered grid on [0,1]: x_j = (j + 1/2) / n.
class SpaceGrid1D {
public:
    explicit SpaceGrid1D(int n_cells);

    int size() const noexcept { return n_; }
    double dx() const noexcept { return 1.0 / n_; }
    double node(int j) const noexcept { return (j + 0.5) / n_; }
    std::vector<double> nodes() const;

    bool operator==(const SpaceGrid1D&) const = default;

private:
    int n_;
};

enum class Axis { z1, z2 };

/// Cell-centered grid on the open unit square. Index (a, b) is z1 = node1(a), z2 = node2(b);
/// storage is row-major with z2 fastest.
class SpaceGrid2D {
public:
    SpaceGrid2D(int n1, int n2);

    int n1() const noexcept { return n1_; }
    int n2() const noexcept { return n2_; }
    int size() const noexcept { return n1_ * n2_; }
    double dz1() const noexcept { return 1.0 / n1_; }
    double dz2() const noexcept { return 1.0 / n2_; }
    double cell_area() const noexcept { return dz1() * dz2(); }
    double node1(int a) const noexcept { return (a + 0.5) / n1_; }
    double node2(int b) const noexcept { return (b + 0.5) / n2_; }
    std::size_t index(int a, int b) const noexcept {
        return static_cast<std::size_t>(a) * n2_ + b;
    }

    int extent(Axis axis) const noexcept { return axis == Axis::z1 ? n1_ : n2_; }
    double spacing(Axis axis) const noexcept { return axis == Axis::z1 ? dz1() : dz2(); }

    bool operator==(const SpaceGrid2D&) const = default;

private:
    int n1_;
    int n2_;
};

/// Values on (time node, cell): row i is the slice at t_i.
class Field1D {
public:
    Field1D() = default;
    Field1D(int n_time, int n_space, double fill = 0.0);

    int n_time() const noexcept { return n_time_; }
    int n_space() const noexcept { return n_space_; }

    std::span<double> slice(int i) noexcept;
    std::span<const double> slice(int i) const noexcept;
    double& operator()(int i, int j) noexcept { return data_[idx(i, j)]; }
    double operator()(int i, int j) const noexcept { return data_[idx(i, j)]; }

    std::vector<double>& data() noexcept { return data_; }
    const std::vector<double>& data() const noexcept { return data_; }

    bool all_finite() const noexcept;
    bool operator==(const Field1D&) const = default;

private:
    std::size_t idx(int i, int j) const noexcept {
        return static_cast<std::size_t>(i) * n_space_ + j;
    }

    int n_time_ = 0;
    int n_space_ = 0;
    std::vector<double> data_;
};

/// Values on (time node, z1 cell, z2 cell). Slices are laid out as in SpaceGrid2D.
class Field2D {
public:
    Field2D() = default;
    Field2D(int n_time, int n1, int n2, double fill = 0.0);

    int n_time() const noexcept { return n_time_; }
    int n1() const noexcept { return n1_; }
    int n2() const noexcept { return n2_; }
    int slice_size() const noexcept { return n1_ * n2_; }

    std::span<double> slice(int i) noexcept;
    std::span<const double> slice(int i) const noexcept;
    double& operator()(int i, int a, int b) noexcept { return data_[idx(i, a, b)]; }
    double operator()(int i, int a, int b) const noexcept { return data_[idx(i, a, b)]; }

    std::vector<double>& data() noexcept { return data_; }
    const std::vector<double>& data() const noexcept { return data_; }

    bool all_finite() const noexcept;
    bool operator==(const Field2D&) const = default;

private:
    std::size_t idx(int i, int a, int b) const noexcept {
        return (static_cast<std::size_t>(i) * n1_ + a) * n2_ + b;
    }

    int n_time_ = 0;
    int n1_ = 0;
    int n2_ = 0;
    std::vector<double> data_;
};

}  // namespace mfg
