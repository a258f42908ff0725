#pragma once

// Plug-in hybrid game: state z = (battery z1, oil tank z2) on the unit square. Consumption g is
// drawn from the battery in proportion beta = z1 / (z1 + z2); electricity is priced by the
// PHEV demand, oil has a fixed price r2. No consumption noise (sigma = 0).
//
// Both sweeps use dimension splitting: every substep resolves the z1 terms along each row of
// fixed z2 and the z2 terms along each column of fixed z1. The two orderings (z1 then z2, z2
// then z1) are both applied and averaged, so the scheme commutes with swapping the axes.

#include <span>
#include <vector>

#include "mfg/cost.hpp"
#include "mfg/ev.hpp"
#include "mfg/exec.hpp"
#include "mfg/grid.hpp"

namespace mfg::phev {

using ev::SweepStats;

struct PhevParams {
    std::vector<double> g;
    std::vector<double> Q1;  // electricity trading-cost coefficient
    std::vector<double> Q2;  // oil trading-cost coefficient
    double r2 = 0.7;         // fixed oil price
    CostPreset running = CostPreset::quadratic_shortage(20.0, 2.0);   // on z1 + z2
    CostPreset terminal = CostPreset::quadratic_shortage(10.0, 2.0);  // on z1 + z2
    PriceLaw price{1.0, 0.5, true};

    void validate(const TimeGrid& time) const;
};

struct PhevPrices {
    std::vector<double> r1;
    double r2 = 0.0;

    bool operator==(const PhevPrices&) const = default;
};

struct PhevControls {
    Field2D mu1;
    Field2D mu2;

    bool operator==(const PhevControls&) const = default;
};

struct PhevProblem {
    TimeGrid time;
    SpaceGrid2D space;
    PhevParams params;
    std::vector<double> m0;
    Exec exec = Exec::parallel;
};

/// Share of consumption drawn from the battery, z1 / (z1 + z2). Throws DomainError at the origin.
double beta(double z1, double z2);
/// 1 - beta, evaluated as z2 / (z1 + z2).
double beta_complement(double z1, double z2);
/// d beta / d z1 - d beta / d z2 = 1 / (z1 + z2).
double beta_divergence(double z1, double z2);

/// Electricity demand per node: g_t * integral(beta m_t) + d/dt integral(z1 m_t).
std::vector<double> phev_demand(const Field2D& m, const PhevParams& params, const SpaceGrid2D& space,
                                const TimeGrid& time);

/// r1_t = price_law(demand_t); r2 constant.
PhevPrices phev_price(const Field2D& m, const PhevParams& params, const SpaceGrid2D& space,
                      const TimeGrid& time);

/// mu1 = -(r1 + d_z1 v) / Q1,  mu2 = -(r2 + d_z2 v) / Q2.
PhevControls phev_optimal_controls(const Field2D& v, const PhevPrices& prices, const PhevParams& params,
                                   const SpaceGrid2D& space);

/// Backward sweep of
///   v_t = (v_z1 + r1)^2/(2Q1) + (v_z2 + r2)^2/(2Q2) + g beta v_z1 + g (1-beta) v_z2 - s,
///   v(T) = xi.
Field2D phev_hjb_backward_sweep(const PhevPrices& prices, const PhevParams& params,
                                const TimeGrid& time, const SpaceGrid2D& space,
                                Exec exec = Exec::parallel, SweepStats* stats = nullptr);

/// Forward sweep of m_t = -d_z1[(mu1 - beta g) m] - d_z2[(mu2 - (1-beta) g) m].
Field2D phev_fpk_forward_sweep(const PhevControls& controls, std::span<const double> m0,
                               const PhevParams& params, const TimeGrid& time, const SpaceGrid2D& space,
                               Exec exec = Exec::parallel, SweepStats* stats = nullptr);

/// Conservative-form FPK right-hand side of one slice (the operator the forward sweep integrates).
std::vector<double> phev_fpk_rhs(std::span<const double> m, std::span<const double> mu1,
                                 std::span<const double> mu2, double g, const SpaceGrid2D& space);

/// Population-averaged cost with running integrand mu1 r1 + mu2 r2 + q(mu) + s, plus E[xi(z_T)].
double phev_cost(const PhevControls& controls, const Field2D& m, const PhevPrices& prices,
                 const PhevParams& params, const TimeGrid& time, const SpaceGrid2D& space);

/// mu1 r1 + mu2 r2 + Q1 mu1^2/2 + Q2 mu2^2/2 + mu1 v_z1 + mu2 v_z2.
double hamiltonian(double mu1, double mu2, double r1, double r2, double Q1, double Q2, double v1,
                   double v2) noexcept;

/// Nodes where some (mu1 + i delta, mu2 + k delta), i,k in {-1,0,1}, beats the control.
int count_hamiltonian_violations(const Field2D& v, const PhevControls& controls, const PhevPrices& prices,
                                 const PhevParams& params, const SpaceGrid2D& space,
                                 std::span<const double> deltas);

/// Isotropic Gaussian restricted to the grid and normalized to unit mass.
std::vector<double> truncated_gaussian_density(double mean1, double mean2, double variance,
                                               const SpaceGrid2D& space);

struct DensityMoments {
    double mean1 = 0.0;
    double mean2 = 0.0;
    double var1 = 0.0;
    double var2 = 0.0;
    double cov = 0.0;

    double correlation() const;
};

DensityMoments moments(std::span<const double> m, const SpaceGrid2D& space);

}  // namespace mfg::phev
