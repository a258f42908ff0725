#pragma once

// Electric-vehicle game: one battery level x in [0,1] per agent, energy price set by the
// expected aggregate purchase rate g_t + d/dt E[x_t] on top of an exogenous demand d_t.

#include <span>
#include <vector>

#include "mfg/cost.hpp"
#include "mfg/exec.hpp"
#include "mfg/grid.hpp"

namespace mfg::ev {

/// Time series are given per time node (n_steps + 1 entries).
struct EvParams {
    std::vector<double> g;      // mean consumption rate
    std::vector<double> sigma;  // relative consumption noise
    std::vector<double> H;      // trading-cost coefficient, h(a) = H a^2 / 2
    std::vector<double> d;      // exogenous demand
    CostPreset running = CostPreset::quadratic_shortage(1.0, 1.0);
    CostPreset terminal = CostPreset::quadratic_shortage(1.0, 1.0);
    PriceLaw price;

    /// Throws ParameterError/DimensionError if series lengths or ranges are invalid.
    void validate(const TimeGrid& time) const;
};

struct EvProblem {
    TimeGrid time;
    SpaceGrid1D space;
    EvParams params;
    std::vector<double> m0;
    Exec exec = Exec::parallel;
};

/// Number of explicit substeps taken per time interval by a sweep.
struct SweepStats {
    std::vector<int> substeps;
};

/// Expected EV purchase rate per node: g_t + d/dt of the density mean.
std::vector<double> ev_demand(const Field1D& m, const EvParams& params, const SpaceGrid1D& space,
                              const TimeGrid& time);

/// p_t = ([g_t + rate_t]^+ + d_t)^exponent; the last node reuses the final interval's rate.
std::vector<double> ev_price(const Field1D& m, const EvParams& params, const SpaceGrid1D& space,
                             const TimeGrid& time);

/// alpha*(t,x) = -(v_x + p_t) / H_t.
Field1D optimal_control(const Field1D& v, std::span<const double> price, const EvParams& params,
                        const SpaceGrid1D& space);

/// Explicit backward sweep of
///   v_t = (v_x + p)^2 / (2H) + g v_x - f - sigma^2 g^2 v_xx / 2,   v(T) = kappa,
/// stepping t_{i+1} -> t_i with coefficients frozen at t_{i+1} and substeps as required
/// for stability.
Field1D hjb_backward_sweep(std::span<const double> price, const EvParams& params,
                           const TimeGrid& time, const SpaceGrid1D& space, Exec exec = Exec::parallel,
                           SweepStats* stats = nullptr);

/// Explicit forward sweep of m_t = -d/dx[(alpha - g) m] + sigma^2 g^2 m_xx / 2 in flux form.
/// Interval i uses the control at t_i.
Field1D fpk_forward_sweep(const Field1D& alpha, std::span<const double> m0, const EvParams& params,
                          const TimeGrid& time, const SpaceGrid1D& space, Exec exec = Exec::parallel,
                          SweepStats* stats = nullptr);

/// Population-averaged cost: sum_i dt sum_j dx m [a p + H a^2/2 + f] + sum_j dx m_T kappa.
double ev_cost(const Field1D& alpha, const Field1D& m, std::span<const double> price,
               const EvParams& params, const TimeGrid& time, const SpaceGrid1D& space);

/// Per-node Hamiltonian a p + H a^2 / 2 + a v_x (the control-dependent part).
double hamiltonian(double a, double price, double H, double vx) noexcept;

/// Counts nodes where the control is beaten by a +-delta perturbation of itself.
int count_hamiltonian_violations(const Field1D& v, const Field1D& alpha, std::span<const double> price,
                                 const EvParams& params, const SpaceGrid1D& space,
                                 std::span<const double> deltas);

/// Triangle density with the given center and half-width, sampled at cell centers and
/// normalized to unit mass.
std::vector<double> triangle_density(double center, double halfwidth, const SpaceGrid1D& space);

}  // namespace mfg::ev
