#pragma once

// Independent checks of PDE solutions: exact backward induction on a finite MDP obtained by
// discretizing the agent dynamics, and a seeded Monte Carlo population simulator. Prices are
// always frozen inputs here.

#include <cstdint>
#include <functional>
#include <span>
#include <vector>

#include "mfg/ev.hpp"
#include "mfg/exec.hpp"
#include "mfg/grid.hpp"
#include "mfg/phev.hpp"
#include "mfg/solver.hpp"

namespace mfg::oracle {

struct Transition {
    int next = 0;
    double prob = 0.0;
};

/// Finite-horizon MDP with time-dependent costs and transitions.
/// Index layout: (t, s, a) -> (t * n_states + s) * n_actions + a.
struct DiscreteMdp {
    int n_states = 0;
    int n_actions = 0;
    int horizon = 0;                     // number of decision steps
    std::vector<double> action_size;     // |action| for tie-breaking, one per action
    std::vector<double> stage_cost;      // horizon * n_states * n_actions
    std::vector<std::vector<Transition>> transitions;  // same layout
    std::vector<double> terminal;        // n_states

    std::size_t at(int t, int s, int a) const noexcept {
        return (static_cast<std::size_t>(t) * n_states + s) * n_actions + a;
    }
    /// Throws ParameterError on empty sets, bad sizes, or probabilities not summing to 1.
    void validate() const;
};

struct DpResult {
    int n_states = 0;
    std::vector<double> value;  // (horizon + 1) * n_states
    std::vector<int> policy;    // horizon * n_states, action index

    double V(int t, int s) const { return value[static_cast<std::size_t>(t) * n_states + s]; }
    int action(int t, int s) const { return policy[static_cast<std::size_t>(t) * n_states + s]; }
};

/// Exact backward induction; among equal minima the action with the smallest |action| wins
/// (then the lowest index).
DpResult dp_best_response(const DiscreteMdp& mdp);

/// Expected cost from state s0 of the Markov policy `policy[t * n_states + s]`.
double evaluate_policy(const DiscreteMdp& mdp, std::span<const int> policy, int s0);

/// Symmetric action lattice {-k delta, ..., k delta} with k delta >= max_abs.
std::vector<double> symmetric_actions(double max_abs, double delta);

/// Lattice of the EV problem on the cell centers of `n_states` cells, decision steps every
/// `stride` fine time intervals (the last step may be shorter). Over one step of length h the
/// state moves by (a - g) h plus a two-point +-sigma g sqrt(h) increment, is stopped at the walls of
/// [0, 1], and is split between the two nearest lattice states so the mean is preserved.
struct EvLattice {
    int n_states = 20;
    int stride = 1;
    std::vector<double> actions;
};

struct EvMdp {
    DiscreteMdp mdp;
    std::vector<double> states;
    std::vector<int> time_nodes;  // fine time node of each decision step, plus the final node
};

EvMdp build_ev_mdp(const ev::EvParams& params, std::span<const double> price, const TimeGrid& time,
                   const EvLattice& lattice);

/// Two-dimensional analog for the PHEV model (sigma = 0, at most 10 x 10 states). Actions are
/// all pairs of `actions`; next states are split bilinearly among the four surrounding nodes.
struct PhevLattice {
    int n1 = 10;
    int n2 = 10;
    int stride = 1;
    std::vector<double> actions;
};

struct PhevMdp {
    DiscreteMdp mdp;
    std::vector<double> z1;  // coordinates of each state s = a * n2 + b
    std::vector<double> z2;
    std::vector<int> time_nodes;
};

PhevMdp build_phev_mdp(const phev::PhevParams& params, const phev::PhevPrices& prices, const TimeGrid& time,
                       const PhevLattice& lattice);

/// Linear interpolation of a cell-centered slice at x, constant beyond the outer centers.
double interpolate(std::span<const double> slice, const SpaceGrid1D& space, double x) noexcept;

/// Bilinear analog on a 2D slice.
double interpolate(std::span<const double> slice, const SpaceGrid2D& space, double z1, double z2) noexcept;

/// Feedback control alpha(node, x).
using Feedback = std::function<double(int node, double x)>;

struct PopulationHistogram {
    Field1D density;                     // counts / (n_agents dx) on the solver grid
    std::vector<std::int64_t> counts;    // n_nodes * n_cells
    int n_agents = 0;
};

/// Euler substeps per time interval. The control is held at the left node of the interval.
inline constexpr int kMcSubsteps = 10;

/// Euler-Maruyama simulation of dx = (alpha - g) dt - g sigma dW with reflection at 0 and 1.
/// Agents start at the quantiles (k + 1/2) / n of m0. Agent k draws from its own generator
/// seeded from (seed, k), so results do not depend on scheduling.
PopulationHistogram mc_population(const Feedback& control, std::span<const double> m0, const ev::EvParams& params,
                                  const TimeGrid& time, const SpaceGrid1D& space, int n_agents,
                                  std::uint64_t seed, Exec exec = Exec::parallel);

/// Same, with the control read from a field by linear interpolation in x at each time node.
PopulationHistogram mc_population(const Field1D& alpha, std::span<const double> m0, const ev::EvParams& params,
                                  const TimeGrid& time, const SpaceGrid1D& space, int n_agents,
                                  std::uint64_t seed, Exec exec = Exec::parallel);

// Cross-checks of a solved problem against the oracles.

inline constexpr double kDpRelativeTolerance = 0.02;
inline constexpr double kMcL1Tolerance = 0.1;

struct DpAgreement {
    double max_relative_error = 0.0;  // max over lattice states of |V(0, s) - v(0, z_s)| / |v(0, z_s)|
    double worst_z1 = 0.0;            // location of the maximum (x for EV)
    double worst_z2 = 0.0;
    int horizon = 0;
    int n_actions = 0;
};

/// Solves the lattice MDP under the solution's frozen price and compares its value at t = 0 with
/// the interpolated v(0, .). Actions span +-max(3 max g, max |control|) in steps of action_step.
DpAgreement ev_dp_agreement(const ev::EvProblem& problem, const EvSolution& sol, int n_states, int stride,
                            double action_step);
/// PHEV analog on an n x n lattice (n <= 10); every pair of actions is allowed.
DpAgreement phev_dp_agreement(const phev::PhevProblem& problem, const PhevSolution& sol, int n, int stride,
                              double action_step);

struct McAgreement {
    double sup_l1 = 0.0;  // sup over time nodes of the L1 distance between histogram and PDE density
    double worst_t = 0.0;
};

McAgreement ev_mc_agreement(const ev::EvProblem& problem, const EvSolution& sol, int n_agents, std::uint64_t seed);

}  // namespace mfg::oracle
