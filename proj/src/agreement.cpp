#include <algorithm>
#include <cmath>

#include "mfg/oracle.hpp"

namespace mfg::oracle {

namespace {

double max_abs(const std::vector<double>& v) {
    double m = 0.0;
    for (double x : v) m = std::max(m, std::abs(x));
    return m;
}

std::vector<double> action_lattice(const std::vector<double>& g, double control_max, double step) {
    return symmetric_actions(std::max(3.0 * max_abs(g), control_max), step);
}

// NaN counts as the worst deviation.
bool worse(double e, double worst) { return !(e <= worst); }

double relative(double value, double ref) { return std::abs(value - ref) / std::max(std::abs(ref), 1e-12); }

}  // namespace

DpAgreement ev_dp_agreement(const ev::EvProblem& problem, const EvSolution& sol, int n_states, int stride,
                            double action_step) {
    const EvLattice lattice{n_states, stride, action_lattice(problem.params.g, max_abs(sol.alpha.data()), action_step)};
    const auto mdp = build_ev_mdp(problem.params, sol.p, problem.time, lattice);
    const auto dp = dp_best_response(mdp.mdp);
    DpAgreement r;
    r.horizon = mdp.mdp.horizon;
    r.n_actions = mdp.mdp.n_actions;
    for (int s = 0; s < n_states; ++s) {
        const double e = relative(dp.V(0, s), interpolate(sol.v.slice(0), problem.space, mdp.states[s]));
        if (worse(e, r.max_relative_error)) {
            r.max_relative_error = e;
            r.worst_z1 = mdp.states[s];
        }
    }
    return r;
}

DpAgreement phev_dp_agreement(const phev::PhevProblem& problem, const PhevSolution& sol, int n, int stride,
                              double action_step) {
    const double control_max = std::max(max_abs(sol.alpha.mu1.data()), max_abs(sol.alpha.mu2.data()));
    const PhevLattice lattice{n, n, stride, action_lattice(problem.params.g, control_max, action_step)};
    const auto mdp = build_phev_mdp(problem.params, sol.p, problem.time, lattice);
    const auto dp = dp_best_response(mdp.mdp);
    DpAgreement r;
    r.horizon = mdp.mdp.horizon;
    r.n_actions = mdp.mdp.n_actions;
    for (int s = 0; s < n * n; ++s) {
        const double ref = interpolate(sol.v.slice(0), problem.space, mdp.z1[s], mdp.z2[s]);
        const double e = relative(dp.V(0, s), ref);
        if (worse(e, r.max_relative_error)) {
            r.max_relative_error = e;
            r.worst_z1 = mdp.z1[s];
            r.worst_z2 = mdp.z2[s];
        }
    }
    return r;
}

McAgreement ev_mc_agreement(const ev::EvProblem& problem, const EvSolution& sol, int n_agents, std::uint64_t seed) {
    const auto mc = mc_population(sol.alpha, problem.m0, problem.params, problem.time, problem.space, n_agents, seed,
                                  problem.exec);
    McAgreement r;
    for (int i = 0; i < problem.time.n_nodes(); ++i) {
        double l1 = 0.0;
        for (int j = 0; j < problem.space.size(); ++j) l1 += std::abs(mc.density(i, j) - sol.m(i, j));
        l1 *= problem.space.dx();
        if (worse(l1, r.sup_l1)) {
            r.sup_l1 = l1;
            r.worst_t = problem.time.node(i);
        }
    }
    return r;
}

}  // namespace mfg::oracle
