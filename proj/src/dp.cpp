#include <algorithm>
#include <cmath>
#include <string>

#include "mfg/errors.hpp"
#include "mfg/oracle.hpp"

namespace mfg::oracle {

namespace {

// Boundary rule over one decision step: a path pushed through a wall stops on it.
double stop_at_walls(double y) noexcept { return std::clamp(y, 0.0, 1.0); }

// Splits position y between the two nearest of n cell centers, preserving the mean inside
// the lattice span.
void split_1d(double y, int n, int& lo, int& hi, double& w_hi) noexcept {
    const double u = y * n - 0.5;
    if (u <= 0.0) {
        lo = hi = 0;
        w_hi = 0.0;
    } else if (u >= n - 1) {
        lo = hi = n - 1;
        w_hi = 0.0;
    } else {
        lo = static_cast<int>(std::floor(u));
        hi = lo + 1;
        w_hi = u - lo;
    }
}

void push(std::vector<Transition>& out, int next, double prob) {
    if (prob <= 0.0) return;
    for (auto& t : out) {
        if (t.next == next) {
            t.prob += prob;
            return;
        }
    }
    out.push_back({next, prob});
}

std::vector<int> decision_nodes(const TimeGrid& time, int stride) {
    if (stride < 1) throw ParameterError("lattice stride must be at least 1");
    std::vector<int> nodes;
    for (int i = 0; i < time.n_steps(); i += stride) nodes.push_back(i);
    nodes.push_back(time.n_steps());
    return nodes;
}

}  // namespace

void DiscreteMdp::validate() const {
    if (n_states < 1) throw ParameterError("DiscreteMdp: no states");
    if (n_actions < 1) throw ParameterError("DiscreteMdp: empty action set");
    if (horizon < 1) throw ParameterError("DiscreteMdp: horizon must be at least one step");
    const std::size_t cells = static_cast<std::size_t>(horizon) * n_states * n_actions;
    if (stage_cost.size() != cells || transitions.size() != cells ||
        action_size.size() != static_cast<std::size_t>(n_actions) ||
        terminal.size() != static_cast<std::size_t>(n_states)) {
        throw DimensionError("DiscreteMdp: table sizes do not match n_states, n_actions, horizon");
    }
    for (const auto& row : transitions) {
        double total = 0.0;
        for (const auto& t : row) {
            if (t.next < 0 || t.next >= n_states || t.prob < 0.0) {
                throw ParameterError("DiscreteMdp: transition to an invalid state");
            }
            total += t.prob;
        }
        if (std::abs(total - 1.0) > 1e-12) throw ParameterError("DiscreteMdp: transition probabilities do not sum to 1");
    }
}

DpResult dp_best_response(const DiscreteMdp& mdp) {
    mdp.validate();
    const int S = mdp.n_states;
    DpResult r;
    r.n_states = S;
    r.value.assign(static_cast<std::size_t>(mdp.horizon + 1) * S, 0.0);
    r.policy.assign(static_cast<std::size_t>(mdp.horizon) * S, 0);
    std::copy(mdp.terminal.begin(), mdp.terminal.end(), r.value.begin() + static_cast<std::ptrdiff_t>(mdp.horizon) * S);

    for (int t = mdp.horizon - 1; t >= 0; --t) {
        const double* next = &r.value[static_cast<std::size_t>(t + 1) * S];
        for (int s = 0; s < S; ++s) {
            double best = INFINITY;
            int best_a = 0;
            for (int a = 0; a < mdp.n_actions; ++a) {
                const std::size_t k = mdp.at(t, s, a);
                double q = mdp.stage_cost[k];
                for (const auto& tr : mdp.transitions[k]) q += tr.prob * next[tr.next];
                if (q < best || (q == best && mdp.action_size[a] < mdp.action_size[best_a])) {
                    best = q;
                    best_a = a;
                }
            }
            r.value[static_cast<std::size_t>(t) * S + s] = best;
            r.policy[static_cast<std::size_t>(t) * S + s] = best_a;
        }
    }
    return r;
}

double evaluate_policy(const DiscreteMdp& mdp, std::span<const int> policy, int s0) {
    mdp.validate();
    const int S = mdp.n_states;
    if (policy.size() != static_cast<std::size_t>(mdp.horizon) * S) {
        throw DimensionError("evaluate_policy: policy needs horizon * n_states entries");
    }
    if (s0 < 0 || s0 >= S) throw ParameterError("evaluate_policy: start state out of range");
    std::vector<double> dist(S, 0.0), next(S);
    dist[s0] = 1.0;
    double cost = 0.0;
    for (int t = 0; t < mdp.horizon; ++t) {
        std::fill(next.begin(), next.end(), 0.0);
        for (int s = 0; s < S; ++s) {
            if (dist[s] == 0.0) continue;
            const int a = policy[static_cast<std::size_t>(t) * S + s];
            if (a < 0 || a >= mdp.n_actions) throw ParameterError("evaluate_policy: action index out of range");
            const std::size_t k = mdp.at(t, s, a);
            cost += dist[s] * mdp.stage_cost[k];
            for (const auto& tr : mdp.transitions[k]) next[tr.next] += dist[s] * tr.prob;
        }
        dist.swap(next);
    }
    for (int s = 0; s < S; ++s) cost += dist[s] * mdp.terminal[s];
    return cost;
}

std::vector<double> symmetric_actions(double max_abs, double delta) {
    if (!(delta > 0.0) || !(max_abs >= 0.0)) throw ParameterError("symmetric_actions: need delta > 0, max_abs >= 0");
    const int k = static_cast<int>(std::ceil(max_abs / delta - 1e-9));
    std::vector<double> a;
    a.reserve(2 * k + 1);
    for (int i = -k; i <= k; ++i) a.push_back(i * delta);
    return a;
}

EvMdp build_ev_mdp(const ev::EvParams& params, std::span<const double> price, const TimeGrid& time,
                   const EvLattice& lattice) {
    params.validate(time);
    if (static_cast<int>(price.size()) != time.n_nodes()) throw DimensionError("build_ev_mdp: price length");
    if (lattice.n_states < 2) throw ParameterError("build_ev_mdp: need at least 2 states");
    if (lattice.actions.empty()) throw ParameterError("build_ev_mdp: empty action set");

    EvMdp out;
    const int N = lattice.n_states;
    out.time_nodes = decision_nodes(time, lattice.stride);
    out.states.resize(N);
    for (int s = 0; s < N; ++s) out.states[s] = (s + 0.5) / N;

    auto& mdp = out.mdp;
    mdp.n_states = N;
    mdp.n_actions = static_cast<int>(lattice.actions.size());
    mdp.horizon = static_cast<int>(out.time_nodes.size()) - 1;
    for (double a : lattice.actions) mdp.action_size.push_back(std::abs(a));
    const std::size_t cells = static_cast<std::size_t>(mdp.horizon) * N * mdp.n_actions;
    mdp.stage_cost.resize(cells);
    mdp.transitions.resize(cells);
    for (int s = 0; s < N; ++s) mdp.terminal.push_back(params.terminal(out.states[s]));

    const double dt = time.dt();
    for (int t = 0; t < mdp.horizon; ++t) {
        // The action is held over the fine intervals [i0, i1); coefficients are piecewise constant.
        const int i0 = out.time_nodes[t];
        const int i1 = out.time_nodes[t + 1];
        const double h = (i1 - i0) * dt;
        double price_sum = 0.0, cost_sum = 0.0, consumed = 0.0, variance = 0.0;
        for (int i = i0; i < i1; ++i) {
            price_sum += dt * price[i];
            cost_sum += dt * 0.5 * params.H[i];
            consumed += dt * params.g[i];
            variance += dt * params.sigma[i] * params.sigma[i] * params.g[i] * params.g[i];
        }
        const double sd = std::sqrt(variance);
        for (int s = 0; s < N; ++s) {
            const double x = out.states[s];
            for (int a = 0; a < mdp.n_actions; ++a) {
                const double act = lattice.actions[a];
                const std::size_t k = mdp.at(t, s, a);
                const double mean = x + act * h - consumed;
                auto& row = mdp.transitions[k];
                const double branches[2] = {mean + sd, mean - sd};
                const int n_branches = sd > 0.0 ? 2 : 1;
                // State cost by the trapezoid rule between x and the (unrounded) end points.
                double end_cost = 0.0;
                for (int b = 0; b < n_branches; ++b) {
                    const double y = stop_at_walls(branches[b]);
                    const double p = 1.0 / n_branches;
                    end_cost += p * params.running(y);
                    int lo, hi;
                    double w;
                    split_1d(y, N, lo, hi, w);
                    push(row, lo, p * (1.0 - w));
                    push(row, hi, p * w);
                }
                mdp.stage_cost[k] = act * price_sum + cost_sum * act * act + 0.5 * h * (params.running(x) + end_cost);
            }
        }
    }
    return out;
}

PhevMdp build_phev_mdp(const phev::PhevParams& params, const phev::PhevPrices& prices, const TimeGrid& time,
                       const PhevLattice& lattice) {
    params.validate(time);
    if (static_cast<int>(prices.r1.size()) != time.n_nodes()) throw DimensionError("build_phev_mdp: r1 length");
    if (lattice.n1 < 2 || lattice.n2 < 2 || lattice.n1 > 10 || lattice.n2 > 10) {
        throw ParameterError("build_phev_mdp: lattice must be between 2x2 and 10x10");
    }
    if (lattice.actions.empty()) throw ParameterError("build_phev_mdp: empty action set");

    PhevMdp out;
    const int n1 = lattice.n1, n2 = lattice.n2, S = n1 * n2;
    const int A = static_cast<int>(lattice.actions.size());
    out.time_nodes = decision_nodes(time, lattice.stride);
    for (int a = 0; a < n1; ++a) {
        for (int b = 0; b < n2; ++b) {
            out.z1.push_back((a + 0.5) / n1);
            out.z2.push_back((b + 0.5) / n2);
        }
    }

    auto& mdp = out.mdp;
    mdp.n_states = S;
    mdp.n_actions = A * A;
    mdp.horizon = static_cast<int>(out.time_nodes.size()) - 1;
    for (int i = 0; i < A; ++i) {
        for (int j = 0; j < A; ++j) mdp.action_size.push_back(std::hypot(lattice.actions[i], lattice.actions[j]));
    }
    const std::size_t cells = static_cast<std::size_t>(mdp.horizon) * S * mdp.n_actions;
    mdp.stage_cost.resize(cells);
    mdp.transitions.resize(cells);
    for (int s = 0; s < S; ++s) mdp.terminal.push_back(params.terminal(out.z1[s] + out.z2[s]));

    const double dt = time.dt();
    for (int t = 0; t < mdp.horizon; ++t) {
        const int i0 = out.time_nodes[t];
        const int i1 = out.time_nodes[t + 1];
        const double h = (i1 - i0) * dt;
        double r1_sum = 0.0, q1_sum = 0.0, q2_sum = 0.0, consumed = 0.0;
        for (int i = i0; i < i1; ++i) {
            r1_sum += dt * prices.r1[i];
            q1_sum += dt * 0.5 * params.Q1[i];
            q2_sum += dt * 0.5 * params.Q2[i];
            consumed += dt * params.g[i];
        }
        for (int s = 0; s < S; ++s) {
            const double z1 = out.z1[s], z2 = out.z2[s];
            const double b1 = phev::beta(z1, z2);
            const double b2 = phev::beta_complement(z1, z2);
            const double running = h * params.running(z1 + z2);
            for (int i = 0; i < A; ++i) {
                const double m1 = lattice.actions[i];
                for (int j = 0; j < A; ++j) {
                    const double m2 = lattice.actions[j];
                    const std::size_t k = mdp.at(t, s, i * A + j);
                    mdp.stage_cost[k] = m1 * r1_sum + m2 * prices.r2 * h + q1_sum * m1 * m1 + q2_sum * m2 * m2 + running;
                    int lo1, hi1, lo2, hi2;
                    double w1, w2;
                    split_1d(stop_at_walls(z1 + m1 * h - b1 * consumed), n1, lo1, hi1, w1);
                    split_1d(stop_at_walls(z2 + m2 * h - b2 * consumed), n2, lo2, hi2, w2);
                    auto& row = mdp.transitions[k];
                    push(row, lo1 * n2 + lo2, (1.0 - w1) * (1.0 - w2));
                    push(row, lo1 * n2 + hi2, (1.0 - w1) * w2);
                    push(row, hi1 * n2 + lo2, w1 * (1.0 - w2));
                    push(row, hi1 * n2 + hi2, w1 * w2);
                }
            }
        }
    }
    return out;
}

double interpolate(std::span<const double> slice, const SpaceGrid1D& space, double x) noexcept {
    const int n = space.size();
    const double u = x * n - 0.5;
    if (u <= 0.0) return slice[0];
    if (u >= n - 1) return slice[n - 1];
    const int k = static_cast<int>(std::floor(u));
    const double w = u - k;
    return (1.0 - w) * slice[k] + w * slice[k + 1];
}

double interpolate(std::span<const double> slice, const SpaceGrid2D& space, double z1, double z2) noexcept {
    int a0, a1, b0, b1;
    double wa, wb;
    split_1d(z1, space.n1(), a0, a1, wa);
    split_1d(z2, space.n2(), b0, b1, wb);
    auto at = [&](int a, int b) { return slice[space.index(a, b)]; };
    return (1.0 - wa) * ((1.0 - wb) * at(a0, b0) + wb * at(a0, b1)) +
           wa * ((1.0 - wb) * at(a1, b0) + wb * at(a1, b1));
}

}  // namespace mfg::oracle
