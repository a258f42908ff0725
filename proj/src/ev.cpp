#include "mfg/ev.hpp"

#include <algorithm>
#include <cmath>
#include <string>

#include "mfg/errors.hpp"
#include "mfg/fd.hpp"
#include "mfg/kernels.hpp"
#include "mfg/sweep_util.hpp"

namespace mfg::ev {

namespace {

void check_series(const std::vector<double>& s, const TimeGrid& time, const char* name) {
    if (static_cast<int>(s.size()) != time.n_nodes()) {
        throw DimensionError(std::string("EvParams.") + name + ": expected " +
                             std::to_string(time.n_nodes()) + " entries, got " +
                             std::to_string(s.size()));
    }
    for (double x : s) {
        if (!std::isfinite(x)) throw ParameterError(std::string("EvParams.") + name + ": non-finite entry");
    }
}

void check_field(const Field1D& f, const TimeGrid& time, const SpaceGrid1D& space, const char* name) {
    if (f.n_time() != time.n_nodes() || f.n_space() != space.size()) {
        throw DimensionError(std::string(name) + ": field is " + std::to_string(f.n_time()) + "x" +
                             std::to_string(f.n_space()) + ", grid is " +
                             std::to_string(time.n_nodes()) + "x" + std::to_string(space.size()));
    }
}

}  // namespace

void EvParams::validate(const TimeGrid& time) const {
    check_series(g, time, "g");
    check_series(sigma, time, "sigma");
    check_series(H, time, "H");
    check_series(d, time, "d");
    for (double h : H) {
        if (!(h > 0.0)) throw ParameterError("EvParams.H: trading-cost coefficient must be positive");
    }
    for (double s : sigma) {
        if (s < 0.0) throw ParameterError("EvParams.sigma: must be nonnegative");
    }
}

std::vector<double> ev_demand(const Field1D& m, const EvParams& params, const SpaceGrid1D& space,
                              const TimeGrid& time) {
    check_field(m, time, space, "ev_demand");
    const auto rate = fd::extend_to_nodes(fd::mean_rate(m, space, time));
    std::vector<double> demand(rate.size());
    for (std::size_t i = 0; i < rate.size(); ++i) demand[i] = params.g[i] + rate[i];
    return demand;
}

std::vector<double> ev_price(const Field1D& m, const EvParams& params, const SpaceGrid1D& space,
                             const TimeGrid& time) {
    const auto demand = ev_demand(m, params, space, time);
    std::vector<double> p(demand.size());
    for (std::size_t i = 0; i < demand.size(); ++i) p[i] = params.price(demand[i], params.d[i]);
    return p;
}

Field1D optimal_control(const Field1D& v, std::span<const double> price, const EvParams& params,
                        const SpaceGrid1D& space) {
    if (static_cast<int>(price.size()) != v.n_time() || v.n_space() != space.size() ||
        params.H.size() != price.size()) {
        throw DimensionError("optimal_control: value field, price and H disagree in shape");
    }
    Field1D alpha(v.n_time(), v.n_space());
    for (int i = 0; i < v.n_time(); ++i) {
        const double H = params.H[i];
        if (!(H > 0.0)) throw ParameterError("optimal_control: H must be positive");
        const auto vs = v.slice(i);
        auto as = alpha.slice(i);
        for (int j = 0; j < space.size(); ++j) {
            const double vx = fd::central_at(vs.data(), 1, space.size(), j, space.dx());
            as[j] = -(vx + price[i]) / H;
        }
    }
    return alpha;
}

Field1D hjb_backward_sweep(std::span<const double> price, const EvParams& params,
                           const TimeGrid& time, const SpaceGrid1D& space, Exec exec,
                           SweepStats* stats) {
    params.validate(time);
    if (static_cast<int>(price.size()) != time.n_nodes()) {
        throw DimensionError("hjb_backward_sweep: price needs one entry per time node");
    }
    const int n = space.size();
    const double dx = space.dx();
    std::vector<double> running(n);
    Field1D v(time.n_nodes(), n);
    for (int j = 0; j < n; ++j) {
        running[j] = params.running(space.node(j));
        v(time.n_steps(), j) = params.terminal(space.node(j));
    }
    if (stats) stats->substeps.assign(time.n_steps(), 0);

    std::vector<double> cur(n), next(n);
    for (int i = time.n_steps() - 1; i >= 0; --i) {
        const int c = i + 1;
        if (!std::isfinite(price[c])) throw DivergenceError("hjb_backward_sweep: non-finite price", c);
        const auto src = v.slice(c);
        std::copy(src.begin(), src.end(), cur.begin());

        const double H = params.H[c];
        const double g = params.g[c];
        const double diffusion = 0.5 * params.sigma[c] * params.sigma[c] * g * g;
        double speed = 0.0;
        for (int j = 0; j < n; ++j) {
            const double dm = fd::backward_at(cur.data(), 1, j, dx);
            const double dp = fd::forward_at(cur.data(), 1, n, j, dx);
            speed = std::max(speed, kernels::upwind_speed(price[c], H, g, dm, dp));
        }
        const int substeps = detail::substep_count(time.dt(), speed / dx + 2.0 * diffusion / (dx * dx), i);
        if (stats) stats->substeps[i] = substeps;

        kernels::Hjb1dStep step{time.dt() / substeps, price[c], H, g, diffusion, running};
        for (int s = 0; s < substeps; ++s) {
            kernels::hjb1d_step(cur, next, space, step, exec);
            cur.swap(next);
        }
        if (!detail::all_finite(cur)) throw DivergenceError("hjb_backward_sweep: value diverged", i);
        std::copy(cur.begin(), cur.end(), v.slice(i).begin());
    }
    return v;
}

Field1D fpk_forward_sweep(const Field1D& alpha, std::span<const double> m0, const EvParams& params,
                          const TimeGrid& time, const SpaceGrid1D& space, Exec exec,
                          SweepStats* stats) {
    params.validate(time);
    check_field(alpha, time, space, "fpk_forward_sweep control");
    if (static_cast<int>(m0.size()) != space.size()) {
        throw DimensionError("fpk_forward_sweep: initial density does not match the grid");
    }
    detail::check_initial_density(m0, fd::integrate(m0, space));

    const int n = space.size();
    const double dx = space.dx();
    Field1D m(time.n_nodes(), n);
    std::copy(m0.begin(), m0.end(), m.slice(0).begin());
    if (stats) stats->substeps.assign(time.n_steps(), 0);

    std::vector<double> cur(m0.begin(), m0.end()), next(n), drift(n);
    for (int i = 0; i < time.n_steps(); ++i) {
        const double g = params.g[i];
        const double diffusion = 0.5 * params.sigma[i] * params.sigma[i] * g * g;
        const auto a = alpha.slice(i);
        double umax = 0.0;
        for (int j = 0; j < n; ++j) {
            drift[j] = a[j] - g;
            umax = std::max(umax, std::abs(drift[j]));
        }
        const int substeps = detail::substep_count(time.dt(), 2.0 * umax / dx + 2.0 * diffusion / (dx * dx), i);
        if (stats) stats->substeps[i] = substeps;

        kernels::Fpk1dStep step{time.dt() / substeps, diffusion, drift};
        for (int s = 0; s < substeps; ++s) {
            kernels::fpk1d_step(cur, next, space, step, exec);
            detail::clamp_density(next, i + 1);
            cur.swap(next);
        }
        std::copy(cur.begin(), cur.end(), m.slice(i + 1).begin());
    }
    return m;
}

double ev_cost(const Field1D& alpha, const Field1D& m, std::span<const double> price,
               const EvParams& params, const TimeGrid& time, const SpaceGrid1D& space) {
    check_field(alpha, time, space, "ev_cost control");
    check_field(m, time, space, "ev_cost density");
    if (static_cast<int>(price.size()) != time.n_nodes()) {
        throw DimensionError("ev_cost: price needs one entry per time node");
    }
    const double dx = space.dx();
    double total = 0.0;
    for (int i = 0; i < time.n_steps(); ++i) {
        const auto a = alpha.slice(i);
        const auto ms = m.slice(i);
        double acc = 0.0;
        for (int j = 0; j < space.size(); ++j) {
            const double integrand =
                a[j] * price[i] + 0.5 * params.H[i] * a[j] * a[j] + params.running(space.node(j));
            acc += ms[j] * integrand;
        }
        total += time.dt() * acc * dx;
    }
    const auto mt = m.slice(time.n_steps());
    double terminal = 0.0;
    for (int j = 0; j < space.size(); ++j) terminal += mt[j] * params.terminal(space.node(j));
    return total + terminal * dx;
}

double hamiltonian(double a, double price, double H, double vx) noexcept {
    return a * price + 0.5 * H * a * a + a * vx;
}

int count_hamiltonian_violations(const Field1D& v, const Field1D& alpha, std::span<const double> price,
                                 const EvParams& params, const SpaceGrid1D& space,
                                 std::span<const double> deltas) {
    int violations = 0;
    for (int i = 0; i < v.n_time(); ++i) {
        const auto vs = v.slice(i);
        const auto as = alpha.slice(i);
        for (int j = 0; j < space.size(); ++j) {
            const double vx = fd::central_at(vs.data(), 1, space.size(), j, space.dx());
            const double at = hamiltonian(as[j], price[i], params.H[i], vx);
            for (double delta : deltas) {
                if (hamiltonian(as[j] + delta, price[i], params.H[i], vx) < at ||
                    hamiltonian(as[j] - delta, price[i], params.H[i], vx) < at) {
                    ++violations;
                }
            }
        }
    }
    return violations;
}

std::vector<double> triangle_density(double center, double halfwidth, const SpaceGrid1D& space) {
    if (!(halfwidth > 0.0)) throw ParameterError("triangle_density: half-width must be positive");
    std::vector<double> m(space.size());
    for (int j = 0; j < space.size(); ++j) {
        m[j] = std::max(0.0, 1.0 - std::abs(space.node(j) - center) / halfwidth) / halfwidth;
    }
    const double mass = fd::integrate(m, space);
    if (!(mass > 0.0)) throw InputError("triangle_density: support contains no grid cell");
    for (double& x : m) x /= mass;
    return m;
}

}  // namespace mfg::ev
