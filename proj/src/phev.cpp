#include "mfg/phev.hpp"

#include <algorithm>
#include <cmath>
#include <string>

#include "mfg/errors.hpp"
#include "mfg/fd.hpp"
#include "mfg/kernels.hpp"
#include "mfg/sweep_util.hpp"

namespace mfg::phev {

namespace {

void check_series(const std::vector<double>& s, const TimeGrid& time, const char* name) {
    if (static_cast<int>(s.size()) != time.n_nodes()) {
        throw DimensionError(std::string("PhevParams.") + name + ": expected " +
                             std::to_string(time.n_nodes()) + " entries, got " +
                             std::to_string(s.size()));
    }
    for (double x : s) {
        if (!std::isfinite(x)) throw ParameterError(std::string("PhevParams.") + name + ": non-finite entry");
    }
}

void check_field(const Field2D& f, const TimeGrid& time, const SpaceGrid2D& space, const char* name) {
    if (f.n_time() != time.n_nodes() || f.n1() != space.n1() || f.n2() != space.n2()) {
        throw DimensionError(std::string(name) + ": field shape does not match the grids");
    }
}

// Per-cell coefficients that depend only on the grid and g.
struct SplitCoefficients {
    std::vector<double> battery_share;  // g * beta
    std::vector<double> tank_share;     // g * (1 - beta)
};

SplitCoefficients split_coefficients(const SpaceGrid2D& space, double g) {
    SplitCoefficients c{std::vector<double>(space.size()), std::vector<double>(space.size())};
    for (int a = 0; a < space.n1(); ++a) {
        for (int b = 0; b < space.n2(); ++b) {
            const double z1 = space.node1(a);
            const double z2 = space.node2(b);
            c.battery_share[space.index(a, b)] = g * beta(z1, z2);
            c.tank_share[space.index(a, b)] = g * beta_complement(z1, z2);
        }
    }
    return c;
}

double total_reserve_cost(const CostPreset& cost, const SpaceGrid2D& space, int a, int b) {
    return cost(space.node1(a) + space.node2(b));
}

void average_into(std::span<double> out, std::span<const double> x, std::span<const double> y) {
    for (std::size_t k = 0; k < out.size(); ++k) out[k] = 0.5 * (x[k] + y[k]);
}

}  // namespace

void PhevParams::validate(const TimeGrid& time) const {
    check_series(g, time, "g");
    check_series(Q1, time, "Q1");
    check_series(Q2, time, "Q2");
    for (std::size_t i = 0; i < Q1.size(); ++i) {
        if (!(Q1[i] > 0.0) || !(Q2[i] > 0.0)) {
            throw ParameterError("PhevParams: Q1 and Q2 must be positive");
        }
    }
    if (!(r2 >= 0.0)) throw ParameterError("PhevParams.r2: oil price must be nonnegative");
}

double beta(double z1, double z2) {
    const double s = z1 + z2;
    if (!(s > 0.0)) throw DomainError("beta: z1 + z2 must be positive");
    return z1 / s;
}

double beta_complement(double z1, double z2) {
    const double s = z1 + z2;
    if (!(s > 0.0)) throw DomainError("beta: z1 + z2 must be positive");
    return z2 / s;
}

double beta_divergence(double z1, double z2) {
    const double s = z1 + z2;
    if (!(s > 0.0)) throw DomainError("beta_divergence: z1 + z2 must be positive");
    return 1.0 / s;
}

std::vector<double> phev_demand(const Field2D& m, const PhevParams& params, const SpaceGrid2D& space,
                                const TimeGrid& time) {
    check_field(m, time, space, "phev_demand");
    std::vector<double> battery_mean(m.n_time()), beta_mass(m.n_time());
    for (int i = 0; i < m.n_time(); ++i) {
        const auto s = m.slice(i);
        double zb = 0.0, bb = 0.0;
        for (int a = 0; a < space.n1(); ++a) {
            for (int b = 0; b < space.n2(); ++b) {
                const double w = s[space.index(a, b)];
                zb += space.node1(a) * w;
                bb += beta(space.node1(a), space.node2(b)) * w;
            }
        }
        battery_mean[i] = zb * space.cell_area();
        beta_mass[i] = bb * space.cell_area();
    }
    const auto rate = fd::extend_to_nodes(fd::mean_rate(battery_mean, time));
    std::vector<double> demand(rate.size());
    for (std::size_t i = 0; i < rate.size(); ++i) demand[i] = params.g[i] * beta_mass[i] + rate[i];
    return demand;
}

PhevPrices phev_price(const Field2D& m, const PhevParams& params, const SpaceGrid2D& space,
                      const TimeGrid& time) {
    const auto demand = phev_demand(m, params, space, time);
    PhevPrices p{std::vector<double>(demand.size()), params.r2};
    for (std::size_t i = 0; i < demand.size(); ++i) p.r1[i] = params.price(demand[i], 0.0);
    return p;
}

PhevControls phev_optimal_controls(const Field2D& v, const PhevPrices& prices, const PhevParams& params,
                                   const SpaceGrid2D& space) {
    if (static_cast<int>(prices.r1.size()) != v.n_time() || v.n1() != space.n1() ||
        v.n2() != space.n2() || params.Q1.size() != prices.r1.size() ||
        params.Q2.size() != prices.r1.size()) {
        throw DimensionError("phev_optimal_controls: value field, prices and Q disagree in shape");
    }
    PhevControls c{Field2D(v.n_time(), v.n1(), v.n2()), Field2D(v.n_time(), v.n1(), v.n2())};
    for (int i = 0; i < v.n_time(); ++i) {
        if (!(params.Q1[i] > 0.0) || !(params.Q2[i] > 0.0)) {
            throw ParameterError("phev_optimal_controls: Q1 and Q2 must be positive");
        }
        const auto vs = v.slice(i);
        const auto d1 = fd::diff_central(vs, space, Axis::z1);
        const auto d2 = fd::diff_central(vs, space, Axis::z2);
        auto m1 = c.mu1.slice(i);
        auto m2 = c.mu2.slice(i);
        for (int k = 0; k < space.size(); ++k) {
            m1[k] = -(prices.r1[i] + d1[k]) / params.Q1[i];
            m2[k] = -(prices.r2 + d2[k]) / params.Q2[i];
        }
    }
    return c;
}

Field2D phev_hjb_backward_sweep(const PhevPrices& prices, const PhevParams& params,
                                const TimeGrid& time, const SpaceGrid2D& space, Exec exec,
                                SweepStats* stats) {
    params.validate(time);
    if (static_cast<int>(prices.r1.size()) != time.n_nodes()) {
        throw DimensionError("phev_hjb_backward_sweep: r1 needs one entry per time node");
    }
    const int size = space.size();
    std::vector<double> half_running(size);
    Field2D v(time.n_nodes(), space.n1(), space.n2());
    for (int a = 0; a < space.n1(); ++a) {
        for (int b = 0; b < space.n2(); ++b) {
            half_running[space.index(a, b)] = 0.5 * total_reserve_cost(params.running, space, a, b);
            v(time.n_steps(), a, b) = total_reserve_cost(params.terminal, space, a, b);
        }
    }
    if (stats) stats->substeps.assign(time.n_steps(), 0);

    std::vector<double> cur(size), first(size), z1_then_z2(size), z2_then_z1(size);
    for (int i = time.n_steps() - 1; i >= 0; --i) {
        const int c = i + 1;
        const double r1 = prices.r1[c];
        if (!std::isfinite(r1)) throw DivergenceError("phev_hjb_backward_sweep: non-finite price", c);
        const auto src = v.slice(c);
        std::copy(src.begin(), src.end(), cur.begin());
        const auto coef = split_coefficients(space, params.g[c]);

        double speed1 = 0.0, speed2 = 0.0;
        for (int a = 0; a < space.n1(); ++a) {
            for (int b = 0; b < space.n2(); ++b) {
                const std::size_t k = space.index(a, b);
                const double* row = cur.data() + b;                  // along z1
                const double* col = cur.data() + space.index(a, 0);  // along z2
                speed1 = std::max(speed1, kernels::upwind_speed(r1, params.Q1[c], coef.battery_share[k],
                                                                fd::backward_at(row, space.n2(), a, space.dz1()),
                                                                fd::forward_at(row, space.n2(), space.n1(), a, space.dz1())));
                speed2 = std::max(speed2, kernels::upwind_speed(prices.r2, params.Q2[c], coef.tank_share[k],
                                                                fd::backward_at(col, 1, b, space.dz2()),
                                                                fd::forward_at(col, 1, space.n2(), b, space.dz2())));
            }
        }
        const double rate = std::max(speed1 / space.dz1(), speed2 / space.dz2());
        const int substeps = detail::substep_count(time.dt(), rate, i);
        if (stats) stats->substeps[i] = substeps;

        const double h = time.dt() / substeps;
        const kernels::Hjb2dPass along_z1{Axis::z1, h, r1, params.Q1[c], coef.battery_share, half_running};
        const kernels::Hjb2dPass along_z2{Axis::z2, h, prices.r2, params.Q2[c], coef.tank_share, half_running};
        for (int s = 0; s < substeps; ++s) {
            kernels::hjb2d_pass(cur, first, space, along_z1, exec);
            kernels::hjb2d_pass(first, z1_then_z2, space, along_z2, exec);
            kernels::hjb2d_pass(cur, first, space, along_z2, exec);
            kernels::hjb2d_pass(first, z2_then_z1, space, along_z1, exec);
            average_into(cur, z1_then_z2, z2_then_z1);
        }
        if (!detail::all_finite(cur)) throw DivergenceError("phev_hjb_backward_sweep: value diverged", i);
        std::copy(cur.begin(), cur.end(), v.slice(i).begin());
    }
    return v;
}

Field2D phev_fpk_forward_sweep(const PhevControls& controls, std::span<const double> m0,
                               const PhevParams& params, const TimeGrid& time, const SpaceGrid2D& space,
                               Exec exec, SweepStats* stats) {
    params.validate(time);
    check_field(controls.mu1, time, space, "phev_fpk_forward_sweep mu1");
    check_field(controls.mu2, time, space, "phev_fpk_forward_sweep mu2");
    if (static_cast<int>(m0.size()) != space.size()) {
        throw DimensionError("phev_fpk_forward_sweep: initial density does not match the grid");
    }
    detail::check_initial_density(m0, fd::integrate(m0, space));

    const int size = space.size();
    Field2D m(time.n_nodes(), space.n1(), space.n2());
    std::copy(m0.begin(), m0.end(), m.slice(0).begin());
    if (stats) stats->substeps.assign(time.n_steps(), 0);

    std::vector<double> cur(m0.begin(), m0.end()), first(size), z1_then_z2(size), z2_then_z1(size);
    std::vector<double> u1(size), u2(size);
    for (int i = 0; i < time.n_steps(); ++i) {
        const auto coef = split_coefficients(space, params.g[i]);
        const auto mu1 = controls.mu1.slice(i);
        const auto mu2 = controls.mu2.slice(i);
        double umax1 = 0.0, umax2 = 0.0;
        for (int k = 0; k < size; ++k) {
            u1[k] = mu1[k] - coef.battery_share[k];
            u2[k] = mu2[k] - coef.tank_share[k];
            umax1 = std::max(umax1, std::abs(u1[k]));
            umax2 = std::max(umax2, std::abs(u2[k]));
        }
        const double rate = std::max(2.0 * umax1 / space.dz1(), 2.0 * umax2 / space.dz2());
        const int substeps = detail::substep_count(time.dt(), rate, i);
        if (stats) stats->substeps[i] = substeps;

        const double h = time.dt() / substeps;
        const kernels::Fpk2dPass along_z1{Axis::z1, h, u1};
        const kernels::Fpk2dPass along_z2{Axis::z2, h, u2};
        for (int s = 0; s < substeps; ++s) {
            kernels::fpk2d_pass(cur, first, space, along_z1, exec);
            kernels::fpk2d_pass(first, z1_then_z2, space, along_z2, exec);
            kernels::fpk2d_pass(cur, first, space, along_z2, exec);
            kernels::fpk2d_pass(first, z2_then_z1, space, along_z1, exec);
            average_into(cur, z1_then_z2, z2_then_z1);
            detail::clamp_density(cur, i + 1);
        }
        std::copy(cur.begin(), cur.end(), m.slice(i + 1).begin());
    }
    return m;
}

std::vector<double> phev_fpk_rhs(std::span<const double> m, std::span<const double> mu1,
                                 std::span<const double> mu2, double g, const SpaceGrid2D& space) {
    const auto coef = split_coefficients(space, g);
    std::vector<double> u1(space.size()), u2(space.size());
    for (int k = 0; k < space.size(); ++k) {
        u1[k] = mu1[k] - coef.battery_share[k];
        u2[k] = mu2[k] - coef.tank_share[k];
    }
    const auto div1 = fd::diff_upwind(m, u1, space, Axis::z1);
    const auto div2 = fd::diff_upwind(m, u2, space, Axis::z2);
    std::vector<double> rhs(space.size());
    for (int k = 0; k < space.size(); ++k) rhs[k] = -div1[k] - div2[k];
    return rhs;
}

double phev_cost(const PhevControls& controls, const Field2D& m, const PhevPrices& prices,
                 const PhevParams& params, const TimeGrid& time, const SpaceGrid2D& space) {
    check_field(controls.mu1, time, space, "phev_cost mu1");
    check_field(controls.mu2, time, space, "phev_cost mu2");
    check_field(m, time, space, "phev_cost density");
    if (static_cast<int>(prices.r1.size()) != time.n_nodes()) {
        throw DimensionError("phev_cost: r1 needs one entry per time node");
    }
    double total = 0.0;
    for (int i = 0; i < time.n_steps(); ++i) {
        const auto ms = m.slice(i);
        const auto m1 = controls.mu1.slice(i);
        const auto m2 = controls.mu2.slice(i);
        double acc = 0.0;
        for (int a = 0; a < space.n1(); ++a) {
            for (int b = 0; b < space.n2(); ++b) {
                const std::size_t k = space.index(a, b);
                const double integrand = m1[k] * prices.r1[i] + m2[k] * prices.r2 +
                                         0.5 * params.Q1[i] * m1[k] * m1[k] +
                                         0.5 * params.Q2[i] * m2[k] * m2[k] +
                                         total_reserve_cost(params.running, space, a, b);
                acc += ms[k] * integrand;
            }
        }
        total += time.dt() * acc * space.cell_area();
    }
    const auto mt = m.slice(time.n_steps());
    double terminal = 0.0;
    for (int a = 0; a < space.n1(); ++a) {
        for (int b = 0; b < space.n2(); ++b) {
            terminal += mt[space.index(a, b)] * total_reserve_cost(params.terminal, space, a, b);
        }
    }
    return total + terminal * space.cell_area();
}

double hamiltonian(double mu1, double mu2, double r1, double r2, double Q1, double Q2, double v1,
                   double v2) noexcept {
    return mu1 * r1 + mu2 * r2 + 0.5 * Q1 * mu1 * mu1 + 0.5 * Q2 * mu2 * mu2 + mu1 * v1 + mu2 * v2;
}

int count_hamiltonian_violations(const Field2D& v, const PhevControls& controls, const PhevPrices& prices,
                                 const PhevParams& params, const SpaceGrid2D& space,
                                 std::span<const double> deltas) {
    int violations = 0;
    for (int i = 0; i < v.n_time(); ++i) {
        const auto vs = v.slice(i);
        const auto d1 = fd::diff_central(vs, space, Axis::z1);
        const auto d2 = fd::diff_central(vs, space, Axis::z2);
        const auto m1 = controls.mu1.slice(i);
        const auto m2 = controls.mu2.slice(i);
        for (int k = 0; k < space.size(); ++k) {
            auto ham = [&](double a, double b) {
                return hamiltonian(a, b, prices.r1[i], prices.r2, params.Q1[i], params.Q2[i], d1[k], d2[k]);
            };
            const double at = ham(m1[k], m2[k]);
            for (double delta : deltas) {
                for (int p = -1; p <= 1; ++p) {
                    for (int q = -1; q <= 1; ++q) {
                        if ((p != 0 || q != 0) && ham(m1[k] + p * delta, m2[k] + q * delta) < at) {
                            ++violations;
                        }
                    }
                }
            }
        }
    }
    return violations;
}

std::vector<double> truncated_gaussian_density(double mean1, double mean2, double variance,
                                               const SpaceGrid2D& space) {
    if (!(variance > 0.0)) throw ParameterError("truncated_gaussian_density: variance must be positive");
    std::vector<double> m(space.size());
    for (int a = 0; a < space.n1(); ++a) {
        for (int b = 0; b < space.n2(); ++b) {
            const double d1 = space.node1(a) - mean1;
            const double d2 = space.node2(b) - mean2;
            m[space.index(a, b)] = std::exp(-(d1 * d1 + d2 * d2) / (2.0 * variance));
        }
    }
    const double mass = fd::integrate(m, space);
    if (!(mass > 0.0)) throw InputError("truncated_gaussian_density: no mass on the grid");
    for (double& x : m) x /= mass;
    return m;
}

double DensityMoments::correlation() const {
    const double denom = std::sqrt(var1 * var2);
    return denom > 0.0 ? cov / denom : 0.0;
}

DensityMoments moments(std::span<const double> m, const SpaceGrid2D& space) {
    if (static_cast<int>(m.size()) != space.size()) throw DimensionError("moments: slice does not match grid");
    const double w = space.cell_area();
    DensityMoments r;
    double mass = 0.0;
    for (int a = 0; a < space.n1(); ++a) {
        for (int b = 0; b < space.n2(); ++b) {
            const double p = m[space.index(a, b)] * w;
            mass += p;
            r.mean1 += p * space.node1(a);
            r.mean2 += p * space.node2(b);
        }
    }
    r.mean1 /= mass;
    r.mean2 /= mass;
    for (int a = 0; a < space.n1(); ++a) {
        for (int b = 0; b < space.n2(); ++b) {
            const double p = m[space.index(a, b)] * w;
            const double d1 = space.node1(a) - r.mean1;
            const double d2 = space.node2(b) - r.mean2;
            r.var1 += p * d1 * d1;
            r.var2 += p * d2 * d2;
            r.cov += p * d1 * d2;
        }
    }
    r.var1 /= mass;
    r.var2 /= mass;
    r.cov /= mass;
    return r;
}

}  // namespace mfg::phev
