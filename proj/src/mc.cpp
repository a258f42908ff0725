#include <algorithm>
#include <cmath>
#include <random>

#include "mfg/errors.hpp"
#include "mfg/fd.hpp"
#include "mfg/oracle.hpp"

namespace mfg::oracle {

namespace {

std::uint64_t splitmix64(std::uint64_t x) noexcept {
    x += 0x9e3779b97f4a7c15ULL;
    x = (x ^ (x >> 30)) * 0xbf58476d1ce4e5b9ULL;
    x = (x ^ (x >> 27)) * 0x94d049bb133111ebULL;
    return x ^ (x >> 31);
}

double reflect_unit(double y) noexcept {
    while (y < 0.0 || y > 1.0) y = y < 0.0 ? -y : 2.0 - y;
    return y;
}

// Position of quantile q under the piecewise-constant density m0.
double quantile(std::span<const double> m0, const SpaceGrid1D& space, double q) {
    const double dx = space.dx();
    double acc = 0.0;
    for (int j = 0; j < space.size(); ++j) {
        const double cell = m0[j] * dx;
        if (cell > 0.0 && acc + cell >= q) return (j + (q - acc) / cell) * dx;
        acc += cell;
    }
    for (int j = space.size() - 1; j >= 0; --j) {
        if (m0[j] > 0.0) return (j + 1) * dx;
    }
    return 0.5;
}

int bin_of(double x, int n) noexcept { return std::min(static_cast<int>(x * n), n - 1); }

void simulate_agent(int k, const Feedback& control, double x0, const ev::EvParams& params, const TimeGrid& time,
                    int n_cells, std::uint64_t seed, std::int64_t* counts) {
    std::mt19937_64 rng(splitmix64(seed ^ splitmix64(static_cast<std::uint64_t>(k))));
    std::normal_distribution<double> normal(0.0, 1.0);
    const double dt = time.dt() / kMcSubsteps;
    const double sqrt_dt = std::sqrt(dt);
    double x = x0;
    counts[bin_of(x, n_cells)] += 1;
    for (int i = 0; i < time.n_steps(); ++i) {
        const double g = params.g[i];
        const double noise = params.sigma[i] * g;
        for (int s = 0; s < kMcSubsteps; ++s) {
            double y = x + (control(i, x) - g) * dt;
            if (noise != 0.0) y -= noise * sqrt_dt * normal(rng);
            x = reflect_unit(y);
        }
        counts[static_cast<std::size_t>(i + 1) * n_cells + bin_of(x, n_cells)] += 1;
    }
}

}  // namespace

PopulationHistogram mc_population(const Feedback& control, std::span<const double> m0, const ev::EvParams& params,
                                  const TimeGrid& time, const SpaceGrid1D& space, int n_agents,
                                  std::uint64_t seed, Exec exec) {
    params.validate(time);
    if (n_agents < 1) throw ParameterError("mc_population: need at least one agent");
    if (static_cast<int>(m0.size()) != space.size()) throw DimensionError("mc_population: m0 does not match grid");
    const double mass = fd::integrate(m0, space);
    if (!(mass > 0.0)) throw InputError("mc_population: initial density has no mass");

    std::vector<double> start(n_agents);
    for (int k = 0; k < n_agents; ++k) start[k] = quantile(m0, space, mass * (k + 0.5) / n_agents);

    const int n = space.size();
    const std::size_t cells = static_cast<std::size_t>(time.n_nodes()) * n;
    PopulationHistogram out;
    out.n_agents = n_agents;
    out.counts.assign(cells, 0);

    if (exec == Exec::serial) {
        for (int k = 0; k < n_agents; ++k) simulate_agent(k, control, start[k], params, time, n, seed, out.counts.data());
    } else {
#pragma omp parallel
        {
            std::vector<std::int64_t> local(cells, 0);
#pragma omp for schedule(static)
            for (int k = 0; k < n_agents; ++k) simulate_agent(k, control, start[k], params, time, n, seed, local.data());
#pragma omp critical
            for (std::size_t c = 0; c < cells; ++c) out.counts[c] += local[c];
        }
    }

    out.density = Field1D(time.n_nodes(), n);
    const double scale = 1.0 / (static_cast<double>(n_agents) * space.dx());
    for (std::size_t c = 0; c < cells; ++c) out.density.data()[c] = static_cast<double>(out.counts[c]) * scale;
    return out;
}

PopulationHistogram mc_population(const Field1D& alpha, std::span<const double> m0, const ev::EvParams& params,
                                  const TimeGrid& time, const SpaceGrid1D& space, int n_agents,
                                  std::uint64_t seed, Exec exec) {
    if (alpha.n_time() != time.n_nodes() || alpha.n_space() != space.size()) {
        throw DimensionError("mc_population: control field does not match the grids");
    }
    const Feedback control = [&](int i, double x) { return interpolate(alpha.slice(i), space, x); };
    return mc_population(control, m0, params, time, space, n_agents, seed, exec);
}

}  // namespace mfg::oracle
