// Serial vs OpenMP timings of the sweeps, the fixed point and the Monte Carlo simulator.
// The second benchmark argument selects the execution policy: 0 serial, 1 parallel.

#include <cmath>
#include <vector>

#include <benchmark/benchmark.h>

#include "mfg/ev.hpp"
#include "mfg/oracle.hpp"
#include "mfg/phev.hpp"
#include "mfg/solver.hpp"

using namespace mfg;

namespace {

Exec policy(const benchmark::State& state) { return state.range(1) == 0 ? Exec::serial : Exec::parallel; }

ev::EvProblem ev_problem(int cells) {
    const TimeGrid t(0.0, 1.0, 143);
    const SpaceGrid1D s(cells);
    ev::EvParams p;
    const auto n = static_cast<std::size_t>(t.n_nodes());
    p.g.resize(n);
    p.d.resize(n);
    for (int i = 0; i < t.n_nodes(); ++i) {
        p.g[i] = 0.2 + 0.1 * std::sin(6.0 * t.node(i));
        p.d[i] = 0.6 + 0.3 * std::sin(9.0 * t.node(i));
    }
    p.sigma.assign(n, 0.1);
    p.H.assign(n, 30.0);
    return {t, s, p, ev::triangle_density(0.5, 0.2, s)};
}

phev::PhevProblem phev_problem(int cells) {
    const TimeGrid t(0.0, 1.0, 11);
    const SpaceGrid2D s(cells, cells);
    phev::PhevParams p;
    const auto n = static_cast<std::size_t>(t.n_nodes());
    p.g.assign(n, 0.2);
    p.Q1.assign(n, 125.0);
    p.Q2.assign(n, 125.0);
    return {t, s, p, phev::truncated_gaussian_density(0.4, 0.6, 0.02, s)};
}

void BM_EvHjb(benchmark::State& state) {
    const auto pb = ev_problem(static_cast<int>(state.range(0)));
    const std::vector<double> price(pb.time.n_nodes(), 1.0);
    for (auto _ : state) benchmark::DoNotOptimize(ev::hjb_backward_sweep(price, pb.params, pb.time, pb.space, policy(state)));
}

void BM_EvFpk(benchmark::State& state) {
    const auto pb = ev_problem(static_cast<int>(state.range(0)));
    const Field1D alpha(pb.time.n_nodes(), pb.space.size(), 0.2);
    for (auto _ : state) {
        benchmark::DoNotOptimize(ev::fpk_forward_sweep(alpha, pb.m0, pb.params, pb.time, pb.space, policy(state)));
    }
}

void BM_PhevHjb(benchmark::State& state) {
    const auto pb = phev_problem(static_cast<int>(state.range(0)));
    const phev::PhevPrices prices{std::vector<double>(pb.time.n_nodes(), 0.7), 0.7};
    for (auto _ : state) {
        benchmark::DoNotOptimize(phev::phev_hjb_backward_sweep(prices, pb.params, pb.time, pb.space, policy(state)));
    }
}

void BM_PhevFpk(benchmark::State& state) {
    const auto pb = phev_problem(static_cast<int>(state.range(0)));
    const Field2D mu(pb.time.n_nodes(), pb.space.n1(), pb.space.n2(), 0.1);
    const phev::PhevControls controls{mu, mu};
    for (auto _ : state) {
        benchmark::DoNotOptimize(
            phev::phev_fpk_forward_sweep(controls, pb.m0, pb.params, pb.time, pb.space, policy(state)));
    }
}

void BM_EvFixedPoint(benchmark::State& state) {
    auto pb = ev_problem(static_cast<int>(state.range(0)));
    pb.exec = policy(state);
    for (auto _ : state) benchmark::DoNotOptimize(solve_mfe(pb));
}

void BM_MonteCarlo(benchmark::State& state) {
    const auto pb = ev_problem(100);
    const Field1D alpha(pb.time.n_nodes(), pb.space.size(), 0.2);
    for (auto _ : state) {
        benchmark::DoNotOptimize(oracle::mc_population(alpha, pb.m0, pb.params, pb.time, pb.space,
                                                       static_cast<int>(state.range(0)), 1, policy(state)));
    }
}

}  // namespace

BENCHMARK(BM_EvHjb)->ArgsProduct({{100, 400}, {0, 1}})->Unit(benchmark::kMillisecond);
BENCHMARK(BM_EvFpk)->ArgsProduct({{100, 400}, {0, 1}})->Unit(benchmark::kMillisecond);
BENCHMARK(BM_PhevHjb)->ArgsProduct({{16, 64}, {0, 1}})->Unit(benchmark::kMillisecond);
BENCHMARK(BM_PhevFpk)->ArgsProduct({{16, 64}, {0, 1}})->Unit(benchmark::kMillisecond);
BENCHMARK(BM_EvFixedPoint)->ArgsProduct({{100}, {0, 1}})->Unit(benchmark::kMillisecond);
BENCHMARK(BM_MonteCarlo)->ArgsProduct({{20000}, {0, 1}})->Unit(benchmark::kMillisecond);

BENCHMARK_MAIN();
