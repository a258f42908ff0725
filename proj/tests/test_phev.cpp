#include <cmath>
#include <random>
#include <vector>

#include <gtest/gtest.h>

#include "mfg/errors.hpp"
#include "mfg/fd.hpp"
#include "mfg/phev.hpp"

using namespace mfg;
using namespace mfg::phev;

namespace {

PhevParams make_params(const TimeGrid& t, double g, double Q) {
    PhevParams p;
    const auto n = static_cast<std::size_t>(t.n_nodes());
    p.g.assign(n, g);
    p.Q1.assign(n, Q);
    p.Q2.assign(n, Q);
    return p;
}

Field2D repeat_slice(const TimeGrid& t, const SpaceGrid2D& s, const std::vector<double>& slice) {
    Field2D f(t.n_nodes(), s.n1(), s.n2());
    for (int i = 0; i < t.n_nodes(); ++i) std::copy(slice.begin(), slice.end(), f.slice(i).begin());
    return f;
}

PhevPrices flat_prices(const TimeGrid& t, double r1, double r2) {
    return {std::vector<double>(t.n_nodes(), r1), r2};
}

double max_abs_diff(std::span<const double> a, std::span<const double> b) {
    double m = 0.0;
    for (std::size_t k = 0; k < a.size(); ++k) m = std::max(m, std::abs(a[k] - b[k]));
    return m;
}

}  // namespace

TEST(Beta, Examples) {
    EXPECT_DOUBLE_EQ(beta(0.3, 0.3), 0.5);
    EXPECT_DOUBLE_EQ(beta(0.1, 0.4), 0.2);
    EXPECT_DOUBLE_EQ(beta(0.9, 0.1), 0.9);
    EXPECT_DOUBLE_EQ(beta(0.9, 0.1) + beta_complement(0.9, 0.1), 1.0);
    EXPECT_THROW(beta(0.0, 0.0), DomainError);
    EXPECT_THROW(beta_complement(0.0, 0.0), DomainError);
    EXPECT_THROW(beta_divergence(0.0, 0.0), DomainError);
}

TEST(Beta, DivergenceMatchesFiniteDifferences) {
    EXPECT_DOUBLE_EQ(beta_divergence(0.5, 0.5), 1.0);
    EXPECT_DOUBLE_EQ(beta_divergence(0.25, 0.75), 1.0);
    const double h = 1e-5;
    for (double z1 : {0.1, 0.35, 0.8}) {
        for (double z2 : {0.05, 0.5, 0.95}) {
            const double d1 = (beta(z1 + h, z2) - beta(z1 - h, z2)) / (2 * h);
            const double d2 = (beta(z1, z2 + h) - beta(z1, z2 - h)) / (2 * h);
            EXPECT_NEAR(beta_divergence(z1, z2), d1 - d2, 1e-6);
            EXPECT_DOUBLE_EQ(beta_divergence(z1, z2), 1.0 / (z1 + z2));
        }
    }
}

TEST(PhevPrice, StationarySymmetricDensity) {
    const TimeGrid t(0.0, 1.0, 8);
    const SpaceGrid2D s(10, 10);
    const auto params = make_params(t, 0.2, 125.0);
    const auto m = repeat_slice(t, s, std::vector<double>(s.size(), 1.0));
    const auto p = phev_price(m, params, s, t);
    for (double r : p.r1) EXPECT_NEAR(r, 0.6, 1e-12);
    EXPECT_DOUBLE_EQ(p.r2, 0.7);
}

TEST(PhevPrice, NegativeDemandIsClamped) {
    const TimeGrid t(0.0, 1.0, 4);
    const SpaceGrid2D s(10, 10);
    const auto params = make_params(t, 0.0, 125.0);
    // All mass moves from the top battery row to the bottom one: the battery mean falls.
    Field2D m(t.n_nodes(), s.n1(), s.n2());
    for (int i = 0; i < t.n_nodes(); ++i) {
        const int a = i == 0 ? 9 : 0;
        for (int b = 0; b < s.n2(); ++b) m(i, a, b) = 1.0 / (s.n2() * s.cell_area());
    }
    const auto p = phev_price(m, params, s, t);
    EXPECT_DOUBLE_EQ(p.r1[0], 0.5);
    EXPECT_DOUBLE_EQ(p.r1[1], 0.5);
}

TEST(PhevControls, Examples) {
    const TimeGrid t(0.0, 1.0, 2);
    const SpaceGrid2D s(8, 8);
    const auto params = make_params(t, 0.2, 125.0);
    Field2D v(t.n_nodes(), s.n1(), s.n2());
    for (int i = 0; i < t.n_nodes(); ++i)
        for (int a = 0; a < s.n1(); ++a)
            for (int b = 0; b < s.n2(); ++b) v(i, a, b) = -0.7 * s.node2(b);
    const auto c = phev_optimal_controls(v, flat_prices(t, 0.7, 0.7), params, s);
    for (double x : c.mu2.data()) EXPECT_NEAR(x, 0.0, 1e-14);
    for (double x : c.mu1.data()) EXPECT_NEAR(x, -0.0056, 1e-14);

    for (int i = 0; i < t.n_nodes(); ++i)
        for (int a = 0; a < s.n1(); ++a)
            for (int b = 0; b < s.n2(); ++b) v(i, a, b) = -s.node1(a);
    const auto c2 = phev_optimal_controls(v, flat_prices(t, 0.5, 0.7), params, s);
    for (double x : c2.mu1.data()) EXPECT_NEAR(x, 0.004, 1e-14);
}

TEST(PhevHjb, ConstantSolution) {
    const TimeGrid t(0.0, 1.0, 10);
    const SpaceGrid2D s(12, 12);
    auto params = make_params(t, 0.3, 20.0);
    params.r2 = 0.0;
    params.running = CostPreset::zero();
    params.terminal = CostPreset::constant(2.5);
    const auto v = phev_hjb_backward_sweep(flat_prices(t, 0.0, 0.0), params, t, s);
    for (double x : v.data()) EXPECT_NEAR(x, 2.5, 1e-14);
}

TEST(PhevHjb, TerminalConditionIsExact) {
    const TimeGrid t(0.0, 1.0, 6);
    const SpaceGrid2D s(10, 10);
    const auto params = make_params(t, 0.2, 125.0);
    const auto v = phev_hjb_backward_sweep(flat_prices(t, 0.6, 0.7), params, t, s);
    for (int a = 0; a < s.n1(); ++a)
        for (int b = 0; b < s.n2(); ++b)
            EXPECT_DOUBLE_EQ(v(t.n_steps(), a, b), params.terminal(s.node1(a) + s.node2(b)));
}

TEST(PhevHjb, LinearTerminalClosedFormFirstOrder) {
    const double c = 2.0, Q = 20.0;
    auto error = [&](int n_steps, int cells) {
        const TimeGrid t(0.0, 1.0, n_steps);
        const SpaceGrid2D s(cells, cells);
        auto params = make_params(t, 0.0, Q);
        params.running = CostPreset::zero();
        params.terminal = CostPreset::linear(-c);
        PhevPrices p{std::vector<double>(t.n_nodes()), 0.7};
        for (int i = 0; i < t.n_nodes(); ++i) p.r1[i] = 0.2 + 0.2 * t.node(i);
        const auto v = phev_hjb_backward_sweep(p, params, t, s);
        double worst = 0.0;
        for (int i = 0; i < t.n_nodes(); ++i) {
            // int_t^1 [(1.8 - 0.2 s)^2 + 1.3^2] ds / (2Q)
            auto F = [](double x) { return -std::pow(1.8 - 0.2 * x, 3) / 0.6 + 1.69 * x; };
            const double tail = (F(1.0) - F(t.node(i))) / (2.0 * Q);
            for (int a = 0; a < s.n1(); ++a) {
                for (int b = 0; b < s.n2(); ++b) {
                    if (s.node1(a) > 0.7 || s.node2(b) > 0.7) continue;
                    const double exact = -c * (s.node1(a) + s.node2(b)) - tail;
                    worst = std::max(worst, std::abs(v(i, a, b) - exact));
                }
            }
        }
        return worst;
    };
    const double coarse = error(10, 20), fine = error(20, 40);
    EXPECT_LE(coarse, 0.05 * (1.0 / 10 + 1.0 / 20));
    EXPECT_GE(coarse / fine, 1.8) << coarse << " " << fine;
}

TEST(PhevHjb, SymmetricDataGiveSymmetricValue) {
    const TimeGrid t(0.0, 1.0, 12);
    const SpaceGrid2D s(16, 16);
    auto params = make_params(t, 0.2, 125.0);
    params.r2 = 0.6;
    const auto v = phev_hjb_backward_sweep(flat_prices(t, 0.6, 0.6), params, t, s, Exec::serial);
    double worst = 0.0;
    for (int i = 0; i < t.n_nodes(); ++i)
        for (int a = 0; a < s.n1(); ++a)
            for (int b = 0; b < s.n2(); ++b) worst = std::max(worst, std::abs(v(i, a, b) - v(i, b, a)));
    EXPECT_LE(worst, 1e-8);

    const auto ctl = phev_optimal_controls(v, flat_prices(t, 0.6, 0.6), params, s);
    const auto m0 = truncated_gaussian_density(0.4, 0.4, 0.02, s);
    const auto m = phev_fpk_forward_sweep(ctl, m0, params, t, s, Exec::serial);
    worst = 0.0;
    for (int i = 0; i < t.n_nodes(); ++i)
        for (int a = 0; a < s.n1(); ++a)
            for (int b = 0; b < s.n2(); ++b) worst = std::max(worst, std::abs(m(i, a, b) - m(i, b, a)));
    EXPECT_LE(worst, 1e-8);
}

TEST(PhevHjb, SerialAndParallelAgree) {
    const TimeGrid t(0.0, 1.0, 12);
    const SpaceGrid2D s(16, 16);
    const auto params = make_params(t, 0.2, 125.0);
    const auto p = flat_prices(t, 0.65, 0.7);
    EXPECT_EQ(phev_hjb_backward_sweep(p, params, t, s, Exec::serial),
              phev_hjb_backward_sweep(p, params, t, s, Exec::parallel));
}

TEST(PhevFpk, ConsumptionMatchedByPurchasesIsStationary) {
    const TimeGrid t(0.0, 1.0, 10);
    const SpaceGrid2D s(12, 12);
    const double g = 0.3;
    const auto params = make_params(t, g, 125.0);
    PhevControls ctl{Field2D(t.n_nodes(), s.n1(), s.n2()), Field2D(t.n_nodes(), s.n1(), s.n2())};
    for (int i = 0; i < t.n_nodes(); ++i) {
        for (int a = 0; a < s.n1(); ++a) {
            for (int b = 0; b < s.n2(); ++b) {
                ctl.mu1(i, a, b) = g * beta(s.node1(a), s.node2(b));
                ctl.mu2(i, a, b) = g * beta_complement(s.node1(a), s.node2(b));
            }
        }
    }
    const auto m0 = truncated_gaussian_density(0.5, 0.4, 0.03, s);
    const auto m = phev_fpk_forward_sweep(ctl, m0, params, t, s);
    EXPECT_LE(max_abs_diff(m.slice(t.n_steps()), m0), 1e-14);
}

TEST(PhevFpk, MassAndPositivityUnderRandomControls) {
    const TimeGrid t(0.0, 1.0, 10);
    const SpaceGrid2D s(14, 14);
    const auto params = make_params(t, 0.25, 125.0);
    std::mt19937_64 rng(7);
    std::uniform_real_distribution<double> u(-0.4, 0.4);
    PhevControls ctl{Field2D(t.n_nodes(), s.n1(), s.n2()), Field2D(t.n_nodes(), s.n1(), s.n2())};
    for (double& x : ctl.mu1.data()) x = u(rng);
    for (double& x : ctl.mu2.data()) x = u(rng);
    const auto m = phev_fpk_forward_sweep(ctl, truncated_gaussian_density(0.5, 0.5, 0.05, s), params, t, s);
    for (int i = 0; i < t.n_nodes(); ++i) {
        EXPECT_NEAR(fd::integrate(m.slice(i), s), 1.0, 1e-8);
        for (double x : m.slice(i)) EXPECT_GE(x, 0.0);
    }
}

TEST(PhevFpk, UniformDriftMovesTheBatteryMean) {
    const TimeGrid t(0.0, 1.0, 20);
    const SpaceGrid2D s(40, 40);
    const auto params = make_params(t, 0.0, 125.0);
    PhevControls ctl{Field2D(t.n_nodes(), s.n1(), s.n2(), 0.2), Field2D(t.n_nodes(), s.n1(), s.n2())};
    const auto m = phev_fpk_forward_sweep(ctl, truncated_gaussian_density(0.3, 0.5, 0.004, s), params, t, s);
    const auto start = moments(m.slice(0), s);
    const auto end = moments(m.slice(t.n_steps()), s);
    EXPECT_NEAR(end.mean1 - start.mean1, 0.2, 2.0 * s.dz1());
    EXPECT_NEAR(end.mean2, start.mean2, 1e-10);
}

// The scheme integrates the conservative form; for smooth m it agrees with the expanded form
//   -(mu1 - beta g) m_z1 - (mu2 - (1-beta) g) m_z2 + g m / (z1 + z2)
// up to the first-order upwind error.
TEST(PhevFpk, ConservativeFormMatchesExpandedForm) {
    const double g = 0.4, mu1 = 0.1, mu2 = -0.05;
    auto density = [](double z1, double z2) {
        return std::exp(-((z1 - 0.5) * (z1 - 0.5) + (z2 - 0.5) * (z2 - 0.5)) / 0.04);
    };
    auto error = [&](int cells) {
        const SpaceGrid2D s(cells, cells);
        std::vector<double> m(s.size()), u1(s.size(), mu1), u2(s.size(), mu2);
        for (int a = 0; a < cells; ++a)
            for (int b = 0; b < cells; ++b) m[s.index(a, b)] = density(s.node1(a), s.node2(b));
        const auto rhs = phev_fpk_rhs(m, u1, u2, g, s);
        double worst = 0.0;
        for (int a = 0; a < cells; ++a) {
            for (int b = 0; b < cells; ++b) {
                const double z1 = s.node1(a), z2 = s.node2(b);
                if (z1 < 0.3 || z1 > 0.7 || z2 < 0.3 || z2 > 0.7) continue;
                const double f = density(z1, z2);
                const double f1 = -2.0 * (z1 - 0.5) / 0.04 * f;
                const double f2 = -2.0 * (z2 - 0.5) / 0.04 * f;
                const double expanded = -(mu1 - beta(z1, z2) * g) * f1 -
                                        (mu2 - beta_complement(z1, z2) * g) * f2 +
                                        g * f * beta_divergence(z1, z2);
                worst = std::max(worst, std::abs(rhs[s.index(a, b)] - expanded));
            }
        }
        return worst;
    };
    const double coarse = error(40), fine = error(80);
    EXPECT_LE(coarse, 1.0);
    EXPECT_GE(coarse / fine, 1.8) << coarse << " " << fine;
}

TEST(PhevCost, TerminalOnlyOnUniformDensity) {
    const TimeGrid t(0.0, 1.0, 4);
    for (int cells : {10, 20}) {
        const SpaceGrid2D s(cells, cells);
        auto params = make_params(t, 0.2, 125.0);
        params.running = CostPreset::zero();
        const PhevControls ctl{Field2D(t.n_nodes(), cells, cells), Field2D(t.n_nodes(), cells, cells)};
        const auto m = repeat_slice(t, s, std::vector<double>(s.size(), 1.0));
        // 10 E[(2 - U1 - U2)^2] = 10 (1 + 1/6)
        const double cost = phev_cost(ctl, m, flat_prices(t, 0.6, 0.7), params, t, s);
        EXPECT_NEAR(cost, 35.0 / 3.0, 10.0 * s.dz1() * s.dz1());
    }
}

namespace {

struct PhevProbe {
    double best = 0.0;
    double perturbed = 0.0;  // cost with both controls shifted by (d1, d2)
};

PhevProbe probe_phev(int n_steps, int cells, double d1, double d2) {
    const TimeGrid t(0.0, 1.0, n_steps);
    const SpaceGrid2D s(cells, cells);
    const auto params = make_params(t, 0.2, 125.0);
    PhevPrices p{std::vector<double>(t.n_nodes()), 0.7};
    for (int i = 0; i < t.n_nodes(); ++i) p.r1[i] = 0.6 + 0.2 * std::sin(5.0 * t.node(i));
    const auto m0 = truncated_gaussian_density(0.4, 0.3, 0.02, s);
    const auto v = phev_hjb_backward_sweep(p, params, t, s);
    const auto best = phev_optimal_controls(v, p, params, s);
    PhevControls c = best;
    for (double& x : c.mu1.data()) x += d1;
    for (double& x : c.mu2.data()) x += d2;
    return {phev_cost(best, phev_fpk_forward_sweep(best, m0, params, t, s), p, params, t, s),
            phev_cost(c, phev_fpk_forward_sweep(c, m0, params, t, s), p, params, t, s)};
}

}  // namespace

TEST(PhevCost, BestResponseBeatsPerturbations) {
    for (double d1 : {-0.02, 0.0, 0.02}) {
        for (double d2 : {-0.02, 0.0, 0.02}) {
            if (d1 == 0.0 && d2 == 0.0) continue;
            const auto probe = probe_phev(48, 32, d1, d2);
            EXPECT_LE(probe.best, probe.perturbed + 1e-6) << d1 << " " << d2;
        }
    }
}

// Selling slightly more than the HJB control gains O(dt + dz) on coarse grids; the gain shrinks.
TEST(PhevCost, FirstOrderGainVanishesUnderRefinement) {
    const double delta = 5e-3;
    auto slope = [&](int k) {
        const auto probe = probe_phev(24 * k, 16 * k, -delta, -delta);
        return (probe.perturbed - probe.best) / delta;
    };
    const double s1 = slope(1), s2 = slope(2), s4 = slope(4);
    EXPECT_GT(s2, s1);
    EXPECT_GT(s4, s2);
    EXPECT_LT(std::abs(s4), 0.5 * std::abs(s1)) << s1 << " " << s2 << " " << s4;
}

TEST(PhevHamiltonian, ControlMinimizesPointwise) {
    const TimeGrid t(0.0, 1.0, 12);
    const SpaceGrid2D s(12, 12);
    const auto params = make_params(t, 0.2, 125.0);
    const auto p = flat_prices(t, 0.65, 0.7);
    const auto v = phev_hjb_backward_sweep(p, params, t, s);
    auto ctl = phev_optimal_controls(v, p, params, s);
    const std::vector<double> deltas{1e-4, 1e-2};
    EXPECT_EQ(count_hamiltonian_violations(v, ctl, p, params, s, deltas), 0);
    ctl.mu1(3, 4, 5) += 0.01;
    EXPECT_GT(count_hamiltonian_violations(v, ctl, p, params, s, deltas), 0);
}

TEST(TruncatedGaussian, MassAndMoments) {
    const SpaceGrid2D s(40, 40);
    const auto m = truncated_gaussian_density(0.5, 0.5, 0.01, s);
    EXPECT_NEAR(fd::integrate(m, s), 1.0, 1e-12);
    const auto mo = moments(m, s);
    EXPECT_NEAR(mo.mean1, 0.5, 1e-12);
    EXPECT_NEAR(mo.mean2, 0.5, 1e-12);
    EXPECT_NEAR(mo.var1, 0.01, 0.01 * 0.02);
    EXPECT_NEAR(mo.correlation(), 0.0, 1e-12);
    EXPECT_THROW(truncated_gaussian_density(0.5, 0.5, 0.0, s), ParameterError);
}

TEST(Moments, CorrelatedDensity) {
    const SpaceGrid2D s(30, 30);
    std::vector<double> m(s.size());
    for (int a = 0; a < s.n1(); ++a)
        for (int b = 0; b < s.n2(); ++b) {
            const double d = s.node1(a) - s.node2(b);
            m[s.index(a, b)] = std::exp(-d * d / 0.01);
        }
    EXPECT_GT(moments(m, s).correlation(), 0.9);
}
