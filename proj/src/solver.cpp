#include "mfg/solver.hpp"

#include <algorithm>
#include <cmath>

#include "mfg/errors.hpp"
#include "mfg/fd.hpp"

namespace mfg {

namespace {

struct EvModel {
    const ev::EvProblem& pb;
    using Density = Field1D;

    Field1D constant_density() const {
        Field1D m(pb.time.n_nodes(), pb.space.size());
        for (int i = 0; i < m.n_time(); ++i) std::copy(pb.m0.begin(), pb.m0.end(), m.slice(i).begin());
        return m;
    }
    std::vector<double> price(const Field1D& m) const { return ev::ev_price(m, pb.params, pb.space, pb.time); }
    Field1D value(const std::vector<double>& p) const {
        return ev::hjb_backward_sweep(p, pb.params, pb.time, pb.space, pb.exec);
    }
    Field1D control(const Field1D& v, const std::vector<double>& p) const {
        return ev::optimal_control(v, p, pb.params, pb.space);
    }
    Field1D density(const Field1D& alpha) const {
        return ev::fpk_forward_sweep(alpha, pb.m0, pb.params, pb.time, pb.space, pb.exec);
    }
    double distance(const Field1D& a, const Field1D& b) const { return fd::sup_l1_distance(a, b, pb.space); }
};

struct PhevModel {
    const phev::PhevProblem& pb;
    using Density = Field2D;

    Field2D constant_density() const {
        Field2D m(pb.time.n_nodes(), pb.space.n1(), pb.space.n2());
        for (int i = 0; i < m.n_time(); ++i) std::copy(pb.m0.begin(), pb.m0.end(), m.slice(i).begin());
        return m;
    }
    phev::PhevPrices price(const Field2D& m) const { return phev::phev_price(m, pb.params, pb.space, pb.time); }
    Field2D value(const phev::PhevPrices& p) const {
        return phev::phev_hjb_backward_sweep(p, pb.params, pb.time, pb.space, pb.exec);
    }
    phev::PhevControls control(const Field2D& v, const phev::PhevPrices& p) const {
        return phev::phev_optimal_controls(v, p, pb.params, pb.space);
    }
    Field2D density(const phev::PhevControls& c) const {
        return phev::phev_fpk_forward_sweep(c, pb.m0, pb.params, pb.time, pb.space, pb.exec);
    }
    double distance(const Field2D& a, const Field2D& b) const { return fd::sup_l1_distance(a, b, pb.space); }
};

template <class Solution, class Model>
Solution fixed_point(const Model& model, const SolverOptions& opt) {
    opt.validate();
    Solution sol;
    auto m = model.constant_density();
    for (int k = 1; k <= opt.max_iters; ++k) {
        try {
            auto p = model.price(m);
            auto v = model.value(p);
            auto alpha = model.control(v, p);
            auto m_new = model.density(alpha);
            const double residual = model.distance(m_new, m);
            if (opt.record_history || sol.residuals.empty()) {
                sol.residuals.push_back(residual);
            } else {
                sol.residuals.back() = residual;
            }
            sol.iterations = k;
            if (!std::isfinite(residual)) throw DivergenceError("density residual is not finite", 0);
            if (residual <= opt.tol || k == opt.max_iters) {
                sol.converged = residual <= opt.tol;
                sol.m = std::move(m);
                sol.p = std::move(p);
                sol.v = std::move(v);
                sol.alpha = std::move(alpha);
                return sol;
            }
            auto& cur = m.data();
            const auto& next = m_new.data();
            for (std::size_t q = 0; q < cur.size(); ++q) {
                cur[q] = (1.0 - opt.damping) * cur[q] + opt.damping * next[q];
            }
        } catch (const DivergenceError& e) {
            if (e.iteration() >= 0) throw;
            throw DivergenceError(e, k);
        }
    }
    return sol;  // max_iters validated >= 1, not reached
}

double max_abs_diff(std::span<const double> a, std::span<const double> b) {
    if (a.size() != b.size()) return INFINITY;
    double d = 0.0;
    for (std::size_t k = 0; k < a.size(); ++k) d = std::max(d, std::abs(a[k] - b[k]));
    return d;
}

void finish(VerifyReport& r, double tol) {
    r.threshold = 10.0 * tol;
    // NaN deviations fail as well.
    r.passed = r.price_deviation <= r.threshold && r.value_deviation <= r.threshold &&
               r.control_deviation <= r.threshold && r.density_deviation <= r.threshold;
}

template <class Fn>
double guarded(Fn&& fn) {
    try {
        return fn();
    } catch (const Error&) {
        return INFINITY;
    }
}

}  // namespace

void SolverOptions::validate() const {
    if (max_iters < 1) throw ParameterError("SolverOptions.max_iters must be at least 1");
    if (!(tol > 0.0)) throw ParameterError("SolverOptions.tol must be positive");
    if (!(damping > 0.0 && damping <= 1.0)) throw ParameterError("SolverOptions.damping must lie in (0, 1]");
}

EvSolution solve_mfe(const ev::EvProblem& problem, const SolverOptions& options) {
    return fixed_point<EvSolution>(EvModel{problem}, options);
}

PhevSolution solve_mfe(const phev::PhevProblem& problem, const SolverOptions& options) {
    return fixed_point<PhevSolution>(PhevModel{problem}, options);
}

VerifyReport verify_solution(const EvSolution& sol, const ev::EvProblem& problem, double tol) {
    const EvModel model{problem};
    VerifyReport r;
    r.price_deviation = guarded([&] { return max_abs_diff(model.price(sol.m), sol.p); });
    r.value_deviation = guarded([&] { return max_abs_diff(model.value(sol.p).data(), sol.v.data()); });
    r.control_deviation =
        guarded([&] { return max_abs_diff(model.control(sol.v, sol.p).data(), sol.alpha.data()); });
    r.density_deviation = guarded([&] { return model.distance(model.density(sol.alpha), sol.m); });
    finish(r, tol);
    return r;
}

VerifyReport verify_solution(const PhevSolution& sol, const phev::PhevProblem& problem, double tol) {
    const PhevModel model{problem};
    VerifyReport r;
    r.price_deviation = guarded([&] {
        const auto p = model.price(sol.m);
        return std::max(max_abs_diff(p.r1, sol.p.r1), std::abs(p.r2 - sol.p.r2));
    });
    r.value_deviation = guarded([&] { return max_abs_diff(model.value(sol.p).data(), sol.v.data()); });
    r.control_deviation = guarded([&] {
        const auto c = model.control(sol.v, sol.p);
        return std::max(max_abs_diff(c.mu1.data(), sol.alpha.mu1.data()),
                        max_abs_diff(c.mu2.data(), sol.alpha.mu2.data()));
    });
    r.density_deviation = guarded([&] { return model.distance(model.density(sol.alpha), sol.m); });
    finish(r, tol);
    return r;
}

}  // namespace mfg
