#pragma once

// Damped Picard iteration on the density for the coupled HJB / FPK system:
//   price(m) -> HJB backward -> control -> FPK forward -> m_new,  m <- (1 - theta) m + theta m_new.

#include <vector>

#include "mfg/ev.hpp"
#include "mfg/grid.hpp"
#include "mfg/phev.hpp"

namespace mfg {

struct SolverOptions {
    int max_iters = 200;
    double tol = 1e-6;      // on sup_t || m_new(t) - m(t) ||_L1
    double damping = 0.5;   // theta in (0, 1]
    bool record_history = true;

    void validate() const;
};

template <class Value, class Density, class Price, class Control>
struct MfeSolution {
    Value v;
    Density m;
    Price p;
    Control alpha;
    // One entry per iteration when record_history is set, otherwise only the last residual.
    std::vector<double> residuals;
    bool converged = false;
    int iterations = 0;
};

using EvSolution = MfeSolution<Field1D, Field1D, std::vector<double>, Field1D>;
using PhevSolution = MfeSolution<Field2D, Field2D, phev::PhevPrices, phev::PhevControls>;

/// On convergence the returned fields are the iterate m that met the tolerance together with
/// the price, value and control computed from it, so they are mutually consistent.
/// Non-convergence is reported through `converged`; sweep divergence throws DivergenceError
/// tagged with the iteration.
EvSolution solve_mfe(const ev::EvProblem& problem, const SolverOptions& options = {});
PhevSolution solve_mfe(const phev::PhevProblem& problem, const SolverOptions& options = {});

struct VerifyReport {
    double price_deviation = 0.0;    // max |p(m) - p|
    double value_deviation = 0.0;    // max |HJB(p) - v|
    double control_deviation = 0.0;  // max |control(v, p) - alpha|
    double density_deviation = 0.0;  // sup_t L1 distance of one FPK pass from m
    double threshold = 0.0;
    bool passed = false;
};

/// Recomputes every coupling from the stored fields; passes iff all deviations <= 10 tol.
VerifyReport verify_solution(const EvSolution& sol, const ev::EvProblem& problem, double tol = 1e-6);
VerifyReport verify_solution(const PhevSolution& sol, const phev::PhevProblem& problem, double tol = 1e-6);

}  // namespace mfg
