#include "mfg/cli.hpp"

#include <algorithm>
#include <chrono>
#include <cstdio>
#include <ostream>

#include <CLI11.hpp>

#include "mfg/errors.hpp"
#include "mfg/oracle.hpp"
#include "mfg/scenario.hpp"
#include "mfg/solver.hpp"

namespace mfg::cli {

namespace fs = std::filesystem;

namespace {

std::string fmt(double x) {
    char buf[32];
    std::snprintf(buf, sizeof buf, "%.6g", x);
    return buf;
}

const char* verdict(bool ok) { return ok ? "PASS" : "FAIL"; }

int oracle_ev(const io::RunDirectory& run, const OracleOptions& o, std::ostream& out) {
    const auto problem = io::build_ev_problem(run.scenario);
    const auto dp = oracle::ev_dp_agreement(problem, *run.ev, o.states, o.stride > 0 ? o.stride : 16, o.action_step);
    const bool dp_ok = dp.max_relative_error <= oracle::kDpRelativeTolerance;
    out << "dp: " << o.states << " states, " << dp.horizon << " decision steps, " << dp.n_actions
        << " actions; max relative deviation of v(0) " << fmt(dp.max_relative_error) << " at x=" << fmt(dp.worst_z1)
        << " (threshold " << fmt(oracle::kDpRelativeTolerance) << ") " << verdict(dp_ok) << '\n';

    const auto mc = oracle::ev_mc_agreement(problem, *run.ev, o.agents, o.seed);
    const bool mc_ok = mc.sup_l1 <= oracle::kMcL1Tolerance;
    out << "mc: " << o.agents << " agents, seed " << o.seed << "; sup-t L1 distance " << fmt(mc.sup_l1)
        << " at t=" << fmt(mc.worst_t) << " (threshold " << fmt(oracle::kMcL1Tolerance) << ") " << verdict(mc_ok)
        << '\n';
    return dp_ok && mc_ok ? kExitOk : kExitCheckFailed;
}

int oracle_phev(const io::RunDirectory& run, const OracleOptions& o, std::ostream& out) {
    const auto problem = io::build_phev_problem(run.scenario);
    const int n = std::min(o.states, 10);
    const auto dp = oracle::phev_dp_agreement(problem, *run.phev, n, o.stride > 0 ? o.stride : 1, 5.0 * o.action_step);
    const bool dp_ok = dp.max_relative_error <= oracle::kDpRelativeTolerance;
    out << "dp: " << n << "x" << n << " states, " << dp.horizon << " decision steps, " << dp.n_actions
        << " actions; max relative deviation of v(0) " << fmt(dp.max_relative_error) << " at z=(" << fmt(dp.worst_z1)
        << ", " << fmt(dp.worst_z2) << ") (threshold " << fmt(oracle::kDpRelativeTolerance) << ") "
        << verdict(dp_ok) << '\n';
    out << "mc: skipped (the population simulator covers the EV model only)\n";
    return dp_ok ? kExitOk : kExitCheckFailed;
}

}  // namespace

int cmd_run(const fs::path& scenario, const fs::path& out_dir, const std::vector<std::string>& overrides,
            std::ostream& out, std::ostream& err) {
    try {
        const auto config = io::load_scenario(scenario, overrides);
        const auto start = std::chrono::steady_clock::now();
        auto elapsed = [&] {
            return std::chrono::duration<double>(std::chrono::steady_clock::now() - start).count();
        };
        bool converged = false;
        int iterations = 0;
        double residual = 0.0;
        std::vector<std::string> files;
        if (config.model == io::Model::ev) {
            const auto sol = solve_mfe(io::build_ev_problem(config), config.solver);
            files = io::export_results(sol, config, out_dir, {elapsed()});
            converged = sol.converged;
            iterations = sol.iterations;
            residual = sol.residuals.empty() ? 0.0 : sol.residuals.back();
        } else {
            const auto sol = solve_mfe(io::build_phev_problem(config), config.solver);
            files = io::export_results(sol, config, out_dir, {elapsed()});
            converged = sol.converged;
            iterations = sol.iterations;
            residual = sol.residuals.empty() ? 0.0 : sol.residuals.back();
        }
        out << config.name << ": " << (converged ? "converged" : "did not converge") << " after " << iterations
            << " iterations, residual " << fmt(residual) << "; wrote " << files.size() << " files to "
            << out_dir.string() << '\n';
        return converged ? kExitOk : kExitNotConverged;
    } catch (const std::exception& e) {
        err << "error: " << e.what() << '\n';
        return kExitError;
    }
}

int cmd_verify(const fs::path& run_dir, std::ostream& out, std::ostream& err) {
    try {
        const auto run = io::read_run(run_dir);
        const double tol = run.scenario.solver.tol;
        const VerifyReport r = run.ev ? verify_solution(*run.ev, io::build_ev_problem(run.scenario), tol)
                                      : verify_solution(*run.phev, io::build_phev_problem(run.scenario), tol);
        out << "price deviation   " << fmt(r.price_deviation) << '\n'
            << "value deviation   " << fmt(r.value_deviation) << '\n'
            << "control deviation " << fmt(r.control_deviation) << '\n'
            << "density deviation " << fmt(r.density_deviation) << '\n'
            << "threshold " << fmt(r.threshold) << ": " << verdict(r.passed) << '\n';
        return r.passed ? kExitOk : kExitCheckFailed;
    } catch (const std::exception& e) {
        err << "error: " << e.what() << '\n';
        return kExitError;
    }
}

int cmd_oracle(const fs::path& run_dir, const OracleOptions& options, std::ostream& out, std::ostream& err) {
    try {
        if (options.states < 2) throw ParameterError("--states must be at least 2");
        if (options.agents < 1000) throw ParameterError("--agents must be at least 1000");
        const auto run = io::read_run(run_dir);
        return run.ev ? oracle_ev(run, options, out) : oracle_phev(run, options, out);
    } catch (const std::exception& e) {
        err << "error: " << e.what() << '\n';
        return kExitError;
    }
}

int cmd_schema(std::ostream& out) {
    out << io::scenario_schema().dump(2) << '\n';
    return kExitOk;
}

int main(int argc, char** argv, std::ostream& out, std::ostream& err) {
    CLI::App app{"Mean field game solver for EV and PHEV electricity trading"};
    app.require_subcommand(1);

    std::string scenario, out_dir, run_dir;
    std::vector<std::string> overrides;
    OracleOptions oracle_opts;

    auto* run = app.add_subcommand("run", "Solve a scenario and export the results");
    run->add_option("scenario", scenario, "Scenario file (JSON)")->required();
    run->add_option("--out", out_dir, "Output directory")->required();
    run->add_option("--set", overrides, "Override a scenario key, e.g. --set solver.tol=1e-8");

    auto* verify = app.add_subcommand("verify", "Re-check the fixed point stored in a run directory");
    verify->add_option("dir", run_dir, "Run directory")->required();

    auto* oracle = app.add_subcommand("oracle", "Cross-check a run with dynamic programming and Monte Carlo");
    oracle->add_option("dir", run_dir, "Run directory")->required();
    oracle->add_option("--states", oracle_opts.states, "DP lattice states")->capture_default_str();
    oracle->add_option("--agents", oracle_opts.agents, "Monte Carlo agents")->capture_default_str();
    oracle->add_option("--seed", oracle_opts.seed, "Monte Carlo seed")->capture_default_str();

    auto* schema = app.add_subcommand("schema", "Print the scenario JSON schema");

    try {
        app.parse(argc, argv);
    } catch (const CLI::ParseError& e) {
        const int code = app.exit(e, out, err);
        return code == 0 ? kExitOk : kExitError;
    }

    if (run->parsed()) return cmd_run(scenario, out_dir, overrides, out, err);
    if (verify->parsed()) return cmd_verify(run_dir, out, err);
    if (oracle->parsed()) return cmd_oracle(run_dir, oracle_opts, out, err);
    if (schema->parsed()) return cmd_schema(out);
    return kExitError;
}

}  // namespace mfg::cli
