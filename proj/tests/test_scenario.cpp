#include <filesystem>
#include <fstream>
#include <sstream>
#include <string>

#include <gtest/gtest.h>

#include "mfg/errors.hpp"
#include "mfg/fd.hpp"
#include "mfg/scenario.hpp"

using namespace mfg;
using namespace mfg::io;
namespace fs = std::filesystem;

namespace {

const fs::path kScenarios = fs::path(MFG_SOURCE_DIR) / "scenarios";

fs::path scratch_dir() {
    const auto* info = ::testing::UnitTest::GetInstance()->current_test_info();
    const fs::path dir = fs::temp_directory_path() / "mfg_tests" / (std::string(info->test_suite_name()) + "." + info->name());
    fs::remove_all(dir);
    fs::create_directories(dir);
    return dir;
}

std::string slurp(const fs::path& p) {
    std::ifstream in(p, std::ios::binary);
    std::stringstream ss;
    ss << in.rdbuf();
    return ss.str();
}

int count_lines(const fs::path& p) {
    std::ifstream in(p);
    std::string line;
    int n = 0;
    while (std::getline(in, line)) ++n;
    return n;
}

template <class Fn>
std::string validation_field(Fn&& fn) {
    try {
        fn();
    } catch (const ValidationError& e) {
        return e.field();
    }
    return "<no error>";
}

nlohmann::json minimal_ev() {
    return {{"schema_version", 1},
            {"name", "mini"},
            {"model", "ev"},
            {"time", {{"horizon", 1.0}, {"n_steps", 10}}},
            {"space", {{"cells", 20}}},
            {"series", {{"g", 0.3}, {"d", {0.5, 1.0, 0.5}}, {"sigma", 0.1}}},
            {"initial_density", {{"kind", "triangle"}, {"center", 0.5}, {"halfwidth", 0.3}}}};
}

}  // namespace

TEST(BundledScenario, EvWeekend) {
    const auto c = load_scenario(kScenarios / "ev_weekend.json");
    EXPECT_EQ(c.model, Model::ev);
    EXPECT_EQ(c.n_steps, 143);
    EXPECT_EQ(c.cells, std::vector<int>{100});
    EXPECT_EQ(c.g.kind, SeriesSpec::Kind::table);
    const auto pb = build_ev_problem(c);
    EXPECT_EQ(pb.time.n_nodes(), 144);
    EXPECT_EQ(pb.space.size(), 100);
    for (double h : pb.params.H) EXPECT_DOUBLE_EQ(h, 30.0);
    for (double s : pb.params.sigma) EXPECT_DOUBLE_EQ(s * s, 0.01);
    // The tables span 72 hours and map onto [0, 1].
    EXPECT_DOUBLE_EQ(pb.params.g.front(), 0.2);
    EXPECT_NEAR(fd::integrate(pb.m0, pb.space), 1.0, 1e-12);
    EXPECT_EQ(c.solver.max_iters, 200);
    EXPECT_DOUBLE_EQ(c.solver.tol, 1e-6);
    EXPECT_DOUBLE_EQ(c.solver.damping, 0.5);
}

TEST(BundledScenario, PhevFlat) {
    const auto c = load_scenario(kScenarios / "phev_flat.json");
    EXPECT_EQ(c.model, Model::phev);
    const auto pb = build_phev_problem(c);
    EXPECT_EQ(pb.time.n_nodes(), 12);
    EXPECT_EQ(pb.space.n1(), 16);
    EXPECT_EQ(pb.space.n2(), 16);
    for (double g : pb.params.g) EXPECT_DOUBLE_EQ(g, 0.2);
    for (double q : pb.params.Q1) EXPECT_DOUBLE_EQ(q, 125.0);
    for (double q : pb.params.Q2) EXPECT_DOUBLE_EQ(q, 125.0);
    EXPECT_DOUBLE_EQ(pb.params.r2, 0.7);
    EXPECT_DOUBLE_EQ(pb.params.price.offset, 0.5);
    EXPECT_DOUBLE_EQ(pb.params.price.exponent, 1.0);
    EXPECT_NEAR(fd::integrate(pb.m0, pb.space), 1.0, 1e-12);
    const auto mo = phev::moments(pb.m0, pb.space);
    EXPECT_NEAR(mo.mean1, 0.4, 0.02);
    EXPECT_NEAR(mo.mean2, 0.6, 0.02);
}

TEST(ScenarioValidation, TriangleSupportMustFitTheUnitInterval) {
    const auto field = validation_field([] {
        load_scenario(kScenarios / "ev_weekend.json", {"initial_density.center=0.8", "initial_density.halfwidth=0.6"});
    });
    EXPECT_EQ(field, "initial_density");
}

TEST(ScenarioValidation, UnknownKeysAreNamedByPath) {
    EXPECT_EQ(validation_field([] { load_scenario(kScenarios / "ev_weekend.json", {"solver.speed=3"}); }),
              "solver.speed");
    auto doc = minimal_ev();
    doc["series"]["gee"] = 1.0;
    EXPECT_EQ(validation_field([&] { parse_scenario(doc, kScenarios); }), "series.gee");
    doc = minimal_ev();
    doc["extra"] = true;
    EXPECT_EQ(validation_field([&] { parse_scenario(doc, kScenarios); }), "extra");
}

TEST(ScenarioValidation, FieldsAreChecked) {
    auto expect_field = [](const std::string& assignment, const std::string& field) {
        auto doc = minimal_ev();
        apply_override(doc, assignment);
        EXPECT_EQ(validation_field([&] { parse_scenario(doc, kScenarios); }), field) << assignment;
    };
    expect_field("schema_version=2", "schema_version");
    expect_field("model=\"bus\"", "model");
    expect_field("time.n_steps=1", "time.n_steps");
    expect_field("time.horizon=0", "time.horizon");
    expect_field("space.cells=2", "space.cells");
    expect_field("space.cells=[8,8]", "space.cells");
    expect_field("solver.tol=-1", "solver.tol");
    expect_field("damping=0", "solver.damping");
    expect_field("price.exponent=0", "price.exponent");
    expect_field("series.H=0", "series.H");
    expect_field("series.sigma=-0.1", "series.sigma");
    expect_field("initial_density.kind=\"blob\"", "initial_density.kind");
    expect_field("series.g=\"fast\"", "series.g");

    auto doc = minimal_ev();
    doc.erase("time");
    EXPECT_EQ(validation_field([&] { parse_scenario(doc, kScenarios); }), "time");
}

TEST(ScenarioValidation, MissingAndMalformedFiles) {
    const auto dir = scratch_dir();
    try {
        load_scenario(dir / "nope.json");
        FAIL() << "expected InputError";
    } catch (const InputError& e) {
        EXPECT_NE(std::string(e.what()).find("nope.json"), std::string::npos);
    }
    std::ofstream(dir / "bad.json") << "{ not json";
    EXPECT_THROW(load_scenario(dir / "bad.json"), InputError);

    auto doc = minimal_ev();
    doc["series"]["g"] = {{"csv", "missing.csv"}};
    EXPECT_EQ(validation_field([&] { parse_scenario(doc, dir); }), "series.g.csv");
}

TEST(ScenarioOverrides, SolverShorthandAndDottedKeys) {
    const auto c = load_scenario(kScenarios / "ev_weekend.json",
                                 {"tol=1e-8", "price.offset=0.25", "space.cells=40", "name=\"short\""});
    EXPECT_DOUBLE_EQ(c.solver.tol, 1e-8);
    EXPECT_DOUBLE_EQ(c.price.offset, 0.25);
    EXPECT_EQ(c.cells, std::vector<int>{40});
    EXPECT_EQ(c.name, "short");
    nlohmann::json doc = nlohmann::json::object();
    apply_override(doc, "name=plain");
    EXPECT_EQ(doc["name"], "plain");
    EXPECT_THROW(apply_override(doc, "tol"), ValidationError);
    EXPECT_THROW(apply_override(doc, "=3"), ValidationError);
}

TEST(SeriesResolution, ArraysAreInterpolatedAndFlagged) {
    const TimeGrid t(0.0, 1.0, 10);
    const auto r = resolve_series(SeriesSpec::array({0.5, 1.0, 0.5}), t);
    ASSERT_EQ(r.values.size(), 11u);
    EXPECT_TRUE(r.resampled);
    EXPECT_DOUBLE_EQ(r.values[0], 0.5);
    EXPECT_DOUBLE_EQ(r.values[5], 1.0);
    EXPECT_DOUBLE_EQ(r.values[10], 0.5);
    EXPECT_NEAR(r.values[2], 0.7, 1e-14);
    const auto exact = resolve_series(SeriesSpec::array(std::vector<double>(11, 2.0)), t);
    EXPECT_FALSE(exact.resampled);
    EXPECT_FALSE(resolve_series(SeriesSpec::constant(1.0), t).resampled);
}

TEST(SeriesResolution, TablesUseTheTimeScale) {
    const auto dir = scratch_dir();
    std::ofstream(dir / "g.csv") << "hour,value\n0,1.0\n10,3.0\n20,1.0\n";
    auto doc = minimal_ev();
    doc["series"]["g"] = {{"csv", "g.csv"}, {"time_scale", 0.05}};
    const auto c = parse_scenario(doc, dir);
    const auto r = resolve_series(c.g, time_grid(c));
    EXPECT_TRUE(r.resampled);
    EXPECT_DOUBLE_EQ(r.values[0], 1.0);
    EXPECT_DOUBLE_EQ(r.values[5], 3.0);
    EXPECT_NEAR(r.values[3], 2.2, 1e-12);
    EXPECT_DOUBLE_EQ(r.values[10], 1.0);
}

TEST(ScenarioFiles, WriteThenLoadRoundTrips) {
    const auto dir = scratch_dir();
    for (const char* name : {"ev_weekend.json", "phev_flat.json"}) {
        const auto c = load_scenario(kScenarios / name);
        write_scenario(c, dir / name);
        EXPECT_EQ(load_scenario(dir / name), c) << name;
    }
    const auto inlined = inline_resolved(load_scenario(kScenarios / "ev_weekend.json"));
    EXPECT_EQ(inlined.g.kind, SeriesSpec::Kind::array);
    EXPECT_EQ(inlined.g.values.size(), 144u);
    EXPECT_EQ(parse_scenario(to_json(inlined), dir), inlined);
}

TEST(ScenarioFiles, FnvHash) {
    EXPECT_EQ(fnv1a_hex(""), "cbf29ce484222325");
    EXPECT_EQ(fnv1a_hex("a"), "af63dc4c8601ec8c");
}

TEST(RunExport, EvFilesAreDeterministicAndReadBack) {
    const auto dir = scratch_dir();
    const auto c = load_scenario(kScenarios / "ev_weekend.json", {"space.cells=40"});
    const auto sol = solve_mfe(build_ev_problem(c), c.solver);
    ASSERT_TRUE(sol.converged);
    const auto files = export_results(sol, c, dir / "a", {1.5});
    export_results(sol, c, dir / "b", {1.5});
    ASSERT_EQ(files.size(), 7u);
    for (const auto& f : files) {
        ASSERT_TRUE(fs::exists(dir / "a" / f)) << f;
        EXPECT_EQ(slurp(dir / "a" / f), slurp(dir / "b" / f)) << f;
    }
    EXPECT_EQ(count_lines(dir / "a" / "purchases.csv"), 145);
    EXPECT_EQ(count_lines(dir / "a" / "m.csv"), 1 + 144 * 40);

    const auto run = read_run(dir / "a");
    ASSERT_TRUE(run.ev.has_value());
    EXPECT_FALSE(run.phev.has_value());
    EXPECT_EQ(run.ev->m, sol.m);
    EXPECT_EQ(run.ev->v, sol.v);
    EXPECT_EQ(run.ev->alpha, sol.alpha);
    EXPECT_EQ(run.ev->p, sol.p);
    EXPECT_EQ(run.ev->iterations, sol.iterations);
    EXPECT_EQ(run.ev->residuals, sol.residuals);
    EXPECT_EQ(run.manifest["wall_time_seconds"], 1.5);
    EXPECT_EQ(run.manifest["scenario_hash"], fnv1a_hex(run.manifest["scenario"].dump()));
    const auto resampled = run.manifest["resampled_series"].get<std::vector<std::string>>();
    EXPECT_EQ(resampled, (std::vector<std::string>{"g", "d"}));
    EXPECT_TRUE(verify_solution(*run.ev, build_ev_problem(run.scenario), c.solver.tol).passed);
}

TEST(RunExport, PhevControlSections) {
    const auto dir = scratch_dir();
    const auto c = load_scenario(kScenarios / "phev_flat.json");
    const auto sol = solve_mfe(build_phev_problem(c), c.solver);
    const auto files = export_results(sol, c, dir, {0.0});
    EXPECT_EQ(files.size(), 8u);
    const auto cols = read_csv_columns(dir / "control_sections.csv", 6);
    ASSERT_EQ(cols[0].size(), 32u);
    // Rows nearest 0.5 tie between 0.46875 and 0.53125; the lower one is used.
    EXPECT_DOUBLE_EQ(cols[2][0], 0.46875);
    EXPECT_DOUBLE_EQ(cols[2][16], 0.90625);
    EXPECT_DOUBLE_EQ(cols[4][3], sol.alpha.mu1(0, 3, 7));
    EXPECT_DOUBLE_EQ(cols[5][16 + 3], sol.alpha.mu2(0, 3, 14));

    const auto run = read_run(dir);
    ASSERT_TRUE(run.phev.has_value());
    EXPECT_EQ(run.phev->alpha, sol.alpha);
    EXPECT_EQ(run.phev->p, sol.p);
}

TEST(RunExport, MissingArtifactsAreNamed) {
    const auto dir = scratch_dir();
    const auto c = load_scenario(kScenarios / "phev_flat.json", {"max_iters=1"});
    export_results(solve_mfe(build_phev_problem(c), c.solver), c, dir, {0.0});
    fs::remove(dir / "mu2.csv");
    try {
        read_run(dir);
        FAIL() << "expected InputError";
    } catch (const InputError& e) {
        EXPECT_NE(std::string(e.what()).find("mu2.csv"), std::string::npos);
    }
    EXPECT_THROW(read_run(dir / "nowhere"), InputError);
}

TEST(FieldCsv, TruncatedFileIsRejected) {
    const auto dir = scratch_dir();
    const TimeGrid t(0.0, 1.0, 3);
    const SpaceGrid1D s(5);
    Field1D f(4, 5, 1.25);
    write_field_csv(dir / "f.csv", f, t, s);
    EXPECT_EQ(read_field_csv(dir / "f.csv", t, s), f);
    std::ofstream(dir / "short.csv") << "t,x,value\n0,0.1,1\n";
    EXPECT_THROW(read_field_csv(dir / "short.csv", t, s), InputError);
    std::ofstream(dir / "junk.csv") << "t,x,value\n0,0.1,abc\n";
    EXPECT_THROW(read_field_csv(dir / "junk.csv", t, s), InputError);
}

TEST(Schema, DescribesTheScenarioSections) {
    const auto schema = scenario_schema();
    EXPECT_EQ(schema["properties"]["schema_version"]["const"], kSchemaVersion);
    for (const char* key : {"time", "space", "series", "costs", "initial_density", "price", "solver"}) {
        EXPECT_TRUE(schema["properties"].contains(key)) << key;
    }
}
