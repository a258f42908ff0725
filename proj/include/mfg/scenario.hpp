#pragma once

// Scenario files (JSON, versioned) and run-directory export.
//
// A scenario names the model, the grids, every coefficient series, the cost presets, the
// initial density, the price law and the solver options. Series may be a constant, an inline
// array sampled uniformly on [0, T], or a two-column CSV table (time, value) whose time column
// is multiplied by `time_scale`. Anything not already on the time nodes is linearly
// interpolated, and the manifest records that it was.

#include <cstdint>
#include <filesystem>
#include <optional>
#include <string>
#include <vector>

#include <json.hpp>

#include "mfg/cost.hpp"
#include "mfg/ev.hpp"
#include "mfg/phev.hpp"
#include "mfg/solver.hpp"

namespace mfg::io {

inline constexpr int kSchemaVersion = 1;
inline constexpr const char* kSolverVersion = "1.0.0";

enum class Model { ev, phev };

struct SeriesSpec {
    enum class Kind { constant, array, table };
    Kind kind = Kind::constant;
    double value = 0.0;             // constant
    std::vector<double> values;     // array samples, or table values
    std::vector<double> times;      // table times (already scaled)
    std::string csv;                // table source path as written in the scenario
    double time_scale = 1.0;

    static SeriesSpec constant(double v);
    static SeriesSpec array(std::vector<double> v);

    bool operator==(const SeriesSpec&) const = default;
};

struct InitialDensitySpec {
    enum class Kind { triangle, truncated_gaussian, histogram };
    Kind kind = Kind::triangle;
    double center = 0.5;             // triangle
    double halfwidth = 0.2;          // triangle
    std::vector<double> mean{0.4, 0.6};  // truncated_gaussian
    double variance = 0.02;          // truncated_gaussian
    std::vector<double> weights;     // histogram, one per cell in storage order
    std::string csv;                 // histogram source, empty when inline

    bool operator==(const InitialDensitySpec&) const = default;
};

struct ScenarioConfig {
    std::string name;
    Model model = Model::ev;
    double horizon = 1.0;
    int n_steps = 143;
    std::vector<int> cells{100};  // one entry (EV) or two (PHEV: z1, z2)

    // EV: g, d, sigma, H.  PHEV: g, Q1, Q2.
    SeriesSpec g = SeriesSpec::constant(0.2);
    SeriesSpec d = SeriesSpec::constant(0.0);
    SeriesSpec sigma = SeriesSpec::constant(0.0);
    SeriesSpec H = SeriesSpec::constant(30.0);
    SeriesSpec Q1 = SeriesSpec::constant(125.0);
    SeriesSpec Q2 = SeriesSpec::constant(125.0);

    CostPreset running;
    CostPreset terminal;
    InitialDensitySpec initial;
    PriceLaw price;
    double oil_price = 0.7;  // PHEV only
    SolverOptions solver;

    std::filesystem::path base_dir;  // for resolving relative CSV paths; not serialized

    bool operator==(const ScenarioConfig& o) const;
};

struct ResolvedSeries {
    std::vector<double> values;  // one per time node
    bool resampled = false;
};

/// Parses and validates a scenario document. Relative CSV paths are resolved against base_dir.
/// Throws ValidationError naming the offending field.
ScenarioConfig parse_scenario(const nlohmann::json& doc, const std::filesystem::path& base_dir);

/// Reads a scenario file and applies `key=value` overrides before validation.
ScenarioConfig load_scenario(const std::filesystem::path& path, const std::vector<std::string>& overrides = {});

nlohmann::json to_json(const ScenarioConfig& config);
void write_scenario(const ScenarioConfig& config, const std::filesystem::path& path);

/// Sets a dotted key (e.g. "solver.tol", "price.offset") in a scenario document. Solver option
/// names may be given without the "solver." prefix. The value is read as JSON when it parses,
/// otherwise as a string.
void apply_override(nlohmann::json& doc, const std::string& assignment);

/// JSON Schema describing scenario files.
nlohmann::json scenario_schema();

TimeGrid time_grid(const ScenarioConfig& config);
ResolvedSeries resolve_series(const SeriesSpec& spec, const TimeGrid& time);

ev::EvProblem build_ev_problem(const ScenarioConfig& config);
phev::PhevProblem build_phev_problem(const ScenarioConfig& config);

/// Copy of the scenario with every series written out on the time nodes and the initial
/// density written out as a histogram, so a run directory is self-contained.
ScenarioConfig inline_resolved(const ScenarioConfig& config);

/// 64-bit FNV-1a of a byte string, as 16 lowercase hex digits.
std::string fnv1a_hex(const std::string& bytes);

struct RunRecord {
    double wall_time_seconds = 0.0;
};

/// Writes the result files and manifest.json into out_dir (created if needed).
/// EV: m, v, alpha, price, purchases, total_consumption.  PHEV: m, v, mu1, mu2, price, demand,
/// control_sections.
std::vector<std::string> export_results(const EvSolution& sol, const ScenarioConfig& config,
                                        const std::filesystem::path& out_dir, const RunRecord& record);
std::vector<std::string> export_results(const PhevSolution& sol, const ScenarioConfig& config,
                                        const std::filesystem::path& out_dir, const RunRecord& record);

/// A previously exported run, read back from its directory.
struct RunDirectory {
    ScenarioConfig scenario;  // the inlined copy stored in the manifest
    nlohmann::json manifest;
    std::optional<EvSolution> ev;
    std::optional<PhevSolution> phev;
};

RunDirectory read_run(const std::filesystem::path& dir);

/// Long-format CSV readers/writers for fields and series (17 significant digits).
void write_field_csv(const std::filesystem::path& path, const Field1D& f, const TimeGrid& time,
                     const SpaceGrid1D& space);
void write_field_csv(const std::filesystem::path& path, const Field2D& f, const TimeGrid& time,
                     const SpaceGrid2D& space);
Field1D read_field_csv(const std::filesystem::path& path, const TimeGrid& time, const SpaceGrid1D& space);
Field2D read_field_csv(const std::filesystem::path& path, const TimeGrid& time, const SpaceGrid2D& space);

/// Numeric columns of a CSV file with one header line.
std::vector<std::vector<double>> read_csv_columns(const std::filesystem::path& path, std::size_t n_columns);

}  // namespace mfg::io
