#include "mfg/scenario.hpp"

#include <algorithm>
#include <cmath>
#include <cstdio>
#include <cstdlib>
#include <fstream>
#include <set>
#include <sstream>

#include "mfg/errors.hpp"
#include "mfg/fd.hpp"

namespace mfg::io {

namespace fs = std::filesystem;
using nlohmann::json;

namespace {

const char* to_string(Model m) { return m == Model::ev ? "ev" : "phev"; }

const char* to_string(InitialDensitySpec::Kind k) {
    switch (k) {
        case InitialDensitySpec::Kind::triangle:
            return "triangle";
        case InitialDensitySpec::Kind::truncated_gaussian:
            return "truncated_gaussian";
        case InitialDensitySpec::Kind::histogram:
            return "histogram";
    }
    return "triangle";
}

// Walks one JSON object, remembering which keys were read so leftovers can be rejected.
class ObjectReader {
public:
    ObjectReader(const json& obj, std::string path) : obj_(obj), path_(std::move(path)) {
        if (!obj_.is_object()) throw ValidationError(path_.empty() ? "<root>" : path_, "expected an object");
    }

    std::string field(const std::string& key) const { return path_.empty() ? key : path_ + "." + key; }
    bool has(const std::string& key) const { return obj_.contains(key); }

    const json& get(const std::string& key) {
        seen_.insert(key);
        if (!obj_.contains(key)) throw ValidationError(field(key), "missing required key");
        return obj_.at(key);
    }
    const json* find(const std::string& key) {
        seen_.insert(key);
        auto it = obj_.find(key);
        return it == obj_.end() ? nullptr : &*it;
    }

    double number(const std::string& key) { return as_number(get(key), field(key)); }
    double number_or(const std::string& key, double fallback) {
        const json* j = find(key);
        return j ? as_number(*j, field(key)) : fallback;
    }
    int integer(const std::string& key) { return as_int(get(key), field(key)); }
    int integer_or(const std::string& key, int fallback) {
        const json* j = find(key);
        return j ? as_int(*j, field(key)) : fallback;
    }
    std::string string(const std::string& key) { return as_string(get(key), field(key)); }
    bool boolean_or(const std::string& key, bool fallback) {
        const json* j = find(key);
        if (!j) return fallback;
        if (!j->is_boolean()) throw ValidationError(field(key), "expected true or false");
        return j->get<bool>();
    }

    void finish() const {
        for (auto it = obj_.begin(); it != obj_.end(); ++it) {
            if (!seen_.count(it.key())) throw ValidationError(field(it.key()), "unknown key");
        }
    }

    static double as_number(const json& j, const std::string& field) {
        if (!j.is_number()) throw ValidationError(field, "expected a number");
        const double v = j.get<double>();
        if (!std::isfinite(v)) throw ValidationError(field, "must be finite");
        return v;
    }
    static int as_int(const json& j, const std::string& field) {
        if (!j.is_number_integer()) throw ValidationError(field, "expected an integer");
        return j.get<int>();
    }
    static std::string as_string(const json& j, const std::string& field) {
        if (!j.is_string()) throw ValidationError(field, "expected a string");
        return j.get<std::string>();
    }

private:
    const json& obj_;
    std::string path_;
    std::set<std::string> seen_;
};

std::vector<double> number_array(const json& j, const std::string& field) {
    if (!j.is_array() || j.empty()) throw ValidationError(field, "expected a non-empty array of numbers");
    std::vector<double> out;
    out.reserve(j.size());
    for (std::size_t k = 0; k < j.size(); ++k) {
        out.push_back(ObjectReader::as_number(j[k], field + "[" + std::to_string(k) + "]"));
    }
    return out;
}

fs::path resolve_path(const fs::path& base_dir, const std::string& p) {
    fs::path q(p);
    if (q.is_relative()) q = base_dir / q;
    return fs::absolute(q).lexically_normal();
}

SeriesSpec parse_series(const json& j, const std::string& field, const fs::path& base_dir) {
    if (j.is_number()) return SeriesSpec::constant(ObjectReader::as_number(j, field));
    if (j.is_array()) {
        auto v = number_array(j, field);
        return v.size() == 1 ? SeriesSpec::constant(v[0]) : SeriesSpec::array(std::move(v));
    }
    ObjectReader r(j, field);
    SeriesSpec s;
    s.kind = SeriesSpec::Kind::table;
    s.csv = resolve_path(base_dir, r.string("csv")).string();
    s.time_scale = r.number_or("time_scale", 1.0);
    r.finish();
    if (!(s.time_scale > 0.0)) throw ValidationError(field + ".time_scale", "must be positive");
    std::vector<std::vector<double>> cols;
    try {
        cols = read_csv_columns(s.csv, 2);
    } catch (const InputError& e) {
        throw ValidationError(field + ".csv", e.what());
    }
    s.times = std::move(cols[0]);
    s.values = std::move(cols[1]);
    for (double& t : s.times) t *= s.time_scale;
    if (s.times.empty()) throw ValidationError(field + ".csv", "table has no rows");
    for (std::size_t k = 1; k < s.times.size(); ++k) {
        if (!(s.times[k] > s.times[k - 1])) throw ValidationError(field + ".csv", "time column must increase");
    }
    return s;
}

json series_json(const SeriesSpec& s, const fs::path& dest_dir) {
    switch (s.kind) {
        case SeriesSpec::Kind::constant:
            return s.value;
        case SeriesSpec::Kind::array:
            return s.values;
        case SeriesSpec::Kind::table: {
            fs::path p(s.csv);
            if (!dest_dir.empty()) p = fs::relative(p, fs::absolute(dest_dir));
            return json{{"csv", p.generic_string()}, {"time_scale", s.time_scale}};
        }
    }
    return nullptr;
}

CostPreset parse_cost(const json& j, const std::string& field) {
    ObjectReader r(j, field);
    CostPreset c;
    try {
        c.kind = cost_kind_from_string(r.string("preset"));
    } catch (const InputError& e) {
        throw ValidationError(field + ".preset", e.what());
    }
    switch (c.kind) {
        case CostPreset::Kind::zero:
            break;
        case CostPreset::Kind::constant:
            c = CostPreset::constant(r.number("value"));
            break;
        case CostPreset::Kind::linear:
            c = CostPreset::linear(r.number("slope"), r.number_or("intercept", 0.0));
            break;
        case CostPreset::Kind::quadratic_shortage:
            c = CostPreset::quadratic_shortage(r.number("coef"), r.number("target"));
            if (c.coef < 0.0) throw ValidationError(field + ".coef", "must be nonnegative");
            break;
    }
    r.finish();
    return c;
}

json cost_json(const CostPreset& c) {
    json j{{"preset", to_string(c.kind)}};
    switch (c.kind) {
        case CostPreset::Kind::zero:
            break;
        case CostPreset::Kind::constant:
            j["value"] = c.value;
            break;
        case CostPreset::Kind::linear:
            j["slope"] = c.slope;
            j["intercept"] = c.value;
            break;
        case CostPreset::Kind::quadratic_shortage:
            j["coef"] = c.coef;
            j["target"] = c.target;
            break;
    }
    return j;
}

InitialDensitySpec parse_initial(const json& j, const std::string& field, const ScenarioConfig& c) {
    ObjectReader r(j, field);
    InitialDensitySpec s;
    const std::string kind = r.string("kind");
    const std::size_t dims = c.model == Model::ev ? 1 : 2;
    if (kind == "triangle") {
        if (c.model != Model::ev) throw ValidationError(field + ".kind", "triangle is a one-dimensional density");
        s.kind = InitialDensitySpec::Kind::triangle;
        s.center = r.number("center");
        s.halfwidth = r.number("halfwidth");
        if (!(s.halfwidth > 0.0)) throw ValidationError(field + ".halfwidth", "must be positive");
        if (s.center - s.halfwidth < 0.0 || s.center + s.halfwidth > 1.0) {
            throw ValidationError(field, "triangle support [center - halfwidth, center + halfwidth] must lie in [0, 1]");
        }
    } else if (kind == "truncated_gaussian") {
        s.kind = InitialDensitySpec::Kind::truncated_gaussian;
        s.mean = number_array(r.get("mean"), field + ".mean");
        if (s.mean.size() != dims) {
            throw ValidationError(field + ".mean", "expected " + std::to_string(dims) + " entries");
        }
        for (double m : s.mean) {
            if (m < 0.0 || m > 1.0) throw ValidationError(field + ".mean", "entries must lie in [0, 1]");
        }
        s.variance = r.number("variance");
        if (!(s.variance > 0.0)) throw ValidationError(field + ".variance", "must be positive");
    } else if (kind == "histogram") {
        s.kind = InitialDensitySpec::Kind::histogram;
        const json* inline_values = r.find("weights");
        const json* file = r.find("csv");
        if ((inline_values == nullptr) == (file == nullptr)) {
            throw ValidationError(field, "histogram needs exactly one of 'weights' or 'csv'");
        }
        if (inline_values) {
            s.weights = number_array(*inline_values, field + ".weights");
        } else {
            s.csv = resolve_path(c.base_dir, ObjectReader::as_string(*file, field + ".csv")).string();
            try {
                s.weights = read_csv_columns(s.csv, 1 + dims).back();
            } catch (const InputError& e) {
                throw ValidationError(field + ".csv", e.what());
            }
        }
        std::size_t cells = 1;
        for (int n : c.cells) cells *= static_cast<std::size_t>(n);
        if (s.weights.size() != cells) {
            throw ValidationError(field, "histogram has " + std::to_string(s.weights.size()) + " cells, grid has " +
                                             std::to_string(cells));
        }
        double total = 0.0;
        for (double w : s.weights) {
            if (w < 0.0) throw ValidationError(field, "histogram weights must be nonnegative");
            total += w;
        }
        if (!(total > 0.0)) throw ValidationError(field, "histogram has no mass");
    } else {
        throw ValidationError(field + ".kind", "unknown initial density '" + kind + "'");
    }
    r.finish();
    return s;
}

json initial_json(const InitialDensitySpec& s, const fs::path& dest_dir) {
    json j{{"kind", to_string(s.kind)}};
    switch (s.kind) {
        case InitialDensitySpec::Kind::triangle:
            j["center"] = s.center;
            j["halfwidth"] = s.halfwidth;
            break;
        case InitialDensitySpec::Kind::truncated_gaussian:
            j["mean"] = s.mean;
            j["variance"] = s.variance;
            break;
        case InitialDensitySpec::Kind::histogram:
            if (s.csv.empty()) {
                j["weights"] = s.weights;
            } else {
                fs::path p(s.csv);
                if (!dest_dir.empty()) p = fs::relative(p, fs::absolute(dest_dir));
                j["csv"] = p.generic_string();
            }
            break;
    }
    return j;
}

void check_series_range(const SeriesSpec& s, const TimeGrid& time, const std::string& field, bool positive,
                        bool nonnegative) {
    const auto r = resolve_series(s, time);
    for (double v : r.values) {
        if (positive && !(v > 0.0)) throw ValidationError(field, "must be positive at every time node");
        if (nonnegative && v < 0.0) throw ValidationError(field, "must be nonnegative at every time node");
    }
}

std::string format_double(double v) {
    char buf[40];
    std::snprintf(buf, sizeof buf, "%.17g", v);
    return buf;
}

std::ofstream open_out(const fs::path& path) {
    std::ofstream out(path, std::ios::binary);
    if (!out) throw InputError("cannot write " + path.string());
    return out;
}

void write_series_csv(const fs::path& path, const TimeGrid& time, std::span<const double> values) {
    auto out = open_out(path);
    out << "t,value\n";
    for (int i = 0; i < time.n_nodes(); ++i) out << format_double(time.node(i)) << ',' << format_double(values[i]) << '\n';
}

void write_json(const fs::path& path, const json& j) {
    auto out = open_out(path);
    out << j.dump(2) << '\n';
}

json convergence_json(const std::vector<double>& residuals, bool converged, int iterations) {
    return json{{"converged", converged},
                {"iterations", iterations},
                {"final_residual", residuals.empty() ? 0.0 : residuals.back()},
                {"residuals", residuals}};
}

json manifest_base(const ScenarioConfig& config, const std::vector<std::string>& resampled, const json& conv,
                   const RunRecord& record) {
    const json scenario = to_json(inline_resolved(config));
    return json{{"solver_version", kSolverVersion},
                {"schema_version", kSchemaVersion},
                {"model", to_string(config.model)},
                {"scenario_hash", fnv1a_hex(scenario.dump())},
                {"scenario", scenario},
                {"resampled_series", resampled},
                {"convergence", conv},
                {"wall_time_seconds", record.wall_time_seconds}};
}

std::vector<std::string> resampled_names(const ScenarioConfig& c) {
    const auto time = time_grid(c);
    std::vector<std::pair<const char*, const SeriesSpec*>> all;
    if (c.model == Model::ev) {
        all = {{"g", &c.g}, {"d", &c.d}, {"sigma", &c.sigma}, {"H", &c.H}};
    } else {
        all = {{"g", &c.g}, {"Q1", &c.Q1}, {"Q2", &c.Q2}};
    }
    std::vector<std::string> names;
    for (const auto& [name, spec] : all) {
        if (resolve_series(*spec, time).resampled) names.emplace_back(name);
    }
    return names;
}

void fill_convergence(const json& manifest, std::vector<double>& residuals, bool& converged, int& iterations) {
    const auto& c = manifest.at("convergence");
    residuals = c.at("residuals").get<std::vector<double>>();
    converged = c.at("converged").get<bool>();
    iterations = c.at("iterations").get<int>();
}

}  // namespace

SeriesSpec SeriesSpec::constant(double v) {
    SeriesSpec s;
    s.kind = Kind::constant;
    s.value = v;
    return s;
}

SeriesSpec SeriesSpec::array(std::vector<double> v) {
    SeriesSpec s;
    s.kind = Kind::array;
    s.values = std::move(v);
    return s;
}

bool ScenarioConfig::operator==(const ScenarioConfig& o) const {
    return name == o.name && model == o.model && horizon == o.horizon && n_steps == o.n_steps &&
           cells == o.cells && g == o.g && d == o.d && sigma == o.sigma && H == o.H && Q1 == o.Q1 &&
           Q2 == o.Q2 && running == o.running && terminal == o.terminal && initial == o.initial &&
           price == o.price && oil_price == o.oil_price && solver.max_iters == o.solver.max_iters &&
           solver.tol == o.solver.tol && solver.damping == o.solver.damping &&
           solver.record_history == o.solver.record_history;
}

TimeGrid time_grid(const ScenarioConfig& config) { return TimeGrid(0.0, config.horizon, config.n_steps); }

ResolvedSeries resolve_series(const SeriesSpec& spec, const TimeGrid& time) {
    const int n = time.n_nodes();
    ResolvedSeries r;
    switch (spec.kind) {
        case SeriesSpec::Kind::constant:
            r.values.assign(n, spec.value);
            return r;
        case SeriesSpec::Kind::array: {
            if (static_cast<int>(spec.values.size()) == n) {
                r.values = spec.values;
                return r;
            }
            r.resampled = true;
            const int m = static_cast<int>(spec.values.size());
            r.values.resize(n);
            for (int i = 0; i < n; ++i) {
                const double s = static_cast<double>(i) * (m - 1) / (n - 1);
                const int k = std::min(static_cast<int>(s), m - 2);
                const double w = s - k;
                r.values[i] = (1.0 - w) * spec.values[k] + w * spec.values[k + 1];
            }
            return r;
        }
        case SeriesSpec::Kind::table: {
            r.resampled = true;
            r.values.resize(n);
            const auto& t = spec.times;
            const auto& v = spec.values;
            for (int i = 0; i < n; ++i) {
                const double x = time.node(i);
                if (x <= t.front()) {
                    r.values[i] = v.front();
                } else if (x >= t.back()) {
                    r.values[i] = v.back();
                } else {
                    const auto k = static_cast<std::size_t>(std::upper_bound(t.begin(), t.end(), x) - t.begin()) - 1;
                    const double w = (x - t[k]) / (t[k + 1] - t[k]);
                    r.values[i] = (1.0 - w) * v[k] + w * v[k + 1];
                }
            }
            return r;
        }
    }
    return r;
}

ScenarioConfig parse_scenario(const json& doc, const fs::path& base_dir) {
    ObjectReader root(doc, "");
    ScenarioConfig c;
    c.base_dir = base_dir;

    const int version = root.integer("schema_version");
    if (version != kSchemaVersion) {
        throw ValidationError("schema_version", "unsupported version " + std::to_string(version));
    }
    c.name = root.has("name") ? ObjectReader::as_string(root.get("name"), "name") : std::string();
    const std::string model = root.string("model");
    if (model == "ev") {
        c.model = Model::ev;
    } else if (model == "phev") {
        c.model = Model::phev;
    } else {
        throw ValidationError("model", "expected 'ev' or 'phev', got '" + model + "'");
    }
    const bool is_ev = c.model == Model::ev;

    {
        ObjectReader t(root.get("time"), "time");
        c.horizon = t.number("horizon");
        c.n_steps = t.integer("n_steps");
        t.finish();
        if (!(c.horizon > 0.0)) throw ValidationError("time.horizon", "must be positive");
        if (c.n_steps < 2) throw ValidationError("time.n_steps", "must be at least 2");
    }
    {
        ObjectReader s(root.get("space"), "space");
        const json& cells = s.get("cells");
        c.cells.clear();
        if (cells.is_array()) {
            for (std::size_t k = 0; k < cells.size(); ++k) {
                c.cells.push_back(ObjectReader::as_int(cells[k], "space.cells[" + std::to_string(k) + "]"));
            }
        } else {
            c.cells.push_back(ObjectReader::as_int(cells, "space.cells"));
        }
        s.finish();
        if (c.cells.size() != (is_ev ? 1u : 2u)) {
            throw ValidationError("space.cells", is_ev ? "expected one cell count" : "expected [n_z1, n_z2]");
        }
        for (int n : c.cells) {
            if (n < 4) throw ValidationError("space.cells", "every axis needs at least 4 cells");
        }
    }
    const TimeGrid time = time_grid(c);
    {
        ObjectReader s(root.get("series"), "series");
        c.g = parse_series(s.get("g"), "series.g", base_dir);
        check_series_range(c.g, time, "series.g", false, false);
        if (is_ev) {
            if (const json* j = s.find("d")) c.d = parse_series(*j, "series.d", base_dir);
            if (const json* j = s.find("sigma")) c.sigma = parse_series(*j, "series.sigma", base_dir);
            if (const json* j = s.find("H")) c.H = parse_series(*j, "series.H", base_dir);
            check_series_range(c.sigma, time, "series.sigma", false, true);
            check_series_range(c.H, time, "series.H", true, false);
        } else {
            if (const json* j = s.find("Q1")) c.Q1 = parse_series(*j, "series.Q1", base_dir);
            if (const json* j = s.find("Q2")) c.Q2 = parse_series(*j, "series.Q2", base_dir);
            check_series_range(c.Q1, time, "series.Q1", true, false);
            check_series_range(c.Q2, time, "series.Q2", true, false);
        }
        s.finish();
    }

    c.running = is_ev ? CostPreset::quadratic_shortage(1.0, 1.0) : CostPreset::quadratic_shortage(20.0, 2.0);
    c.terminal = is_ev ? CostPreset::quadratic_shortage(1.0, 1.0) : CostPreset::quadratic_shortage(10.0, 2.0);
    if (const json* j = root.find("costs")) {
        ObjectReader r(*j, "costs");
        if (const json* k = r.find("running")) c.running = parse_cost(*k, "costs.running");
        if (const json* k = r.find("terminal")) c.terminal = parse_cost(*k, "costs.terminal");
        r.finish();
    }

    c.initial = parse_initial(root.get("initial_density"), "initial_density", c);

    c.price = is_ev ? PriceLaw{2.0, 0.0, true} : PriceLaw{1.0, 0.5, true};
    c.oil_price = 0.7;
    if (const json* j = root.find("price")) {
        ObjectReader r(*j, "price");
        c.price.exponent = r.number_or("exponent", c.price.exponent);
        c.price.offset = r.number_or("offset", c.price.offset);
        c.price.demand_coupling = r.boolean_or("demand_coupling", c.price.demand_coupling);
        if (!is_ev) c.oil_price = r.number_or("oil_price", c.oil_price);
        r.finish();
        if (!(c.price.exponent > 0.0)) throw ValidationError("price.exponent", "must be positive");
        if (c.oil_price < 0.0) throw ValidationError("price.oil_price", "must be nonnegative");
    }

    if (const json* j = root.find("solver")) {
        ObjectReader r(*j, "solver");
        c.solver.max_iters = r.integer_or("max_iters", c.solver.max_iters);
        c.solver.tol = r.number_or("tol", c.solver.tol);
        c.solver.damping = r.number_or("damping", c.solver.damping);
        c.solver.record_history = r.boolean_or("record_history", c.solver.record_history);
        r.finish();
        if (c.solver.max_iters < 1) throw ValidationError("solver.max_iters", "must be at least 1");
        if (!(c.solver.tol > 0.0)) throw ValidationError("solver.tol", "must be positive");
        if (!(c.solver.damping > 0.0 && c.solver.damping <= 1.0)) {
            throw ValidationError("solver.damping", "must lie in (0, 1]");
        }
    }
    root.finish();
    return c;
}

void apply_override(json& doc, const std::string& assignment) {
    const auto eq = assignment.find('=');
    if (eq == std::string::npos || eq == 0) {
        throw ValidationError(assignment, "override must have the form key=value");
    }
    std::string key = assignment.substr(0, eq);
    const std::string text = assignment.substr(eq + 1);
    static const std::set<std::string> solver_keys{"max_iters", "tol", "damping", "record_history"};
    if (solver_keys.count(key)) key = "solver." + key;

    json value = json::parse(text, nullptr, false);
    if (value.is_discarded()) value = text;

    json* node = &doc;
    std::size_t start = 0;
    while (true) {
        const auto dot = key.find('.', start);
        const std::string part = key.substr(start, dot == std::string::npos ? std::string::npos : dot - start);
        if (part.empty()) throw ValidationError(key, "empty path component");
        if (!node->is_object()) throw ValidationError(key, "cannot descend into a non-object");
        if (dot == std::string::npos) {
            (*node)[part] = value;
            return;
        }
        node = &(*node)[part];
        if (node->is_null()) *node = json::object();
        start = dot + 1;
    }
}

ScenarioConfig load_scenario(const fs::path& path, const std::vector<std::string>& overrides) {
    std::ifstream in(path);
    if (!in) throw InputError("cannot open scenario file " + path.string());
    json doc = json::parse(in, nullptr, false);
    if (doc.is_discarded()) throw InputError("scenario file " + path.string() + " is not valid JSON");
    for (const auto& o : overrides) apply_override(doc, o);
    return parse_scenario(doc, fs::absolute(path).parent_path());
}

namespace {

json to_json_at(const ScenarioConfig& c, const fs::path& dest_dir) {
    const bool is_ev = c.model == Model::ev;
    json series{{"g", series_json(c.g, dest_dir)}};
    if (is_ev) {
        series["d"] = series_json(c.d, dest_dir);
        series["sigma"] = series_json(c.sigma, dest_dir);
        series["H"] = series_json(c.H, dest_dir);
    } else {
        series["Q1"] = series_json(c.Q1, dest_dir);
        series["Q2"] = series_json(c.Q2, dest_dir);
    }
    json price{{"exponent", c.price.exponent},
               {"offset", c.price.offset},
               {"demand_coupling", c.price.demand_coupling}};
    if (!is_ev) price["oil_price"] = c.oil_price;
    json cells = is_ev ? json(c.cells.at(0)) : json(c.cells);
    return json{{"schema_version", kSchemaVersion},
                {"name", c.name},
                {"model", to_string(c.model)},
                {"time", {{"horizon", c.horizon}, {"n_steps", c.n_steps}}},
                {"space", {{"cells", cells}}},
                {"series", series},
                {"costs", {{"running", cost_json(c.running)}, {"terminal", cost_json(c.terminal)}}},
                {"initial_density", initial_json(c.initial, dest_dir)},
                {"price", price},
                {"solver",
                 {{"max_iters", c.solver.max_iters},
                  {"tol", c.solver.tol},
                  {"damping", c.solver.damping},
                  {"record_history", c.solver.record_history}}}};
}

}  // namespace

json to_json(const ScenarioConfig& config) { return to_json_at(config, {}); }

void write_scenario(const ScenarioConfig& config, const fs::path& path) {
    const fs::path dir = fs::absolute(path).parent_path();
    write_json(path, to_json_at(config, dir));
}

ev::EvProblem build_ev_problem(const ScenarioConfig& c) {
    if (c.model != Model::ev) throw ValidationError("model", "scenario is not an EV scenario");
    const auto time = time_grid(c);
    const SpaceGrid1D space(c.cells.at(0));
    ev::EvParams p;
    p.g = resolve_series(c.g, time).values;
    p.d = resolve_series(c.d, time).values;
    p.sigma = resolve_series(c.sigma, time).values;
    p.H = resolve_series(c.H, time).values;
    p.running = c.running;
    p.terminal = c.terminal;
    p.price = c.price;

    std::vector<double> m0;
    switch (c.initial.kind) {
        case InitialDensitySpec::Kind::triangle:
            m0 = ev::triangle_density(c.initial.center, c.initial.halfwidth, space);
            break;
        case InitialDensitySpec::Kind::truncated_gaussian: {
            m0.resize(space.size());
            for (int j = 0; j < space.size(); ++j) {
                const double z = space.node(j) - c.initial.mean.at(0);
                m0[j] = std::exp(-z * z / (2.0 * c.initial.variance));
            }
            const double mass = fd::integrate(m0, space);
            if (!(mass > 0.0)) throw ValidationError("initial_density", "no mass on the grid");
            for (double& x : m0) x /= mass;
            break;
        }
        case InitialDensitySpec::Kind::histogram: {
            m0 = c.initial.weights;
            const double mass = fd::integrate(m0, space);
            for (double& x : m0) x /= mass;
            break;
        }
    }
    return ev::EvProblem{time, space, std::move(p), std::move(m0), Exec::parallel};
}

phev::PhevProblem build_phev_problem(const ScenarioConfig& c) {
    if (c.model != Model::phev) throw ValidationError("model", "scenario is not a PHEV scenario");
    const auto time = time_grid(c);
    const SpaceGrid2D space(c.cells.at(0), c.cells.at(1));
    phev::PhevParams p;
    p.g = resolve_series(c.g, time).values;
    p.Q1 = resolve_series(c.Q1, time).values;
    p.Q2 = resolve_series(c.Q2, time).values;
    p.r2 = c.oil_price;
    p.running = c.running;
    p.terminal = c.terminal;
    p.price = c.price;

    std::vector<double> m0;
    switch (c.initial.kind) {
        case InitialDensitySpec::Kind::truncated_gaussian:
            m0 = phev::truncated_gaussian_density(c.initial.mean.at(0), c.initial.mean.at(1), c.initial.variance, space);
            break;
        case InitialDensitySpec::Kind::histogram: {
            m0 = c.initial.weights;
            const double mass = fd::integrate(m0, space);
            for (double& x : m0) x /= mass;
            break;
        }
        case InitialDensitySpec::Kind::triangle:
            throw ValidationError("initial_density.kind", "triangle is a one-dimensional density");
    }
    return phev::PhevProblem{time, space, std::move(p), std::move(m0), Exec::parallel};
}

ScenarioConfig inline_resolved(const ScenarioConfig& c) {
    ScenarioConfig out = c;
    const auto time = time_grid(c);
    for (SeriesSpec* s : {&out.g, &out.d, &out.sigma, &out.H, &out.Q1, &out.Q2}) {
        if (s->kind == SeriesSpec::Kind::constant) continue;
        *s = SeriesSpec::array(resolve_series(*s, time).values);
    }
    if (c.initial.kind == InitialDensitySpec::Kind::histogram && !c.initial.csv.empty()) {
        out.initial.csv.clear();
    }
    return out;
}

std::string fnv1a_hex(const std::string& bytes) {
    std::uint64_t h = 0xcbf29ce484222325ULL;
    for (unsigned char ch : bytes) {
        h ^= ch;
        h *= 0x100000001b3ULL;
    }
    char buf[17];
    std::snprintf(buf, sizeof buf, "%016llx", static_cast<unsigned long long>(h));
    return buf;
}

std::vector<std::vector<double>> read_csv_columns(const fs::path& path, std::size_t n_columns) {
    std::ifstream in(path);
    if (!in) throw InputError("cannot open " + path.string());
    std::vector<std::vector<double>> cols(n_columns);
    std::string line;
    if (!std::getline(in, line)) throw InputError(path.string() + ": empty file");
    int line_no = 1;
    while (std::getline(in, line)) {
        ++line_no;
        if (!line.empty() && line.back() == '\r') line.pop_back();
        if (line.empty()) continue;
        std::stringstream ss(line);
        std::string cell;
        std::size_t k = 0;
        while (std::getline(ss, cell, ',')) {
            if (k >= n_columns) throw InputError(path.string() + ":" + std::to_string(line_no) + ": too many columns");
            char* end = nullptr;
            const double v = std::strtod(cell.c_str(), &end);
            if (end == cell.c_str() || *end != '\0' || !std::isfinite(v)) {
                throw InputError(path.string() + ":" + std::to_string(line_no) + ": bad number '" + cell + "'");
            }
            cols[k++].push_back(v);
        }
        if (k != n_columns) throw InputError(path.string() + ":" + std::to_string(line_no) + ": expected " +
                                             std::to_string(n_columns) + " columns");
    }
    return cols;
}

void write_field_csv(const fs::path& path, const Field1D& f, const TimeGrid& time, const SpaceGrid1D& space) {
    auto out = open_out(path);
    out << "t,x,value\n";
    for (int i = 0; i < f.n_time(); ++i) {
        const std::string t = format_double(time.node(i));
        for (int j = 0; j < f.n_space(); ++j) {
            out << t << ',' << format_double(space.node(j)) << ',' << format_double(f(i, j)) << '\n';
        }
    }
}

void write_field_csv(const fs::path& path, const Field2D& f, const TimeGrid& time, const SpaceGrid2D& space) {
    auto out = open_out(path);
    out << "t,z1,z2,value\n";
    for (int i = 0; i < f.n_time(); ++i) {
        const std::string t = format_double(time.node(i));
        for (int a = 0; a < f.n1(); ++a) {
            const std::string z1 = format_double(space.node1(a));
            for (int b = 0; b < f.n2(); ++b) {
                out << t << ',' << z1 << ',' << format_double(space.node2(b)) << ',' << format_double(f(i, a, b))
                    << '\n';
            }
        }
    }
}

Field1D read_field_csv(const fs::path& path, const TimeGrid& time, const SpaceGrid1D& space) {
    const auto cols = read_csv_columns(path, 3);
    Field1D f(time.n_nodes(), space.size());
    if (cols[2].size() != f.data().size()) {
        throw InputError(path.string() + ": expected " + std::to_string(f.data().size()) + " rows");
    }
    f.data() = cols[2];
    return f;
}

Field2D read_field_csv(const fs::path& path, const TimeGrid& time, const SpaceGrid2D& space) {
    const auto cols = read_csv_columns(path, 4);
    Field2D f(time.n_nodes(), space.n1(), space.n2());
    if (cols[3].size() != f.data().size()) {
        throw InputError(path.string() + ": expected " + std::to_string(f.data().size()) + " rows");
    }
    f.data() = cols[3];
    return f;
}

std::vector<std::string> export_results(const EvSolution& sol, const ScenarioConfig& config, const fs::path& out_dir,
                                        const RunRecord& record) {
    const auto pb = build_ev_problem(config);
    fs::create_directories(out_dir);
    std::vector<std::string> files{"m.csv",         "v.csv",
                                   "alpha.csv",     "price.csv",
                                   "purchases.csv", "total_consumption.csv",
                                   "manifest.json"};
    write_field_csv(out_dir / "m.csv", sol.m, pb.time, pb.space);
    write_field_csv(out_dir / "v.csv", sol.v, pb.time, pb.space);
    write_field_csv(out_dir / "alpha.csv", sol.alpha, pb.time, pb.space);
    write_series_csv(out_dir / "price.csv", pb.time, sol.p);

    const auto purchases = ev::ev_demand(sol.m, pb.params, pb.space, pb.time);
    write_series_csv(out_dir / "purchases.csv", pb.time, purchases);

    double mean_purchase = 0.0;
    for (double v : purchases) mean_purchase += v;
    mean_purchase /= static_cast<double>(purchases.size());
    {
        auto out = open_out(out_dir / "total_consumption.csv");
        out << "t,regulated,baseline\n";
        for (int i = 0; i < pb.time.n_nodes(); ++i) {
            out << format_double(pb.time.node(i)) << ',' << format_double(pb.params.d[i] + purchases[i]) << ','
                << format_double(pb.params.d[i] + mean_purchase) << '\n';
        }
    }

    json manifest = manifest_base(config, resampled_names(config),
                                  convergence_json(sol.residuals, sol.converged, sol.iterations), record);
    manifest["grids"] = {{"time", {{"t0", pb.time.t0()}, {"t1", pb.time.t1()}, {"n_nodes", pb.time.n_nodes()}}},
                         {"space", {{"cells", pb.space.size()}, {"dx", pb.space.dx()}}}};
    manifest["files"] = files;
    write_json(out_dir / "manifest.json", manifest);
    return files;
}

std::vector<std::string> export_results(const PhevSolution& sol, const ScenarioConfig& config,
                                        const fs::path& out_dir, const RunRecord& record) {
    const auto pb = build_phev_problem(config);
    fs::create_directories(out_dir);
    std::vector<std::string> files{"m.csv",      "v.csv",      "mu1.csv",
                                   "mu2.csv",    "price.csv",  "demand.csv",
                                   "control_sections.csv", "manifest.json"};
    write_field_csv(out_dir / "m.csv", sol.m, pb.time, pb.space);
    write_field_csv(out_dir / "v.csv", sol.v, pb.time, pb.space);
    write_field_csv(out_dir / "mu1.csv", sol.alpha.mu1, pb.time, pb.space);
    write_field_csv(out_dir / "mu2.csv", sol.alpha.mu2, pb.time, pb.space);
    {
        auto out = open_out(out_dir / "price.csv");
        out << "t,r1,r2\n";
        for (int i = 0; i < pb.time.n_nodes(); ++i) {
            out << format_double(pb.time.node(i)) << ',' << format_double(sol.p.r1[i]) << ','
                << format_double(sol.p.r2) << '\n';
        }
    }
    write_series_csv(out_dir / "demand.csv", pb.time, phev::phev_demand(sol.m, pb.params, pb.space, pb.time));
    {
        // Controls at the first time node along the z2 rows nearest 0.5 and 0.9 (ties: lower row).
        auto out = open_out(out_dir / "control_sections.csv");
        out << "t,z2_target,z2,z1,mu1,mu2\n";
        for (double target : {0.5, 0.9}) {
            int row = 0;
            for (int b = 1; b < pb.space.n2(); ++b) {
                if (std::abs(pb.space.node2(b) - target) < std::abs(pb.space.node2(row) - target)) row = b;
            }
            for (int a = 0; a < pb.space.n1(); ++a) {
                out << format_double(pb.time.node(0)) << ',' << format_double(target) << ','
                    << format_double(pb.space.node2(row)) << ',' << format_double(pb.space.node1(a)) << ','
                    << format_double(sol.alpha.mu1(0, a, row)) << ',' << format_double(sol.alpha.mu2(0, a, row))
                    << '\n';
            }
        }
    }

    json manifest = manifest_base(config, resampled_names(config),
                                  convergence_json(sol.residuals, sol.converged, sol.iterations), record);
    manifest["grids"] = {{"time", {{"t0", pb.time.t0()}, {"t1", pb.time.t1()}, {"n_nodes", pb.time.n_nodes()}}},
                         {"space", {{"cells", {pb.space.n1(), pb.space.n2()}}, {"dz", {pb.space.dz1(), pb.space.dz2()}}}}};
    manifest["files"] = files;
    write_json(out_dir / "manifest.json", manifest);
    return files;
}

RunDirectory read_run(const fs::path& dir) {
    const fs::path manifest_path = dir / "manifest.json";
    std::ifstream in(manifest_path);
    if (!in) throw InputError("missing run artifact " + manifest_path.string());
    RunDirectory run;
    run.manifest = json::parse(in, nullptr, false);
    if (run.manifest.is_discarded() || !run.manifest.contains("scenario")) {
        throw InputError(manifest_path.string() + " is not a valid manifest");
    }
    run.scenario = parse_scenario(run.manifest.at("scenario"), fs::absolute(dir));
    const auto time = time_grid(run.scenario);
    auto need = [&](const char* name) {
        const fs::path p = dir / name;
        if (!fs::exists(p)) throw InputError("missing run artifact " + p.string());
        return p;
    };
    if (run.scenario.model == Model::ev) {
        const SpaceGrid1D space(run.scenario.cells.at(0));
        EvSolution s;
        s.m = read_field_csv(need("m.csv"), time, space);
        s.v = read_field_csv(need("v.csv"), time, space);
        s.alpha = read_field_csv(need("alpha.csv"), time, space);
        const auto price = read_csv_columns(need("price.csv"), 2);
        s.p = price[1];
        if (static_cast<int>(s.p.size()) != time.n_nodes()) throw InputError("price.csv: wrong row count");
        fill_convergence(run.manifest, s.residuals, s.converged, s.iterations);
        run.ev = std::move(s);
    } else {
        const SpaceGrid2D space(run.scenario.cells.at(0), run.scenario.cells.at(1));
        PhevSolution s;
        s.m = read_field_csv(need("m.csv"), time, space);
        s.v = read_field_csv(need("v.csv"), time, space);
        s.alpha.mu1 = read_field_csv(need("mu1.csv"), time, space);
        s.alpha.mu2 = read_field_csv(need("mu2.csv"), time, space);
        const auto price = read_csv_columns(need("price.csv"), 3);
        s.p.r1 = price[1];
        if (static_cast<int>(s.p.r1.size()) != time.n_nodes()) throw InputError("price.csv: wrong row count");
        s.p.r2 = price[2].at(0);
        fill_convergence(run.manifest, s.residuals, s.converged, s.iterations);
        run.phev = std::move(s);
    }
    return run;
}

json scenario_schema() {
    const json number{{"type", "number"}};
    const json series{{"description",
                       "constant, array sampled uniformly on [0, horizon], or {csv, time_scale} table "
                       "with columns (time, value)"},
                      {"oneOf",
                       {number,
                        {{"type", "array"}, {"items", number}, {"minItems", 1}},
                        {{"type", "object"},
                         {"required", {"csv"}},
                         {"additionalProperties", false},
                         {"properties",
                          {{"csv", {{"type", "string"}}},
                           {"time_scale", {{"type", "number"}, {"exclusiveMinimum", 0}}}}}}}}};
    const json cost{
        {"type", "object"},
        {"required", {"preset"}},
        {"additionalProperties", false},
        {"description",
         "zero; constant{value}; linear{slope, intercept}: intercept + slope*x; "
         "quadratic_shortage{coef, target}: coef*(target - x)^2. PHEV costs take x = z1 + z2."},
        {"properties",
         {{"preset", {{"enum", {"zero", "constant", "linear", "quadratic_shortage"}}}},
          {"value", number},
          {"slope", number},
          {"intercept", number},
          {"coef", {{"type", "number"}, {"minimum", 0}}},
          {"target", number}}}};
    return json{
        {"$schema", "https://json-schema.org/draft/2020-12/schema"},
        {"title", "mfg scenario"},
        {"type", "object"},
        {"required", {"schema_version", "model", "time", "space", "series", "initial_density"}},
        {"additionalProperties", false},
        {"properties",
         {{"schema_version", {{"const", kSchemaVersion}}},
          {"name", {{"type", "string"}}},
          {"model", {{"enum", {"ev", "phev"}}}},
          {"time",
           {{"type", "object"},
            {"required", {"horizon", "n_steps"}},
            {"additionalProperties", false},
            {"properties",
             {{"horizon", {{"type", "number"}, {"exclusiveMinimum", 0}}},
              {"n_steps", {{"type", "integer"}, {"minimum", 2}}}}}}},
          {"space",
           {{"type", "object"},
            {"required", {"cells"}},
            {"additionalProperties", false},
            {"properties",
             {{"cells",
               {{"description", "cell count (ev) or [n_z1, n_z2] (phev)"},
                {"oneOf",
                 {{{"type", "integer"}, {"minimum", 4}},
                  {{"type", "array"},
                   {"items", {{"type", "integer"}, {"minimum", 4}}},
                   {"minItems", 1},
                   {"maxItems", 2}}}}}}}}}},
          {"series",
           {{"type", "object"},
            {"required", {"g"}},
            {"additionalProperties", false},
            {"description",
             "ev: g (consumption), d (exogenous demand, default 0), sigma (default 0), H (default 30); "
             "phev: g, Q1, Q2 (default 125)"},
            {"properties", {{"g", series}, {"d", series}, {"sigma", series}, {"H", series}, {"Q1", series}, {"Q2", series}}}}},
          {"costs",
           {{"type", "object"},
            {"additionalProperties", false},
            {"properties", {{"running", cost}, {"terminal", cost}}}}},
          {"initial_density",
           {{"type", "object"},
            {"required", {"kind"}},
            {"additionalProperties", false},
            {"description",
             "triangle{center, halfwidth} (ev, support inside [0,1]); truncated_gaussian{mean, variance} "
             "(mean has one entry per axis); histogram{weights | csv} with one weight per cell in storage "
             "order (z2 fastest)"},
            {"properties",
             {{"kind", {{"enum", {"triangle", "truncated_gaussian", "histogram"}}}},
              {"center", number},
              {"halfwidth", {{"type", "number"}, {"exclusiveMinimum", 0}}},
              {"mean", {{"type", "array"}, {"items", number}, {"minItems", 1}, {"maxItems", 2}}},
              {"variance", {{"type", "number"}, {"exclusiveMinimum", 0}}},
              {"weights", {{"type", "array"}, {"items", {{"type", "number"}, {"minimum", 0}}}}},
              {"csv", {{"type", "string"}}}}}}},
          {"price",
           {{"type", "object"},
            {"additionalProperties", false},
            {"description",
             "price = (coupling * [demand]^+ + d_t + offset)^exponent; phev uses d_t = 0 and a fixed oil_price"},
            {"properties",
             {{"exponent", {{"type", "number"}, {"exclusiveMinimum", 0}}},
              {"offset", number},
              {"demand_coupling", {{"type", "boolean"}}},
              {"oil_price", {{"type", "number"}, {"minimum", 0}}}}}}},
          {"solver",
           {{"type", "object"},
            {"additionalProperties", false},
            {"properties",
             {{"max_iters", {{"type", "integer"}, {"minimum", 1}}},
              {"tol", {{"type", "number"}, {"exclusiveMinimum", 0}}},
              {"damping", {{"type", "number"}, {"exclusiveMinimum", 0}, {"maximum", 1}}},
              {"record_history", {{"type", "boolean"}}}}}}}}}};
}

}  // namespace mfg::io
