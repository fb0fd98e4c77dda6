#include "scenario.hpp"

#include "qnoise/errors.hpp"

#include <cmath>
#include <fstream>
#include <initializer_list>
#include <map>
#include <set>
#include <sstream>

namespace qnoise::cli {

namespace {

using nlohmann::json;

void check_keys(const json& obj, const std::string& where, std::initializer_list<const char*> allowed)
{
    if (!obj.is_object()) {
        throw UsageError(where + ": expected a JSON object");
    }
    std::set<std::string> ok(allowed.begin(), allowed.end());
    for (const auto& item : obj.items()) {
        if (!ok.count(item.key())) {
            throw UsageError(where + ": unknown key '" + item.key() + "'");
        }
    }
}

double number(const json& obj, const std::string& where, const char* key)
{
    if (!obj.contains(key)) {
        throw UsageError(where + ": missing '" + key + "'");
    }
    const json& v = obj.at(key);
    if (!v.is_number()) {
        throw UsageError(where + "." + key + ": expected a number");
    }
    return v.get<double>();
}

double number_or(const json& obj, const std::string& where, const char* key, double fallback)
{
    return obj.contains(key) ? number(obj, where, key) : fallback;
}

std::uint64_t unsigned_integer(const json& v, const std::string& where)
{
    if (v.is_number_unsigned()) {
        return v.get<std::uint64_t>();
    }
    if (v.is_number_integer() && v.get<std::int64_t>() >= 0) {
        return static_cast<std::uint64_t>(v.get<std::int64_t>());
    }
    if (v.is_number_float()) {
        const double d = v.get<double>();
        if (d >= 0.0 && d == std::floor(d) && d < 1.8e19) {
            return static_cast<std::uint64_t>(d);
        }
    }
    throw UsageError(where + ": expected a non-negative integer");
}

std::size_t count_or(const json& obj, const std::string& where, const char* key, std::size_t fallback)
{
    return obj.contains(key) ? static_cast<std::size_t>(unsigned_integer(obj.at(key), where + "." + key))
                             : fallback;
}

Complex complex_value(const json& v, const std::string& where)
{
    if (v.is_number()) {
        return v.get<double>();
    }
    if (v.is_array() && v.size() == 2 && v[0].is_number() && v[1].is_number()) {
        return {v[0].get<double>(), v[1].get<double>()};
    }
    throw UsageError(where + ": expected a number or [re, im]");
}

std::vector<double> number_array(const json& v, const std::string& where)
{
    if (!v.is_array()) {
        throw UsageError(where + ": expected an array of numbers");
    }
    std::vector<double> out;
    for (const json& x : v) {
        if (!x.is_number()) {
            throw UsageError(where + ": expected an array of numbers");
        }
        out.push_back(x.get<double>());
    }
    return out;
}

const json& section(const json& doc, const char* key)
{
    if (!doc.contains(key)) {
        throw UsageError(std::string("config: missing '") + key + "' section");
    }
    return doc.at(key);
}

} // namespace

ScenarioConfig parse_scenario(const json& doc, const std::filesystem::path& base_dir, const Overrides& overrides)
{
    check_keys(doc, "config",
               {"channel", "initial_state", "grid", "estimator", "tolerances", "sigma_sq_max", "integrator",
                "synthesize", "seed", "output", "sweep", "description"});
    ScenarioConfig c;
    c.document = doc;
    c.base_dir = base_dir;

    const json& ch = section(doc, "channel");
    if (!ch.is_object() || !ch.contains("kind") || !ch.at("kind").is_string()) {
        throw UsageError("channel: missing string 'kind'");
    }
    c.kind = ch.at("kind").get<std::string>();
    if (c.kind == "recurrence") {
        check_keys(ch, "channel", {"kind", "omega0", "N", "P", "couplings"});
    } else if (c.kind == "ohmic") {
        check_keys(ch, "channel", {"kind", "J0", "Lambda", "kBT", "omega0"});
    } else if (c.kind == "amplitude_damping") {
        check_keys(ch, "channel", {"kind", "T1", "gamma_table"});
        if (ch.contains("T1") == ch.contains("gamma_table")) {
            throw UsageError("channel: amplitude_damping needs exactly one of 'T1' or 'gamma_table'");
        }
    } else if (c.kind == "tabulated") {
        check_keys(ch, "channel", {"kind", "file"});
        if (!ch.contains("file") || !ch.at("file").is_string()) {
            throw UsageError("channel: tabulated needs a string 'file'");
        }
    } else {
        throw UsageError("channel.kind: unknown kind '" + c.kind +
                         "' (expected recurrence, ohmic, amplitude_damping or tabulated)");
    }
    if (c.kind == "tabulated") {
        if (doc.contains("initial_state")) {
            throw UsageError("initial_state: a tabulated trajectory takes its initial state from the file");
        }
    } else {
        const json& s = section(doc, "initial_state");
        check_keys(s, "initial_state", {"alpha", "beta", "rho00", "rho11", "rho10"});
        const bool pure = s.contains("alpha") || s.contains("beta");
        const bool mixed = s.contains("rho00") || s.contains("rho11") || s.contains("rho10");
        if (pure == mixed) {
            throw UsageError("initial_state: give either alpha and beta, or rho00, rho11 and rho10");
        }
    }

    if (doc.contains("grid")) {
        const json& g = doc.at("grid");
        check_keys(g, "grid", {"t_i", "t_f", "points", "steps"});
        c.t_i = number_or(g, "grid", "t_i", 0.0);
        c.t_f = number(g, "grid", "t_f");
        if (g.contains("points") && g.contains("steps")) {
            throw UsageError("grid: give 'points' or 'steps', not both");
        }
        if (g.contains("steps")) {
            c.points = count_or(g, "grid", "steps", 199) + 1;
        } else {
            c.points = count_or(g, "grid", "points", 200);
        }
        if (c.points < 2) {
            throw UsageError("grid: need at least 2 points");
        }
        if (!(c.t_f > c.t_i) || !std::isfinite(c.t_i) || !std::isfinite(c.t_f)) {
            throw UsageError("grid: require finite t_i < t_f");
        }
    } else if (c.kind == "tabulated") {
        c.grid_from_file = true;
    } else {
        throw UsageError("config: missing 'grid' section");
    }

    if (doc.contains("seed")) {
        c.seed = unsigned_integer(doc.at("seed"), "seed");
    }
    if (doc.contains("estimator")) {
        const json& e = doc.at("estimator");
        check_keys(e, "estimator", {"kind", "n", "M", "seed"});
        const std::string kind = e.value("kind", std::string("gh"));
        if (kind == "gh") {
            if (e.contains("M") || e.contains("seed")) {
                throw UsageError("estimator: 'M' and 'seed' belong to kind 'mc'");
            }
            c.estimator.n = count_or(e, "estimator", "n", 64);
            if (c.estimator.n < 2 || c.estimator.n > 256) {
                throw UsageError("estimator.n: must lie in [2, 256]");
            }
        } else if (kind == "mc") {
            if (e.contains("n")) {
                throw UsageError("estimator: 'n' belongs to kind 'gh'");
            }
            c.estimator.monte_carlo = true;
            c.estimator.paths = count_or(e, "estimator", "M", 10000);
            if (c.estimator.paths < 2) {
                throw UsageError("estimator.M: need at least 2 paths");
            }
            if (e.contains("seed")) {
                c.seed = unsigned_integer(e.at("seed"), "estimator.seed");
            }
        } else {
            throw UsageError("estimator.kind: expected 'gh' or 'mc', got '" + kind + "'");
        }
    }
    if (doc.contains("tolerances")) {
        const json& t = doc.at("tolerances");
        check_keys(t, "tolerances", {"compare", "validate"});
        c.compare_tol = number_or(t, "tolerances", "compare", c.compare_tol);
        c.validate_tol = number_or(t, "tolerances", "validate", c.validate_tol);
    }
    c.sigma_sq_max = number_or(doc, "config", "sigma_sq_max", c.sigma_sq_max);
    if (doc.contains("integrator")) {
        const json& in = doc.at("integrator");
        check_keys(in, "integrator", {"max_angle", "min_substeps", "scheme", "quadrature_tolerance", "threads"});
        c.propagation.max_angle = number_or(in, "integrator", "max_angle", c.propagation.max_angle);
        c.propagation.quadrature_tolerance =
            number_or(in, "integrator", "quadrature_tolerance", c.propagation.quadrature_tolerance);
        c.propagation.min_substeps = count_or(in, "integrator", "min_substeps", 1);
        c.threads = static_cast<unsigned>(count_or(in, "integrator", "threads", 0));
        const std::string scheme = in.value("scheme", std::string("magnus4"));
        if (scheme == "magnus4") {
            c.propagation.scheme = Scheme::magnus4;
        } else if (scheme == "midpoint") {
            c.propagation.scheme = Scheme::midpoint;
        } else {
            throw UsageError("integrator.scheme: expected 'magnus4' or 'midpoint'");
        }
        if (!(c.propagation.max_angle > 0.0) || !(c.propagation.quadrature_tolerance > 0.0)) {
            throw UsageError("integrator: max_angle and quadrature_tolerance must be positive");
        }
    }
    if (doc.contains("synthesize")) {
        const json& s = doc.at("synthesize");
        check_keys(s, "synthesize", {"paths", "states"});
        c.synth_paths = count_or(s, "synthesize", "paths", c.synth_paths);
        if (c.synth_paths < 1) {
            throw UsageError("synthesize.paths: need at least one path");
        }
        if (s.contains("states")) {
            if (!s.at("states").is_boolean()) {
                throw UsageError("synthesize.states: expected true or false");
            }
            c.write_states = s.at("states").get<bool>();
        }
    }
    if (doc.contains("output")) {
        const json& o = doc.at("output");
        check_keys(o, "output", {"dir"});
        if (o.contains("dir")) {
            if (!o.at("dir").is_string()) {
                throw UsageError("output.dir: expected a string");
            }
            c.output_dir = base_dir / o.at("dir").get<std::string>();
        }
    }
    if (doc.contains("sweep")) {
        const json& s = doc.at("sweep");
        check_keys(s, "sweep", {"parameter", "values", "from", "to", "count"});
        SweepConfig sw;
        if (!s.contains("parameter") || !s.at("parameter").is_string()) {
            throw UsageError("sweep: missing string 'parameter'");
        }
        sw.parameter = s.at("parameter").get<std::string>();
        if (s.contains("values")) {
            sw.values = number_array(s.at("values"), "sweep.values");
        } else if (s.contains("count")) {
            const double from = number(s, "sweep", "from");
            const double to = number(s, "sweep", "to");
            const std::size_t n = count_or(s, "sweep", "count", 0);
            for (std::size_t k = 0; k < n; ++k) {
                sw.values.push_back(n == 1 ? from : from + (to - from) * static_cast<double>(k) / static_cast<double>(n - 1));
            }
        }
        c.sweep = std::move(sw);
    }

    if (overrides.out) {
        c.output_dir = *overrides.out;
    }
    if (overrides.seed) {
        c.seed = *overrides.seed;
    }
    if (overrides.tol) {
        c.compare_tol = *overrides.tol;
    }
    if (!(c.compare_tol >= 0.0) || !(c.validate_tol > 0.0)) {
        throw UsageError("tolerances: compare must be >= 0 and validate > 0");
    }
    if (!(c.sigma_sq_max > 0.0) || !std::isfinite(c.sigma_sq_max)) {
        throw UsageError("sigma_sq_max: must be positive");
    }
    return c;
}

ScenarioConfig load_scenario(const std::filesystem::path& path, const Overrides& overrides)
{
    std::ifstream is(path);
    if (!is) {
        throw LoadError(LoadError::Kind::io, std::nullopt, "cannot open config file " + path.string());
    }
    json doc;
    try {
        doc = json::parse(is);
    } catch (const json::parse_error& e) {
        throw UsageError(path.string() + ": " + e.what());
    }
    return parse_scenario(doc, path.parent_path(), overrides);
}

ReferenceTrajectory build_trajectory(const ScenarioConfig& c)
{
    const json& ch = c.document.at("channel");
    if (c.kind == "tabulated") {
        std::filesystem::path file = ch.at("file").get<std::string>();
        if (file.is_relative()) {
            file = c.base_dir / file;
        }
        return load_tabulated(file, c.validate_tol);
    }

    const json& s = c.document.at("initial_state");
    std::optional<InitialPureState> pure;
    DensityMatrix mixed;
    if (s.contains("alpha") || s.contains("beta")) {
        InitialPureState p;
        p.alpha = s.contains("alpha") ? complex_value(s.at("alpha"), "initial_state.alpha") : Complex(0.0);
        p.beta = s.contains("beta") ? complex_value(s.at("beta"), "initial_state.beta") : Complex(0.0);
        p.validate(1e-10);
        pure = p;
    } else {
        mixed.rho00 = number(s, "initial_state", "rho00");
        mixed.rho11 = number(s, "initial_state", "rho11");
        mixed.rho10 = s.contains("rho10") ? complex_value(s.at("rho10"), "initial_state.rho10") : Complex(0.0);
    }
    auto make = [&](auto params, auto factory) {
        return pure ? factory(params, *pure, c.t_i) : factory(params, mixed, c.t_i);
    };

    if (c.kind == "recurrence") {
        RecurrenceParams p;
        p.omega0 = number_or(ch, "channel", "omega0", 0.0);
        if (ch.contains("N")) {
            const double n = number(ch, "channel", "N");
            if (n != std::floor(n) || n < 1 || n > 1e6) {
                throw DomainError("channel.N: must be a positive integer");
            }
            p.modes = static_cast<int>(n);
        }
        p.period = number_or(ch, "channel", "P", 1.0);
        if (ch.contains("couplings")) {
            const json& g = ch.at("couplings");
            if (!g.is_array()) {
                throw UsageError("channel.couplings: expected an array");
            }
            for (std::size_t k = 0; k < g.size(); ++k) {
                p.couplings.push_back(complex_value(g[k], "channel.couplings[" + std::to_string(k) + "]"));
            }
        }
        return make(p, [](const auto& q, const auto& s0, double t) { return ReferenceTrajectory::recurrence(q, s0, t); });
    }
    if (c.kind == "ohmic") {
        OhmicParams p;
        p.coupling = number(ch, "channel", "J0");
        p.cutoff = number(ch, "channel", "Lambda");
        p.temperature = number(ch, "channel", "kBT");
        p.omega0 = number_or(ch, "channel", "omega0", 0.0);
        return make(p, [](const auto& q, const auto& s0, double t) { return ReferenceTrajectory::ohmic(q, s0, t); });
    }
    AmplitudeDampingParams p;
    if (ch.contains("T1")) {
        p.decay = DecayCurve::exponential(number(ch, "channel", "T1"));
    } else {
        const json& tab = ch.at("gamma_table");
        check_keys(tab, "channel.gamma_table", {"t", "gamma"});
        if (!tab.contains("t") || !tab.contains("gamma")) {
            throw UsageError("channel.gamma_table: needs arrays 't' and 'gamma'");
        }
        p.decay = DecayCurve::tabulated(number_array(tab.at("t"), "channel.gamma_table.t"),
                                        number_array(tab.at("gamma"), "channel.gamma_table.gamma"));
    }
    return make(p, [](const auto& q, const auto& s0, double t) { return ReferenceTrajectory::amplitude_damping(q, s0, t); });
}

std::vector<double> build_grid(const ScenarioConfig& c, const ReferenceTrajectory& traj)
{
    if (c.grid_from_file) {
        return traj.table()->times;
    }
    std::vector<double> grid = uniform_grid(c.t_i, c.t_f, c.points);
    if (!traj.contains(grid.front()) || !traj.contains(grid.back())) {
        std::ostringstream os;
        os << "grid [" << c.t_i << ", " << c.t_f << "] is outside the trajectory domain [" << traj.t_initial()
           << ", " << traj.t_final() << "]";
        throw RangeError(os.str());
    }
    return grid;
}

ScenarioConfig with_parameter(const ScenarioConfig& c, const std::string& name, double value)
{
    ScenarioConfig out = c;
    if (name == "sigma_sq_max") {
        out.sigma_sq_max = value;
        return out;
    }
    static const std::map<std::string, std::set<std::string>> allowed = {
        {"recurrence", {"omega0", "N", "P"}},
        {"ohmic", {"J0", "Lambda", "kBT", "omega0"}},
        {"amplitude_damping", {"T1"}},
        {"tabulated", {}},
    };
    const auto& names = allowed.at(c.kind);
    if (!names.count(name)) {
        std::string list = "sigma_sq_max";
        for (const auto& n : names) {
            list += ", " + n;
        }
        throw UsageError("sweep.parameter: '" + name + "' cannot be swept for " + c.kind + " (choose from " + list + ")");
    }
    if (name == "T1" && c.document.at("channel").contains("gamma_table")) {
        throw UsageError("sweep.parameter: T1 cannot be swept when the channel uses gamma_table");
    }
    out.document["channel"][name] = value;
    return out;
}

} // namespace qnoise::cli
