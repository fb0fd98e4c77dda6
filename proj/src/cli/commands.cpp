#include "qnoise/cli.hpp"

#include "scenario.hpp"

#include "qnoise/ensemble.hpp"
#include "qnoise/errors.hpp"
#include "qnoise/report_io.hpp"

#include <CLI11.hpp>
#include <json.hpp>

#include <algorithm>
#include <chrono>
#include <cmath>
#include <fstream>
#include <iostream>
#include <limits>
#include <sstream>

namespace qnoise::cli {

namespace {

using nlohmann::json;
namespace fs = std::filesystem;

// Fraction of grid times at which a Monte Carlo estimate must sit within
// 4 standard errors (plus the compare tolerance) for `simulate` to pass.
constexpr double kMcRequiredFraction = 0.95;
constexpr double kMcSigmas = 4.0;

struct Outcome
{
    int code = kExitOk;
    std::vector<std::string> outputs;
    json extra = json::object();
};

std::ofstream open_output(const fs::path& dir, const std::string& name, std::vector<std::string>& outputs)
{
    std::ofstream os(dir / name);
    if (!os) {
        throw LoadError(LoadError::Kind::io, std::nullopt, "cannot write " + (dir / name).string());
    }
    outputs.push_back(name);
    return os;
}

void write_json(const fs::path& dir, const std::string& name, const json& j, std::vector<std::string>& outputs)
{
    auto os = open_output(dir, name, outputs);
    os << j.dump(2) << '\n';
}

// JSON has no infinities; write them as strings so nothing is silently lost.
json num(double x)
{
    if (std::isfinite(x)) {
        return x;
    }
    return format_double(x);
}

std::string csv_field(const std::string& s)
{
    if (s.find_first_of(",\"\n") == std::string::npos) {
        return s;
    }
    std::string q = "\"";
    for (char c : s) {
        q += c == '"' ? std::string("\"\"") : std::string(1, c);
    }
    return q + "\"";
}

EnsembleOptions ensemble_options(const ScenarioConfig& c)
{
    EnsembleOptions o;
    o.propagation = c.propagation;
    o.threads = c.threads;
    return o;
}

EnsembleEstimate estimate(const ScenarioConfig& c, const Synthesizer& synth, const std::vector<double>& grid)
{
    if (c.estimator.monte_carlo) {
        return mc_average(synth, grid, c.estimator.paths, c.seed, ensemble_options(c));
    }
    return gh_average(synth, grid, c.estimator.n, ensemble_options(c));
}

std::vector<DensityMatrix> reference_on(const ReferenceTrajectory& traj, const std::vector<double>& grid)
{
    std::vector<DensityMatrix> ref;
    ref.reserve(grid.size());
    for (double t : grid) {
        ref.push_back(traj.evaluate(t));
    }
    return ref;
}

struct Judgement
{
    ComparisonReport report;
    bool passed = false;
    double se_fraction = 1.0;
};

// GH: plain tolerance.  MC: deviations are judged against the standard errors.
Judgement judge(const ScenarioConfig& c, const EnsembleEstimate& est, const std::vector<DensityMatrix>& ref)
{
    Judgement j;
    j.report = compare(est, est.times, ref, c.compare_tol);
    if (!c.estimator.monte_carlo) {
        j.passed = j.report.passed;
        return j;
    }
    std::size_t ok = 0;
    for (std::size_t i = 0; i < ref.size(); ++i) {
        const DensityMatrix& e = est.rho[i];
        const ComponentError& se = est.se[i];
        const double tol = c.compare_tol;
        const bool inside = std::abs(e.rho00 - ref[i].rho00) <= kMcSigmas * se.rho00 + tol &&
                            std::abs(e.rho11 - ref[i].rho11) <= kMcSigmas * se.rho00 + tol &&
                            std::abs(e.rho10.real() - ref[i].rho10.real()) <= kMcSigmas * se.re10 + tol &&
                            std::abs(e.rho10.imag() - ref[i].rho10.imag()) <= kMcSigmas * se.im10 + tol;
        ok += inside ? 1 : 0;
    }
    j.se_fraction = static_cast<double>(ok) / static_cast<double>(ref.size());
    j.passed = j.se_fraction >= kMcRequiredFraction;
    return j;
}

json estimator_json(const ScenarioConfig& c)
{
    if (c.estimator.monte_carlo) {
        return {{"kind", "mc"}, {"M", c.estimator.paths}, {"seed", c.seed}};
    }
    return {{"kind", "gh"}, {"n", c.estimator.n}};
}

std::pair<double, double> entropy_range(const std::vector<DensityMatrix>& rhos)
{
    double lo = std::numeric_limits<double>::infinity();
    double hi = -lo;
    for (const DensityMatrix& r : rhos) {
        const double s = von_neumann_entropy(r, 1e-8);
        lo = std::min(lo, s);
        hi = std::max(hi, s);
    }
    return {lo, hi};
}

// ------------------------------------------------------------------ commands

Outcome cmd_validate(const ScenarioConfig& c, const fs::path& dir)
{
    Outcome out;
    json report = {{"command", "validate"}, {"channel", c.kind}, {"tolerance", c.validate_tol}};
    std::optional<ReferenceTrajectory> traj;
    try {
        traj = build_trajectory(c);
    } catch (const LoadError& e) {
        if (e.kind() != LoadError::Kind::validity) {
            throw;
        }
        report["passed"] = false;
        report["error"] = e.what();
        report["row"] = e.row() ? json(*e.row()) : json(nullptr);
        write_json(dir, "validity.json", report, out.outputs);
        out.code = kExitFailure;
        out.extra["message"] = e.what();
        return out;
    }

    const std::vector<double> grid = build_grid(c, *traj);
    ValidityReport total;
    total.tolerance = c.validate_tol;
    json first = nullptr;
    for (std::size_t i = 0; i < grid.size(); ++i) {
        const ValidityReport r = validate_density(traj->evaluate(grid[i]), c.validate_tol);
        if (!r.passed() && first.is_null()) {
            first = {{"index", i}, {"t", grid[i]}, {"detail", r.describe()}};
        }
        total.merge(r);
    }
    // Between samples of a table the spline may overshoot the coherence
    // bound; those times are reported, the interpolant is clamped there.
    json clamped = json::array();
    if (traj->table()) {
        for (std::size_t i = 0; i + 1 < grid.size(); ++i) {
            const double t = 0.5 * (grid[i] + grid[i + 1]);
            if (traj->jet(t).clamped) {
                clamped.push_back(t);
            }
        }
    }
    report["points"] = grid.size();
    report["passed"] = total.passed();
    report["worst"] = {{"positivity", num(total.positivity_violation)},
                       {"trace", num(total.trace_violation)},
                       {"coherence", num(total.coherence_violation)}};
    report["first_violation"] = first;
    report["clamped_times"] = clamped;
    write_json(dir, "validity.json", report, out.outputs);
    if (!total.passed()) {
        out.code = kExitFailure;
        out.extra["message"] = "validation failed: " + total.describe();
    }
    return out;
}

Outcome cmd_synthesize(const ScenarioConfig& c, const fs::path& dir)
{
    Outcome out;
    const Synthesizer synth(build_trajectory(c), c.sigma_sq_max);
    const std::vector<double> grid = build_grid(c, synth.trajectory());
    const std::vector<PathDraw> draws = mc_draws(c.synth_paths, c.seed);
    double z_max = 0.0;
    for (const PathDraw& d : draws) {
        z_max = std::max(z_max, std::abs(d.z));
    }
    const StepPlan plan(synth, grid, z_max, c.propagation);
    std::vector<PathTrace> traces;
    double residue = 0.0;
    double drift = 0.0;
    for (const PathDraw& d : draws) {
        traces.push_back(propagate_path(plan, d, true));
        residue = std::max(residue, traces.back().max_bz_residue);
        drift = std::max(drift, traces.back().norm_drift);
    }
    {
        auto os = open_output(dir, "fields.csv", out.outputs);
        write_field_trace_csv(os, traces);
    }
    if (c.write_states) {
        auto os = open_output(dir, "states.csv", out.outputs);
        write_state_csv(os, traces);
    }
    out.extra = {{"paths", draws.size()}, {"max_bz_residue", residue}, {"max_norm_drift", drift},
                 {"steps_per_path", plan.total_steps()}};
    return out;
}

Outcome cmd_simulate(const ScenarioConfig& c, const fs::path& dir)
{
    Outcome out;
    const Synthesizer synth(build_trajectory(c), c.sigma_sq_max);
    const std::vector<double> grid = build_grid(c, synth.trajectory());
    const std::vector<DensityMatrix> ref = reference_on(synth.trajectory(), grid);
    const EnsembleEstimate est = estimate(c, synth, grid);
    const Judgement j = judge(c, est, ref);

    {
        auto os = open_output(dir, "result.csv", out.outputs);
        write_result_csv(os, est, ref);
    }
    const auto [s_lo, s_hi] = entropy_range(ref);
    json summary = {
        {"command", "simulate"},
        {"channel", c.kind},
        {"estimator", estimator_json(c)},
        {"points", grid.size()},
        {"tolerance", c.compare_tol},
        {"worst_deviation", num(j.report.worst_deviation)},
        {"worst_time", j.report.worst_time},
        {"passed", j.passed},
        {"paths_propagated", est.samples},
        {"steps_per_path", est.steps_per_path},
        {"max_bz_residue", est.max_bz_residue},
        {"max_norm_drift", est.max_norm_drift},
        {"entropy_ref", {{"min", s_lo}, {"max", s_hi}, {"initial", von_neumann_entropy(ref.front(), 1e-8)},
                         {"final", von_neumann_entropy(ref.back(), 1e-8)}}},
    };
    if (c.estimator.monte_carlo) {
        double max_se = 0.0;
        for (const ComponentError& se : est.se) {
            max_se = std::max({max_se, se.rho00, se.re10, se.im10});
        }
        summary["monte_carlo"] = {{"sigmas", kMcSigmas},
                                  {"required_fraction", kMcRequiredFraction},
                                  {"within_fraction", j.se_fraction},
                                  {"max_standard_error", max_se}};
    }
    write_json(dir, "summary.json", summary, out.outputs);
    out.extra = {{"passed", j.passed}, {"worst_deviation", num(j.report.worst_deviation)}};
    if (!j.passed) {
        out.code = kExitFailure;
        std::ostringstream os;
        os << "comparison failed: worst deviation " << j.report.worst_deviation << " at t = " << j.report.worst_time
           << " (tolerance " << c.compare_tol << ", " << est.describe() << ")";
        out.extra["message"] = os.str();
    }
    return out;
}

Outcome cmd_sweep(const ScenarioConfig& c, const fs::path& dir)
{
    Outcome out;
    const std::string& param = c.sweep->parameter;
    std::ostringstream csv;
    csv << "parameter,value,gamma_mid,entropy_min,entropy_max,worst_deviation,final_rho11,status,error\n";
    bool all_passed = true;
    for (double value : c.sweep->values) {
        csv << param << ',' << format_double(value) << ',';
        try {
            const ScenarioConfig point = with_parameter(c, param, value);
            const Synthesizer synth(build_trajectory(point), point.sigma_sq_max);
            const ReferenceTrajectory& traj = synth.trajectory();
            const std::vector<double> grid = build_grid(point, traj);
            const std::vector<DensityMatrix> ref = reference_on(traj, grid);
            const EnsembleEstimate est = estimate(point, synth, grid);
            const Judgement j = judge(point, est, ref);
            double gamma_mid = 0.0;
            if (const auto* p = traj.recurrence_params()) {
                gamma_mid = traj.decoherence_exponent(traj.t_initial() + 0.5 * p->period);
            } else {
                gamma_mid = traj.decoherence_exponent(0.5 * (grid.front() + grid.back()));
            }
            const auto [s_lo, s_hi] = entropy_range(ref);
            csv << format_double(gamma_mid) << ',' << format_double(s_lo) << ',' << format_double(s_hi) << ','
                << format_double(j.report.worst_deviation) << ',' << format_double(ref.back().rho11) << ','
                << (j.passed ? "pass" : "fail") << ",\n";
            all_passed = all_passed && j.passed;
        } catch (const UsageError&) {
            throw;
        } catch (const std::exception& e) {
            csv << ",,,,,error," << csv_field(e.what()) << '\n';
            all_passed = false;
        }
    }
    auto os = open_output(dir, "sweep.csv", out.outputs);
    os << csv.str();
    if (!all_passed) {
        out.code = kExitFailure;
        out.extra["message"] = "sweep: at least one point failed or raised an error";
    }
    return out;
}

int exit_code_for(const std::exception& e)
{
    if (const auto* le = dynamic_cast<const LoadError*>(&e)) {
        return le->kind() == LoadError::Kind::validity ? kExitFailure : kExitUsage;
    }
    if (dynamic_cast<const UsageError*>(&e) || dynamic_cast<const json::exception*>(&e) ||
        dynamic_cast<const fs::filesystem_error*>(&e)) {
        return kExitUsage;
    }
    return kExitFailure;
}

std::string describe(const std::exception& e)
{
    std::string msg = e.what();
    if (const auto* le = dynamic_cast<const LoadError*>(&e)) {
        if (le->row() && msg.find("row ") == std::string::npos) {
            msg += " (row " + std::to_string(*le->row()) + ")";
        }
    }
    if (const auto* se = dynamic_cast<const SingularityError*>(&e)) {
        std::ostringstream os;
        os << msg << " [t = " << se->time();
        if (se->path()) {
            os << ", path " << *se->path();
        }
        os << "]";
        msg = os.str();
    }
    return msg;
}

} // namespace

int run(const std::vector<std::string>& args, std::ostream& out, std::ostream& err)
{
    CLI::App app{"Classical stochastic field synthesis for single-qubit open-system trajectories", "qnoise"};
    app.set_version_flag("--version", QNOISE_VERSION);
    app.require_subcommand(1);

    std::string config_path;
    std::string out_dir;
    std::uint64_t seed = 0;
    double tol = 0.0;
    const std::vector<std::pair<const char*, const char*>> commands = {
        {"validate", "Check the reference trajectory on the grid"},
        {"synthesize", "Write per-path field traces"},
        {"simulate", "Propagate the ensemble and compare with the reference"},
        {"sweep", "Repeat simulate over one channel parameter"},
    };
    for (const auto& [name, help] : commands) {
        CLI::App* sub = app.add_subcommand(name, help);
        sub->add_option("--config", config_path, "Scenario JSON file")->required();
        sub->add_option("--out", out_dir, "Output directory (overrides output.dir)");
        sub->add_option("--seed", seed, "Seed (overrides the config)");
        sub->add_option("--tol", tol, "Comparison tolerance (overrides tolerances.compare)");
    }

    std::vector<std::string> rev(args.rbegin(), args.rend());
    if (!rev.empty()) {
        rev.pop_back();  // program name
    }
    try {
        app.parse(rev);
    } catch (const CLI::ParseError& e) {
        const int code = app.exit(e, out, err);
        return code == 0 ? kExitOk : kExitUsage;
    }

    CLI::App* sub = app.get_subcommands().front();
    const std::string command = sub->get_name();
    const auto started = std::chrono::steady_clock::now();
    try {
        Overrides ov;
        if (sub->count("--out")) {
            ov.out = out_dir;
        }
        if (sub->count("--seed")) {
            ov.seed = seed;
        }
        if (sub->count("--tol")) {
            if (!(tol >= 0.0)) {
                throw UsageError("--tol must be non-negative");
            }
            ov.tol = tol;
        }
        const ScenarioConfig config = load_scenario(config_path, ov);
        if (command == "sweep" && (!config.sweep || config.sweep->values.empty())) {
            throw UsageError("sweep: the config needs a non-empty 'sweep' range (parameter and values)");
        }
        if (command == "sweep") {
            with_parameter(config, config.sweep->parameter, config.sweep->values.front());
        }
        const fs::path dir = config.output_dir;
        fs::create_directories(dir);

        Outcome result;
        std::string failure;
        try {
            if (command == "validate") {
                result = cmd_validate(config, dir);
            } else if (command == "synthesize") {
                result = cmd_synthesize(config, dir);
            } else if (command == "simulate") {
                result = cmd_simulate(config, dir);
            } else {
                result = cmd_sweep(config, dir);
            }
        } catch (const UsageError&) {
            throw;
        } catch (const std::exception& e) {
            result.code = exit_code_for(e);
            failure = describe(e);
        }

        const double seconds = std::chrono::duration<double>(std::chrono::steady_clock::now() - started).count();
        json manifest = {
            {"command", command},
            {"version", QNOISE_VERSION},
            {"config_path", config_path},
            {"config", config.document},
            {"seed", config.seed},
            {"outputs", result.outputs},
            {"exit_code", result.code},
            {"passed", result.code == kExitOk},
            {"summary", result.extra},
            {"timings", {{"wall_seconds", seconds}}},
        };
        if (!failure.empty()) {
            manifest["error"] = failure;
        }
        std::vector<std::string> ignored;
        write_json(dir, "manifest.json", manifest, ignored);

        if (!failure.empty()) {
            err << "qnoise " << command << ": error: " << failure << '\n';
        } else if (result.code != kExitOk) {
            err << "qnoise " << command << ": " << result.extra.value("message", std::string("failed")) << '\n';
        } else {
            out << "qnoise " << command << ": ok (" << dir.string() << ")\n";
        }
        return result.code;
    } catch (const std::exception& e) {
        err << "qnoise " << command << ": error: " << describe(e) << '\n';
        return exit_code_for(e);
    }
}

int run(int argc, char** argv)
{
    return run(std::vector<std::string>(argv, argv + argc), std::cout, std::cerr);
}

} // namespace qnoise::cli
