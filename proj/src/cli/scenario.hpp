#pragma once

#include "qnoise/channels.hpp"
#include "qnoise/integrator.hpp"

#include <json.hpp>

#include <cstdint>
#include <filesystem>
#include <optional>
#include <string>
#include <vector>

namespace qnoise::cli {

struct EstimatorConfig
{
    bool monte_carlo = false;
    std::size_t n = 64;  // Gauss-Hermite nodes
    std::size_t paths = 10000;  // Monte Carlo M
};

struct SweepConfig
{
    std::string parameter;
    std::vector<double> values;
};

/// A parsed scenario.  `channel` and `initial_state` are kept as JSON so a
/// sweep can rewrite one parameter and rebuild the trajectory.
struct ScenarioConfig
{
    nlohmann::json document;
    std::filesystem::path base_dir;

    std::string kind;
    double t_i = 0.0;
    double t_f = 1.0;
    std::size_t points = 200;
    bool grid_from_file = false;

    EstimatorConfig estimator;
    std::uint64_t seed = 0;
    double compare_tol = 1e-7;
    double validate_tol = 1e-10;
    double sigma_sq_max = 80.0;
    PropagationOptions propagation;
    unsigned threads = 0;
    std::size_t synth_paths = 3;
    bool write_states = false;
    std::filesystem::path output_dir = "out";
    std::optional<SweepConfig> sweep;
};

struct Overrides
{
    std::optional<std::filesystem::path> out;
    std::optional<std::uint64_t> seed;
    std::optional<double> tol;
};

/// Throws UsageError (bad structure or value types) or DomainError (values
/// that parse but are not physical).
ScenarioConfig parse_scenario(const nlohmann::json& doc, const std::filesystem::path& base_dir,
                              const Overrides& overrides = {});

ScenarioConfig load_scenario(const std::filesystem::path& path, const Overrides& overrides = {});

/// Builds the reference trajectory described by `doc["channel"]` and
/// `doc["initial_state"]`.
ReferenceTrajectory build_trajectory(const ScenarioConfig& config);

std::vector<double> build_grid(const ScenarioConfig& config, const ReferenceTrajectory& traj);

/// Copy of `config` with one channel parameter replaced (sweeps).
ScenarioConfig with_parameter(const ScenarioConfig& config, const std::string& name, double value);

} // namespace qnoise::cli
