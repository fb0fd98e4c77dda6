#pragma once

// Path averages rho_est(t) = sum_k w_k |psi_k(t)><psi_k(t)| by Gauss-Hermite
// quadrature in z or by Monte Carlo, and their comparison with the reference.

#include "qnoise/integrator.hpp"
#include "qnoise/qubit.hpp"
#include "qnoise/synthesis.hpp"

#include <cstddef>
#include <cstdint>
#include <optional>
#include <span>
#include <string>
#include <vector>

namespace qnoise {

enum class EstimatorKind { gauss_hermite, monte_carlo };

struct EnsembleOptions
{
    PropagationOptions propagation;
    /// 0 picks std::thread::hardware_concurrency().
    unsigned threads = 0;
    /// Paths per reduction block.  Results depend on this, not on threads.
    std::size_t block_size = 256;
};

/// Standard errors of the mean for the three independent real components.
struct ComponentError
{
    double rho00 = 0.0;
    double re10 = 0.0;
    double im10 = 0.0;
};

struct EnsembleEstimate
{
    EstimatorKind kind = EstimatorKind::gauss_hermite;
    std::size_t samples = 0;  // nodes or paths actually propagated
    std::size_t requested = 0;  // n or M as asked
    std::optional<std::uint64_t> seed;
    std::vector<double> times;
    std::vector<DensityMatrix> rho;
    std::vector<ComponentError> se;
    double max_bz_residue = 0.0;
    double max_norm_drift = 0.0;
    std::size_t steps_per_path = 0;

    std::string describe() const;
};

EnsembleEstimate gh_average(const Synthesizer& synth, std::span<const double> grid, std::size_t n_nodes = 64,
                            const EnsembleOptions& options = {});

EnsembleEstimate mc_average(const Synthesizer& synth, std::span<const double> grid, std::size_t paths,
                            std::uint64_t seed, const EnsembleOptions& options = {});

/// Average over explicit draws (weights need not be normalized).
EnsembleEstimate average_draws(const Synthesizer& synth, std::span<const double> grid,
                               std::span<const PathDraw> draws, const EnsembleOptions& options = {});

/// MC draws 0..M-1 for `seed`, weight 1/M.
std::vector<PathDraw> mc_draws(std::size_t paths, std::uint64_t seed);

struct ComparisonReport
{
    std::vector<double> times;
    std::vector<double> deviation;  // max-abs entry deviation per time
    double worst_deviation = 0.0;
    double worst_time = 0.0;
    std::size_t worst_index = 0;
    double tolerance = 0.0;
    bool passed = false;
    std::string estimator;
};

/// Throws UsageError when the estimate's times differ from `reference_times`
/// or the sizes disagree.
ComparisonReport compare(const EnsembleEstimate& estimate, std::span<const double> reference_times,
                         std::span<const DensityMatrix> reference, double tol);
ComparisonReport compare(const EnsembleEstimate& estimate, const ReferenceTrajectory& traj, double tol);

/// Quadrature reconstruction of rho(t_i) from the initial states psi(t_i, z_k).
ComparisonReport expansion_check_initial(const Synthesizer& synth, std::size_t n_nodes = 64, double tol = 1e-8);

} // namespace qnoise
