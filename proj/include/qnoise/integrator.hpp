#pragma once

// Per-path propagation: a product of exact SU(2) exponentials along the time
// grid.
//
// The default scheme is the fourth-order commutator-free exponential built on
// the two-point Gauss rule; the exponential midpoint rule (second order) is
// kept as an option.  The first grid interval is traversed in u with
// t = t0 + h u^2, which absorbs the sqrt(t - t0) onsets that some channels
// have at the initial time.

#include "qnoise/qubit.hpp"
#include "qnoise/synthesis.hpp"

#include <cstddef>
#include <optional>
#include <span>
#include <vector>

namespace qnoise {

enum class Scheme { magnus4, midpoint };

struct PropagationOptions
{
    /// Largest rotation angle |B| dt of one exponential factor (rad).
    double max_angle = 0.1;
    /// Largest error of the node rule for the change of phase and moduli
    /// over one factor (sigma z_max + theta, a, |b|), checked against the
    /// exact endpoint values.  Catches fields that vary faster than they
    /// rotate.
    double quadrature_tolerance = 1e-10;
    std::size_t min_substeps = 1;
    /// Multiplies every interval's substep count after the angle control;
    /// 2 halves dt exactly.
    std::size_t refinement = 1;
    Scheme scheme = Scheme::magnus4;
};

/// Time nodes and z-independent jets of every exponential factor, shared by
/// all paths whose |z| does not exceed z_max().
class StepPlan
{
public:
    /// Throws DomainError for a grid that is not strictly increasing, lies
    /// outside the trajectory, or has fewer than two points.
    StepPlan(const Synthesizer& synth, std::span<const double> grid, double z_max,
             const PropagationOptions& options = {});

    const Synthesizer& synthesizer() const { return *synth_; }
    const std::vector<double>& grid() const { return grid_; }
    double z_max() const { return z_max_; }
    const PropagationOptions& options() const { return options_; }

    std::size_t substeps(std::size_t interval) const { return substeps_[interval]; }
    std::size_t total_steps() const { return offsets_.back(); }
    /// True when sigma and its derivative vanish at every node, so all
    /// paths coincide.
    bool deterministic() const { return deterministic_; }

    struct Node
    {
        SynthesisJet jet;
        double dt_du = 1.0;  // Jacobian of the interval's time map
    };
    struct Step
    {
        double du = 0.0;
        Node first;
        Node second;  // unused for the midpoint rule
    };
    std::span<const Step> steps(std::size_t interval) const;

    /// Jets at the interval midpoints, used for field traces.
    const std::vector<SynthesisJet>& midpoints() const { return midpoints_; }
    /// Jets at the grid times, used for the initial state.
    const std::vector<SynthesisJet>& grid_jets() const { return grid_jets_; }

private:
    struct Assessment
    {
        double angle = 0.0;
        double defect = 0.0;
    };
    std::vector<Step> build_interval(std::size_t k, std::size_t m, Assessment* check) const;

    const Synthesizer* synth_;
    std::vector<double> grid_;
    double z_max_;
    PropagationOptions options_;
    std::vector<std::size_t> substeps_;
    std::vector<std::size_t> offsets_;
    std::vector<Step> all_steps_;
    std::vector<SynthesisJet> midpoints_;
    std::vector<SynthesisJet> grid_jets_;
    bool deterministic_ = true;
};

struct PathTrace
{
    PathDraw draw;
    std::vector<double> times;
    std::vector<PureState> states;  // at the grid times
    std::vector<FieldSample> fields;  // at the interval midpoints
    double norm_drift = 0.0;
    double max_bz_residue = 0.0;
    std::size_t steps = 0;
};

/// Throws SingularityError (with the path id) and DomainError when |z|
/// exceeds the plan's z_max.
PathTrace propagate_path(const StepPlan& plan, const PathDraw& draw, bool keep_fields = true);

PathTrace propagate_path(const Synthesizer& synth, std::span<const double> grid, double z,
                         const PropagationOptions& options = {});

/// 1 - |<psi1|psi2>| for normalized states, computed as
/// min over chi of |psi2 - e^{i chi} psi1|^2 / 2 to avoid cancellation.
double path_infidelity(const PureState& psi1, const PureState& psi2);

/// |i (psi(t+h) - psi(t-h)) / 2h - H(t) psi(t)| for the analytic path.
double schrodinger_residual(const Synthesizer& synth, double t, double z, double h);

} // namespace qnoise
