#pragma once

// Classical stochastic drive reproducing a reference trajectory.
//
// Every sample path is labelled by one standard-normal number z.  The phase
// of the excited amplitude carries Phi(t, z) = sigma(t) z on top of the
// deterministic phase theta(t) of rho10:
//
//     a(t)    = sqrt(rho00(t))
//     b(t, z) = sqrt(rho11(t)) exp(i theta(t)) exp(i sigma(t) z)
//
// and the field is whatever makes (a, b) solve i d/dt psi = (B . sigma) psi.

#include "qnoise/channels.hpp"
#include "qnoise/qubit.hpp"

#include <cstddef>
#include <optional>
#include <span>
#include <vector>

namespace qnoise {

inline constexpr double kDefaultSigmaSqMax = 80.0;

/// Saturation of sigma^2.  Identity up to a knee at 3/4 of the ceiling, then a
/// tanh roll-off that approaches the ceiling with matching value and slope.
class PhaseProcess
{
public:
    explicit PhaseProcess(double sigma_sq_max = kDefaultSigmaSqMax);

    double sigma_sq_max() const { return max_; }
    double knee() const { return knee_; }

    /// s(x); s(+inf) = sigma_sq_max.
    double saturate(double raw) const;
    /// ds/dx; 0 at +inf.
    double saturate_slope(double raw) const;

private:
    double max_;
    double knee_;
};

/// E[exp(i sigma Z)] for standard normal Z, i.e. exp(-sigma^2 / 2).
double phase_characteristic(double sigma_sq);

struct PathDraw
{
    std::size_t id = 0;
    double z = 0.0;
    double weight = 1.0;
};

struct AmplitudePair
{
    Complex a;
    Complex b;
    Complex da_dt;
    Complex db_dt;
};

/// The z-independent ingredients of the field at one time.
struct SynthesisJet
{
    double t = 0.0;
    double a = 1.0;  // sqrt(rho00), real and non-negative
    double da = 0.0;
    double b_mod = 0.0;  // sqrt(rho11)
    double db_mod = 0.0;
    double theta = 0.0;
    double dtheta = 0.0;
    double sigma = 0.0;
    /// +inf at the onset of decoherence when -d log_ratio/dt > 0 there.
    double dsigma = 0.0;
    bool clamped = false;

    AmplitudePair amplitudes(double z) const;
    PureState state(double z) const { return {a, b_mod * std::polar(1.0, theta + sigma * z)}; }
    /// Upper bound on |B| over |z| <= z_max.
    double field_bound(double z_max) const;
};

struct FieldEvaluation
{
    FieldSample field;
    /// |Im i(da a* + db* b)|, zero in exact arithmetic.
    double bz_residue = 0.0;
};

/// Field from a jet.  Throws SingularityError when any ingredient is not
/// finite; `path` is only used for the diagnostic.
FieldEvaluation evaluate_field(const SynthesisJet& jet, double z, std::optional<std::size_t> path = std::nullopt);

class Synthesizer
{
public:
    explicit Synthesizer(ReferenceTrajectory traj, double sigma_sq_max = kDefaultSigmaSqMax);

    const ReferenceTrajectory& trajectory() const { return traj_; }
    const PhaseProcess& process() const { return process_; }
    double t_initial() const { return traj_.t_initial(); }

    /// -2 ln(|rho10| / sqrt(rho00 rho11)) before saturation; may be +inf.
    double sigma_squared_raw(double t) const;
    /// Saturated sigma^2(t).  Throws DomainError if rho(t) is not valid to 1e-8.
    double sigma_squared(double t) const;
    double sigma(double t) const;

    SynthesisJet jet(double t) const;
    AmplitudePair amplitudes(double t, double z) const;
    FieldSample field(double t, double z, std::optional<std::size_t> path = std::nullopt) const;
    FieldEvaluation field_with_residue(double t, double z, std::optional<std::size_t> path = std::nullopt) const;
    PureState analytic_state(double t, double z) const;

private:
    ReferenceTrajectory traj_;
    PhaseProcess process_;
};

/// Continuous branch of arg rho10(t) on `grid`.  Throws ResolutionError when
/// neighbouring samples differ by more than pi/2 in phase.
std::vector<double> unwrap_arg(const ReferenceTrajectory& traj, std::span<const double> grid);

} // namespace qnoise
