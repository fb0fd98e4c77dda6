#include "qnoise/synthesis.hpp"

#include "qnoise/errors.hpp"

#include <cmath>
#include <limits>
#include <sstream>

namespace qnoise {

namespace {

constexpr double kInf = std::numeric_limits<double>::infinity();

bool finite(Complex c)
{
    return std::isfinite(c.real()) && std::isfinite(c.imag());
}

} // namespace

PhaseProcess::PhaseProcess(double sigma_sq_max)
    : max_(sigma_sq_max), knee_(0.75 * sigma_sq_max)
{
    if (!(sigma_sq_max > 0.0) || !std::isfinite(sigma_sq_max)) {
        throw DomainError("sigma_sq_max must be positive and finite");
    }
}

double PhaseProcess::saturate(double raw) const
{
    if (raw <= knee_) {
        return raw;
    }
    if (std::isinf(raw)) {
        return max_;
    }
    const double w = max_ - knee_;
    return knee_ + w * std::tanh((raw - knee_) / w);
}

double PhaseProcess::saturate_slope(double raw) const
{
    if (raw <= knee_) {
        return 1.0;
    }
    if (std::isinf(raw)) {
        return 0.0;
    }
    const double th = std::tanh((raw - knee_) / (max_ - knee_));
    return 1.0 - th * th;
}

double phase_characteristic(double sigma_sq)
{
    if (!(sigma_sq >= 0.0)) {
        throw DomainError("phase_characteristic: sigma^2 must be non-negative");
    }
    return std::exp(-0.5 * sigma_sq);
}

AmplitudePair SynthesisJet::amplitudes(double z) const
{
    const double dphi = z == 0.0 ? dtheta : dtheta + dsigma * z;
    const Complex rot = std::polar(1.0, theta + sigma * z);
    return {a, b_mod * rot, da, Complex(db_mod, b_mod * dphi) * rot};
}

double SynthesisJet::field_bound(double z_max) const
{
    const double dphi = std::abs(dtheta) + (z_max == 0.0 ? 0.0 : std::abs(dsigma) * z_max);
    return std::sqrt(da * da + db_mod * db_mod + b_mod * b_mod * dphi * dphi);
}

FieldEvaluation evaluate_field(const SynthesisJet& jet, double z, std::optional<std::size_t> path)
{
    const AmplitudePair p = jet.amplitudes(z);
    // Bz = Re i(da a* + db* b),  B+ = -i(da* b - db a*)
    const Complex bz = Complex(0.0, 1.0) * (p.da_dt * std::conj(p.a) + std::conj(p.db_dt) * p.b);
    const Complex bplus = Complex(0.0, -1.0) * (std::conj(p.da_dt) * p.b - p.db_dt * std::conj(p.a));
    if (!finite(bz) || !finite(bplus)) {
        std::ostringstream os;
        os << "non-finite field at t = " << jet.t << ", z = " << z;
        if (path) {
            os << " (path " << *path << ")";
        }
        throw SingularityError(jet.t, path, os.str());
    }
    FieldEvaluation out;
    out.field = {jet.t, bplus.real(), bplus.imag(), bz.real()};
    out.bz_residue = std::abs(bz.imag());
    return out;
}

Synthesizer::Synthesizer(ReferenceTrajectory traj, double sigma_sq_max)
    : traj_(std::move(traj)), process_(sigma_sq_max)
{
}

double Synthesizer::sigma_squared_raw(double t) const
{
    const double lr = traj_.jet(t).log_ratio;
    return lr == 0.0 ? 0.0 : -2.0 * lr;
}

double Synthesizer::sigma_squared(double t) const
{
    const ValidityReport r = validate_density(traj_.evaluate(t), 1e-8);
    if (!r.passed()) {
        std::ostringstream os;
        os << "trajectory invalid at t = " << t << ": " << r.describe();
        throw DomainError(os.str());
    }
    return process_.saturate(sigma_squared_raw(t));
}

double Synthesizer::sigma(double t) const
{
    return std::sqrt(sigma_squared(t));
}

SynthesisJet Synthesizer::jet(double t) const
{
    const CoherenceJet c = traj_.jet(t);
    SynthesisJet j;
    j.t = c.t;
    j.clamped = c.clamped;
    j.a = std::sqrt(c.pop0);
    j.b_mod = std::sqrt(c.pop1);
    j.da = j.a > 0.0 ? c.dpop0 / (2.0 * j.a) : (c.dpop0 == 0.0 ? 0.0 : kInf);
    j.db_mod = j.b_mod > 0.0 ? -c.dpop0 / (2.0 * j.b_mod) : (c.dpop0 == 0.0 ? 0.0 : -kInf);
    j.theta = c.phase;
    j.dtheta = c.dphase;

    const double raw = c.log_ratio == 0.0 ? 0.0 : -2.0 * c.log_ratio;
    const double s2 = process_.saturate(raw);
    j.sigma = std::sqrt(s2);
    if (std::isinf(raw)) {
        j.dsigma = 0.0;
    } else if (j.sigma > 0.0) {
        j.dsigma = process_.saturate_slope(raw) * (-2.0 * c.dlog_ratio) / (2.0 * j.sigma);
    } else if (c.dlog_ratio < 0.0) {
        j.dsigma = kInf;
    } else {
        // sigma^2 ~ -l'' (t - t0)^2 near a zero of the log ratio
        j.dsigma = std::sqrt(std::max(0.0, -c.d2log_ratio));
    }
    return j;
}

AmplitudePair Synthesizer::amplitudes(double t, double z) const
{
    return jet(t).amplitudes(z);
}

FieldSample Synthesizer::field(double t, double z, std::optional<std::size_t> path) const
{
    return evaluate_field(jet(t), z, path).field;
}

FieldEvaluation Synthesizer::field_with_residue(double t, double z, std::optional<std::size_t> path) const
{
    return evaluate_field(jet(t), z, path);
}

PureState Synthesizer::analytic_state(double t, double z) const
{
    return jet(t).state(z);
}

std::vector<double> unwrap_arg(const ReferenceTrajectory& traj, std::span<const double> grid)
{
    std::vector<Complex> c;
    c.reserve(grid.size());
    for (double t : grid) {
        c.push_back(traj.evaluate(t).rho10);
    }
    return unwrap_phase(c);
}

} // namespace qnoise
