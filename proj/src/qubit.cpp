#include "qnoise/qubit.hpp"

#include "qnoise/errors.hpp"

#include <algorithm>
#include <cmath>
#include <limits>
#include <sstream>

namespace qnoise {

double PureState::norm() const
{
    return std::sqrt(std::norm(a) + std::norm(b));
}

DensityMatrix DensityMatrix::projector(const PureState& psi)
{
    return {std::norm(psi.a), std::norm(psi.b), psi.b * std::conj(psi.a)};
}

double BlochVector::length() const
{
    return std::sqrt(nx * nx + ny * ny + nz * nz);
}

PureState SU2Matrix::apply(const PureState& psi) const
{
    return {u00 * psi.a + u01 * psi.b, u10 * psi.a + u11 * psi.b};
}

SU2Matrix SU2Matrix::adjoint() const
{
    return {std::conj(u00), std::conj(u10), std::conj(u01), std::conj(u11)};
}

Complex SU2Matrix::determinant() const
{
    return u00 * u11 - u01 * u10;
}

double SU2Matrix::unitarity_defect() const
{
    const SU2Matrix p = adjoint() * *this;
    return std::max({std::abs(p.u00 - 1.0), std::abs(p.u01), std::abs(p.u10), std::abs(p.u11 - 1.0)});
}

SU2Matrix operator*(const SU2Matrix& l, const SU2Matrix& r)
{
    return {l.u00 * r.u00 + l.u01 * r.u10, l.u00 * r.u01 + l.u01 * r.u11,
            l.u10 * r.u00 + l.u11 * r.u10, l.u10 * r.u01 + l.u11 * r.u11};
}

double FieldSample::magnitude() const
{
    return std::sqrt(bx * bx + by * by + bz * bz);
}

void ValidityReport::merge(const ValidityReport& other)
{
    positivity_violation = std::max(positivity_violation, other.positivity_violation);
    trace_violation = std::max(trace_violation, other.trace_violation);
    coherence_violation = std::max(coherence_violation, other.coherence_violation);
}

std::string ValidityReport::describe() const
{
    std::ostringstream os;
    os.precision(3);
    os << "positivity " << (positivity_ok() ? "ok" : "VIOLATED") << " (" << positivity_violation << "), "
       << "trace " << (trace_ok() ? "ok" : "VIOLATED") << " (" << trace_violation << "), "
       << "coherence bound " << (coherence_ok() ? "ok" : "VIOLATED") << " (" << coherence_violation << ")";
    return os.str();
}

ValidityReport validate_density(const DensityMatrix& rho, double tol)
{
    if (!(tol > 0.0)) {
        throw DomainError("validate_density: tolerance must be positive");
    }
    constexpr double inf = std::numeric_limits<double>::infinity();
    ValidityReport report;
    report.tolerance = tol;

    const bool finite = std::isfinite(rho.rho00) && std::isfinite(rho.rho11) &&
                        std::isfinite(rho.rho10.real()) && std::isfinite(rho.rho10.imag());
    if (!finite) {
        report.positivity_violation = inf;
        report.trace_violation = inf;
        report.coherence_violation = inf;
        return report;
    }

    report.positivity_violation = std::max(0.0, -std::min(rho.rho00, rho.rho11));
    report.trace_violation = std::abs(rho.rho00 + rho.rho11 - 1.0);
    const double bound = std::sqrt(std::max(0.0, rho.rho00) * std::max(0.0, rho.rho11));
    report.coherence_violation = std::max(0.0, std::abs(rho.rho10) - bound);
    return report;
}

std::pair<double, double> eigenvalues(const DensityMatrix& rho)
{
    const double tr = rho.rho00 + rho.rho11;
    const double diff = rho.rho00 - rho.rho11;
    const double r = std::sqrt(diff * diff + 4.0 * std::norm(rho.rho10));
    const double upper = 0.5 * (tr + r);
    const double det = rho.rho00 * rho.rho11 - std::norm(rho.rho10);
    const double lower = upper > 0.0 ? det / upper : 0.5 * (tr - r);
    return {lower, upper};
}

double von_neumann_entropy(const DensityMatrix& rho, double tol)
{
    const ValidityReport report = validate_density(rho, tol);
    if (!report.passed()) {
        throw DomainError("von_neumann_entropy: invalid density matrix: " + report.describe());
    }
    const auto [lo, hi] = eigenvalues(rho);
    auto term = [](double lambda) { return lambda > 0.0 ? -lambda * std::log(lambda) : 0.0; };
    const double s = term(lo) + term(hi);
    return std::clamp(s, 0.0, std::log(2.0));
}

BlochVector to_bloch(const DensityMatrix& rho)
{
    return {2.0 * rho.rho10.real(), 2.0 * rho.rho10.imag(), rho.rho00 - rho.rho11};
}

DensityMatrix from_bloch(const BlochVector& n)
{
    return {0.5 * (1.0 + n.nz), 0.5 * (1.0 - n.nz), Complex(0.5 * n.nx, 0.5 * n.ny)};
}

SU2Matrix su2_step(const FieldSample& field, double dt)
{
    if (!(dt > 0.0) || !std::isfinite(dt)) {
        throw DomainError("su2_step: dt must be positive and finite");
    }
    if (!std::isfinite(field.bx) || !std::isfinite(field.by) || !std::isfinite(field.bz)) {
        throw DomainError("su2_step: non-finite field");
    }
    const double mag = field.magnitude();
    if (mag == 0.0) {
        return SU2Matrix::identity();
    }
    const double angle = dt * mag;
    const double c = std::cos(angle);
    const double s = std::sin(angle) / mag;
    const double sx = s * field.bx;
    const double sy = s * field.by;
    const double sz = s * field.bz;
    return {Complex(c, -sz), Complex(-sy, -sx), Complex(sy, -sx), Complex(c, sz)};
}

double max_abs_deviation(const DensityMatrix& lhs, const DensityMatrix& rhs)
{
    return std::max({std::abs(lhs.rho00 - rhs.rho00), std::abs(lhs.rho11 - rhs.rho11),
                     std::abs(lhs.rho10 - rhs.rho10)});
}

} // namespace qnoise
