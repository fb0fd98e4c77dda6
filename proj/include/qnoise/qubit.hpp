#pragma once

// Single-qubit linear algebra: density matrices, pure states, Bloch vectors
// and the exact SU(2) propagator for a constant field.
//
// Hamiltonian convention used throughout the library:
//
//     H = [[ Bz,        Bx - i By ],
//          [ Bx + i By, -Bz       ]]  =  B . sigma
//
// so a constant field applied for a time dt rotates the Bloch vector by
// 2 |B| dt about B.

#include <complex>
#include <string>
#include <utility>

namespace qnoise {

using Complex = std::complex<double>;

inline constexpr double kDefaultTolerance = 1e-12;

struct PureState
{
    Complex a;  // amplitude on |0>
    Complex b;  // amplitude on |1>

    double norm() const;
};

/// A Hermitian 2x2 matrix stored by its independent entries.  rho01 is the
/// conjugate of rho10 and is never stored.
struct DensityMatrix
{
    double rho00 = 1.0;
    double rho11 = 0.0;
    Complex rho10 = 0.0;

    Complex rho01() const { return std::conj(rho10); }
    double trace() const { return rho00 + rho11; }

    static DensityMatrix projector(const PureState& psi);
    static DensityMatrix completely_mixed() { return {0.5, 0.5, 0.0}; }
};

struct BlochVector
{
    double nx = 0.0;
    double ny = 0.0;
    double nz = 0.0;

    double length() const;
};

struct SU2Matrix
{
    Complex u00, u01, u10, u11;

    static SU2Matrix identity() { return {1.0, 0.0, 0.0, 1.0}; }

    PureState apply(const PureState& psi) const;
    SU2Matrix adjoint() const;
    Complex determinant() const;
    /// max |(U^dagger U - I)_ij|
    double unitarity_defect() const;
};

SU2Matrix operator*(const SU2Matrix& lhs, const SU2Matrix& rhs);

/// The classical drive on one path at one time, in angular-frequency units
/// (hbar = 1).
struct FieldSample
{
    double t = 0.0;
    double bx = 0.0;
    double by = 0.0;
    double bz = 0.0;

    double magnitude() const;
};

/// Worst violation of each of the three conditions every reduced qubit state
/// obeys: non-negative populations, unit trace and |rho10| <= sqrt(rho00 rho11).
/// A violation is zero when the condition holds exactly.
struct ValidityReport
{
    double positivity_violation = 0.0;
    double trace_violation = 0.0;
    double coherence_violation = 0.0;
    double tolerance = kDefaultTolerance;

    bool positivity_ok() const { return positivity_violation <= tolerance; }
    bool trace_ok() const { return trace_violation <= tolerance; }
    bool coherence_ok() const { return coherence_violation <= tolerance; }
    bool passed() const { return positivity_ok() && trace_ok() && coherence_ok(); }

    /// Folds another report into this one, keeping the worst violations.
    void merge(const ValidityReport& other);
    std::string describe() const;
};

ValidityReport validate_density(const DensityMatrix& rho, double tol = kDefaultTolerance);

/// Eigenvalues (smaller, larger) from the closed form for a 2x2 Hermitian
/// matrix.  The smaller one is computed as det / larger to keep relative
/// accuracy for nearly pure states.
std::pair<double, double> eigenvalues(const DensityMatrix& rho);

/// Von Neumann entropy in nats.  Throws DomainError if `rho` fails
/// validate_density at `tol`.
double von_neumann_entropy(const DensityMatrix& rho, double tol = 1e-10);

/// rho = (I + n . sigma) / 2, hence nx = 2 Re rho10, ny = 2 Im rho10,
/// nz = rho00 - rho11.
BlochVector to_bloch(const DensityMatrix& rho);
DensityMatrix from_bloch(const BlochVector& n);

/// exp(-i dt B.sigma) = cos(dt|B|) I - i sin(dt|B|) (B/|B|).sigma.
/// Throws DomainError for dt <= 0 or a non-finite field.
SU2Matrix su2_step(const FieldSample& field, double dt);

/// max over entries of |lhs - rhs|
double max_abs_deviation(const DensityMatrix& lhs, const DensityMatrix& rhs);

} // namespace qnoise
