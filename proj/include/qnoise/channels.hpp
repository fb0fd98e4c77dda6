#pragma once

// Reference trajectories rho(t): the closed-form dephasing and amplitude
// damping channels, and tabulated trajectories read from CSV.

#include "qnoise/qubit.hpp"
#include "qnoise/spline.hpp"

#include <cstddef>
#include <filesystem>
#include <iosfwd>
#include <limits>
#include <memory>
#include <numbers>
#include <optional>
#include <span>
#include <string_view>
#include <variant>
#include <vector>

namespace qnoise {

struct InitialPureState
{
    Complex alpha = 1.0;
    Complex beta = 0.0;

    PureState state() const { return {alpha, beta}; }
    DensityMatrix density() const { return DensityMatrix::projector(state()); }
    /// Throws DomainError unless | |alpha|^2 + |beta|^2 - 1 | <= tol.
    void validate(double tol = 1e-12) const;
};

/// Zero-temperature spin-boson model with N commensurate modes
/// omega_n = 2 pi n / P.
struct RecurrenceParams
{
    double omega0 = 0.0;
    int modes = 30;
    double period = 1.0;
    /// g_1..g_N.  Empty means |g_n| = omega_n with zero phases.
    std::vector<Complex> couplings;

    double mode_frequency(int n) const { return 2.0 * std::numbers::pi * n / period; }
    double coupling_modulus(int n) const;
    void validate() const;
};

/// Ohmic bath at temperature kBT with exponential cutoff Lambda.
struct OhmicParams
{
    double coupling = 1.0;     // J0, dimensionless
    double cutoff = 1.0;       // Lambda
    double temperature = 1.0;  // kB T
    double omega0 = 0.0;

    void validate() const;
};

/// Decay probability gamma(t) of the excited state, measured from the start
/// of the evolution.  Either 1 - exp(-t/T1) or a monotone interpolation of a
/// table.
class DecayCurve
{
public:
    static DecayCurve exponential(double t1);
    /// Table must start at t = 0 with gamma = 0, be non-decreasing and stay in
    /// [0, 1].  At least four points.
    static DecayCurve tabulated(std::vector<double> times, std::vector<double> gamma);

    double probability(double tau) const;
    /// 1 - gamma, computed without cancellation for the exponential law.
    double survival(double tau) const;
    double rate(double tau) const;
    double rate_derivative(double tau) const;

    bool is_exponential() const { return t1_.has_value(); }
    std::optional<double> t1() const { return t1_; }
    /// Largest tau for which the curve is defined.
    double horizon() const;

private:
    struct Table;
    DecayCurve() = default;

    std::optional<double> t1_;
    std::vector<double> times_;
    std::vector<double> gamma_;
    std::shared_ptr<const Table> table_;
};

struct AmplitudeDampingParams
{
    DecayCurve decay = DecayCurve::exponential(1.0);
};

/// Gamma(t) = sum_n 4 |g_n|^2 / omega_n^2 (1 - cos omega_n t).
double gamma_recurrence(double t, const RecurrenceParams& p);

/// Gamma(t) = (J0/2) ln(1 + Lambda^2 t^2) + J0 ln[sinh(pi kBT t) / (pi kBT t)].
double gamma_ohmic(double t, const OhmicParams& p);

/// Value and first two time derivatives of a decoherence exponent.
struct ExponentJet
{
    double value = 0.0;
    double first = 0.0;
    double second = 0.0;
};

ExponentJet recurrence_exponent(double t, const RecurrenceParams& p);
ExponentJet ohmic_exponent(double t, const OhmicParams& p);

/// Pure dephasing: populations frozen, rho10 = conj(alpha) beta exp(i omega0 t - Gamma).
DensityMatrix rho_dephasing(double t, double gamma, double omega0, const InitialPureState& psi);

/// Amplitude damping with decay probability `gamma` in [0, 1].
DensityMatrix rho_amplitude_damping(double gamma, const InitialPureState& psi);
DensityMatrix rho_amplitude_damping(double t, const AmplitudeDampingParams& p, const InitialPureState& psi);

/// Polar description of rho(t) and its time derivatives:
///
///     rho00 = pop0,  rho11 = pop1,
///     rho10 = sqrt(pop0 pop1) exp(log_ratio) exp(i phase).
///
/// log_ratio <= 0 always; it is -infinity where the coherence vanishes while
/// both populations are non-zero.
struct CoherenceJet
{
    double t = 0.0;
    double pop0 = 1.0;
    double pop1 = 0.0;
    double dpop0 = 0.0;  // d pop1 / dt = -dpop0
    double log_ratio = 0.0;
    double dlog_ratio = 0.0;
    /// Second derivative; only meaningful where log_ratio and its first
    /// derivative both vanish (the onset of decoherence).
    double d2log_ratio = 0.0;
    double phase = 0.0;
    double dphase = 0.0;
    /// The interpolated coherence exceeded sqrt(pop0 pop1) and was clamped.
    bool clamped = false;
};

inline constexpr double kMaxPhaseJump = std::numbers::pi / 2.0;

/// Continuous branch of arg(c_k).  Where |c_k| == 0 the previous value is held
/// (0 before the first non-zero entry).  Throws ResolutionError when a jump
/// between neighbours that both exceed `threshold` in modulus is larger than
/// `max_jump`.
std::vector<double> unwrap_phase(std::span<const Complex> coherences, double max_jump = kMaxPhaseJump,
                                 double threshold = 1e-9);

/// Samples of a tabulated trajectory on a uniform grid, interpolated with a
/// natural cubic spline on rho00, Re rho10 and Im rho10 (rho11 = 1 - rho00).
struct TabulatedData
{
    std::vector<double> times;
    std::vector<DensityMatrix> samples;
    NaturalCubicSpline pop0;
    NaturalCubicSpline re10;
    NaturalCubicSpline im10;
    std::vector<double> node_phase;
    std::vector<double> node_log_ratio;  // NaN where 0/0
};

class ReferenceTrajectory
{
public:
    enum class Kind { recurrence, ohmic, amplitude_damping, tabulated };

    static ReferenceTrajectory recurrence(const RecurrenceParams& p, const InitialPureState& psi, double t_i = 0.0);
    static ReferenceTrajectory recurrence(const RecurrenceParams& p, const DensityMatrix& rho_i, double t_i = 0.0);
    static ReferenceTrajectory ohmic(const OhmicParams& p, const InitialPureState& psi, double t_i = 0.0);
    static ReferenceTrajectory ohmic(const OhmicParams& p, const DensityMatrix& rho_i, double t_i = 0.0);
    static ReferenceTrajectory amplitude_damping(const AmplitudeDampingParams& p, const InitialPureState& psi,
                                                 double t_i = 0.0);
    static ReferenceTrajectory amplitude_damping(const AmplitudeDampingParams& p, const DensityMatrix& rho_i,
                                                 double t_i = 0.0);
    /// Throws LoadError naming the first offending row (1-based).
    static ReferenceTrajectory tabulated(std::vector<double> times, std::vector<DensityMatrix> samples,
                                         double tol = 1e-10);

    Kind kind() const { return kind_; }
    std::string_view kind_name() const;
    bool is_closed_form() const { return kind_ != Kind::tabulated; }

    double t_initial() const { return t_i_; }
    double t_final() const { return t_f_; }
    bool contains(double t) const;

    const DensityMatrix& initial_state() const { return initial_; }
    bool initially_pure() const { return initial_log_ratio_ == 0.0; }

    /// rho(t).  Throws RangeError outside [t_initial, t_final].
    DensityMatrix evaluate(double t) const;
    CoherenceJet jet(double t) const;

    /// Gamma(t) for the dephasing kinds; -log_ratio for the others.
    double decoherence_exponent(double t) const;

    const RecurrenceParams* recurrence_params() const { return std::get_if<RecurrenceParams>(&model_); }
    const OhmicParams* ohmic_params() const { return std::get_if<OhmicParams>(&model_); }
    const AmplitudeDampingParams* damping_params() const { return std::get_if<AmplitudeDampingParams>(&model_); }
    const TabulatedData* table() const { return std::get_if<TabulatedData>(&model_); }

private:
    using Model = std::variant<RecurrenceParams, OhmicParams, AmplitudeDampingParams, TabulatedData>;

    ReferenceTrajectory(Kind kind, Model model, const DensityMatrix& rho_i, double t_i, double t_f);

    double check_time(double t) const;
    CoherenceJet tabulated_jet(const TabulatedData& data, double t) const;

    Kind kind_;
    Model model_;
    DensityMatrix initial_;
    double t_i_ = 0.0;
    double t_f_ = std::numeric_limits<double>::infinity();
    double initial_log_ratio_ = 0.0;
    double initial_phase_ = 0.0;
};

/// Writes `t,rho00,rho11,re_rho10,im_rho10` rows for every grid time.
void write_trajectory_csv(std::ostream& os, const ReferenceTrajectory& traj, std::span<const double> grid);
void write_trajectory_csv(const std::filesystem::path& path, const ReferenceTrajectory& traj,
                          std::span<const double> grid);

ReferenceTrajectory load_tabulated(std::istream& is, double tol = 1e-10);
ReferenceTrajectory load_tabulated(const std::filesystem::path& path, double tol = 1e-10);

/// n >= 2 equally spaced points from t0 to t1 inclusive.
std::vector<double> uniform_grid(double t0, double t1, std::size_t n);

} // namespace qnoise
