#include "qnoise/channels.hpp"

#include "qnoise/errors.hpp"

// pchip.hpp calls isnan unqualified (Boost 1.74)
#include <math.h>
#include <boost/math/interpolators/pchip.hpp>

#include <algorithm>
#include <cmath>
#include <sstream>
#include <string>

namespace qnoise {

namespace {

constexpr double kPi = std::numbers::pi;
constexpr double kNaN = std::numeric_limits<double>::quiet_NaN();
constexpr double kInf = std::numeric_limits<double>::infinity();

// Initial log-ratios this close to zero are treated as a pure state.
constexpr double kPureLogRatio = 1e-13;

double wrap_angle(double x)
{
    x = std::remainder(x, 2.0 * kPi);
    return x <= -kPi ? x + 2.0 * kPi : x;
}

// ln(sinh x / x) for x >= 0.
double log_sinhc(double x)
{
    if (x < 1e-2) {
        const double x2 = x * x;
        return x2 / 6.0 - x2 * x2 / 180.0 + x2 * x2 * x2 / 2835.0;
    }
    if (x > 20.0) {
        return x + std::log1p(-std::exp(-2.0 * x)) - std::numbers::ln2 - std::log(x);
    }
    return std::log(std::sinh(x) / x);
}

// d/dx ln(sinh x / x) = coth x - 1/x
double log_sinhc_prime(double x)
{
    if (x < 1e-2) {
        const double x2 = x * x;
        return x * (1.0 / 3.0 - x2 / 45.0 + 2.0 * x2 * x2 / 945.0);
    }
    return 1.0 / std::tanh(x) - 1.0 / x;
}

// d^2/dx^2 ln(sinh x / x) = 1/x^2 - csch^2 x
double log_sinhc_second(double x)
{
    if (x < 5e-2) {
        const double x2 = x * x;
        return 1.0 / 3.0 - x2 / 15.0 + 2.0 * x2 * x2 / 189.0 - x2 * x2 * x2 / 675.0;
    }
    const double s = std::sinh(x);
    return 1.0 / (x * x) - 1.0 / (s * s);
}

// Initial polar data of a density matrix: log ratio and phase of rho10.
std::pair<double, double> polar_initial(const DensityMatrix& rho)
{
    const double p0 = rho.rho00;
    const double p1 = rho.rho11;
    const double c = std::abs(rho.rho10);
    if (p0 <= 0.0 || p1 <= 0.0) {
        return {0.0, c > 0.0 ? std::arg(rho.rho10) : 0.0};
    }
    if (c == 0.0) {
        return {-kInf, 0.0};
    }
    double lr = std::log(c) - 0.5 * std::log(p0 * p1);
    if (lr > -kPureLogRatio) {
        lr = 0.0;
    }
    return {lr, std::arg(rho.rho10)};
}

void require_valid_initial(const DensityMatrix& rho)
{
    const ValidityReport r = validate_density(rho, 1e-10);
    if (!r.passed()) {
        throw DomainError("initial state is not a valid density matrix: " + r.describe());
    }
}

// Returns the index of the first unresolvable jump, if any.
std::optional<std::size_t> unwrap_into(std::span<const Complex> c, std::vector<double>& out, double max_jump,
                                       double threshold)
{
    out.assign(c.size(), 0.0);
    bool have_phase = false;
    double current = 0.0;
    for (std::size_t k = 0; k < c.size(); ++k) {
        const double mod = std::abs(c[k]);
        if (mod == 0.0 || !std::isfinite(mod)) {
            out[k] = current;
            continue;
        }
        const double a = std::arg(c[k]);
        if (!have_phase) {
            current = a;
            have_phase = true;
        } else {
            const double step = wrap_angle(a - current);
            if (std::abs(step) > max_jump && mod > threshold && k > 0 && std::abs(c[k - 1]) > threshold) {
                return k;
            }
            current += step;
        }
        out[k] = current;
    }
    return std::nullopt;
}

} // namespace

// ---------------------------------------------------------------- parameters

void InitialPureState::validate(double tol) const
{
    const double n = std::norm(alpha) + std::norm(beta);
    if (!std::isfinite(n) || std::abs(n - 1.0) > tol) {
        throw DomainError("initial state is not normalized: |alpha|^2 + |beta|^2 = " + std::to_string(n));
    }
}

double RecurrenceParams::coupling_modulus(int n) const
{
    if (couplings.empty()) {
        return mode_frequency(n);
    }
    return std::abs(couplings.at(static_cast<std::size_t>(n - 1)));
}

void RecurrenceParams::validate() const
{
    if (modes < 1) {
        throw DomainError("recurrence: number of modes must be >= 1");
    }
    if (!(period > 0.0) || !std::isfinite(period)) {
        throw DomainError("recurrence: period must be positive");
    }
    if (!std::isfinite(omega0)) {
        throw DomainError("recurrence: omega0 must be finite");
    }
    if (!couplings.empty() && couplings.size() != static_cast<std::size_t>(modes)) {
        throw DomainError("recurrence: expected " + std::to_string(modes) + " couplings, got " +
                          std::to_string(couplings.size()));
    }
    for (const Complex& g : couplings) {
        if (!std::isfinite(g.real()) || !std::isfinite(g.imag())) {
            throw DomainError("recurrence: couplings must be finite");
        }
    }
}

void OhmicParams::validate() const
{
    if (!(coupling >= 0.0) || !std::isfinite(coupling)) {
        throw DomainError("ohmic: J0 must be non-negative");
    }
    if (!(cutoff > 0.0) || !std::isfinite(cutoff)) {
        throw DomainError("ohmic: Lambda must be positive");
    }
    if (!(temperature > 0.0) || !std::isfinite(temperature)) {
        throw DomainError("ohmic: kBT must be positive");
    }
    if (!std::isfinite(omega0)) {
        throw DomainError("ohmic: omega0 must be finite");
    }
}

// --------------------------------------------------------------- decay curve

struct DecayCurve::Table
{
    boost::math::interpolators::pchip<std::vector<double>> interp;
};

DecayCurve DecayCurve::exponential(double t1)
{
    if (!(t1 > 0.0) || !std::isfinite(t1)) {
        throw DomainError("amplitude damping: T1 must be positive");
    }
    DecayCurve c;
    c.t1_ = t1;
    return c;
}

DecayCurve DecayCurve::tabulated(std::vector<double> times, std::vector<double> gamma)
{
    if (times.size() != gamma.size() || times.size() < 4) {
        throw DomainError("amplitude damping: gamma table needs at least four (t, gamma) pairs");
    }
    if (times.front() != 0.0 || std::abs(gamma.front()) > 1e-12) {
        throw DomainError("amplitude damping: gamma table must start with gamma(0) = 0");
    }
    for (std::size_t k = 0; k < times.size(); ++k) {
        if (!std::isfinite(times[k]) || !std::isfinite(gamma[k]) || gamma[k] < -1e-12 || gamma[k] > 1.0 + 1e-12) {
            throw DomainError("amplitude damping: gamma table entry " + std::to_string(k) + " outside [0, 1]");
        }
        if (k > 0 && !(times[k] > times[k - 1])) {
            throw DomainError("amplitude damping: gamma table times must be strictly increasing");
        }
        if (k > 0 && gamma[k] < gamma[k - 1]) {
            throw DomainError("amplitude damping: gamma table must be non-decreasing");
        }
    }
    gamma.front() = 0.0;
    DecayCurve c;
    c.times_ = times;
    c.gamma_ = gamma;
    c.table_ = std::make_shared<const Table>(Table{{std::move(times), std::move(gamma)}});
    return c;
}

double DecayCurve::probability(double tau) const
{
    if (t1_) {
        return -std::expm1(-tau / *t1_);
    }
    return std::clamp(table_->interp(std::clamp(tau, times_.front(), times_.back())), 0.0, 1.0);
}

double DecayCurve::survival(double tau) const
{
    if (t1_) {
        return std::exp(-tau / *t1_);
    }
    return 1.0 - probability(tau);
}

double DecayCurve::rate(double tau) const
{
    if (t1_) {
        return std::exp(-tau / *t1_) / *t1_;
    }
    return table_->interp.prime(std::clamp(tau, times_.front(), times_.back()));
}

double DecayCurve::rate_derivative(double tau) const
{
    if (t1_) {
        return -std::exp(-tau / *t1_) / (*t1_ * *t1_);
    }
    return 0.0;
}

double DecayCurve::horizon() const
{
    return t1_ ? kInf : times_.back();
}

// ------------------------------------------------------ decoherence exponents

ExponentJet recurrence_exponent(double t, const RecurrenceParams& p)
{
    ExponentJet jet;
    for (int n = 1; n <= p.modes; ++n) {
        const double w = p.mode_frequency(n);
        const double g2 = p.coupling_modulus(n) * p.coupling_modulus(n);
        const double s = std::sin(0.5 * w * t);
        // 1 - cos(wt) = 2 sin^2(wt/2) avoids cancellation near the nodes.
        jet.value += 8.0 * g2 / (w * w) * s * s;
        jet.first += 4.0 * g2 / w * std::sin(w * t);
        jet.second += 4.0 * g2 * std::cos(w * t);
    }
    return jet;
}

ExponentJet ohmic_exponent(double t, const OhmicParams& p)
{
    const double lt = p.cutoff * t;
    const double beta = kPi * p.temperature;
    const double x = beta * t;
    ExponentJet jet;
    jet.value = 0.5 * p.coupling * std::log1p(lt * lt) + p.coupling * log_sinhc(x);
    jet.first = p.coupling * p.cutoff * lt / (1.0 + lt * lt) + p.coupling * beta * log_sinhc_prime(x);
    const double q = 1.0 + lt * lt;
    jet.second = p.coupling * p.cutoff * p.cutoff * (1.0 - lt * lt) / (q * q) +
                 p.coupling * beta * beta * log_sinhc_second(x);
    return jet;
}

double gamma_recurrence(double t, const RecurrenceParams& p)
{
    return recurrence_exponent(t, p).value;
}

double gamma_ohmic(double t, const OhmicParams& p)
{
    return ohmic_exponent(t, p).value;
}

DensityMatrix rho_dephasing(double t, double gamma, double omega0, const InitialPureState& psi)
{
    if (!(gamma >= 0.0)) {
        throw DomainError("rho_dephasing: Gamma must be non-negative");
    }
    const Complex coherence = std::conj(psi.alpha) * psi.beta;
    return {std::norm(psi.alpha), std::norm(psi.beta), coherence * std::polar(std::exp(-gamma), omega0 * t)};
}

DensityMatrix rho_amplitude_damping(double gamma, const InitialPureState& psi)
{
    if (!(gamma >= 0.0 && gamma <= 1.0)) {
        throw DomainError("rho_amplitude_damping: gamma must lie in [0, 1]");
    }
    const double excited = std::norm(psi.beta) * (1.0 - gamma);
    return {1.0 - excited, excited, std::conj(psi.alpha) * psi.beta * std::sqrt(1.0 - gamma)};
}

DensityMatrix rho_amplitude_damping(double t, const AmplitudeDampingParams& p, const InitialPureState& psi)
{
    return rho_amplitude_damping(p.decay.probability(t), psi);
}

std::vector<double> unwrap_phase(std::span<const Complex> coherences, double max_jump, double threshold)
{
    std::vector<double> out;
    if (auto bad = unwrap_into(coherences, out, max_jump, threshold)) {
        throw ResolutionError("phase of rho10 jumps by more than " + std::to_string(max_jump) +
                              " rad between samples " + std::to_string(*bad - 1) + " and " + std::to_string(*bad) +
                              "; use a finer grid");
    }
    return out;
}

std::vector<double> uniform_grid(double t0, double t1, std::size_t n)
{
    if (n < 2) {
        throw DomainError("uniform_grid: need at least two points");
    }
    if (!(t1 > t0) || !std::isfinite(t0) || !std::isfinite(t1)) {
        throw DomainError("uniform_grid: require t1 > t0");
    }
    std::vector<double> grid(n);
    const double h = (t1 - t0) / static_cast<double>(n - 1);
    for (std::size_t k = 0; k < n; ++k) {
        grid[k] = t0 + h * static_cast<double>(k);
    }
    grid.back() = t1;
    return grid;
}

// -------------------------------------------------------- ReferenceTrajectory

ReferenceTrajectory::ReferenceTrajectory(Kind kind, Model model, const DensityMatrix& rho_i, double t_i, double t_f)
    : kind_(kind), model_(std::move(model)), initial_(rho_i), t_i_(t_i), t_f_(t_f)
{
    std::tie(initial_log_ratio_, initial_phase_) = polar_initial(rho_i);
}

ReferenceTrajectory ReferenceTrajectory::recurrence(const RecurrenceParams& p, const InitialPureState& psi, double t_i)
{
    psi.validate();
    return recurrence(p, psi.density(), t_i);
}

ReferenceTrajectory ReferenceTrajectory::recurrence(const RecurrenceParams& p, const DensityMatrix& rho_i, double t_i)
{
    p.validate();
    require_valid_initial(rho_i);
    return {Kind::recurrence, p, rho_i, t_i, kInf};
}

ReferenceTrajectory ReferenceTrajectory::ohmic(const OhmicParams& p, const InitialPureState& psi, double t_i)
{
    psi.validate();
    return ohmic(p, psi.density(), t_i);
}

ReferenceTrajectory ReferenceTrajectory::ohmic(const OhmicParams& p, const DensityMatrix& rho_i, double t_i)
{
    p.validate();
    require_valid_initial(rho_i);
    return {Kind::ohmic, p, rho_i, t_i, kInf};
}

ReferenceTrajectory ReferenceTrajectory::amplitude_damping(const AmplitudeDampingParams& p,
                                                           const InitialPureState& psi, double t_i)
{
    psi.validate();
    return amplitude_damping(p, psi.density(), t_i);
}

ReferenceTrajectory ReferenceTrajectory::amplitude_damping(const AmplitudeDampingParams& p,
                                                           const DensityMatrix& rho_i, double t_i)
{
    require_valid_initial(rho_i);
    return {Kind::amplitude_damping, p, rho_i, t_i, t_i + p.decay.horizon()};
}

ReferenceTrajectory ReferenceTrajectory::tabulated(std::vector<double> times, std::vector<DensityMatrix> samples,
                                                   double tol)
{
    using K = LoadError::Kind;
    const std::size_t n = times.size();
    if (samples.size() != n) {
        throw LoadError(K::schema, std::nullopt, "tabulated trajectory: times and samples differ in length");
    }
    if (n < 4) {
        throw LoadError(K::schema, std::nullopt, "tabulated trajectory: need at least 4 rows, got " + std::to_string(n));
    }
    for (std::size_t k = 0; k < n; ++k) {
        if (!std::isfinite(times[k])) {
            throw LoadError(K::schema, k + 1, "row " + std::to_string(k + 1) + ": non-finite time");
        }
    }
    const double h = (times.back() - times.front()) / static_cast<double>(n - 1);
    if (!(h > 0.0)) {
        throw LoadError(K::schema, std::nullopt, "tabulated trajectory: times must increase");
    }
    for (std::size_t k = 1; k < n; ++k) {
        const double step = times[k] - times[k - 1];
        if (!(step > 0.0) || std::abs(step - h) > 1e-6 * h) {
            throw LoadError(K::schema, k + 1,
                            "row " + std::to_string(k + 1) + ": time grid is not uniform (step " +
                                std::to_string(step) + ", expected " + std::to_string(h) + ")");
        }
    }
    for (std::size_t k = 0; k < n; ++k) {
        const ValidityReport r = validate_density(samples[k], tol);
        if (!r.passed()) {
            throw LoadError(K::validity, k + 1, "row " + std::to_string(k + 1) + ": " + r.describe());
        }
    }

    TabulatedData data;
    std::vector<double> p0(n), re(n), im(n);
    std::vector<Complex> coherence(n);
    for (std::size_t k = 0; k < n; ++k) {
        p0[k] = samples[k].rho00;
        re[k] = samples[k].rho10.real();
        im[k] = samples[k].rho10.imag();
        coherence[k] = samples[k].rho10;
    }
    if (auto bad = unwrap_into(coherence, data.node_phase, kMaxPhaseJump, 1e-9)) {
        throw LoadError(K::validity, *bad + 1,
                        "row " + std::to_string(*bad + 1) + ": phase of rho10 jumps by more than pi/2 from the "
                        "previous row; the table is too coarse");
    }
    data.node_log_ratio.resize(n);
    for (std::size_t k = 0; k < n; ++k) {
        const double a = samples[k].rho00;
        const double b = 1.0 - samples[k].rho00;
        const double c = std::abs(samples[k].rho10);
        if (a <= 0.0 || b <= 0.0) {
            data.node_log_ratio[k] = kNaN;
        } else if (c == 0.0) {
            data.node_log_ratio[k] = -kInf;
        } else {
            data.node_log_ratio[k] = std::min(0.0, std::log(c) - 0.5 * std::log(a * b));
        }
    }
    data.pop0 = NaturalCubicSpline(times, std::move(p0));
    data.re10 = NaturalCubicSpline(times, std::move(re));
    data.im10 = NaturalCubicSpline(times, std::move(im));
    data.times = times;
    data.samples = samples;

    const DensityMatrix first = samples.front();
    const double t0 = times.front();
    const double t1 = times.back();
    return {Kind::tabulated, std::move(data), first, t0, t1};
}

std::string_view ReferenceTrajectory::kind_name() const
{
    switch (kind_) {
    case Kind::recurrence: return "recurrence";
    case Kind::ohmic: return "ohmic";
    case Kind::amplitude_damping: return "amplitude_damping";
    case Kind::tabulated: return "tabulated";
    }
    return "unknown";
}

bool ReferenceTrajectory::contains(double t) const
{
    const double slack = 1e-12 * std::max(1.0, std::abs(t_i_));
    if (!(t >= t_i_ - slack)) {
        return false;
    }
    if (std::isinf(t_f_)) {
        return std::isfinite(t);
    }
    return t <= t_f_ + 1e-12 * std::max(1.0, std::abs(t_f_));
}

double ReferenceTrajectory::check_time(double t) const
{
    if (!contains(t)) {
        std::ostringstream os;
        os << "time " << t << " outside trajectory domain [" << t_i_ << ", " << t_f_ << "]";
        throw RangeError(os.str());
    }
    return std::clamp(t, t_i_, t_f_);
}

DensityMatrix ReferenceTrajectory::evaluate(double t) const
{
    t = check_time(t);
    const double tau = t - t_i_;
    switch (kind_) {
    case Kind::recurrence:
    case Kind::ohmic: {
        double gamma = 0.0;
        double omega0 = 0.0;
        if (const auto* p = recurrence_params()) {
            gamma = gamma_recurrence(tau, *p);
            omega0 = p->omega0;
        } else {
            const auto* q = ohmic_params();
            gamma = gamma_ohmic(tau, *q);
            omega0 = q->omega0;
        }
        return {initial_.rho00, initial_.rho11, initial_.rho10 * std::polar(std::exp(-gamma), omega0 * tau)};
    }
    case Kind::amplitude_damping: {
        const DecayCurve& decay = damping_params()->decay;
        const double s = decay.survival(tau);
        const double excited = s * initial_.rho11;
        // 1 - x + x == 1 in round-to-nearest, so the trace is exactly one
        return {1.0 - excited, excited, std::sqrt(s) * initial_.rho10};
    }
    case Kind::tabulated: {
        const TabulatedData& d = *table();
        const double p0 = d.pop0(t);
        return {p0, 1.0 - p0, Complex(d.re10(t), d.im10(t))};
    }
    }
    throw DomainError("unknown trajectory kind");
}

CoherenceJet ReferenceTrajectory::jet(double t) const
{
    t = check_time(t);
    const double tau = t - t_i_;
    CoherenceJet j;
    j.t = t;
    switch (kind_) {
    case Kind::recurrence:
    case Kind::ohmic: {
        ExponentJet e;
        double omega0 = 0.0;
        if (const auto* p = recurrence_params()) {
            e = recurrence_exponent(tau, *p);
            omega0 = p->omega0;
        } else {
            const auto* q = ohmic_params();
            e = ohmic_exponent(tau, *q);
            omega0 = q->omega0;
        }
        j.pop0 = initial_.rho00;
        j.pop1 = initial_.rho11;
        j.dpop0 = 0.0;
        if (std::isinf(initial_log_ratio_)) {
            j.log_ratio = -kInf;
        } else {
            j.log_ratio = initial_log_ratio_ - e.value;
            j.dlog_ratio = -e.first;
            j.d2log_ratio = -e.second;
        }
        j.phase = initial_phase_ + omega0 * tau;
        j.dphase = omega0;
        return j;
    }
    case Kind::amplitude_damping: {
        const DecayCurve& decay = damping_params()->decay;
        const double g = decay.probability(tau);
        const double r = decay.rate(tau);
        const double excited = initial_.rho11;
        const double ground = initial_.rho00;
        j.pop1 = decay.survival(tau) * excited;
        j.pop0 = 1.0 - j.pop1;
        j.dpop0 = r * excited;
        j.phase = initial_phase_;
        j.dphase = 0.0;
        if (std::isinf(initial_log_ratio_) || ground <= 0.0) {
            // Coherence vanishes identically while the ground population grows.
            j.log_ratio = -kInf;
        } else if (excited <= 0.0) {
            j.log_ratio = initial_log_ratio_;
        } else {
            const double q = r * excited / j.pop0;
            j.log_ratio = initial_log_ratio_ - 0.5 * std::log1p(g * excited / ground);
            j.dlog_ratio = -0.5 * q;
            j.d2log_ratio = -0.5 * (decay.rate_derivative(tau) * excited / j.pop0 - q * q);
        }
        return j;
    }
    case Kind::tabulated:
        return tabulated_jet(*table(), t);
    }
    throw DomainError("unknown trajectory kind");
}

CoherenceJet ReferenceTrajectory::tabulated_jet(const TabulatedData& d, double t) const
{
    CoherenceJet j;
    j.t = t;
    const double p0 = std::clamp(d.pop0(t), 0.0, 1.0);
    j.pop0 = p0;
    j.pop1 = 1.0 - p0;
    j.dpop0 = d.pop0.derivative(t);

    const Complex c(d.re10(t), d.im10(t));
    const Complex dc(d.re10.derivative(t), d.im10.derivative(t));
    const double c2 = std::norm(c);
    const std::size_t k = d.pop0.segment(t);

    if (c2 > 0.0) {
        j.phase = d.node_phase[k] + wrap_angle(std::arg(c) - d.node_phase[k]);
        j.dphase = (dc * std::conj(c)).imag() / c2;
    } else {
        j.phase = d.node_phase[k];
        j.dphase = 0.0;
    }

    if (j.pop0 > 0.0 && j.pop1 > 0.0) {
        if (c2 == 0.0) {
            j.log_ratio = -kInf;
        } else {
            j.log_ratio = 0.5 * std::log(c2) - 0.5 * std::log(j.pop0 * j.pop1);
            j.dlog_ratio = (dc * std::conj(c)).real() / c2 - 0.5 * (j.dpop0 / j.pop0 - j.dpop0 / j.pop1);
            if (j.log_ratio > 0.0) {
                j.log_ratio = 0.0;
                j.dlog_ratio = 0.0;
                j.clamped = true;
            }
        }
        return j;
    }

    // 0/0: one population vanishes.  Extrapolate linearly from the two nearest
    // knots where the ratio is defined, or hold the nearest one.
    const auto& x = d.times;
    const auto& y = d.node_log_ratio;
    std::vector<std::size_t> defined;
    for (std::size_t i = 0; i < x.size(); ++i) {
        if (!std::isnan(y[i])) {
            defined.push_back(i);
        }
    }
    std::sort(defined.begin(), defined.end(), [&](std::size_t a, std::size_t b) {
        return std::abs(x[a] - t) < std::abs(x[b] - t);
    });
    if (defined.empty()) {
        j.log_ratio = 0.0;
    } else if (defined.size() == 1 || std::isinf(y[defined[0]]) || std::isinf(y[defined[1]])) {
        j.log_ratio = y[defined[0]];
    } else {
        const std::size_t a = defined[0];
        const std::size_t b = defined[1];
        j.log_ratio = std::min(0.0, y[a] + (y[b] - y[a]) * (t - x[a]) / (x[b] - x[a]));
    }
    j.dlog_ratio = 0.0;
    return j;
}

double ReferenceTrajectory::decoherence_exponent(double t) const
{
    t = check_time(t);
    const double tau = t - t_i_;
    if (const auto* p = recurrence_params()) {
        return gamma_recurrence(tau, *p);
    }
    if (const auto* q = ohmic_params()) {
        return gamma_ohmic(tau, *q);
    }
    return -jet(t).log_ratio;
}

} // namespace qnoise
