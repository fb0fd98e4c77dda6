#include "qnoise/channels.hpp"
#include "qnoise/errors.hpp"

#include <gtest/gtest.h>

#include <cmath>
#include <numbers>
#include <sstream>

using namespace qnoise;

namespace {

constexpr double kPi = std::numbers::pi;

const InitialPureState kEquator{std::sqrt(0.5), std::sqrt(0.5)};

RecurrenceParams thirty_mode_recurrence()
{
    RecurrenceParams p;
    p.modes = 30;
    p.period = 1.0;
    return p;
}

} // namespace

// ---------------------------------------------------------------- recurrence

TEST(GammaRecurrence, VanishesAtZeroAndPeriod)
{
    const RecurrenceParams p = thirty_mode_recurrence();
    EXPECT_EQ(gamma_recurrence(0.0, p), 0.0);
    EXPECT_NEAR(gamma_recurrence(1.0, p), 0.0, 1e-10);
    EXPECT_NEAR(gamma_recurrence(3.0, p), 0.0, 1e-10);
}

TEST(GammaRecurrence, HalfPeriodGives120)
{
    // only odd n contribute, 8 each, 15 odd modes
    EXPECT_NEAR(gamma_recurrence(0.5, thirty_mode_recurrence()), 120.0, 1e-9);
}

TEST(GammaRecurrence, MatchesHighPrecisionSum)
{
    RecurrenceParams p;
    p.modes = 7;
    p.period = 2.0;
    // 40-digit evaluation of sum 4 (1 - cos(pi n t))
    EXPECT_NEAR(gamma_recurrence(0.37, p), 27.634167371410076268, 1e-12);
}

TEST(GammaRecurrence, ExplicitCouplings)
{
    RecurrenceParams p;
    p.modes = 2;
    p.period = 1.0;
    p.couplings = {Complex(0.0, 1.0), Complex(3.0, 4.0)};
    const double t = 0.1;
    const double w1 = 2 * kPi;
    const double w2 = 4 * kPi;
    const double expect = 4 / (w1 * w1) * (1 - std::cos(w1 * t)) + 4 * 25 / (w2 * w2) * (1 - std::cos(w2 * t));
    EXPECT_NEAR(gamma_recurrence(t, p), expect, 1e-14);
}

TEST(GammaRecurrence, ParameterValidation)
{
    RecurrenceParams p;
    p.modes = 0;
    EXPECT_THROW(p.validate(), DomainError);
    p.modes = 3;
    p.period = -1;
    EXPECT_THROW(p.validate(), DomainError);
    p.period = 1;
    p.couplings = {1.0, 2.0};
    EXPECT_THROW(p.validate(), DomainError);
}

TEST(RecurrenceExponent, DerivativesMatchFiniteDifferences)
{
    const RecurrenceParams p = thirty_mode_recurrence();
    const double h = 1e-5;
    for (double t : {0.013, 0.21, 0.5, 0.77}) {
        const ExponentJet j = recurrence_exponent(t, p);
        const double d1 = (gamma_recurrence(t + h, p) - gamma_recurrence(t - h, p)) / (2 * h);
        const double d2 = (recurrence_exponent(t + h, p).first - recurrence_exponent(t - h, p).first) / (2 * h);
        EXPECT_NEAR(j.first, d1, 1e-5 * std::max(1.0, std::abs(d1)));
        EXPECT_NEAR(j.second, d2, 1e-5 * std::max(1.0, std::abs(d2)));
    }
}

// --------------------------------------------------------------------- ohmic

TEST(GammaOhmic, ZeroAtOrigin)
{
    EXPECT_EQ(gamma_ohmic(0.0, {1.0, 100.0, 1.0, 0.0}), 0.0);
}

TEST(GammaOhmic, MatchesHighPrecisionEvaluation)
{
    // reference values from 40-digit arithmetic
    EXPECT_NEAR(gamma_ohmic(1.0, {1.0, 100.0, 1.0, 0.0}), 5.9070665820919707, 1e-13);
    EXPECT_NEAR(gamma_ohmic(3.0, {0.5, 10.0, 2.0, 0.0}), 9.3108360073527639306, 1e-13);
    EXPECT_NEAR(gamma_ohmic(0.001, {1.0, 10.0, 1.0, 0.0}), 0.000051642433692341116362, 1e-18);
    EXPECT_NEAR(gamma_ohmic(100.0, {1.0, 10.0, 1.0, 0.0}), 314.62397388556377405, 1e-11);
    // pi kBT t = 3141.6: sinh overflows, the asymptotic form must not
    EXPECT_NEAR(gamma_ohmic(20.0, {1.0, 1.0, 50.0, 0.0}), 3135.8440019580550405, 1e-9);
}

TEST(GammaOhmic, LargeTimeAsymptote)
{
    const OhmicParams p{1.3, 7.0, 0.8, 0.0};
    for (double t : {50.0, 200.0, 1000.0}) {
        const double x = kPi * p.temperature * t;
        const double asym = p.coupling * x + p.coupling * (0.5 * std::log(p.cutoff * p.cutoff * t * t) - std::log(2 * x));
        EXPECT_NEAR(gamma_ohmic(t, p), asym, 1e-5);
    }
}

TEST(GammaOhmic, MonotoneNonDecreasing)
{
    const OhmicParams p{1.0, 10.0, 1.0, 0.0};
    double prev = 0.0;
    for (int k = 1; k <= 20000; ++k) {
        const double g = gamma_ohmic(1e-4 * k * k * 1e-3, p);
        EXPECT_GE(g, prev - 1e-12);
        prev = g;
    }
}

TEST(OhmicExponent, DerivativesMatchHighPrecision)
{
    const OhmicParams p{1.0, 10.0, 1.0, 0.0};
    const ExponentJet a = ohmic_exponent(0.003, p);
    EXPECT_NEAR(a.first, 0.30959978873762581557, 1e-13);
    EXPECT_NEAR(a.second, 103.02021417935571126, 1e-10);
    const ExponentJet b = ohmic_exponent(0.3, p);
    EXPECT_NEAR(b.first, 3.9330562432301836423, 1e-13);
    EXPECT_NEAR(b.second, -5.2213645068093559482, 1e-12);
    const ExponentJet c = ohmic_exponent(2.5, p);
    EXPECT_NEAR(c.first, 3.140954622841033428, 1e-13);
    EXPECT_NEAR(c.second, 0.00076000711057456318174, 1e-12);
}

TEST(OhmicExponent, SeriesBranchesJoinSmoothly)
{
    // switch points of the small-x expansions and the large-x form; a jump
    // would show up as a mismatch with the first-order Taylor step
    const OhmicParams p{1.0, 1.0, 1.0 / kPi, 0.0};
    for (double x : {1e-2, 5e-2, 20.0}) {
        const double tl = x * (1 - 1e-9);
        const double th = x * (1 + 1e-9);
        const ExponentJet lo = ohmic_exponent(tl, p);
        const ExponentJet hi = ohmic_exponent(th, p);
        EXPECT_NEAR(hi.value - lo.value, lo.first * (th - tl), 1e-14 * std::max(1.0, lo.value)) << x;
        EXPECT_NEAR(hi.first - lo.first, lo.second * (th - tl), 1e-13) << x;
        EXPECT_NEAR(hi.second, lo.second, 1e-9) << x;
    }
}

TEST(OhmicParams, Validation)
{
    EXPECT_THROW((OhmicParams{-1.0, 1.0, 1.0, 0.0}).validate(), DomainError);
    EXPECT_THROW((OhmicParams{1.0, 0.0, 1.0, 0.0}).validate(), DomainError);
    EXPECT_THROW((OhmicParams{1.0, 1.0, 0.0, 0.0}).validate(), DomainError);
    EXPECT_NO_THROW((OhmicParams{0.0, 1.0, 1.0, 0.0}).validate());
}

// ----------------------------------------------------------------- dephasing

TEST(RhoDephasing, NoEvolutionIsInitialProjector)
{
    const InitialPureState psi{Complex(0.6, 0.0), Complex(0.0, 0.8)};
    const DensityMatrix rho = rho_dephasing(0.0, 0.0, 3.0, psi);
    EXPECT_LE(max_abs_deviation(rho, psi.density()), 1e-16);
}

TEST(RhoDephasing, Gamma120GivesTinyCoherence)
{
    const DensityMatrix rho = rho_dephasing(0.25, 120.0, 1.0, kEquator);
    // |alpha beta| e^{-120}; the decoherence factor itself is e^{-120} = 7.66e-53
    EXPECT_NEAR(std::abs(rho.rho10) / 0.5, 7.667648073722e-53, 1e-64);
    EXPECT_TRUE(validate_density(rho).passed());
}

TEST(RhoDephasing, InfiniteGammaIsCompletelyMixed)
{
    const DensityMatrix rho = rho_dephasing(1.0, INFINITY, 1.0, kEquator);
    EXPECT_DOUBLE_EQ(rho.rho00, 0.5);
    EXPECT_DOUBLE_EQ(rho.rho11, 0.5);
    EXPECT_EQ(std::abs(rho.rho10), 0.0);
    EXPECT_NEAR(von_neumann_entropy(rho), std::log(2.0), 1e-15);
}

TEST(RhoDephasing, PhaseConvention)
{
    const InitialPureState psi{Complex(0.6, 0.0), Complex(0.0, 0.8)};
    const DensityMatrix rho = rho_dephasing(0.5, 0.3, 2.0, psi);
    const Complex expect = std::conj(psi.alpha) * psi.beta * std::exp(Complex(-0.3, 2.0 * 0.5));
    EXPECT_NEAR(std::abs(rho.rho10 - expect), 0.0, 1e-16);
    EXPECT_THROW(rho_dephasing(0.5, -0.1, 2.0, psi), DomainError);
}

// --------------------------------------------------------- amplitude damping

TEST(RhoAmplitudeDamping, Limits)
{
    const InitialPureState psi{std::sqrt(0.3), std::polar(std::sqrt(0.7), 0.4)};
    EXPECT_LE(max_abs_deviation(rho_amplitude_damping(0.0, psi), psi.density()), 3e-16);
    const DensityMatrix ground = rho_amplitude_damping(1.0, psi);
    EXPECT_EQ(ground.rho00, 1.0);
    EXPECT_EQ(ground.rho11, 0.0);
    EXPECT_EQ(std::abs(ground.rho10), 0.0);
}

TEST(RhoAmplitudeDamping, HalfDecayOfEquatorState)
{
    const DensityMatrix rho = rho_amplitude_damping(0.5, kEquator);
    EXPECT_DOUBLE_EQ(rho.rho11, 0.25);
    EXPECT_DOUBLE_EQ(std::abs(rho.rho10), 0.5 / std::sqrt(2.0));
    EXPECT_DOUBLE_EQ(rho.rho00, 0.75);
}

TEST(RhoAmplitudeDamping, RejectsGammaOutsideUnitInterval)
{
    EXPECT_THROW(rho_amplitude_damping(-0.01, kEquator), DomainError);
    EXPECT_THROW(rho_amplitude_damping(1.01, kEquator), DomainError);
    EXPECT_THROW(rho_amplitude_damping(std::nan(""), kEquator), DomainError);
}

TEST(DecayCurve, ExponentialLaw)
{
    const DecayCurve c = DecayCurve::exponential(2.0);
    EXPECT_EQ(c.probability(0.0), 0.0);
    EXPECT_NEAR(c.probability(2.0), 1 - std::exp(-1.0), 1e-16);
    EXPECT_NEAR(c.survival(1e-20), 1.0, 1e-16);
    EXPECT_NEAR(c.probability(1e-20), 5e-21, 1e-35);  // no cancellation
    EXPECT_NEAR(c.rate(2.0), std::exp(-1.0) / 2, 1e-16);
    EXPECT_THROW(DecayCurve::exponential(0.0), DomainError);
}

TEST(DecayCurve, TabulatedIsMonotoneAndBounded)
{
    const DecayCurve c = DecayCurve::tabulated({0, 1, 2, 3, 4}, {0, 0.5, 0.55, 0.99, 1.0});
    double prev = 0.0;
    for (int k = 0; k <= 400; ++k) {
        const double g = c.probability(0.01 * k);
        EXPECT_GE(g, prev - 1e-15);
        EXPECT_LE(g, 1.0);
        prev = g;
    }
    EXPECT_NEAR(c.probability(1.0), 0.5, 1e-15);
    EXPECT_EQ(c.horizon(), 4.0);
    EXPECT_GE(c.rate(1.5), 0.0);
}

TEST(DecayCurve, TabulatedValidation)
{
    EXPECT_THROW(DecayCurve::tabulated({0, 1, 2}, {0, 0.1, 0.2}), DomainError);
    EXPECT_THROW(DecayCurve::tabulated({0, 1, 2, 3}, {0.1, 0.2, 0.3, 0.4}), DomainError);
    EXPECT_THROW(DecayCurve::tabulated({0, 1, 2, 3}, {0, 0.5, 0.4, 0.6}), DomainError);
    EXPECT_THROW(DecayCurve::tabulated({0, 1, 2, 3}, {0, 0.5, 0.6, 1.2}), DomainError);
    EXPECT_THROW(DecayCurve::tabulated({0, 1, 1, 3}, {0, 0.5, 0.6, 0.7}), DomainError);
}

// ------------------------------------------------------------- trajectories

TEST(Trajectory, EveryKindValidOnGrid)
{
    const InitialPureState psi{std::sqrt(0.3), std::polar(std::sqrt(0.7), 0.4)};
    AmplitudeDampingParams ad;
    const std::vector<ReferenceTrajectory> trajs = {
        ReferenceTrajectory::recurrence(thirty_mode_recurrence(), psi),
        ReferenceTrajectory::ohmic({1.0, 10.0, 1.0, 2.0}, psi),
        ReferenceTrajectory::amplitude_damping(ad, psi),
        ReferenceTrajectory::ohmic({1.0, 10.0, 1.0, 2.0}, DensityMatrix{0.7, 0.3, 0.2}),
        ReferenceTrajectory::amplitude_damping(ad, DensityMatrix{0.7, 0.3, Complex(0.1, -0.2)}),
    };
    for (const auto& tr : trajs) {
        for (double t : uniform_grid(0.0, 5.0, 1001)) {
            EXPECT_TRUE(validate_density(tr.evaluate(t), 1e-10).passed()) << tr.kind_name() << " t=" << t;
        }
    }
}

TEST(Trajectory, RecurrencePeriodicity)
{
    RecurrenceParams p = thirty_mode_recurrence();
    p.omega0 = 2 * kPi;
    const auto tr = ReferenceTrajectory::recurrence(p, kEquator);
    for (double t : uniform_grid(0.0, 1.0, 201)) {
        EXPECT_LE(max_abs_deviation(tr.evaluate(t + 1.0), tr.evaluate(t)), 1e-10);
    }
}

TEST(Trajectory, AmplitudeDampingTraceIsExact)
{
    const InitialPureState psi{std::sqrt(0.3), std::polar(std::sqrt(0.7), 0.4)};
    const auto tr = ReferenceTrajectory::amplitude_damping(AmplitudeDampingParams{DecayCurve::exponential(0.37)}, psi);
    for (double t : uniform_grid(0.0, 10.0, 997)) {
        const DensityMatrix rho = tr.evaluate(t);
        EXPECT_EQ(rho.rho00 + rho.rho11, 1.0) << t;
    }
}

TEST(Trajectory, ClosedFormsMatchFreeFunctions)
{
    const InitialPureState psi{std::sqrt(0.3), std::polar(std::sqrt(0.7), 0.4)};
    const OhmicParams op{1.0, 10.0, 1.0, 2.0};
    const auto oh = ReferenceTrajectory::ohmic(op, psi);
    const auto ad = ReferenceTrajectory::amplitude_damping(AmplitudeDampingParams{}, psi);
    for (double t : {0.0, 0.1, 1.3, 4.0}) {
        EXPECT_LE(max_abs_deviation(oh.evaluate(t), rho_dephasing(t, gamma_ohmic(t, op), op.omega0, psi)), 1e-15);
        EXPECT_LE(max_abs_deviation(ad.evaluate(t), rho_amplitude_damping(1 - std::exp(-t), psi)), 1e-15);
    }
}

TEST(Trajectory, InitialTimeShiftsTheClock)
{
    const OhmicParams op{1.0, 10.0, 1.0, 2.0};
    const auto a = ReferenceTrajectory::ohmic(op, kEquator, 0.0);
    const auto b = ReferenceTrajectory::ohmic(op, kEquator, 5.0);
    EXPECT_LE(max_abs_deviation(a.evaluate(0.7), b.evaluate(5.7)), 1e-14);
    EXPECT_THROW(b.evaluate(4.0), RangeError);
}

TEST(Trajectory, OutOfDomainIsRangeError)
{
    const auto tr = ReferenceTrajectory::ohmic({1.0, 10.0, 1.0, 2.0}, kEquator);
    EXPECT_THROW(tr.evaluate(-0.1), RangeError);
    EXPECT_THROW(tr.evaluate(std::nan("")), RangeError);
    const auto tab = ReferenceTrajectory::amplitude_damping(
        AmplitudeDampingParams{DecayCurve::tabulated({0, 1, 2, 3}, {0, 0.3, 0.5, 0.6})}, kEquator);
    EXPECT_NO_THROW(tab.evaluate(3.0));
    EXPECT_THROW(tab.evaluate(3.1), RangeError);
}

TEST(Trajectory, InvalidInitialStatesRejected)
{
    EXPECT_THROW(ReferenceTrajectory::ohmic({1.0, 10.0, 1.0, 0.0}, InitialPureState{1.0, 1.0}), DomainError);
    EXPECT_THROW(ReferenceTrajectory::ohmic({1.0, 10.0, 1.0, 0.0}, DensityMatrix{0.5, 0.5, 0.6}), DomainError);
}

TEST(Trajectory, JetMatchesFiniteDifferences)
{
    const InitialPureState psi{std::sqrt(0.3), std::polar(std::sqrt(0.7), 0.4)};
    RecurrenceParams rp = thirty_mode_recurrence();
    rp.modes = 5;
    rp.omega0 = 1.5;
    const std::vector<ReferenceTrajectory> trajs = {
        ReferenceTrajectory::recurrence(rp, psi),
        ReferenceTrajectory::ohmic({1.0, 10.0, 1.0, 2.0}, psi),
        ReferenceTrajectory::amplitude_damping(AmplitudeDampingParams{}, psi),
        ReferenceTrajectory::amplitude_damping(AmplitudeDampingParams{}, DensityMatrix{0.7, 0.3, 0.2}),
    };
    auto log_ratio = [](const DensityMatrix& r) {
        return std::log(std::abs(r.rho10)) - 0.5 * std::log(r.rho00 * r.rho11);
    };
    const double h = 1e-5;
    for (const auto& tr : trajs) {
        for (double t : {0.05, 0.4, 1.7}) {
            const CoherenceJet j = tr.jet(t);
            const DensityMatrix lo = tr.evaluate(t - h);
            const DensityMatrix hi = tr.evaluate(t + h);
            const DensityMatrix mid = tr.evaluate(t);
            EXPECT_NEAR(j.pop0, mid.rho00, 1e-15);
            EXPECT_NEAR(j.dpop0, (hi.rho00 - lo.rho00) / (2 * h), 1e-8);
            EXPECT_NEAR(j.log_ratio, log_ratio(mid), 1e-12) << tr.kind_name();
            const double fd = (log_ratio(hi) - log_ratio(lo)) / (2 * h);
            EXPECT_NEAR(j.dlog_ratio, fd, 1e-6 * std::max(1.0, std::abs(fd))) << tr.kind_name();
            EXPECT_NEAR(std::remainder(j.phase - std::arg(mid.rho10), 2 * kPi), 0.0, 1e-12);
            EXPECT_NEAR(j.dphase, std::remainder(std::arg(hi.rho10) - std::arg(lo.rho10), 2 * kPi) / (2 * h), 1e-6);
        }
    }
}

TEST(Trajectory, DampingOnsetCurvature)
{
    // pure initial state: log ratio starts at 0 and falls linearly
    const auto tr = ReferenceTrajectory::amplitude_damping(AmplitudeDampingParams{}, kEquator);
    EXPECT_TRUE(tr.initially_pure());
    const CoherenceJet j0 = tr.jet(0.0);
    EXPECT_EQ(j0.log_ratio, 0.0);
    EXPECT_NEAR(j0.dlog_ratio, -0.5 * 1.0 * 0.5 / 0.5, 1e-15);
    // ground state never decays; excited state has no coherence to lose
    const auto ground = ReferenceTrajectory::amplitude_damping(AmplitudeDampingParams{}, InitialPureState{1.0, 0.0});
    EXPECT_EQ(ground.jet(1.0).log_ratio, 0.0);
    const auto mixed = ReferenceTrajectory::amplitude_damping(AmplitudeDampingParams{}, DensityMatrix{0.5, 0.5, 0.0});
    EXPECT_TRUE(std::isinf(mixed.jet(1.0).log_ratio));
    EXPECT_FALSE(mixed.initially_pure());
}

// ----------------------------------------------------------------- unwrap

TEST(UnwrapPhase, LinearPhaseIsNotFolded)
{
    RecurrenceParams rp = thirty_mode_recurrence();
    rp.modes = 1;
    const InitialPureState psi{std::sqrt(0.5), std::polar(std::sqrt(0.5), 0.3)};
    const auto tr = ReferenceTrajectory::ohmic({0.1, 1.0, 1.0, 5.0}, psi);
    const auto grid = uniform_grid(0.0, 10.0, 1001);
    std::vector<Complex> c;
    for (double t : grid) {
        c.push_back(tr.evaluate(t).rho10);
    }
    const auto theta = unwrap_phase(c);
    for (std::size_t k = 0; k < grid.size(); ++k) {
        EXPECT_NEAR(theta[k], 0.3 + 5.0 * grid[k], 1e-10);
    }
}

TEST(UnwrapPhase, ConstantAndZero)
{
    const std::vector<Complex> constant(10, std::polar(0.3, -2.0));
    for (double th : unwrap_phase(constant)) {
        EXPECT_NEAR(th, -2.0, 1e-15);
    }
    const std::vector<Complex> zeros(10, 0.0);
    for (double th : unwrap_phase(zeros)) {
        EXPECT_EQ(th, 0.0);
    }
    // held across a zero
    const std::vector<Complex> gap = {std::polar(1.0, 1.0), 0.0, 0.0, std::polar(1.0, 1.2)};
    const auto th = unwrap_phase(gap);
    EXPECT_NEAR(th[1], 1.0, 1e-15);
    EXPECT_NEAR(th[3], 1.2, 1e-15);
}

TEST(UnwrapPhase, CoarseGridIsResolutionError)
{
    const std::vector<Complex> c = {std::polar(1.0, 0.0), std::polar(1.0, 2.0), std::polar(1.0, 4.0)};
    EXPECT_THROW(unwrap_phase(c), ResolutionError);
    // tiny coherences are below the threshold and never trigger
    const std::vector<Complex> tiny = {std::polar(1e-12, 0.0), std::polar(1e-12, 2.0)};
    EXPECT_NO_THROW(unwrap_phase(tiny));
}

TEST(UniformGrid, EndpointsAndValidation)
{
    const auto g = uniform_grid(1.0, 3.0, 5);
    EXPECT_EQ(g.front(), 1.0);
    EXPECT_EQ(g.back(), 3.0);
    EXPECT_DOUBLE_EQ(g[2], 2.0);
    EXPECT_THROW(uniform_grid(0.0, 1.0, 1), DomainError);
    EXPECT_THROW(uniform_grid(1.0, 1.0, 3), DomainError);
}

// --------------------------------------------------------------- tabulated

namespace {

ReferenceTrajectory dump_and_load(const ReferenceTrajectory& tr, const std::vector<double>& grid)
{
    std::stringstream ss;
    write_trajectory_csv(ss, tr, grid);
    return load_tabulated(ss);
}

LoadError load_error(const std::string& text)
{
    std::istringstream is(text);
    try {
        load_tabulated(is);
    } catch (const LoadError& e) {
        return e;
    }
    ADD_FAILURE() << "no LoadError";
    return LoadError(LoadError::Kind::io, std::nullopt, "");
}

} // namespace

TEST(Tabulated, DumpLoadRoundTripsAtNodes)
{
    const InitialPureState psi{std::sqrt(0.3), std::polar(std::sqrt(0.7), 0.4)};
    const auto tr = ReferenceTrajectory::ohmic({1.0, 10.0, 1.0, 2.0}, psi);
    const auto grid = uniform_grid(0.0, 2.0, 101);
    const auto tab = dump_and_load(tr, grid);
    EXPECT_EQ(tab.kind(), ReferenceTrajectory::Kind::tabulated);
    EXPECT_EQ(tab.t_initial(), 0.0);
    EXPECT_EQ(tab.t_final(), 2.0);
    for (double t : grid) {
        EXPECT_LE(max_abs_deviation(tab.evaluate(t), tr.evaluate(t)), 1e-14);
    }
}

TEST(Tabulated, MidpointsCloseToClosedForm)
{
    const InitialPureState psi{std::sqrt(0.3), std::polar(std::sqrt(0.7), 0.4)};
    const auto tr = ReferenceTrajectory::amplitude_damping(AmplitudeDampingParams{DecayCurve::exponential(2.0)}, psi);
    const auto grid = uniform_grid(0.0, 4.0, 201);
    const auto tab = dump_and_load(tr, grid);
    for (std::size_t k = 1; k + 2 < grid.size(); ++k) {
        const double t = 0.5 * (grid[k] + grid[k + 1]);
        EXPECT_LE(max_abs_deviation(tab.evaluate(t), tr.evaluate(t)), 1e-6) << t;
        EXPECT_TRUE(validate_density(tab.evaluate(t), 1e-8).passed());
    }
}

TEST(Tabulated, JetIsTheSplineDerivative)
{
    const InitialPureState psi{std::sqrt(0.3), std::polar(std::sqrt(0.7), 0.4)};
    const auto tr = ReferenceTrajectory::ohmic({0.2, 5.0, 0.5, 3.0}, psi);
    const auto tab = dump_and_load(tr, uniform_grid(0.0, 3.0, 301));
    // fourth-order central differences of the interpolant
    const double h = 1e-4;
    auto fd = [&](auto f, double t) { return (-f(t + 2 * h) + 8 * f(t + h) - 8 * f(t - h) + f(t - 2 * h)) / (12 * h); };
    for (double t : {0.1234, 1.5, 2.71}) {
        const CoherenceJet j = tab.jet(t);
        auto p0 = [&](double s) { return tab.evaluate(s).rho00; };
        auto lr = [&](double s) {
            const DensityMatrix r = tab.evaluate(s);
            return std::log(std::abs(r.rho10)) - 0.5 * std::log(r.rho00 * r.rho11);
        };
        auto arg = [&](double s) { return std::arg(tab.evaluate(s).rho10 * std::polar(1.0, -j.phase)); };
        EXPECT_NEAR(j.dpop0, fd(p0, t), 1e-8);
        EXPECT_NEAR(j.dlog_ratio, fd(lr, t), 1e-7);
        EXPECT_NEAR(j.dphase, fd(arg, t), 1e-7);
        // and both approximate the closed form
        EXPECT_NEAR(j.dphase, 3.0, 1e-4);
        EXPECT_NEAR(j.dlog_ratio, tr.jet(t).dlog_ratio, 1e-3);
    }
}

TEST(Tabulated, PhaseFollowsTheUnwrappedBranch)
{
    const auto tr = ReferenceTrajectory::ohmic({0.1, 1.0, 1.0, 20.0}, kEquator);
    const auto tab = dump_and_load(tr, uniform_grid(0.0, 2.0, 401));
    for (double t : {0.5, 1.0, 1.9}) {
        EXPECT_NEAR(tab.jet(t).phase, 20.0 * t, 1e-5);
    }
}

TEST(Tabulated, RejectsCoherenceViolationNamingRow)
{
    const LoadError e = load_error("t,rho00,rho11,re_rho10,im_rho10\n"
                                   "0,0.5,0.5,0.5,0\n"
                                   "1,0.5,0.5,0.4,0\n"
                                   "2,0.5,0.5,0.6,0\n"
                                   "3,0.5,0.5,0.3,0\n"
                                   "4,0.5,0.5,0.2,0\n");
    EXPECT_EQ(e.kind(), LoadError::Kind::validity);
    ASSERT_TRUE(e.row().has_value());
    EXPECT_EQ(*e.row(), 3u);
    EXPECT_NE(std::string(e.what()).find("row 3"), std::string::npos);
}

TEST(Tabulated, SchemaErrors)
{
    EXPECT_EQ(load_error("").kind(), LoadError::Kind::schema);
    EXPECT_EQ(load_error("time,a,b\n0,1,0\n").kind(), LoadError::Kind::schema);
    const LoadError bad = load_error("t,rho00,rho11,re_rho10,im_rho10\n0,1,0,0,0\n1,1,zero,0,0\n");
    EXPECT_EQ(bad.kind(), LoadError::Kind::schema);
    EXPECT_EQ(bad.row().value_or(0), 2u);
    EXPECT_EQ(load_error("t,rho00,rho11,re_rho10,im_rho10\n0,1,0,0\n").kind(), LoadError::Kind::schema);
    // too few rows
    EXPECT_EQ(load_error("t,rho00,rho11,re_rho10,im_rho10\n0,1,0,0,0\n1,1,0,0,0\n2,1,0,0,0\n").kind(),
              LoadError::Kind::schema);
    // non-uniform spacing
    const LoadError nu = load_error("t,rho00,rho11,re_rho10,im_rho10\n0,1,0,0,0\n1,1,0,0,0\n2,1,0,0,0\n3.5,1,0,0,0\n");
    EXPECT_EQ(nu.kind(), LoadError::Kind::schema);
    EXPECT_TRUE(nu.row().has_value());
}

TEST(Tabulated, MissingFileIsIoError)
{
    try {
        load_tabulated(std::filesystem::path("/nonexistent/traj.csv"));
        FAIL();
    } catch (const LoadError& e) {
        EXPECT_EQ(e.kind(), LoadError::Kind::io);
    }
}

TEST(Tabulated, PoleRowsUseNeighbouringRatio)
{
    // rho11 -> 0 at the last row: 0/0 there, extrapolated from defined rows
    std::ostringstream csv;
    csv.precision(17);
    csv << "t,rho00,rho11,re_rho10,im_rho10\n";
    for (int k = 0; k <= 10; ++k) {
        const double p1 = 0.5 * (1.0 - k / 10.0);
        const double c = 0.9 * std::sqrt((1 - p1) * p1);
        csv << k * 0.1 << ',' << 1 - p1 << ',' << p1 << ',' << c << ",0\n";
    }
    std::istringstream is(csv.str());
    const auto tab = load_tabulated(is);
    const CoherenceJet j = tab.jet(1.0);
    EXPECT_TRUE(std::isfinite(j.log_ratio));
    EXPECT_NEAR(j.log_ratio, std::log(0.9), 1e-6);
    EXPECT_EQ(j.dlog_ratio, 0.0);
}
