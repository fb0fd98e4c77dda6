#include "qnoise/integrator.hpp"

#include "qnoise/errors.hpp"

#include <algorithm>
#include <cmath>
#include <limits>
#include <sstream>

namespace qnoise {

namespace {

const double kSqrt3 = std::sqrt(3.0);
// Two-stage commutator-free exponential of order four.
const double kC1 = 0.5 - kSqrt3 / 6.0;
const double kC2 = 0.5 + kSqrt3 / 6.0;
const double kA1 = (3.0 - 2.0 * kSqrt3) / 12.0;
const double kA2 = (3.0 + 2.0 * kSqrt3) / 12.0;

constexpr std::size_t kMaxSubsteps = 50'000'000;

FieldSample scaled_sum(double wa, const FieldSample& a, double wb, const FieldSample& b)
{
    return {a.t, wa * a.bx + wb * b.bx, wa * a.by + wb * b.by, wa * a.bz + wb * b.bz};
}

FieldSample scaled(double w, const FieldSample& f)
{
    return {f.t, w * f.bx, w * f.by, w * f.bz};
}

} // namespace

StepPlan::StepPlan(const Synthesizer& synth, std::span<const double> grid, double z_max,
                   const PropagationOptions& options)
    : synth_(&synth), grid_(grid.begin(), grid.end()), z_max_(std::abs(z_max)), options_(options)
{
    if (grid_.size() < 2) {
        throw DomainError("time grid needs at least two points");
    }
    for (std::size_t k = 1; k < grid_.size(); ++k) {
        if (!(grid_[k] > grid_[k - 1])) {
            throw DomainError("time grid must be strictly increasing");
        }
    }
    const ReferenceTrajectory& traj = synth.trajectory();
    if (!traj.contains(grid_.front()) || !traj.contains(grid_.back())) {
        std::ostringstream os;
        os << "time grid [" << grid_.front() << ", " << grid_.back() << "] leaves the trajectory domain ["
           << traj.t_initial() << ", " << traj.t_final() << "]";
        throw RangeError(os.str());
    }
    if (!(options_.max_angle > 0.0) || !std::isfinite(options_.max_angle)) {
        throw DomainError("max_angle must be positive");
    }
    if (!std::isfinite(z_max_)) {
        throw DomainError("z_max must be finite");
    }
    options_.min_substeps = std::max<std::size_t>(1, options_.min_substeps);
    options_.refinement = std::max<std::size_t>(1, options_.refinement);

    const std::size_t n = grid_.size() - 1;
    grid_jets_.reserve(grid_.size());
    for (double t : grid_) {
        grid_jets_.push_back(synth.jet(t));
    }
    midpoints_.reserve(n);
    for (std::size_t k = 0; k < n; ++k) {
        midpoints_.push_back(synth.jet(0.5 * (grid_[k] + grid_[k + 1])));
    }

    substeps_.resize(n);
    offsets_.assign(n + 1, 0);
    for (std::size_t k = 0; k < n; ++k) {
        const double h = grid_[k + 1] - grid_[k];
        const double guess = h * midpoints_[k].field_bound(z_max_) * (k == 0 ? 2.0 : 1.0) / options_.max_angle;
        std::size_t m = options_.min_substeps;
        if (std::isfinite(guess)) {
            m = std::max(m, static_cast<std::size_t>(std::ceil(guess)));
        }
        Assessment check;
        std::vector<Step> steps = build_interval(k, m, &check);
        for (int iter = 0;; ++iter) {
            if (!std::isfinite(check.angle) || !std::isfinite(check.defect)) {
                throw SingularityError(grid_[k], std::nullopt,
                                       "field is not finite inside the grid interval starting at t = " +
                                           std::to_string(grid_[k]));
            }
            const double angle_ratio = check.angle / options_.max_angle;
            const double defect_ratio = check.defect / options_.quadrature_tolerance;
            if (angle_ratio <= 1.0 && defect_ratio <= 1.0) {
                break;
            }
            const double order = options_.scheme == Scheme::magnus4 ? 4.0 : 2.0;
            const double grow = std::max({1.1, 1.05 * angle_ratio, 1.05 * std::pow(defect_ratio, 1.0 / order)});
            m = static_cast<std::size_t>(std::ceil(static_cast<double>(m) * grow));
            if (m > kMaxSubsteps || iter > 100) {
                throw ResolutionError("cannot resolve the field in the grid interval starting at t = " +
                                      std::to_string(grid_[k]));
            }
            steps = build_interval(k, m, &check);
        }
        if (options_.refinement > 1) {
            m *= options_.refinement;
            steps = build_interval(k, m, nullptr);
        }
        substeps_[k] = m;
        offsets_[k + 1] = offsets_[k] + m;
        all_steps_.insert(all_steps_.end(), steps.begin(), steps.end());
    }

    auto still = [](const SynthesisJet& j) { return j.sigma == 0.0 && j.dsigma == 0.0; };
    deterministic_ = std::all_of(grid_jets_.begin(), grid_jets_.end(), still) &&
                     std::all_of(midpoints_.begin(), midpoints_.end(), still) &&
                     std::all_of(all_steps_.begin(), all_steps_.end(),
                                 [&](const Step& s) { return still(s.first.jet) && still(s.second.jet); });
}

std::vector<StepPlan::Step> StepPlan::build_interval(std::size_t k, std::size_t m, Assessment* check) const
{
    const double t0 = grid_[k];
    const double h = grid_[k + 1] - t0;
    const bool graded = k == 0;
    const bool cf4 = options_.scheme == Scheme::magnus4;
    const double du = 1.0 / static_cast<double>(m);
    auto time_at = [&](double u) { return std::min(graded ? t0 + h * u * u : t0 + h * u, grid_[k + 1]); };
    auto node = [&](double u) {
        Node nd;
        nd.jet = synth_->jet(time_at(u));
        nd.dt_du = graded ? 2.0 * h * u : h;
        return nd;
    };
    std::vector<Step> steps(m);
    for (std::size_t j = 0; j < m; ++j) {
        const double u0 = static_cast<double>(j) * du;
        steps[j].du = du;
        if (cf4) {
            steps[j].first = node(u0 + kC1 * du);
            steps[j].second = node(u0 + kC2 * du);
        } else {
            steps[j].first = node(u0 + 0.5 * du);
        }
    }
    if (check == nullptr) {
        return steps;
    }

    // Rotation angle of each factor, and the error of the node rule for the
    // change of sigma, theta, a and |b| across it.
    *check = {};
    SynthesisJet left = synth_->jet(t0);
    for (std::size_t j = 0; j < m; ++j) {
        const Step& s = steps[j];
        const SynthesisJet right = synth_->jet(j + 1 == m ? grid_[k + 1] : time_at(static_cast<double>(j + 1) * du));
        const double b1 = s.first.jet.field_bound(z_max_) * s.first.dt_du;
        double angle = s.du * b1;
        if (cf4) {
            const double b2 = s.second.jet.field_bound(z_max_) * s.second.dt_du;
            angle = s.du * std::max(kA2 * b1 + std::abs(kA1) * b2, std::abs(kA1) * b1 + kA2 * b2);
        }
        auto defect_of = [&](double change, auto rate) {
            double integral = s.du * rate(s.first.jet) * s.first.dt_du;
            if (cf4) {
                integral = 0.5 * s.du * (rate(s.first.jet) * s.first.dt_du + rate(s.second.jet) * s.second.dt_du);
            }
            return std::abs(change - integral);
        };
        const double defect =
            defect_of(right.sigma - left.sigma, [](const SynthesisJet& q) { return q.dsigma; }) *
                std::max(z_max_, 1.0) +
            defect_of(right.theta - left.theta, [](const SynthesisJet& q) { return q.dtheta; }) +
            defect_of(right.a - left.a, [](const SynthesisJet& q) { return q.da; }) +
            defect_of(right.b_mod - left.b_mod, [](const SynthesisJet& q) { return q.db_mod; });
        if (!std::isfinite(angle) || !std::isfinite(defect)) {
            check->angle = std::numeric_limits<double>::infinity();
            return steps;
        }
        check->angle = std::max(check->angle, angle);
        check->defect = std::max(check->defect, defect);
        left = right;
    }
    return steps;
}

std::span<const StepPlan::Step> StepPlan::steps(std::size_t interval) const
{
    return std::span<const Step>(all_steps_).subspan(offsets_[interval], substeps_[interval]);
}

PathTrace propagate_path(const StepPlan& plan, const PathDraw& draw, bool keep_fields)
{
    const double z = draw.z;
    if (std::abs(z) > plan.z_max() * (1.0 + 1e-12)) {
        throw DomainError("path z exceeds the step plan's z_max");
    }
    const auto& grid = plan.grid();
    const std::size_t n = grid.size() - 1;
    const bool cf4 = plan.options().scheme == Scheme::magnus4;

    PathTrace trace;
    trace.draw = draw;
    trace.times = grid;
    trace.states.reserve(grid.size());
    PureState psi = plan.grid_jets().front().state(z);
    trace.states.push_back(psi);
    double residue = 0.0;

    for (std::size_t k = 0; k < n; ++k) {
        for (const StepPlan::Step& s : plan.steps(k)) {
            const FieldEvaluation f1 = evaluate_field(s.first.jet, z, draw.id);
            residue = std::max(residue, f1.bz_residue);
            if (cf4) {
                const FieldEvaluation f2 = evaluate_field(s.second.jet, z, draw.id);
                residue = std::max(residue, f2.bz_residue);
                const FieldSample h1 = scaled(s.first.dt_du, f1.field);
                const FieldSample h2 = scaled(s.second.dt_du, f2.field);
                psi = su2_step(scaled_sum(kA2, h1, kA1, h2), s.du).apply(psi);
                psi = su2_step(scaled_sum(kA1, h1, kA2, h2), s.du).apply(psi);
            } else {
                psi = su2_step(scaled(s.first.dt_du, f1.field), s.du).apply(psi);
            }
        }
        trace.states.push_back(psi);
        trace.steps += plan.substeps(k);
    }

    for (const PureState& st : trace.states) {
        trace.norm_drift = std::max(trace.norm_drift, std::abs(st.norm() - 1.0));
    }
    // The initial state's own normalization error is not drift.
    trace.norm_drift = std::max(0.0, trace.norm_drift - std::abs(trace.states.front().norm() - 1.0));

    if (keep_fields) {
        trace.fields.reserve(n);
        for (const SynthesisJet& j : plan.midpoints()) {
            const FieldEvaluation f = evaluate_field(j, z, draw.id);
            residue = std::max(residue, f.bz_residue);
            trace.fields.push_back(f.field);
        }
    }
    trace.max_bz_residue = residue;
    return trace;
}

PathTrace propagate_path(const Synthesizer& synth, std::span<const double> grid, double z,
                         const PropagationOptions& options)
{
    const StepPlan plan(synth, grid, z, options);
    return propagate_path(plan, PathDraw{0, z, 1.0});
}

double path_infidelity(const PureState& psi1, const PureState& psi2)
{
    const Complex overlap = std::conj(psi1.a) * psi2.a + std::conj(psi1.b) * psi2.b;
    const Complex phase = std::abs(overlap) > 0.0 ? overlap / std::abs(overlap) : Complex(1.0);
    const double d = std::norm(psi2.a - phase * psi1.a) + std::norm(psi2.b - phase * psi1.b);
    return std::clamp(0.5 * d, 0.0, 1.0);
}

double schrodinger_residual(const Synthesizer& synth, double t, double z, double h)
{
    if (!(h > 0.0)) {
        throw DomainError("schrodinger_residual: h must be positive");
    }
    const PureState lo = synth.analytic_state(t - h, z);
    const PureState hi = synth.analytic_state(t + h, z);
    const PureState psi = synth.analytic_state(t, z);
    const FieldSample b = synth.field(t, z);
    const Complex i(0.0, 1.0);
    const Complex lhs_a = i * (hi.a - lo.a) / (2.0 * h);
    const Complex lhs_b = i * (hi.b - lo.b) / (2.0 * h);
    const Complex rhs_a = b.bz * psi.a + Complex(b.bx, -b.by) * psi.b;
    const Complex rhs_b = Complex(b.bx, b.by) * psi.a - b.bz * psi.b;
    return std::sqrt(std::norm(lhs_a - rhs_a) + std::norm(lhs_b - rhs_b));
}

} // namespace qnoise
