#include "qnoise/ensemble.hpp"

#include "qnoise/errors.hpp"
#include "qnoise/quadrature.hpp"
#include "qnoise/rng.hpp"

#include <algorithm>
#include <atomic>
#include <cmath>
#include <exception>
#include <mutex>
#include <sstream>
#include <thread>

namespace qnoise {

namespace {

// Weighted running mean and sum of squared deviations of the four path
// observables |a|^2, |b|^2, Re(b a*), Im(b a*).
struct Moments
{
    double weight = 0.0;
    double mean[4] = {0.0, 0.0, 0.0, 0.0};
    double m2[4] = {0.0, 0.0, 0.0, 0.0};

    void add(double w, const double (&x)[4])
    {
        weight += w;
        for (int c = 0; c < 4; ++c) {
            const double d = x[c] - mean[c];
            mean[c] += d * w / weight;
            m2[c] += w * d * (x[c] - mean[c]);
        }
    }

    void merge(const Moments& o)
    {
        if (o.weight == 0.0) {
            return;
        }
        if (weight == 0.0) {
            *this = o;
            return;
        }
        const double total = weight + o.weight;
        for (int c = 0; c < 4; ++c) {
            const double d = o.mean[c] - mean[c];
            mean[c] += d * o.weight / total;
            m2[c] += o.m2[c] + d * d * weight * o.weight / total;
        }
        weight = total;
    }
};

struct Block
{
    std::vector<Moments> per_time;
    double residue = 0.0;
    double drift = 0.0;
    std::size_t steps = 0;

    void merge(const Block& o)
    {
        for (std::size_t i = 0; i < per_time.size(); ++i) {
            per_time[i].merge(o.per_time[i]);
        }
        residue = std::max(residue, o.residue);
        drift = std::max(drift, o.drift);
        steps = std::max(steps, o.steps);
    }
};

Block run_block(const StepPlan& plan, std::span<const PathDraw> draws)
{
    Block b;
    b.per_time.resize(plan.grid().size());
    for (const PathDraw& d : draws) {
        const PathTrace tr = propagate_path(plan, d, false);
        for (std::size_t i = 0; i < tr.states.size(); ++i) {
            const PureState& s = tr.states[i];
            const Complex c = s.b * std::conj(s.a);
            const double x[4] = {std::norm(s.a), std::norm(s.b), c.real(), c.imag()};
            b.per_time[i].add(d.weight, x);
        }
        b.residue = std::max(b.residue, tr.max_bz_residue);
        b.drift = std::max(b.drift, tr.norm_drift);
        b.steps = std::max(b.steps, tr.steps);
    }
    return b;
}

// Fixed-shape pairwise reduction over [lo, hi).
Block reduce(std::vector<Block>& blocks, std::size_t lo, std::size_t hi)
{
    if (hi - lo == 1) {
        return std::move(blocks[lo]);
    }
    const std::size_t mid = lo + (hi - lo) / 2;
    Block left = reduce(blocks, lo, mid);
    left.merge(reduce(blocks, mid, hi));
    return left;
}

EnsembleEstimate run(const Synthesizer& synth, std::span<const double> grid, std::span<const PathDraw> draws,
                     const EnsembleOptions& options, bool equal_weights)
{
    if (draws.empty()) {
        throw DomainError("ensemble needs at least one path");
    }
    double z_max = 0.0;
    for (const PathDraw& d : draws) {
        if (!std::isfinite(d.z) || !(d.weight > 0.0)) {
            throw DomainError("path draws need finite z and positive weight");
        }
        z_max = std::max(z_max, std::abs(d.z));
    }
    const StepPlan plan(synth, grid, z_max, options.propagation);

    EnsembleEstimate est;
    est.times = plan.grid();
    const PathDraw single{0, 0.0, 1.0};
    if (plan.deterministic()) {
        draws = std::span<const PathDraw>(&single, 1);
    }
    est.samples = draws.size();

    const std::size_t bs = std::max<std::size_t>(1, options.block_size);
    const std::size_t nblocks = (draws.size() + bs - 1) / bs;
    std::vector<Block> blocks(nblocks);
    std::vector<std::exception_ptr> errors(nblocks);

    unsigned threads = options.threads ? options.threads : std::max(1u, std::thread::hardware_concurrency());
    threads = static_cast<unsigned>(std::min<std::size_t>(threads, nblocks));
    std::atomic<std::size_t> next{0};
    auto worker = [&] {
        for (std::size_t k = next++; k < nblocks; k = next++) {
            const std::size_t lo = k * bs;
            const std::size_t hi = std::min(draws.size(), lo + bs);
            try {
                blocks[k] = run_block(plan, draws.subspan(lo, hi - lo));
            } catch (...) {
                errors[k] = std::current_exception();
            }
        }
    };
    if (threads <= 1) {
        worker();
    } else {
        std::vector<std::jthread> pool;
        for (unsigned i = 0; i < threads; ++i) {
            pool.emplace_back(worker);
        }
    }
    // Report the failure of the lowest block so errors do not depend on timing.
    for (const auto& e : errors) {
        if (e) {
            std::rethrow_exception(e);
        }
    }

    const Block total = reduce(blocks, 0, nblocks);
    est.max_bz_residue = total.residue;
    est.max_norm_drift = total.drift;
    est.steps_per_path = total.steps;
    const double m = static_cast<double>(draws.size());
    for (const Moments& mo : total.per_time) {
        est.rho.push_back({mo.mean[0], mo.mean[1], Complex(mo.mean[2], mo.mean[3])});
        ComponentError se;
        if (equal_weights && draws.size() > 1) {
            // m2 carries weights W/M per path; rescale to unit weights.
            auto err = [&](int c) { return std::sqrt(mo.m2[c] * (m / mo.weight) / (m - 1.0) / m); };
            se = {err(0), err(2), err(3)};
        }
        est.se.push_back(se);
    }
    return est;
}

} // namespace

std::string EnsembleEstimate::describe() const
{
    std::ostringstream os;
    if (kind == EstimatorKind::gauss_hermite) {
        os << "gauss-hermite n=" << requested;
    } else {
        os << "monte-carlo M=" << requested;
        if (seed) {
            os << " seed=" << *seed;
        }
    }
    return os.str();
}

std::vector<PathDraw> mc_draws(std::size_t paths, std::uint64_t seed)
{
    std::vector<PathDraw> draws(paths);
    const double w = 1.0 / static_cast<double>(paths);
    for (std::size_t k = 0; k < paths; ++k) {
        draws[k] = {k, normal_variate(seed, k), w};
    }
    return draws;
}

EnsembleEstimate average_draws(const Synthesizer& synth, std::span<const double> grid,
                               std::span<const PathDraw> draws, const EnsembleOptions& options)
{
    const bool equal = std::all_of(draws.begin(), draws.end(),
                                   [&](const PathDraw& d) { return d.weight == draws.front().weight; });
    EnsembleEstimate est = run(synth, grid, draws, options, equal);
    est.kind = EstimatorKind::monte_carlo;
    est.requested = draws.size();
    return est;
}

EnsembleEstimate gh_average(const Synthesizer& synth, std::span<const double> grid, std::size_t n_nodes,
                            const EnsembleOptions& options)
{
    if (n_nodes < 2) {
        throw DomainError("gh_average: need at least two nodes");
    }
    const GaussHermiteRule rule = gauss_hermite(n_nodes);
    std::vector<PathDraw> draws(n_nodes);
    for (std::size_t k = 0; k < n_nodes; ++k) {
        draws[k] = {k, rule.nodes[k], rule.weights[k]};
    }
    EnsembleEstimate est = run(synth, grid, draws, options, false);
    est.kind = EstimatorKind::gauss_hermite;
    est.requested = n_nodes;
    return est;
}

EnsembleEstimate mc_average(const Synthesizer& synth, std::span<const double> grid, std::size_t paths,
                            std::uint64_t seed, const EnsembleOptions& options)
{
    if (paths < 2) {
        throw DomainError("mc_average: need at least two paths");
    }
    const std::vector<PathDraw> draws = mc_draws(paths, seed);
    EnsembleEstimate est = run(synth, grid, draws, options, true);
    est.kind = EstimatorKind::monte_carlo;
    est.requested = paths;
    est.seed = seed;
    return est;
}

ComparisonReport compare(const EnsembleEstimate& estimate, std::span<const double> reference_times,
                         std::span<const DensityMatrix> reference, double tol)
{
    if (!(tol >= 0.0)) {
        throw UsageError("compare: tolerance must be non-negative");
    }
    if (reference.size() != estimate.rho.size() || reference_times.size() != estimate.times.size()) {
        throw UsageError("compare: estimate and reference are on different grids");
    }
    for (std::size_t i = 0; i < reference_times.size(); ++i) {
        const double t = estimate.times[i];
        if (std::abs(reference_times[i] - t) > 1e-12 * std::max(1.0, std::abs(t))) {
            throw UsageError("compare: estimate and reference are on different grids");
        }
    }
    ComparisonReport r;
    r.times = estimate.times;
    r.tolerance = tol;
    r.estimator = estimate.describe();
    r.deviation.resize(reference.size());
    bool finite = true;
    for (std::size_t i = 0; i < reference.size(); ++i) {
        const double d = max_abs_deviation(estimate.rho[i], reference[i]);
        r.deviation[i] = d;
        if (!std::isfinite(d)) {
            finite = false;
        }
        if (d > r.worst_deviation || !std::isfinite(d)) {
            r.worst_deviation = d;
            r.worst_index = i;
        }
    }
    if (!r.times.empty()) {
        r.worst_time = r.times[r.worst_index];
    }
    r.passed = finite && r.worst_deviation <= tol;
    return r;
}

ComparisonReport compare(const EnsembleEstimate& estimate, const ReferenceTrajectory& traj, double tol)
{
    std::vector<DensityMatrix> ref;
    ref.reserve(estimate.times.size());
    for (double t : estimate.times) {
        ref.push_back(traj.evaluate(t));
    }
    return compare(estimate, estimate.times, ref, tol);
}

ComparisonReport expansion_check_initial(const Synthesizer& synth, std::size_t n_nodes, double tol)
{
    const GaussHermiteRule rule = gauss_hermite(n_nodes);
    const double t0 = synth.t_initial();
    const SynthesisJet jet = synth.jet(t0);
    EnsembleEstimate est;
    est.kind = EstimatorKind::gauss_hermite;
    est.requested = n_nodes;
    est.samples = n_nodes;
    est.times = {t0};
    DensityMatrix rho{0.0, 0.0, 0.0};
    for (std::size_t k = 0; k < n_nodes; ++k) {
        const DensityMatrix p = DensityMatrix::projector(jet.state(rule.nodes[k]));
        rho.rho00 += rule.weights[k] * p.rho00;
        rho.rho11 += rule.weights[k] * p.rho11;
        rho.rho10 += rule.weights[k] * p.rho10;
    }
    est.rho = {rho};
    est.se = {ComponentError{}};
    const DensityMatrix ref = synth.trajectory().initial_state();
    return compare(est, std::span<const double>(est.times), std::span<const DensityMatrix>(&ref, 1), tol);
}

} // namespace qnoise
