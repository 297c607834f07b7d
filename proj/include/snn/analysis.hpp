#pragma once

#include <algorithm>
#include <cmath>
#include <optional>
#include <string>
#include <vector>

#include "snn/adaptive.hpp"
#include "snn/density.hpp"
#include "snn/errors.hpp"
#include "snn/grid.hpp"
#include "snn/initial.hpp"
#include "snn/model.hpp"
#include "snn/numeric.hpp"
#include "snn/parallel.hpp"
#include "snn/particle.hpp"
#include "snn/rng.hpp"

namespace snn {

namespace detail {

inline std::uint64_t derived_seed(std::uint64_t seed, std::uint64_t salt) {
    auto b = rng_stream(seed, rng_use::scratch, salt).block(0);
    return (static_cast<std::uint64_t>(b[2]) << 32) | b[3];
}

} // namespace detail

// ---------------------------------------------------------------------------
// Convergence in the network size
// ---------------------------------------------------------------------------

enum class ConvergenceReference { largest_n, mean_field };

struct ConvergenceOptions {
    std::size_t sample_every = 10;
    StepOptions step;
    // mean-field reference, used when reference == mean_field
    std::optional<Grid2D> grid;
    AdaptiveOptions adaptive;
};

struct ConvergenceResult {
    std::vector<std::size_t> n_values; ///< fitted points (reference excluded)
    std::vector<double> errors;        ///< time-averaged |V_N - V_ref|
    double slope = 0.0;                ///< log-log fit of error against N
    std::vector<double> sample_times;
    std::vector<std::vector<double>> traces; ///< V_N per fitted N
    std::vector<double> reference_trace;
};

/// Time-averaged deviation of the mean potential from a reference run, per
/// network size, with a log-log slope fit. Runs use independent seeds; when
/// the reference is the largest N, that run is excluded from the fit.
inline ConvergenceResult convergence_experiment(const ModelParams& p,
                                                const InitialCondition& ic,
                                                std::vector<std::size_t> n_list,
                                                double dt, double T,
                                                ConvergenceReference reference,
                                                std::uint64_t seed,
                                                const ConvergenceOptions& opt = {}) {
    if (n_list.empty()) throw config_error("convergence_experiment: empty N list");
    std::sort(n_list.begin(), n_list.end());

    ConvergenceResult res;
    std::vector<std::vector<double>> all_traces(n_list.size());
    for (std::size_t k = 0; k < n_list.size(); ++k) {
        ParticleState st = init_particles(p, ic, n_list[k], detail::derived_seed(seed, k));
        RunOptions ro;
        ro.step = opt.step;
        ParticleTrace tr = run(p, st, dt, T, opt.sample_every, ro);
        if (k == 0) res.sample_times = tr.times;
        all_traces[k] = tr.mean_v;
    }

    std::size_t n_fit = n_list.size();
    if (reference == ConvergenceReference::largest_n) {
        if (n_list.size() < 2)
            throw config_error("convergence_experiment: largest-N reference needs >= 2 sizes");
        res.reference_trace = all_traces.back();
        n_fit -= 1;
    } else {
        if (!opt.grid)
            throw config_error("convergence_experiment: mean-field reference needs a grid");
        const Grid2D& g = *opt.grid;
        AdvanceResult mf = adaptive_advance(p, g, discretize_initial(ic, g), T, opt.adaptive);
        res.reference_trace.resize(res.sample_times.size());
        for (std::size_t k = 0; k < res.sample_times.size(); ++k)
            res.reference_trace[k] =
                lerp_at(mf.trace.times, mf.trace.mean_v, res.sample_times[k]);
    }

    for (std::size_t k = 0; k < n_fit; ++k) {
        kahan_sum dev;
        for (std::size_t s = 0; s < res.sample_times.size(); ++s)
            dev.add(std::abs(all_traces[k][s] - res.reference_trace[s]));
        res.n_values.push_back(n_list[k]);
        res.errors.push_back(dev.value() / static_cast<double>(res.sample_times.size()));
        res.traces.push_back(std::move(all_traces[k]));
    }

    if (res.n_values.size() < 3)
        throw config_error("convergence_experiment: need at least 3 sizes for the fit");
    std::vector<double> lx, ly;
    for (std::size_t k = 0; k < res.n_values.size(); ++k) {
        if (res.errors[k] <= 0.0) continue; // exact match (shared seed): excluded
        lx.push_back(std::log(static_cast<double>(res.n_values[k])));
        ly.push_back(std::log(res.errors[k]));
    }
    if (lx.size() < 3)
        throw config_error("convergence_experiment: degenerate fit (fewer than 3 points)");
    res.slope = fit_line(lx, ly).slope;
    return res;
}

// ---------------------------------------------------------------------------
// Invariant distribution of the isolated neuron
// ---------------------------------------------------------------------------

struct InvariantOptions {
    double macro_interval = 10.0;   ///< stationarity is checked on this cadence
    double threshold = 1e-8;        ///< l1 change of the density per interval
    AdaptiveOptions adaptive;
};

struct InvariantResult {
    Density density;
    bool converged = false;
    double residual = 0.0; ///< last l1 change over a macro interval
    double t_reached = 0.0;
    DensityStats stats;
    std::vector<StepLogRow> log;
};

/// Advance the isolated-neuron density (J must be 0) until the l1 change over
/// one macro interval falls below the threshold, or T_long is exhausted.
inline InvariantResult invariant_distribution(const ModelParams& p, const Grid2D& g,
                                              const InitialCondition& ic, double eps,
                                              double t_long,
                                              const InvariantOptions& opt = {}) {
    if (p.J != 0.0)
        throw config_error("invariant_distribution: requires J = 0 (isolated neuron)");
    InvariantResult res;
    Density d = discretize_initial(ic, g);

    AdaptiveOptions ao = opt.adaptive;
    ao.eps = eps;
    double t = 0.0;
    while (t < t_long - 1e-9) {
        double span = std::min(opt.macro_interval, t_long - t);
        Density before = d;
        AdvanceResult adv = adaptive_advance(p, g, std::move(d), span, ao);
        d = std::move(adv.density);
        ao.dt_init = adv.dt_final; // keep the controller state across intervals
        for (auto& row : adv.log) res.log.push_back(row);
        t = d.t;
        res.residual = l1_distance(before.mu, d.mu) * g.cell_area();
        if (span >= opt.macro_interval - 1e-9 && res.residual < opt.threshold) {
            res.converged = true;
            break;
        }
    }
    res.t_reached = t;
    res.stats = statistics(g, p, d);
    res.density = std::move(d);
    return res;
}

// ---------------------------------------------------------------------------
// Oscillation measures and the coupling sweep
// ---------------------------------------------------------------------------

/// Dominant oscillation period of a sampled signal via the autocorrelation
/// peak after its first zero crossing; nullopt when no credible peak exists.
inline std::optional<double> dominant_period(std::span<const double> times,
                                             std::span<const double> values,
                                             std::size_t grid_points = 4096) {
    if (times.size() < 8) return std::nullopt;
    double t0 = times.front(), t1 = times.back();
    if (!(t1 > t0)) return std::nullopt;
    std::vector<double> y = resample_uniform(times, values, t0, t1, grid_points);
    double mean = 0.0;
    for (double x : y) mean += x;
    mean /= static_cast<double>(y.size());
    for (double& x : y) x -= mean;
    double denom = 0.0;
    for (double x : y) denom += x * x;
    if (denom <= 0.0) return std::nullopt;

    const std::size_t max_lag = grid_points / 2;
    std::vector<double> rho(max_lag + 1, 0.0);
    for (std::size_t lag = 1; lag <= max_lag; ++lag) {
        double acc = 0.0;
        for (std::size_t k = 0; k + lag < y.size(); ++k) acc += y[k] * y[k + lag];
        rho[lag] = acc / denom;
    }
    std::size_t first_neg = 0;
    for (std::size_t lag = 1; lag <= max_lag; ++lag)
        if (rho[lag] < 0.0) {
            first_neg = lag;
            break;
        }
    if (first_neg == 0) return std::nullopt; // monotone decay, no cycle
    std::size_t best = first_neg;
    for (std::size_t lag = first_neg; lag <= max_lag; ++lag)
        if (rho[lag] > rho[best]) best = lag;
    if (rho[best] < 0.2) return std::nullopt;
    double dt_grid = (t1 - t0) / static_cast<double>(grid_points - 1);
    return static_cast<double>(best) * dt_grid;
}

/// Intervals between successive peaks of a sampled signal (used to check that
/// a limit cycle has settled to a stable period).
inline std::vector<double> peak_intervals(std::span<const double> times,
                                          std::span<const double> values,
                                          std::size_t grid_points = 4096) {
    std::vector<double> out;
    if (times.size() < 8) return out;
    double t0 = times.front(), t1 = times.back();
    std::vector<double> y = resample_uniform(times, values, t0, t1, grid_points);
    double lo = *std::min_element(y.begin(), y.end());
    double hi = *std::max_element(y.begin(), y.end());
    if (!(hi > lo)) return out;
    double floor_level = lo + 0.6 * (hi - lo);
    double dt_grid = (t1 - t0) / static_cast<double>(grid_points - 1);
    std::vector<double> peak_times;
    for (std::size_t k = 1; k + 1 < y.size(); ++k) {
        if (y[k] >= y[k - 1] && y[k] > y[k + 1] && y[k] > floor_level) {
            // parabolic refinement of the peak position
            double denom = y[k - 1] - 2.0 * y[k] + y[k + 1];
            double shift = (denom != 0.0) ? 0.5 * (y[k - 1] - y[k + 1]) / denom : 0.0;
            peak_times.push_back(t0 + (static_cast<double>(k) + shift) * dt_grid);
        }
    }
    for (std::size_t k = 1; k < peak_times.size(); ++k)
        out.push_back(peak_times[k] - peak_times[k - 1]);
    return out;
}

struct SweepOptions {
    double amplitude_floor = 1e-3;
    AdaptiveOptions adaptive;
    bool parallel = true;
};

struct SweepResult {
    std::vector<double> j_values;
    std::vector<double> amplitudes;               ///< post-transient peak-to-trough of V
    std::vector<std::optional<double>> periods;
    std::vector<bool> oscillatory;
    std::vector<MeanFieldTrace> traces;
    std::vector<std::string> trace_files; ///< filled by the output layer
};

/// Mean-field sweep over the coupling strength: integrate to T, drop the
/// transient, measure the amplitude of the mean potential and its dominant
/// period, classify as oscillatory iff the amplitude exceeds the floor.
inline SweepResult hopf_sweep(const ModelParams& p, const Grid2D& g,
                              const InitialCondition& ic, std::vector<double> j_list,
                              double eps, double T, double transient_fraction,
                              const SweepOptions& opt = {}) {
    if (j_list.empty()) throw config_error("hopf_sweep: empty J list");
    if (!(transient_fraction >= 0.0 && transient_fraction < 1.0))
        throw config_error("hopf_sweep: transient_fraction must be in [0,1)");
    std::sort(j_list.begin(), j_list.end());

    SweepResult res;
    res.j_values = j_list;
    res.amplitudes.assign(j_list.size(), 0.0);
    res.periods.assign(j_list.size(), std::nullopt);
    res.oscillatory.assign(j_list.size(), false);
    res.traces.resize(j_list.size());

    Density d0 = discretize_initial(ic, g);
    auto run_one = [&](std::size_t k) {
        ModelParams pk = p;
        pk.J = j_list[k];
        AdaptiveOptions ao = opt.adaptive;
        ao.eps = eps;
        ao.keep_log = false;
        AdvanceResult adv = adaptive_advance(pk, g, d0, T, ao);
        const MeanFieldTrace& tr = adv.trace;
        double t_cut = transient_fraction * T;
        double lo = 0.0, hi = 0.0;
        bool first = true;
        std::vector<double> ts, vs;
        for (std::size_t s = 0; s < tr.times.size(); ++s) {
            if (tr.times[s] < t_cut) continue;
            ts.push_back(tr.times[s]);
            vs.push_back(tr.mean_v[s]);
            if (first) {
                lo = hi = tr.mean_v[s];
                first = false;
            } else {
                lo = std::min(lo, tr.mean_v[s]);
                hi = std::max(hi, tr.mean_v[s]);
            }
        }
        res.amplitudes[k] = hi - lo;
        res.oscillatory[k] = res.amplitudes[k] > opt.amplitude_floor;
        if (res.oscillatory[k]) res.periods[k] = dominant_period(ts, vs);
        res.traces[k] = tr;
    };
    if (opt.parallel)
        parallel_for_jobs(j_list.size(), run_one);
    else
        for (std::size_t k = 0; k < j_list.size(); ++k) run_one(k);
    return res;
}

/// Bisect the oscillation threshold between a non-oscillatory J_lo and an
/// oscillatory J_hi using the sweep classifier.
inline double bisect_oscillation_threshold(const ModelParams& p, const Grid2D& g,
                                           const InitialCondition& ic, double eps,
                                           double T, double transient_fraction,
                                           double j_lo, double j_hi, int iterations,
                                           const SweepOptions& opt = {}) {
    SweepOptions so = opt;
    so.parallel = false;
    for (int k = 0; k < iterations; ++k) {
        double mid = 0.5 * (j_lo + j_hi);
        SweepResult r = hopf_sweep(p, g, ic, {mid}, eps, T, transient_fraction, so);
        (r.oscillatory[0] ? j_hi : j_lo) = mid;
    }
    return 0.5 * (j_lo + j_hi);
}

// ---------------------------------------------------------------------------
// Particle against mean-field
// ---------------------------------------------------------------------------

struct CompareOptions {
    std::size_t sample_every = 10;
    StepOptions step;
    AdaptiveOptions adaptive;
};

struct CompareResult {
    std::vector<double> times;
    std::vector<double> v_particle;
    std::vector<double> v_mean_field;
    double max_gap = 0.0;
    double mean_gap = 0.0;
};

/// Run both descriptions from the same initial law and report the gap between
/// the two mean-potential curves on the particle sampling grid.
inline CompareResult compare_particle_meanfield(const ModelParams& p,
                                                const InitialCondition& ic, std::size_t n,
                                                const Grid2D& g, double dt, double eps,
                                                double T, std::uint64_t seed,
                                                const CompareOptions& opt = {}) {
    CompareResult res;

    ParticleState st = init_particles(p, ic, n, seed);
    RunOptions ro;
    ro.step = opt.step;
    ParticleTrace tr = run(p, st, dt, T, opt.sample_every, ro);

    AdaptiveOptions ao = opt.adaptive;
    ao.eps = eps;
    ao.keep_log = false;
    AdvanceResult mf = adaptive_advance(p, g, discretize_initial(ic, g), T, ao);

    res.times = tr.times;
    res.v_particle = tr.mean_v;
    res.v_mean_field.resize(tr.times.size());
    kahan_sum acc;
    for (std::size_t k = 0; k < tr.times.size(); ++k) {
        res.v_mean_field[k] = lerp_at(mf.trace.times, mf.trace.mean_v, tr.times[k]);
        double gap = std::abs(res.v_particle[k] - res.v_mean_field[k]);
        res.max_gap = std::max(res.max_gap, gap);
        acc.add(gap);
    }
    res.mean_gap = acc.value() / static_cast<double>(tr.times.size());
    return res;
}

} // namespace snn
