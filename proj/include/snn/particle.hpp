#pragma once

#include <algorithm>
#include <cmath>
#include <cstdint>
#include <string>
#include <vector>

#include "snn/errors.hpp"
#include "snn/initial.hpp"
#include "snn/model.hpp"
#include "snn/numeric.hpp"
#include "snn/parallel.hpp"
#include "snn/rng.hpp"

namespace snn {

/// State of the N-neuron network. Randomness is addressed, not stored: every
/// draw is a pure function of (seed, neuron, step), so the trajectory is
/// bit-identical for any worker count.
struct ParticleState {
    std::vector<double> v;
    std::vector<double> w;
    double t = 0.0;
    std::size_t n_spikes_last_step = 0;
    std::uint64_t seed = 0;
    std::uint64_t step_index = 0;

    std::size_t size() const { return v.size(); }
};

/// What to do when some neuron reaches lambda(v*)*dt > 1, i.e. the per-step
/// spike probability saturates and the one-jump-per-step assumption breaks.
enum class RateOverflow {
    error_out, ///< refuse the step (caller should reduce dt)
    saturate,  ///< spike with probability 1 and keep a count of such events
};

struct StepOptions {
    /// Exclude a spiking neuron from its own population increment J/N
    /// (per-event convention). Default false: the global increment is added
    /// to every neuron, spikers included.
    bool exclude_self_coupling = false;
    RateOverflow on_rate_overflow = RateOverflow::error_out;
    /// Use the worker pool inside a step. Disable when many independent
    /// simulations already run concurrently.
    bool data_parallel = true;
};

struct StepStats {
    std::size_t n_spikes = 0;
    std::size_t n_saturated = 0; ///< neurons stepped with lambda*dt > 1
    double max_rate_dt = 0.0;
};

namespace detail {

constexpr std::size_t kParticleChunk = 16384; // multiple of 4: spike draws come 4 per block

/// Per-step uniform for neuron i: lane i%4 of a Philox block shared by four
/// neighbouring neurons, giving one generator call per four neurons.
inline double spike_uniform(std::uint64_t seed, std::uint64_t step, std::size_t i) {
    rng_stream s(seed, rng_use::particle_spike, i >> 2);
    return u32_to_unit(s.block(step)[i & 3]);
}

} // namespace detail

inline ParticleState init_particles(const ModelParams& p, const InitialCondition& ic,
                                    std::size_t n, std::uint64_t seed) {
    p.validate();
    if (n == 0) throw config_error("init_particles: N must be >= 1");
    ParticleState s;
    s.v.resize(n);
    s.w.resize(n);
    s.seed = seed;
    parallel_for_chunks(n, detail::kParticleChunk,
                        [&](std::size_t, std::size_t b, std::size_t e) {
                            for (std::size_t i = b; i < e; ++i) {
                                rng_stream r(seed, rng_use::particle_init, i);
                                auto [vi, wi] = ic.sample(r, 0);
                                s.v[i] = vi;
                                s.w[i] = wi;
                            }
                        });
    return s;
}

/// One step of the three-stage scheme: explicit Euler flow prediction, then
/// independent Bernoulli spikes with probability lambda(v*)dt (reset to
/// v_reset, w incremented by w_jump), then the pooled increment
/// s = J/N * (#spikes) added to the whole population.
inline StepStats step(const ModelParams& p, ParticleState& st, double dt,
                      const StepOptions& opt = {}) {
    if (!(dt > 0.0)) throw config_error("step: dt must be > 0");
    const std::size_t n = st.size();
    const std::size_t n_chunks = (n + detail::kParticleChunk - 1) / detail::kParticleChunk;

    std::vector<std::uint64_t> chunk_spikes(n_chunks, 0);
    std::vector<std::uint64_t> chunk_saturated(n_chunks, 0);
    std::vector<double> chunk_max_rate_dt(n_chunks, 0.0);
    std::vector<std::uint8_t> chunk_bad(n_chunks, 0);
    // Spike flags are needed again in the coupling sweep when the spiker is
    // excluded from its own increment.
    std::vector<std::uint8_t> spiked;
    if (opt.exclude_self_coupling) spiked.assign(n, 0);

    auto body = [&](std::size_t c, std::size_t b, std::size_t e) {
        std::uint64_t spikes = 0, saturated = 0;
        double max_rate_dt = 0.0;
        bool bad = false;
        for (std::size_t i = b; i < e; ++i) {
            double vi = st.v[i], wi = st.w[i];
            double v_star = vi + dt * (p.nonlinearity(vi) - wi + p.I);
            double w_star = wi + dt * (p.b * vi - wi) / p.tau_w;
            double rate_dt = p.rate(v_star) * dt;
            max_rate_dt = std::max(max_rate_dt, rate_dt);
            if (rate_dt > 1.0) ++saturated;
            double u = detail::spike_uniform(st.seed, st.step_index, i);
            bool fired = u < rate_dt;
            if (fired) {
                ++spikes;
                st.v[i] = p.v_reset;
                st.w[i] = w_star + p.w_jump;
                if (opt.exclude_self_coupling) spiked[i] = 1;
            } else {
                st.v[i] = v_star;
                st.w[i] = w_star;
            }
            if (!std::isfinite(v_star) || !std::isfinite(w_star)) bad = true;
        }
        chunk_spikes[c] = spikes;
        chunk_saturated[c] = saturated;
        chunk_max_rate_dt[c] = max_rate_dt;
        chunk_bad[c] = bad ? 1 : 0;
    };
    if (opt.data_parallel)
        parallel_for_chunks(n, detail::kParticleChunk, body);
    else
        for (std::size_t c = 0; c < n_chunks; ++c)
            body(c, c * detail::kParticleChunk,
                 std::min(n, (c + 1) * detail::kParticleChunk));

    StepStats stats;
    for (std::size_t c = 0; c < n_chunks; ++c) {
        stats.n_spikes += chunk_spikes[c];
        stats.n_saturated += chunk_saturated[c];
        stats.max_rate_dt = std::max(stats.max_rate_dt, chunk_max_rate_dt[c]);
        if (chunk_bad[c])
            throw numerical_error("particle state became non-finite at t = " +
                                  std::to_string(st.t + dt));
    }
    if (stats.n_saturated > 0 && opt.on_rate_overflow == RateOverflow::error_out)
        throw numerical_error(
            "spike probability overflow: max lambda(v*)*dt = " +
            std::to_string(stats.max_rate_dt) + " > 1 at t = " + std::to_string(st.t) +
            "; reduce dt or use the saturate policy");

    const double s_kick = p.J * static_cast<double>(stats.n_spikes) / static_cast<double>(n);
    const double self_kick = p.J / static_cast<double>(n);
    auto couple = [&](std::size_t, std::size_t b, std::size_t e) {
        if (opt.exclude_self_coupling) {
            for (std::size_t i = b; i < e; ++i)
                st.v[i] += spiked[i] ? s_kick - self_kick : s_kick;
        } else {
            for (std::size_t i = b; i < e; ++i) st.v[i] += s_kick;
        }
    };
    if (opt.data_parallel)
        parallel_for_chunks(n, detail::kParticleChunk, couple);
    else
        for (std::size_t c = 0; c < n_chunks; ++c)
            couple(c, c * detail::kParticleChunk,
                   std::min(n, (c + 1) * detail::kParticleChunk));

    st.t += dt;
    st.step_index += 1;
    st.n_spikes_last_step = stats.n_spikes;
    return stats;
}

/// Deterministic chunked mean of the membrane potentials.
inline double mean_v(const ParticleState& st, bool data_parallel = true) {
    const std::size_t n = st.size();
    const std::size_t n_chunks = (n + detail::kParticleChunk - 1) / detail::kParticleChunk;
    std::vector<double> partial(n_chunks, 0.0);
    auto body = [&](std::size_t c, std::size_t b, std::size_t e) {
        kahan_sum s;
        for (std::size_t i = b; i < e; ++i) s.add(st.v[i]);
        partial[c] = s.value();
    };
    if (data_parallel)
        parallel_for_chunks(n, detail::kParticleChunk, body);
    else
        for (std::size_t c = 0; c < n_chunks; ++c)
            body(c, c * detail::kParticleChunk,
                 std::min(n, (c + 1) * detail::kParticleChunk));
    kahan_sum total;
    for (double x : partial) total.add(x);
    return total.value() / static_cast<double>(n);
}

struct ParticleSnapshot {
    double t = 0.0;
    std::vector<double> v;
    std::vector<double> w;
};

struct ParticleTrace {
    std::vector<double> times;
    std::vector<double> mean_v;
    std::vector<double> firing_rate; ///< spikes per neuron per unit time, per step
    std::vector<std::size_t> n_spikes;
    std::vector<ParticleSnapshot> snapshots;
    std::size_t total_saturated = 0;
};

struct RunOptions {
    StepOptions step;
    std::vector<double> snapshot_times; ///< sorted; snapshot at first sample >= each
};

/// Advance to time T with fixed step dt, sampling every `sample_every` steps
/// (the initial state and the final step are always sampled).
inline ParticleTrace run(const ModelParams& p, ParticleState& st, double dt, double T,
                         std::size_t sample_every, const RunOptions& opt = {}) {
    if (!(T > 0.0)) throw config_error("run: T must be > 0");
    if (sample_every == 0) sample_every = 1;
    ParticleTrace trace;
    const double t_end = st.t + T;
    std::size_t next_snapshot = 0;

    auto sample = [&](double rate, std::size_t spikes) {
        trace.times.push_back(st.t);
        trace.mean_v.push_back(mean_v(st, opt.step.data_parallel));
        trace.firing_rate.push_back(rate);
        trace.n_spikes.push_back(spikes);
        while (next_snapshot < opt.snapshot_times.size() &&
               st.t >= opt.snapshot_times[next_snapshot] - 1e-12) {
            trace.snapshots.push_back({st.t, st.v, st.w});
            ++next_snapshot;
        }
    };

    sample(0.0, 0);
    std::size_t k = 0;
    while (st.t < t_end - 1e-12 * std::max(1.0, t_end)) {
        double h = std::min(dt, t_end - st.t);
        StepStats s;
        try {
            s = step(p, st, h, opt.step);
        } catch (const numerical_error& err) {
            throw numerical_error(std::string(err.what()) +
                                  " (while advancing to t = " + std::to_string(t_end) + ")");
        }
        trace.total_saturated += s.n_saturated;
        ++k;
        bool last = !(st.t < t_end - 1e-12 * std::max(1.0, t_end));
        if (k % sample_every == 0 || last)
            sample(static_cast<double>(s.n_spikes) / (static_cast<double>(st.size()) * h),
                   s.n_spikes);
    }
    return trace;
}

struct Histogram2D {
    double x_min = 0.0, x_max = 0.0, y_min = 0.0, y_max = 0.0;
    std::size_t bins = 0;
    std::vector<std::uint64_t> counts; ///< bins x bins, row-major in y

    std::uint64_t& at(std::size_t ix, std::size_t iy) { return counts[iy * bins + ix]; }
};

struct PairCorrelationResult {
    std::vector<double> v_first;  ///< one tagged neuron per realisation
    std::vector<double> v_second; ///< the other tagged neuron
    double correlation = 0.0;     ///< Pearson coefficient over realisations
    Histogram2D histogram;
};

struct PairCorrelationOptions {
    StepOptions step;
    std::size_t histogram_bins = 40;
};

/// Empirical two-neuron statistics at time T over M independent realisations:
/// simulate, pick an unordered pair of distinct neurons uniformly, record
/// their potentials. Independent neurons (J = 0) give correlation O(1/sqrt(M)).
inline PairCorrelationResult pair_correlation_experiment(
    const ModelParams& p, const InitialCondition& ic, std::size_t n, std::size_t m,
    double T, double dt, std::uint64_t seed, const PairCorrelationOptions& opt = {}) {
    if (n < 2) throw config_error("pair_correlation_experiment: need N >= 2");
    if (m < 2) throw config_error("pair_correlation_experiment: need M >= 2");

    PairCorrelationResult res;
    res.v_first.resize(m);
    res.v_second.resize(m);

    StepOptions inner = opt.step;
    inner.data_parallel = false; // realisations already fill the worker pool
    parallel_for_jobs(m, [&](std::size_t r) {
        auto b = rng_stream(seed, rng_use::scratch, r).block(0);
        std::uint64_t seed_r = (static_cast<std::uint64_t>(b[0]) << 32) | b[1];
        ParticleState st = init_particles(p, ic, n, seed_r);
        RunOptions ro;
        ro.step = inner;
        run(p, st, dt, T, std::max<std::size_t>(1, static_cast<std::size_t>(T / dt)), ro);
        rng_stream pick(seed_r, rng_use::neuron_pick, 0);
        auto [u1, u2] = pick.uniform2(0);
        std::size_t i = std::min(n - 1, static_cast<std::size_t>(u1 * static_cast<double>(n)));
        std::size_t j =
            std::min(n - 2, static_cast<std::size_t>(u2 * static_cast<double>(n - 1)));
        if (j >= i) ++j;
        res.v_first[r] = st.v[i];
        res.v_second[r] = st.v[j];
    });

    double mx = 0, my = 0;
    for (std::size_t r = 0; r < m; ++r) {
        mx += res.v_first[r];
        my += res.v_second[r];
    }
    mx /= static_cast<double>(m);
    my /= static_cast<double>(m);
    double sxx = 0, syy = 0, sxy = 0;
    for (std::size_t r = 0; r < m; ++r) {
        double dx = res.v_first[r] - mx, dy = res.v_second[r] - my;
        sxx += dx * dx;
        syy += dy * dy;
        sxy += dx * dy;
    }
    res.correlation = (sxx > 0 && syy > 0) ? sxy / std::sqrt(sxx * syy) : 0.0;

    auto [lo1, hi1] = std::minmax_element(res.v_first.begin(), res.v_first.end());
    auto [lo2, hi2] = std::minmax_element(res.v_second.begin(), res.v_second.end());
    Histogram2D& h = res.histogram;
    h.bins = opt.histogram_bins;
    h.x_min = *lo1;
    h.x_max = *hi1;
    h.y_min = *lo2;
    h.y_max = *hi2;
    h.counts.assign(h.bins * h.bins, 0);
    double wx = (h.x_max > h.x_min) ? h.x_max - h.x_min : 1.0;
    double wy = (h.y_max > h.y_min) ? h.y_max - h.y_min : 1.0;
    for (std::size_t r = 0; r < m; ++r) {
        auto ix = std::min(h.bins - 1, static_cast<std::size_t>((res.v_first[r] - h.x_min) /
                                                                wx * static_cast<double>(h.bins)));
        auto iy = std::min(h.bins - 1, static_cast<std::size_t>((res.v_second[r] - h.y_min) /
                                                                wy * static_cast<double>(h.bins)));
        h.at(ix, iy) += 1;
    }
    return res;
}

} // namespace snn
