#pragma once

#include <algorithm>
#include <cmath>
#include <string>
#include <vector>

#include "snn/density.hpp"
#include "snn/errors.hpp"
#include "snn/grid.hpp"
#include "snn/model.hpp"
#include "snn/numeric.hpp"
#include "snn/strang.hpp"

namespace snn {

/// One attempted macro step of the adaptive controller.
struct StepLogRow {
    double t = 0.0;       ///< time at the start of the attempt
    double dt = 0.0;      ///< attempted step
    double e = 0.0;       ///< evolution indicator
    bool accepted = false;
    double mass = 0.0;    ///< mass of the candidate state
    double min_mu = 0.0;  ///< most negative solver output inside the attempt
    double psi = 0.0;     ///< population rate at the start of the attempt
    double mean_v = 0.0;  ///< mean potential of the candidate state
    std::size_t clamped_cells = 0;
};

struct MeanFieldTrace {
    std::vector<double> times;
    std::vector<double> mean_v;
    std::vector<double> psi;
    std::vector<double> mass;
};

struct AdaptiveOptions {
    double eps = 1e-4;      ///< acceptance tolerance of the indicator
    double dt_init = 1e-3;
    double dt_min = 1e-10;
    double growth_cap = 2.0;     ///< max step growth per update
    bool keep_log = true;
    std::vector<double> snapshot_times; ///< sorted; snapshot at first accepted t >= each
    SolverOptions solver;
};

struct AdvanceResult {
    Density density;
    MeanFieldTrace trace;
    std::vector<StepLogRow> log;
    std::vector<Density> snapshots;
    double dt_final = 0.0;  ///< controller state, reusable to continue a run
    std::size_t accepted_steps = 0;
    std::size_t rejected_steps = 0;
};

/// Acceptance test of the controller: strictly below the tolerance.
inline bool step_accepted(double e, double eps) { return e < eps; }

/// Step update factor 0.9*sqrt(eps/e), growth-capped, applied whether or not
/// the step was accepted; e = 0 is treated as eps/4.
inline double step_update_factor(double e, double eps, double growth_cap) {
    double e_eff = (e > 0.0) ? e : eps / 4.0;
    return std::min(0.9 * std::sqrt(eps / e_eff), growth_cap);
}

/// Step-size controller: each attempt performs two half-size splitting steps;
/// the indicator e = dv*dw*sum |(mu_half - mu_full) * v_i| compares the state
/// after one half step with the state after both. The step is accepted iff
/// e < eps, and in either case dt <- 0.9*sqrt(eps/e)*dt with growth capped
/// and e = 0 treated as eps/4. The drift field is refrozen from the input of
/// each half step.
inline AdvanceResult adaptive_advance(const ModelParams& p, const Grid2D& g, Density d,
                                      double T, const AdaptiveOptions& opt = {}) {
    if (!(T > 0.0)) throw config_error("adaptive_advance: T must be > 0");
    if (!(opt.eps > 0.0) || !(opt.dt_init > 0.0))
        throw config_error("adaptive_advance: eps and dt_init must be > 0");

    AdvanceResult res;
    const double t_end = d.t + T;
    double dt = opt.dt_init;
    std::size_t next_snapshot = 0;

    auto record_trace = [&](const Density& state, double psi_now) {
        DensityStats s = statistics(g, p, state);
        res.trace.times.push_back(state.t);
        res.trace.mean_v.push_back(s.mean_v);
        res.trace.psi.push_back(psi_now >= 0.0 ? psi_now : s.firing_rate);
        res.trace.mass.push_back(s.mass);
        while (next_snapshot < opt.snapshot_times.size() &&
               state.t >= opt.snapshot_times[next_snapshot] - 1e-12) {
            res.snapshots.push_back(state);
            ++next_snapshot;
        }
    };
    record_trace(d, -1.0);

    while (d.t < t_end - 1e-12 * std::max(1.0, std::abs(t_end))) {
        double h = std::min(dt, t_end - d.t);
        StrangDiagnostics d1, d2;
        Density half = strang_step(p, g, d, 0.5 * h, &d1, opt.solver);
        Density full = strang_step(p, g, half, 0.5 * h, &d2, opt.solver);

        kahan_sum err;
        for (int j = 0; j < g.n_w; ++j)
            for (int i = 0; i < g.n_v; ++i) {
                std::size_t k = g.idx(i, j);
                err.add(std::abs((half.mu[k] - full.mu[k]) * g.v_at(i)));
            }
        double e = err.value() * g.cell_area();

        bool accept = step_accepted(e, opt.eps);
        if (opt.keep_log) {
            StepLogRow row;
            row.t = d.t;
            row.dt = h;
            row.e = e;
            row.accepted = accept;
            DensityStats s = statistics(g, p, full);
            row.mass = s.mass;
            row.mean_v = s.mean_v;
            row.psi = d1.psi;
            row.min_mu = std::min(d1.min_before_clamp, d2.min_before_clamp);
            row.clamped_cells = d1.clamped_cells + d2.clamped_cells;
            res.log.push_back(row);
        }
        if (accept) {
            d = std::move(full);
            ++res.accepted_steps;
            record_trace(d, d2.psi);
        } else {
            ++res.rejected_steps;
        }

        dt = step_update_factor(e, opt.eps, opt.growth_cap) * h;
        if (dt < opt.dt_min) {
            std::string tail;
            std::size_t from = res.log.size() > 6 ? res.log.size() - 6 : 0;
            for (std::size_t k = from; k < res.log.size(); ++k)
                tail += " (t=" + std::to_string(res.log[k].t) +
                        ", dt=" + std::to_string(res.log[k].dt) +
                        ", e=" + std::to_string(res.log[k].e) + ")";
            throw numerical_error("adaptive_advance: time step underflow at t = " +
                                  std::to_string(d.t) + "; last attempts:" + tail);
        }
    }
    res.density = std::move(d);
    res.dt_final = dt;
    return res;
}

} // namespace snn
