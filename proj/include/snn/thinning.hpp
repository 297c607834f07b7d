#pragma once

#include <algorithm>
#include <cmath>
#include <cstdint>
#include <string>
#include <vector>

#include "snn/errors.hpp"
#include "snn/model.hpp"
#include "snn/ode.hpp"
#include "snn/rng.hpp"

namespace snn {

/// Tuning knobs of the exact thinning simulator.
struct ThinningOptions {
    double lookahead_factor = 0.1; ///< proposal window = factor * tau_w
    double v_window = 1.0;         ///< windows also end after this rise in v
    double v_abort = 500.0;        ///< hard ceiling: beyond this the rate bound failed
    double ceil_pad = 1e-4;        ///< safety margin added to the observed max of v
    std::size_t max_rejects = 100000;
    OdeOptions ode{1e-10, 1e-12, 1e-3, 1e-14, 2'000'000};
};

/// One spike of the embedded chain: absolute jump time and the adaptation
/// value right after the jump (i.e. w(t-) + w_jump).
struct JumpRecord {
    double t = 0.0;
    double w = 0.0;
};

/// Statistically exact simulation of one isolated neuron (coupling plays no
/// role; the population rate term is zero) by thinning: between jumps the flow
/// is integrated with an adaptive Dormand-Prince scheme; candidate jump times
/// are proposed from a local majorant of lambda along the trajectory over a
/// lookahead window and accepted with probability lambda(v)/majorant.
///
/// The majorant uses the monotonicity of lambda: on each window the maximum of
/// v along a trial integration bounds the rate. A window ends either after the
/// lookahead time or where v has risen by v_window, whichever comes first, so
/// the bound never exceeds lambda(v + v_window) and explosive flight segments
/// degenerate into short windows with dense, high-acceptance proposals.
inline std::vector<JumpRecord> simulate_isolated_exact(const ModelParams& p, double v0,
                                                       double w0, std::size_t n_jumps,
                                                       std::uint64_t seed,
                                                       const ThinningOptions& opt = {}) {
    p.validate();
    if (!(opt.lookahead_factor > 0.0))
        throw config_error("simulate_isolated_exact: lookahead_factor must be > 0");

    auto flow = [&](double, const Vec2& y) -> Vec2 {
        DriftValue d = drift(p, y[0], y[1], 0.0);
        return {d.dv, d.dw};
    };

    rng_stream rng(seed, rng_use::thinning, 0);
    std::uint64_t draw = 0;

    std::vector<JumpRecord> chain;
    chain.reserve(n_jumps);
    Vec2 y{v0, w0};
    double t = 0.0;
    std::size_t rejects_in_a_row = 0;

    while (chain.size() < n_jumps) {
        if (y[0] >= opt.v_abort)
            throw numerical_error(
                "simulate_isolated_exact: flow escaped beyond v = " +
                std::to_string(opt.v_abort) +
                " without a jump; reduce lookahead_factor or v_window");

        // Trial integration fixes the proposal window and the rate majorant.
        const double lookahead = opt.lookahead_factor * p.tau_w;
        const double v_stop = y[0] + opt.v_window;
        OdeOptions ode = opt.ode;
        ode.h_init = std::min(ode.h_init, lookahead / 8.0);
        double v_ceil = y[0];
        double window = lookahead;
        integrate_ode(flow, y, t, lookahead, ode,
                      [&](double tt, const Vec2& yy, double) {
                          v_ceil = std::max(v_ceil, yy[0]);
                          if (yy[0] >= v_stop) {
                              window = tt - t;
                              return false;
                          }
                          return true;
                      });
        const double rate_bound = p.rate(v_ceil + opt.ceil_pad);

        // Propose candidate jumps inside the window.
        double remaining = window;
        bool jumped = false;
        while (true) {
            double tau = rng.exponential(draw++, rate_bound);
            if (tau >= remaining) {
                y = integrate_ode(flow, y, t, remaining, ode);
                t += remaining;
                break; // window exhausted, rebuild the bound
            }
            y = integrate_ode(flow, y, t, tau, ode);
            t += tau;
            remaining -= tau;
            double u = rng.uniform(draw++);
            if (u * rate_bound <= p.rate(y[0])) {
                double w_post = y[1] + p.w_jump;
                chain.push_back({t, w_post});
                y = {p.v_reset, w_post};
                rejects_in_a_row = 0;
                jumped = true;
                break;
            }
            if (++rejects_in_a_row > opt.max_rejects)
                throw numerical_error(
                    "simulate_isolated_exact: rejection cap exceeded (rate bound " +
                    std::to_string(rate_bound) + ")");
        }
        (void)jumped;
    }
    return chain;
}

/// Mean interval between successive jumps of a chain started at t = 0.
inline double mean_interjump_time(const std::vector<JumpRecord>& chain) {
    if (chain.empty()) throw config_error("mean_interjump_time: empty chain");
    return chain.back().t / static_cast<double>(chain.size());
}

} // namespace snn
