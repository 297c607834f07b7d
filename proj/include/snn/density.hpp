#pragma once

#include <cmath>
#include <vector>

#include "snn/errors.hpp"
#include "snn/grid.hpp"
#include "snn/initial.hpp"
#include "snn/model.hpp"
#include "snn/numeric.hpp"

namespace snn {

/// Cell-averaged density on a Grid2D, flattened with the v index fastest
/// (mu[j*n_v + i]), plus the simulation time it represents.
struct Density {
    std::vector<double> mu;
    double t = 0.0;
};

inline double mass(const Grid2D& g, const Density& d) {
    return compensated_sum(d.mu) * g.cell_area();
}

/// Project the initial law onto the grid: midpoint values, then one global
/// rescale so the discrete mass is exactly 1. Requires at least 99.9% of the
/// law's mass inside the cell-covered region.
inline Density discretize_initial(const InitialCondition& ic, const Grid2D& g) {
    double covered = ic.mass_in_box(g.v_min - 0.5 * g.dv, g.v_max + 0.5 * g.dv,
                                    g.w_min - 0.5 * g.dw, g.w_max + 0.5 * g.dw);
    if (covered < 0.999)
        throw config_error("discretize_initial: only " + std::to_string(covered) +
                           " of the initial mass lies inside the domain; enlarge the box");

    Density d;
    d.mu.assign(g.cells(), 0.0);
    if (ic.kind == InitialCondition::Kind::point_mass) {
        int i = static_cast<int>(std::lround((ic.mu1 - g.v_min) / g.dv));
        int j = static_cast<int>(std::lround((ic.mu2 - g.w_min) / g.dw));
        i = std::min(std::max(i, 0), g.n_v - 1);
        j = std::min(std::max(j, 0), g.n_w - 1);
        d.mu[g.idx(i, j)] = 1.0 / g.cell_area();
        return d;
    }
    for (int j = 0; j < g.n_w; ++j)
        for (int i = 0; i < g.n_v; ++i) d.mu[g.idx(i, j)] = ic.density(g.v_at(i), g.w_at(j));
    double m = mass(g, d);
    if (!(m > 0.0)) throw config_error("discretize_initial: degenerate discretised mass");
    for (double& x : d.mu) x /= m;
    return d;
}

/// Observables of a density: mean potential, population rate, mass, the
/// w-marginal, and the jump-arrival marginal. The latter is the w-density of
/// states entered by a jump (rate-weighted density shifted up by the jump),
/// normalised to unit integral; it is the continuum analogue of the embedded
/// jump chain's stationary w-histogram.
struct DensityStats {
    double mean_v = 0.0;
    double firing_rate = 0.0;
    double mass = 0.0;
    std::vector<double> w_marginal;
    std::vector<double> jump_marginal;
};

inline DensityStats statistics(const Grid2D& g, const ModelParams& p, const Density& d) {
    DensityStats s;
    kahan_sum sv, sr, sm;
    std::vector<double> rate(g.n_v);
    for (int i = 0; i < g.n_v; ++i) rate[i] = p.rate(g.v_at(i));

    s.w_marginal.assign(g.n_w, 0.0);
    std::vector<double> jump_source(g.n_w, 0.0); // per-row rate-weighted density
    for (int j = 0; j < g.n_w; ++j) {
        kahan_sum row, row_rate;
        for (int i = 0; i < g.n_v; ++i) {
            double m = d.mu[g.idx(i, j)];
            row.add(m);
            row_rate.add(rate[i] * m);
            sv.add(g.v_at(i) * m);
        }
        s.w_marginal[j] = row.value() * g.dv;
        jump_source[j] = row_rate.value() * g.dv;
        sm.add(row.value());
        sr.add(row_rate.value());
    }
    s.mass = sm.value() * g.cell_area();
    s.mean_v = sv.value() * g.cell_area();
    s.firing_rate = sr.value() * g.cell_area();

    s.jump_marginal.assign(g.n_w, 0.0);
    kahan_sum total;
    for (int j = 0; j < g.n_w; ++j) {
        if (j >= g.j_shift) s.jump_marginal[j] = jump_source[j - g.j_shift];
        total.add(s.jump_marginal[j]);
    }
    double z = total.value() * g.dw;
    if (z > 0.0)
        for (double& x : s.jump_marginal) x /= z;
    return s;
}

} // namespace snn
