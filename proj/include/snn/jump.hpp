#pragma once

#include <cmath>
#include <vector>

#include "snn/density.hpp"
#include "snn/errors.hpp"
#include "snn/grid.hpp"
#include "snn/model.hpp"
#include "snn/numeric.hpp"

namespace snn {

/// Conservative one-step jump update over [0, dt]: every cell (i, j) keeps the
/// fraction exp(-lambda(v_i) dt) of its value and the complement is deposited
/// in the reset column at row min(j + j_shift, n_w - 1). Rows of the reset
/// column at or below j_shift receive nothing; the top cell absorbs every
/// jump whose target leaves the domain. Cell-for-cell the booked loss equals
/// the booked gain, so the total is conserved to rounding.
inline Density jump_apply(const Grid2D& g, const ModelParams& p, const Density& d,
                          double dt) {
    if (dt < 0.0) throw config_error("jump_apply: dt must be >= 0");
    Density out;
    out.t = d.t;
    out.mu.resize(g.cells());

    std::vector<double> decay(g.n_v);
    for (int i = 0; i < g.n_v; ++i) decay[i] = std::exp(-p.rate(g.v_at(i)) * dt);

    for (int j = 0; j < g.n_w; ++j)
        for (int i = 0; i < g.n_v; ++i) {
            std::size_t k = g.idx(i, j);
            out.mu[k] = decay[i] * d.mu[k];
        }
    for (int j = 0; j < g.n_w; ++j) {
        int jt = std::min(j + g.j_shift, g.n_w - 1);
        kahan_sum lost;
        for (int i = 0; i < g.n_v; ++i) lost.add((1.0 - decay[i]) * d.mu[g.idx(i, j)]);
        out.mu[g.idx(g.i_reset, jt)] += lost.value();
    }
    return out;
}

} // namespace snn
