#pragma once

#include <cmath>
#include <cstddef>
#include <string>
#include <vector>

#include "snn/errors.hpp"
#include "snn/model.hpp"

namespace snn {

struct GridBounds {
    double v_min = 0.0, v_max = 0.0;
    double w_min = 0.0, w_max = 0.0;
};

/// Regular node-centred grid on [v_min,v_max] x [w_min,w_max]: nodes
/// v_i = v_min + i*dv (i = 0..n_v-1, v_max = last node), cells of size dv*dw
/// centred on the nodes. i_reset is the column receiving reset mass; j_shift
/// is the jump translation in whole cells, so dw must divide w_jump.
struct Grid2D {
    double v_min = 0.0, v_max = 0.0, w_min = 0.0, w_max = 0.0;
    int n_v = 0, n_w = 0;
    double dv = 0.0, dw = 0.0;
    int i_reset = 0;
    int j_shift = 0;

    double v_at(int i) const { return v_min + i * dv; }
    double w_at(int j) const { return w_min + j * dw; }
    std::size_t cells() const { return static_cast<std::size_t>(n_v) * n_w; }
    std::size_t idx(int i, int j) const { return static_cast<std::size_t>(j) * n_v + i; }
    double cell_area() const { return dv * dw; }
};

/// Build and validate a grid for the given model. Geometric violations are
/// hard errors; the drift-direction conditions at the box edges (fields
/// pointing inward at the left/bottom/top, outward at the right, and downward
/// at the accumulation corner) are heuristic because the coupling term is not
/// known in advance, so failures are reported as warnings evaluated at
/// psi = 0.
inline Grid2D build_grid(const ModelParams& p, const GridBounds& b, int n_v, int n_w,
                         std::vector<std::string>* warnings = nullptr) {
    p.validate();
    if (n_v < 2 || n_w < 2) throw config_error("build_grid: need N_v, N_w >= 2");
    if (!(b.v_min < b.v_max) || !(b.w_min < b.w_max))
        throw config_error("build_grid: bounds must satisfy v_min < v_max, w_min < w_max");
    if (!(b.v_min < p.v_reset && p.v_reset < b.v_max))
        throw config_error("build_grid: v_reset must lie strictly inside (v_min, v_max)");
    if (!(p.w_jump < b.w_max - b.w_min))
        throw config_error("build_grid: w_jump must be smaller than the w extent");

    Grid2D g;
    g.v_min = b.v_min;
    g.v_max = b.v_max;
    g.w_min = b.w_min;
    g.w_max = b.w_max;
    g.n_v = n_v;
    g.n_w = n_w;
    g.dv = (b.v_max - b.v_min) / (n_v - 1);
    g.dw = (b.w_max - b.w_min) / (n_w - 1);
    g.i_reset = static_cast<int>(std::floor((p.v_reset - b.v_min) / g.dv));
    if (g.i_reset >= n_v) g.i_reset = n_v - 1;

    double shift = p.w_jump / g.dw;
    g.j_shift = static_cast<int>(std::lround(shift));
    if (std::abs(shift - g.j_shift) > 1e-9 * std::max(1.0, shift))
        throw config_error("build_grid: w_jump/dw = " + std::to_string(shift) +
                           " is not an integer; choose N_w and w bounds so the jump "
                           "shift is a whole number of cells");
    if (g.j_shift < 1)
        throw config_error("build_grid: jump shift smaller than one cell; refine dw");

    if (warnings) {
        auto warn = [&](const std::string& msg) { warnings->push_back(msg); };
        double v_mid = 0.5 * (b.v_min + b.v_max);
        double w_mid = 0.5 * (b.w_min + b.w_max);
        if (!(drift(p, b.v_min, w_mid, 0.0).dv > 0.0))
            warn("left edge: drift does not enter the domain at (v_min, w_mid)");
        if (!(drift(p, b.v_max, w_mid, 0.0).dv > 0.0))
            warn("right edge: drift is not explosive (outward) at (v_max, w_mid)");
        if (!(drift(p, v_mid, b.w_min, 0.0).dw > 0.0))
            warn("bottom edge: drift does not enter the domain at (v_mid, w_min)");
        if (!(drift(p, v_mid, b.w_max, 0.0).dw < 0.0))
            warn("top edge: drift does not enter the domain at (v_mid, w_max)");
        DriftValue corner = drift(p, p.v_reset, b.w_max, 0.0);
        if (!(corner.dv < 0.0 && corner.dw < 0.0))
            warn("accumulation corner (v_reset, w_max) is not above both nullclines; "
                 "mass may pile up there");
    }
    return g;
}

} // namespace snn
