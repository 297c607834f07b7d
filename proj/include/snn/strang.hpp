#pragma once

#include "snn/density.hpp"
#include "snn/errors.hpp"
#include "snn/grid.hpp"
#include "snn/jump.hpp"
#include "snn/model.hpp"
#include "snn/transport.hpp"

namespace snn {

struct StrangDiagnostics {
    double psi = 0.0;               ///< population rate of the frozen field
    double min_before_clamp = 0.0;  ///< most negative solver output
    std::size_t clamped_cells = 0;
    std::size_t solver_iterations = 0;
};

/// One symmetric splitting step of size dt: half jump, implicit upwind
/// transport over the full dt with the drift field frozen from the input
/// density, half jump. Advances the density's time stamp by dt.
inline Density strang_step(const ModelParams& p, const Grid2D& g, const Density& d,
                           double dt, StrangDiagnostics* diag = nullptr,
                           const SolverOptions& solver = {}) {
    if (!(dt > 0.0)) throw config_error("strang_step: dt must be > 0");
    DriftField field = compute_drift_field(p, g, d);
    Density stage = jump_apply(g, p, d, 0.5 * dt);
    TransportOperator a = assemble_transport(g, field, dt);
    SolveInfo info;
    stage = transport_solve(a, stage, &info, solver);
    stage = jump_apply(g, p, stage, 0.5 * dt);
    stage.t = d.t + dt;
    if (diag) {
        diag->psi = field.psi;
        diag->min_before_clamp = info.min_before_clamp;
        diag->clamped_cells = info.clamped_cells;
        diag->solver_iterations = info.iterations;
    }
    return stage;
}

} // namespace snn
