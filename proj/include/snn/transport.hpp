#pragma once

#include <algorithm>
#include <cmath>
#include <limits>
#include <span>
#include <string>
#include <vector>

#include "snn/density.hpp"
#include "snn/errors.hpp"
#include "snn/grid.hpp"
#include "snn/model.hpp"
#include "snn/numeric.hpp"

namespace snn {

/// Cell-centred drift field frozen from one density: V couples to the density
/// through the population rate psi, W is local. Rebuilt at the start of each
/// transport solve, never mid-solve.
struct DriftField {
    std::vector<double> V;
    std::vector<double> W;
    double psi = 0.0;
};

inline DriftField compute_drift_field(const ModelParams& p, const Grid2D& g,
                                      const Density& d) {
    DriftField f;
    kahan_sum sr;
    for (int j = 0; j < g.n_w; ++j)
        for (int i = 0; i < g.n_v; ++i) sr.add(p.rate(g.v_at(i)) * d.mu[g.idx(i, j)]);
    f.psi = sr.value() * g.cell_area();

    f.V.resize(g.cells());
    f.W.resize(g.cells());
    for (int j = 0; j < g.n_w; ++j) {
        double wj = g.w_at(j);
        for (int i = 0; i < g.n_v; ++i) {
            double vi = g.v_at(i);
            f.V[g.idx(i, j)] = p.nonlinearity(vi) - wj + p.I + p.J * f.psi;
            f.W[g.idx(i, j)] = (p.b * vi - wj) / p.tau_w;
        }
    }
    return f;
}

/// The semi-implicit transport matrix A = I + dt*D with D the upwind discrete
/// divergence. Face velocities are arithmetic means of the neighbouring cell
/// values; all four boundary faces carry zero flux, which is what makes every
/// column of A sum to exactly 1 (discrete conservation). Five bands: the
/// diagonal, +-1 (v neighbours) and +-n_v (w neighbours).
struct TransportOperator {
    int n_v = 0, n_w = 0;
    double dt = 0.0;
    double dv = 0.0, dw = 0.0;
    // Row-wise coefficients: row k couples to k-1 (west), k+1 (east),
    // k-n_v (south), k+n_v (north). Entries outside the grid are zero.
    std::vector<double> diag, west, east, south, north;

    std::size_t size() const { return diag.size(); }
    std::size_t idx(int i, int j) const { return static_cast<std::size_t>(j) * n_v + i; }

    void apply(std::span<const double> x, std::span<double> y) const {
        const int nv = n_v, nw = n_w;
        for (int j = 0; j < nw; ++j) {
            for (int i = 0; i < nv; ++i) {
                std::size_t k = idx(i, j);
                double acc = diag[k] * x[k];
                if (i > 0) acc += west[k] * x[k - 1];
                if (i < nv - 1) acc += east[k] * x[k + 1];
                if (j > 0) acc += south[k] * x[k - nv];
                if (j < nw - 1) acc += north[k] * x[k + nv];
                y[k] = acc;
            }
        }
    }

    /// Dense copy, for the direct-solve oracle and structural tests.
    std::vector<double> to_dense() const {
        std::size_t n = size();
        if (n > 64 * 64)
            throw config_error("TransportOperator::to_dense: grid too large");
        std::vector<double> a(n * n, 0.0);
        for (int j = 0; j < n_w; ++j)
            for (int i = 0; i < n_v; ++i) {
                std::size_t k = idx(i, j);
                a[k * n + k] = diag[k];
                if (i > 0) a[k * n + (k - 1)] = west[k];
                if (i < n_v - 1) a[k * n + (k + 1)] = east[k];
                if (j > 0) a[k * n + (k - n_v)] = south[k];
                if (j < n_w - 1) a[k * n + (k + n_v)] = north[k];
            }
        return a;
    }
};

inline TransportOperator assemble_transport(const Grid2D& g, const DriftField& f,
                                            double dt) {
    if (!(dt > 0.0)) throw config_error("assemble_transport: dt must be > 0");
    TransportOperator a;
    a.n_v = g.n_v;
    a.n_w = g.n_w;
    a.dt = dt;
    a.dv = g.dv;
    a.dw = g.dw;
    a.diag.assign(g.cells(), 1.0);
    a.west.assign(g.cells(), 0.0);
    a.east.assign(g.cells(), 0.0);
    a.south.assign(g.cells(), 0.0);
    a.north.assign(g.cells(), 0.0);

    const double cv = dt / g.dv;
    const double cw = dt / g.dw;
    // Interior v faces (i+1/2, j): upwind flux between cells (i,j) and (i+1,j).
    for (int j = 0; j < g.n_w; ++j) {
        for (int i = 0; i + 1 < g.n_v; ++i) {
            std::size_t k = g.idx(i, j);
            double vf = 0.5 * (f.V[k] + f.V[k + 1]);
            double up = std::max(vf, 0.0);   // takes the left cell's value
            double down = std::min(vf, 0.0); // takes the right cell's value
            a.diag[k] += cv * up;
            a.east[k] += cv * down;
            a.diag[k + 1] -= cv * down;
            a.west[k + 1] -= cv * up;
        }
    }
    // Interior w faces (i, j+1/2).
    for (int j = 0; j + 1 < g.n_w; ++j) {
        for (int i = 0; i < g.n_v; ++i) {
            std::size_t k = g.idx(i, j);
            std::size_t kn = k + g.n_v;
            double wf = 0.5 * (f.W[k] + f.W[kn]);
            double up = std::max(wf, 0.0);
            double down = std::min(wf, 0.0);
            a.diag[k] += cw * up;
            a.north[k] += cw * down;
            a.diag[kn] -= cw * down;
            a.south[kn] -= cw * up;
        }
    }
    return a;
}

struct SolveInfo {
    std::size_t iterations = 0;
    double residual = 0.0;          ///< final relative l1 residual
    double min_before_clamp = 0.0;  ///< most negative entry the solver produced
    std::size_t clamped_cells = 0;  ///< entries in [-clamp_tol, 0) zeroed
};

struct SolverOptions {
    double rel_tol = 3e-14;      ///< target relative l1 residual (contract: <= 1e-11)
    double clamp_tol = 1e-12;    ///< entries below -clamp_tol are a scheme violation
    std::size_t max_iter = 100000;
};

namespace detail {

/// ILU(0) on the 5-band layout: same sparsity, lower factors stored in
/// lw/ls, upper kept in ue/un with pivots in ud.
struct Ilu0 {
    int n_v = 0;
    std::vector<double> lw, ls, ud, ue, un;

    explicit Ilu0(const TransportOperator& a)
        : n_v(a.n_v), lw(a.size()), ls(a.size()), ud(a.diag), ue(a.east), un(a.north) {
        const std::size_t n = a.size();
        for (std::size_t k = 0; k < n; ++k) {
            if (k >= 1 && a.west[k] != 0.0) {
                double m = a.west[k] / ud[k - 1];
                lw[k] = m;
                ud[k] -= m * ue[k - 1];
                // fill at (k, k-1+n_v) is outside the pattern: dropped
            } else {
                lw[k] = 0.0;
            }
            if (k >= static_cast<std::size_t>(n_v) && a.south[k] != 0.0) {
                double m = a.south[k] / ud[k - n_v];
                ls[k] = m;
                ud[k] -= m * un[k - n_v];
            } else {
                ls[k] = 0.0;
            }
        }
    }

    void solve(std::span<const double> r, std::span<double> z) const {
        const std::size_t n = r.size();
        for (std::size_t k = 0; k < n; ++k) {
            double acc = r[k];
            if (k >= 1) acc -= lw[k] * z[k - 1];
            if (k >= static_cast<std::size_t>(n_v)) acc -= ls[k] * z[k - n_v];
            z[k] = acc;
        }
        for (std::size_t k = n; k-- > 0;) {
            double acc = z[k];
            if (k + 1 < n) acc -= ue[k] * z[k + 1];
            if (k + n_v < n) acc -= un[k] * z[k + n_v];
            z[k] = acc / ud[k];
        }
    }
};

inline double dot(std::span<const double> a, std::span<const double> b) {
    double s = 0.0;
    for (std::size_t i = 0; i < a.size(); ++i) s += a[i] * b[i];
    return s;
}

/// Preconditioned BiCGSTAB advancing x towards A x = b until the recurrence
/// residual drops below tol*||b||_1 or the iteration budget is exhausted.
/// Returns the number of iterations spent.
inline std::size_t bicgstab(const TransportOperator& a, const Ilu0& precond,
                            std::span<const double> b, std::vector<double>& x,
                            double tol, std::size_t max_iter, double b_norm,
                            std::vector<double>& residual_history) {
    const std::size_t n = b.size();
    std::vector<double> r(n), rhat(n), p(n, 0.0), v(n, 0.0), phat(n), shat(n), t_vec(n);
    a.apply(x, r);
    for (std::size_t k = 0; k < n; ++k) r[k] = b[k] - r[k];
    rhat = r;
    double rho = 1.0, alpha = 1.0, omega = 1.0;
    double rel = l1_norm(r) / b_norm;
    std::size_t it = 0;
    double best_rel = rel;
    std::size_t last_improvement = 0;
    while (rel > tol && it < max_iter) {
        // Near the rounding floor the recurrence stops improving; bail out
        // instead of burning the whole budget.
        if (rel < 0.5 * best_rel) {
            best_rel = rel;
            last_improvement = it;
        } else if (it > last_improvement + 50) {
            break;
        }
        double rho_new = dot(rhat, r);
        if (rho_new == 0.0) { // breakdown: restart against the current residual
            rhat = r;
            rho_new = dot(rhat, r);
            if (rho_new == 0.0) break;
            std::fill(p.begin(), p.end(), 0.0);
            std::fill(v.begin(), v.end(), 0.0);
            alpha = omega = 1.0;
            rho = rho_new;
        }
        double beta = (it == 0) ? 0.0 : (rho_new / rho) * (alpha / omega);
        for (std::size_t k = 0; k < n; ++k) p[k] = r[k] + beta * (p[k] - omega * v[k]);
        precond.solve(p, phat);
        a.apply(phat, v);
        double rv = dot(rhat, v);
        if (rv == 0.0) break;
        alpha = rho_new / rv;
        for (std::size_t k = 0; k < n; ++k) r[k] -= alpha * v[k]; // s lives in r
        if (l1_norm(r) / b_norm <= tol) {
            for (std::size_t k = 0; k < n; ++k) x[k] += alpha * phat[k];
            ++it;
            rel = l1_norm(r) / b_norm;
            residual_history.push_back(rel);
            break;
        }
        precond.solve(r, shat);
        a.apply(shat, t_vec);
        double tt = dot(t_vec, t_vec);
        if (tt == 0.0) break;
        omega = dot(t_vec, r) / tt;
        for (std::size_t k = 0; k < n; ++k) {
            x[k] += alpha * phat[k] + omega * shat[k];
            r[k] -= omega * t_vec[k];
        }
        rho = rho_new;
        ++it;
        rel = l1_norm(r) / b_norm;
        residual_history.push_back(rel);
        if (omega == 0.0 || !std::isfinite(rel)) break;
    }
    return it;
}

} // namespace detail

/// Solve A mu' = mu. The exact solution is nonnegative and mass-preserving
/// (strict column dominance of A with unit column sums); the iterative solver
/// is ILU(0)-preconditioned BiCGSTAB, run well below the contract tolerance so
/// that solver noise stays under the clamp threshold. Small negative residue
/// in [-clamp_tol, 0) is zeroed and the mass rescaled; anything below
/// -clamp_tol means the scheme itself was violated and raises an error.
inline Density transport_solve(const TransportOperator& a, const Density& d,
                               SolveInfo* info = nullptr, const SolverOptions& opt = {}) {
    const std::size_t n = a.size();
    if (d.mu.size() != n) throw config_error("transport_solve: density/operator mismatch");

    const double b_norm = l1_norm(d.mu);
    Density out;
    out.t = d.t;
    out.mu = d.mu; // initial guess: A is I + dt D, so b itself is close for small dt
    if (b_norm == 0.0) {
        if (info) *info = {};
        return out;
    }

    detail::Ilu0 precond(a);
    std::vector<double> residual_history;
    std::size_t it = 0;

    auto true_residual = [&]() {
        std::vector<double> tmp(n);
        a.apply(out.mu, tmp);
        kahan_sum s;
        for (std::size_t k = 0; k < n; ++k) s.add(std::abs(d.mu[k] - tmp[k]));
        return s.value() / b_norm;
    };

    // The recurrence residual inside BiCGSTAB can drift from the true one;
    // certify against the true residual and restart cleanly while it helps.
    double true_rel = 0.0;
    double prev_rel = std::numeric_limits<double>::infinity();
    for (int attempt = 0; attempt < 6; ++attempt) {
        it += detail::bicgstab(a, precond, d.mu, out.mu, opt.rel_tol,
                               opt.max_iter - it, b_norm, residual_history);
        true_rel = true_residual();
        if (true_rel <= opt.rel_tol || it >= opt.max_iter) break;
        if (true_rel > 0.5 * prev_rel) break; // at the rounding floor
        prev_rel = true_rel;
    }

    if (!(true_rel <= 1e-11)) { // contract tolerance; NaN must also fail
        std::string hist;
        std::size_t from = residual_history.size() > 8 ? residual_history.size() - 8 : 0;
        for (std::size_t k = from; k < residual_history.size(); ++k)
            hist += " " + std::to_string(residual_history[k]);
        throw numerical_error("transport_solve: no convergence after " +
                              std::to_string(it) + " iterations; relative residual " +
                              std::to_string(true_rel) + "; history:" + hist);
    }

    double min_val = 0.0;
    for (double x : out.mu) min_val = std::min(min_val, x);
    std::size_t clamped = 0;
    if (min_val < 0.0) {
        if (min_val < -opt.clamp_tol)
            throw numerical_error(
                "transport_solve: negative density " + std::to_string(min_val) +
                " below the clamp tolerance; the positivity of the scheme was violated");
        double mass_before = compensated_sum(out.mu);
        for (double& x : out.mu)
            if (x < 0.0) {
                x = 0.0;
                ++clamped;
            }
        double mass_after = compensated_sum(out.mu);
        if (mass_after > 0.0) {
            double scale = mass_before / mass_after;
            for (double& x : out.mu) x *= scale;
        }
    }
    if (info) {
        info->iterations = it;
        info->residual = true_rel;
        info->min_before_clamp = min_val;
        info->clamped_cells = clamped;
    }
    return out;
}

/// Direct dense LU solve with partial pivoting; the independent oracle for
/// the iterative path on grids up to 64 x 64.
inline Density dense_solve(const TransportOperator& a, const Density& d) {
    const std::size_t n = a.size();
    std::vector<double> m = a.to_dense();
    std::vector<double> x = d.mu;
    std::vector<std::size_t> perm(n);
    for (std::size_t i = 0; i < n; ++i) perm[i] = i;
    for (std::size_t col = 0; col < n; ++col) {
        std::size_t piv = col;
        double best = std::abs(m[perm[col] * n + col]);
        for (std::size_t r2 = col + 1; r2 < n; ++r2) {
            double cand = std::abs(m[perm[r2] * n + col]);
            if (cand > best) {
                best = cand;
                piv = r2;
            }
        }
        if (best == 0.0) throw numerical_error("dense_solve: singular matrix");
        std::swap(perm[col], perm[piv]);
        double pivot = m[perm[col] * n + col];
        for (std::size_t r2 = col + 1; r2 < n; ++r2) {
            double f = m[perm[r2] * n + col] / pivot;
            if (f == 0.0) continue;
            m[perm[r2] * n + col] = f;
            for (std::size_t c2 = col + 1; c2 < n; ++c2)
                m[perm[r2] * n + c2] -= f * m[perm[col] * n + c2];
        }
    }
    std::vector<double> y(n);
    for (std::size_t r2 = 0; r2 < n; ++r2) {
        double acc = x[perm[r2]];
        for (std::size_t c2 = 0; c2 < r2; ++c2) acc -= m[perm[r2] * n + c2] * y[c2];
        y[r2] = acc;
    }
    Density out;
    out.t = d.t;
    out.mu.assign(n, 0.0);
    for (std::size_t r2 = n; r2-- > 0;) {
        double acc = y[r2];
        for (std::size_t c2 = r2 + 1; c2 < n; ++c2)
            acc -= m[perm[r2] * n + c2] * out.mu[c2];
        out.mu[r2] = acc / m[perm[r2] * n + r2];
    }
    return out;
}

} // namespace snn
