#include <catch2/catch_amalgamated.hpp>

#include <cmath>
#include <vector>

#include "snn/rng.hpp"
#include "snn/transport.hpp"

using namespace snn;

namespace {

ModelParams plain_params() {
    ModelParams p;
    p.nonlinearity = Nonlinearity::izhikevich(0.0);
    p.rate = RateFunction::exp_rate();
    p.tau_w = 1.0;
    p.b = 0.0;
    p.v_reset = 0.05;
    p.w_jump = 0.4;
    return p;
}

Density random_density(const Grid2D& g, std::uint64_t seed) {
    Density d;
    d.mu.resize(g.cells());
    rng_stream r(seed, rng_use::scratch, 0);
    for (std::size_t k = 0; k < d.mu.size(); ++k) d.mu[k] = r.uniform(k);
    double m = mass(g, d);
    for (double& x : d.mu) x /= m;
    return d;
}

DriftField random_field(const Grid2D& g, std::uint64_t seed, double scale) {
    DriftField f;
    f.V.resize(g.cells());
    f.W.resize(g.cells());
    rng_stream r(seed, rng_use::scratch, 1);
    for (std::size_t k = 0; k < g.cells(); ++k) {
        auto [a, b] = r.uniform2(k);
        f.V[k] = scale * (2.0 * a - 1.0);
        f.W[k] = scale * (2.0 * b - 1.0);
    }
    return f;
}

} // namespace

TEST_CASE("drift field: coupling and quadrature") {
    ModelParams p = plain_params();
    Grid2D g = build_grid(p, {-1.0, 1.0, -1.0, 1.0}, 21, 21);

    // J = 0: field independent of the density
    Density a = random_density(g, 1), b = random_density(g, 2);
    DriftField fa = compute_drift_field(p, g, a);
    DriftField fb = compute_drift_field(p, g, b);
    CHECK(fa.V == fb.V);

    // point mass: psi = lambda(v0)
    Density pm = discretize_initial(InitialCondition::point_mass(0.3, 0.2), g);
    DriftField fpm = compute_drift_field(p, g, pm);
    CHECK(fpm.psi == Catch::Approx(std::exp(0.3)).epsilon(1e-9));

    // uniform density, exp rate: psi has the closed geometric-sum form
    Density uni;
    uni.mu.assign(g.cells(), 1.0 / (g.cells() * g.cell_area()));
    DriftField fu = compute_drift_field(p, g, uni);
    double geo = std::exp(g.v_min) * (std::exp(g.n_v * g.dv) - 1.0) /
                 (std::exp(g.dv) - 1.0);
    CHECK(fu.psi == Catch::Approx(geo / g.n_v).epsilon(1e-10));

    // W is exact
    for (int j = 0; j < g.n_w; ++j)
        for (int i = 0; i < g.n_v; ++i)
            CHECK(fu.W[g.idx(i, j)] == (p.b * g.v_at(i) - g.w_at(j)) / p.tau_w);
}

TEST_CASE("uniform advection stencil") {
    ModelParams p = plain_params();
    Grid2D g = build_grid(p, {-1.0, 1.0, -1.0, 1.0}, 11, 11);
    DriftField f;
    f.V.assign(g.cells(), 2.0);
    f.W.assign(g.cells(), 0.0);
    double dt = 0.05;
    TransportOperator a = assemble_transport(g, f, dt);
    int i = 5, j = 5;
    std::size_t k = g.idx(i, j);
    CHECK(a.diag[k] == Catch::Approx(1.0 + dt * 2.0 / g.dv));
    CHECK(a.west[k] == Catch::Approx(-dt * 2.0 / g.dv));
    CHECK(a.east[k] == 0.0);
    CHECK(a.north[k] == 0.0);
    CHECK(a.south[k] == 0.0);
    // left boundary cell: no west coefficient, inflow face is closed
    std::size_t kb = g.idx(0, j);
    CHECK(a.west[kb] == 0.0);
    CHECK(a.diag[kb] == Catch::Approx(1.0 + dt * 2.0 / g.dv));
}

TEST_CASE("zero field gives the identity") {
    ModelParams p = plain_params();
    Grid2D g = build_grid(p, {-1.0, 1.0, -1.0, 1.0}, 11, 11);
    DriftField f;
    f.V.assign(g.cells(), 0.0);
    f.W.assign(g.cells(), 0.0);
    TransportOperator a = assemble_transport(g, f, 0.1);
    Density d = random_density(g, 3);
    Density out = transport_solve(a, d);
    for (std::size_t k = 0; k < d.mu.size(); ++k)
        CHECK(out.mu[k] == Catch::Approx(d.mu[k]).margin(1e-14));
}

TEST_CASE("column sums are exactly one and dominance is strict") {
    ModelParams p = plain_params();
    p.w_jump = 0.5; // one cell on this coarse grid
    Grid2D g = build_grid(p, {-1.0, 1.0, -1.0, 1.0}, 5, 5);
    DriftField f = random_field(g, 17, 3.0);
    double dt = 0.07;
    TransportOperator a = assemble_transport(g, f, dt);
    std::vector<double> dense = a.to_dense();
    std::size_t n = a.size();
    for (std::size_t col = 0; col < n; ++col) {
        double sum = 0.0, offdiag = 0.0;
        for (std::size_t row = 0; row < n; ++row) {
            sum += dense[row * n + col];
            if (row != col) offdiag += std::abs(dense[row * n + col]);
        }
        // null fluxes on every boundary face: nothing leaves, columns sum to 1
        CHECK(sum == Catch::Approx(1.0).margin(1e-13));
        CHECK(dense[col * n + col] - offdiag == Catch::Approx(1.0).margin(1e-13));
        CHECK(dense[col * n + col] >= 1.0);
    }
}

TEST_CASE("operator has exactly the five stated bands") {
    ModelParams p = plain_params();
    p.w_jump = 0.5;
    Grid2D g = build_grid(p, {-1.0, 1.0, -1.0, 1.0}, 7, 5);
    DriftField f = random_field(g, 23, 2.0);
    TransportOperator a = assemble_transport(g, f, 0.03);
    std::vector<double> dense = a.to_dense();
    std::size_t n = a.size();
    for (std::size_t row = 0; row < n; ++row)
        for (std::size_t col = 0; col < n; ++col) {
            long off = static_cast<long>(col) - static_cast<long>(row);
            bool allowed = off == 0 || off == 1 || off == -1 || off == a.n_v ||
                           off == -a.n_v;
            if (!allowed) CHECK(dense[row * n + col] == 0.0);
        }
}

TEST_CASE("iterative solve agrees with the dense oracle") {
    ModelParams p = plain_params();
    Grid2D g = build_grid(p, {-1.0, 1.0, -1.0, 1.0}, 16, 16);
    for (std::uint64_t trial = 0; trial < 5; ++trial) {
        DriftField f = random_field(g, 100 + trial, 4.0);
        TransportOperator a = assemble_transport(g, f, 0.1);
        Density d = random_density(g, 200 + trial);
        SolveInfo info;
        Density it = transport_solve(a, d, &info);
        Density ds = dense_solve(a, d);
        for (std::size_t k = 0; k < d.mu.size(); ++k)
            CHECK(it.mu[k] == Catch::Approx(ds.mu[k]).margin(1e-10));
        CHECK(info.residual <= 1e-11);
    }
}

TEST_CASE("mass is preserved and positivity holds on random problems") {
    ModelParams p = plain_params();
    p.w_jump = 6.0 / 19.0; // three cells of the 20-point grid
    Grid2D g = build_grid(p, {-1.0, 1.0, -1.0, 1.0}, 20, 20);
    for (std::uint64_t trial = 0; trial < 100; ++trial) {
        DriftField f = random_field(g, 300 + trial, 5.0);
        TransportOperator a = assemble_transport(g, f, 0.05);
        Density d = random_density(g, 400 + trial);
        SolveInfo info;
        Density out = transport_solve(a, d, &info);
        CHECK(std::abs(mass(g, out) - mass(g, d)) <= 1e-10 * mass(g, d));
        CHECK(info.min_before_clamp >= -1e-12);
        for (double x : out.mu) CHECK(x >= 0.0);
    }
}

TEST_CASE("point mass advects downwind, never upstream") {
    ModelParams p = plain_params();
    p.w_jump = 0.5;
    p.v_reset = 5.0;
    // thin strip, pure +v advection at speed 2
    Grid2D g = build_grid(p, {0.0, 10.0, -1.0, 1.0}, 201, 5);
    DriftField f;
    f.V.assign(g.cells(), 2.0);
    f.W.assign(g.cells(), 0.0);
    Density d;
    d.mu.assign(g.cells(), 0.0);
    int i0 = 40, j0 = 2;
    d.mu[g.idx(i0, j0)] = 1.0 / g.cell_area();
    double x0 = g.v_at(i0);

    double dt = 0.01; // CFL-resolved: speed*dt = 0.02 < dv = 0.05
    double T = 2.0;
    TransportOperator a = assemble_transport(g, f, dt);
    for (int s = 0; s < static_cast<int>(T / dt); ++s) d = transport_solve(a, d);

    double com = 0.0;
    for (int j = 0; j < g.n_w; ++j)
        for (int i = 0; i < g.n_v; ++i) {
            CHECK(d.mu[g.idx(i, j)] >= 0.0);
            if (i < i0) CHECK(d.mu[g.idx(i, j)] <= 1e-12); // nothing moves upstream
            com += g.v_at(i) * d.mu[g.idx(i, j)] * g.cell_area();
        }
    double speed = (com - x0) / T;
    CHECK(speed == Catch::Approx(2.0).epsilon(0.05));
    CHECK(mass(g, d) == Catch::Approx(1.0).epsilon(1e-9));
}

TEST_CASE("solver failure carries the residual history") {
    TransportOperator a;
    a.n_v = 2;
    a.n_w = 2;
    a.dt = 1.0;
    a.dv = a.dw = 1.0;
    // singular: two identical rows
    a.diag = {1.0, 1.0, 0.0, 1.0};
    a.west = {0.0, 0.0, 0.0, 0.0};
    a.east = {0.0, 0.0, 0.0, 0.0};
    a.south = {0.0, 0.0, 0.0, 0.0};
    a.north = {0.0, 0.0, 1.0, 0.0};
    Density d;
    d.mu = {1.0, 1.0, 1.0, 1.0};
    CHECK_THROWS_AS(transport_solve(a, d), numerical_error);
}
