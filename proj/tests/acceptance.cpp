// Acceptance suite: one numbered integration criterion per run (or --all).
// Each criterion prints a single [PASS]/[FAIL] line with the measured
// quantities; the process exits nonzero if any selected criterion fails.

#include <algorithm>
#include <cmath>
#include <cstring>
#include <iostream>
#include <string>
#include <vector>

#include "snn/snn.hpp"

using namespace snn;

namespace {

struct Outcome {
    bool pass = false;
    std::string detail;
};

Density random_density(const Grid2D& g, std::uint64_t seed) {
    Density d;
    d.mu.resize(g.cells());
    rng_stream r(seed, rng_use::scratch, 0);
    for (std::size_t k = 0; k < d.mu.size(); ++k) d.mu[k] = r.uniform(k);
    double m = mass(g, d);
    for (double& x : d.mu) x /= m;
    return d;
}

// --------------------------------------------------------------------------
// 1. conservation, positivity and operator structure on random problems
// --------------------------------------------------------------------------
Outcome criterion1() {
    rng_stream r(20260801, rng_use::scratch, 1);
    double worst_mass_drift = 0.0, worst_min = 0.0, worst_slack_dev = 0.0;
    for (std::uint64_t trial = 0; trial < 200; ++trial) {
        auto [u1, u2] = r.uniform2(4 * trial);
        auto [u3, u4] = r.uniform2(4 * trial + 1);
        auto [u5, u6] = r.uniform2(4 * trial + 2);
        auto [u7, u8] = r.uniform2(4 * trial + 3);
        ModelParams p;
        p.nonlinearity = Nonlinearity::izhikevich(2.0 * u1 - 1.0);
        p.rate = RateFunction::shifted_exp(u2, 2.0 * u3 - 1.0);
        p.I = u4 - 0.5;
        p.tau_w = 0.5 + u5;
        p.b = u6;
        p.v_reset = -0.8 + 1.6 * u7;
        const int n = 20;
        Grid2D g;
        {
            double dw = 2.0 / (n - 1);
            int shift = 1 + static_cast<int>(u8 * 10.0);
            p.w_jump = shift * dw;
            g = build_grid(p, {-1.0, 1.0, -1.0, 1.0}, n, n);
        }
        Density d = random_density(g, 1000 + trial);
        double dt = 0.01 + 0.19 * r.uniform(100000 + trial);

        StrangDiagnostics diag;
        Density out = strang_step(p, g, d, dt, &diag);
        worst_mass_drift = std::max(
            worst_mass_drift, std::abs(mass(g, out) - mass(g, d)) / mass(g, d));
        worst_min = std::min(worst_min, diag.min_before_clamp);

        DriftField f = compute_drift_field(p, g, d);
        TransportOperator a = assemble_transport(g, f, dt);
        std::vector<double> dense = a.to_dense();
        std::size_t nn = a.size();
        for (std::size_t col = 0; col < nn; ++col) {
            double offdiag = 0.0;
            bool band_ok = true;
            for (std::size_t row = 0; row < nn; ++row) {
                double x = dense[row * nn + col];
                if (row != col) offdiag += std::abs(x);
                long off = static_cast<long>(col) - static_cast<long>(row);
                bool allowed = off == 0 || off == 1 || off == -1 || off == a.n_v ||
                               off == -a.n_v;
                if (!allowed && x != 0.0) band_ok = false;
            }
            if (!band_ok)
                return {false, "off-band entry in A at trial " + std::to_string(trial)};
            // strict column dominance: with closed boundaries the slack is the
            // identity's 1, in particular wherever the field points outward
            double slack = dense[col * nn + col] - offdiag;
            worst_slack_dev = std::max(worst_slack_dev, std::abs(slack - 1.0));
            if (!(slack > 0.0))
                return {false, "column dominance lost at trial " + std::to_string(trial)};
        }
    }
    bool pass = worst_mass_drift <= 1e-10 && worst_min >= -1e-12 && worst_slack_dev < 1e-10;
    return {pass, "mass drift " + format_double(worst_mass_drift) + " (<=1e-10), min " +
                      format_double(worst_min) + " (>=-1e-12), dominance slack dev " +
                      format_double(worst_slack_dev)};
}

// --------------------------------------------------------------------------
// 2. jump operator exactness
// --------------------------------------------------------------------------
Outcome criterion2() {
    ModelParams p = preset_params("invariant_b");
    Grid2D g = build_grid(p, {-4.0, 4.0, -2.0, 6.0}, 81, 81); // dw = 0.1, shift 15
    double worst_mass = 0.0;
    bool exact = true;
    for (std::uint64_t trial = 0; trial < 50; ++trial) {
        Density d = random_density(g, 7000 + trial);
        double dt = 0.01 + 0.01 * trial;
        Density out = jump_apply(g, p, d, dt);
        for (int j = 0; j < g.n_w && exact; ++j)
            for (int i = 0; i < g.n_v; ++i) {
                if (i == g.i_reset) continue;
                double expected = std::exp(-p.rate(g.v_at(i)) * dt) * d.mu[g.idx(i, j)];
                if (out.mu[g.idx(i, j)] != expected) {
                    exact = false;
                    break;
                }
            }
        worst_mass =
            std::max(worst_mass, std::abs(mass(g, out) - mass(g, d)) / mass(g, d));
    }
    bool pass = exact && worst_mass <= 1e-14;
    return {pass, std::string("non-reset rows ") + (exact ? "exact" : "NOT exact") +
                      ", worst relative mass error " + format_double(worst_mass) +
                      " (<=1e-14)"};
}

// --------------------------------------------------------------------------
// 3. temporal order of the splitting on a smooth bounded-rate problem
// --------------------------------------------------------------------------
Outcome criterion3() {
    // Bounded rate: the exponential term underflows, leaving lambda = 1.
    // Gentle quadratic drift keeps the transport error small so the
    // second-order splitting term dominates over the measured step range.
    ModelParams p;
    p.nonlinearity = Nonlinearity::izhikevich(1.0);
    p.rate = RateFunction::shifted_exp(1.0, 1e6);
    p.I = 0.1;
    p.tau_w = 2.0;
    p.b = 0.4;
    p.v_reset = 0.1;
    p.w_jump = 0.4;
    Grid2D g = build_grid(p, {-1.0, 0.98, -1.0, 0.98}, 100, 100); // dv = dw = 0.02
    Density d0 = discretize_initial(InitialCondition::gaussian(0.35, 0.25, 0.18, 0.18), g);

    const double T = 1.6;
    const double h = 0.4;
    auto advance = [&](double dt) {
        Density d = d0;
        int steps = static_cast<int>(std::lround(T / dt));
        for (int s = 0; s < steps; ++s) d = strang_step(p, g, d, dt);
        return d;
    };
    Density ref = advance(h / 64.0);
    std::vector<double> lx, ly;
    std::string detail = "errors:";
    for (double dt : {h, h / 2.0, h / 4.0}) {
        Density d = advance(dt);
        double err = l1_distance(d.mu, ref.mu) * g.cell_area();
        lx.push_back(std::log(dt));
        ly.push_back(std::log(err));
        detail += " " + format_double(err);
    }
    double slope = fit_line(lx, ly).slope;
    detail += ", observed order " + format_double(slope) + " (>=1.7)";
    return {slope >= 1.7, detail};
}

// --------------------------------------------------------------------------
// 4. Euler network at N=1 against the exact thinning oracle
// --------------------------------------------------------------------------
Outcome criterion4() {
    ModelParams p = preset_params("cv_test");
    auto chain = simulate_isolated_exact(p, -1.3, 2.28, 1000000, 424242);
    double isi_oracle = mean_interjump_time(chain);

    StepOptions opt;
    opt.exclude_self_coupling = true; // a lone neuron gets no population kick
    std::vector<double> lx, ly;
    std::string detail = "oracle ISI " + format_double(isi_oracle) + "; errors:";
    for (double dt : {4e-3, 2e-3, 1e-3}) {
        ParticleState s = init_particles(p, InitialCondition::point_mass(-1.3, 2.28), 1,
                                         555000 + static_cast<std::uint64_t>(1.0 / dt));
        std::size_t spikes = 0;
        const std::size_t wanted = 100000;
        while (spikes < wanted) {
            step(p, s, dt, opt);
            spikes += s.n_spikes_last_step;
        }
        double isi = s.t / static_cast<double>(spikes);
        double err = std::abs(isi - isi_oracle);
        lx.push_back(std::log(dt));
        ly.push_back(std::log(err));
        detail += " " + format_double(err);
    }
    double slope = fit_line(lx, ly).slope;
    detail += ", slope " + format_double(slope) + " (in [0.7,1.3])";
    return {slope >= 0.7 && slope <= 1.3, detail};
}

// --------------------------------------------------------------------------
// 5. convergence of V_N in the network size
// --------------------------------------------------------------------------
Outcome criterion5() {
    ModelParams p = preset_params("cv_test");
    InitialCondition ic = InitialCondition::gaussian(-1.3, 2.28, 1.0, 1.0);
    ConvergenceOptions opt;
    opt.sample_every = 10;
    opt.step.on_rate_overflow = RateOverflow::saturate;
    ConvergenceResult res =
        convergence_experiment(p, ic, {1000, 10000, 100000, 1000000}, 1e-3, 20.0,
                               ConvergenceReference::largest_n, 20260805, opt);
    std::string detail = "errors:";
    for (double e : res.errors) detail += " " + format_double(e);
    detail += ", slope " + format_double(res.slope) + " (in [-1.4,-0.6])";
    return {res.slope >= -1.4 && res.slope <= -0.6, detail};
}

// --------------------------------------------------------------------------
// 6. particle and mean-field agreement on the shared preset
// --------------------------------------------------------------------------
Outcome criterion6() {
    ModelParams p = preset_params("cv_test");
    InitialCondition ic = InitialCondition::gaussian(-1.3, 2.28, 1.0, 1.0);
    PresetGrid pg = preset_grid("cv_test");
    Grid2D g = build_grid(p, pg.bounds, 300, 300);
    CompareOptions opt;
    opt.sample_every = 10;
    opt.step.on_rate_overflow = RateOverflow::saturate;
    opt.adaptive.dt_init = 1e-3;
    CompareResult r =
        compare_particle_meanfield(p, ic, 1000000, g, 1e-3, 1e-4, 20.0, 31415, opt);
    std::string detail = "time-mean gap " + format_double(r.mean_gap) +
                         " (<=0.05), max gap " + format_double(r.max_gap);
    return {r.mean_gap <= 0.05, detail};
}

// --------------------------------------------------------------------------
// 7. propagation of chaos
// --------------------------------------------------------------------------
Outcome criterion7() {
    ModelParams p = preset_params("cv_test");
    InitialCondition ic = InitialCondition::gaussian(-1.3, 2.28, 1.0, 1.0);
    const std::size_t m = 400;
    const double T = 10.0, dt = 2e-3;
    PairCorrelationOptions pco;
    pco.step.on_rate_overflow = RateOverflow::saturate;

    PairCorrelationResult small =
        pair_correlation_experiment(p, ic, 1000, m, T, dt, 11111, pco);
    PairCorrelationResult large =
        pair_correlation_experiment(p, ic, 100000, m, T, dt, 22222, pco);

    ModelParams p0 = p;
    p0.J = 0.0;
    PairCorrelationResult indep =
        pair_correlation_experiment(p0, ic, 1000, m, T, dt, 33333, pco);

    double bound = 3.0 / std::sqrt(static_cast<double>(m));
    bool pass = std::abs(large.correlation) < std::abs(small.correlation) &&
                std::abs(large.correlation) < 0.1 && std::abs(indep.correlation) <= bound;
    std::string detail = "rho(1e3) " + format_double(small.correlation) + ", rho(1e5) " +
                         format_double(large.correlation) + " (<0.1), rho(J=0) " +
                         format_double(indep.correlation) + " (|.|<=" +
                         format_double(bound) + ")";
    return {pass, detail};
}

// --------------------------------------------------------------------------
// 8. invariant distribution against the oracle jump chain
// --------------------------------------------------------------------------
Outcome criterion8() {
    bool all_pass = true;
    std::string detail;
    for (const std::string name : {"invariant_a", "invariant_b"}) {
        ModelParams p = preset_params(name);
        PresetGrid pg = preset_grid(name);
        Grid2D g = build_grid(p, pg.bounds, 400, 400);
        InitialCondition ic = InitialCondition::gaussian(-1.3, 2.28, 1.0, 1.0);

        InvariantOptions opt;
        opt.adaptive.dt_init = 1e-3;
        InvariantResult inv = invariant_distribution(p, g, ic, 1e-4, 1500.0, opt);

        auto chain = simulate_isolated_exact(p, -1.3, 2.28, 1000000, 20260808);
        // discard the burn-in, bin the post-jump w values on the grid rows
        std::vector<double> hist(g.n_w, 0.0);
        std::size_t burn = 10000, used = 0;
        for (std::size_t k = burn; k < chain.size(); ++k) {
            int j = static_cast<int>(std::lround((chain[k].w - g.w_min) / g.dw));
            if (j < 0 || j >= g.n_w) continue;
            hist[j] += 1.0;
            ++used;
        }
        for (double& x : hist) x /= static_cast<double>(used) * g.dw;

        kahan_sum l1;
        for (int j = 0; j < g.n_w; ++j)
            l1.add(std::abs(hist[j] - inv.stats.jump_marginal[j]));
        double dist = l1.value() * g.dw;
        bool pass = inv.converged && dist <= 0.1;
        all_pass = all_pass && pass;
        detail += name + ": L1 " + format_double(dist) + " (<=0.1), " +
                  (inv.converged ? "stationary" : "NOT stationary") + "; ";
    }
    return {all_pass, detail};
}

// --------------------------------------------------------------------------
// 9. oscillation onset in the coupling strength
// --------------------------------------------------------------------------
Outcome criterion9() {
    ModelParams p = preset_params("hopf");
    PresetGrid pg = preset_grid("hopf");
    Grid2D g = build_grid(p, pg.bounds, 200, 200);
    InitialCondition ic = InitialCondition::gaussian(-1.3, 2.28, 1.0, 1.0);
    const double T = 400.0, transient = 0.5, eps = 1e-4;

    SweepOptions opt;
    opt.adaptive.dt_init = 1e-3;
    SweepResult res = hopf_sweep(p, g, ic, {5.5, 6.0, 6.2, 6.5, 7.0}, eps, T, transient, opt);

    std::string detail = "amplitudes:";
    for (std::size_t k = 0; k < res.j_values.size(); ++k)
        detail += " J" + format_double(res.j_values[k]) + "=" +
                  format_double(res.amplitudes[k]);
    bool classes_ok = !res.oscillatory[0] && !res.oscillatory[1] && res.oscillatory[3] &&
                      res.oscillatory[4];
    if (!classes_ok) return {false, detail + " (classification wrong)"};

    double lo = res.oscillatory[2] ? 6.0 : 6.2;
    double hi = res.oscillatory[2] ? 6.2 : 6.5;
    double threshold =
        bisect_oscillation_threshold(p, g, ic, eps, T, transient, lo, hi, 4, opt);
    detail += ", threshold " + format_double(threshold) + " (in [5.9,6.4])";
    return {threshold >= 5.9 && threshold <= 6.4, detail};
}

// --------------------------------------------------------------------------
// 10. stable limit cycle well above the onset
// --------------------------------------------------------------------------
Outcome criterion10() {
    ModelParams p = preset_params("hopf");
    p.J = 7.0;
    PresetGrid pg = preset_grid("hopf");
    Grid2D g = build_grid(p, pg.bounds, 200, 200);
    InitialCondition ic = InitialCondition::gaussian(-1.3, 2.28, 1.0, 1.0);

    AdaptiveOptions ao;
    ao.eps = 1e-4;
    ao.dt_init = 1e-3;
    ao.keep_log = false;
    AdvanceResult adv = adaptive_advance(p, g, discretize_initial(ic, g), 400.0, ao);

    std::vector<double> ts, vs;
    for (std::size_t k = 0; k < adv.trace.times.size(); ++k) {
        if (adv.trace.times[k] < 200.0) continue;
        ts.push_back(adv.trace.times[k]);
        vs.push_back(adv.trace.mean_v[k]);
    }
    auto gaps = peak_intervals(ts, vs);
    if (gaps.size() < 4) return {false, "fewer than 5 peaks after the transient"};
    double mean = 0.0;
    for (double gapv : gaps) mean += gapv;
    mean /= static_cast<double>(gaps.size());
    double worst = 0.0;
    for (double gapv : gaps) worst = std::max(worst, std::abs(gapv - mean) / mean);
    std::string detail = std::to_string(gaps.size() + 1) + " peaks, mean period " +
                         format_double(mean) + ", worst successive variation " +
                         format_double(worst) + " (<=0.05)";
    return {worst <= 0.05, detail};
}

} // namespace

int main(int argc, char** argv) {
    std::vector<int> wanted;
    for (int k = 1; k < argc; ++k) {
        if (std::strcmp(argv[k], "--criterion") == 0 && k + 1 < argc) {
            wanted.push_back(std::atoi(argv[++k]));
        } else if (std::strcmp(argv[k], "--all") == 0) {
            for (int c = 1; c <= 10; ++c) wanted.push_back(c);
        }
    }
    if (wanted.empty()) {
        std::cerr << "usage: acceptance --criterion K [--criterion K2 ...] | --all\n";
        return 2;
    }

    static const char* names[] = {
        "conservation & positivity (random finite-volume problems)",
        "jump operator exactness",
        "splitting temporal order >= 1.7",
        "Euler network vs thinning oracle at N=1",
        "convergence of V_N in N",
        "particle vs mean-field agreement",
        "propagation of chaos",
        "invariant distribution vs oracle jump chain",
        "oscillation onset in J",
        "stable limit cycle at J=7",
    };

    bool all_pass = true;
    for (int c : wanted) {
        Outcome o;
        try {
            switch (c) {
                case 1: o = criterion1(); break;
                case 2: o = criterion2(); break;
                case 3: o = criterion3(); break;
                case 4: o = criterion4(); break;
                case 5: o = criterion5(); break;
                case 6: o = criterion6(); break;
                case 7: o = criterion7(); break;
                case 8: o = criterion8(); break;
                case 9: o = criterion9(); break;
                case 10: o = criterion10(); break;
                default:
                    std::cerr << "unknown criterion " << c << "\n";
                    return 2;
            }
        } catch (const std::exception& e) {
            o = {false, std::string("exception: ") + e.what()};
        }
        std::cout << (o.pass ? "[PASS]" : "[FAIL]") << " criterion " << c << " ("
                  << names[c - 1] << "): " << o.detail << std::endl;
        all_pass = all_pass && o.pass;
    }
    return all_pass ? 0 : 1;
}
