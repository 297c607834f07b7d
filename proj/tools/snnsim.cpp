// snnsim: command-line front end. Configuration comes from an optional INI
// file plus flag overrides; every run writes a manifest first so it can be
// reproduced byte-for-byte from the results directory alone.

#include <cstdlib>
#include <filesystem>
#include <fstream>
#include <iostream>
#include <optional>
#include <sstream>
#include <string>

#include <CLI11.hpp>

#include "snn/snn.hpp"

namespace fs = std::filesystem;

namespace {

struct Overrides {
    std::string config_path;
    std::string preset;
    std::string out_dir;
    std::optional<std::uint64_t> n, m, seed, sample_every, threads, histogram_bins;
    std::optional<double> dt, T, eps, dt_init, t_long, transient_fraction;
    std::optional<int> n_v, n_w, bisect_iters;
    std::optional<double> v_min, v_max, w_min, w_max;
    std::optional<std::string> j_values, n_list, reference, on_rate_overflow;
    std::optional<bool> exclude_self_coupling, bisect;
    std::optional<std::string> ic_kind;
    std::optional<double> ic_mu1, ic_mu2, ic_sigma1, ic_sigma2;
    bool dry_run = false;
};

snn::RunConfig build_config(const std::string& target, const Overrides& ov) {
    snn::RunConfig c;
    if (!ov.config_path.empty()) {
        std::ifstream in(ov.config_path);
        if (!in) throw snn::io_error("cannot read config file: " + ov.config_path);
        std::stringstream buf;
        buf << in.rdbuf();
        c = snn::parse_config(buf.str());
    }
    c.target = target;
    if (!ov.preset.empty()) {
        c.preset = ov.preset;
        c.params = snn::preset_params(ov.preset);
    }
    if (c.preset.empty() && ov.config_path.empty())
        throw snn::config_error("give --preset or --config with a [model] section");
    if (!ov.out_dir.empty()) c.output_dir = ov.out_dir;
    if (ov.n) c.n = *ov.n;
    if (ov.m) c.m_realisations = *ov.m;
    if (ov.seed) c.seed = *ov.seed;
    if (ov.sample_every) c.sample_every = *ov.sample_every;
    if (ov.threads) c.threads = *ov.threads;
    if (ov.histogram_bins) c.histogram_bins = *ov.histogram_bins;
    if (ov.dt) c.dt = *ov.dt;
    if (ov.T) c.T = *ov.T;
    if (ov.eps) c.eps = *ov.eps;
    if (ov.dt_init) c.dt_init = *ov.dt_init;
    if (ov.t_long) c.t_long = *ov.t_long;
    if (ov.transient_fraction) c.transient_fraction = *ov.transient_fraction;
    if (ov.n_v) c.n_v = *ov.n_v;
    if (ov.n_w) c.n_w = *ov.n_w;
    if (ov.bisect_iters) c.bisect_iters = *ov.bisect_iters;
    if (ov.v_min || ov.v_max || ov.w_min || ov.w_max) {
        if (!(ov.v_min && ov.v_max && ov.w_min && ov.w_max))
            throw snn::config_error("give all four of --v-min --v-max --w-min --w-max");
        c.bounds = {*ov.v_min, *ov.v_max, *ov.w_min, *ov.w_max};
        c.bounds_set = true;
    }
    if (ov.j_values)
        c.j_values = snn::detail::parse_double_list("experiment", "j_values", *ov.j_values);
    if (ov.n_list)
        c.n_list = snn::detail::parse_size_list("experiment", "n_list", *ov.n_list);
    if (ov.reference) c.reference = *ov.reference;
    if (ov.on_rate_overflow) {
        if (*ov.on_rate_overflow == "error")
            c.on_rate_overflow = snn::RateOverflow::error_out;
        else if (*ov.on_rate_overflow == "saturate")
            c.on_rate_overflow = snn::RateOverflow::saturate;
        else
            throw snn::config_error("--on-rate-overflow must be error or saturate");
    }
    if (ov.exclude_self_coupling) c.exclude_self_coupling = *ov.exclude_self_coupling;
    if (ov.bisect) c.bisect = *ov.bisect;
    if (ov.ic_kind || ov.ic_mu1 || ov.ic_mu2 || ov.ic_sigma1 || ov.ic_sigma2) {
        std::string kind = ov.ic_kind.value_or(
            c.ic.kind == snn::InitialCondition::Kind::gaussian ? "gaussian" : "point_mass");
        double mu1 = ov.ic_mu1.value_or(c.ic.mu1);
        double mu2 = ov.ic_mu2.value_or(c.ic.mu2);
        double s1 = ov.ic_sigma1.value_or(c.ic.sigma1);
        double s2 = ov.ic_sigma2.value_or(c.ic.sigma2);
        if (kind == "gaussian")
            c.ic = snn::InitialCondition::gaussian(mu1, mu2, s1, s2);
        else if (kind == "point_mass")
            c.ic = snn::InitialCondition::point_mass(mu1, mu2);
        else
            throw snn::config_error("--ic must be gaussian or point_mass");
    }
    c.validate();
    return c;
}

fs::path resolve_output_dir(const snn::RunConfig& c) {
    fs::path dir = c.output_dir.empty() ? fs::path("runs") / c.target
                                        : fs::path(c.output_dir);
    if (dir.is_relative()) {
        const char* root = std::getenv("SNNSIM_OUTPUT_ROOT");
        if (root && *root) dir = fs::path(root) / dir;
    }
    fs::create_directories(dir);
    return dir;
}

void write_manifest(const fs::path& dir, const snn::RunConfig& c) {
    auto out = snn::open_out(dir / "manifest");
    out << "# snnsim " << snn::version_string << "\n";
    out << "# reproducible run manifest; rerun with: snnsim " << c.target
        << " --config manifest\n";
    out << snn::serialize_config(c);
}

void print_grid_warnings(const std::vector<std::string>& warnings) {
    for (const auto& w : warnings) std::cerr << "warning: " << w << "\n";
}

int run_particle(const snn::RunConfig& c, const fs::path& dir) {
    snn::ParticleState st = snn::init_particles(c.params, c.ic, c.n, c.seed);
    snn::RunOptions ro;
    ro.step = c.step_options();
    ro.snapshot_times = c.particle_snapshots;
    snn::ParticleTrace tr = snn::run(c.params, st, c.dt, c.T, c.sample_every, ro);
    snn::write_particle_trace(dir / "trace.csv", tr);
    for (std::size_t k = 0; k < tr.snapshots.size(); ++k)
        snn::write_particle_snapshot(
            dir / ("snapshot_" + std::to_string(k) + ".csv"), tr.snapshots[k]);
    snn::write_particle_snapshot(dir / "final_state.csv", {st.t, st.v, st.w});
    if (tr.total_saturated > 0)
        std::cerr << "note: " << tr.total_saturated
                  << " neuron-steps had lambda*dt > 1 (saturate policy)\n";
    std::cout << "particle run done: t = " << st.t << ", mean_v = " << tr.mean_v.back()
              << ", samples = " << tr.times.size() << "\n";
    return 0;
}

int run_meanfield(const snn::RunConfig& c, const fs::path& dir) {
    std::vector<std::string> warnings;
    snn::Grid2D g = c.resolved_grid(&warnings);
    print_grid_warnings(warnings);
    snn::Density d0 = snn::discretize_initial(c.ic, g);
    snn::AdaptiveOptions ao;
    ao.eps = c.eps;
    ao.dt_init = c.dt_init;
    ao.dt_min = c.dt_min;
    ao.snapshot_times = c.mf_snapshots;
    snn::AdvanceResult res = snn::adaptive_advance(c.params, g, std::move(d0), c.T, ao);
    snn::write_meanfield_trace(dir / "trace.csv", res.trace);
    snn::write_step_log(dir / "step_log.csv", res.log);
    for (std::size_t k = 0; k < res.snapshots.size(); ++k)
        snn::write_density(dir / ("density_" + std::to_string(k)), g, res.snapshots[k]);
    snn::write_density(dir / "density_final", g, res.density);
    snn::DensityStats s = snn::statistics(g, c.params, res.density);
    std::cout << "meanfield run done: t = " << res.density.t << ", mean_v = " << s.mean_v
              << ", mass = " << s.mass << ", accepted = " << res.accepted_steps
              << ", rejected = " << res.rejected_steps << "\n";
    return 0;
}

int run_convergence(const snn::RunConfig& c, const fs::path& dir) {
    snn::ConvergenceOptions opt;
    opt.sample_every = c.sample_every;
    opt.step = c.step_options();
    snn::ConvergenceReference ref = c.reference == "mean_field"
                                        ? snn::ConvergenceReference::mean_field
                                        : snn::ConvergenceReference::largest_n;
    if (ref == snn::ConvergenceReference::mean_field) {
        std::vector<std::string> warnings;
        opt.grid = c.resolved_grid(&warnings);
        print_grid_warnings(warnings);
        opt.adaptive.eps = c.eps;
        opt.adaptive.dt_init = c.dt_init;
    }
    snn::ConvergenceResult res = snn::convergence_experiment(
        c.params, c.ic, c.n_list, c.dt, c.T, ref, c.seed, opt);
    std::vector<double> ns(res.n_values.begin(), res.n_values.end());
    snn::write_summary_csv(dir / "summary.csv", "N", ns, "error", res.errors);
    for (std::size_t k = 0; k < res.n_values.size(); ++k) {
        snn::write_summary_csv(dir / ("trace_N" + std::to_string(res.n_values[k]) + ".csv"),
                               "t", res.sample_times, "mean_v", res.traces[k]);
    }
    snn::write_summary_csv(dir / "trace_reference.csv", "t", res.sample_times, "mean_v",
                           res.reference_trace);
    std::cout << "convergence slope = " << res.slope << "\n";
    return 0;
}

int run_chaos(const snn::RunConfig& c, const fs::path& dir) {
    snn::PairCorrelationOptions opt;
    opt.step = c.step_options();
    opt.histogram_bins = c.histogram_bins;
    snn::PairCorrelationResult res = snn::pair_correlation_experiment(
        c.params, c.ic, c.n, c.m_realisations, c.T, c.dt, c.seed, opt);
    snn::write_summary_csv(dir / "pairs.csv", "v_i", res.v_first, "v_j", res.v_second);
    snn::write_pair_histogram(dir / "histogram.csv", res.histogram);
    std::cout << "pair correlation (N = " << c.n << ", M = " << c.m_realisations
              << "): rho = " << res.correlation << "\n";
    return 0;
}

int run_invariant(const snn::RunConfig& c, const fs::path& dir) {
    std::vector<std::string> warnings;
    snn::Grid2D g = c.resolved_grid(&warnings);
    print_grid_warnings(warnings);
    snn::InvariantOptions opt;
    opt.macro_interval = c.macro_interval;
    opt.threshold = c.stat_threshold;
    opt.adaptive.dt_init = c.dt_init;
    opt.adaptive.dt_min = c.dt_min;
    snn::InvariantResult res =
        snn::invariant_distribution(c.params, g, c.ic, c.eps, c.t_long, opt);
    snn::write_density(dir / "density_invariant", g, res.density);
    snn::write_density_csv(dir / "density_invariant.csv", g, res.density);
    snn::write_step_log(dir / "step_log.csv", res.log);
    std::vector<double> ws(g.n_w);
    for (int j = 0; j < g.n_w; ++j) ws[j] = g.w_at(j);
    snn::write_summary_csv(dir / "w_marginal.csv", "w", ws, "density",
                           res.stats.w_marginal);
    snn::write_summary_csv(dir / "jump_marginal.csv", "w", ws, "density",
                           res.stats.jump_marginal);
    std::cout << "invariant run: " << (res.converged ? "stationary" : "NOT stationary")
              << " at t = " << res.t_reached << ", residual = " << res.residual
              << ", mass = " << res.stats.mass << "\n";
    return res.converged ? 0 : 3;
}

int run_sweep(const snn::RunConfig& c, const fs::path& dir) {
    std::vector<std::string> warnings;
    snn::Grid2D g = c.resolved_grid(&warnings);
    print_grid_warnings(warnings);
    snn::SweepOptions opt;
    opt.amplitude_floor = c.amplitude_floor;
    opt.adaptive.dt_init = c.dt_init;
    opt.adaptive.dt_min = c.dt_min;
    snn::SweepResult res = snn::hopf_sweep(c.params, g, c.ic, c.j_values, c.eps, c.T,
                                           c.transient_fraction, opt);
    {
        auto out = snn::open_out(dir / "summary.csv");
        out << "J,amplitude,period\n";
        for (std::size_t k = 0; k < res.j_values.size(); ++k) {
            out << snn::format_double(res.j_values[k]) << ','
                << snn::format_double(res.amplitudes[k]) << ',';
            if (res.periods[k]) out << snn::format_double(*res.periods[k]);
            out << '\n';
        }
    }
    for (std::size_t k = 0; k < res.j_values.size(); ++k) {
        std::string name = "trace_J" + snn::format_double(res.j_values[k]) + ".csv";
        snn::write_meanfield_trace(dir / name, res.traces[k]);
        res.trace_files.push_back(name);
    }
    for (std::size_t k = 0; k < res.j_values.size(); ++k)
        std::cout << "J = " << res.j_values[k] << ": amplitude = " << res.amplitudes[k]
                  << (res.oscillatory[k] ? " (oscillatory)" : " (relaxing)") << "\n";
    if (c.bisect) {
        std::optional<std::size_t> lo, hi;
        for (std::size_t k = 0; k + 1 < res.j_values.size(); ++k)
            if (!res.oscillatory[k] && res.oscillatory[k + 1]) {
                lo = k;
                hi = k + 1;
                break;
            }
        if (lo) {
            double threshold = snn::bisect_oscillation_threshold(
                c.params, g, c.ic, c.eps, c.T, c.transient_fraction,
                res.j_values[*lo], res.j_values[*hi], c.bisect_iters, opt);
            std::cout << "oscillation threshold J* ~ " << threshold << "\n";
            auto out = snn::open_out(dir / "threshold.txt");
            out << snn::format_double(threshold) << "\n";
        } else {
            std::cout << "no classifier sign change found; skipping bisection\n";
        }
    }
    return 0;
}

int run_compare(const snn::RunConfig& c, const fs::path& dir) {
    std::vector<std::string> warnings;
    snn::Grid2D g = c.resolved_grid(&warnings);
    print_grid_warnings(warnings);
    snn::CompareOptions opt;
    opt.sample_every = c.sample_every;
    opt.step = c.step_options();
    opt.adaptive.dt_init = c.dt_init;
    opt.adaptive.dt_min = c.dt_min;
    snn::CompareResult res = snn::compare_particle_meanfield(c.params, c.ic, c.n, g, c.dt,
                                                             c.eps, c.T, c.seed, opt);
    auto out = snn::open_out(dir / "aligned.csv");
    out << "t,mean_v_particle,mean_v_meanfield\n";
    for (std::size_t k = 0; k < res.times.size(); ++k)
        out << snn::format_double(res.times[k]) << ','
            << snn::format_double(res.v_particle[k]) << ','
            << snn::format_double(res.v_mean_field[k]) << '\n';
    std::cout << "compare: max gap = " << res.max_gap << ", mean gap = " << res.mean_gap
              << "\n";
    return 0;
}

int dispatch(const snn::RunConfig& c) {
    if (c.threads > 0) snn::set_thread_count(c.threads);
    fs::path dir = resolve_output_dir(c);
    write_manifest(dir, c);
    if (c.target == "particle") return run_particle(c, dir);
    if (c.target == "meanfield") return run_meanfield(c, dir);
    if (c.target == "convergence") return run_convergence(c, dir);
    if (c.target == "chaos") return run_chaos(c, dir);
    if (c.target == "invariant") return run_invariant(c, dir);
    if (c.target == "sweep-j") return run_sweep(c, dir);
    if (c.target == "compare") return run_compare(c, dir);
    throw snn::config_error("unhandled target " + c.target);
}

void add_common_options(CLI::App* cmd, Overrides& ov) {
    cmd->add_option("--config", ov.config_path, "INI configuration file");
    cmd->add_option("--preset", ov.preset, "parameter preset name");
    cmd->add_option("--out", ov.out_dir, "results directory");
    cmd->add_option("--seed", ov.seed, "random seed");
    cmd->add_option("--threads", ov.threads, "worker threads (0 = auto)");
    cmd->add_option("--T", ov.T, "time horizon");
    cmd->add_option("--N", ov.n, "number of neurons");
    cmd->add_option("--dt", ov.dt, "particle time step");
    cmd->add_option("--sample-every", ov.sample_every, "trace sampling stride (steps)");
    cmd->add_option("--eps", ov.eps, "adaptive step tolerance");
    cmd->add_option("--dt-init", ov.dt_init, "initial adaptive step");
    cmd->add_option("--nv", ov.n_v, "grid cells in v");
    cmd->add_option("--nw", ov.n_w, "grid cells in w");
    cmd->add_option("--v-min", ov.v_min, "domain lower bound in v");
    cmd->add_option("--v-max", ov.v_max, "domain upper bound in v");
    cmd->add_option("--w-min", ov.w_min, "domain lower bound in w");
    cmd->add_option("--w-max", ov.w_max, "domain upper bound in w");
    cmd->add_option("--ic", ov.ic_kind, "initial condition kind (gaussian|point_mass)");
    cmd->add_option("--ic-mu1", ov.ic_mu1, "initial mean of v");
    cmd->add_option("--ic-mu2", ov.ic_mu2, "initial mean of w");
    cmd->add_option("--ic-sigma1", ov.ic_sigma1, "initial std of v");
    cmd->add_option("--ic-sigma2", ov.ic_sigma2, "initial std of w");
    cmd->add_option("--exclude-self-coupling", ov.exclude_self_coupling,
                    "spiking neuron skips its own J/N increment");
    cmd->add_option("--on-rate-overflow", ov.on_rate_overflow,
                    "behaviour when lambda*dt > 1 (error|saturate)");
    cmd->add_flag("--dry-run", ov.dry_run, "validate and print the resolved config");
}

} // namespace

int main(int argc, char** argv) {
    CLI::App app{"snnsim: stochastic spiking network simulator (particle and mean-field)"};
    app.require_subcommand(1);

    Overrides ov;
    std::string target;

    CLI::App* simulate = app.add_subcommand("simulate", "run one simulator");
    simulate->require_subcommand(1);
    CLI::App* sim_particle = simulate->add_subcommand("particle", "N-neuron network");
    add_common_options(sim_particle, ov);
    sim_particle->callback([&] { target = "particle"; });
    CLI::App* sim_mf = simulate->add_subcommand("meanfield", "mean-field PDE solver");
    add_common_options(sim_mf, ov);
    sim_mf->callback([&] { target = "meanfield"; });

    CLI::App* conv = app.add_subcommand("convergence", "error of V_N against a reference");
    add_common_options(conv, ov);
    conv->add_option("--n-list", ov.n_list, "network sizes, space separated");
    conv->add_option("--reference", ov.reference, "largest_n | mean_field");
    conv->callback([&] { target = "convergence"; });

    CLI::App* chaos = app.add_subcommand("chaos", "two-neuron correlation experiment");
    add_common_options(chaos, ov);
    chaos->add_option("--M", ov.m, "number of realisations");
    chaos->add_option("--histogram-bins", ov.histogram_bins, "2D histogram bins");
    chaos->callback([&] { target = "chaos"; });

    CLI::App* inv = app.add_subcommand("invariant", "relax the isolated neuron to steady state");
    add_common_options(inv, ov);
    inv->add_option("--t-long", ov.t_long, "give up after this horizon");
    inv->callback([&] { target = "invariant"; });

    CLI::App* sweep = app.add_subcommand("sweep-j", "oscillation onset sweep over J");
    add_common_options(sweep, ov);
    sweep->add_option("--J", ov.j_values, "J values: list or start:step:stop");
    sweep->add_option("--transient-fraction", ov.transient_fraction,
                      "fraction of the horizon discarded before measuring");
    sweep->add_option("--bisect", ov.bisect, "bisect the threshold after the sweep");
    sweep->add_option("--bisect-iters", ov.bisect_iters, "bisection iterations");
    sweep->callback([&] { target = "sweep-j"; });

    CLI::App* cmp = app.add_subcommand("compare", "particle vs mean-field traces");
    add_common_options(cmp, ov);
    cmp->callback([&] { target = "compare"; });

    CLI11_PARSE(app, argc, argv);

    try {
        snn::RunConfig c = build_config(target, ov);
        if (ov.dry_run) {
            std::cout << snn::serialize_config(c);
            return 0;
        }
        return dispatch(c);
    } catch (const snn::config_error& e) {
        std::cerr << "config error: " << e.what() << "\n";
        return 2;
    } catch (const snn::numerical_error& e) {
        std::cerr << "numerical error: " << e.what() << "\n";
        return 3;
    } catch (const snn::io_error& e) {
        std::cerr << "io error: " << e.what() << "\n";
        return 4;
    } catch (const std::exception& e) {
        std::cerr << "error: " << e.what() << "\n";
        return 1;
    }
}
