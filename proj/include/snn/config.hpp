#pragma once

#include <algorithm>
#include <cctype>
#include <cstdint>
#include <map>
#include <optional>
#include <set>
#include <sstream>
#include <string>
#include <vector>

#include "snn/errors.hpp"
#include "snn/grid.hpp"
#include "snn/initial.hpp"
#include "snn/io.hpp"
#include "snn/model.hpp"
#include "snn/particle.hpp"

namespace snn {

inline constexpr const char* version_string = "0.1.0";

// ---------------------------------------------------------------------------
// INI-style key/value text with sections
// ---------------------------------------------------------------------------

namespace detail {

inline std::string trim(const std::string& s) {
    std::size_t a = s.find_first_not_of(" \t\r\n");
    if (a == std::string::npos) return "";
    std::size_t b = s.find_last_not_of(" \t\r\n");
    return s.substr(a, b - a + 1);
}

} // namespace detail

/// Flat section -> (key -> value) map with strict consumption tracking so
/// unknown keys can be reported by name.
class KeyValueText {
public:
    static KeyValueText parse(const std::string& text) {
        KeyValueText kv;
        std::istringstream in(text);
        std::string line, section;
        std::size_t line_no = 0;
        while (std::getline(in, line)) {
            ++line_no;
            std::string s = detail::trim(line);
            if (s.empty() || s[0] == '#' || s[0] == ';') continue;
            if (s.front() == '[') {
                if (s.back() != ']')
                    throw config_error("config line " + std::to_string(line_no) +
                                       ": malformed section header '" + s + "'");
                section = detail::trim(s.substr(1, s.size() - 2));
                continue;
            }
            auto eq = s.find('=');
            if (eq == std::string::npos)
                throw config_error("config line " + std::to_string(line_no) +
                                   ": expected key = value, got '" + s + "'");
            std::string key = detail::trim(s.substr(0, eq));
            std::string value = detail::trim(s.substr(eq + 1));
            if (key.empty())
                throw config_error("config line " + std::to_string(line_no) + ": empty key");
            std::string full = section + "." + key;
            if (kv.values_.count(full))
                throw config_error("duplicate config key '" + full + "'");
            kv.values_[full] = value;
        }
        return kv;
    }

    std::optional<std::string> take(const std::string& section, const std::string& key) {
        std::string full = section + "." + key;
        auto it = values_.find(full);
        if (it == values_.end()) return std::nullopt;
        consumed_.insert(full);
        return it->second;
    }

    bool has_section(const std::string& section) const {
        std::string prefix = section + ".";
        for (const auto& [k, v] : values_)
            if (k.rfind(prefix, 0) == 0) return true;
        return false;
    }

    void check_all_consumed() const {
        for (const auto& [k, v] : values_)
            if (!consumed_.count(k)) throw config_error("unknown config key '" + k + "'");
    }

private:
    std::map<std::string, std::string> values_;
    std::set<std::string> consumed_;
};

namespace detail {

inline double parse_double(const std::string& section, const std::string& key,
                           const std::string& v) {
    try {
        std::size_t pos = 0;
        double x = std::stod(v, &pos);
        if (pos != v.size()) throw std::invalid_argument("trailing characters");
        return x;
    } catch (const std::exception&) {
        throw config_error("config key '" + section + "." + key +
                           "': cannot parse real value from '" + v + "'");
    }
}

inline long long parse_int(const std::string& section, const std::string& key,
                           const std::string& v) {
    try {
        std::size_t pos = 0;
        long long x = std::stoll(v, &pos);
        if (pos != v.size()) throw std::invalid_argument("trailing characters");
        return x;
    } catch (const std::exception&) {
        throw config_error("config key '" + section + "." + key +
                           "': cannot parse integer from '" + v + "'");
    }
}

inline bool parse_bool(const std::string& section, const std::string& key,
                       const std::string& v) {
    if (v == "true" || v == "1") return true;
    if (v == "false" || v == "0") return false;
    throw config_error("config key '" + section + "." + key +
                       "': expected true/false, got '" + v + "'");
}

/// Space-separated reals, or an inclusive range "start:step:stop".
inline std::vector<double> parse_double_list(const std::string& section,
                                             const std::string& key,
                                             const std::string& v) {
    std::vector<double> out;
    if (v.find(':') != std::string::npos) {
        std::istringstream in(v);
        std::string a, b, c;
        if (!std::getline(in, a, ':') || !std::getline(in, b, ':') || !std::getline(in, c))
            throw config_error("config key '" + section + "." + key +
                               "': range must be start:step:stop");
        double start = parse_double(section, key, trim(a));
        double step = parse_double(section, key, trim(b));
        double stop = parse_double(section, key, trim(c));
        if (!(step > 0.0))
            throw config_error("config key '" + section + "." + key + "': step must be > 0");
        for (double x = start; x <= stop + 1e-9 * step; x += step) out.push_back(x);
        return out;
    }
    std::istringstream in(v);
    std::string tok;
    while (in >> tok) out.push_back(parse_double(section, key, tok));
    return out;
}

inline std::vector<std::size_t> parse_size_list(const std::string& section,
                                                const std::string& key,
                                                const std::string& v) {
    std::vector<std::size_t> out;
    std::istringstream in(v);
    std::string tok;
    while (in >> tok) {
        long long x = parse_int(section, key, tok);
        if (x <= 0)
            throw config_error("config key '" + section + "." + key +
                               "': entries must be positive");
        out.push_back(static_cast<std::size_t>(x));
    }
    return out;
}

inline std::string join_doubles(std::span<const double> xs) {
    std::string s;
    for (std::size_t i = 0; i < xs.size(); ++i) {
        if (i) s += ' ';
        s += format_double(xs[i]);
    }
    return s;
}

} // namespace detail

// ---------------------------------------------------------------------------
// Preset default grids
// ---------------------------------------------------------------------------

struct PresetGrid {
    GridBounds bounds;
    int n_v = 0;
    int n_w = 0;
};

/// Default truncation boxes per preset, sized so the initial law and the
/// visited region stay inside, the jump shift is a whole number of cells, and
/// the reset potential falls on a grid node.
inline PresetGrid preset_grid(const std::string& name) {
    if (name == "cv_test") return {{-5.0, 6.96, -3.95, 11.0}, 300, 300};
    if (name == "invariant_a") return {{-6.0, 5.97, -3.0, 24.43125}, 400, 400};
    if (name == "invariant_b") return {{-6.0, 5.97, -2.0, 9.97}, 400, 400};
    if (name == "hopf") return {{-5.5, 2.46, -1.3, 6.1625}, 200, 200};
    throw config_error("no default grid for preset '" + name + "'");
}

// ---------------------------------------------------------------------------
// Run configuration
// ---------------------------------------------------------------------------

struct RunConfig {
    // run
    std::string target; ///< particle | meanfield | convergence | chaos | invariant |
                        ///< sweep-j | compare
    std::size_t threads = 0; ///< 0 = automatic

    // model
    std::string preset; ///< optional; explicit keys override preset values
    ModelParams params;

    // initial condition
    InitialCondition ic = InitialCondition::gaussian(-1.3, 2.28, 1.0, 1.0);

    // particle simulator
    std::size_t n = 10000;
    double dt = 1e-3;
    std::uint64_t seed = 1;
    std::size_t sample_every = 10;
    bool exclude_self_coupling = false;
    RateOverflow on_rate_overflow = RateOverflow::error_out;
    std::vector<double> particle_snapshots;

    // mean-field solver
    GridBounds bounds;
    bool bounds_set = false;
    int n_v = 0, n_w = 0;
    double eps = 1e-4;
    double dt_init = 1e-3;
    double dt_min = 1e-10;
    std::vector<double> mf_snapshots;

    // experiment parameters
    double T = 20.0;
    std::vector<std::size_t> n_list = {1000, 10000, 100000};
    std::string reference = "largest_n";
    std::size_t m_realisations = 400;
    std::size_t histogram_bins = 40;
    double t_long = 2000.0;
    double stat_threshold = 1e-8;
    double macro_interval = 10.0;
    std::vector<double> j_values = {5.0, 5.5, 6.0, 6.5, 7.0};
    double transient_fraction = 0.5;
    double amplitude_floor = 1e-3;
    bool bisect = true;
    int bisect_iters = 5;

    // output
    std::string output_dir;

    /// Grid resolved from explicit values or preset defaults.
    Grid2D resolved_grid(std::vector<std::string>* warnings = nullptr) const {
        GridBounds b = bounds;
        int nv = n_v, nw = n_w;
        if (!bounds_set || nv == 0 || nw == 0) {
            if (preset.empty())
                throw config_error(
                    "mean-field grid: give [meanfield] bounds and sizes or use a preset");
            PresetGrid pg = preset_grid(preset);
            if (!bounds_set) b = pg.bounds;
            if (nv == 0) nv = pg.n_v;
            if (nw == 0) nw = pg.n_w;
        }
        return build_grid(params, b, nv, nw, warnings);
    }

    StepOptions step_options() const {
        StepOptions o;
        o.exclude_self_coupling = exclude_self_coupling;
        o.on_rate_overflow = on_rate_overflow;
        return o;
    }

    void validate() const {
        static const std::set<std::string> targets = {
            "particle", "meanfield", "convergence", "chaos",
            "invariant", "sweep-j",  "compare"};
        if (!targets.count(target))
            throw config_error("run.target must be one of particle, meanfield, "
                               "convergence, chaos, invariant, sweep-j, compare (got '" +
                               target + "')");
        params.validate();
        if (n == 0) throw config_error("particle.n must be >= 1");
        if (!(dt > 0.0)) throw config_error("particle.dt must be > 0");
        if (!(T > 0.0)) throw config_error("experiment.T must be > 0");
        if (!(eps > 0.0)) throw config_error("meanfield.eps must be > 0");
        if (!(dt_init > 0.0)) throw config_error("meanfield.dt_init must be > 0");
        if (!(transient_fraction >= 0.0 && transient_fraction < 1.0))
            throw config_error("experiment.transient_fraction must be in [0,1)");
        if (reference != "largest_n" && reference != "mean_field")
            throw config_error("experiment.reference must be largest_n or mean_field");
        if (bounds_set || n_v != 0 || n_w != 0 || target == "meanfield" ||
            target == "invariant" || target == "sweep-j" || target == "compare")
            resolved_grid(nullptr); // full geometric validation
    }
};

inline RunConfig parse_config(const std::string& text) {
    KeyValueText kv = KeyValueText::parse(text);
    RunConfig c;

    if (auto v = kv.take("run", "target")) c.target = *v;
    if (auto v = kv.take("run", "threads"))
        c.threads = static_cast<std::size_t>(detail::parse_int("run", "threads", *v));

    // model: preset first, explicit keys override
    if (auto v = kv.take("model", "preset")) {
        c.preset = *v;
        c.params = preset_params(*v);
    }
    bool have_nl = !c.preset.empty(), have_rate = !c.preset.empty();
    if (auto v = kv.take("model", "nonlinearity")) {
        have_nl = true;
        if (*v == "izhikevich") c.params.nonlinearity.kind = Nonlinearity::Kind::izhikevich;
        else if (*v == "adex") c.params.nonlinearity.kind = Nonlinearity::Kind::adex;
        else if (*v == "quartic") c.params.nonlinearity.kind = Nonlinearity::Kind::quartic;
        else if (*v == "custom") c.params.nonlinearity.kind = Nonlinearity::Kind::custom;
        else throw config_error("model.nonlinearity: unknown kind '" + *v + "'");
    }
    if (auto v = kv.take("model", "nonlinearity_a"))
        c.params.nonlinearity.a = detail::parse_double("model", "nonlinearity_a", *v);
    if (auto v = kv.take("model", "nonlinearity_custom")) {
        if (*v == "exp_minus_5v")
            c.params.nonlinearity.custom = Nonlinearity::Custom::exp_minus_5v;
        else throw config_error("model.nonlinearity_custom: unknown preset '" + *v + "'");
    }
    if (auto v = kv.take("model", "rate")) {
        have_rate = true;
        if (*v == "exp") c.params.rate.kind = RateFunction::Kind::exp;
        else if (*v == "shifted_exp") c.params.rate.kind = RateFunction::Kind::shifted_exp;
        else throw config_error("model.rate: unknown kind '" + *v + "'");
    }
    if (auto v = kv.take("model", "rate_c")) {
        c.params.rate.c = detail::parse_double("model", "rate_c", *v);
        if (c.params.rate.c < 0.0) throw config_error("model.rate_c must be >= 0");
    }
    if (auto v = kv.take("model", "rate_v0"))
        c.params.rate.v0 = detail::parse_double("model", "rate_v0", *v);
    if (auto v = kv.take("model", "I")) c.params.I = detail::parse_double("model", "I", *v);
    if (auto v = kv.take("model", "tau_w"))
        c.params.tau_w = detail::parse_double("model", "tau_w", *v);
    if (auto v = kv.take("model", "b")) c.params.b = detail::parse_double("model", "b", *v);
    if (auto v = kv.take("model", "J")) c.params.J = detail::parse_double("model", "J", *v);
    if (auto v = kv.take("model", "v_reset"))
        c.params.v_reset = detail::parse_double("model", "v_reset", *v);
    if (auto v = kv.take("model", "w_jump"))
        c.params.w_jump = detail::parse_double("model", "w_jump", *v);
    if (kv.has_section("model") && (!have_nl || !have_rate))
        throw config_error("[model]: missing required key 'preset' (or explicit "
                           "'nonlinearity' and 'rate')");

    // initial condition
    if (auto v = kv.take("initial", "kind")) {
        double mu1 = c.ic.mu1, mu2 = c.ic.mu2, s1 = c.ic.sigma1, s2 = c.ic.sigma2;
        if (auto x = kv.take("initial", "mu1")) mu1 = detail::parse_double("initial", "mu1", *x);
        if (auto x = kv.take("initial", "mu2")) mu2 = detail::parse_double("initial", "mu2", *x);
        if (auto x = kv.take("initial", "sigma1"))
            s1 = detail::parse_double("initial", "sigma1", *x);
        if (auto x = kv.take("initial", "sigma2"))
            s2 = detail::parse_double("initial", "sigma2", *x);
        if (*v == "gaussian") c.ic = InitialCondition::gaussian(mu1, mu2, s1, s2);
        else if (*v == "point_mass") c.ic = InitialCondition::point_mass(mu1, mu2);
        else throw config_error("initial.kind must be gaussian or point_mass");
    } else if (kv.has_section("initial")) {
        throw config_error("[initial]: missing required key 'kind'");
    }

    // particle
    if (auto v = kv.take("particle", "n")) {
        long long x = detail::parse_int("particle", "n", *v);
        if (x <= 0) throw config_error("particle.n must be >= 1");
        c.n = static_cast<std::size_t>(x);
    }
    if (auto v = kv.take("particle", "dt")) c.dt = detail::parse_double("particle", "dt", *v);
    if (auto v = kv.take("particle", "seed"))
        c.seed = static_cast<std::uint64_t>(detail::parse_int("particle", "seed", *v));
    if (auto v = kv.take("particle", "sample_every")) {
        long long x = detail::parse_int("particle", "sample_every", *v);
        if (x <= 0) throw config_error("particle.sample_every must be >= 1");
        c.sample_every = static_cast<std::size_t>(x);
    }
    if (auto v = kv.take("particle", "exclude_self_coupling"))
        c.exclude_self_coupling = detail::parse_bool("particle", "exclude_self_coupling", *v);
    if (auto v = kv.take("particle", "on_rate_overflow")) {
        if (*v == "error") c.on_rate_overflow = RateOverflow::error_out;
        else if (*v == "saturate") c.on_rate_overflow = RateOverflow::saturate;
        else throw config_error("particle.on_rate_overflow must be error or saturate");
    }
    if (auto v = kv.take("particle", "snapshots"))
        c.particle_snapshots = detail::parse_double_list("particle", "snapshots", *v);

    // meanfield
    int bounds_given = 0;
    auto bound = [&](const char* key, double& dst) {
        if (auto v = kv.take("meanfield", key)) {
            dst = detail::parse_double("meanfield", key, *v);
            ++bounds_given;
        }
    };
    bound("v_min", c.bounds.v_min);
    bound("v_max", c.bounds.v_max);
    bound("w_min", c.bounds.w_min);
    bound("w_max", c.bounds.w_max);
    if (bounds_given == 4) c.bounds_set = true;
    else if (bounds_given != 0)
        throw config_error("[meanfield]: give all four of v_min, v_max, w_min, w_max "
                           "or none (preset default)");
    if (auto v = kv.take("meanfield", "n_v"))
        c.n_v = static_cast<int>(detail::parse_int("meanfield", "n_v", *v));
    if (auto v = kv.take("meanfield", "n_w"))
        c.n_w = static_cast<int>(detail::parse_int("meanfield", "n_w", *v));
    if (auto v = kv.take("meanfield", "eps"))
        c.eps = detail::parse_double("meanfield", "eps", *v);
    if (auto v = kv.take("meanfield", "dt_init"))
        c.dt_init = detail::parse_double("meanfield", "dt_init", *v);
    if (auto v = kv.take("meanfield", "dt_min"))
        c.dt_min = detail::parse_double("meanfield", "dt_min", *v);
    if (auto v = kv.take("meanfield", "snapshots"))
        c.mf_snapshots = detail::parse_double_list("meanfield", "snapshots", *v);

    // experiment
    if (auto v = kv.take("experiment", "T"))
        c.T = detail::parse_double("experiment", "T", *v);
    if (auto v = kv.take("experiment", "n_list"))
        c.n_list = detail::parse_size_list("experiment", "n_list", *v);
    if (auto v = kv.take("experiment", "reference")) c.reference = *v;
    if (auto v = kv.take("experiment", "m")) {
        long long x = detail::parse_int("experiment", "m", *v);
        if (x < 2) throw config_error("experiment.m must be >= 2");
        c.m_realisations = static_cast<std::size_t>(x);
    }
    if (auto v = kv.take("experiment", "histogram_bins"))
        c.histogram_bins =
            static_cast<std::size_t>(detail::parse_int("experiment", "histogram_bins", *v));
    if (auto v = kv.take("experiment", "t_long"))
        c.t_long = detail::parse_double("experiment", "t_long", *v);
    if (auto v = kv.take("experiment", "stat_threshold"))
        c.stat_threshold = detail::parse_double("experiment", "stat_threshold", *v);
    if (auto v = kv.take("experiment", "macro_interval"))
        c.macro_interval = detail::parse_double("experiment", "macro_interval", *v);
    if (auto v = kv.take("experiment", "j_values"))
        c.j_values = detail::parse_double_list("experiment", "j_values", *v);
    if (auto v = kv.take("experiment", "transient_fraction"))
        c.transient_fraction = detail::parse_double("experiment", "transient_fraction", *v);
    if (auto v = kv.take("experiment", "amplitude_floor"))
        c.amplitude_floor = detail::parse_double("experiment", "amplitude_floor", *v);
    if (auto v = kv.take("experiment", "bisect"))
        c.bisect = detail::parse_bool("experiment", "bisect", *v);
    if (auto v = kv.take("experiment", "bisect_iters"))
        c.bisect_iters = static_cast<int>(detail::parse_int("experiment", "bisect_iters", *v));

    // output
    if (auto v = kv.take("output", "dir")) c.output_dir = *v;

    kv.check_all_consumed();
    return c;
}

/// Serialize the full resolved configuration. parse(serialize(c)) reproduces
/// every field bit-exactly (doubles use shortest round-trip formatting).
inline std::string serialize_config(const RunConfig& c) {
    std::ostringstream out;
    out << "[run]\n";
    out << "target = " << c.target << "\n";
    out << "threads = " << c.threads << "\n";
    out << "\n[model]\n";
    if (!c.preset.empty()) out << "preset = " << c.preset << "\n";
    switch (c.params.nonlinearity.kind) {
        case Nonlinearity::Kind::izhikevich:
            out << "nonlinearity = izhikevich\n";
            out << "nonlinearity_a = " << format_double(c.params.nonlinearity.a) << "\n";
            break;
        case Nonlinearity::Kind::adex: out << "nonlinearity = adex\n"; break;
        case Nonlinearity::Kind::quartic:
            out << "nonlinearity = quartic\n";
            out << "nonlinearity_a = " << format_double(c.params.nonlinearity.a) << "\n";
            break;
        case Nonlinearity::Kind::custom:
            out << "nonlinearity = custom\n";
            out << "nonlinearity_custom = exp_minus_5v\n";
            break;
    }
    if (c.params.rate.kind == RateFunction::Kind::exp) {
        out << "rate = exp\n";
    } else {
        out << "rate = shifted_exp\n";
        out << "rate_c = " << format_double(c.params.rate.c) << "\n";
        out << "rate_v0 = " << format_double(c.params.rate.v0) << "\n";
    }
    out << "I = " << format_double(c.params.I) << "\n";
    out << "tau_w = " << format_double(c.params.tau_w) << "\n";
    out << "b = " << format_double(c.params.b) << "\n";
    out << "J = " << format_double(c.params.J) << "\n";
    out << "v_reset = " << format_double(c.params.v_reset) << "\n";
    out << "w_jump = " << format_double(c.params.w_jump) << "\n";
    out << "\n[initial]\n";
    out << "kind = "
        << (c.ic.kind == InitialCondition::Kind::gaussian ? "gaussian" : "point_mass")
        << "\n";
    out << "mu1 = " << format_double(c.ic.mu1) << "\n";
    out << "mu2 = " << format_double(c.ic.mu2) << "\n";
    if (c.ic.kind == InitialCondition::Kind::gaussian) {
        out << "sigma1 = " << format_double(c.ic.sigma1) << "\n";
        out << "sigma2 = " << format_double(c.ic.sigma2) << "\n";
    }
    out << "\n[particle]\n";
    out << "n = " << c.n << "\n";
    out << "dt = " << format_double(c.dt) << "\n";
    out << "seed = " << c.seed << "\n";
    out << "sample_every = " << c.sample_every << "\n";
    out << "exclude_self_coupling = " << (c.exclude_self_coupling ? "true" : "false") << "\n";
    out << "on_rate_overflow = "
        << (c.on_rate_overflow == RateOverflow::error_out ? "error" : "saturate") << "\n";
    if (!c.particle_snapshots.empty())
        out << "snapshots = " << detail::join_doubles(c.particle_snapshots) << "\n";
    out << "\n[meanfield]\n";
    if (c.bounds_set) {
        out << "v_min = " << format_double(c.bounds.v_min) << "\n";
        out << "v_max = " << format_double(c.bounds.v_max) << "\n";
        out << "w_min = " << format_double(c.bounds.w_min) << "\n";
        out << "w_max = " << format_double(c.bounds.w_max) << "\n";
    }
    if (c.n_v != 0) out << "n_v = " << c.n_v << "\n";
    if (c.n_w != 0) out << "n_w = " << c.n_w << "\n";
    out << "eps = " << format_double(c.eps) << "\n";
    out << "dt_init = " << format_double(c.dt_init) << "\n";
    out << "dt_min = " << format_double(c.dt_min) << "\n";
    if (!c.mf_snapshots.empty())
        out << "snapshots = " << detail::join_doubles(c.mf_snapshots) << "\n";
    out << "\n[experiment]\n";
    out << "T = " << format_double(c.T) << "\n";
    out << "n_list =";
    for (std::size_t x : c.n_list) out << ' ' << x;
    out << "\n";
    out << "reference = " << c.reference << "\n";
    out << "m = " << c.m_realisations << "\n";
    out << "histogram_bins = " << c.histogram_bins << "\n";
    out << "t_long = " << format_double(c.t_long) << "\n";
    out << "stat_threshold = " << format_double(c.stat_threshold) << "\n";
    out << "macro_interval = " << format_double(c.macro_interval) << "\n";
    out << "j_values = " << detail::join_doubles(c.j_values) << "\n";
    out << "transient_fraction = " << format_double(c.transient_fraction) << "\n";
    out << "amplitude_floor = " << format_double(c.amplitude_floor) << "\n";
    out << "bisect = " << (c.bisect ? "true" : "false") << "\n";
    out << "bisect_iters = " << c.bisect_iters << "\n";
    out << "\n[output]\n";
    if (!c.output_dir.empty()) out << "dir = " << c.output_dir << "\n";
    return out.str();
}

} // namespace snn
