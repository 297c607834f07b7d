#pragma once

#include <cmath>
#include <string>
#include <vector>

#include "snn/errors.hpp"

namespace snn {

/// Membrane nonlinearity F(v). The named kinds cover the classical planar
/// models; "custom" selects from a small table of fixed presets so that
/// evaluation stays total and branch-cheap (no expression parsing).
struct Nonlinearity {
    enum class Kind { izhikevich, adex, quartic, custom };
    enum class Custom { exp_minus_5v };

    Kind kind = Kind::adex;
    double a = 0.0;                        // parameter of izhikevich / quartic
    Custom custom = Custom::exp_minus_5v;  // active when kind == custom

    double operator()(double v) const {
        switch (kind) {
            case Kind::izhikevich: return v * (v - a);
            case Kind::adex: return std::exp(v) - v;
            case Kind::quartic: return v * v * v * v + 2.0 * a * v;
            case Kind::custom:
                switch (custom) {
                    case Custom::exp_minus_5v: return std::exp(v) - 5.0 * v;
                }
        }
        return 0.0; // unreachable
    }

    static Nonlinearity izhikevich(double a) { return {Kind::izhikevich, a, {}}; }
    static Nonlinearity adex() { return {Kind::adex, 0.0, {}}; }
    static Nonlinearity quartic(double a) { return {Kind::quartic, a, {}}; }
    static Nonlinearity custom_preset(Custom c) { return {Kind::custom, 0.0, c}; }
};

/// Spike rate lambda(v): strictly positive and nondecreasing in v.
/// Only the two forms exercised by the model family are supported; both have
/// the monotone structure the thinning bound relies on.
struct RateFunction {
    enum class Kind { exp, shifted_exp };

    Kind kind = Kind::exp;
    double c = 0.0;   // additive floor, >= 0 (shifted_exp)
    double v0 = 0.0;  // horizontal shift (shifted_exp)

    double operator()(double v) const {
        if (kind == Kind::exp) return std::exp(v);
        return c + std::exp(v - v0);
    }

    static RateFunction exp_rate() { return {Kind::exp, 0.0, 0.0}; }
    static RateFunction shifted_exp(double c, double v0) {
        if (c < 0.0) throw config_error("RateFunction: floor c must be >= 0");
        return {Kind::shifted_exp, c, v0};
    }
};

/// Complete parameter set of the neuron model.
struct ModelParams {
    Nonlinearity nonlinearity;
    RateFunction rate;
    double I = 0.0;        // input current
    double tau_w = 1.0;    // adaptation time constant, > 0
    double b = 0.0;        // adaptation coupling
    double J = 0.0;        // synaptic strength (excitatory, >= 0 exercised)
    double v_reset = 0.0;  // membrane potential after a spike
    double w_jump = 1.0;   // adaptation increment per spike, > 0

    void validate() const {
        if (!(tau_w > 0.0)) throw config_error("ModelParams: tau_w must be > 0");
        if (!(w_jump > 0.0))
            throw config_error(
                "ModelParams: w_jump must be > 0 (the jump discretisation assumes "
                "an upward adaptation shift; negative shifts are not supported)");
    }
};

struct DriftValue {
    double dv = 0.0;
    double dw = 0.0;
};

/// Planar drift field; psi is the population firing rate entering through the
/// coupling term (pass 0 for an isolated neuron or for the particle system,
/// where interaction acts through jumps instead).
inline DriftValue drift(const ModelParams& p, double v, double w, double psi) {
    return {p.nonlinearity(v) - w + p.I + p.J * psi, (p.b * v - w) / p.tau_w};
}

/// Named parameter sets used by the bundled experiments.
inline ModelParams preset_params(const std::string& name) {
    ModelParams p;
    if (name == "cv_test") {
        p.nonlinearity = Nonlinearity::custom_preset(Nonlinearity::Custom::exp_minus_5v);
        p.rate = RateFunction::shifted_exp(0.1, 1.0);
        p.I = 2.0;
        p.tau_w = 1.0;
        p.b = 1.0;
        p.J = 3.1;
        p.v_reset = 1.0;
        p.w_jump = 1.5;
    } else if (name == "invariant_a") {
        p.nonlinearity = Nonlinearity::adex();
        p.rate = RateFunction::exp_rate();
        p.I = -2.0;
        p.tau_w = 2.0;
        p.b = 1.0;
        p.J = 0.0;
        p.v_reset = 1.8;
        p.w_jump = 5.5;
    } else if (name == "invariant_b") {
        p.nonlinearity = Nonlinearity::adex();
        p.rate = RateFunction::exp_rate();
        p.I = 1.0;
        p.tau_w = 2.0;
        p.b = 0.05;
        p.J = 0.0;
        p.v_reset = 1.8;
        p.w_jump = 1.5;
    } else if (name == "hopf") {
        p.nonlinearity = Nonlinearity::adex();
        p.rate = RateFunction::exp_rate();
        p.I = 0.0;
        p.tau_w = 13.0;
        p.b = 0.011;
        p.J = 5.0;
        p.v_reset = -1.5;
        p.w_jump = 1.5;
    } else {
        throw config_error("unknown parameter preset '" + name + "'");
    }
    return p;
}

inline const std::vector<std::string>& preset_names() {
    static const std::vector<std::string> names = {"cv_test", "invariant_a",
                                                   "invariant_b", "hopf"};
    return names;
}

} // namespace snn
