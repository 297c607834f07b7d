#pragma once

#include <cmath>
#include <numbers>
#include <utility>

#include "snn/errors.hpp"
#include "snn/numeric.hpp"
#include "snn/rng.hpp"

namespace snn {

/// Initial law of a single neuron (v, w). Gaussian components are independent
/// with standard deviations sigma1 (v) and sigma2 (w).
struct InitialCondition {
    enum class Kind { gaussian, point_mass };

    Kind kind = Kind::gaussian;
    double mu1 = 0.0, mu2 = 0.0;      // means (gaussian) or location (point mass)
    double sigma1 = 1.0, sigma2 = 1.0;

    static InitialCondition gaussian(double mu1, double mu2, double sigma1, double sigma2) {
        if (!(sigma1 > 0.0) || !(sigma2 > 0.0))
            throw config_error("InitialCondition: gaussian sigmas must be > 0");
        return {Kind::gaussian, mu1, mu2, sigma1, sigma2};
    }
    static InitialCondition point_mass(double v0, double w0) {
        return {Kind::point_mass, v0, w0, 1.0, 1.0};
    }

    /// Density value at (v, w); a point mass has no density (used only through
    /// sampling and cell-indicator mass below).
    double density(double v, double w) const {
        if (kind != Kind::gaussian)
            throw config_error("InitialCondition: point mass has no density");
        double zv = (v - mu1) / sigma1;
        double zw = (w - mu2) / sigma2;
        return std::exp(-0.5 * (zv * zv + zw * zw)) /
               (2.0 * std::numbers::pi * sigma1 * sigma2);
    }

    /// Probability mass inside the axis-aligned box.
    double mass_in_box(double v_lo, double v_hi, double w_lo, double w_hi) const {
        if (kind == Kind::point_mass)
            return (mu1 >= v_lo && mu1 <= v_hi && mu2 >= w_lo && mu2 <= w_hi) ? 1.0 : 0.0;
        double pv = normal_cdf((v_hi - mu1) / sigma1) - normal_cdf((v_lo - mu1) / sigma1);
        double pw = normal_cdf((w_hi - mu2) / sigma2) - normal_cdf((w_lo - mu2) / sigma2);
        return pv * pw;
    }

    /// One i.i.d. sample drawn from the stream's given counter slot.
    std::pair<double, double> sample(const rng_stream& rng, std::uint64_t counter) const {
        if (kind == Kind::point_mass) return {mu1, mu2};
        auto [z1, z2] = rng.normal2(counter);
        return {mu1 + sigma1 * z1, mu2 + sigma2 * z2};
    }
};

} // namespace snn
