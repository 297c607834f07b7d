#pragma once

#include <algorithm>
#include <array>
#include <cmath>

#include "snn/errors.hpp"

namespace snn {

using Vec2 = std::array<double, 2>;

struct OdeOptions {
    double rtol = 1e-10;
    double atol = 1e-12;
    double h_init = 1e-3;
    double h_min = 1e-14;
    std::size_t max_steps = 2'000'000;
};

namespace detail {

/// One Dormand-Prince 5(4) step. Returns the 5th-order solution and writes the
/// embedded error estimate.
template <typename F>
Vec2 dopri5_step(F&& f, const Vec2& y, double t, double h, Vec2& err) {
    const Vec2 k1 = f(t, y);
    auto axpy = [&](std::initializer_list<std::pair<double, const Vec2*>> terms) {
        Vec2 out = y;
        for (auto& [c, k] : terms) {
            out[0] += h * c * (*k)[0];
            out[1] += h * c * (*k)[1];
        }
        return out;
    };
    const Vec2 k2 = f(t + h / 5.0, axpy({{1.0 / 5, &k1}}));
    const Vec2 k3 = f(t + 3.0 * h / 10.0, axpy({{3.0 / 40, &k1}, {9.0 / 40, &k2}}));
    const Vec2 k4 =
        f(t + 4.0 * h / 5.0, axpy({{44.0 / 45, &k1}, {-56.0 / 15, &k2}, {32.0 / 9, &k3}}));
    const Vec2 k5 = f(t + 8.0 * h / 9.0, axpy({{19372.0 / 6561, &k1},
                                               {-25360.0 / 2187, &k2},
                                               {64448.0 / 6561, &k3},
                                               {-212.0 / 729, &k4}}));
    const Vec2 k6 = f(t + h, axpy({{9017.0 / 3168, &k1},
                                   {-355.0 / 33, &k2},
                                   {46732.0 / 5247, &k3},
                                   {49.0 / 176, &k4},
                                   {-5103.0 / 18656, &k5}}));
    const Vec2 y5 = axpy({{35.0 / 384, &k1},
                          {500.0 / 1113, &k3},
                          {125.0 / 192, &k4},
                          {-2187.0 / 6784, &k5},
                          {11.0 / 84, &k6}});
    const Vec2 k7 = f(t + h, y5);
    // difference between the 5th- and embedded 4th-order solutions
    static constexpr std::array<double, 7> e = {
        35.0 / 384 - 5179.0 / 57600,   0.0,
        500.0 / 1113 - 7571.0 / 16695, 125.0 / 192 - 393.0 / 640,
        -2187.0 / 6784 + 92097.0 / 339200, 11.0 / 84 - 187.0 / 2100,
        -1.0 / 40};
    err[0] = h * (e[0] * k1[0] + e[2] * k3[0] + e[3] * k4[0] + e[4] * k5[0] +
                  e[5] * k6[0] + e[6] * k7[0]);
    err[1] = h * (e[0] * k1[1] + e[2] * k3[1] + e[3] * k4[1] + e[4] * k5[1] +
                  e[5] * k6[1] + e[6] * k7[1]);
    return y5;
}

} // namespace detail

/// Integrate y' = f(t, y) from t0 to t0+duration with adaptive Dormand-Prince
/// steps; observer(t, y, h_taken) is called after every accepted step. The
/// observer may return false to stop early.
template <typename F, typename Obs>
Vec2 integrate_ode(F&& f, Vec2 y, double t0, double duration, const OdeOptions& opt,
                   Obs&& observer) {
    if (duration <= 0.0) return y;
    double t = t0;
    const double t_end = t0 + duration;
    double h = std::min(opt.h_init, duration);
    for (std::size_t iter = 0; iter < opt.max_steps; ++iter) {
        if (t >= t_end - 1e-15 * std::max(1.0, std::abs(t_end))) return y;
        h = std::min(h, t_end - t);
        Vec2 err;
        Vec2 y_new = detail::dopri5_step(f, y, t, h, err);
        double scale0 = opt.atol + opt.rtol * std::max(std::abs(y[0]), std::abs(y_new[0]));
        double scale1 = opt.atol + opt.rtol * std::max(std::abs(y[1]), std::abs(y_new[1]));
        double en = std::sqrt(0.5 * ((err[0] / scale0) * (err[0] / scale0) +
                                     (err[1] / scale1) * (err[1] / scale1)));
        if (en <= 1.0 || h <= opt.h_min) {
            double h_taken = h;
            t += h;
            y = y_new;
            double grow = (en > 0.0) ? 0.9 * std::pow(en, -0.2) : 5.0;
            h *= std::clamp(grow, 0.2, 5.0);
            if (!observer(t, y, h_taken)) return y;
        } else {
            h *= std::max(0.2, 0.9 * std::pow(en, -0.2));
            if (h < opt.h_min) h = opt.h_min;
        }
        if (!std::isfinite(y[0]) || !std::isfinite(y[1]) || !std::isfinite(h))
            throw numerical_error("integrate_ode: solution became non-finite");
    }
    throw numerical_error("integrate_ode: step limit exceeded");
}

template <typename F>
Vec2 integrate_ode(F&& f, const Vec2& y, double t0, double duration,
                   const OdeOptions& opt = {}) {
    return integrate_ode(f, y, t0, duration, opt,
                         [](double, const Vec2&, double) { return true; });
}

} // namespace snn
