#pragma once

#include <cmath>
#include <cstddef>
#include <span>
#include <vector>

#include "snn/errors.hpp"

namespace snn {

/// Compensated (Neumaier) accumulator. Sums of many small nonnegative terms
/// (masses, l1 norms) must not drift with the cell count.
class kahan_sum {
public:
    void add(double x) {
        double t = sum_ + x;
        if (std::abs(sum_) >= std::abs(x))
            comp_ += (sum_ - t) + x;
        else
            comp_ += (x - t) + sum_;
        sum_ = t;
    }
    double value() const { return sum_ + comp_; }

private:
    double sum_ = 0.0;
    double comp_ = 0.0;
};

inline double compensated_sum(std::span<const double> xs) {
    kahan_sum s;
    for (double x : xs) s.add(x);
    return s.value();
}

inline double l1_norm(std::span<const double> xs) {
    kahan_sum s;
    for (double x : xs) s.add(std::abs(x));
    return s.value();
}

inline double l1_distance(std::span<const double> a, std::span<const double> b) {
    kahan_sum s;
    for (std::size_t i = 0; i < a.size(); ++i) s.add(std::abs(a[i] - b[i]));
    return s.value();
}

/// Slope and intercept of the least-squares line y = slope*x + intercept.
struct line_fit {
    double slope = 0.0;
    double intercept = 0.0;
};

inline line_fit fit_line(std::span<const double> x, std::span<const double> y) {
    if (x.size() != y.size() || x.size() < 2)
        throw config_error("fit_line: need at least two matching points");
    double n = static_cast<double>(x.size());
    double sx = 0, sy = 0, sxx = 0, sxy = 0;
    for (std::size_t i = 0; i < x.size(); ++i) {
        sx += x[i];
        sy += y[i];
        sxx += x[i] * x[i];
        sxy += x[i] * y[i];
    }
    double denom = n * sxx - sx * sx;
    if (denom == 0.0) throw config_error("fit_line: degenerate abscissae");
    line_fit f;
    f.slope = (n * sxy - sx * sy) / denom;
    f.intercept = (sy - f.slope * sx) / n;
    return f;
}

/// Piecewise-linear interpolation of (xs, ys) at query point q. xs must be
/// strictly increasing; q is clamped to the table range.
inline double lerp_at(std::span<const double> xs, std::span<const double> ys, double q) {
    if (xs.empty() || xs.size() != ys.size())
        throw config_error("lerp_at: empty or mismatched table");
    if (q <= xs.front()) return ys.front();
    if (q >= xs.back()) return ys.back();
    std::size_t lo = 0, hi = xs.size() - 1;
    while (hi - lo > 1) {
        std::size_t mid = (lo + hi) / 2;
        (xs[mid] <= q ? lo : hi) = mid;
    }
    double t = (q - xs[lo]) / (xs[hi] - xs[lo]);
    return ys[lo] + t * (ys[hi] - ys[lo]);
}

/// Resample a sampled curve onto a uniform grid of n points over [t0, t1].
inline std::vector<double> resample_uniform(std::span<const double> ts,
                                            std::span<const double> ys,
                                            double t0, double t1, std::size_t n) {
    std::vector<double> out(n);
    for (std::size_t k = 0; k < n; ++k) {
        double t = t0 + (t1 - t0) * static_cast<double>(k) / static_cast<double>(n - 1);
        out[k] = lerp_at(ts, ys, t);
    }
    return out;
}

/// CDF of the standard normal distribution.
inline double normal_cdf(double x) { return 0.5 * std::erfc(-x / std::sqrt(2.0)); }

} // namespace snn
