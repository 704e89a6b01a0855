#pragma once

// Adaptive Dormand-Prince 5(4) integrator for small fixed-size systems, with
// a user threshold for detecting finite-time blow-up (movable poles).

#include <algorithm>
#include <array>
#include <cmath>
#include <cstddef>
#include <initializer_list>
#include <limits>
#include <utility>

namespace cirexp::ode {

template <std::size_t N>
using State = std::array<double, N>;

struct Tolerances {
    double rtol = 1e-10;
    double atol = 1e-12;
    double min_step = 1e-14;
    double blowup_threshold = 1e8;
    // blow-up is checked on components [0, monitored)
    std::size_t monitored = std::numeric_limits<std::size_t>::max();
};

enum class Outcome { Completed, ThresholdExceeded, StepUnderflow };

template <std::size_t N>
struct Solution {
    Outcome outcome;
    double t;   // time reached (== horizon when Completed)
    State<N> y; // state at t
    std::size_t accepted_steps;
};

namespace detail {

// Butcher tableau of the Dormand-Prince pair (FSAL, 7 stages).
inline constexpr double c2 = 1.0 / 5, c3 = 3.0 / 10, c4 = 4.0 / 5, c5 = 8.0 / 9;
inline constexpr double a21 = 1.0 / 5;
inline constexpr double a31 = 3.0 / 40, a32 = 9.0 / 40;
inline constexpr double a41 = 44.0 / 45, a42 = -56.0 / 15, a43 = 32.0 / 9;
inline constexpr double a51 = 19372.0 / 6561, a52 = -25360.0 / 2187, a53 = 64448.0 / 6561,
                        a54 = -212.0 / 729;
inline constexpr double a61 = 9017.0 / 3168, a62 = -355.0 / 33, a63 = 46732.0 / 5247,
                        a64 = 49.0 / 176, a65 = -5103.0 / 18656;
inline constexpr double b1 = 35.0 / 384, b3 = 500.0 / 1113, b4 = 125.0 / 192,
                        b5 = -2187.0 / 6784, b6 = 11.0 / 84;
// b(5th) - b(4th)
inline constexpr double e1 = 71.0 / 57600, e3 = -71.0 / 16695, e4 = 71.0 / 1920,
                        e5 = -17253.0 / 339200, e6 = 22.0 / 525, e7 = -1.0 / 40;

template <std::size_t N>
State<N> axpy(const State<N>& y, double h, std::initializer_list<std::pair<double, const State<N>*>> terms)
{
    State<N> out = y;
    for (const auto& [coef, k] : terms)
        for (std::size_t i = 0; i < N; ++i)
            out[i] += h * coef * (*k)[i];
    return out;
}

} // namespace detail

/// Integrate y' = f(t, y) from t0 to t1 (> t0). Stops early when any
/// component exceeds `tol.blowup_threshold` in magnitude or when the
/// accepted step would fall below `tol.min_step`.
template <std::size_t N, class Rhs>
Solution<N> integrate(Rhs&& f, State<N> y, double t0, double t1, const Tolerances& tol = {})
{
    using namespace detail;
    double t = t0;
    double h = std::min(1e-3 * std::max(1.0, t1 - t0), t1 - t0);
    State<N> k1 = f(t, y);
    std::size_t accepted = 0;

    while (t < t1) {
        if (t + h > t1)
            h = t1 - t;
        const State<N> k2 = f(t + c2 * h, axpy<N>(y, h, {{a21, &k1}}));
        const State<N> k3 = f(t + c3 * h, axpy<N>(y, h, {{a31, &k1}, {a32, &k2}}));
        const State<N> k4 = f(t + c4 * h, axpy<N>(y, h, {{a41, &k1}, {a42, &k2}, {a43, &k3}}));
        const State<N> k5 =
            f(t + c5 * h, axpy<N>(y, h, {{a51, &k1}, {a52, &k2}, {a53, &k3}, {a54, &k4}}));
        const State<N> k6 =
            f(t + h, axpy<N>(y, h, {{a61, &k1}, {a62, &k2}, {a63, &k3}, {a64, &k4}, {a65, &k5}}));
        const State<N> y5 =
            axpy<N>(y, h, {{b1, &k1}, {b3, &k3}, {b4, &k4}, {b5, &k5}, {b6, &k6}});
        const State<N> k7 = f(t + h, y5);

        double err = 0.0;
        bool finite = true;
        for (std::size_t i = 0; i < N; ++i) {
            const double ei =
                h * (e1 * k1[i] + e3 * k3[i] + e4 * k4[i] + e5 * k5[i] + e6 * k6[i] + e7 * k7[i]);
            const double scale = tol.atol + tol.rtol * std::max(std::abs(y[i]), std::abs(y5[i]));
            err = std::max(err, std::abs(ei) / scale);
            finite = finite && std::isfinite(y5[i]);
        }
        if (!finite)
            err = std::numeric_limits<double>::infinity();

        if (err <= 1.0) {
            t = (t1 - t <= h) ? t1 : t + h;
            y = y5;
            k1 = k7;
            ++accepted;
            for (std::size_t i = 0; i < std::min(N, tol.monitored); ++i)
                if (std::abs(y[i]) > tol.blowup_threshold)
                    return {Outcome::ThresholdExceeded, t, y, accepted};
        }
        const double factor =
            err == 0.0 ? 5.0 : std::clamp(0.9 * std::pow(err, -0.2), 0.2, 5.0);
        h *= factor;
        if (t < t1 && h < tol.min_step)
            return {Outcome::StepUnderflow, t, y, accepted};
    }
    return {Outcome::Completed, t, y, accepted};
}

} // namespace cirexp::ode
