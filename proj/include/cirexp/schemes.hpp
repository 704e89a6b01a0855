#pragma once

// Euler-type discretizations of the CIR process on a uniform grid, each with
// its piecewise-constant non-negative interpolant Ybar.
//
//   PTE  y' = y + k(theta - y) dt + xi sqrt(y+) dW           Ybar = y+
//   FTE  y' = y + k(theta - y+) dt + xi sqrt(y+) dW          Ybar = y+
//   ABS  y' = y+ + k(theta - y+) dt + xi sqrt(y+) dW         Ybar = y+
//   REF  y' = y + k(theta - y) dt + xi sqrt(|y|) dW          Ybar = |y|
//   SYM  y' = |y + k(theta - y) dt + xi sqrt(y) dW|          Ybar = y
//   BEM  x' = x + (alpha/x' + beta x') dt + gamma dW         Ybar = x^2
//        (drift-implicit in x = sqrt(y), solved in closed form)

#include "core.hpp"
#include "rng.hpp"

#include <algorithm>
#include <array>
#include <cctype>
#include <cmath>
#include <cstdint>
#include <optional>
#include <stdexcept>
#include <string>
#include <string_view>
#include <type_traits>
#include <vector>

namespace cirexp {

enum class SchemeKind { PTE, FTE, ABS, REF, SYM, BEM };

inline constexpr std::array<SchemeKind, 6> kAllSchemes{
    SchemeKind::PTE, SchemeKind::FTE, SchemeKind::ABS,
    SchemeKind::REF, SchemeKind::SYM, SchemeKind::BEM};

constexpr std::string_view to_string(SchemeKind kind) noexcept
{
    switch (kind) {
    case SchemeKind::PTE: return "pte";
    case SchemeKind::FTE: return "fte";
    case SchemeKind::ABS: return "abs";
    case SchemeKind::REF: return "ref";
    case SchemeKind::SYM: return "sym";
    case SchemeKind::BEM: return "bem";
    }
    return "?";
}

inline std::optional<SchemeKind> parse_scheme(std::string_view name)
{
    std::string lower(name);
    std::transform(lower.begin(), lower.end(), lower.begin(),
                   [](unsigned char c) { return static_cast<char>(std::tolower(c)); });
    for (auto kind : kAllSchemes)
        if (to_string(kind) == lower)
            return kind;
    return std::nullopt;
}

/// Raw scheme state: y~ for explicit schemes, x~ = sqrt(y) for BEM.
struct SchemeState {
    double raw;
};

class GridSpec {
public:
    GridSpec(double horizon, int steps) : horizon_(horizon), steps_(steps)
    {
        if (!(horizon > 0.0) || !std::isfinite(horizon))
            throw std::invalid_argument("GridSpec: horizon must be finite and > 0");
        if (steps <= 0)
            throw std::invalid_argument("GridSpec: number of steps must be > 0");
    }

    /// Grid with step as close to `dt` as possible that lands exactly on `horizon`.
    static GridSpec from_step(double horizon, double dt)
    {
        if (!(dt > 0.0))
            throw std::invalid_argument("GridSpec: dt must be > 0");
        const double n = std::round(horizon / dt);
        return GridSpec(horizon, static_cast<int>(std::max(1.0, n)));
    }

    double horizon() const noexcept { return horizon_; }
    int steps() const noexcept { return steps_; }
    double dt() const noexcept { return horizon_ / steps_; }
    double time(int n) const noexcept { return n == steps_ ? horizon_ : n * dt(); }

private:
    double horizon_;
    int steps_;
};

/// Interpolant values and Brownian increments at the left endpoints t_0..t_{N-1}.
struct PathRecord {
    std::vector<double> interpolant;
    std::vector<double> increments;
};

/// One-step map for a fixed scheme, parameters and step size. Coefficients
/// that depend only on (p, dt) are computed once here.
template <SchemeKind Kind>
class Stepper {
public:
    static constexpr SchemeKind kind = Kind;

    Stepper(const CirParams& p, double dt)
        : k_(p.k()), theta_(p.theta()), xi_(p.xi()), dt_(dt), y0_(p.y0())
    {
        if (!(dt > 0.0))
            throw std::invalid_argument("Stepper: dt must be > 0");
        if constexpr (Kind == SchemeKind::BEM) {
            if (!p.feller())
                throw std::invalid_argument("BEM scheme requires the Feller condition 2 k theta > xi^2");
            const SqrtCoeffs c = sqrt_coeffs(p);
            const double denom = 1.0 - c.beta * dt;
            gamma_ = c.gamma;
            half_inv_denom_ = 0.5 / denom;
            root_shift_ = c.alpha * dt / denom;
        }
    }

    double initial() const noexcept
    {
        if constexpr (Kind == SchemeKind::BEM)
            return std::sqrt(y0_);
        else
            return y0_;
    }

    double step(double y, double dw) const noexcept
    {
        if constexpr (Kind == SchemeKind::PTE) {
            return y + k_ * (theta_ - y) * dt_ + xi_ * std::sqrt(std::max(y, 0.0)) * dw;
        } else if constexpr (Kind == SchemeKind::FTE) {
            const double yp = std::max(y, 0.0);
            return y + k_ * (theta_ - yp) * dt_ + xi_ * std::sqrt(yp) * dw;
        } else if constexpr (Kind == SchemeKind::ABS) {
            const double yp = std::max(y, 0.0);
            return yp + k_ * (theta_ - yp) * dt_ + xi_ * std::sqrt(yp) * dw;
        } else if constexpr (Kind == SchemeKind::REF) {
            return y + k_ * (theta_ - y) * dt_ + xi_ * std::sqrt(std::abs(y)) * dw;
        } else if constexpr (Kind == SchemeKind::SYM) {
            return std::abs(y + k_ * (theta_ - y) * dt_ + xi_ * std::sqrt(y) * dw);
        } else {
            // Positive root of (1 - beta dt) x'^2 - (x + gamma dW) x' - alpha dt = 0.
            const double half = (y + gamma_ * dw) * half_inv_denom_;
            const double r = std::sqrt(half * half + root_shift_);
            // For half << 0 use the conjugate form to avoid cancellation.
            return half >= 0.0 ? half + r : root_shift_ / (r - half);
        }
    }

    static double interpolant(double y) noexcept
    {
        if constexpr (Kind == SchemeKind::REF)
            return std::abs(y);
        else if constexpr (Kind == SchemeKind::SYM)
            return y;
        else if constexpr (Kind == SchemeKind::BEM)
            return y * y;
        else
            return std::max(y, 0.0);
    }

    double dt() const noexcept { return dt_; }

private:
    double k_, theta_, xi_, dt_, y0_;
    double gamma_ = 0.0, half_inv_denom_ = 0.0, root_shift_ = 0.0;
};

/// Calls `f(std::integral_constant<SchemeKind, K>{})` for the runtime kind.
template <class F>
decltype(auto) with_scheme(SchemeKind kind, F&& f)
{
    using C = SchemeKind;
    switch (kind) {
    case C::PTE: return f(std::integral_constant<C, C::PTE>{});
    case C::FTE: return f(std::integral_constant<C, C::FTE>{});
    case C::ABS: return f(std::integral_constant<C, C::ABS>{});
    case C::REF: return f(std::integral_constant<C, C::REF>{});
    case C::SYM: return f(std::integral_constant<C, C::SYM>{});
    case C::BEM: return f(std::integral_constant<C, C::BEM>{});
    }
    throw std::invalid_argument("unknown scheme kind");
}

inline SchemeState step(SchemeKind kind, const CirParams& p, SchemeState s, double dt, double dw)
{
    if (kind == SchemeKind::BEM && !(s.raw > 0.0))
        throw std::invalid_argument("BEM step requires a strictly positive state");
    if (kind == SchemeKind::SYM && !(s.raw >= 0.0))
        throw std::invalid_argument("SYM step requires a non-negative state");
    return with_scheme(kind, [&](auto tag) {
        return SchemeState{Stepper<decltype(tag)::value>(p, dt).step(s.raw, dw)};
    });
}

inline double interpolant(SchemeKind kind, SchemeState s)
{
    return with_scheme(kind, [&](auto tag) { return Stepper<decltype(tag)::value>::interpolant(s.raw); });
}

inline SchemeState initial_state(SchemeKind kind, const CirParams& p)
{
    return {kind == SchemeKind::BEM ? std::sqrt(p.y0()) : p.y0()};
}

/// Path of (Ybar, dW) driven by the normal stream of (seed, stream_id).
inline PathRecord simulate_path(SchemeKind kind, const CirParams& p, const GridSpec& g,
                                std::uint64_t seed, std::uint64_t stream_id)
{
    return with_scheme(kind, [&](auto tag) {
        const Stepper<decltype(tag)::value> stepper(p, g.dt());
        NormalStream normals(seed, stream_id);
        const double sqdt = std::sqrt(g.dt());
        PathRecord rec;
        rec.interpolant.reserve(g.steps());
        rec.increments.reserve(g.steps());
        double y = stepper.initial();
        for (int n = 0; n < g.steps(); ++n) {
            const double dw = sqdt * normals();
            rec.interpolant.push_back(stepper.interpolant(y));
            rec.increments.push_back(dw);
            y = stepper.step(y, dw);
        }
        return rec;
    });
}

} // namespace cirexp
