#pragma once

// Moments E[S_T^omega] of the Heston model
//   dS = r S dt + sqrt(v) S dW^s,   dv = k(theta - v) dt + xi sqrt(v) dW^v,   d<W^s, W^v> = rho dt
// through the exponential functional of the variance process.

#include "core.hpp"
#include "explosion.hpp"
#include "montecarlo.hpp"
#include "schemes.hpp"

#include <algorithm>
#include <cmath>
#include <span>
#include <stdexcept>
#include <vector>

namespace cirexp {

struct HestonParams {
    double S0;
    double r;
    CirParams v;
    double rho;

    HestonParams(double s0, double rate, CirParams variance, double correlation)
        : S0(s0), r(rate), v(variance), rho(correlation)
    {
        if (!(s0 > 0.0))
            throw std::invalid_argument("HestonParams: S0 must be > 0");
        if (!(rate >= 0.0))
            throw std::invalid_argument("HestonParams: r must be >= 0");
        if (!(std::abs(correlation) <= 1.0))
            throw std::invalid_argument("HestonParams: |rho| must be <= 1");
    }
};

/// Conditioning on the variance path:
///   E[S_T^w] = S0^w E[exp{w r T + lambda int v dt + mu int sqrt(v) dW^v}]
/// with lambda = w(w-1)/2 - w^2 rho^2/2 and mu = w rho, so Delta = w(w-1)/2.
constexpr FunctionalCoeffs moment_coeffs(double omega, double rho) noexcept
{
    return {0.5 * omega * (omega - 1.0) - 0.5 * omega * omega * rho * rho, omega * rho};
}

inline ExplosionTime heston_explosion_time(const HestonParams& h, double omega)
{
    return exact_explosion_time(h.v, moment_coeffs(omega, h.rho));
}

struct CriticalCorrelation {
    double value;        // unclamped
    bool in_unit_range;  // value in [-1, 1]

    double clamped() const noexcept { return std::clamp(value, -1.0, 1.0); }
};

/// Largest rho with no moment explosion: rho* = (k/xi - sqrt(w(w-1)))/w.
inline CriticalCorrelation critical_correlation(const HestonParams& h, double omega)
{
    if (!(omega > 1.0))
        throw std::invalid_argument("critical_correlation: omega must be > 1");
    const double rho = (h.v.k() / h.v.xi() - std::sqrt(omega * (omega - 1.0))) / omega;
    return {rho, rho >= -1.0 && rho <= 1.0};
}

enum class HestonEstimator {
    Conditional, // S0^w e^{w r T} E[Theta-bar_T]
    Joint,       // simulate log S alongside v, raise S_T to w
};

namespace detail {

inline McEstimate scale_estimate(McEstimate e, double log_factor)
{
    e.log_mean += log_factor;
    e.mean = std::exp(e.log_mean);
    e.std_error *= std::exp(log_factor);
    e.max_log_weight += log_factor;
    return e;
}

} // namespace detail

/// Monte Carlo estimate of E[S_T^omega] (and at cfg.record_grid times).
inline McResult estimate_heston_moment(const HestonParams& h, double omega, SchemeKind kind, const GridSpec& g,
                                       const McConfig& cfg,
                                       HestonEstimator estimator = HestonEstimator::Conditional)
{
    const FunctionalCoeffs f = moment_coeffs(omega, h.rho);
    McResult res;
    if (estimator == HestonEstimator::Conditional) {
        res = estimate_exp_functional(kind, h.v, f, g, cfg);
    } else {
        const std::vector<int> rec = detail::record_indices(cfg.record_grid, g);
        const double rho = h.rho, rho_perp = std::sqrt(std::max(0.0, 1.0 - rho * rho));
        const double dt = g.dt(), sqdt = std::sqrt(dt);
        auto acc = with_scheme(kind, [&](auto tag) {
            const Stepper<decltype(tag)::value> stepper(h.v, dt);
            return run_paths(cfg, rec.size() + 1, [&](std::size_t path, double sign, std::span<double> out) {
                NormalStream wv(cfg.seed, path, 0, sign);
                NormalStream ws(cfg.seed, path, 1, sign);
                double v = stepper.initial();
                double log_s = 0.0; // log(S/S0) - r t
                for (std::size_t j = 0; j < rec.size(); ++j)
                    if (rec[j] == 0)
                        out[j] = 0.0;
                for (int n = 0; n < g.steps(); ++n) {
                    const double vbar = stepper.interpolant(v);
                    const double dwv = sqdt * wv();
                    const double dws = rho_perp > 0.0 ? sqdt * ws() : 0.0;
                    log_s += -0.5 * vbar * dt + std::sqrt(vbar) * (rho * dwv + rho_perp * dws);
                    v = stepper.step(v, dwv);
                    for (std::size_t j = 0; j < rec.size(); ++j)
                        if (rec[j] == n + 1)
                            out[j] = omega * log_s;
                }
                out[rec.size()] = omega * log_s;
            });
        });
        res = detail::collect(acc, cfg, cfg.record_grid);
    }

    // deterministic prefactor S0^w e^{w r t}
    const double log_s0 = omega * std::log(h.S0);
    res.terminal = detail::scale_estimate(res.terminal, log_s0 + omega * h.r * g.horizon());
    for (std::size_t j = 0; j < res.at_records.size(); ++j)
        res.at_records[j] = detail::scale_estimate(res.at_records[j], log_s0 + omega * h.r * res.record_times[j]);
    return res;
}

} // namespace cirexp
