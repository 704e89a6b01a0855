#pragma once

// Moment explosion of exp{lambda int y du + mu int sqrt(y) dW} for the CIR
// process and its Euler discretizations: closed-form critical times, the
// eta-feasibility quadratics behind the scheme bounds, admissible step sizes,
// the proven moment bounds, and a Riccati-ODE numeric oracle.

#include "core.hpp"
#include "ode.hpp"
#include "schemes.hpp"

#include <algorithm>
#include <cmath>
#include <numbers>
#include <optional>
#include <stdexcept>
#include <string>

namespace cirexp {

/// Critical time (possibly +inf), the formula branch that produced it, and
/// nu / nu-hat when that branch defines one.
struct ExplosionTime {
    double value;
    std::string case_label;
    std::optional<double> aux;

    bool finite() const noexcept { return std::isfinite(value); }
};

class ExplosionError : public std::domain_error {
public:
    using std::domain_error::domain_error;
};

namespace detail {

// Relative slack for boundary comparisons that are exact in real arithmetic.
inline constexpr double kBoundarySlack = 64.0 * std::numeric_limits<double>::epsilon();

inline ExplosionTime no_explosion() { return {kInf, "nonpositive-delta", std::nullopt}; }

} // namespace detail

// ---------------------------------------------------------------------------
// Exact process
// ---------------------------------------------------------------------------

/// Critical time of E[Theta_T] for the exact CIR process. With
/// b = mu xi - k and s = sqrt(2 Delta):
///   k <  xi(mu - s)             real roots:    (1/nu) log((b + nu)/(b - nu))
///   k == xi(mu - s)             double root:   2/b
///   xi(mu - s) < k < xi(mu + s) complex roots: (2/nu^)(pi/2 - atan(b/nu^))
///   k >= xi(mu + s)             no explosion
inline ExplosionTime exact_explosion_time(const CirParams& p, const FunctionalCoeffs& f)
{
    const double delta = f.delta();
    if (delta <= 0.0)
        return detail::no_explosion();

    const double k = p.k(), xi = p.xi(), mu = f.mu();
    const double s = std::sqrt(2.0 * delta);
    const double b = mu * xi - k;

    if (k < xi * (mu - s)) {
        const double nu = std::sqrt(b * b - 2.0 * xi * xi * delta);
        // log((b+nu)/(b-nu)) == 2 atanh(nu/b), stable as nu -> 0
        return {2.0 * std::atanh(nu / b) / nu, "real-roots", nu};
    }
    if (k == xi * (mu - s))
        return {2.0 / b, "double-root", std::nullopt};
    if (k < xi * (mu + s)) {
        const double nu_hat = std::sqrt(2.0 * xi * xi * delta - b * b);
        // pi/2 - atan(b/nu^) == atan2(nu^, b) for nu^ > 0
        return {2.0 * std::atan2(nu_hat, b) / nu_hat, "complex-roots", nu_hat};
    }
    return {kInf, "mean-reversion-dominates", std::nullopt};
}

// ---------------------------------------------------------------------------
// Scheme lower bounds
// ---------------------------------------------------------------------------

namespace detail {

// Shared by the truncation family (mu as is) and reflection (|mu|).
inline ExplosionTime truncation_bound(const CirParams& p, double mu, double delta, const char* prefix)
{
    const double k = p.k(), xi = p.xi();
    if (k <= xi * (mu + std::sqrt(0.5 * delta)))
        return {1.0 / (xi * (mu + std::sqrt(2.0 * delta)) - k), std::string(prefix) + ":vol-dominated",
                std::nullopt};
    return {2.0 * (k - mu * xi) / (xi * xi * delta), std::string(prefix) + ":drift-dominated",
            std::nullopt};
}

} // namespace detail

/// Lower bound on the explosion time of E[Theta-bar_T] for a scheme.
inline ExplosionTime scheme_explosion_bound(SchemeKind kind, const CirParams& p, const FunctionalCoeffs& f)
{
    const double delta = f.delta();
    if (delta <= 0.0)
        return detail::no_explosion();

    const double mu = f.mu(), lambda = f.lambda(), xi = p.xi();
    switch (kind) {
    case SchemeKind::BEM:
        if (mu < 0.0 && lambda < 1.5 * mu * mu)
            return {-2.0 * mu / (xi * delta), "bem:negative-mu", std::nullopt};
        return {1.0 / (xi * (mu + std::sqrt(2.0 * delta))), "bem:general", std::nullopt};
    case SchemeKind::REF:
        return detail::truncation_bound(p, std::abs(mu), delta, "ref");
    case SchemeKind::PTE:
    case SchemeKind::FTE:
    case SchemeKind::ABS:
    case SchemeKind::SYM:
        return detail::truncation_bound(p, mu, delta, "trunc");
    }
    throw std::invalid_argument("unknown scheme kind");
}

// ---------------------------------------------------------------------------
// Riccati system and numeric oracle
// ---------------------------------------------------------------------------

/// G' = a G^2 + b G + c,  H' = k theta G,  G(0) = H(0) = 0,
/// obtained with the reparameterisation lambda^ = mu/xi, mu^ = lambda + mu k/xi.
struct RiccatiCoeffs {
    double a;
    double b;
    double c;
    double lambda_hat;
    double mu_hat;
};

inline RiccatiCoeffs riccati_coeffs(const CirParams& p, const FunctionalCoeffs& f) noexcept
{
    const double xi = p.xi(), k = p.k();
    const double lambda_hat = f.mu() / xi;
    const double mu_hat = f.lambda() + f.mu() * k / xi;
    return {0.5 * xi * xi, f.mu() * xi - k, f.delta(), lambda_hat, mu_hat};
}

/// Real roots of a x^2 + b x + c, larger first; nullopt when complex.
inline std::optional<std::pair<double, double>> riccati_roots(const RiccatiCoeffs& r) noexcept
{
    const double disc = r.b * r.b - 4.0 * r.a * r.c;
    if (disc < 0.0)
        return std::nullopt;
    const double sq = std::sqrt(disc);
    return std::pair{(-r.b + sq) / (2.0 * r.a), (-r.b - sq) / (2.0 * r.a)};
}

struct RiccatiOptions {
    double rtol = 1e-10;
    double atol = 1e-12;
    double blowup_threshold = 1e8;
    double min_step = 1e-14;
};

struct RiccatiSolution {
    bool blew_up;
    double tau; // horizon when finite, detection time otherwise
    double G;
    double H;
};

inline RiccatiSolution solve_riccati(const CirParams& p, const FunctionalCoeffs& f, double horizon,
                                     const RiccatiOptions& opt = {})
{
    if (!(horizon > 0.0))
        throw std::invalid_argument("solve_riccati: horizon must be > 0");
    const RiccatiCoeffs rc = riccati_coeffs(p, f);
    const double k_theta = p.k() * p.theta();
    auto rhs = [&](double, const ode::State<2>& y) {
        const double g = y[0];
        return ode::State<2>{(rc.a * g + rc.b) * g + rc.c, k_theta * g};
    };
    ode::Tolerances tol;
    tol.rtol = opt.rtol;
    tol.atol = opt.atol;
    tol.blowup_threshold = opt.blowup_threshold;
    tol.min_step = opt.min_step;
    tol.monitored = 1;
    const auto sol = ode::integrate<2>(rhs, {0.0, 0.0}, 0.0, horizon, tol);
    return {sol.outcome != ode::Outcome::Completed, sol.t, sol.y[0], sol.y[1]};
}

/// Blow-up time of G located by bisection on the integration horizon to
/// `rel_tol`; anything beyond `cap` is reported as +inf.
inline ExplosionTime riccati_blowup_time(const CirParams& p, const FunctionalCoeffs& f,
                                         double cap = 1e3, double rel_tol = 1e-6,
                                         const RiccatiOptions& opt = {})
{
    if (f.delta() <= 0.0)
        return {kInf, "riccati:bounded", std::nullopt};

    const RiccatiSolution full = solve_riccati(p, f, cap, opt);
    if (!full.blew_up)
        return {kInf, "riccati:capped", std::nullopt};

    auto blows_up = [&](double horizon) { return solve_riccati(p, f, horizon, opt).blew_up; };
    double hi = full.tau;
    while (!blows_up(hi))
        hi *= 1.0 + 1e-6;
    double lo = 0.5 * hi;
    while (lo > 0.0 && blows_up(lo))
        lo *= 0.5;
    while (hi - lo > rel_tol * hi) {
        const double mid = 0.5 * (lo + hi);
        (blows_up(mid) ? hi : lo) = mid;
    }
    return {hi, "riccati:pole", std::nullopt};
}

/// E[Theta_T] = exp{G(T) y0 + H(T)} for the exact process (the lambda^ terms
/// of the reparameterisation cancel). Throws ExplosionError for T >= T*.
inline double semi_analytic_functional(const CirParams& p, const FunctionalCoeffs& f, double horizon,
                                       const RiccatiOptions& opt = {})
{
    if (!(horizon > 0.0))
        throw std::invalid_argument("semi_analytic_functional: horizon must be > 0");
    const ExplosionTime t_star = exact_explosion_time(p, f);
    if (horizon >= t_star.value)
        throw ExplosionError("semi_analytic_functional: horizon beyond the explosion time");
    const RiccatiSolution s = solve_riccati(p, f, horizon, opt);
    if (s.blew_up)
        throw ExplosionError("semi_analytic_functional: Riccati solution blew up before the horizon");
    return std::exp(s.G * p.y0() + s.H);
}

// ---------------------------------------------------------------------------
// eta-feasibility
// ---------------------------------------------------------------------------

/// BemStrict:   2 eta^2 w^2 Delta gamma^2 T^2 + 2 eta w gamma mu T - eta + 1 <  0,  eta > 1
/// Truncation:  eta^2 w^2 xi^2 Delta T^2 - 2 eta w (k - mu xi) T - 2 eta + 2 <= 0,  eta >= 1
/// required for every w in [0, 1].
enum class EtaLemma { BemStrict, Truncation };

struct EtaInterval {
    double lower = 1.0;
    double upper = 1.0;
    EtaLemma lemma = EtaLemma::Truncation;
    bool empty = true;

    /// Open (lower, upper) for BemStrict, closed [lower, upper] for Truncation.
    bool contains(double eta) const noexcept
    {
        if (empty)
            return false;
        const double slack = detail::kBoundarySlack * std::max(1.0, std::abs(upper));
        if (lemma == EtaLemma::BemStrict)
            return eta > lower && eta < upper;
        return eta >= lower - slack && eta <= upper + slack;
    }
};

/// The lemma polynomial in w for fixed (eta, T).
inline double lemma_polynomial(EtaLemma lemma, const CirParams& p, const FunctionalCoeffs& f,
                               double horizon, double eta, double w)
{
    const double delta = f.delta(), xi = p.xi(), mu = f.mu();
    if (lemma == EtaLemma::BemStrict) {
        const double gamma = 0.5 * xi;
        return 2.0 * w * w * eta * eta * delta * gamma * gamma * horizon * horizon +
               2.0 * w * eta * gamma * mu * horizon - (eta - 1.0);
    }
    return w * w * eta * eta * xi * xi * delta * horizon * horizon -
           2.0 * w * eta * (p.k() - mu * xi) * horizon - 2.0 * (eta - 1.0);
}

/// Set of eta for which the lemma inequality holds on all of [0, 1]. The
/// polynomial has roots of opposite sign in w, so this reduces to the value
/// at w = 1, a quadratic in eta whose roots give the interval.
inline EtaInterval eta_feasible(EtaLemma lemma, const CirParams& p, const FunctionalCoeffs& f,
                                double horizon)
{
    const double delta = f.delta();
    if (!(delta > 0.0))
        throw std::invalid_argument("eta_feasible: requires Delta > 0");
    if (!(horizon > 0.0))
        throw std::invalid_argument("eta_feasible: requires T > 0");

    const double xi = p.xi(), mu = f.mu(), T = horizon;
    double qa, qb, qc;
    if (lemma == EtaLemma::BemStrict) {
        qa = 0.5 * delta * xi * xi * T * T; // 2 Delta gamma^2 T^2
        qb = -(1.0 - mu * xi * T);
        qc = 1.0;
    } else {
        qa = xi * xi * delta * T * T;
        qb = -2.0 * (1.0 + (p.k() - mu * xi) * T);
        qc = 2.0;
    }

    EtaInterval out;
    out.lemma = lemma;
    // qa, qc > 0: roots share the sign of -qb, so qb >= 0 leaves nothing above 1
    if (qb >= 0.0)
        return out;
    const double slack = detail::kBoundarySlack;
    double disc = qb * qb - 4.0 * qa * qc;
    if (lemma == EtaLemma::BemStrict) {
        if (disc <= slack * qb * qb)
            return out;
    } else {
        if (disc < -slack * qb * qb)
            return out;
        disc = std::max(disc, 0.0);
    }
    const double q = 0.5 * (-qb + std::sqrt(disc));
    const double r_hi = q / qa;
    const double r_lo = qc / q;

    if (lemma == EtaLemma::BemStrict) {
        if (r_hi <= 1.0 + slack)
            return out;
    } else if (r_hi < 1.0 - slack) {
        return out;
    }
    out.lower = std::max(r_lo, 1.0);
    out.upper = std::max(r_hi, out.lower);
    out.empty = false;
    return out;
}

/// Lemma and effective coefficients backing a scheme's bound (reflection
/// works with |mu|).
inline std::pair<EtaLemma, FunctionalCoeffs> lemma_for(SchemeKind kind, const FunctionalCoeffs& f)
{
    switch (kind) {
    case SchemeKind::BEM: return {EtaLemma::BemStrict, f};
    case SchemeKind::REF: return {EtaLemma::Truncation, FunctionalCoeffs(f.lambda(), std::abs(f.mu()))};
    default: return {EtaLemma::Truncation, f};
    }
}

inline EtaInterval eta_feasible(SchemeKind kind, const CirParams& p, const FunctionalCoeffs& f,
                                double horizon)
{
    const auto [lemma, eff] = lemma_for(kind, f);
    return eta_feasible(lemma, p, eff, horizon);
}

enum class EtaChoice { LowerEndpoint, MinimizeBound, MaximizeStep };

// ---------------------------------------------------------------------------
// Step-size constraints and proven bounds
// ---------------------------------------------------------------------------

namespace detail {

// (max{0+, x})^{-1}: no constraint when x <= 0.
inline double inv_positive(double x) noexcept { return x > 0.0 ? 1.0 / x : kInf; }

inline constexpr double kSqrt2Factor = (std::numbers::sqrt2 - 1.0) / std::numbers::sqrt2;

// Maximiser of a scalar function on [lo, hi]; endpoints are always compared
// so a convex f still yields its true maximum.
template <class F>
double golden_section_argmax(F&& fn, double lo, double hi, double tol = 1e-10)
{
    const double inv_phi = (std::sqrt(5.0) - 1.0) / 2.0;
    double a = lo, b = hi;
    double c = b - inv_phi * (b - a), d = a + inv_phi * (b - a);
    double fc = fn(c), fd = fn(d);
    while (b - a > tol) {
        if (fc >= fd) {
            b = d; d = c; fd = fc;
            c = b - inv_phi * (b - a); fc = fn(c);
        } else {
            a = c; c = d; fc = fd;
            d = a + inv_phi * (b - a); fd = fn(d);
        }
    }
    double best = 0.5 * (a + b);
    for (double x : {lo, hi})
        if (fn(x) > fn(best))
            best = x;
    return best;
}

inline void require_feasible(SchemeKind kind, const CirParams& p, const FunctionalCoeffs& f,
                             double horizon, double eta)
{
    if (!eta_feasible(kind, p, f, horizon).contains(eta))
        throw std::invalid_argument("eta is not feasible for this scheme and horizon");
}

} // namespace detail

/// nu_y = sqrt( xi^2/(2 pi) + sqrt(xi^4 + 2 k^2 theta^2)/(2 pi) )
inline double nu_y(const CirParams& p) noexcept
{
    const double xi2 = p.xi() * p.xi();
    const double kt = p.k() * p.theta();
    return std::sqrt((xi2 + std::sqrt(xi2 * xi2 + 2.0 * kt * kt)) / (2.0 * std::numbers::pi));
}

/// Largest step size delta_T for which the scheme's moment bound is proven,
/// for a feasible eta. +inf when no constraint is active.
inline double max_stable_step(SchemeKind kind, const CirParams& p, const FunctionalCoeffs& f,
                              double horizon, double eta)
{
    const double delta = f.delta();
    if (delta <= 0.0)
        return kInf;
    detail::require_feasible(kind, p, f, horizon, eta);

    using detail::inv_positive;
    using detail::kSqrt2Factor;
    const double k = p.k(), xi = p.xi(), mu = f.mu(), lambda = f.lambda(), T = horizon;
    double bound = kInf;
    auto cap = [&bound](double v) { bound = std::min(bound, v); };

    switch (kind) {
    case SchemeKind::BEM: {
        const double gamma = 0.5 * xi;
        const double g2 = gamma * gamma;
        cap(1.0 / (2.0 * eta * delta * g2 * T));
        cap(inv_positive(-mu) / gamma);
        cap((std::sqrt(5.0) - 1.0) / 4.0 / (eta * delta * g2 * T));
        auto poly = [&](double w) {
            return lemma_polynomial(EtaLemma::BemStrict, p, f, T, eta, w);
        };
        const double w0 = detail::golden_section_argmax(poly, 0.0, 1.0);
        cap(-poly(w0) / (2.0 * eta * (eta * delta - lambda) * g2 * T));
        break;
    }
    case SchemeKind::PTE:
        cap(1.0 / k);
        [[fallthrough]];
    case SchemeKind::FTE:
    case SchemeKind::ABS:
        cap(inv_positive(k - mu * xi));
        cap(kSqrt2Factor * inv_positive(k - mu * xi));
        break;
    case SchemeKind::REF:
    case SchemeKind::SYM: {
        const double shift = eta * xi * xi * delta * T;
        cap(inv_positive(k - mu * xi));
        cap(inv_positive(k - mu * xi + shift));
        cap(kSqrt2Factor * inv_positive(k - mu * xi + shift));
        if (kind == SchemeKind::REF) {
            // negative states only occur for reflection
            cap(inv_positive(k + mu * xi));
            cap(kSqrt2Factor * inv_positive(k + mu * xi + shift));
        }
        break;
    }
    }
    return bound;
}

/// Proven upper bound on sup_{dt < delta_T} E[Theta-bar_T]:
///   BEM                exp{eta Delta T^2 (alpha + 4 gamma^2) + eta Delta T y0}
///   PTE / FTE / ABS    exp{eta Delta T^2 (k theta +   nu_y xi)/2 + eta Delta T y0}
///   REF / SYM          exp{eta Delta T^2 (k theta + 2 nu_y xi)/2 + eta Delta T y0}
/// Returns 1 for Delta <= 0, where the supremum is attained at t = 0.
inline double moment_upper_bound(SchemeKind kind, const CirParams& p, const FunctionalCoeffs& f,
                                 double horizon, double eta)
{
    const double delta = f.delta();
    if (delta <= 0.0)
        return 1.0;
    detail::require_feasible(kind, p, f, horizon, eta);

    const double T = horizon;
    const double linear = eta * delta * T * p.y0();
    double quad;
    switch (kind) {
    case SchemeKind::BEM: {
        const SqrtCoeffs c = sqrt_coeffs(p);
        quad = eta * delta * T * T * (c.alpha + 4.0 * c.gamma * c.gamma);
        break;
    }
    case SchemeKind::REF:
    case SchemeKind::SYM:
        quad = 0.5 * eta * delta * T * T * (p.k() * p.theta() + 2.0 * nu_y(p) * p.xi());
        break;
    default:
        quad = 0.5 * eta * delta * T * T * (p.k() * p.theta() + nu_y(p) * p.xi());
        break;
    }
    return std::exp(quad + linear);
}

/// eta used for the moment bound. Endpoints are nudged inside the open BEM
/// interval. MaximizeStep trades a larger bound for a usable step size.
inline double select_eta(SchemeKind kind, const CirParams& p, const FunctionalCoeffs& f, double horizon,
                         EtaChoice choice = EtaChoice::LowerEndpoint)
{
    const EtaInterval iv = eta_feasible(kind, p, f, horizon);
    if (iv.empty)
        throw ExplosionError("select_eta: no feasible eta at this horizon");
    const double nudge = iv.lemma == EtaLemma::BemStrict ? std::min(1e-9, 0.5 * (iv.upper - iv.lower)) : 0.0;
    const double lo = iv.lower + nudge;
    if (choice == EtaChoice::LowerEndpoint)
        return lo;
    const double hi = iv.upper - nudge;
    if (choice == EtaChoice::MaximizeStep) {
        auto step = [&](double eta) { return max_stable_step(kind, p, f, horizon, eta); };
        return detail::golden_section_argmax(step, lo, hi);
    }
    auto neg_log_bound = [&](double eta) { return -std::log(moment_upper_bound(kind, p, f, horizon, eta)); };
    return detail::golden_section_argmax(neg_log_bound, lo, hi);
}

// ---------------------------------------------------------------------------

enum class SupremumLocation { AtZeroValueOne, AtTerminal };

/// Where sup_t E[Theta-bar_t] sits, for any scheme.
constexpr SupremumLocation supremum_location(const FunctionalCoeffs& f) noexcept
{
    return f.delta() <= 0.0 ? SupremumLocation::AtZeroValueOne : SupremumLocation::AtTerminal;
}

} // namespace cirexp
