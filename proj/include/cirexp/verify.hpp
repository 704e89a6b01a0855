#pragma once

// Self-check suites run by `cirexp verify`. Each draws its cases from a fixed
// master seed, so a report is reproducible.

#include "core.hpp"
#include "explosion.hpp"
#include "montecarlo.hpp"
#include "schemes.hpp"

#include <cmath>
#include <cstdint>
#include <random>
#include <sstream>
#include <string>
#include <string_view>
#include <vector>

namespace cirexp::verify {

inline constexpr std::uint64_t kMasterSeed = 20240607;

struct Report {
    std::string suite;
    int total = 0;
    int passed = 0;
    std::vector<std::string> failures;

    bool ok() const noexcept { return total > 0 && passed == total; }

    void check(bool cond, const std::string& what)
    {
        ++total;
        if (cond)
            ++passed;
        else
            failures.push_back(what);
    }
};

struct Case {
    CirParams p;
    FunctionalCoeffs f;
};

/// Random parameter set with Delta > 0: k in [0.05, 3], xi in [0.05, 2],
/// mu in [-3, 3], lambda in (-mu^2/2, 5].
inline Case draw_case(std::mt19937_64& rng)
{
    std::uniform_real_distribution<double> k(0.05, 3.0), xi(0.05, 2.0), mu(-3.0, 3.0), u(0.0, 1.0);
    const double m = mu(rng);
    const double lo = -0.5 * m * m;
    double lambda;
    do
        lambda = lo + (5.0 - lo) * u(rng);
    while (!(lambda > lo));
    return {CirParams(k(rng), 0.12, xi(rng), 0.12), FunctionalCoeffs(lambda, m)};
}

namespace detail {

inline std::string describe(const Case& c)
{
    std::ostringstream os;
    os.precision(17);
    os << "k=" << c.p.k() << " xi=" << c.p.xi() << " lambda=" << c.f.lambda() << " mu=" << c.f.mu();
    return os.str();
}

} // namespace detail

/// Numeric Riccati pole against the closed-form critical time on 100 cases.
inline Report riccati_suite(int cases = 100, double rel_tol = 1e-3, double cap = 1e3)
{
    Report r{"riccati", 0, 0, {}};
    std::mt19937_64 rng(kMasterSeed);
    for (int i = 0; i < cases; ++i) {
        const Case c = draw_case(rng);
        const double exact = exact_explosion_time(c.p, c.f).value;
        const double numeric = riccati_blowup_time(c.p, c.f, cap).value;
        const bool exact_finite = exact < cap;
        bool ok;
        if (exact_finite != std::isfinite(numeric))
            ok = false;
        else
            ok = !exact_finite || std::abs(numeric - exact) <= rel_tol * exact;
        r.check(ok, detail::describe(c) + ": closed form " + std::to_string(exact) + ", numeric " +
                        std::to_string(numeric));
    }
    return r;
}

/// Grid search for an eta making the lemma polynomial hold on every w of a
/// uniform grid. Independent of the closed-form interval.
inline bool eta_grid_feasible(EtaLemma lemma, const CirParams& p, const FunctionalCoeffs& f, double horizon,
                              int eta_points = 4001, int w_points = 1001)
{
    for (int i = 0; i < eta_points; ++i) {
        const double u = -8.0 + 12.0 * i / (eta_points - 1);
        const double eta = 1.0 + std::pow(10.0, u);
        bool all = true;
        for (int j = 0; j < w_points && all; ++j) {
            const double w = static_cast<double>(j) / (w_points - 1);
            const double v = lemma_polynomial(lemma, p, f, horizon, eta, w);
            all = lemma == EtaLemma::BemStrict ? v < 0.0 : v <= 0.0;
        }
        if (all)
            return true;
    }
    return false;
}

/// eta-feasibility straddles each scheme bound: nonempty at 0.99 T, empty at
/// 1.01 T, in agreement with a brute-force (eta, w) grid.
inline Report eta_suite(int cases = 20)
{
    Report r{"eta", 0, 0, {}};
    std::mt19937_64 rng(kMasterSeed + 1);
    for (int i = 0; i < cases; ++i) {
        const Case c = draw_case(rng);
        for (SchemeKind kind : {SchemeKind::BEM, SchemeKind::FTE}) {
            const double bound = scheme_explosion_bound(kind, c.p, c.f).value;
            const auto [lemma, eff] = lemma_for(kind, c.f);
            const std::string tag = detail::describe(c) + " " + std::string(to_string(kind));
            const double below = 0.99 * bound, above = 1.01 * bound;
            r.check(!eta_feasible(kind, c.p, c.f, below).empty, tag + ": empty at 0.99 T");
            r.check(eta_feasible(kind, c.p, c.f, above).empty, tag + ": nonempty at 1.01 T");
            r.check(eta_grid_feasible(lemma, c.p, eff, below), tag + ": grid finds no eta at 0.99 T");
            r.check(!eta_grid_feasible(lemma, c.p, eff, above), tag + ": grid finds eta at 1.01 T");
        }
    }
    return r;
}

/// Monotonicity of t -> E[Theta-bar_t] for every scheme: nondecreasing for
/// Delta > 0, nonincreasing and at most 1 for Delta < 0, within 3 stderr.
inline Report monotone_suite(std::size_t paths = 20000)
{
    Report r{"monotone", 0, 0, {}};
    const CirParams p(0.4, 0.12, 0.3, 0.12);
    const GridSpec g(1.0, 100);
    McConfig cfg;
    cfg.paths = paths;
    cfg.seed = kMasterSeed + 2;
    for (int n = 0; n <= 10; ++n)
        cfg.record_grid.push_back(0.1 * n);

    for (const FunctionalCoeffs f : {FunctionalCoeffs(-1.0, 1.0), FunctionalCoeffs(0.5, 0.0)}) {
        const bool increasing = f.delta() > 0.0;
        for (SchemeKind kind : kAllSchemes) {
            const McResult res = estimate_exp_functional(kind, p, f, g, cfg);
            const std::string tag = std::string(to_string(kind)) + (increasing ? " delta>0" : " delta<0");
            bool ok = true;
            for (std::size_t j = 1; j < res.at_records.size(); ++j) {
                const McEstimate& a = res.at_records[j - 1];
                const McEstimate& b = res.at_records[j];
                const double tol = 3.0 * std::hypot(a.std_error, b.std_error);
                ok = ok && (increasing ? b.mean >= a.mean - tol : b.mean <= a.mean + tol);
                if (!increasing)
                    ok = ok && b.mean <= 1.0 + 3.0 * b.std_error;
            }
            r.check(ok, tag + ": monotonicity violated");
        }
    }
    return r;
}

/// Monte Carlo estimates sit below the proven moment bounds for steps within
/// the admissible range.
inline Report bounds_suite(std::size_t paths = 20000)
{
    Report r{"bounds", 0, 0, {}};
    struct Config {
        SchemeKind kind;
        CirParams p;
        FunctionalCoeffs f;
        double fraction; // of the scheme bound
    };
    const CirParams base(0.4, 0.12, 0.3, 0.12), other(1.0, 0.2, 0.5, 0.3);
    const std::vector<Config> configs{
        {SchemeKind::PTE, base, {0.5, 0.5}, 0.5},  {SchemeKind::FTE, base, {0.5, 0.5}, 0.5},
        {SchemeKind::ABS, base, {0.5, 0.5}, 0.5},  {SchemeKind::REF, base, {0.5, 0.5}, 0.5},
        {SchemeKind::SYM, base, {0.5, 0.5}, 0.5},  {SchemeKind::BEM, base, {0.5, 0.5}, 0.5},
        {SchemeKind::FTE, other, {1.0, -0.5}, 0.8}, {SchemeKind::REF, other, {1.0, -0.5}, 0.8},
        {SchemeKind::BEM, other, {1.0, -0.5}, 0.8}, {SchemeKind::BEM, base, {-1.0, 2.0}, 0.9},
    };
    McConfig cfg;
    cfg.paths = paths;
    cfg.seed = kMasterSeed + 3;
    for (const Config& c : configs) {
        const double horizon = c.fraction * scheme_explosion_bound(c.kind, c.p, c.f).value;
        const double eta = select_eta(c.kind, c.p, c.f, horizon, EtaChoice::MaximizeStep);
        const double dt_max = max_stable_step(c.kind, c.p, c.f, horizon, eta);
        const int steps = std::max(10, static_cast<int>(std::ceil(horizon / std::min(0.01, 0.5 * dt_max))));
        const double bound = moment_upper_bound(c.kind, c.p, c.f, horizon, eta);
        const McEstimate e = estimate_exp_functional(c.kind, c.p, c.f, GridSpec(horizon, steps), cfg).terminal;
        r.check(e.mean - 3.0 * e.std_error <= bound,
                std::string(to_string(c.kind)) + ": estimate " + std::to_string(e.mean) + " above bound " +
                    std::to_string(bound));
    }
    return r;
}

inline const std::vector<std::string_view>& suite_names()
{
    static const std::vector<std::string_view> names{"riccati", "eta", "monotone", "bounds"};
    return names;
}

inline Report run_suite(std::string_view name)
{
    if (name == "riccati")
        return riccati_suite();
    if (name == "eta")
        return eta_suite();
    if (name == "monotone")
        return monotone_suite();
    if (name == "bounds")
        return bounds_suite();
    throw std::invalid_argument("unknown verify suite '" + std::string(name) + "'");
}

} // namespace cirexp::verify
