#pragma once

// CIR parameter types, derived coefficients and the exact transition sampler.
//
//   dy_t = k (theta - y_t) dt + xi sqrt(y_t) dW_t

#include <cmath>
#include <limits>
#include <random>
#include <stdexcept>
#include <string>

namespace cirexp {

inline constexpr double kInf = std::numeric_limits<double>::infinity();

class CirParams {
public:
    CirParams(double k, double theta, double xi, double y0)
        : k_(k), theta_(theta), xi_(xi), y0_(y0)
    {
        check("k", k);
        check("theta", theta);
        check("xi", xi);
        check("y0", y0);
    }

    double k() const noexcept { return k_; }
    double theta() const noexcept { return theta_; }
    double xi() const noexcept { return xi_; }
    double y0() const noexcept { return y0_; }

    /// Strict positivity of the exact process: 2 k theta > xi^2.
    bool feller() const noexcept { return 2.0 * k_ * theta_ > xi_ * xi_; }

    CirParams with_k(double k) const { return {k, theta_, xi_, y0_}; }
    CirParams with_xi(double xi) const { return {k_, theta_, xi, y0_}; }

private:
    static void check(const char* name, double v)
    {
        if (!(v > 0.0) || !std::isfinite(v))
            throw std::invalid_argument(std::string("CirParams: ") + name + " must be finite and > 0");
    }

    double k_, theta_, xi_, y0_;
};

/// Exponent pair of the functional exp{lambda int y du + mu int sqrt(y) dW}.
/// delta = lambda + mu^2/2 is always recomputed, never stored.
class FunctionalCoeffs {
public:
    constexpr FunctionalCoeffs(double lambda, double mu) noexcept : lambda_(lambda), mu_(mu) {}

    constexpr double lambda() const noexcept { return lambda_; }
    constexpr double mu() const noexcept { return mu_; }
    constexpr double delta() const noexcept { return lambda_ + 0.5 * mu_ * mu_; }

private:
    double lambda_, mu_;
};

inline constexpr FunctionalCoeffs derive_functional_coeffs(double lambda, double mu) noexcept
{
    return {lambda, mu};
}

/// Coefficients of the SDE for x = sqrt(y):  dx = (alpha/x + beta x) dt + gamma dW.
struct SqrtCoeffs {
    double alpha;
    double beta;
    double gamma;
};

inline SqrtCoeffs sqrt_coeffs(const CirParams& p) noexcept
{
    return {(4.0 * p.k() * p.theta() - p.xi() * p.xi()) / 8.0, -0.5 * p.k(), 0.5 * p.xi()};
}

/// Draw y_{t+dt} | y_t = y from the exact CIR law: a scaled noncentral chi-squared,
/// sampled as a Poisson mixture of central chi-squared (gamma) variates.
template <class Urbg>
double sample_exact_transition(const CirParams& p, double y, double dt, Urbg& rng)
{
    if (!(dt > 0.0))
        throw std::invalid_argument("sample_exact_transition: dt must be > 0");
    if (!(y >= 0.0))
        throw std::invalid_argument("sample_exact_transition: y must be >= 0");

    const double decay = std::exp(-p.k() * dt);
    const double scale = p.xi() * p.xi() * (1.0 - decay) / (4.0 * p.k());
    const double dof = 4.0 * p.k() * p.theta() / (p.xi() * p.xi());
    const double noncentrality = y * decay / scale;

    long mixing = 0;
    if (noncentrality > 0.0) {
        std::poisson_distribution<long> poisson(0.5 * noncentrality);
        mixing = poisson(rng);
    }
    // chi^2_nu = 2 Gamma(nu/2, 1)
    std::gamma_distribution<double> gamma(0.5 * dof + static_cast<double>(mixing), 1.0);
    return scale * 2.0 * gamma(rng);
}

} // namespace cirexp
