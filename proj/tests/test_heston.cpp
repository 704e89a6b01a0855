#include <cirexp/heston.hpp>

#include <gtest/gtest.h>

#include <cmath>
#include <random>

using namespace cirexp;

namespace {

const CirParams kVar(0.4, 0.12, 0.3, 0.12);

HestonParams heston(double rho, double s0 = 1.0, double r = 0.0, CirParams v = kVar)
{
    return {s0, r, v, rho};
}

} // namespace

TEST(HestonParams, Validation)
{
    EXPECT_NO_THROW(heston(1.0));
    EXPECT_NO_THROW(heston(-1.0));
    EXPECT_THROW(heston(1.0001), std::invalid_argument);
    EXPECT_THROW(heston(0.0, 0.0), std::invalid_argument);
    EXPECT_THROW(heston(0.0, 1.0, -0.01), std::invalid_argument);
}

TEST(MomentCoeffs, Examples)
{
    const FunctionalCoeffs a = moment_coeffs(2.0, 1.0);
    EXPECT_DOUBLE_EQ(a.lambda(), -1.0);
    EXPECT_DOUBLE_EQ(a.mu(), 2.0);
    EXPECT_DOUBLE_EQ(a.delta(), 1.0);
    EXPECT_DOUBLE_EQ(moment_coeffs(1.0, 0.3).delta(), 0.0);
    const FunctionalCoeffs c = moment_coeffs(2.0, 0.5);
    EXPECT_DOUBLE_EQ(c.lambda(), 0.5);
    EXPECT_DOUBLE_EQ(c.mu(), 1.0);
    EXPECT_DOUBLE_EQ(c.delta(), 1.0);
}

TEST(MomentCoeffs, DeltaIndependentOfRho)
{
    std::mt19937_64 rng(1);
    std::uniform_real_distribution<double> w(-3.0, 5.0), r(-1.0, 1.0);
    for (int i = 0; i < 1000; ++i) {
        const double omega = w(rng);
        EXPECT_NEAR(moment_coeffs(omega, r(rng)).delta(), 0.5 * omega * (omega - 1.0),
                    1e-12 * std::max(1.0, omega * omega));
    }
}

TEST(HestonExplosion, Examples)
{
    EXPECT_NEAR(heston_explosion_time(heston(1.0), 2.0).value, 5.77, 0.01);
    EXPECT_EQ(heston_explosion_time(heston(1.0), 1.0).value, kInf);
    EXPECT_EQ(heston_explosion_time(heston(-0.5), 2.0).value, kInf);
    // k >= xi (omega rho + sqrt(2 Delta)) holds for rho = -0.5
    EXPECT_GE(0.4, 0.3 * (2.0 * -0.5 + std::sqrt(2.0)));
}

TEST(HestonExplosion, PrefactorNeverMatters)
{
    EXPECT_EQ(heston_explosion_time(heston(0.5, 7.0, 0.3), 2.0).value, heston_explosion_time(heston(0.5), 2.0).value);
}

TEST(HestonExplosion, DivergesAsOmegaApproachesOne)
{
    // xi rho > k keeps T* finite for every omega > 1; growth is logarithmic in 1/(omega - 1)
    const CirParams v = kVar.with_xi(1.0);
    double prev = 0.0;
    for (double eps : {1e-1, 1e-2, 1e-3, 1e-6, 1e-9}) {
        const double t = heston_explosion_time(heston(0.9, 1.0, 0.0, v), 1.0 + eps).value;
        ASSERT_TRUE(std::isfinite(t));
        EXPECT_GT(t, prev);
        prev = t;
    }
    const double a = heston_explosion_time(heston(0.9, 1.0, 0.0, v), 1.0 + 1e-6).value;
    EXPECT_GT(prev - a, 3.0 * 3.0); // at least 3 per decade
}

TEST(CriticalCorrelation, ReferenceValue)
{
    const CriticalCorrelation c = critical_correlation(heston(0.0), 2.0);
    EXPECT_NEAR(c.value, (4.0 / 3.0 - std::sqrt(2.0)) / 2.0, 1e-15);
    EXPECT_NEAR(c.value, -0.0404, 0.001);
    EXPECT_TRUE(c.in_unit_range);
}

TEST(CriticalCorrelation, ZeroOnBoundary)
{
    for (double omega : {1.5, 2.0, 4.0}) {
        const CirParams v(0.3 * std::sqrt(omega * (omega - 1.0)), 0.12, 0.3, 0.12);
        EXPECT_NEAR(critical_correlation(heston(0.0, 1.0, 0.0, v), omega).value, 0.0, 1e-15);
    }
}

TEST(CriticalCorrelation, MatchesBisectionOnFiniteness)
{
    for (double omega : {1.5, 2.0, 3.0}) {
        double lo = -1.0, hi = 1.0; // inf at lo, finite at hi
        ASSERT_EQ(heston_explosion_time(heston(lo), omega).value, kInf);
        ASSERT_TRUE(heston_explosion_time(heston(hi), omega).finite());
        while (hi - lo > 1e-9) {
            const double mid = 0.5 * (lo + hi);
            (heston_explosion_time(heston(mid), omega).finite() ? hi : lo) = mid;
        }
        const double rho_star = critical_correlation(heston(0.0), omega).value;
        EXPECT_NEAR(lo, rho_star, 1e-6);
        EXPECT_EQ(heston_explosion_time(heston(rho_star), omega).value, kInf);
        EXPECT_TRUE(heston_explosion_time(heston(rho_star + 1e-6), omega).finite());
    }
}

TEST(CriticalCorrelation, RejectsOmegaAtMostOneAndReportsClamp)
{
    EXPECT_THROW(critical_correlation(heston(0.0), 1.0), std::invalid_argument);
    const CirParams fast(5.0, 0.12, 0.3, 0.12);
    const CriticalCorrelation c = critical_correlation(heston(0.0, 1.0, 0.0, fast), 2.0);
    EXPECT_FALSE(c.in_unit_range);
    EXPECT_EQ(c.clamped(), 1.0);
}

TEST(HestonSweeps, MonotoneInParameters)
{
    auto all = [](const CirParams& v, double rho) {
        const FunctionalCoeffs f = moment_coeffs(2.0, rho);
        std::vector<double> out{exact_explosion_time(v, f).value};
        for (SchemeKind k : kAllSchemes)
            out.push_back(scheme_explosion_bound(k, v, f).value);
        return out;
    };
    // REF works with |mu|, so its bound is monotone in rho only for rho >= 0
    const std::size_t ref_column = 4;
    auto check = [&](const std::vector<double>& a, const std::vector<double>& b, bool increasing, const char* axis,
                     bool skip_ref = false) {
        for (std::size_t i = 0; i < a.size(); ++i) {
            if ((std::isinf(a[i]) && std::isinf(b[i])) || (skip_ref && i == ref_column))
                continue;
            if (increasing) {
                EXPECT_LE(a[i], b[i] * (1.0 + 1e-12)) << axis << " column " << i;
            } else {
                EXPECT_GE(a[i] * (1.0 + 1e-12), b[i]) << axis << " column " << i;
            }
        }
    };
    for (int i = 0; i < 10; ++i) {
        const double r0 = -1.0 + 0.2 * i, r1 = r0 + 0.2;
        check(all(kVar, r0), all(kVar, r1), false, "rho", r0 < -1e-12);
        const double k0 = 0.1 + 0.19 * i, k1 = k0 + 0.19;
        check(all(kVar.with_k(k0), 0.5), all(kVar.with_k(k1), 0.5), true, "k");
        const double x0 = 0.1 + 0.09 * i, x1 = x0 + 0.09;
        check(all(kVar.with_xi(x0), 0.5), all(kVar.with_xi(x1), 0.5), false, "xi");
    }
}

TEST(EstimateHestonMoment, FirstMomentIsForward)
{
    const double s0 = 2.0, r = 0.05;
    McConfig cfg;
    cfg.paths = 20000;
    cfg.seed = 3;
    cfg.record_grid = {0.5, 1.0};
    for (SchemeKind k : {SchemeKind::FTE, SchemeKind::BEM})
        for (HestonEstimator est : {HestonEstimator::Conditional, HestonEstimator::Joint}) {
            const McResult res = estimate_heston_moment(heston(-0.7, s0, r), 1.0, k, GridSpec(1.0, 50), cfg, est);
            for (std::size_t j = 0; j < 2; ++j) {
                const double fwd = s0 * std::exp(r * res.record_times[j]);
                EXPECT_NEAR(res.at_records[j].mean, fwd, 3.0 * res.at_records[j].std_error + 1e-12);
            }
        }
}

TEST(EstimateHestonMoment, ConditionalAndJointAgree)
{
    McConfig cfg;
    cfg.paths = 30000;
    cfg.seed = 4;
    const GridSpec g(1.0, 1000);
    const McEstimate a = estimate_heston_moment(heston(0.5), 2.0, SchemeKind::FTE, g, cfg).terminal;
    const McEstimate b =
        estimate_heston_moment(heston(0.5), 2.0, SchemeKind::FTE, g, cfg, HestonEstimator::Joint).terminal;
    EXPECT_NEAR(a.mean, b.mean, 3.0 * std::hypot(a.std_error, b.std_error));
}

TEST(EstimateHestonMoment, PerfectCorrelationEstimatorsCoincidePathwise)
{
    McConfig cfg;
    cfg.paths = 2000;
    cfg.seed = 5;
    const GridSpec g(2.0, 100);
    const McEstimate a = estimate_heston_moment(heston(1.0), 2.0, SchemeKind::BEM, g, cfg).terminal;
    const McEstimate b =
        estimate_heston_moment(heston(1.0), 2.0, SchemeKind::BEM, g, cfg, HestonEstimator::Joint).terminal;
    EXPECT_NEAR(a.mean, b.mean, 1e-12 * a.mean);
    EXPECT_NEAR(a.std_error, b.std_error, 1e-9 * a.std_error);
}

TEST(EstimateHestonMoment, PrefactorScalesEstimate)
{
    McConfig cfg;
    cfg.paths = 2000;
    cfg.seed = 6;
    const GridSpec g(1.0, 20);
    const McEstimate a = estimate_heston_moment(heston(0.5), 2.0, SchemeKind::FTE, g, cfg).terminal;
    const McEstimate b = estimate_heston_moment(heston(0.5, 3.0, 0.1), 2.0, SchemeKind::FTE, g, cfg).terminal;
    const double factor = 9.0 * std::exp(0.2);
    EXPECT_NEAR(b.mean, factor * a.mean, 1e-12 * b.mean);
    EXPECT_NEAR(b.std_error, factor * a.std_error, 1e-12 * b.std_error);
    EXPECT_NEAR(b.max_log_weight, a.max_log_weight + std::log(factor), 1e-12);
}
