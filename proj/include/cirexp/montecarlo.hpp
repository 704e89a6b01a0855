#pragma once

// Seeded, parallel Monte Carlo for E[Theta-bar_t] (any scheme) and E[Theta_t]
// (exact sampler). Per-path exponents are accumulated in log space; the
// reduction runs over fixed-size blocks in path-index order so results are
// bit-identical for any worker count or batch size.

#include "core.hpp"
#include "explosion.hpp"
#include "rng.hpp"
#include "schemes.hpp"

#include <algorithm>
#include <atomic>
#include <cmath>
#include <cstdint>
#include <exception>
#include <mutex>
#include <span>
#include <stdexcept>
#include <thread>
#include <vector>

namespace cirexp {

/// exp(x) overflows a double beyond this.
inline constexpr double kOverflowLog = 709.0;

struct McConfig {
    std::size_t paths = 100000;
    std::uint64_t seed = 0;
    /// Paths per work item handed to a worker. Scheduling only.
    std::size_t batch_size = 16384;
    /// Extra times (grid multiples) at which estimates are reported.
    std::vector<double> record_grid;
    /// 0 = std::thread::hardware_concurrency().
    unsigned threads = 0;
    bool antithetic = false;
};

struct McEstimate {
    double mean = 0.0;
    double std_error = 0.0;
    std::size_t paths = 0;
    bool log_space = true;
    double log_mean = -kInf;
    std::size_t saturated_paths = 0;
    double max_log_weight = -kInf;
};

struct McResult {
    McEstimate terminal;
    std::vector<double> record_times;
    std::vector<McEstimate> at_records;
};

/// Welford moments of exp(log_w), held relative to a running shift so that
/// weights beyond the double range still produce a finite log-mean.
class LogWeightAccumulator {
public:
    void add(double log_w) noexcept
    {
        if (log_w > kOverflowLog)
            ++saturated_;
        max_log_ = std::max(max_log_, log_w);
        if (log_w > shift_)
            rebase(log_w);
        const double x = std::exp(log_w - shift_);
        ++n_;
        const double d = x - mean_;
        mean_ += d / static_cast<double>(n_);
        m2_ += d * (x - mean_);
    }

    void merge(const LogWeightAccumulator& o) noexcept
    {
        if (o.n_ == 0)
            return;
        if (n_ == 0) {
            *this = o;
            return;
        }
        LogWeightAccumulator other = o;
        const double s = std::max(shift_, other.shift_);
        rebase(s);
        other.rebase(s);
        const double na = static_cast<double>(n_), nb = static_cast<double>(other.n_);
        const double n = na + nb;
        const double d = other.mean_ - mean_;
        mean_ += d * nb / n;
        m2_ += other.m2_ + d * d * na * nb / n;
        n_ += other.n_;
        saturated_ += other.saturated_;
        max_log_ = std::max(max_log_, other.max_log_);
    }

    McEstimate estimate(std::size_t paths_per_sample = 1) const noexcept
    {
        McEstimate e;
        e.paths = n_ * paths_per_sample;
        e.saturated_paths = saturated_;
        e.max_log_weight = max_log_;
        if (n_ == 0)
            return e;
        e.log_mean = mean_ > 0.0 ? shift_ + std::log(mean_) : -kInf;
        e.mean = std::exp(e.log_mean);
        if (n_ > 1 && m2_ > 0.0) {
            const double var = m2_ / static_cast<double>(n_ - 1);
            e.std_error = std::exp(shift_ + 0.5 * std::log(var / static_cast<double>(n_)));
        }
        return e;
    }

    std::size_t count() const noexcept { return n_; }

private:
    void rebase(double s) noexcept
    {
        if (n_ > 0 && s != shift_) {
            const double r = std::exp(shift_ - s);
            mean_ *= r;
            m2_ *= r * r;
        }
        shift_ = s;
    }

    std::size_t n_ = 0;
    double shift_ = -kInf;
    double mean_ = 0.0;
    double m2_ = 0.0;
    std::size_t saturated_ = 0;
    double max_log_ = -kInf;
};

/// Fixed reduction block; independent of McConfig::batch_size.
inline constexpr std::size_t kReductionBlock = 1024;

namespace detail {

inline unsigned worker_count(unsigned requested)
{
    if (requested != 0)
        return requested;
    const unsigned hw = std::thread::hardware_concurrency();
    return hw == 0 ? 1 : hw;
}

inline double log_add_exp(double a, double b) noexcept
{
    const double m = std::max(a, b);
    if (m == -kInf)
        return m;
    return m + std::log(std::exp(a - m) + std::exp(b - m));
}

} // namespace detail

/// Runs `path_fn(path_index, sign, out)` for every path. `out` receives one
/// log-weight per output slot. With antithetic sampling, paths 2u and 2u+1
/// share stream u with opposite signs and their average is one sample.
template <class PathFn>
std::vector<LogWeightAccumulator> run_paths(const McConfig& cfg, std::size_t outputs, PathFn&& path_fn)
{
    if (cfg.paths == 0)
        throw std::invalid_argument("McConfig: paths must be >= 1");
    const std::size_t units = cfg.antithetic ? (cfg.paths + 1) / 2 : cfg.paths;
    const std::size_t blocks = (units + kReductionBlock - 1) / kReductionBlock;
    const std::size_t blocks_per_item =
        std::max<std::size_t>(1, (std::max<std::size_t>(cfg.batch_size, 1) + kReductionBlock - 1) / kReductionBlock);
    const std::size_t items = (blocks + blocks_per_item - 1) / blocks_per_item;

    std::vector<std::vector<LogWeightAccumulator>> partial(blocks, std::vector<LogWeightAccumulator>(outputs));
    std::atomic<std::size_t> next{0};
    std::exception_ptr failure;
    std::mutex failure_mutex;

    auto work = [&] {
        std::vector<double> a(outputs), b(outputs);
        try {
            for (std::size_t item = next++; item < items; item = next++) {
                const std::size_t b0 = item * blocks_per_item;
                const std::size_t b1 = std::min(blocks, b0 + blocks_per_item);
                for (std::size_t blk = b0; blk < b1; ++blk) {
                    auto& acc = partial[blk];
                    const std::size_t u0 = blk * kReductionBlock;
                    const std::size_t u1 = std::min(units, u0 + kReductionBlock);
                    for (std::size_t u = u0; u < u1; ++u) {
                        path_fn(u, 1.0, std::span<double>(a));
                        if (cfg.antithetic) {
                            path_fn(u, -1.0, std::span<double>(b));
                            for (std::size_t j = 0; j < outputs; ++j)
                                acc[j].add(detail::log_add_exp(a[j], b[j]) - std::log(2.0));
                        } else {
                            for (std::size_t j = 0; j < outputs; ++j)
                                acc[j].add(a[j]);
                        }
                    }
                }
            }
        } catch (...) {
            std::lock_guard lock(failure_mutex);
            if (!failure)
                failure = std::current_exception();
            next = items;
        }
    };

    const unsigned workers = static_cast<unsigned>(std::min<std::size_t>(detail::worker_count(cfg.threads), items));
    if (workers <= 1) {
        work();
    } else {
        std::vector<std::jthread> pool;
        pool.reserve(workers);
        for (unsigned w = 0; w < workers; ++w)
            pool.emplace_back(work);
    }
    if (failure)
        std::rethrow_exception(failure);

    std::vector<LogWeightAccumulator> total(outputs);
    for (const auto& blk : partial)
        for (std::size_t j = 0; j < outputs; ++j)
            total[j].merge(blk[j]);
    return total;
}

namespace detail {

/// Grid indices of the record times, in the order given. Each time must be a
/// grid multiple within [0, T].
inline std::vector<int> record_indices(const std::vector<double>& times, const GridSpec& g)
{
    std::vector<int> idx;
    idx.reserve(times.size());
    for (double t : times) {
        const double n = std::round(t / g.dt());
        if (n < 0.0 || n > g.steps() || std::abs(n * g.dt() - t) > 1e-9 * std::max(1.0, std::abs(t)))
            throw std::invalid_argument("record_grid times must be grid multiples within [0, T]");
        idx.push_back(static_cast<int>(n));
    }
    return idx;
}

inline McResult collect(const std::vector<LogWeightAccumulator>& acc, const McConfig& cfg,
                        const std::vector<double>& record_times)
{
    const std::size_t per = cfg.antithetic ? 2 : 1;
    McResult r;
    r.terminal = acc.back().estimate(per);
    r.record_times = record_times;
    for (std::size_t j = 0; j + 1 < acc.size(); ++j)
        r.at_records.push_back(acc[j].estimate(per));
    return r;
}

} // namespace detail

/// Log-weight lambda dt sum Ybar + mu sum sqrt(Ybar) dW along one scheme path,
/// written at every index in `record` (sorted or not) and at N (last slot).
template <SchemeKind Kind>
void scheme_log_weights(const Stepper<Kind>& stepper, const FunctionalCoeffs& f, const GridSpec& g,
                        std::span<const int> record, NormalStream& normals, std::span<double> out)
{
    const double dt = g.dt(), sqdt = std::sqrt(dt);
    const double lam_dt = f.lambda() * dt, mu = f.mu();
    double y = stepper.initial();
    double log_w = 0.0;
    for (std::size_t j = 0; j < record.size(); ++j)
        if (record[j] == 0)
            out[j] = 0.0;
    for (int n = 0; n < g.steps(); ++n) {
        const double ybar = stepper.interpolant(y);
        const double dw = sqdt * normals();
        log_w += lam_dt * ybar + mu * std::sqrt(ybar) * dw;
        y = stepper.step(y, dw);
        for (std::size_t j = 0; j < record.size(); ++j)
            if (record[j] == n + 1)
                out[j] = log_w;
    }
    out[record.size()] = log_w;
}

/// Monte Carlo estimate of E[Theta-bar_T] for a scheme (plus record_grid times).
inline McResult estimate_exp_functional(SchemeKind kind, const CirParams& p, const FunctionalCoeffs& f,
                                        const GridSpec& g, const McConfig& cfg)
{
    const std::vector<int> rec = detail::record_indices(cfg.record_grid, g);
    return with_scheme(kind, [&](auto tag) {
        const Stepper<decltype(tag)::value> stepper(p, g.dt());
        auto acc = run_paths(cfg, rec.size() + 1, [&](std::size_t path, double sign, std::span<double> out) {
            NormalStream normals(cfg.seed, path, 0, sign);
            scheme_log_weights(stepper, f, g, rec, normals, out);
        });
        return detail::collect(acc, cfg, cfg.record_grid);
    });
}

/// Monte Carlo estimate of E[Theta_T] for the exact process, using
///   Theta_t = exp{lambda^ (y_t - y0 - k theta t) + mu^ int_0^t y du}
/// with exact transitions on `substeps` intervals and the trapezoid rule.
inline McResult estimate_exact_functional(const CirParams& p, const FunctionalCoeffs& f, double horizon,
                                          int substeps, const McConfig& cfg)
{
    if (substeps < 2)
        throw std::invalid_argument("estimate_exact_functional: substeps must be >= 2");
    if (cfg.antithetic)
        throw std::invalid_argument("estimate_exact_functional: antithetic sampling is not supported");
    const GridSpec g(horizon, substeps);
    const std::vector<int> rec = detail::record_indices(cfg.record_grid, g);
    const RiccatiCoeffs rc = riccati_coeffs(p, f);
    const double dt = g.dt(), kt = p.k() * p.theta();

    auto acc = run_paths(cfg, rec.size() + 1, [&](std::size_t path, double, std::span<double> out) {
        PathStream rng(cfg.seed, path, 2);
        double y = p.y0(), integral = 0.0;
        auto log_w = [&](int n) {
            return rc.lambda_hat * (y - p.y0() - kt * g.time(n)) + rc.mu_hat * integral;
        };
        for (std::size_t j = 0; j < rec.size(); ++j)
            if (rec[j] == 0)
                out[j] = 0.0;
        for (int n = 0; n < g.steps(); ++n) {
            const double next = sample_exact_transition(p, y, dt, rng);
            integral += 0.5 * (y + next) * dt;
            y = next;
            for (std::size_t j = 0; j < rec.size(); ++j)
                if (rec[j] == n + 1)
                    out[j] = log_w(n + 1);
        }
        out[rec.size()] = log_w(g.steps());
    });
    return detail::collect(acc, cfg, cfg.record_grid);
}

} // namespace cirexp
