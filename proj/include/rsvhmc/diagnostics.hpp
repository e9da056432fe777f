#pragma once

#include <algorithm>
#include <atomic>
#include <cmath>
#include <cstddef>
#include <cstdint>
#include <exception>
#include <limits>
#include <mutex>
#include <optional>
#include <span>
#include <string>
#include <thread>
#include <vector>

#include "rsvhmc/error.hpp"
#include "rsvhmc/hmc.hpp"
#include "rsvhmc/integrators.hpp"
#include "rsvhmc/model.hpp"
#include "rsvhmc/rng.hpp"

namespace rsvhmc {

[[nodiscard]] inline double mean_of(std::span<const double> x) {
    double s = 0.0;
    for (double v : x) s += v;
    return s / static_cast<double>(x.size());
}

/// Normalized autocorrelation for lags 0..max_lag, with
/// C(t) = 1/(N-t) sum (x_i - xbar)(x_{i+t} - xbar) and xbar the full mean.
[[nodiscard]] inline std::vector<double> acf(std::span<const double> x, std::size_t max_lag) {
    const std::size_t n = x.size();
    if (max_lag < 1 || n <= max_lag) {
        throw ValidationError("acf needs 1 <= max_lag < series length");
    }
    const double m = mean_of(x);
    std::vector<double> c(max_lag + 1, 0.0);
    for (std::size_t t = 0; t <= max_lag; ++t) {
        double s = 0.0;
        for (std::size_t i = 0; i + t < n; ++i) s += (x[i] - m) * (x[i + t] - m);
        c[t] = s / static_cast<double>(n - t);
    }
    if (!(c[0] > 0.0)) throw Error("acf of a zero-variance series is undefined");
    const double c0 = c[0];
    for (double& v : c) v /= c0;
    return c;
}

/// Integrated autocorrelation time 2 tau_int = 1 + 2 sum_{t=1}^{W} ACF(t).
struct ActEstimate {
    double two_tau_int = 1.0;
    double error = 0.0;
    std::size_t window = 1;
    /// False when the jackknife bins are shorter than the window, in which
    /// case the error bar is likely too small.
    bool bins_cover_window = true;
};

inline constexpr std::size_t kJackknifeBins = 20;
inline constexpr double kWindowFactor = 5.0;

namespace detail {

inline std::size_t bin_of(std::size_t i, std::size_t n, std::size_t bins) {
    return std::min(bins - 1, i * bins / n);
}

}  // namespace detail

/// Self-consistent window: the smallest W with W >= 5 * (1 + 2 sum_{t<=W} ACF(t)).
/// The error is a leave-one-bin-out jackknife over 20 bins at that window;
/// autocovariance pairs touching the removed bin are excluded.
[[nodiscard]] inline ActEstimate integrated_act(std::span<const double> x) {
    const std::size_t n = x.size();
    if (n < 100) throw ValidationError("integrated_act needs at least 100 samples");
    const double m = mean_of(x);
    double c0 = 0.0;
    for (double v : x) c0 += (v - m) * (v - m);
    c0 /= static_cast<double>(n);
    if (!(c0 > 0.0)) throw Error("degenerate column: zero variance");

    ActEstimate est;
    double tau = 1.0;
    bool found = false;
    for (std::size_t t = 1; t <= n / 2; ++t) {
        double s = 0.0;
        for (std::size_t i = 0; i + t < n; ++i) s += (x[i] - m) * (x[i + t] - m);
        tau += 2.0 * s / static_cast<double>(n - t) / c0;
        if (static_cast<double>(t) >= kWindowFactor * tau) {
            est.window = t;
            found = true;
            break;
        }
    }
    if (!found) {
        throw Error("series of length " + std::to_string(n) +
                    " too short for a self-consistent window (running 2tau_int " +
                    std::to_string(tau) + ")");
    }
    est.two_tau_int = tau;

    const std::size_t bins = kJackknifeBins;
    const std::size_t w = est.window;
    est.bins_cover_window = n / bins >= w;

    std::vector<double> bin_sum(bins, 0.0);
    std::vector<double> bin_cnt(bins, 0.0);
    for (std::size_t i = 0; i < n; ++i) {
        const auto b = detail::bin_of(i, n, bins);
        bin_sum[b] += x[i];
        bin_cnt[b] += 1.0;
    }
    double total_sum = 0.0;
    for (double s : bin_sum) total_sum += s;

    std::vector<double> loo_mean(bins);
    for (std::size_t k = 0; k < bins; ++k) {
        loo_mean[k] = (total_sum - bin_sum[k]) / (static_cast<double>(n) - bin_cnt[k]);
    }

    // Per lag: pair sums grouped by the bin of the first and second element,
    // plus the pairs lying entirely in one bin.
    struct Sums {
        double xy = 0, x = 0, y = 0, cnt = 0;
        void add(double a, double b) { xy += a * b; x += a; y += b; cnt += 1; }
    };
    std::vector<double> loo_c0(bins, 0.0);
    std::vector<double> loo_tau(bins, 1.0);
    std::vector<Sums> first(bins), second(bins), both(bins);
    std::vector<std::size_t> bin(n);
    for (std::size_t i = 0; i < n; ++i) bin[i] = detail::bin_of(i, n, bins);
    for (std::size_t t = 0; t <= w; ++t) {
        std::fill(first.begin(), first.end(), Sums{});
        std::fill(second.begin(), second.end(), Sums{});
        std::fill(both.begin(), both.end(), Sums{});
        Sums all;
        for (std::size_t i = 0; i + t < n; ++i) {
            const double a = x[i];
            const double b = x[i + t];
            const auto bi = bin[i];
            const auto bj = bin[i + t];
            all.add(a, b);
            first[bi].add(a, b);
            second[bj].add(a, b);
            if (bi == bj) both[bi].add(a, b);
        }
        for (std::size_t k = 0; k < bins; ++k) {
            const double xy = all.xy - first[k].xy - second[k].xy + both[k].xy;
            const double sx = all.x - first[k].x - second[k].x + both[k].x;
            const double sy = all.y - first[k].y - second[k].y + both[k].y;
            const double cnt = all.cnt - first[k].cnt - second[k].cnt + both[k].cnt;
            const double mk = loo_mean[k];
            const double c = (xy - mk * (sx + sy) + mk * mk * cnt) / cnt;
            if (t == 0) {
                loo_c0[k] = c;
            } else {
                loo_tau[k] += 2.0 * c / loo_c0[k];
            }
        }
    }
    const double avg = mean_of(loo_tau);
    double ss = 0.0;
    for (double v : loo_tau) ss += (v - avg) * (v - avg);
    est.error = std::sqrt(static_cast<double>(bins - 1) / bins * ss);
    return est;
}

/// Sample mean with a leave-one-bin-out jackknife standard error.
struct MeanEstimate {
    double mean = 0.0;
    double error = 0.0;
};

[[nodiscard]] inline MeanEstimate jackknife_mean(std::span<const double> x,
                                                 std::size_t bins = kJackknifeBins) {
    const std::size_t n = x.size();
    if (bins < 2 || n < bins) throw ValidationError("jackknife needs at least one sample per bin");
    std::vector<double> sum(bins, 0.0), cnt(bins, 0.0);
    for (std::size_t i = 0; i < n; ++i) {
        const auto b = detail::bin_of(i, n, bins);
        sum[b] += x[i];
        cnt[b] += 1.0;
    }
    double total = 0.0;
    for (double s : sum) total += s;
    MeanEstimate est;
    est.mean = total / static_cast<double>(n);
    double ss = 0.0;
    for (std::size_t k = 0; k < bins; ++k) {
        const double loo = (total - sum[k]) / (static_cast<double>(n) - cnt[k]);
        ss += (loo - est.mean) * (loo - est.mean);
    }
    est.error = std::sqrt(static_cast<double>(bins - 1) / bins * ss);
    return est;
}

[[nodiscard]] inline double rms_dh(std::span<const double> dh) {
    if (dh.empty()) throw ValidationError("rms_dh needs at least one sample");
    double s = 0.0;
    for (double v : dh) s += v * v;
    return std::sqrt(s / static_cast<double>(dh.size()));
}

/// Least-squares slope of log(y) against log(x).
[[nodiscard]] inline double loglog_slope(std::span<const double> x, std::span<const double> y) {
    if (x.size() != y.size() || x.size() < 2) {
        throw ValidationError("loglog_slope needs two or more paired points");
    }
    std::vector<double> lx, ly;
    for (std::size_t i = 0; i < x.size(); ++i) {
        if (!(x[i] > 0.0 && y[i] > 0.0)) throw ValidationError("loglog_slope needs positive data");
        lx.push_back(std::log(x[i]));
        ly.push_back(std::log(y[i]));
    }
    const double mx = mean_of(lx);
    const double my = mean_of(ly);
    double sxy = 0.0, sxx = 0.0;
    for (std::size_t i = 0; i < lx.size(); ++i) {
        sxy += (lx[i] - mx) * (ly[i] - my);
        sxx += (lx[i] - mx) * (lx[i] - mx);
    }
    return sxy / sxx;
}

struct ScanRow {
    double step_size = 0.0;  // after adjustment to the trajectory length
    int n_steps = 0;
    double acceptance = 0.0;
    double rms_dh = 0.0;
    double efficiency = 0.0;  // acceptance * step_size
    std::string warning;
};

struct ScanReport {
    std::vector<ScanRow> rows;
    std::size_t best = 0;

    [[nodiscard]] const ScanRow& optimum() const { return rows.at(best); }
};

struct ScanOptions {
    double length = 2.0;
    int n_traj = 2000;
    int n_warmup = 500;
    double lambda = kMinimumNormLambda;
    std::uint64_t seed = 1;
    /// Starting path; ln RV - xi when empty.
    LatentPath start;
    unsigned threads = 1;
};

/// Runs n_warmup + n_traj HMC updates at fixed theta for every grid step
/// size and tabulates acceptance, RMS dH and the efficiency P * step. Each
/// grid point uses its own stream derived from the master seed.
[[nodiscard]] inline ScanReport stepsize_scan(const ObservedSeries& data, const ModelParams& theta,
                                              Scheme scheme, std::span<const double> grid,
                                              const ScanOptions& opts) {
    data.validate();
    theta.validate();
    if (grid.empty()) throw ValidationError("step-size grid is empty");
    if (opts.n_traj < 1 || opts.n_warmup < 0) {
        throw ValidationError("scan needs n_traj >= 1 and n_warmup >= 0");
    }
    std::vector<TrajectoryConfig> cfgs;
    for (double dt : grid) cfgs.push_back(TrajectoryConfig::from_length(scheme, opts.length, dt, opts.lambda));

    LatentPath start = opts.start;
    if (start.empty()) {
        start.resize(data.size());
        for (std::size_t t = 0; t < data.size(); ++t) start[t] = data.ln_rv[t] - theta.xi;
    }
    if (start.size() != data.size()) throw ValidationError("scan start path has the wrong length");

    ScanReport report;
    report.rows.resize(grid.size());
    auto run_point = [&](std::size_t i) {
        Rng rng(derive_seed(opts.seed, i));
        LatentPath h = start;
        for (int k = 0; k < opts.n_warmup; ++k) {
            auto out = hmc_update(h, theta, data, cfgs[i], rng);
            if (out.accepted) h = std::move(out.h_new);
        }
        std::vector<double> dh(opts.n_traj);
        std::vector<char> acc(opts.n_traj);
        for (int k = 0; k < opts.n_traj; ++k) {
            auto out = hmc_update(h, theta, data, cfgs[i], rng);
            dh[k] = out.delta_h;
            acc[k] = out.accepted;
            if (out.accepted) h = std::move(out.h_new);
        }
        ScanRow row;
        row.step_size = cfgs[i].step_size;
        row.n_steps = cfgs[i].n_steps;
        const int half = opts.n_traj / 2;
        double a1 = 0.0, a2 = 0.0;
        for (int k = 0; k < opts.n_traj; ++k) (k < half ? a1 : a2) += acc[k];
        row.acceptance = (a1 + a2) / opts.n_traj;
        row.rms_dh = rms_dh(dh);
        row.efficiency = row.acceptance * row.step_size;
        if (half > 0 && opts.n_traj - half > 0) {
            a1 /= half;
            a2 /= opts.n_traj - half;
            const double p = row.acceptance;
            const double se = std::sqrt(std::max(p * (1 - p), 1e-12) *
                                        (1.0 / half + 1.0 / (opts.n_traj - half)));
            if (std::abs(a1 - a2) > 3.0 * se) {
                row.warning = "acceptance trend between halves: not equilibrated";
            }
        }
        report.rows[i] = row;
    };

    const unsigned threads = std::max(1u, std::min<unsigned>(opts.threads, grid.size()));
    if (threads == 1) {
        for (std::size_t i = 0; i < grid.size(); ++i) run_point(i);
    } else {
        std::atomic<std::size_t> next{0};
        std::exception_ptr failure;
        std::mutex failure_mutex;
        std::vector<std::jthread> pool;
        for (unsigned w = 0; w < threads; ++w) {
            pool.emplace_back([&] {
                for (std::size_t i; (i = next.fetch_add(1)) < grid.size();) {
                    try {
                        run_point(i);
                    } catch (...) {
                        std::lock_guard lock(failure_mutex);
                        if (!failure) failure = std::current_exception();
                    }
                }
            });
        }
        pool.clear();
        if (failure) std::rethrow_exception(failure);
    }

    for (std::size_t i = 1; i < report.rows.size(); ++i) {
        if (report.rows[i].efficiency > report.rows[report.best].efficiency) report.best = i;
    }
    return report;
}

struct ColumnSummary {
    std::string name;
    double mean = 0.0;
    double sd = 0.0;
    std::optional<ActEstimate> act;
    /// Why act is missing or unreliable.
    std::string note;
};

struct NamedColumn {
    std::string name;
    std::vector<double> values;
};

/// Mean, standard deviation (n-1 denominator) and 2 tau_int per column.
[[nodiscard]] inline std::vector<ColumnSummary> posterior_summary(
    std::span<const NamedColumn> columns, std::size_t min_samples = 1000) {
    std::vector<ColumnSummary> out;
    for (const auto& col : columns) {
        const auto& v = col.values;
        if (v.size() < min_samples) {
            throw ValidationError("column '" + col.name + "' has " + std::to_string(v.size()) +
                                  " samples, need at least " + std::to_string(min_samples));
        }
        ColumnSummary s;
        s.name = col.name;
        s.mean = mean_of(v);
        double ss = 0.0;
        for (double x : v) ss += (x - s.mean) * (x - s.mean);
        s.sd = std::sqrt(ss / static_cast<double>(v.size() - 1));
        if (!(ss > 0.0)) {
            s.note = "degenerate column";
        } else {
            try {
                s.act = integrated_act(v);
                if (!s.act->bins_cover_window) s.note = "jackknife bins shorter than window";
            } catch (const Error& e) {
                s.note = e.what();
            }
        }
        out.push_back(std::move(s));
    }
    return out;
}

}  // namespace rsvhmc
