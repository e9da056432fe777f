// Acceptance run: one PASS/FAIL line per criterion. `--fast` swaps the long
// estimation run for a reduced one (n = 1000, 10000 kept) that checks only
// the posterior-SD band; `--only N` runs a single criterion (4 implies 3,
// 5 implies 1).

#include <chrono>
#include <algorithm>
#include <cmath>
#include <cstdarg>
#include <cstdio>
#include <cstdlib>
#include <cstring>
#include <exception>
#include <filesystem>
#include <fstream>
#include <functional>
#include <sstream>
#include <string>
#include <vector>

#include "rsvhmc/commands.hpp"
#include "test_support.hpp"

using namespace rsvhmc;
namespace fs = std::filesystem;

namespace {

// Tolerances ----------------------------------------------------------------

constexpr double kPosteriorSdBand = 3.0;
constexpr double kPaperSdBand = 3.0;
constexpr double kSlopeTarget = 2.0;
constexpr double kSlopeTolerance = 0.1;
constexpr double kLeapfrogAcceptLo = 0.55, kLeapfrogAcceptHi = 0.75;
constexpr double kMinNormAcceptLo = 0.75, kMinNormAcceptHi = 0.95;
constexpr double kEfficiencyRatioMin = 3.0;
constexpr double kCostRatioMin = 1.5;
constexpr double kActLimit = 60.0;
constexpr double kIidActErrors = 2.0;
constexpr double kExactnessErrors = 3.0;
constexpr double kReversibilityTol = 1e-10;
constexpr double kGradientRelTol = 1e-6;
constexpr double kKsMinP = 0.01;
constexpr double kGewekeErrors = 3.0;
constexpr double kHansenLundeErrors = 3.0;

// Reference study -------------------------------------------------------------

constexpr std::uint64_t kDatasetSeed = 20140901;
constexpr std::uint64_t kChainSeed = 42;
constexpr double kLength = 2.0;
constexpr double kStep = 0.222;

const char* const kNames[] = {"phi", "mu", "xi", "sigma_eta2", "sigma_u2"};
constexpr double kPaperMean[] = {0.926, -0.97, 0.31, 0.097, 0.203};
constexpr double kPaperSd[] = {0.007, 0.10, 0.03, 0.006, 0.010};

double field(const ModelParams& th, int i) {
    switch (i) {
        case 0: return th.phi;
        case 1: return th.mu;
        case 2: return th.xi;
        case 3: return th.sigma_eta2;
        default: return th.sigma_u2;
    }
}

std::string fmt(const char* f, ...) __attribute__((format(printf, 1, 2)));
std::string fmt(const char* f, ...) {
    char buf[1024];
    va_list ap;
    va_start(ap, f);
    std::vsnprintf(buf, sizeof buf, f, ap);
    va_end(ap);
    return buf;
}

struct Outcome {
    bool pass = true;
    std::vector<std::string> lines;

    void check(bool ok, std::string what) {
        pass = pass && ok;
        lines.push_back((ok ? "ok   " : "FAIL ") + what);
    }
    void info(std::string what) { lines.push_back("info " + what); }
};

double elapsed(std::chrono::steady_clock::time_point t0) {
    return std::chrono::duration<double>(std::chrono::steady_clock::now() - t0).count();
}

// Shared data ---------------------------------------------------------------

struct Context {
    bool fast = false;
    SyntheticDataset ds;
    LatentPath equilibrated;
    std::vector<double> h10;  // filled by criterion 1
    ScanReport scan_lf, scan_mn;
};

// 1 ---------------------------------------------------------------------------

Outcome parameter_recovery(Context& ctx) {
    Outcome o;
    const std::size_t n = ctx.fast ? 1000 : 4000;
    const auto ds = ctx.fast ? simulate(reference_params(), n, kDatasetSeed) : ctx.ds;
    ChainOptions opts;
    opts.trajectory = TrajectoryConfig::from_length(Scheme::MinimumNorm2, kLength, kStep);
    opts.n_burn = ctx.fast ? 2000 : 5000;
    opts.n_keep = ctx.fast ? 10000 : 50000;
    opts.recorded = {9};
    ChainState state = initial_chain_state(ds.data, default_initial_params(ds.data), kChainSeed);
    std::vector<std::vector<double>> cols(5);
    ctx.h10.clear();
    const auto t0 = std::chrono::steady_clock::now();
    const auto sum = run_chain(ds.data, state, opts, [&](const ChainRecord& r) {
        for (int i = 0; i < 5; ++i) cols[i].push_back(field(r.theta, i));
        ctx.h10.push_back(r.h_values[0]);
    });
    o.info(fmt("n=%zu, %d steps of %.4f, burn %lld, kept %lld, acceptance %.3f, %.1f s", n,
               opts.trajectory.n_steps, opts.trajectory.step_size,
               static_cast<long long>(opts.n_burn), static_cast<long long>(opts.n_keep),
               sum.acceptance_rate, elapsed(t0)));
    for (int i = 0; i < 5; ++i) {
        const double m = mean_of(cols[i]);
        double ss = 0;
        for (double v : cols[i]) ss += (v - m) * (v - m);
        const double sd = std::sqrt(ss / (cols[i].size() - 1));
        const double truth = field(reference_params(), i);
        o.check(std::abs(m - truth) <= kPosteriorSdBand * sd,
                fmt("%-10s mean %.4f sd %.4f true %.3f (|d|/sd %.2f)", kNames[i], m, sd, truth,
                    std::abs(m - truth) / sd));
        if (!ctx.fast) {
            o.check(std::abs(m - kPaperMean[i]) <= kPaperSdBand * kPaperSd[i],
                    fmt("%-10s mean %.4f vs published average %.3f +- 3 x %.3f", kNames[i], m,
                        kPaperMean[i], kPaperSd[i]));
        }
    }
    return o;
}

// 2 ---------------------------------------------------------------------------

Outcome dh_scaling(Context& ctx) {
    Outcome o;
    const auto& ds = ctx.ds;
    // Equilibrium phase-space points: states from a fixed-theta chain plus fresh momenta.
    Rng rng(derive_seed(kChainSeed, 2));
    const auto cfg = TrajectoryConfig::from_length(Scheme::MinimumNorm2, 1.0, 0.1);
    LatentPath h = ctx.equilibrated;
    std::vector<PhaseState> starts;
    for (int k = 0; k < 100; ++k) {
        for (int j = 0; j < 10; ++j) {
            auto out = hmc_update(h, ds.theta_true, ds.data, cfg, rng);
            if (out.accepted) h = std::move(out.h_new);
        }
        PhaseState s{h, std::vector<double>(h.size())};
        for (double& p : s.p) p = rng.normal();
        starts.push_back(std::move(s));
    }
    RsvForce force(ds.theta_true, ds.data);
    struct Plan {
        Scheme scheme;
        std::vector<int> n_steps;
    };
    // Both grids sit where the leading error term dominates. For 2mni the
    // fourth-order term still interferes up to a step of about 0.05 (the RMS
    // is nearly flat between 0.1 and 0.07), so its grid starts lower.
    for (const Plan& plan : {Plan{Scheme::Leapfrog2, {40, 56, 80, 113, 160}},
                             Plan{Scheme::MinimumNorm2, {56, 80, 113, 160, 226}}}) {
        std::vector<double> steps, rms;
        std::string table;
        for (int n : plan.n_steps) {
            const TrajectoryConfig c{plan.scheme, kLength / n, n};
            std::vector<double> dh;
            for (const auto& s : starts) {
                const double h0 = hamiltonian(s, ds.theta_true, ds.data);
                dh.push_back(hamiltonian(integrate(s, c, force), ds.theta_true, ds.data) - h0);
            }
            steps.push_back(c.step_size);
            rms.push_back(rms_dh(dh));
            table += fmt(" %.4f:%.3g", c.step_size, rms.back());
        }
        const double slope = loglog_slope(steps, rms);
        std::string local;
        for (std::size_t i = 1; i < steps.size(); ++i) {
            local += fmt(" %.2f", std::log(rms[i - 1] / rms[i]) / std::log(steps[i - 1] / steps[i]));
        }
        o.info(std::string(to_string(plan.scheme)) + " step:rms" + table + "; local slopes" + local);
        o.check(std::abs(slope - kSlopeTarget) <= kSlopeTolerance,
                fmt("%s slope %.3f (target %.1f +- %.1f)", std::string(to_string(plan.scheme)).c_str(),
                    slope, kSlopeTarget, kSlopeTolerance));
    }
    return o;
}

// 3 ---------------------------------------------------------------------------

ScanReport run_scan(Context& ctx, Scheme scheme, const std::vector<int>& n_steps, Outcome& o) {
    std::vector<double> grid;
    for (int n : n_steps) grid.push_back(kLength / n);
    ScanOptions opts;
    opts.length = kLength;
    opts.n_traj = ctx.fast ? 1500 : 6000;
    opts.n_warmup = 500;
    opts.seed = derive_seed(kChainSeed, 3);
    opts.start = ctx.equilibrated;
    const auto t0 = std::chrono::steady_clock::now();
    auto rep = stepsize_scan(ctx.ds.data, ctx.ds.theta_true, scheme, grid, opts);
    std::string table;
    for (const auto& r : rep.rows) {
        table += fmt(" [%.4f P=%.3f eff=%.4f%s]", r.step_size, r.acceptance, r.efficiency,
                     r.warning.empty() ? "" : " !");
    }
    o.info(fmt("%s scan, %d trajectories per point, %.0f s:", std::string(to_string(scheme)).c_str(),
               opts.n_traj, elapsed(t0)) + table);
    return rep;
}

Outcome optimal_acceptance(Context& ctx) {
    Outcome o;
    std::vector<int> lf, mn;
    for (int n = 24; n <= 44; n += 2) lf.push_back(n);
    for (int n = 7; n <= 14; ++n) mn.push_back(n);
    ctx.scan_lf = run_scan(ctx, Scheme::Leapfrog2, lf, o);
    ctx.scan_mn = run_scan(ctx, Scheme::MinimumNorm2, mn, o);
    const auto& a = ctx.scan_lf.optimum();
    const auto& b = ctx.scan_mn.optimum();
    o.check(a.acceptance >= kLeapfrogAcceptLo && a.acceptance <= kLeapfrogAcceptHi,
            fmt("2lfi optimum at step %.4f, acceptance %.3f (band [%.2f, %.2f])", a.step_size,
                a.acceptance, kLeapfrogAcceptLo, kLeapfrogAcceptHi));
    o.check(b.acceptance >= kMinNormAcceptLo && b.acceptance <= kMinNormAcceptHi,
            fmt("2mni optimum at step %.4f, acceptance %.3f (band [%.2f, %.2f])", b.step_size,
                b.acceptance, kMinNormAcceptLo, kMinNormAcceptHi));
    return o;
}

// 4 ---------------------------------------------------------------------------

Outcome efficiency_ratio(Context& ctx) {
    Outcome o;
    const double lf = ctx.scan_lf.optimum().efficiency;
    const double mn = ctx.scan_mn.optimum().efficiency;
    const double ratio = mn / lf;
    const double cost = ratio * force_evaluations_per_step(Scheme::Leapfrog2) /
                        force_evaluations_per_step(Scheme::MinimumNorm2);
    o.check(ratio >= kEfficiencyRatioMin,
            fmt("efficiency 2mni %.4f / 2lfi %.4f = %.2f (>= %.1f)", mn, lf, ratio, kEfficiencyRatioMin));
    o.check(cost >= kCostRatioMin,
            fmt("per force evaluation ratio %.2f (>= %.1f)", cost, kCostRatioMin));
    return o;
}

// 5 ---------------------------------------------------------------------------

Outcome autocorrelation(Context& ctx) {
    Outcome o;
    const auto a = integrated_act(ctx.h10);
    o.check(a.two_tau_int <= kActLimit,
            fmt("h_10: 2tau_int %.1f +- %.1f (window %zu, limit %.0f)", a.two_tau_int, a.error,
                a.window, kActLimit));
    Rng rng(derive_seed(kChainSeed, 5));
    std::vector<double> iid(50000);
    for (double& x : iid) x = rng.normal();
    const auto b = integrated_act(iid);
    o.check(std::abs(b.two_tau_int - 1.0) <= kIidActErrors * b.error,
            fmt("i.i.d. control: 2tau_int %.3f +- %.3f (within %.0f errors of 1)", b.two_tau_int,
                b.error, kIidActErrors));
    return o;
}

// 6 ---------------------------------------------------------------------------

Outcome exactness(Context& ctx) {
    Outcome o;
    const auto& ds = ctx.ds;
    {
        Rng rng(derive_seed(kChainSeed, 6));
        const auto cfg = TrajectoryConfig::from_length(Scheme::MinimumNorm2, kLength, kStep);
        LatentPath h = ctx.equilibrated;
        std::vector<double> w;
        for (int i = 0; i < 12000; ++i) {
            auto out = hmc_update(h, ds.theta_true, ds.data, cfg, rng);
            w.push_back(std::exp(-out.delta_h));
            if (out.accepted) h = std::move(out.h_new);
        }
        const auto m = jackknife_mean(w);
        o.check(std::abs(m.mean - 1.0) <= kExactnessErrors * m.error,
                fmt("<exp(-dH)> = %.4f +- %.4f over %zu trajectories", m.mean, m.error, w.size()));
    }
    {
        RsvForce force(ds.theta_true, ds.data);
        Rng rng(derive_seed(kChainSeed, 61));
        double worst = 0.0;
        for (Scheme s : {Scheme::Leapfrog2, Scheme::MinimumNorm2}) {
            const auto cfg = TrajectoryConfig::from_length(
                s, kLength, s == Scheme::Leapfrog2 ? 0.0606 : kStep);
            for (int k = 0; k < 5; ++k) {
                PhaseState s0{ctx.equilibrated, std::vector<double>(ds.data.size())};
                for (double& p : s0.p) p = rng.normal();
                auto f = integrate(s0, cfg, force);
                for (double& p : f.p) p = -p;
                auto b = integrate(f, cfg, force);
                for (std::size_t i = 0; i < s0.h.size(); ++i) {
                    worst = std::max({worst, std::abs(b.h[i] - s0.h[i]), std::abs(-b.p[i] - s0.p[i])});
                }
            }
        }
        o.check(worst <= kReversibilityTol,
                fmt("reversibility: max deviation %.2e over 10 trajectories (tol %.0e)", worst,
                    kReversibilityTol));
    }
    {
        double worst = 0.0;
        int count = 0;
        for (std::size_t n : {2u, 5u, 50u}) {
            for (std::uint64_t seed = 0; seed < 34; ++seed, ++count) {
                const auto in = testing::random_instance(n, 7000 + 100 * n + seed);
                const auto g = grad_potential(in.h, in.theta, in.data);
                auto v = [&](const std::vector<double>& x) { return potential(x, in.theta, in.data); };
                for (std::size_t t = 0; t < n; ++t) {
                    const double fd = testing::central_difference(v, in.h, t, 1e-5);
                    worst = std::max(worst, std::abs(g[t] - fd) / std::max(1.0, std::abs(fd)));
                }
            }
        }
        o.check(count >= 100 && worst <= kGradientRelTol,
                fmt("gradient vs central differences: worst relative error %.2e on %d instances",
                    worst, count));
    }
    return o;
}

// 7 ---------------------------------------------------------------------------

Outcome conditional_samplers(Context&) {
    Outcome o;
    const auto ds = simulate(reference_params(), 5, 77);
    const auto& th = ds.theta_true;
    const PriorConfig prior;
    constexpr std::size_t kDraws = 100000;
    auto joint = [&](double ModelParams::*f, std::function<double(double)> lp) {
        return [&, f, lp](double v) {
            ModelParams t = th;
            t.*f = v;
            return joint_log_density(ds.h_true, t, ds.data) + lp(v);
        };
    };
    auto flat = [](double) { return 0.0; };
    auto ig = [](double a, double b) {
        return [a, b](double v) { return -(a + 1.0) * std::log(v) - b / v; };
    };
    auto ks = [&](const char* name, const std::vector<double>& draws, const testing::GridCdf& cdf) {
        const double d = testing::ks_statistic(draws, [&](double x) { return cdf(x); });
        const double p = testing::ks_pvalue(d, draws.size());
        o.check(p > kKsMinP, fmt("%-10s KS D=%.5f p=%.3f (n=5, %zu draws)", name, d, p, draws.size()));
    };
    std::vector<double> draws(kDraws);
    {
        const auto c = xi_conditional(ds.h_true, th, ds.data);
        testing::GridCdf cdf(joint(&ModelParams::xi, flat), c.mean - 3.0, c.mean + 3.0);
        Rng rng(71);
        for (double& x : draws) x = sample_xi(ds.h_true, th, ds.data, rng);
        ks("xi", draws, cdf);
    }
    {
        const auto c = mu_conditional(ds.h_true, th);
        testing::GridCdf cdf(joint(&ModelParams::mu, flat), c.mean - 12.0, c.mean + 12.0, 200001);
        Rng rng(72);
        for (double& x : draws) x = sample_mu(ds.h_true, th, rng);
        ks("mu", draws, cdf);
    }
    {
        testing::GridCdf cdf(joint(&ModelParams::sigma_eta2, ig(prior.a_eta, prior.b_eta)), 1e-5, 8.0,
                             400001);
        Rng rng(73);
        for (double& x : draws) x = sample_sigma_eta2(ds.h_true, th, prior, rng);
        ks("sigma_eta2", draws, cdf);
    }
    {
        testing::GridCdf cdf(joint(&ModelParams::sigma_u2, ig(prior.a_u, prior.b_u)), 1e-5, 8.0, 400001);
        Rng rng(74);
        for (double& x : draws) x = sample_sigma_u2(ds.h_true, th, ds.data, prior, rng);
        ks("sigma_u2", draws, cdf);
    }
    {
        // A Metropolis step is exact in the sense of leaving its target
        // invariant: start from exact draws and test what comes out.
        testing::GridCdf cdf(joint(&ModelParams::phi, flat), -0.99999, 0.99999, 200001);
        Rng rng(75);
        for (double& x : draws) {
            ModelParams t = th;
            t.phi = cdf.quantile(rng.uniform());
            x = sample_phi(ds.h_true, t, rng);
        }
        ks("phi", draws, cdf);
    }

    // Successive-conditional simulator with proper priors.
    PriorConfig gp;
    gp.a_eta = gp.a_u = 3.0;
    gp.b_eta = gp.b_u = 0.4;
    gp.mu_prior = GaussianPrior{0.0, 1.0};
    gp.xi_prior = GaussianPrior{0.0, 1.0};
    const std::size_t n = 8;
    const int iters = 500000;
    Rng rng(76);
    ModelParams t{0.0, 0.0, 0.0, 0.2, 0.2};
    auto sim = simulate(t, n, 1);
    LatentPath h = sim.h_true;
    ObservedSeries data = sim.data;
    const auto cfg = TrajectoryConfig::from_length(Scheme::MinimumNorm2, 1.0, 0.1);
    std::vector<std::vector<double>> stats(7);
    for (int i = 0; i < iters; ++i) {
        for (std::size_t k = 0; k < n; ++k) {
            data.y[k] = std::exp(0.5 * h[k]) * rng.normal();
            data.ln_rv[k] = t.xi + h[k] + std::sqrt(t.sigma_u2) * rng.normal();
        }
        auto out = hmc_update(h, t, data, cfg, rng);
        if (out.accepted) h = std::move(out.h_new);
        gibbs_sweep(h, t, data, gp, rng);
        const double vals[] = {t.phi, t.phi * t.phi, t.mu, t.mu * t.mu, t.xi,
                               std::log(t.sigma_eta2), std::log(t.sigma_u2)};
        for (int k = 0; k < 7; ++k) stats[k].push_back(vals[k]);
    }
    // E log X = log b - digamma(3) for X ~ IG(3, b).
    const double elog = std::log(0.4) - (1.5 - 0.5772156649015329);
    const char* names[] = {"phi", "phi^2", "mu", "mu^2", "xi", "log sigma_eta2", "log sigma_u2"};
    const double expected[] = {0.0, 1.0 / 3.0, 0.0, 1.0, 0.0, elog, elog};
    bool all = true;
    std::string table;
    for (int k = 0; k < 7; ++k) {
        const auto m = jackknife_mean(stats[k]);
        const double z = (m.mean - expected[k]) / m.error;
        all = all && std::abs(z) <= kGewekeErrors;
        table += fmt(" %s:%.4f(z=%.1f)", names[k], m.mean, z);
    }
    o.check(all, fmt("getting-it-right, %d iterations, prior moments within %.0f errors:", iters,
                     kGewekeErrors) + table);
    return o;
}

// 8 ---------------------------------------------------------------------------

Outcome hansen_lunde(Context& ctx) {
    Outcome o;
    // Intraday prices: a share kappa = exp(xi) of each day's variance exp(h_t)
    // accrues over a 390-minute session sampled every minute, the rest
    // overnight. Close-to-close returns then have variance exp(h_t) while
    // E[RV_t] = exp(xi + h_t).
    const double kappa = 0.75;
    const double xi = std::log(kappa);
    const std::size_t days = 2001;
    const auto path = simulate(reference_params(), days, derive_seed(kDatasetSeed, 8)).h_true;
    Rng rng(derive_seed(kDatasetSeed, 81));
    std::vector<IntradayDay> input;
    const auto first = std::chrono::sys_days{std::chrono::year{2010} / 1 / 1};
    double price = std::log(100.0);
    for (std::size_t d = 0; d < days; ++d) {
        const double var = std::exp(path[d]);
        price += std::sqrt((1.0 - kappa) * var) * rng.normal();
        IntradayDay day{std::chrono::year_month_day{first + std::chrono::days{static_cast<int>(d)}}, {}};
        const double sd = std::sqrt(kappa * var / 390.0);
        for (int m = 0; m <= 390; ++m) {
            if (m > 0) price += sd * rng.normal();
            day.ticks.push_back({34200.0 + 60.0 * m, price});
        }
        input.push_back(std::move(day));
    }
    RvOptions opts;
    opts.returns = ReturnConvention::CloseToClose;
    const auto built = build_series(std::move(input), opts);
    const double c = hansen_lunde_c(built.series.y, built.series.rv);
    const double se = hansen_lunde_log_c_se(built.series.y, built.series.rv);
    o.check(std::abs(-std::log(c) - xi) <= kHansenLundeErrors * se,
            fmt("intraday synthetic: -log c = %.4f, xi = %.4f, delta-method se %.4f (|d|/se %.2f, "
                "%zu days)",
                -std::log(c), xi, se, std::abs(-std::log(c) - xi) / se, built.series.size()));

    // Reference RSV data: here ln RV carries N(0, sigma_u2) noise, so
    // -log c targets xi + sigma_u2 / 2 rather than xi.
    const auto& ds = ctx.ds;
    std::vector<double> rv;
    for (double l : ds.data.ln_rv) rv.push_back(std::exp(l));
    const double c2 = hansen_lunde_c(ds.data.y, rv);
    const double se2 = hansen_lunde_log_c_se(ds.data.y, rv);
    const auto& th = ds.theta_true;
    o.info(fmt("reference RSV data: -log c = %.4f +- %.4f; xi = %.2f (|d|/se %.2f), "
               "xi + sigma_u2/2 = %.2f (|d|/se %.2f)",
               -std::log(c2), se2, th.xi, std::abs(-std::log(c2) - th.xi) / se2,
               th.xi + th.sigma_u2 / 2, std::abs(-std::log(c2) - th.xi - th.sigma_u2 / 2) / se2));
    return o;
}

// 9 ---------------------------------------------------------------------------

Outcome determinism(Context&) {
    Outcome o;
    const fs::path dir = fs::temp_directory_path() / "rsvhmc_acceptance_determinism";
    fs::remove_all(dir);
    cli::SimulateConfig s;
    s.output = dir / "data.csv";
    s.seed = kDatasetSeed;
    static_cast<void>(cli::cmd_simulate(s));
    auto run = [&](const std::string& name, std::uint64_t seed) {
        cli::EstimateConfig e;
        e.data = s.output;
        e.output_dir = dir / name;
        e.n_burn = 200;
        e.n_keep = 1000;
        e.seed = seed;
        e.quiet = true;
        static_cast<void>(cli::cmd_estimate(e));
        std::ifstream is(e.output_dir / "chain.csv", std::ios::binary);
        std::ostringstream ss;
        ss << is.rdbuf();
        return ss.str();
    };
    const auto a = run("a", kChainSeed);
    const auto b = run("b", kChainSeed);
    const auto c = run("c", kChainSeed + 1);
    o.check(!a.empty() && a == b, fmt("same seed: chain files identical (%zu bytes)", a.size()));
    o.check(a != c, "different seed: chain files differ");
    fs::remove_all(dir);
    return o;
}

}  // namespace

int main(int argc, char** argv) {
    Context ctx;
    int only = 0;
    for (int i = 1; i < argc; ++i) {
        if (std::strcmp(argv[i], "--fast") == 0) {
            ctx.fast = true;
        } else if (std::strcmp(argv[i], "--only") == 0 && i + 1 < argc) {
            only = std::atoi(argv[++i]);
        } else {
            std::fprintf(stderr, "usage: %s [--fast] [--only N]\n", argv[0]);
            return 2;
        }
    }
    ctx.ds = simulate(reference_params(), 4000, kDatasetSeed);
    ctx.equilibrated = cli::equilibrated_path(ctx.ds.data, ctx.ds.theta_true, 1000,
                                              derive_seed(kChainSeed, 0));

    struct Criterion {
        int id;
        const char* title;
        std::function<Outcome(Context&)> run;
    };
    const Criterion criteria[] = {
        {1, "synthetic parameter recovery", parameter_recovery},
        {2, "energy-violation scaling", dh_scaling},
        {3, "optimal acceptance", optimal_acceptance},
        {4, "integrator efficiency ratio", efficiency_ratio},
        {5, "autocorrelation", autocorrelation},
        {6, "exactness properties", exactness},
        {7, "conditional-sampler correctness", conditional_samplers},
        {8, "Hansen-Lunde consistency", hansen_lunde},
        {9, "determinism", determinism},
    };

    int failed = 0, ran = 0;
    for (const auto& c : criteria) {
        const bool needed = only == 0 || only == c.id || (only == 4 && c.id == 3) ||
                            (only == 5 && c.id == 1);
        if (!needed) continue;
        ++ran;
        Outcome out;
        const auto t0 = std::chrono::steady_clock::now();
        try {
            out = c.run(ctx);
        } catch (const std::exception& e) {
            out.pass = false;
            out.lines.push_back(std::string("FAIL exception: ") + e.what());
        }
        for (const auto& l : out.lines) std::printf("    %s\n", l.c_str());
        std::printf("%s criterion %d: %s%s (%.0f s)\n", out.pass ? "PASS" : "FAIL", c.id, c.title,
                    ctx.fast && c.id == 1 ? " [fast variant]" : "", elapsed(t0));
        std::fflush(stdout);
        failed += !out.pass;
    }
    std::printf("%d of %d criteria passed\n", ran - failed, ran);
    return failed == 0 ? 0 : 1;
}
