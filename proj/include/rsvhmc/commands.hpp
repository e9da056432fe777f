#pragma once

// Implementation of the command-line subcommands. Every command validates
// its whole configuration and all inputs before creating any output file.

#include <chrono>
#include <cmath>
#include <cstdint>
#include <cstdio>
#include <filesystem>
#include <fstream>
#include <functional>
#include <iostream>
#include <optional>
#include <string>
#include <vector>

#include "rsvhmc/diagnostics.hpp"
#include "rsvhmc/error.hpp"
#include "rsvhmc/gibbs.hpp"
#include "rsvhmc/hmc.hpp"
#include "rsvhmc/integrators.hpp"
#include "rsvhmc/io.hpp"
#include "rsvhmc/model.hpp"
#include "rsvhmc/rv.hpp"
#include "rsvhmc/synth.hpp"

namespace rsvhmc::cli {

namespace fs = std::filesystem;

/// Runs `fn`, turning input-file problems into validation errors.
template <class Fn>
auto validating(Fn&& fn) {
    try {
        return fn();
    } catch (const ValidationError&) {
        throw;
    } catch (const Error& e) {
        throw ValidationError(e.what());
    }
}

inline void ensure_parent(const fs::path& file) {
    const auto parent = file.parent_path();
    if (parent.empty()) return;
    std::error_code ec;
    fs::create_directories(parent, ec);
    if (ec) throw IoError("cannot create directory '" + parent.string() + "': " + ec.message());
}

[[nodiscard]] inline std::string fixed4(double v) {
    char buf[64];
    std::snprintf(buf, sizeof buf, "%.4f", v);
    return buf;
}

// simulate ------------------------------------------------------------------

struct SimulateConfig {
    fs::path output = "synthetic.csv";
    ModelParams theta = reference_params();
    std::size_t n = 4000;
    std::uint64_t seed = 1;
    bool write_h_true = true;
};

inline SyntheticDataset cmd_simulate(const SimulateConfig& cfg) {
    validating([&] {
        cfg.theta.validate();
        if (cfg.n < 2) throw ValidationError("n must be at least 2");
        if (cfg.output.empty()) throw ValidationError("no output path");
        return 0;
    });
    auto ds = simulate(cfg.theta, cfg.n, cfg.seed);
    ensure_parent(cfg.output);
    io::write_dataset(cfg.output, ds, cfg.write_h_true);
    return ds;
}

// estimate ------------------------------------------------------------------

struct EstimateConfig {
    fs::path data;
    fs::path output_dir = "estimate";
    Scheme scheme = Scheme::MinimumNorm2;
    double step_size = 0.222;
    double total_length = 2.0;
    /// Overrides total_length when set.
    std::optional<int> n_steps;
    double lambda = kMinimumNormLambda;
    std::int64_t n_burn = 5000;
    std::int64_t n_keep = 50000;
    PriorConfig prior;
    std::uint64_t seed = 1;
    /// One-based latent indices to record.
    std::vector<std::size_t> h_indices{10};
    std::optional<ModelParams> init;
    std::int64_t checkpoint_interval = 1000;
    bool resume = false;
    bool quiet = false;

    [[nodiscard]] TrajectoryConfig trajectory() const {
        if (n_steps) {
            TrajectoryConfig t{scheme, step_size, *n_steps, lambda};
            t.validate();
            return t;
        }
        return TrajectoryConfig::from_length(scheme, total_length, step_size, lambda);
    }
};

struct EstimateResult {
    ChainSummary chain;
    std::vector<ColumnSummary> summary;
    fs::path chain_file;
    fs::path summary_file;
    double wall_seconds = 0.0;
};

[[nodiscard]] inline fs::path chain_path(const fs::path& dir) { return dir / "chain.csv"; }
[[nodiscard]] inline fs::path summary_path(const fs::path& dir) { return dir / "summary.csv"; }
[[nodiscard]] inline fs::path checkpoint_path(const fs::path& dir) { return dir / "checkpoint.txt"; }

inline std::vector<ColumnSummary> summarize_chain(const io::ChainTable& chain) {
    const auto cols = io::chain_columns(chain);
    const std::size_t min = chain.records.size() >= 1000 ? 1000 : 1;
    auto out = posterior_summary(cols, min);
    if (chain.records.size() < 1000) {
        for (auto& s : out) {
            if (s.note.empty()) s.note = "fewer than 1000 samples";
        }
    }
    return out;
}

inline EstimateResult cmd_estimate(const EstimateConfig& cfg) {
    struct Prepared {
        ObservedSeries data;
        ChainOptions opts;
        ChainState state;
        std::int64_t truncate_at = -1;
    };
    auto prep = validating([&] {
        Prepared p;
        p.data = io::read_series(cfg.data);
        p.data.validate();
        p.opts.trajectory = cfg.trajectory();
        p.opts.n_burn = cfg.n_burn;
        p.opts.n_keep = cfg.n_keep;
        p.opts.prior = cfg.prior;
        p.opts.checkpoint_interval = cfg.checkpoint_interval;
        for (auto i : cfg.h_indices) {
            if (i == 0) throw ValidationError("latent indices are one-based");
            p.opts.recorded.push_back(i - 1);
        }
        p.opts.validate(p.data.size());
        if (cfg.resume) {
            p.state = io::load_checkpoint(checkpoint_path(cfg.output_dir));
            if (p.state.h.size() != p.data.size()) {
                throw ValidationError("checkpoint does not belong to this dataset");
            }
            p.truncate_at = p.state.pending ? p.state.pending->iteration : p.state.iteration;
            if (!fs::exists(chain_path(cfg.output_dir))) {
                throw ValidationError("resume requested but no chain file exists");
            }
        } else {
            const ModelParams init = cfg.init.value_or(default_initial_params(p.data));
            init.validate();
            p.state = initial_chain_state(p.data, init, cfg.seed);
        }
        return p;
    });
    if (!cfg.quiet) {
        prep.opts.log = [](const std::string& msg) { std::cerr << "warning: " << msg << '\n'; };
    }

    std::error_code ec;
    fs::create_directories(cfg.output_dir, ec);
    if (ec) throw IoError("cannot create '" + cfg.output_dir.string() + "': " + ec.message());

    EstimateResult result;
    result.chain_file = chain_path(cfg.output_dir);
    result.summary_file = summary_path(cfg.output_dir);
    const auto ckpt = checkpoint_path(cfg.output_dir);

    if (cfg.resume) io::truncate_chain(result.chain_file, prep.truncate_at);
    io::ChainWriter writer(result.chain_file, prep.opts.recorded, cfg.resume);

    const auto t0 = std::chrono::steady_clock::now();
    result.chain = run_chain(
        prep.data, prep.state, prep.opts, [&](const ChainRecord& r) { writer(r); },
        [&](const ChainState& s) { io::save_checkpoint(ckpt, s); });
    writer.close();
    result.wall_seconds =
        std::chrono::duration<double>(std::chrono::steady_clock::now() - t0).count();

    const auto tcfg = prep.opts.trajectory;
    io::Metadata meta;
    meta.set("data", cfg.data.string());
    meta.set("seed", static_cast<std::uint64_t>(prep.state.rng.seed()));
    meta.set("scheme", std::string(to_string(tcfg.scheme)));
    meta.set("step_size", tcfg.step_size);
    meta.set("n_steps", static_cast<std::int64_t>(tcfg.n_steps));
    meta.set("total_length", tcfg.total_length());
    meta.set("lambda", tcfg.lambda);
    meta.set("n_burn", cfg.n_burn);
    meta.set("n_keep", cfg.n_keep);
    meta.set("prior_a_eta", cfg.prior.a_eta);
    meta.set("prior_b_eta", cfg.prior.b_eta);
    meta.set("prior_a_u", cfg.prior.a_u);
    meta.set("prior_b_u", cfg.prior.b_u);
    meta.set("acceptance_rate", result.chain.acceptance_rate);
    meta.set("overall_acceptance_rate", result.chain.overall_acceptance_rate);
    meta.set("integration_failures", result.chain.integration_failures);
    meta.set("wall_time_seconds", result.wall_seconds);
    io::write_metadata(result.chain_file, meta);

    const auto chain = io::read_chain(result.chain_file);
    result.summary = summarize_chain(chain);
    io::write_summary(result.summary_file, result.summary);
    io::write_metadata(result.summary_file, meta);
    return result;
}

// scan ----------------------------------------------------------------------

struct ScanConfig {
    fs::path data;
    fs::path output = "scan.csv";
    Scheme scheme = Scheme::MinimumNorm2;
    std::vector<double> grid;
    /// Parameters held fixed during the scan; read from the dataset's
    /// true_* metadata when absent.
    std::optional<ModelParams> theta;
    ScanOptions options;
    /// HMC updates run once before the grid to equilibrate a shared start path.
    int pre_equilibrate = 1000;
};

inline ModelParams theta_from_metadata(const fs::path& data) {
    const auto meta = io::read_metadata(data);
    auto get = [&](const std::string& key) {
        const auto v = meta.get("true_" + key);
        if (!v) throw ValidationError("dataset metadata lacks true_" + key + "; pass parameters explicitly");
        return io::parse_double(*v, key);
    };
    return {get("phi"), get("mu"), get("xi"), get("sigma_eta2"), get("sigma_u2")};
}

/// Latent path after `updates` HMC updates at fixed theta from ln RV - xi.
inline LatentPath equilibrated_path(const ObservedSeries& data, const ModelParams& theta,
                                    int updates, std::uint64_t seed) {
    LatentPath h(data.size());
    for (std::size_t t = 0; t < h.size(); ++t) h[t] = data.ln_rv[t] - theta.xi;
    const auto cfg = TrajectoryConfig::from_length(Scheme::MinimumNorm2, 1.0, 0.1);
    Rng rng(seed);
    for (int k = 0; k < updates; ++k) {
        auto out = hmc_update(h, theta, data, cfg, rng);
        if (out.accepted) h = std::move(out.h_new);
    }
    return h;
}

inline ScanReport cmd_scan(const ScanConfig& cfg) {
    struct Prepared {
        ObservedSeries data;
        ModelParams theta;
    };
    auto prep = validating([&] {
        Prepared p;
        p.data = io::read_series(cfg.data);
        p.data.validate();
        p.theta = cfg.theta ? *cfg.theta : theta_from_metadata(cfg.data);
        p.theta.validate();
        if (cfg.grid.empty()) throw ValidationError("step-size grid is empty");
        for (double dt : cfg.grid) {
            static_cast<void>(TrajectoryConfig::from_length(cfg.scheme, cfg.options.length, dt,
                                                            cfg.options.lambda));
        }
        if (cfg.options.n_traj < 1 || cfg.options.n_warmup < 0 || cfg.pre_equilibrate < 0) {
            throw ValidationError("trajectory counts must be non-negative");
        }
        return p;
    });
    ScanOptions opts = cfg.options;
    if (opts.start.empty()) {
        opts.start = equilibrated_path(prep.data, prep.theta, cfg.pre_equilibrate,
                                       derive_seed(opts.seed, 0xE0E0));
    }
    auto report = stepsize_scan(prep.data, prep.theta, cfg.scheme, cfg.grid, opts);

    ensure_parent(cfg.output);
    io::write_scan(cfg.output, report);
    io::Metadata meta;
    meta.set("data", cfg.data.string());
    meta.set("scheme", std::string(to_string(cfg.scheme)));
    meta.set("total_length", opts.length);
    meta.set("lambda", opts.lambda);
    meta.set("n_traj", static_cast<std::int64_t>(opts.n_traj));
    meta.set("n_warmup", static_cast<std::int64_t>(opts.n_warmup));
    meta.set("seed", opts.seed);
    io::put_params(meta, "theta_", prep.theta);
    const auto& best = report.optimum();
    meta.set("optimum_step_size", best.step_size);
    meta.set("optimum_acceptance", best.acceptance);
    meta.set("optimum_efficiency", best.efficiency);
    meta.set("force_evaluations_per_step",
             static_cast<std::int64_t>(force_evaluations_per_step(cfg.scheme)));
    meta.set("optimum_efficiency_per_force_evaluation",
             best.efficiency / force_evaluations_per_step(cfg.scheme));
    io::write_metadata(cfg.output, meta);
    return report;
}

// rv-build ------------------------------------------------------------------

enum class InputFormat { Auto, Ticks, Daily };

struct RvBuildConfig {
    fs::path input;
    fs::path output = "rv_series.csv";
    InputFormat format = InputFormat::Auto;
    RvOptions rv;
};

struct RvBuildResult {
    BuildResult build;
    double c = 0.0;
};

[[nodiscard]] inline InputFormat detect_format(const fs::path& input) {
    auto is = io::open_input(input);
    std::string line;
    while (std::getline(is, line)) {
        if (io::trim(line).empty()) continue;
        const auto n = io::split(line).size();
        if (n == 2) return InputFormat::Ticks;
        if (n == 3) return InputFormat::Daily;
        throw ValidationError("cannot infer input format from a row with " + std::to_string(n) +
                              " fields");
    }
    throw ValidationError("input file '" + input.string() + "' is empty");
}

inline RvBuildResult cmd_rv_build(const RvBuildConfig& cfg) {
    auto result = validating([&] {
        cfg.rv.validate();
        const auto format = cfg.format == InputFormat::Auto ? detect_format(cfg.input) : cfg.format;
        auto is = io::open_input(cfg.input);
        RvBuildResult r;
        r.build = format == InputFormat::Ticks ? build_series(io::parse_ticks(is), cfg.rv)
                                               : build_series_from_daily(io::parse_daily(is));
        if (r.build.series.size() < 2) {
            throw ValidationError("fewer than two usable days");
        }
        r.c = hansen_lunde_c(r.build.series.y, r.build.series.rv);
        return r;
    });

    ensure_parent(cfg.output);
    io::write_rv_series(cfg.output, result.build.series, result.c);
    io::Metadata meta;
    meta.set("input", cfg.input.string());
    meta.set("grid_seconds", static_cast<std::int64_t>(cfg.rv.grid_seconds));
    meta.set("n_days", static_cast<std::int64_t>(result.build.series.size()));
    meta.set("n_rejected", static_cast<std::int64_t>(result.build.rejected.size()));
    meta.set("reordered", std::string(result.build.reordered ? "true" : "false"));
    meta.set("c", fixed4(result.c));
    meta.set("minus_log_c", fixed4(-std::log(result.c)));
    meta.set("c_full", result.c);
    for (std::size_t i = 0; i < result.build.rejected.size(); ++i) {
        const auto& rej = result.build.rejected[i];
        meta.set("rejected_" + std::to_string(i + 1), format_date(rej.date) + " " + rej.reason);
    }
    io::write_metadata(cfg.output, meta);
    return result;
}

// diagnose ------------------------------------------------------------------

struct DiagnoseConfig {
    fs::path chain;
    fs::path output = "summary.csv";
    /// Column whose ACF is tabulated to acf_output; empty disables.
    std::string acf_column;
    std::size_t acf_lags = 100;
    fs::path acf_output = "acf.csv";
};

inline std::vector<ColumnSummary> cmd_diagnose(const DiagnoseConfig& cfg) {
    auto chain = validating([&] {
        auto c = io::read_chain(cfg.chain);
        if (c.records.empty()) throw ValidationError("chain file has no rows");
        if (!cfg.acf_column.empty()) {
            const auto cols = io::chain_columns(c);
            bool found = false;
            for (const auto& col : cols) found = found || col.name == cfg.acf_column;
            if (!found) throw ValidationError("no column named '" + cfg.acf_column + "'");
            if (cfg.acf_lags < 1 || cfg.acf_lags >= c.records.size()) {
                throw ValidationError("acf lag count must lie in [1, samples)");
            }
        }
        return c;
    });
    auto summary = summarize_chain(chain);
    ensure_parent(cfg.output);
    io::write_summary(cfg.output, summary);
    if (!cfg.acf_column.empty()) {
        for (const auto& col : io::chain_columns(chain)) {
            if (col.name != cfg.acf_column) continue;
            const auto rho = acf(col.values, cfg.acf_lags);
            ensure_parent(cfg.acf_output);
            auto os = io::open_output(cfg.acf_output);
            os << "lag,acf\n";
            for (std::size_t t = 0; t < rho.size(); ++t) os << t << ',' << io::format_double(rho[t]) << '\n';
            io::close_checked(os, cfg.acf_output);
        }
    }
    return summary;
}

}  // namespace rsvhmc::cli
