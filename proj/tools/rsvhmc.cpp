// rsvhmc: Bayesian estimation of the realized stochastic volatility model
// with Hybrid Monte Carlo.
//
//   rsvhmc simulate --output data.csv --n 4000 --seed 7
//   rsvhmc estimate --data data.csv --out-dir run --integrator 2mni --step-size 0.222
//   rsvhmc scan     --data data.csv --integrator 2lfi --grid 0.05,0.1,0.15 --output scan.csv
//   rsvhmc rv-build --input ticks.csv --output series.csv --grid-seconds 60
//   rsvhmc diagnose --chain run/chain.csv --output summary.csv
//
// Exit codes: 0 success, 1 validation error, 2 runtime failure.

#include <cmath>
#include <cstdint>
#include <iostream>
#include <optional>
#include <string>
#include <vector>

#include "CLI11.hpp"
#include "rsvhmc/commands.hpp"

namespace {

using namespace rsvhmc;

double parse_clock(const std::string& s) {
    // HH:MM or HH:MM:SS
    const auto parts = io::split(s, ':');
    if (parts.size() < 2 || parts.size() > 3) throw ValidationError("bad clock time '" + s + "'");
    double secs = 0.0;
    double scale = 3600.0;
    for (const auto& p : parts) {
        secs += scale * io::parse_double(p, "clock time");
        scale /= 60.0;
    }
    return secs;
}

struct ParamFlags {
    std::optional<double> phi, mu, xi, sigma_eta2, sigma_u2;

    void add(CLI::App& app) {
        app.add_option("--phi", phi, "AR(1) persistence");
        app.add_option("--mu", mu, "mean log-variance");
        app.add_option("--xi", xi, "log-RV bias");
        app.add_option("--sigma-eta2", sigma_eta2, "latent innovation variance");
        app.add_option("--sigma-u2", sigma_u2, "log-RV noise variance");
    }

    [[nodiscard]] bool any() const { return phi || mu || xi || sigma_eta2 || sigma_u2; }

    [[nodiscard]] ModelParams over(ModelParams base) const {
        if (phi) base.phi = *phi;
        if (mu) base.mu = *mu;
        if (xi) base.xi = *xi;
        if (sigma_eta2) base.sigma_eta2 = *sigma_eta2;
        if (sigma_u2) base.sigma_u2 = *sigma_u2;
        return base;
    }
};

}  // namespace

int main(int argc, char** argv) {
    CLI::App app{"Realized stochastic volatility estimation with Hybrid Monte Carlo"};
    app.set_config("--config", "", "TOML/INI file supplying defaults; flags override");
    app.require_subcommand(1);

    // simulate
    cli::SimulateConfig sim;
    ParamFlags sim_theta;
    bool sim_no_h = false;
    auto* simulate = app.add_subcommand("simulate", "generate a synthetic dataset");
    simulate->add_option("--output,-o", sim.output, "series file to write")->capture_default_str();
    simulate->add_option("--n", sim.n, "number of days")->capture_default_str();
    simulate->add_option("--seed", sim.seed, "64-bit seed")->capture_default_str();
    simulate->add_flag("--no-h-true", sim_no_h, "omit the latent path column");
    sim_theta.add(*simulate);

    // estimate
    cli::EstimateConfig est;
    std::string est_scheme = "2mni";
    std::optional<int> est_n_steps;
    std::optional<double> mu_prior_mean, mu_prior_var, xi_prior_mean, xi_prior_var;
    ParamFlags est_init;
    auto* estimate = app.add_subcommand("estimate", "run the HMC-within-Gibbs sampler");
    estimate->add_option("--data,-d", est.data, "series file")->required();
    estimate->add_option("--out-dir,-o", est.output_dir, "output directory")->capture_default_str();
    estimate->add_option("--integrator", est_scheme, "2lfi or 2mni")->capture_default_str();
    estimate->add_option("--step-size", est.step_size, "MD step size")->capture_default_str();
    estimate->add_option("--length", est.total_length, "trajectory length")->capture_default_str();
    estimate->add_option("--n-steps", est_n_steps, "steps per trajectory (overrides --length)");
    estimate->add_option("--lambda", est.lambda, "minimum-norm parameter")->capture_default_str();
    estimate->add_option("--burn", est.n_burn, "burn-in iterations")->capture_default_str();
    estimate->add_option("--keep", est.n_keep, "kept iterations")->capture_default_str();
    estimate->add_option("--seed", est.seed, "64-bit seed")->capture_default_str();
    estimate->add_option("--record", est.h_indices, "one-based latent indices to record")
        ->delimiter(',')
        ->capture_default_str();
    estimate->add_option("--checkpoint-every", est.checkpoint_interval, "iterations between checkpoints")
        ->capture_default_str();
    estimate->add_flag("--resume", est.resume, "continue from the checkpoint in --out-dir");
    estimate->add_flag("--quiet", est.quiet, "suppress trajectory warnings");
    estimate->add_option("--a-eta", est.prior.a_eta, "inverse-gamma shape for sigma_eta2")->capture_default_str();
    estimate->add_option("--b-eta", est.prior.b_eta, "inverse-gamma scale for sigma_eta2")->capture_default_str();
    estimate->add_option("--a-u", est.prior.a_u, "inverse-gamma shape for sigma_u2")->capture_default_str();
    estimate->add_option("--b-u", est.prior.b_u, "inverse-gamma scale for sigma_u2")->capture_default_str();
    estimate->add_option("--mu-prior-mean", mu_prior_mean, "Gaussian prior mean for mu (flat if unset)");
    estimate->add_option("--mu-prior-var", mu_prior_var, "Gaussian prior variance for mu");
    estimate->add_option("--xi-prior-mean", xi_prior_mean, "Gaussian prior mean for xi (flat if unset)");
    estimate->add_option("--xi-prior-var", xi_prior_var, "Gaussian prior variance for xi");
    est_init.add(*estimate);

    // scan
    cli::ScanConfig scan;
    std::string scan_scheme = "2mni";
    ParamFlags scan_theta;
    auto* scan_cmd = app.add_subcommand("scan", "step-size scan of acceptance, RMS dH and efficiency");
    scan_cmd->add_option("--data,-d", scan.data, "series file")->required();
    scan_cmd->add_option("--output,-o", scan.output, "scan table")->capture_default_str();
    scan_cmd->add_option("--integrator", scan_scheme, "2lfi or 2mni")->capture_default_str();
    scan_cmd->add_option("--grid", scan.grid, "step sizes")->delimiter(',')->required();
    scan_cmd->add_option("--length", scan.options.length, "trajectory length")->capture_default_str();
    scan_cmd->add_option("--n-traj", scan.options.n_traj, "measured trajectories per point")->capture_default_str();
    scan_cmd->add_option("--warmup", scan.options.n_warmup, "discarded trajectories per point")->capture_default_str();
    scan_cmd->add_option("--pre-equilibrate", scan.pre_equilibrate, "shared equilibration updates")->capture_default_str();
    scan_cmd->add_option("--lambda", scan.options.lambda, "minimum-norm parameter")->capture_default_str();
    scan_cmd->add_option("--seed", scan.options.seed, "master seed")->capture_default_str();
    scan_cmd->add_option("--threads", scan.options.threads, "worker threads")->capture_default_str();
    scan_theta.add(*scan_cmd);

    // rv-build
    cli::RvBuildConfig rvb;
    std::string rv_format = "auto";
    std::string rv_returns = "open-to-close";
    std::optional<std::string> session_open, session_close;
    auto* rv_cmd = app.add_subcommand("rv-build", "daily realized variances from tick or daily data");
    rv_cmd->add_option("--input,-i", rvb.input, "tick or daily file")->required();
    rv_cmd->add_option("--output,-o", rvb.output, "series file")->capture_default_str();
    rv_cmd->add_option("--format", rv_format, "auto, ticks or daily")->capture_default_str();
    rv_cmd->add_option("--grid-seconds", rvb.rv.grid_seconds, "sampling grid")->capture_default_str();
    rv_cmd->add_option("--session-open", session_open, "HH:MM session start");
    rv_cmd->add_option("--session-close", session_close, "HH:MM session end");
    rv_cmd->add_option("--min-coverage", rvb.rv.min_coverage, "minimum grid coverage")->capture_default_str();
    rv_cmd->add_option("--returns", rv_returns, "open-to-close or close-to-close")->capture_default_str();

    // diagnose
    cli::DiagnoseConfig diag;
    auto* diagnose = app.add_subcommand("diagnose", "posterior summary of an existing chain file");
    diagnose->add_option("--chain,-c", diag.chain, "chain file")->required();
    diagnose->add_option("--output,-o", diag.output, "summary table")->capture_default_str();
    diagnose->add_option("--acf-column", diag.acf_column, "column to tabulate the ACF of");
    diagnose->add_option("--acf-lags", diag.acf_lags, "maximum ACF lag")->capture_default_str();
    diagnose->add_option("--acf-output", diag.acf_output, "ACF table")->capture_default_str();

    try {
        app.parse(argc, argv);
    } catch (const CLI::ParseError& e) {
        const int code = app.exit(e);
        return code == 0 ? 0 : 1;
    }

    try {
        if (*simulate) {
            sim.theta = sim_theta.over(sim.theta);
            sim.write_h_true = !sim_no_h;
            const auto ds = cli::cmd_simulate(sim);
            std::cout << "wrote " << ds.data.size() << " days to " << sim.output.string() << '\n';
        } else if (*estimate) {
            est.scheme = parse_scheme(est_scheme);
            est.n_steps = est_n_steps;
            if (mu_prior_mean || mu_prior_var) {
                est.prior.mu_prior = GaussianPrior{mu_prior_mean.value_or(0.0), mu_prior_var.value_or(1.0)};
            }
            if (xi_prior_mean || xi_prior_var) {
                est.prior.xi_prior = GaussianPrior{xi_prior_mean.value_or(0.0), xi_prior_var.value_or(1.0)};
            }
            if (est_init.any()) {
                // Unspecified fields keep the data-driven defaults.
                const auto data = cli::validating([&] { return io::read_series(est.data); });
                est.init = est_init.over(default_initial_params(data));
            }
            const auto r = cli::cmd_estimate(est);
            std::cout << "acceptance " << r.chain.acceptance_rate << " over " << r.chain.kept
                      << " kept iterations (" << r.wall_seconds << " s)\n";
            for (const auto& s : r.summary) {
                std::cout << "  " << s.name << ": mean " << s.mean << " sd " << s.sd;
                if (s.act) std::cout << " 2tau_int " << s.act->two_tau_int << " (" << s.act->error << ")";
                if (!s.note.empty()) std::cout << " [" << s.note << "]";
                std::cout << '\n';
            }
        } else if (*scan_cmd) {
            scan.scheme = parse_scheme(scan_scheme);
            if (scan_theta.any()) {
                ModelParams base = cli::validating([&] { return cli::theta_from_metadata(scan.data); });
                scan.theta = scan_theta.over(base);
            }
            const auto report = cli::cmd_scan(scan);
            const auto& best = report.optimum();
            std::cout << "optimum step " << best.step_size << " acceptance " << best.acceptance
                      << " efficiency " << best.efficiency << '\n';
        } else if (*rv_cmd) {
            if (rv_format == "auto") rvb.format = cli::InputFormat::Auto;
            else if (rv_format == "ticks") rvb.format = cli::InputFormat::Ticks;
            else if (rv_format == "daily") rvb.format = cli::InputFormat::Daily;
            else throw ValidationError("unknown input format '" + rv_format + "'");
            if (rv_returns == "open-to-close") rvb.rv.returns = ReturnConvention::OpenToClose;
            else if (rv_returns == "close-to-close") rvb.rv.returns = ReturnConvention::CloseToClose;
            else throw ValidationError("unknown return convention '" + rv_returns + "'");
            if (session_open) rvb.rv.session_open = parse_clock(*session_open);
            if (session_close) rvb.rv.session_close = parse_clock(*session_close);
            const auto r = cli::cmd_rv_build(rvb);
            std::cout << "days " << r.build.series.size() << " rejected " << r.build.rejected.size()
                      << " c = " << cli::fixed4(r.c) << " -log(c) = " << cli::fixed4(-std::log(r.c))
                      << '\n';
            for (const auto& rej : r.build.rejected) {
                std::cerr << "rejected " << format_date(rej.date) << ": " << rej.reason << '\n';
            }
        } else if (*diagnose) {
            const auto summary = cli::cmd_diagnose(diag);
            for (const auto& s : summary) {
                std::cout << s.name << ": mean " << s.mean << " sd " << s.sd;
                if (s.act) std::cout << " 2tau_int " << s.act->two_tau_int << " (" << s.act->error << ")";
                if (!s.note.empty()) std::cout << " [" << s.note << "]";
                std::cout << '\n';
            }
        }
    } catch (const ValidationError& e) {
        std::cerr << "error: " << e.what() << '\n';
        return 1;
    } catch (const std::exception& e) {
        std::cerr << "error: " << e.what() << '\n';
        return 2;
    }
    return 0;
}
