#pragma once

#include <cmath>
#include <cstddef>
#include <cstdint>
#include <functional>
#include <limits>
#include <numeric>
#include <optional>
#include <string>
#include <utility>
#include <vector>

#include "rsvhmc/error.hpp"
#include "rsvhmc/gibbs.hpp"
#include "rsvhmc/integrators.hpp"
#include "rsvhmc/model.hpp"
#include "rsvhmc/rng.hpp"

namespace rsvhmc {

struct HmcOutcome {
    LatentPath h_new;
    double delta_h = 0.0;
    bool accepted = false;
    /// Non-empty when the trajectory hit a non-finite force or energy.
    std::string failure;
};

/// One HMC transition of the latent path: fresh N(0, 1) momenta, a
/// trajectory of cfg, and a Metropolis test with probability
/// min{1, exp(-dH)}. A failed trajectory counts as dH = +inf.
[[nodiscard]] inline HmcOutcome hmc_update(const LatentPath& h, const ModelParams& theta,
                                           const ObservedSeries& data,
                                           const TrajectoryConfig& cfg, Rng& rng) {
    PhaseState start{h, std::vector<double>(h.size())};
    for (double& p : start.p) p = rng.normal();
    const double h0 = hamiltonian(start, theta, data);

    HmcOutcome out;
    std::optional<PhaseState> end;
    try {
        end = integrate(std::move(start), cfg, RsvForce(theta, data));
        out.delta_h = hamiltonian(*end, theta, data) - h0;
    } catch (const DomainError& e) {
        out.failure = e.what();
    }
    if (!out.failure.empty() || !std::isfinite(out.delta_h)) {
        if (out.failure.empty()) out.failure = "non-finite energy change";
        out.delta_h = std::numeric_limits<double>::infinity();
    }
    // Always consume the uniform so that the stream position does not depend
    // on the outcome.
    const double u = rng.uniform();
    out.accepted = out.failure.empty() && (out.delta_h <= 0.0 || u < std::exp(-out.delta_h));
    out.h_new = out.accepted ? std::move(end->h) : h;
    return out;
}

struct ChainRecord {
    std::int64_t iteration = 0;
    ModelParams theta;
    std::vector<double> h_values;
    double delta_h = 0.0;
    bool accepted = false;

    friend bool operator==(const ChainRecord&, const ChainRecord&) = default;
};

struct ChainOptions {
    TrajectoryConfig trajectory;
    std::int64_t n_burn = 0;
    std::int64_t n_keep = 1;
    /// Zero-based indices of latent components copied into each record.
    std::vector<std::size_t> recorded;
    PriorConfig prior;
    bool update_params = true;
    /// Checkpoint every this many iterations; 0 disables periodic checkpoints.
    std::int64_t checkpoint_interval = 0;
    std::function<void(const std::string&)> log;

    void validate(std::size_t n) const {
        trajectory.validate();
        prior.validate();
        if (n_burn < 0) throw ValidationError("burn-in must be non-negative");
        if (n_keep < 1) throw ValidationError("at least one kept sample is required");
        if (checkpoint_interval < 0) throw ValidationError("checkpoint interval must be >= 0");
        for (auto i : recorded) {
            if (i >= n) {
                throw ValidationError("recorded latent index " + std::to_string(i + 1) +
                                      " exceeds series length " + std::to_string(n));
            }
        }
    }
};

/// Everything needed to continue a chain exactly where it stopped.
struct ChainState {
    ModelParams theta;
    LatentPath h;
    Rng rng{0};
    std::int64_t iteration = 0;
    std::int64_t kept = 0;
    std::int64_t accepted_kept = 0;
    std::int64_t accepted_total = 0;
    std::int64_t failures = 0;
    /// Record produced but not yet accepted by the sink.
    std::optional<ChainRecord> pending;
};

struct ChainSummary {
    std::int64_t iterations = 0;
    std::int64_t kept = 0;
    double acceptance_rate = 0.0;          // over kept iterations
    double overall_acceptance_rate = 0.0;  // burn-in included
    std::int64_t integration_failures = 0;
};

class ChainAborted : public Error {
public:
    using Error::Error;
};

/// Starting parameters used when none are supplied.
[[nodiscard]] inline ModelParams default_initial_params(const ObservedSeries& data) {
    ModelParams theta;
    theta.phi = 0.5;
    theta.mu = std::accumulate(data.ln_rv.begin(), data.ln_rv.end(), 0.0) /
               static_cast<double>(data.size());
    theta.xi = 0.0;
    theta.sigma_eta2 = 0.1;
    theta.sigma_u2 = 0.1;
    return theta;
}

/// h_t = ln RV_t - xi of the starting parameters.
[[nodiscard]] inline ChainState initial_chain_state(const ObservedSeries& data,
                                                    const ModelParams& theta,
                                                    std::uint64_t seed) {
    ChainState s;
    s.theta = theta;
    s.h.resize(data.size());
    for (std::size_t t = 0; t < data.size(); ++t) s.h[t] = data.ln_rv[t] - theta.xi;
    s.rng = Rng(seed);
    return s;
}

using ChainSink = std::function<void(const ChainRecord&)>;
using CheckpointFn = std::function<void(const ChainState&)>;

/// Runs (or resumes) a chain: each iteration is one HMC update of h
/// followed by one parameter sweep. Iterations past n_burn are handed to
/// `sink`. If the sink throws, the state is checkpointed and ChainAborted
/// is raised; rerunning with the same state and options resumes the chain.
inline ChainSummary run_chain(const ObservedSeries& data, ChainState& state,
                              const ChainOptions& opts, const ChainSink& sink,
                              const CheckpointFn& checkpoint = {}) {
    data.validate();
    state.theta.validate();
    opts.validate(data.size());
    if (state.h.size() != data.size()) {
        throw ValidationError("initial latent path length does not match the data");
    }

    auto emit = [&](ChainRecord rec) {
        try {
            sink(rec);
        } catch (const std::exception& e) {
            state.pending = std::move(rec);
            if (checkpoint) checkpoint(state);
            throw ChainAborted(std::string("chain recorder failed: ") + e.what());
        }
    };

    if (state.pending) {
        ChainRecord rec = std::move(*state.pending);
        state.pending.reset();
        emit(std::move(rec));
    }

    const std::int64_t total = opts.n_burn + opts.n_keep;
    while (state.iteration < total) {
        HmcOutcome out = hmc_update(state.h, state.theta, data, opts.trajectory, state.rng);
        if (!out.failure.empty()) {
            ++state.failures;
            if (opts.log) {
                opts.log("iteration " + std::to_string(state.iteration) +
                         ": trajectory rejected (" + out.failure + "), step " +
                         std::to_string(opts.trajectory.step_size) + " x " +
                         std::to_string(opts.trajectory.n_steps));
            }
        }
        if (out.accepted) {
            state.h = std::move(out.h_new);
            ++state.accepted_total;
        }
        if (opts.update_params) gibbs_sweep(state.h, state.theta, data, opts.prior, state.rng);

        const std::int64_t it = state.iteration++;
        if (it >= opts.n_burn) {
            ++state.kept;
            if (out.accepted) ++state.accepted_kept;
            ChainRecord rec;
            rec.iteration = it;
            rec.theta = state.theta;
            rec.h_values.reserve(opts.recorded.size());
            for (auto i : opts.recorded) rec.h_values.push_back(state.h[i]);
            rec.delta_h = out.delta_h;
            rec.accepted = out.accepted;
            emit(std::move(rec));
        }
        if (checkpoint && opts.checkpoint_interval > 0 &&
            state.iteration % opts.checkpoint_interval == 0) {
            checkpoint(state);
        }
    }

    ChainSummary summary;
    summary.iterations = state.iteration;
    summary.kept = state.kept;
    summary.acceptance_rate =
        state.kept > 0 ? static_cast<double>(state.accepted_kept) / state.kept : 0.0;
    summary.overall_acceptance_rate =
        state.iteration > 0 ? static_cast<double>(state.accepted_total) / state.iteration : 0.0;
    summary.integration_failures = state.failures;
    return summary;
}

}  // namespace rsvhmc
