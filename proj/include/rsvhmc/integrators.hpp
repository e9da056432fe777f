#pragma once

#include <algorithm>
#include <cmath>
#include <concepts>
#include <span>
#include <string>
#include <string_view>
#include <utility>
#include <vector>

#include "rsvhmc/error.hpp"
#include "rsvhmc/model.hpp"

namespace rsvhmc {

/// Splitting parameter of the second-order minimum-norm scheme.
inline constexpr double kMinimumNormLambda = 0.193183327;

enum class Scheme { Leapfrog2, MinimumNorm2 };

[[nodiscard]] inline std::string_view to_string(Scheme s) noexcept {
    return s == Scheme::Leapfrog2 ? "2lfi" : "2mni";
}

[[nodiscard]] inline Scheme parse_scheme(std::string_view name) {
    if (name == "2lfi" || name == "leapfrog") return Scheme::Leapfrog2;
    if (name == "2mni" || name == "minimum-norm") return Scheme::MinimumNorm2;
    throw ValidationError("unknown integrator '" + std::string(name) + "'");
}

/// Force evaluations each scheme performs per step.
[[nodiscard]] constexpr int force_evaluations_per_step(Scheme s) noexcept {
    return s == Scheme::Leapfrog2 ? 1 : 2;
}

/// A callable writing dV/dh into its second argument.
template <class F>
concept ForceField = std::invocable<F&, std::span<const double>, std::span<double>>;

struct TrajectoryConfig {
    Scheme scheme = Scheme::MinimumNorm2;
    double step_size = 0.1;
    int n_steps = 10;
    double lambda = kMinimumNormLambda;

    [[nodiscard]] double total_length() const noexcept { return step_size * n_steps; }

    void validate() const {
        if (!(step_size > 0.0) || !std::isfinite(step_size)) {
            throw ValidationError("step size must be positive and finite");
        }
        if (n_steps < 1) throw ValidationError("trajectory needs at least one step");
        if (scheme == Scheme::MinimumNorm2 && !(lambda > 0.0 && lambda < 0.5)) {
            throw ValidationError("minimum-norm lambda must lie in (0, 0.5)");
        }
    }

    /// Trajectory of exact length `length`: n_steps = round(length / step) and
    /// the step is then shrunk or stretched to length / n_steps.
    [[nodiscard]] static TrajectoryConfig from_length(Scheme scheme, double length,
                                                      double step,
                                                      double lambda = kMinimumNormLambda) {
        if (!(length > 0.0) || !(step > 0.0)) {
            throw ValidationError("trajectory length and step size must be positive");
        }
        TrajectoryConfig cfg;
        cfg.scheme = scheme;
        cfg.lambda = lambda;
        cfg.n_steps = std::max(1, static_cast<int>(std::lround(length / step)));
        cfg.step_size = length / cfg.n_steps;
        cfg.validate();
        return cfg;
    }
};

namespace detail {

inline void drift(std::span<double> h, std::span<const double> p, double dt) noexcept {
    for (std::size_t i = 0; i < h.size(); ++i) h[i] += dt * p[i];
}

template <ForceField Force>
void kick(PhaseState& s, double dt, Force& force, std::span<double> scratch) {
    force(std::span<const double>(s.h), scratch);
    for (std::size_t i = 0; i < s.p.size(); ++i) s.p[i] -= dt * scratch[i];
}

inline void check_state(const PhaseState& s) {
    if (s.h.size() != s.p.size()) {
        throw ValidationError("momentum and latent path differ in length");
    }
}

// e^{dt T/2} e^{dt V} e^{dt T/2}
template <ForceField Force>
void leapfrog_in_place(PhaseState& s, double dt, Force& force, std::span<double> scratch) {
    drift(s.h, s.p, 0.5 * dt);
    kick(s, dt, force, scratch);
    drift(s.h, s.p, 0.5 * dt);
}

// e^{l dt T} e^{dt V/2} e^{(1-2l) dt T} e^{dt V/2} e^{l dt T}
template <ForceField Force>
void minimum_norm_in_place(PhaseState& s, double dt, double lambda, Force& force,
                           std::span<double> scratch) {
    drift(s.h, s.p, lambda * dt);
    kick(s, 0.5 * dt, force, scratch);
    drift(s.h, s.p, (1.0 - 2.0 * lambda) * dt);
    kick(s, 0.5 * dt, force, scratch);
    drift(s.h, s.p, lambda * dt);
}

}  // namespace detail

template <ForceField Force>
[[nodiscard]] PhaseState leapfrog_step(PhaseState state, double step_size, Force&& force) {
    detail::check_state(state);
    if (!(step_size > 0.0)) throw ValidationError("step size must be positive");
    std::vector<double> scratch(state.h.size());
    detail::leapfrog_in_place(state, step_size, force, scratch);
    return state;
}

template <ForceField Force>
[[nodiscard]] PhaseState minimum_norm_step(PhaseState state, double step_size, double lambda,
                                           Force&& force) {
    detail::check_state(state);
    if (!(step_size > 0.0)) throw ValidationError("step size must be positive");
    if (!(lambda > 0.0 && lambda < 0.5)) {
        throw ValidationError("minimum-norm lambda must lie in (0, 0.5)");
    }
    std::vector<double> scratch(state.h.size());
    detail::minimum_norm_in_place(state, step_size, lambda, force, scratch);
    return state;
}

/// Applies the configured step cfg.n_steps times. Half-kicks at step
/// boundaries are not fused, so the force is evaluated exactly
/// n_steps * force_evaluations_per_step(cfg.scheme) times.
template <ForceField Force>
[[nodiscard]] PhaseState integrate(PhaseState state, const TrajectoryConfig& cfg,
                                   Force&& force) {
    cfg.validate();
    detail::check_state(state);
    std::vector<double> scratch(state.h.size());
    for (int k = 0; k < cfg.n_steps; ++k) {
        if (cfg.scheme == Scheme::Leapfrog2) {
            detail::leapfrog_in_place(state, cfg.step_size, force, scratch);
        } else {
            detail::minimum_norm_in_place(state, cfg.step_size, cfg.lambda, force, scratch);
        }
    }
    return state;
}

/// Force field of the latent path for fixed parameters and data.
class RsvForce {
public:
    RsvForce(const ModelParams& theta, const ObservedSeries& data)
        : theta_(&theta), data_(&data) {}

    void operator()(std::span<const double> h, std::span<double> grad) const {
        grad_potential(h, *theta_, *data_, grad);
    }

private:
    const ModelParams* theta_;
    const ObservedSeries* data_;
};

}  // namespace rsvhmc
