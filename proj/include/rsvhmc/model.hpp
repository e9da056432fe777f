#pragma once

// Realized stochastic volatility model:
//
//   y_t       = exp(h_t / 2) eps_t,              eps_t ~ N(0, 1)
//   ln RV_t   = xi + h_t + u_t,                  u_t   ~ N(0, sigma_u2)
//   h_{t+1}   = mu + phi (h_t - mu) + eta_t,     eta_t ~ N(0, sigma_eta2)
//
// with h_1 drawn from the stationary law N(mu, sigma_eta2 / (1 - phi^2)).

#include <cmath>
#include <cstddef>
#include <limits>
#include <numbers>
#include <span>
#include <string>
#include <vector>

#include "rsvhmc/error.hpp"

namespace rsvhmc {

struct ModelParams {
    double phi = 0.0;
    double mu = 0.0;
    double xi = 0.0;
    double sigma_eta2 = 1.0;
    double sigma_u2 = 1.0;

    /// Throws ValidationError unless |phi| < 1, both variances are positive
    /// and every field is finite.
    void validate() const {
        auto finite = [](double v) { return std::isfinite(v); };
        if (!finite(phi) || !finite(mu) || !finite(xi) || !finite(sigma_eta2) ||
            !finite(sigma_u2)) {
            throw ValidationError("model parameters must be finite");
        }
        if (!(std::abs(phi) < 1.0)) {
            throw ValidationError("phi must satisfy |phi| < 1, got " + std::to_string(phi));
        }
        if (!(sigma_eta2 > 0.0)) {
            throw ValidationError("sigma_eta2 must be positive");
        }
        if (!(sigma_u2 > 0.0)) {
            throw ValidationError("sigma_u2 must be positive");
        }
    }

    friend bool operator==(const ModelParams&, const ModelParams&) = default;
};

/// Daily returns paired with log realized volatilities.
struct ObservedSeries {
    std::vector<double> y;
    std::vector<double> ln_rv;

    [[nodiscard]] std::size_t size() const noexcept { return y.size(); }

    void validate() const {
        if (y.size() != ln_rv.size()) {
            throw ValidationError("returns and log-RV series differ in length");
        }
        if (y.size() < 2) {
            throw ValidationError("series needs at least two observations");
        }
        for (std::size_t t = 0; t < y.size(); ++t) {
            if (!std::isfinite(y[t]) || !std::isfinite(ln_rv[t])) {
                throw ValidationError("non-finite observation at row " + std::to_string(t));
            }
        }
    }
};

/// Latent log-variances h_t = ln sigma_t^2.
using LatentPath = std::vector<double>;

/// Latent path together with its conjugate momenta.
struct PhaseState {
    LatentPath h;
    std::vector<double> p;
};

namespace detail {

inline void check_shapes(std::span<const double> h, const ObservedSeries& data) {
    if (data.y.size() != data.ln_rv.size() || h.size() != data.y.size() || h.empty()) {
        throw ValidationError("latent path length does not match the observed series");
    }
}

// exp(-h) with an overflow guard.
inline double exp_neg(double h, std::size_t t) {
    const double e = std::exp(-h);
    if (!(e <= std::numeric_limits<double>::max())) {
        throw DomainError("exp(-h_t) overflows or is undefined", t);
    }
    return e;
}

}  // namespace detail

/// Negative log conditional posterior of h given theta and the data, with
/// every h-independent constant dropped.
[[nodiscard]] inline double potential(std::span<const double> h, const ModelParams& theta,
                                      const ObservedSeries& data) {
    detail::check_shapes(h, data);
    const std::size_t n = h.size();
    const double inv_u = 1.0 / theta.sigma_u2;
    const double inv_eta = 1.0 / theta.sigma_eta2;

    double v = 0.0;
    for (std::size_t t = 0; t < n; ++t) {
        const double r = data.ln_rv[t] - theta.xi - h[t];
        v += 0.5 * h[t] + 0.5 * data.y[t] * data.y[t] * detail::exp_neg(h[t], t) +
             0.5 * r * r * inv_u;
    }
    const double d0 = h[0] - theta.mu;
    v += 0.5 * (1.0 - theta.phi * theta.phi) * d0 * d0 * inv_eta;
    for (std::size_t t = 0; t + 1 < n; ++t) {
        const double e = h[t + 1] - theta.mu - theta.phi * (h[t] - theta.mu);
        v += 0.5 * e * e * inv_eta;
    }
    if (!std::isfinite(v)) {
        for (std::size_t t = 0; t < n; ++t) {
            if (!std::isfinite(h[t])) throw DomainError("non-finite latent value", t);
        }
        throw DomainError("potential is not finite", 0);
    }
    return v;
}

/// Writes dV/dh_t into `out`, which must have the same length as `h`.
inline void grad_potential(std::span<const double> h, const ModelParams& theta,
                           const ObservedSeries& data, std::span<double> out) {
    detail::check_shapes(h, data);
    const std::size_t n = h.size();
    if (out.size() != n) {
        throw ValidationError("gradient buffer length does not match the latent path");
    }
    const double phi = theta.phi;
    const double mu = theta.mu;
    const double inv_u = 1.0 / theta.sigma_u2;
    const double inv_eta = 1.0 / theta.sigma_eta2;

    for (std::size_t t = 0; t < n; ++t) {
        out[t] = 0.5 - 0.5 * data.y[t] * data.y[t] * detail::exp_neg(h[t], t) -
                 (data.ln_rv[t] - theta.xi - h[t]) * inv_u;
    }
    out[0] += (1.0 - phi * phi) * (h[0] - mu) * inv_eta;
    for (std::size_t t = 0; t + 1 < n; ++t) {
        // e_t couples h_t and h_{t+1}.
        const double e = (h[t + 1] - mu - phi * (h[t] - mu)) * inv_eta;
        out[t + 1] += e;
        out[t] -= phi * e;
    }
    for (std::size_t t = 0; t < n; ++t) {
        if (!std::isfinite(out[t])) throw DomainError("gradient is not finite", t);
    }
}

[[nodiscard]] inline std::vector<double> grad_potential(std::span<const double> h,
                                                        const ModelParams& theta,
                                                        const ObservedSeries& data) {
    std::vector<double> g(h.size());
    grad_potential(h, theta, data, g);
    return g;
}

[[nodiscard]] inline double kinetic_energy(std::span<const double> p) noexcept {
    double k = 0.0;
    for (double v : p) k += v * v;
    return 0.5 * k;
}

/// H(p, h) = sum p^2 / 2 + V(h).
[[nodiscard]] inline double hamiltonian(const PhaseState& state, const ModelParams& theta,
                                        const ObservedSeries& data) {
    if (state.p.size() != state.h.size()) {
        throw ValidationError("momentum and latent path differ in length");
    }
    return kinetic_energy(state.p) + potential(state.h, theta, data);
}

namespace detail {

inline double log_normal_pdf(double x, double mean, double var) {
    const double d = x - mean;
    return -0.5 * std::log(2.0 * std::numbers::pi * var) - 0.5 * d * d / var;
}

}  // namespace detail

/// Fully normalized log p(y, ln RV, h | theta).
[[nodiscard]] inline double joint_log_density(std::span<const double> h,
                                              const ModelParams& theta,
                                              const ObservedSeries& data) {
    detail::check_shapes(h, data);
    const std::size_t n = h.size();
    double lp = 0.0;
    for (std::size_t t = 0; t < n; ++t) {
        // N(0, e^h) written out so that the overflow guard applies.
        lp += -0.5 * std::log(2.0 * std::numbers::pi) - 0.5 * h[t] -
              0.5 * data.y[t] * data.y[t] * detail::exp_neg(h[t], t);
        lp += detail::log_normal_pdf(data.ln_rv[t], theta.xi + h[t], theta.sigma_u2);
    }
    lp += detail::log_normal_pdf(h[0], theta.mu,
                                 theta.sigma_eta2 / (1.0 - theta.phi * theta.phi));
    for (std::size_t t = 0; t + 1 < n; ++t) {
        lp += detail::log_normal_pdf(h[t + 1], theta.mu + theta.phi * (h[t] - theta.mu),
                                     theta.sigma_eta2);
    }
    if (!std::isfinite(lp)) throw DomainError("joint log-density is not finite", 0);
    return lp;
}

}  // namespace rsvhmc
