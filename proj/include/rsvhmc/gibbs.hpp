#pragma once

// Full-conditional updates of (phi, mu, xi, sigma_eta2, sigma_u2) given the
// latent path and the data.

#include <cmath>
#include <cstddef>
#include <optional>
#include <span>

#include "rsvhmc/error.hpp"
#include "rsvhmc/model.hpp"
#include "rsvhmc/rng.hpp"

namespace rsvhmc {

struct GaussianPrior {
    double mean = 0.0;
    double variance = 1.0;
};

/// Priors on theta. mu and xi are flat unless a Gaussian prior is given;
/// phi is uniform on (-1, 1); both variances are inverse-gamma.
struct PriorConfig {
    double a_eta = 2.5;
    double b_eta = 0.025;
    double a_u = 2.5;
    double b_u = 0.025;
    std::optional<GaussianPrior> mu_prior;
    std::optional<GaussianPrior> xi_prior;

    void validate() const {
        if (!(a_eta > 0.0 && b_eta > 0.0 && a_u > 0.0 && b_u > 0.0)) {
            throw ValidationError("inverse-gamma shapes and scales must be positive");
        }
        for (const auto& g : {mu_prior, xi_prior}) {
            if (g && !(g->variance > 0.0)) {
                throw ValidationError("Gaussian prior variance must be positive");
            }
        }
    }
};

struct NormalConditional {
    double mean;
    double variance;
};

struct InverseGammaConditional {
    double shape;
    double scale;
};

namespace detail {

inline NormalConditional combine_with_prior(NormalConditional lik,
                                            const std::optional<GaussianPrior>& prior) {
    if (!prior) return lik;
    const double precision = 1.0 / lik.variance + 1.0 / prior->variance;
    const double mean = (lik.mean / lik.variance + prior->mean / prior->variance) / precision;
    return {mean, 1.0 / precision};
}

// Stationary term plus AR(1) residual sum of squares.
inline double ar_sum_of_squares(std::span<const double> h, double phi, double mu) {
    const double d0 = h[0] - mu;
    double ss = (1.0 - phi * phi) * d0 * d0;
    for (std::size_t t = 0; t + 1 < h.size(); ++t) {
        const double e = h[t + 1] - mu - phi * (h[t] - mu);
        ss += e * e;
    }
    return ss;
}

}  // namespace detail

[[nodiscard]] inline NormalConditional xi_conditional(std::span<const double> h,
                                                      const ModelParams& theta,
                                                      const ObservedSeries& data,
                                                      const PriorConfig& prior = {}) {
    const std::size_t n = h.size();
    double s = 0.0;
    for (std::size_t t = 0; t < n; ++t) s += data.ln_rv[t] - h[t];
    return detail::combine_with_prior({s / n, theta.sigma_u2 / n}, prior.xi_prior);
}

[[nodiscard]] inline InverseGammaConditional sigma_u2_conditional(std::span<const double> h,
                                                                  const ModelParams& theta,
                                                                  const ObservedSeries& data,
                                                                  const PriorConfig& prior) {
    double ss = 0.0;
    for (std::size_t t = 0; t < h.size(); ++t) {
        const double r = data.ln_rv[t] - theta.xi - h[t];
        ss += r * r;
    }
    return {0.5 * h.size() + prior.a_u, prior.b_u + 0.5 * ss};
}

[[nodiscard]] inline InverseGammaConditional sigma_eta2_conditional(std::span<const double> h,
                                                                    const ModelParams& theta,
                                                                    const PriorConfig& prior) {
    return {0.5 * h.size() + prior.a_eta,
            prior.b_eta + 0.5 * detail::ar_sum_of_squares(h, theta.phi, theta.mu)};
}

[[nodiscard]] inline NormalConditional mu_conditional(std::span<const double> h,
                                                      const ModelParams& theta,
                                                      const PriorConfig& prior = {}) {
    const std::size_t n = h.size();
    const double phi = theta.phi;
    const double a = (1.0 - phi * phi) + (n - 1) * (1.0 - phi) * (1.0 - phi);
    double s = (1.0 - phi * phi) * h[0];
    for (std::size_t t = 0; t + 1 < n; ++t) s += (1.0 - phi) * (h[t + 1] - phi * h[t]);
    return detail::combine_with_prior({s / a, theta.sigma_eta2 / a}, prior.mu_prior);
}

/// AR-regression proposal N(phi_hat, s^2) for phi, or nullopt when
/// sum (h_t - mu)^2 vanishes.
[[nodiscard]] inline std::optional<NormalConditional> phi_proposal(std::span<const double> h,
                                                                   const ModelParams& theta) {
    double sxy = 0.0;
    double sxx = 0.0;
    for (std::size_t t = 0; t + 1 < h.size(); ++t) {
        const double x = h[t] - theta.mu;
        sxy += (h[t + 1] - theta.mu) * x;
        sxx += x * x;
    }
    if (!(sxx > 0.0)) return std::nullopt;
    return NormalConditional{sxy / sxx, theta.sigma_eta2 / sxx};
}

/// log of the stationary-term factor sqrt(1 - phi^2) exp(-(1 - phi^2) d0^2 / (2 sigma_eta2))
/// that the Gaussian proposal leaves out.
[[nodiscard]] inline double phi_correction_log(double phi, std::span<const double> h,
                                               const ModelParams& theta) {
    const double d0 = h[0] - theta.mu;
    const double w = 1.0 - phi * phi;
    return 0.5 * std::log(w) - 0.5 * w * d0 * d0 / theta.sigma_eta2;
}

/// Unnormalized log full conditional of phi on (-1, 1).
[[nodiscard]] inline double phi_log_conditional(double phi, std::span<const double> h,
                                                const ModelParams& theta) {
    if (!(std::abs(phi) < 1.0)) return -INFINITY;
    return 0.5 * std::log(1.0 - phi * phi) -
           0.5 * detail::ar_sum_of_squares(h, phi, theta.mu) / theta.sigma_eta2;
}

inline double sample_xi(std::span<const double> h, const ModelParams& theta,
                        const ObservedSeries& data, Rng& rng, const PriorConfig& prior = {}) {
    const auto c = xi_conditional(h, theta, data, prior);
    return rng.normal(c.mean, std::sqrt(c.variance));
}

inline double sample_sigma_u2(std::span<const double> h, const ModelParams& theta,
                              const ObservedSeries& data, const PriorConfig& prior, Rng& rng) {
    const auto c = sigma_u2_conditional(h, theta, data, prior);
    return rng.inverse_gamma(c.shape, c.scale);
}

inline double sample_sigma_eta2(std::span<const double> h, const ModelParams& theta,
                                const PriorConfig& prior, Rng& rng) {
    const auto c = sigma_eta2_conditional(h, theta, prior);
    return rng.inverse_gamma(c.shape, c.scale);
}

inline double sample_mu(std::span<const double> h, const ModelParams& theta, Rng& rng,
                        const PriorConfig& prior = {}) {
    const auto c = mu_conditional(h, theta, prior);
    return rng.normal(c.mean, std::sqrt(c.variance));
}

/// One Metropolis-Hastings step for phi. Returns the new value, which is the
/// current value when the proposal is rejected.
inline double sample_phi(std::span<const double> h, const ModelParams& theta, Rng& rng) {
    const double current = theta.phi;
    if (const auto prop = phi_proposal(h, theta)) {
        const double candidate = rng.normal(prop->mean, std::sqrt(prop->variance));
        if (!(std::abs(candidate) < 1.0)) return current;
        const double log_ratio =
            phi_correction_log(candidate, h, theta) - phi_correction_log(current, h, theta);
        return std::log(rng.uniform()) < log_ratio ? candidate : current;
    }
    // Degenerate regression: independent uniform proposal.
    const double candidate = 2.0 * rng.uniform() - 1.0;
    if (!(std::abs(candidate) < 1.0)) return current;
    const double log_ratio =
        phi_log_conditional(candidate, h, theta) - phi_log_conditional(current, h, theta);
    return std::log(rng.uniform()) < log_ratio ? candidate : current;
}

/// One sweep in the fixed order phi, mu, xi, sigma_eta2, sigma_u2.
inline void gibbs_sweep(std::span<const double> h, ModelParams& theta,
                        const ObservedSeries& data, const PriorConfig& prior, Rng& rng) {
    theta.phi = sample_phi(h, theta, rng);
    theta.mu = sample_mu(h, theta, rng, prior);
    theta.xi = sample_xi(h, theta, data, rng, prior);
    theta.sigma_eta2 = sample_sigma_eta2(h, theta, prior, rng);
    theta.sigma_u2 = sample_sigma_u2(h, theta, data, prior, rng);
}

}  // namespace rsvhmc
