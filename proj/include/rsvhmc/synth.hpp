#pragma once

#include <cmath>
#include <cstddef>
#include <cstdint>

#include "rsvhmc/error.hpp"
#include "rsvhmc/model.hpp"
#include "rsvhmc/rng.hpp"

namespace rsvhmc {

struct SyntheticDataset {
    ObservedSeries data;
    LatentPath h_true;
    ModelParams theta_true;
    std::uint64_t seed = 0;
};

/// Parameters of the reference synthetic study.
[[nodiscard]] inline ModelParams reference_params() {
    return ModelParams{0.93, -1.0, 0.3, 0.1, 0.2};
}

/// Forward simulation of the RSV model with h_1 drawn from the stationary
/// distribution. Draw order per t: eta (for t > 1), eps, u.
[[nodiscard]] inline SyntheticDataset simulate(const ModelParams& theta, std::size_t n,
                                               std::uint64_t seed) {
    theta.validate();
    if (n < 2) throw ValidationError("simulation needs n >= 2");

    Rng rng(seed);
    SyntheticDataset ds;
    ds.theta_true = theta;
    ds.seed = seed;
    ds.h_true.resize(n);
    ds.data.y.resize(n);
    ds.data.ln_rv.resize(n);

    const double sd_eta = std::sqrt(theta.sigma_eta2);
    const double sd_u = std::sqrt(theta.sigma_u2);
    for (std::size_t t = 0; t < n; ++t) {
        if (t == 0) {
            ds.h_true[0] = rng.normal(theta.mu, sd_eta / std::sqrt(1.0 - theta.phi * theta.phi));
        } else {
            ds.h_true[t] = theta.mu + theta.phi * (ds.h_true[t - 1] - theta.mu) + sd_eta * rng.normal();
        }
        ds.data.y[t] = std::exp(0.5 * ds.h_true[t]) * rng.normal();
        ds.data.ln_rv[t] = theta.xi + ds.h_true[t] + sd_u * rng.normal();
    }
    return ds;
}

}  // namespace rsvhmc
