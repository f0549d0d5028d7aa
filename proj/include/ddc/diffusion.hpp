#pragma once

#include <cmath>
#include <cstdint>
#include <functional>
#include <utility>
#include <vector>

#include "ddc/depth_field.hpp"
#include "ddc/errors.hpp"
#include "ddc/rng.hpp"
#include "ddc/schedule.hpp"

namespace ddc {

// Latent <-> depth transform pair. The default is the identity: the sampler
// runs directly in pixel space. A learned autoencoder would slot in here.
struct Codec {
    std::function<DepthField(const DepthField&)> encode = [](const DepthField& x) { return x; };
    std::function<DepthField(const DepthField&)> decode = [](const DepthField& z) { return z; };
};

// Denoiser interface: returns the posterior-mean estimate E[z0 | z_t, t].
// Implementations must be deterministic in (z_t, t).
class PriorModel {
   public:
    virtual ~PriorModel() = default;
    virtual DepthField denoise(const DepthField& z_t, int t,
                               const NoiseSchedule& schedule) const = 0;
};

inline DepthField gaussian_field(int width, int height, Rng& rng) {
    DepthField f(width, height);
    for (auto& v : f.values) v = rng.normal();
    return f;
}

// z_t = sqrt(abar_t) * z0 + sqrt(1 - abar_t) * eps, elementwise.
inline DepthField forward_noise(const DepthField& z0, int t, const DepthField& eps,
                                const NoiseSchedule& schedule) {
    require_same_shape(z0, eps, "forward_noise");
    const double abar = schedule.alpha_bar(t);
    const double a = std::sqrt(abar);
    const double b = std::sqrt(1.0 - abar);
    DepthField out = z0;
    for (std::size_t i = 0; i < out.size(); ++i)
        out.values[i] = a * z0.values[i] + b * eps.values[i];
    return out;
}

// Posterior-mean estimate of the clean field from a noisy one and a noise
// prediction: (z_t - sqrt(1 - abar) * eps_pred) / sqrt(abar).
inline DepthField tweedie_x0(const DepthField& z_t, int t, const DepthField& eps_pred,
                             const NoiseSchedule& schedule) {
    require_same_shape(z_t, eps_pred, "tweedie_x0");
    const double abar = schedule.alpha_bar(t);
    if (!(abar > 0.0)) throw NumericalError("tweedie_x0: alpha_bar(t) must be positive");
    const double inv_a = 1.0 / std::sqrt(abar);
    const double b = std::sqrt(1.0 - abar);
    DepthField out = z_t;
    for (std::size_t i = 0; i < out.size(); ++i)
        out.values[i] = (z_t.values[i] - b * eps_pred.values[i]) * inv_a;
    return out;
}

// Noise implied by a clean estimate: eps = (z_t - sqrt(abar) * z0) / sqrt(1 - abar).
inline DepthField implied_eps(const DepthField& z_t, int t, const DepthField& z0_hat,
                              const NoiseSchedule& schedule) {
    require_same_shape(z_t, z0_hat, "implied_eps");
    const double abar = schedule.alpha_bar(t);
    const double one_minus = 1.0 - abar;
    DepthField out = z_t;
    if (one_minus <= 1e-300) {
        // Noiseless level: the implied noise is indeterminate; use zero.
        for (auto& v : out.values) v = 0.0;
        return out;
    }
    const double a = std::sqrt(abar);
    const double inv_b = 1.0 / std::sqrt(one_minus);
    for (std::size_t i = 0; i < out.size(); ++i)
        out.values[i] = (z_t.values[i] - a * z0_hat.values[i]) * inv_b;
    return out;
}

// One reverse transition z_t -> z_{t_prev} given the clean estimate z0_hat.
// eta = 0 is fully deterministic; eta = 1 matches the ancestral variance.
inline DepthField ddim_step(const DepthField& z_t, int t, int t_prev, const DepthField& z0_hat,
                            const NoiseSchedule& schedule, double eta = 0.0,
                            std::uint64_t seed = 0) {
    require_same_shape(z_t, z0_hat, "ddim_step");
    if (t_prev > t) throw ParameterError("ddim_step: t_prev must not exceed t");
    const double abar_t = schedule.alpha_bar(t);
    const double abar_p = schedule.alpha_bar(t_prev);

    double sigma = 0.0;
    if (eta > 0.0 && t_prev < t && 1.0 - abar_t > 0.0 && abar_p > 0.0) {
        sigma = eta * std::sqrt((1.0 - abar_p) / (1.0 - abar_t)) *
                std::sqrt(1.0 - abar_t / abar_p);
    }
    double dir_sq = 1.0 - abar_p - sigma * sigma;
    if (dir_sq < 0.0) dir_sq = 0.0;
    const double a = std::sqrt(abar_p);
    const double dir = std::sqrt(dir_sq);

    const DepthField eps = implied_eps(z_t, t, z0_hat, schedule);
    DepthField out = z_t;
    if (sigma > 0.0) {
        Rng rng(seed);
        for (std::size_t i = 0; i < out.size(); ++i)
            out.values[i] = a * z0_hat.values[i] + dir * eps.values[i] + sigma * rng.normal();
    } else {
        for (std::size_t i = 0; i < out.size(); ++i)
            out.values[i] = a * z0_hat.values[i] + dir * eps.values[i];
    }
    return out;
}

// Plain reverse sampling from pure noise with the prior only; the "naive"
// completion baseline. Deterministic for a fixed seed when eta == 0.
inline DepthField reverse_sample(const PriorModel& prior, const NoiseSchedule& schedule,
                                 int num_steps, std::uint64_t seed, int width, int height,
                                 const Codec& codec = Codec{}, double eta = 0.0) {
    const std::vector<int> ts = sampling_timesteps(schedule, num_steps);
    Rng rng(seed);
    DepthField z = gaussian_field(width, height, rng);
    for (std::size_t i = 0; i < ts.size(); ++i) {
        const int t = ts[i];
        const int t_prev = (i + 1 < ts.size()) ? ts[i + 1] : 0;
        const DepthField z0_hat = prior.denoise(z, t, schedule);
        z = ddim_step(z, t, t_prev, z0_hat, schedule, eta, rng.next_u64());
    }
    return codec.decode(z);
}

// Round-trip through the prior: encode, noise to level t_inv, reverse-sample
// back. t_inv = 0 reduces to the codec round-trip.
inline DepthField reconstruct(const PriorModel& prior, const DepthField& x0, int t_inv,
                              const NoiseSchedule& schedule, std::uint64_t seed,
                              const Codec& codec = Codec{}, int num_steps = 50) {
    if (t_inv < 0 || t_inv > schedule.timesteps())
        throw ParameterError("reconstruct: t_inv outside [0, T]");
    DepthField z = codec.encode(x0);
    if (t_inv == 0) return codec.decode(z);

    Rng rng(seed);
    const DepthField eps = gaussian_field(x0.width, x0.height, rng);
    z = forward_noise(z, t_inv, eps, schedule);

    // Descend through the standard few-step grid restricted to <= t_inv.
    std::vector<int> ts;
    ts.push_back(t_inv);
    for (int t : sampling_timesteps(schedule, num_steps))
        if (t < t_inv) ts.push_back(t);
    for (std::size_t i = 0; i < ts.size(); ++i) {
        const int t = ts[i];
        const int t_prev = (i + 1 < ts.size()) ? ts[i + 1] : 0;
        const DepthField z0_hat = prior.denoise(z, t, schedule);
        z = ddim_step(z, t, t_prev, z0_hat, schedule, 0.0, rng.next_u64());
    }
    return codec.decode(z);
}

}  // namespace ddc
