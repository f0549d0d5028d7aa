#pragma once

#include <algorithm>
#include <cmath>
#include <cstdint>
#include <limits>
#include <string>
#include <vector>

#include "ddc/depth_field.hpp"
#include "ddc/diffusion.hpp"
#include "ddc/errors.hpp"
#include "ddc/losses.hpp"
#include "ddc/priors.hpp"
#include "ddc/rng.hpp"
#include "ddc/schedule.hpp"

namespace ddc {

struct AlignmentConfig {
    int num_steps = 50;            // reverse sampling steps
    double start_fraction = 1.0 / 3.0;  // fraction of steps before the first optimization
    int interval = 5;              // steps between optimization loops
    int inner_iters = 200;         // iterations per optimization loop
    double inner_lr = 0.05;        // step size on scale-normalized fields
    double momentum = 0.9;
    double guidance_weight = 0.005;  // zeta, the soft-guidance weight
    std::uint64_t seed = 0;
    LossConfig loss_cfg;

    // Inner-objective variants. The default minimizes the full loss; the
    // measurement-only / quadratic forms exist for fixtures and ablations.
    bool measurement_only = false;
    bool l2_measurement = false;          // sum of squares instead of mean L1
    const GmrfPrior* quad_reg = nullptr;  // optional quadratic regularizer
    double quad_reg_weight = 0.0;

    bool downsample_2x = false;  // optimize at half resolution, upsample after

    void validate() const {
        if (num_steps < 1) throw ParameterError("num_steps must be >= 1");
        if (!(start_fraction >= 0.0) || !(start_fraction < 1.0))
            throw ParameterError("start_fraction must be in [0, 1)");
        if (interval < 1) throw ParameterError("interval must be >= 1");
        if (inner_iters < 0) throw ParameterError("inner_iters must be >= 0");
        if (!(momentum >= 0.0) || !(momentum < 1.0))
            throw ParameterError("momentum must be in [0, 1)");
        loss_cfg.validate();
    }
};

namespace detail {

struct InnerEval {
    double value = 0.0;
    DepthField grad;
};

inline InnerEval inner_objective(const DepthField& pred, const SparseMeasurement& y,
                                 const GuidanceImage& guidance, const DepthField& d_struct,
                                 const AlignmentConfig& cfg) {
    InnerEval ev;
    if (cfg.l2_measurement) {
        ev.grad = DepthField(pred.width, pred.height, 0.0);
        double acc = 0.0;
        for (std::size_t i = 0; i < pred.size(); ++i) {
            if (!y.mask[i]) continue;
            const double d = pred.values[i] - y.values[i];
            acc += 0.5 * d * d;
            ev.grad.values[i] = d;
        }
        ev.value = acc;
    } else if (cfg.measurement_only) {
        LossValueGrad l = loss_depth(pred, y);
        ev.value = l.value;
        ev.grad = std::move(l.grad);
    } else {
        LossValueGrad l = total_loss(pred, y, guidance, d_struct, cfg.loss_cfg);
        ev.value = l.value;
        ev.grad = std::move(l.grad);
    }
    if (cfg.quad_reg && cfg.quad_reg_weight > 0.0) {
        DepthField reg(pred.width, pred.height, 0.0);
        cfg.quad_reg->apply_system(pred, 0.0, reg);
        double acc = 0.0;
        for (std::size_t i = 0; i < pred.size(); ++i) {
            acc += 0.5 * pred.values[i] * reg.values[i];
            ev.grad.values[i] += cfg.quad_reg_weight * reg.values[i];
        }
        ev.value += cfg.quad_reg_weight * acc;
    }
    return ev;
}

// Metric scale of the measurements; the inner step size is expressed relative
// to it so the optimizer behaves the same across depth ranges.
inline double measurement_scale(const SparseMeasurement& y) {
    double sum = 0.0;
    std::size_t n = 0;
    for (std::size_t i = 0; i < y.size(); ++i) {
        if (!y.mask[i]) continue;
        sum += std::abs(y.values[i]);
        ++n;
    }
    return n > 0 && sum > 0.0 ? sum / static_cast<double>(n) : 1.0;
}

}  // namespace detail

// First-order descent on the clean estimate: momentum 0.9 with per-coordinate
// step normalization (second-moment scaling) and a cosine-decayed step size.
// The variable is overparameterized as x = u + alpha*1 + beta*S where S is
// the normalized structure reference: the two collective coordinates give the
// optimizer the global level/scale moves a latent decoder would otherwise
// provide, while the pixel coordinates handle local corrections. Returns the
// best iterate seen (by objective value).
inline DepthField optimize_x0(const DepthField& z0_init, const SparseMeasurement& y,
                              const GuidanceImage& guidance, const DepthField& d_struct,
                              const AlignmentConfig& cfg, const Codec& codec = Codec{}) {
    cfg.validate();
    require_same_shape(z0_init, y, "optimize_x0");
    if (cfg.inner_iters == 0) return z0_init;

    const double scale = detail::measurement_scale(y);
    const std::size_t n = z0_init.size();
    const int iters = cfg.inner_iters;
    const double beta2 = 0.999;
    const double eps = 1e-12;

    // Unit-normalized structure direction from the reference field.
    std::vector<double> s_dir;
    {
        double mean = 0.0;
        for (double v : d_struct.values) mean += v;
        mean /= static_cast<double>(d_struct.size());
        double norm_sq = 0.0;
        for (double v : d_struct.values) norm_sq += (v - mean) * (v - mean);
        if (norm_sq > 1e-18 && d_struct.size() == n) {
            const double inv = 1.0 / std::sqrt(norm_sq);
            s_dir.resize(n);
            for (std::size_t i = 0; i < n; ++i) s_dir[i] = (d_struct.values[i] - mean) * inv;
        }
    }

    DepthField x = codec.decode(z0_init);
    std::vector<double> m1(n, 0.0), m2(n, 0.0);
    double a1 = 0.0, a2 = 0.0, b1 = 0.0, b2m = 0.0;  // moments of the collective coords
    DepthField best = x;
    double best_value = std::numeric_limits<double>::infinity();

    for (int k = 0; k <= iters; ++k) {
        detail::InnerEval ev = detail::inner_objective(x, y, guidance, d_struct, cfg);
        if (!std::isfinite(ev.value))
            throw DivergenceError("optimize_x0: non-finite loss", static_cast<std::size_t>(k));
        if (ev.value < best_value) {
            best_value = ev.value;
            best = x;
        }
        if (k == iters) break;

        const double decay = 0.5 * (1.0 + std::cos(3.141592653589793 * k / iters));
        const double lr = cfg.inner_lr * scale * decay;
        // Collective moves decay faster: they do the early global work and
        // hand the tail over to the pixel coordinates.
        const double lr_collective = cfg.inner_lr * scale * decay * decay;
        const double c1 = 1.0 - std::pow(cfg.momentum, k + 1);
        const double c2 = 1.0 - std::pow(beta2, k + 1);

        // Collective coordinates: gradients are plain sums along 1 and S.
        double g_alpha = 0.0, g_beta = 0.0;
        for (std::size_t i = 0; i < n; ++i) {
            g_alpha += ev.grad.values[i];
            if (!s_dir.empty()) g_beta += ev.grad.values[i] * s_dir[i];
        }
        a1 = cfg.momentum * a1 + (1.0 - cfg.momentum) * g_alpha;
        a2 = beta2 * a2 + (1.0 - beta2) * g_alpha * g_alpha;
        const double alpha_step =
            std::sqrt(a2 / c2) > eps ? lr_collective * (a1 / c1) / (std::sqrt(a2 / c2) + eps)
                                     : 0.0;
        double beta_step = 0.0;
        if (!s_dir.empty()) {
            b1 = cfg.momentum * b1 + (1.0 - cfg.momentum) * g_beta;
            b2m = beta2 * b2m + (1.0 - beta2) * g_beta * g_beta;
            // The structure direction is unit-norm, so a level-sized move
            // along it needs a sqrt(n) larger coefficient step.
            beta_step = std::sqrt(b2m / c2) > eps
                            ? lr_collective * std::sqrt(static_cast<double>(n)) * (b1 / c1) /
                                  (std::sqrt(b2m / c2) + eps)
                            : 0.0;
        }

        for (std::size_t i = 0; i < n; ++i) {
            const double g = ev.grad.values[i];
            // Drop stale momentum when the gradient flips sign; L1 terms
            // oscillate around their optimum and would otherwise ring.
            if (m1[i] * g < 0.0) m1[i] = 0.0;
            m1[i] = cfg.momentum * m1[i] + (1.0 - cfg.momentum) * g;
            m2[i] = beta2 * m2[i] + (1.0 - beta2) * g * g;
            const double denom = std::sqrt(m2[i] / c2) + eps;
            double delta = denom > eps ? -lr * (m1[i] / c1) / denom : 0.0;
            delta -= alpha_step;
            if (!s_dir.empty()) delta -= beta_step * s_dir[i];
            x.values[i] += delta;
        }
    }
    return codec.encode(best);
}

// Re-noise an optimized clean estimate back to the level of timestep t with
// fresh scheduled Gaussian noise.
inline DepthField remap(const DepthField& z0_hat, int t, const NoiseSchedule& schedule,
                        std::uint64_t seed) {
    if (t < 1 || t > schedule.timesteps()) throw ParameterError("remap: t outside [1, T]");
    Rng rng(seed);
    const DepthField eps = gaussian_field(z0_hat.width, z0_hat.height, rng);
    return forward_noise(z0_hat, t, eps, schedule);
}

// Soft measurement guidance: one gradient nudge of the latent toward the
// measurements through the posterior-mean map (treating the noise prediction
// as locally constant, so d z0 / d z_t = 1/sqrt(abar)).
inline DepthField guided_step(const DepthField& z_t, int t, const SparseMeasurement& y,
                              const PriorModel& prior, const NoiseSchedule& schedule,
                              const AlignmentConfig& cfg, const Codec& codec = Codec{}) {
    require_same_shape(z_t, y, "guided_step");
    const double abar = schedule.alpha_bar(t);
    if (!(abar < 1.0)) throw NumericalError("guided_step: alpha_bar(t) == 1");
    if (cfg.guidance_weight == 0.0) return z_t;

    const DepthField z0 = prior.denoise(z_t, t, schedule);
    const DepthField decoded = codec.decode(z0);
    const double gain = 2.0 * cfg.guidance_weight / std::sqrt(abar);

    DepthField out = z_t;
    for (std::size_t i = 0; i < out.size(); ++i) {
        if (!y.mask[i]) continue;
        out.values[i] += gain * (y.values[i] - decoded.values[i]);
    }
    return out;
}

struct AlignResult {
    DepthField depth;
    std::size_t clamped_negative = 0;  // pixels clamped to zero in the output
};

namespace detail {

// Sparse metric depth is normalized to [0, 1] before it meets the sampler so
// the latent, the unit-variance schedule noise, and the measurements share a
// scale; the completed map is mapped back afterwards.
struct MeasurementScale {
    double offset = 0.0;
    double span = 1.0;
};

inline MeasurementScale measurement_normalization(const SparseMeasurement& y) {
    double lo = std::numeric_limits<double>::infinity();
    double hi = -std::numeric_limits<double>::infinity();
    for (std::size_t i = 0; i < y.size(); ++i) {
        if (!y.mask[i]) continue;
        lo = std::min(lo, y.values[i]);
        hi = std::max(hi, y.values[i]);
    }
    MeasurementScale s;
    s.offset = lo;
    s.span = hi - lo > 1e-9 ? hi - lo : std::max(hi, 1.0);
    return s;
}

inline SparseMeasurement normalize_measurements(const SparseMeasurement& y,
                                                const MeasurementScale& s) {
    SparseMeasurement out = y;
    for (std::size_t i = 0; i < out.size(); ++i)
        if (out.mask[i]) out.values[i] = (out.values[i] - s.offset) / s.span;
    return out;
}

inline DepthField denormalize_field(DepthField f, const MeasurementScale& s) {
    for (auto& v : f.values) v = s.offset + s.span * v;
    return f;
}

inline AlignResult clamp_negative(DepthField field) {
    AlignResult res;
    for (auto& v : field.values) {
        if (v < 0.0) {
            v = 0.0;
            ++res.clamped_negative;
        }
    }
    res.depth = std::move(field);
    return res;
}

inline DepthField downsample_half(const DepthField& f) {
    const int w = (f.width + 1) / 2, h = (f.height + 1) / 2;
    DepthField out(w, h, 0.0);
    for (int yy = 0; yy < h; ++yy)
        for (int xx = 0; xx < w; ++xx) {
            double acc = 0.0;
            int cnt = 0;
            for (int dy = 0; dy < 2; ++dy)
                for (int dx = 0; dx < 2; ++dx) {
                    const int sx = 2 * xx + dx, sy = 2 * yy + dy;
                    if (sx < f.width && sy < f.height) {
                        acc += f.at(sx, sy);
                        ++cnt;
                    }
                }
            out.at(xx, yy) = acc / cnt;
        }
    return out;
}

inline GuidanceImage downsample_half(const GuidanceImage& f) {
    const int w = (f.width + 1) / 2, h = (f.height + 1) / 2;
    GuidanceImage out(w, h, 0.0);
    for (int yy = 0; yy < h; ++yy)
        for (int xx = 0; xx < w; ++xx) {
            double acc = 0.0;
            int cnt = 0;
            for (int dy = 0; dy < 2; ++dy)
                for (int dx = 0; dx < 2; ++dx) {
                    const int sx = 2 * xx + dx, sy = 2 * yy + dy;
                    if (sx < f.width && sy < f.height) {
                        acc += f.at(sx, sy);
                        ++cnt;
                    }
                }
            out.at(xx, yy) = acc / cnt;
        }
    return out;
}

inline SparseMeasurement downsample_half(const SparseMeasurement& y) {
    const int w = (y.width + 1) / 2, h = (y.height + 1) / 2;
    SparseMeasurement out(w, h);
    for (int yy = 0; yy < y.height; ++yy)
        for (int xx = 0; xx < y.width; ++xx) {
            const std::size_t i = y.idx(xx, yy);
            if (!y.mask[i]) continue;
            const std::size_t j = out.idx(xx / 2, yy / 2);
            if (!out.mask[j]) {
                out.mask[j] = 1;
                out.values[j] = y.values[i];
            }
        }
    return out;
}

inline DepthField upsample_bilinear(const DepthField& f, int width, int height) {
    DepthField out(width, height, 0.0);
    const double sx = static_cast<double>(f.width) / width;
    const double sy = static_cast<double>(f.height) / height;
    for (int yy = 0; yy < height; ++yy) {
        for (int xx = 0; xx < width; ++xx) {
            double fx = (xx + 0.5) * sx - 0.5;
            double fy = (yy + 0.5) * sy - 0.5;
            fx = std::min(std::max(fx, 0.0), static_cast<double>(f.width - 1));
            fy = std::min(std::max(fy, 0.0), static_cast<double>(f.height - 1));
            const int x0 = static_cast<int>(fx), y0 = static_cast<int>(fy);
            const int x1 = std::min(x0 + 1, f.width - 1), y1 = std::min(y0 + 1, f.height - 1);
            const double ax = fx - x0, ay = fy - y0;
            out.at(xx, yy) = (1 - ax) * (1 - ay) * f.at(x0, y0) + ax * (1 - ay) * f.at(x1, y0) +
                             (1 - ax) * ay * f.at(x0, y1) + ax * ay * f.at(x1, y1);
        }
    }
    return out;
}

}  // namespace detail

// Test-time-aligned reverse sampling: ordinary reverse sampling interleaved
// with hard-constraint optimization loops. At every scheduled step the clean
// estimate is optimized against the measurements and remapped to the current
// noise level; a final loop runs on the clean output before decoding.
inline AlignResult align(const PriorModel& prior, const SparseMeasurement& y,
                         const GuidanceImage& guidance, const RelativeDepthField& d_struct,
                         const NoiseSchedule& schedule, const AlignmentConfig& cfg,
                         const Codec& codec = Codec{}) {
    cfg.validate();
    if (y.count() == 0) throw ParameterError("align: empty measurement set");

    if (cfg.downsample_2x) {
        AlignmentConfig sub_cfg = cfg;
        sub_cfg.downsample_2x = false;
        const SparseMeasurement y_half = detail::downsample_half(y);
        const GuidanceImage g_half = detail::downsample_half(guidance);
        const DepthField d_half = detail::downsample_half(d_struct);
        // The analytic priors are resolution-bound, so rebuild at half size.
        const AffineSubspacePrior* affine = dynamic_cast<const AffineSubspacePrior*>(&prior);
        if (affine) {
            AffineSubspacePrior prior_half(d_half, affine->sigma_p());
            AlignResult low = align(prior_half, y_half, g_half, d_half, schedule, sub_cfg, codec);
            return detail::clamp_negative(
                detail::upsample_bilinear(low.depth, y.width, y.height));
        }
        AlignResult low = align(prior, y_half, g_half, d_half, schedule, sub_cfg, codec);
        return detail::clamp_negative(detail::upsample_bilinear(low.depth, y.width, y.height));
    }

    const detail::MeasurementScale scale = detail::measurement_normalization(y);
    const SparseMeasurement y_norm = detail::normalize_measurements(y, scale);

    const std::vector<int> ts = sampling_timesteps(schedule, cfg.num_steps);
    const int total = static_cast<int>(ts.size());
    const int first_opt =
        static_cast<int>(std::ceil(cfg.start_fraction * cfg.num_steps));

    Rng rng(cfg.seed);
    DepthField z = gaussian_field(y.width, y.height, rng);

    for (int i = 0; i < total; ++i) {
        const int step_index = i + 1;  // 1-based
        const int t = ts[static_cast<std::size_t>(i)];
        const int t_prev = (i + 1 < total) ? ts[static_cast<std::size_t>(i) + 1] : 0;

        const bool opt_here = step_index > first_opt &&
                              (step_index - first_opt) % cfg.interval == 0;
        if (opt_here) {
            const DepthField z0 = prior.denoise(z, t, schedule);
            const DepthField z0_opt = optimize_x0(z0, y_norm, guidance, d_struct, cfg, codec);
            z = remap(z0_opt, t, schedule, rng.next_u64());
        }

        const DepthField z0_hat = prior.denoise(z, t, schedule);
        z = ddim_step(z, t, t_prev, z0_hat, schedule, 0.0, rng.next_u64());
    }

    // Last loop runs on the clean estimate with no remap afterwards.
    z = optimize_x0(z, y_norm, guidance, d_struct, cfg, codec);
    return detail::clamp_negative(detail::denormalize_field(codec.decode(z), scale));
}

enum class SamplingMode { Naive, Guided, Aligned };

inline SamplingMode parse_mode(const std::string& name) {
    if (name == "naive") return SamplingMode::Naive;
    if (name == "guided") return SamplingMode::Guided;
    if (name == "aligned") return SamplingMode::Aligned;
    throw ParameterError("unknown sampling mode: " + name);
}

// Runs one of the three sampling modes with identical seeds and schedules so
// their outputs are directly comparable.
inline AlignResult run_mode(SamplingMode mode, const PriorModel& prior,
                            const SparseMeasurement& y, const GuidanceImage& guidance,
                            const RelativeDepthField& d_struct, const NoiseSchedule& schedule,
                            const AlignmentConfig& cfg, const Codec& codec = Codec{}) {
    cfg.validate();
    switch (mode) {
        case SamplingMode::Naive:
            return detail::clamp_negative(reverse_sample(prior, schedule, cfg.num_steps,
                                                         cfg.seed, y.width, y.height, codec));
        case SamplingMode::Guided: {
            if (y.count() == 0) throw ParameterError("run_mode: empty measurement set");
            const detail::MeasurementScale scale = detail::measurement_normalization(y);
            const SparseMeasurement y_norm = detail::normalize_measurements(y, scale);
            const std::vector<int> ts = sampling_timesteps(schedule, cfg.num_steps);
            Rng rng(cfg.seed);
            DepthField z = gaussian_field(y.width, y.height, rng);
            for (std::size_t i = 0; i < ts.size(); ++i) {
                const int t = ts[i];
                const int t_prev = (i + 1 < ts.size()) ? ts[i + 1] : 0;
                z = guided_step(z, t, y_norm, prior, schedule, cfg, codec);
                const DepthField z0_hat = prior.denoise(z, t, schedule);
                z = ddim_step(z, t, t_prev, z0_hat, schedule, 0.0, rng.next_u64());
            }
            return detail::clamp_negative(
                detail::denormalize_field(codec.decode(z), scale));
        }
        case SamplingMode::Aligned:
            return align(prior, y, guidance, d_struct, schedule, cfg, codec);
    }
    throw ParameterError("run_mode: unhandled mode");
}

}  // namespace ddc
