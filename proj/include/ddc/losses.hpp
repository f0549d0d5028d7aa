#pragma once

#include <cmath>
#include <cstddef>
#include <vector>

#include "ddc/depth_field.hpp"
#include "ddc/errors.hpp"

namespace ddc {

struct LossConfig {
    double lambda_smooth = 0.2;
    double lambda_rssim = 0.3;
    int rssim_window = 7;   // odd, >= 3
    double rssim_c = 1e-2;  // stabilizer; sized for unit-variance inputs
    int rssim_stride = 4;   // 0 means stride == window

    void validate() const {
        if (lambda_smooth < 0.0 || lambda_rssim < 0.0)
            throw ParameterError("loss weights must be non-negative");
        if (rssim_window < 3 || rssim_window % 2 == 0)
            throw ParameterError("rssim window must be odd and >= 3");
        if (!(rssim_c > 0.0)) throw ParameterError("rssim stabilizer must be positive");
        if (rssim_stride < 0) throw ParameterError("rssim stride must be non-negative");
    }
};

// Scalar loss plus its gradient with respect to the prediction field.
struct LossValueGrad {
    double value = 0.0;
    DepthField grad;
};

// Mean absolute error on the measured pixels; subgradient 0 at exact ties.
inline LossValueGrad loss_depth(const DepthField& pred, const SparseMeasurement& y) {
    require_same_shape(pred, y, "loss_depth");
    const std::size_t count = y.count();
    if (count == 0) throw ParameterError("loss_depth: no measured pixels");

    LossValueGrad out;
    out.grad = DepthField(pred.width, pred.height, 0.0);
    const double inv = 1.0 / static_cast<double>(count);
    double acc = 0.0;
    for (std::size_t i = 0; i < pred.size(); ++i) {
        if (!y.mask[i]) continue;
        const double r = y.values[i] - pred.values[i];
        acc += std::abs(r);
        if (r > 0.0)
            out.grad.values[i] = -inv;
        else if (r < 0.0)
            out.grad.values[i] = inv;
    }
    out.value = acc * inv;
    return out;
}

// Edge-aware L1 smoothness: forward differences in X and Y, each weighted by
// exp(-|corresponding guidance gradient|), averaged over all pixels.
inline LossValueGrad loss_smooth(const DepthField& pred, const GuidanceImage& guidance) {
    if (pred.width != guidance.width || pred.height != guidance.height)
        throw DimensionError("loss_smooth: shape mismatch");

    LossValueGrad out;
    out.grad = DepthField(pred.width, pred.height, 0.0);
    const double inv = 1.0 / static_cast<double>(pred.size());
    double acc = 0.0;
    for (int yy = 0; yy < pred.height; ++yy) {
        for (int xx = 0; xx < pred.width; ++xx) {
            if (xx + 1 < pred.width) {
                const double d = pred.at(xx + 1, yy) - pred.at(xx, yy);
                const double w = std::exp(-std::abs(guidance.at(xx + 1, yy) - guidance.at(xx, yy)));
                acc += w * std::abs(d);
                const double s = d > 0.0 ? 1.0 : (d < 0.0 ? -1.0 : 0.0);
                out.grad.at(xx + 1, yy) += w * s * inv;
                out.grad.at(xx, yy) -= w * s * inv;
            }
            if (yy + 1 < pred.height) {
                const double d = pred.at(xx, yy + 1) - pred.at(xx, yy);
                const double w = std::exp(-std::abs(guidance.at(xx, yy + 1) - guidance.at(xx, yy)));
                acc += w * std::abs(d);
                const double s = d > 0.0 ? 1.0 : (d < 0.0 ? -1.0 : 0.0);
                out.grad.at(xx, yy + 1) += w * s * inv;
                out.grad.at(xx, yy) -= w * s * inv;
            }
        }
    }
    out.value = acc * inv;
    return out;
}

namespace detail {

struct Normalized {
    std::vector<double> u;  // normalized values, 0 at invalid pixels
    double mean = 0.0;
    double stddev = 0.0;
    std::size_t n_valid = 0;
};

inline Normalized normalize_field(const DepthField& d, const char* what) {
    Normalized out;
    out.u.assign(d.size(), 0.0);
    double sum = 0.0, sum_sq = 0.0;
    for (std::size_t i = 0; i < d.size(); ++i) {
        if (!d.valid[i]) continue;
        sum += d.values[i];
        sum_sq += d.values[i] * d.values[i];
        ++out.n_valid;
    }
    if (out.n_valid == 0) throw DegenerateError(std::string(what) + ": no valid pixels");
    out.mean = sum / static_cast<double>(out.n_valid);
    const double var = sum_sq / static_cast<double>(out.n_valid) - out.mean * out.mean;
    if (!(var > 1e-24))
        throw DegenerateError(std::string(what) + ": zero variance after normalization");
    out.stddev = std::sqrt(var);
    for (std::size_t i = 0; i < d.size(); ++i)
        if (d.valid[i]) out.u[i] = (d.values[i] - out.mean) / out.stddev;
    return out;
}

}  // namespace detail

// Structure dissimilarity between two fields after each is affine-normalized
// to zero mean / unit variance: per window, 1 - (2 cov + C)/(var1 + var2 + C),
// averaged over the window tiling. The gradient is with respect to d2 (the
// prediction side) and is back-propagated through the global normalization.
inline LossValueGrad loss_rssim(const DepthField& d1, const DepthField& d2,
                                const LossConfig& cfg) {
    require_same_shape(d1, d2, "loss_rssim");
    cfg.validate();
    const int win = cfg.rssim_window;
    const int stride = cfg.rssim_stride > 0 ? cfg.rssim_stride : win;
    const double C = cfg.rssim_c;

    const detail::Normalized a = detail::normalize_field(d1, "loss_rssim d1");
    const detail::Normalized b = detail::normalize_field(d2, "loss_rssim d2");

    std::vector<double> g(d2.size(), 0.0);  // dL/dv, v the normalized d2
    double loss_sum = 0.0;
    std::size_t window_count = 0;

    for (int y0 = 0; y0 < d1.height; y0 += stride) {
        for (int x0 = 0; x0 < d1.width; x0 += stride) {
            const int x1 = std::min(x0 + win, d1.width);
            const int y1 = std::min(y0 + win, d1.height);
            double su = 0.0, sv = 0.0, suu = 0.0, svv = 0.0, suv = 0.0;
            std::size_t n = 0;
            for (int yy = y0; yy < y1; ++yy) {
                for (int xx = x0; xx < x1; ++xx) {
                    const std::size_t i = d1.idx(xx, yy);
                    if (!d1.valid[i] || !d2.valid[i]) continue;
                    const double u = a.u[i], v = b.u[i];
                    su += u;
                    sv += v;
                    suu += u * u;
                    svv += v * v;
                    suv += u * v;
                    ++n;
                }
            }
            if (n == 0) continue;
            const double nn = static_cast<double>(n);
            const double mu = su / nn, mv = sv / nn;
            const double var_u = suu / nn - mu * mu;
            const double var_v = svv / nn - mv * mv;
            const double cov = suv / nn - mu * mv;
            const double A = 2.0 * cov + C;
            const double B = var_u + var_v + C;
            loss_sum += 1.0 - A / B;
            ++window_count;

            const double scale = 2.0 / (nn * B * B);
            for (int yy = y0; yy < y1; ++yy) {
                for (int xx = x0; xx < x1; ++xx) {
                    const std::size_t i = d1.idx(xx, yy);
                    if (!d1.valid[i] || !d2.valid[i]) continue;
                    // d(1 - A/B)/dv_i = (A (v_i - mv) - B (u_i - mu)) * 2/(n B^2)
                    g[i] += scale * (A * (b.u[i] - mv) - B * (a.u[i] - mu));
                }
            }
        }
    }
    if (window_count == 0) throw DegenerateError("loss_rssim: no usable windows");

    const double inv_w = 1.0 / static_cast<double>(window_count);
    for (auto& v : g) v *= inv_w;

    // Back through v = (d2 - mean)/std: dL/dd2_i =
    //   (g_i - mean(g) - v_i * mean(g .* v)) / std, means over valid pixels.
    double g_mean = 0.0, gv_mean = 0.0;
    for (std::size_t i = 0; i < d2.size(); ++i) {
        if (!d2.valid[i]) continue;
        g_mean += g[i];
        gv_mean += g[i] * b.u[i];
    }
    g_mean /= static_cast<double>(b.n_valid);
    gv_mean /= static_cast<double>(b.n_valid);

    LossValueGrad out;
    out.value = loss_sum * inv_w;
    out.grad = DepthField(d2.width, d2.height, 0.0);
    for (std::size_t i = 0; i < d2.size(); ++i)
        if (d2.valid[i])
            out.grad.values[i] = (g[i] - g_mean - b.u[i] * gv_mean) / b.stddev;
    return out;
}

// L = L_depth + lambda_smooth * L_smooth + lambda_rssim * L_rssim(d_struct, pred).
inline LossValueGrad total_loss(const DepthField& pred, const SparseMeasurement& y,
                                const GuidanceImage& guidance, const DepthField& d_struct,
                                const LossConfig& cfg) {
    cfg.validate();
    LossValueGrad out = loss_depth(pred, y);
    if (cfg.lambda_smooth > 0.0) {
        const LossValueGrad s = loss_smooth(pred, guidance);
        out.value += cfg.lambda_smooth * s.value;
        for (std::size_t i = 0; i < out.grad.size(); ++i)
            out.grad.values[i] += cfg.lambda_smooth * s.grad.values[i];
    }
    if (cfg.lambda_rssim > 0.0) {
        const LossValueGrad r = loss_rssim(d_struct, pred, cfg);
        out.value += cfg.lambda_rssim * r.value;
        for (std::size_t i = 0; i < out.grad.size(); ++i)
            out.grad.values[i] += cfg.lambda_rssim * r.grad.values[i];
    }
    return out;
}

}  // namespace ddc
