#pragma once

#include <algorithm>
#include <cmath>
#include <map>
#include <numeric>
#include <string>
#include <vector>

#include "ddc/depth_field.hpp"
#include "ddc/errors.hpp"

namespace ddc {

struct MetricReport {
    double rmse = 0.0;
    double mae = 0.0;
    std::size_t pixel_count = 0;
    std::map<std::string, double> extras;
};

namespace detail {

template <typename MaskPred>
MetricReport error_stats(const DepthField& pred, const DepthField& gt, MaskPred in_mask) {
    require_same_shape(pred, gt, "metrics");
    MetricReport rep;
    double sum_sq = 0.0, sum_abs = 0.0;
    for (std::size_t i = 0; i < pred.size(); ++i) {
        if (!gt.valid[i] || !in_mask(i)) continue;
        const double e = pred.values[i] - gt.values[i];
        sum_sq += e * e;
        sum_abs += std::abs(e);
        ++rep.pixel_count;
    }
    if (rep.pixel_count == 0) throw ParameterError("metrics: empty evaluation set");
    rep.rmse = std::sqrt(sum_sq / static_cast<double>(rep.pixel_count));
    rep.mae = sum_abs / static_cast<double>(rep.pixel_count);
    return rep;
}

}  // namespace detail

inline MetricReport evaluate(const DepthField& pred, const DepthField& gt) {
    return detail::error_stats(pred, gt, [](std::size_t) { return true; });
}

inline MetricReport evaluate(const DepthField& pred, const DepthField& gt,
                             const std::vector<std::uint8_t>& mask) {
    if (mask.size() != pred.size()) throw DimensionError("metrics: mask size mismatch");
    return detail::error_stats(pred, gt, [&mask](std::size_t i) { return mask[i] != 0; });
}

inline double rmse(const DepthField& pred, const DepthField& gt) { return evaluate(pred, gt).rmse; }
inline double mae(const DepthField& pred, const DepthField& gt) { return evaluate(pred, gt).mae; }

inline double rmse(const DepthField& pred, const DepthField& gt,
                   const std::vector<std::uint8_t>& mask) {
    return evaluate(pred, gt, mask).rmse;
}
inline double mae(const DepthField& pred, const DepthField& gt,
                  const std::vector<std::uint8_t>& mask) {
    return evaluate(pred, gt, mask).mae;
}

// Sparsification curve: for removal fractions f = 0.00, 0.01, ..., 0.99 drop
// the floor(f*n) lowest-confidence points and record the RMSE of the rest.
inline std::vector<double> sparsification_curve(const std::vector<double>& errors,
                                                const std::vector<double>& confidence) {
    if (errors.size() != confidence.size())
        throw ParameterError("sparsification: errors/confidence length mismatch");
    if (errors.size() < 2) throw ParameterError("sparsification: need at least 2 points");

    const std::size_t n = errors.size();
    std::vector<std::size_t> order(n);
    std::iota(order.begin(), order.end(), 0);
    // Ascending confidence; stable so ties keep original order.
    std::stable_sort(order.begin(), order.end(), [&confidence](std::size_t a, std::size_t b) {
        return confidence[a] < confidence[b];
    });

    // Suffix sums of squared error in removal order.
    std::vector<double> suffix_sq(n + 1, 0.0);
    for (std::size_t i = n; i-- > 0;) {
        const double e = errors[order[i]];
        suffix_sq[i] = suffix_sq[i + 1] + e * e;
    }

    std::vector<double> curve(100);
    for (int k = 0; k < 100; ++k) {
        const double f = k / 100.0;
        const std::size_t removed = static_cast<std::size_t>(std::floor(f * static_cast<double>(n)));
        const std::size_t kept = n - removed;
        curve[static_cast<std::size_t>(k)] =
            kept > 0 ? std::sqrt(suffix_sq[removed] / static_cast<double>(kept)) : 0.0;
    }
    return curve;
}

// Trapezoidal area under the sparsification curve; lower means the confidence
// ranks large errors as unreliable.
inline double sparsification_auc(const std::vector<double>& errors,
                                 const std::vector<double>& confidence) {
    const std::vector<double> curve = sparsification_curve(errors, confidence);
    double auc = 0.0;
    for (std::size_t i = 0; i + 1 < curve.size(); ++i)
        auc += 0.5 * (curve[i] + curve[i + 1]) * 0.01;
    return auc;
}

struct AffineFit {
    double scale = 1.0;
    double shift = 0.0;
};

// Closed-form least squares fit y ~= scale * r + shift over the masked points.
inline AffineFit affine_fit(const std::vector<double>& relative,
                            const std::vector<double>& metric) {
    if (relative.size() != metric.size()) throw ParameterError("affine_fit: length mismatch");
    const std::size_t n = relative.size();
    if (n < 2) throw ParameterError("affine_fit: need at least 2 points");
    double sr = 0.0, sy = 0.0;
    for (std::size_t i = 0; i < n; ++i) {
        sr += relative[i];
        sy += metric[i];
    }
    const double mr = sr / static_cast<double>(n);
    const double my = sy / static_cast<double>(n);
    double srr = 0.0, sry = 0.0;
    for (std::size_t i = 0; i < n; ++i) {
        const double dr = relative[i] - mr;
        srr += dr * dr;
        sry += dr * (metric[i] - my);
    }
    if (!(srr > 1e-24)) throw DegenerateError("affine_fit: constant relative values");
    AffineFit fit;
    fit.scale = sry / srr;
    fit.shift = my - fit.scale * mr;
    return fit;
}

inline AffineFit affine_fit(const RelativeDepthField& relative, const DepthField& metric,
                            const std::vector<std::uint8_t>& mask) {
    if (mask.size() != relative.size() || !relative.same_shape(metric))
        throw DimensionError("affine_fit: shape mismatch");
    std::vector<double> r, y;
    for (std::size_t i = 0; i < mask.size(); ++i) {
        if (!mask[i]) continue;
        r.push_back(relative.values[i]);
        y.push_back(metric.values[i]);
    }
    return affine_fit(r, y);
}

inline DepthField apply_affine(const RelativeDepthField& relative, const AffineFit& fit) {
    DepthField out = relative;
    for (auto& v : out.values) v = fit.scale * v + fit.shift;
    return out;
}

}  // namespace ddc
