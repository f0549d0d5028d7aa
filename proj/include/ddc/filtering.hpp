#pragma once

#include <algorithm>
#include <cmath>
#include <cstdint>
#include <deque>
#include <limits>
#include <vector>

#include "ddc/depth_field.hpp"
#include "ddc/errors.hpp"
#include "ddc/metrics.hpp"
#include "ddc/rng.hpp"

namespace ddc {

// Superpixel labeling: every pixel carries a segment id in [0, count).
struct SegmentMap {
    int width = 0;
    int height = 0;
    int count = 0;
    std::vector<int> labels;

    std::size_t idx(int x, int y) const { return static_cast<std::size_t>(y) * width + x; }
};

namespace detail {

// Relabels so that every segment is one 4-connected component: each label
// keeps its largest component, every other component is merged into the
// neighboring component with the largest contact.
inline void enforce_connectivity(SegmentMap& seg) {
    const int w = seg.width, h = seg.height;
    const std::size_t n = static_cast<std::size_t>(w) * h;
    std::vector<int> comp(n, -1);
    std::vector<int> comp_label;
    std::vector<std::vector<std::size_t>> comp_pixels;

    for (std::size_t start = 0; start < n; ++start) {
        if (comp[start] != -1) continue;
        const int id = static_cast<int>(comp_label.size());
        comp_label.push_back(seg.labels[start]);
        comp_pixels.emplace_back();
        std::deque<std::size_t> queue{start};
        comp[start] = id;
        while (!queue.empty()) {
            const std::size_t p = queue.front();
            queue.pop_front();
            comp_pixels[static_cast<std::size_t>(id)].push_back(p);
            const int x = static_cast<int>(p % static_cast<std::size_t>(w));
            const int y = static_cast<int>(p / static_cast<std::size_t>(w));
            const int nx[4] = {x - 1, x + 1, x, x};
            const int ny[4] = {y, y, y - 1, y + 1};
            for (int k = 0; k < 4; ++k) {
                if (nx[k] < 0 || nx[k] >= w || ny[k] < 0 || ny[k] >= h) continue;
                const std::size_t q = seg.idx(nx[k], ny[k]);
                if (comp[q] == -1 && seg.labels[q] == seg.labels[start]) {
                    comp[q] = id;
                    queue.push_back(q);
                }
            }
        }
    }

    // Largest component per label is primary.
    std::vector<int> primary(static_cast<std::size_t>(seg.count), -1);
    for (std::size_t c = 0; c < comp_pixels.size(); ++c) {
        const int lbl = comp_label[c];
        const int cur = primary[static_cast<std::size_t>(lbl)];
        if (cur == -1 || comp_pixels[c].size() > comp_pixels[static_cast<std::size_t>(cur)].size())
            primary[static_cast<std::size_t>(lbl)] = static_cast<int>(c);
    }

    // Orphan components ordered smallest-first so they dissolve into their
    // surroundings before bigger ones are considered.
    std::vector<int> orphans;
    for (std::size_t c = 0; c < comp_pixels.size(); ++c)
        if (primary[static_cast<std::size_t>(comp_label[c])] != static_cast<int>(c))
            orphans.push_back(static_cast<int>(c));
    std::sort(orphans.begin(), orphans.end(), [&](int a, int b) {
        return comp_pixels[static_cast<std::size_t>(a)].size() <
               comp_pixels[static_cast<std::size_t>(b)].size();
    });

    for (int c : orphans) {
        std::vector<std::size_t> contact(comp_pixels.size(), 0);
        for (std::size_t p : comp_pixels[static_cast<std::size_t>(c)]) {
            const int x = static_cast<int>(p % static_cast<std::size_t>(w));
            const int y = static_cast<int>(p / static_cast<std::size_t>(w));
            const int nx[4] = {x - 1, x + 1, x, x};
            const int ny[4] = {y, y, y - 1, y + 1};
            for (int k = 0; k < 4; ++k) {
                if (nx[k] < 0 || nx[k] >= w || ny[k] < 0 || ny[k] >= h) continue;
                const int q = comp[seg.idx(nx[k], ny[k])];
                if (q != c) ++contact[static_cast<std::size_t>(q)];
            }
        }
        int best = -1;
        for (std::size_t q = 0; q < contact.size(); ++q)
            if (contact[q] > 0 && (best == -1 || contact[q] > contact[static_cast<std::size_t>(best)]))
                best = static_cast<int>(q);
        if (best == -1) continue;  // isolated; keep as is
        const int new_label = comp_label[static_cast<std::size_t>(best)];
        for (std::size_t p : comp_pixels[static_cast<std::size_t>(c)]) {
            seg.labels[p] = new_label;
            comp[p] = best;
        }
        // Fold pixels into the absorbing component.
        auto& dst = comp_pixels[static_cast<std::size_t>(best)];
        auto& src = comp_pixels[static_cast<std::size_t>(c)];
        dst.insert(dst.end(), src.begin(), src.end());
        src.clear();
        comp_label[static_cast<std::size_t>(c)] = new_label;
    }

    // Compact label ids.
    std::vector<int> remap(static_cast<std::size_t>(seg.count), -1);
    int next = 0;
    for (auto& lbl : seg.labels) {
        if (remap[static_cast<std::size_t>(lbl)] == -1) remap[static_cast<std::size_t>(lbl)] = next++;
        lbl = remap[static_cast<std::size_t>(lbl)];
    }
    seg.count = next;
}

}  // namespace detail

// SLIC-style clustering of the relative depth map on the feature
// (D_r, m*x, m*y) with m = compactness * sqrt(N / (H*W)). Centers start on a
// regular grid; connectivity is enforced after the assignment rounds.
inline SegmentMap superpixels(const RelativeDepthField& relative, int segment_count,
                              double compactness = 0.5, int iters = 10) {
    const int w = relative.width, h = relative.height;
    const std::size_t n = relative.size();
    if (segment_count < 1) throw ParameterError("superpixels: segment count must be >= 1");
    if (static_cast<std::size_t>(segment_count) > n)
        throw ParameterError("superpixels: more segments than pixels");

    SegmentMap seg;
    seg.width = w;
    seg.height = h;
    seg.count = segment_count;
    seg.labels.assign(n, 0);
    if (segment_count == 1) return seg;

    // Regular-grid seeding with near-square cells.
    int gx = static_cast<int>(std::lround(
        std::sqrt(static_cast<double>(segment_count) * w / h)));
    gx = std::max(1, std::min(gx, segment_count));
    int gy = (segment_count + gx - 1) / gx;
    while (gx * gy < segment_count) ++gy;

    struct Center {
        double d, x, y;
        std::size_t size;
    };
    std::vector<Center> centers;
    centers.reserve(static_cast<std::size_t>(segment_count));
    for (int j = 0; j < gy && static_cast<int>(centers.size()) < segment_count; ++j) {
        for (int i = 0; i < gx && static_cast<int>(centers.size()) < segment_count; ++i) {
            const double cx = (i + 0.5) * w / gx;
            const double cy = (j + 0.5) * h / gy;
            const int px = std::min(static_cast<int>(cx), w - 1);
            const int py = std::min(static_cast<int>(cy), h - 1);
            centers.push_back({relative.at(px, py), cx, cy, 0});
        }
    }

    const double m = compactness * std::sqrt(static_cast<double>(segment_count) /
                                             static_cast<double>(n));
    const double step = std::sqrt(static_cast<double>(n) / segment_count);
    const int radius = std::max(2, static_cast<int>(std::ceil(2.0 * step)));

    std::vector<double> best_dist(n);
    for (int round = 0; round < iters; ++round) {
        std::fill(best_dist.begin(), best_dist.end(), std::numeric_limits<double>::infinity());
        std::fill(seg.labels.begin(), seg.labels.end(), -1);
        for (std::size_t c = 0; c < centers.size(); ++c) {
            const int x0 = std::max(0, static_cast<int>(centers[c].x) - radius);
            const int x1 = std::min(w - 1, static_cast<int>(centers[c].x) + radius);
            const int y0 = std::max(0, static_cast<int>(centers[c].y) - radius);
            const int y1 = std::min(h - 1, static_cast<int>(centers[c].y) + radius);
            for (int yy = y0; yy <= y1; ++yy) {
                for (int xx = x0; xx <= x1; ++xx) {
                    const std::size_t p = seg.idx(xx, yy);
                    const double dd = relative.values[p] - centers[c].d;
                    const double dx = (xx - centers[c].x) * m;
                    const double dy = (yy - centers[c].y) * m;
                    const double dist = dd * dd + dx * dx + dy * dy;
                    if (dist < best_dist[p]) {
                        best_dist[p] = dist;
                        seg.labels[p] = static_cast<int>(c);
                    }
                }
            }
        }
        // Pixels outside every search window fall back to the spatially
        // nearest center.
        for (int yy = 0; yy < h; ++yy) {
            for (int xx = 0; xx < w; ++xx) {
                const std::size_t p = seg.idx(xx, yy);
                if (seg.labels[p] != -1) continue;
                double best = std::numeric_limits<double>::infinity();
                for (std::size_t c = 0; c < centers.size(); ++c) {
                    const double dx = xx - centers[c].x, dy = yy - centers[c].y;
                    const double dist = dx * dx + dy * dy;
                    if (dist < best) {
                        best = dist;
                        seg.labels[p] = static_cast<int>(c);
                    }
                }
            }
        }

        // Update centers.
        std::vector<Center> next(centers.size(), Center{0.0, 0.0, 0.0, 0});
        for (int yy = 0; yy < h; ++yy) {
            for (int xx = 0; xx < w; ++xx) {
                const std::size_t p = seg.idx(xx, yy);
                Center& c = next[static_cast<std::size_t>(seg.labels[p])];
                c.d += relative.values[p];
                c.x += xx;
                c.y += yy;
                ++c.size;
            }
        }
        for (std::size_t c = 0; c < centers.size(); ++c) {
            if (next[c].size == 0) continue;  // empty cluster keeps its seat
            const double inv = 1.0 / static_cast<double>(next[c].size);
            centers[c].d = next[c].d * inv;
            centers[c].x = next[c].x * inv;
            centers[c].y = next[c].y * inv;
            centers[c].size = next[c].size;
        }
    }

    detail::enforce_connectivity(seg);
    return seg;
}

struct RansacConfig {
    int iters = 100;
    double inlier_tol = 0.5;  // meters
};

struct RansacFit {
    double scale = 0.0;
    double shift = 0.0;
    std::vector<std::uint8_t> inlier_mask;
    std::size_t n_points = 0;
};

// Outlier-robust line fit y = scale * r + shift by random 2-point sampling,
// refined with least squares on the best consensus set.
inline RansacFit ransac_fit(const std::vector<double>& r, const std::vector<double>& y,
                            int iters, double inlier_tol, std::uint64_t seed) {
    if (r.size() != y.size()) throw ParameterError("ransac_fit: length mismatch");
    const std::size_t n = r.size();
    if (n < 2) throw ParameterError("ransac_fit: need at least 2 points");

    const double r_min = *std::min_element(r.begin(), r.end());
    const double r_max = *std::max_element(r.begin(), r.end());
    if (!(r_max - r_min > 1e-12)) throw DegenerateError("ransac_fit: all regressor values equal");

    Rng rng(seed);
    double best_a = 0.0, best_b = 0.0;
    std::size_t best_count = 0;
    std::vector<std::uint8_t> best_mask(n, 0), mask(n, 0);

    for (int it = 0; it < iters; ++it) {
        // Draw a non-degenerate 2-point sample; retry on equal r values.
        std::size_t i = 0, j = 0;
        double a = 0.0;
        bool ok = false;
        for (int attempt = 0; attempt < 64 && !ok; ++attempt) {
            i = static_cast<std::size_t>(rng.below(n));
            j = static_cast<std::size_t>(rng.below(n));
            if (i == j || std::abs(r[i] - r[j]) < 1e-12) continue;
            a = (y[i] - y[j]) / (r[i] - r[j]);
            ok = true;
        }
        if (!ok) continue;
        const double b = y[i] - a * r[i];

        std::size_t count = 0;
        for (std::size_t p = 0; p < n; ++p) {
            const bool in = std::abs(y[p] - (a * r[p] + b)) <= inlier_tol;
            mask[p] = in ? 1 : 0;
            count += in;
        }
        if (count > best_count) {
            best_count = count;
            best_a = a;
            best_b = b;
            best_mask = mask;
        }
    }

    RansacFit fit;
    fit.n_points = n;
    if (best_count < 2) {
        // No consensus; fall back to a plain least-squares fit.
        const AffineFit ls = affine_fit(r, y);
        fit.scale = ls.scale;
        fit.shift = ls.shift;
        fit.inlier_mask.assign(n, 1);
        return fit;
    }

    // Refit on the consensus set.
    std::vector<double> ri, yi;
    for (std::size_t p = 0; p < n; ++p) {
        if (!best_mask[p]) continue;
        ri.push_back(r[p]);
        yi.push_back(y[p]);
    }
    double a = best_a, b = best_b;
    const double ri_min = *std::min_element(ri.begin(), ri.end());
    const double ri_max = *std::max_element(ri.begin(), ri.end());
    if (ri.size() >= 2 && ri_max - ri_min > 1e-12) {
        const AffineFit ls = affine_fit(ri, yi);
        a = ls.scale;
        b = ls.shift;
    }
    fit.scale = a;
    fit.shift = b;
    fit.inlier_mask.assign(n, 0);
    for (std::size_t p = 0; p < n; ++p)
        fit.inlier_mask[p] = std::abs(y[p] - (a * r[p] + b)) <= inlier_tol ? 1 : 0;
    return fit;
}

inline RansacFit ransac_fit(const std::vector<double>& r, const std::vector<double>& y,
                            const RansacConfig& cfg, std::uint64_t seed) {
    return ransac_fit(r, y, cfg.iters, cfg.inlier_tol, seed);
}

struct FilterResult {
    std::vector<std::uint8_t> kept_mask;  // subset of the measurement mask
    std::vector<double> confidence;       // in [0,1] on measured pixels; higher = more reliable
    std::vector<RansacFit> per_segment_fits;
};

// Prior-based outlier filtering: segment the relative depth map, fit
// relative -> metric per segment with RANSAC, and drop measurements whose
// fitted estimate deviates by more than tau. Segments with fewer than four
// points (or a degenerate regressor) conservatively keep all points.
inline FilterResult filter_outliers(const RelativeDepthField& relative,
                                    const SparseMeasurement& y, int segment_count, double tau,
                                    const RansacConfig& ransac_cfg, std::uint64_t seed,
                                    double compactness = 0.5, int slic_iters = 10) {
    require_same_shape(relative, y, "filter_outliers");
    if (y.count() == 0) throw ParameterError("filter_outliers: empty measurement set");
    if (!(tau > 0.0)) throw ParameterError("filter_outliers: tau must be positive");

    const SegmentMap seg = superpixels(relative, segment_count, compactness, slic_iters);

    FilterResult res;
    res.kept_mask.assign(y.size(), 0);
    res.confidence.assign(y.size(), 0.0);

    std::vector<std::vector<std::size_t>> members(static_cast<std::size_t>(seg.count));
    for (std::size_t i = 0; i < y.size(); ++i)
        if (y.mask[i]) members[static_cast<std::size_t>(seg.labels[i])].push_back(i);

    constexpr std::size_t kMinPointsForFit = 4;
    for (std::size_t s = 0; s < members.size(); ++s) {
        const auto& pix = members[s];
        if (pix.empty()) continue;

        std::vector<double> r(pix.size()), v(pix.size());
        for (std::size_t p = 0; p < pix.size(); ++p) {
            r[p] = relative.values[pix[p]];
            v[p] = y.values[pix[p]];
        }

        bool fitted = false;
        RansacFit fit;
        if (pix.size() >= kMinPointsForFit) {
            try {
                fit = ransac_fit(r, v, ransac_cfg, derive_seed(seed, s));
                fitted = true;
            } catch (const DegenerateError&) {
                fitted = false;
            }
        }

        if (!fitted) {
            for (std::size_t p = 0; p < pix.size(); ++p) {
                res.kept_mask[pix[p]] = 1;
                res.confidence[pix[p]] = 1.0;
            }
            continue;
        }

        std::vector<double> err(pix.size());
        double err_min = std::numeric_limits<double>::infinity(), err_max = 0.0;
        for (std::size_t p = 0; p < pix.size(); ++p) {
            err[p] = std::abs(fit.scale * r[p] + fit.shift - v[p]);
            err_min = std::min(err_min, err[p]);
            err_max = std::max(err_max, err[p]);
        }
        const double span = err_max - err_min;
        for (std::size_t p = 0; p < pix.size(); ++p) {
            res.kept_mask[pix[p]] = err[p] > tau ? 0 : 1;
            res.confidence[pix[p]] = span > 1e-12 ? 1.0 - (err[p] - err_min) / span : 1.0;
        }
        res.per_segment_fits.push_back(fit);
    }
    return res;
}

// Baseline that removes points far above the minimum depth inside a shifting
// window. Confidence decays with the margin-normalized excess.
inline FilterResult window_filter_baseline(const SparseMeasurement& y, int window,
                                           double margin) {
    if (window < 1 || window % 2 == 0)
        throw ParameterError("window_filter_baseline: window must be odd and positive");
    if (!(margin > 0.0)) throw ParameterError("window_filter_baseline: margin must be positive");

    FilterResult res;
    res.kept_mask.assign(y.size(), 0);
    res.confidence.assign(y.size(), 0.0);
    const int half = window / 2;

    for (int yy = 0; yy < y.height; ++yy) {
        for (int xx = 0; xx < y.width; ++xx) {
            const std::size_t i = y.idx(xx, yy);
            if (!y.mask[i]) continue;
            double local_min = std::numeric_limits<double>::infinity();
            for (int dy = -half; dy <= half; ++dy) {
                for (int dx = -half; dx <= half; ++dx) {
                    const int nx = xx + dx, ny = yy + dy;
                    if (nx < 0 || nx >= y.width || ny < 0 || ny >= y.height) continue;
                    const std::size_t j = y.idx(nx, ny);
                    if (y.mask[j]) local_min = std::min(local_min, y.values[j]);
                }
            }
            const double excess = y.values[i] - local_min;
            res.kept_mask[i] = excess <= margin ? 1 : 0;
            res.confidence[i] = 1.0 / (1.0 + excess / margin);
        }
    }
    return res;
}

}  // namespace ddc
