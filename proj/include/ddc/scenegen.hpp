#pragma once

#include <algorithm>
#include <cmath>
#include <cstdint>
#include <numeric>
#include <string>
#include <vector>

#include "ddc/depth_field.hpp"
#include "ddc/errors.hpp"
#include "ddc/rng.hpp"

namespace ddc {

enum class RelativeWarp { Identity, MonotoneGamma };
enum class SparsePattern { Uniform, Corner };
enum class OutlierMode { None, SeeThrough, Gross };

inline RelativeWarp parse_warp(const std::string& s) {
    if (s == "identity") return RelativeWarp::Identity;
    if (s == "monotone-gamma" || s == "gamma") return RelativeWarp::MonotoneGamma;
    throw ParameterError("unknown relative warp: " + s);
}

inline SparsePattern parse_pattern(const std::string& s) {
    if (s == "uniform") return SparsePattern::Uniform;
    if (s == "corner") return SparsePattern::Corner;
    throw ParameterError("unknown sparse pattern: " + s);
}

inline OutlierMode parse_outlier_mode(const std::string& s) {
    if (s == "none") return OutlierMode::None;
    if (s == "see_through") return OutlierMode::SeeThrough;
    if (s == "gross") return OutlierMode::Gross;
    throw ParameterError("unknown outlier mode: " + s);
}

struct SceneConfig {
    int width = 128;
    int height = 96;
    int plane_count = 6;        // number of half-plane splits
    double depth_min = 2.0;     // meters
    double depth_max = 60.0;    // meters
    RelativeWarp warp = RelativeWarp::Identity;
    double prior_noise_std = 0.0;  // smooth noise added to the relative map
    double density = 0.01;         // sparse sampling density
    SparsePattern pattern = SparsePattern::Uniform;
    OutlierMode outlier_mode = OutlierMode::None;
    double outlier_rate = 0.0;

    void validate() const {
        if (width <= 0 || height <= 0) throw ParameterError("scene dimensions must be positive");
        if (plane_count < 0) throw ParameterError("plane count must be non-negative");
        if (!(depth_min > 0.0) || !(depth_max > depth_min))
            throw ParameterError("depth range must be positive and increasing");
        if (!(density > 0.0) || density > 1.0) throw ParameterError("density must be in (0, 1]");
        if (std::floor(density * width * height) < 2.0)
            throw ParameterError("density too low: need at least 2 sparse points");
        if (outlier_rate < 0.0 || outlier_rate > 1.0)
            throw ParameterError("outlier rate must be in [0, 1]");
        if (prior_noise_std < 0.0) throw ParameterError("prior noise std must be non-negative");
    }

    static SceneConfig outdoor() { return SceneConfig{}; }

    static SceneConfig indoor() {
        SceneConfig cfg;
        cfg.depth_min = 0.5;
        cfg.depth_max = 10.0;
        cfg.density = 0.005;
        cfg.pattern = SparsePattern::Corner;
        return cfg;
    }
};

// Slanted plane anchored at the image center.
struct ScenePlane {
    double d0 = 0.0;  // depth at the anchor
    double gx = 0.0;  // meters per pixel in x
    double gy = 0.0;

    double depth_at(int x, int y, int width, int height) const {
        return d0 + gx * (x - 0.5 * width) + gy * (y - 0.5 * height);
    }
};

struct Scene {
    DepthField gt;
    RelativeDepthField relative;
    GuidanceImage guidance;
    SparseMeasurement sparse;
    std::vector<std::uint8_t> outlier_labels;  // grid-shaped, subset of sparse.mask
    std::uint64_t seed = 0;
    SceneConfig config;

    // Generator internals kept for cross-checking: the cell partition and the
    // plane parameters per cell.
    std::vector<int> cell_id;
    std::vector<ScenePlane> planes;
};

namespace detail {

inline GuidanceImage render_guidance(const std::vector<int>& cell_id,
                                     const std::vector<ScenePlane>& planes, int width,
                                     int height, Rng& rng) {
    GuidanceImage img(width, height, 0.5);
    // Fixed light direction for the per-plane shading.
    const double lx = 0.4, ly = -0.3, lz = 0.85;
    const double ln = std::sqrt(lx * lx + ly * ly + lz * lz);

    std::vector<double> shade(planes.size());
    for (std::size_t p = 0; p < planes.size(); ++p) {
        const double nx = -planes[p].gx, ny = -planes[p].gy, nz = 1.0;
        const double nn = std::sqrt(nx * nx + ny * ny + nz * nz);
        const double dot = (nx * lx + ny * ly + nz * lz) / (nn * ln);
        shade[p] = 0.45 + 0.4 * dot;
    }

    // Mild smooth texture so flat regions are not literally constant.
    const double fx1 = rng.uniform(0.03, 0.09), fy1 = rng.uniform(0.03, 0.09);
    const double fx2 = rng.uniform(0.10, 0.22), fy2 = rng.uniform(0.10, 0.22);
    const double ph1 = rng.uniform(0.0, 6.28), ph2 = rng.uniform(0.0, 6.28);

    for (int y = 0; y < height; ++y) {
        for (int x = 0; x < width; ++x) {
            const std::size_t i = static_cast<std::size_t>(y) * width + x;
            double v = shade[static_cast<std::size_t>(cell_id[i])];
            v += 0.03 * std::sin(fx1 * x + fy1 * y + ph1);
            v += 0.02 * std::sin(fx2 * x - fy2 * y + ph2);
            // Darken cell boundaries so depth edges are visible to the
            // guidance-driven losses and the corner sampler.
            bool edge = false;
            if (x + 1 < width && cell_id[i + 1] != cell_id[i]) edge = true;
            if (y + 1 < height && cell_id[i + static_cast<std::size_t>(width)] != cell_id[i])
                edge = true;
            if (edge) v *= 0.45;
            img.intensity[i] = std::min(0.98, std::max(0.02, v));
        }
    }
    return img;
}

// Smooth low-frequency noise field with zero mean and unit standard
// deviation (before scaling), built from a handful of random sinusoids.
inline std::vector<double> smooth_noise(int width, int height, Rng& rng) {
    std::vector<double> field(static_cast<std::size_t>(width) * height, 0.0);
    for (int k = 0; k < 4; ++k) {
        const double fx = rng.uniform(-2.5, 2.5) * 3.141592653589793 / width;
        const double fy = rng.uniform(-2.5, 2.5) * 3.141592653589793 / height;
        const double ph = rng.uniform(0.0, 6.283185307179586);
        const double amp = rng.uniform(0.5, 1.0);
        for (int y = 0; y < height; ++y)
            for (int x = 0; x < width; ++x)
                field[static_cast<std::size_t>(y) * width + x] +=
                    amp * std::sin(fx * x + fy * y + ph);
    }
    double mean = 0.0;
    for (double v : field) mean += v;
    mean /= static_cast<double>(field.size());
    double var = 0.0;
    for (double v : field) var += (v - mean) * (v - mean);
    var /= static_cast<double>(field.size());
    const double inv = var > 1e-18 ? 1.0 / std::sqrt(var) : 0.0;
    for (double& v : field) v = (v - mean) * inv;
    return field;
}

inline std::vector<double> harris_response(const GuidanceImage& img) {
    const int w = img.width, h = img.height;
    std::vector<double> ix(static_cast<std::size_t>(w) * h, 0.0), iy = ix;
    for (int y = 0; y < h; ++y) {
        for (int x = 0; x < w; ++x) {
            const int xm = std::max(0, x - 1), xp = std::min(w - 1, x + 1);
            const int ym = std::max(0, y - 1), yp = std::min(h - 1, y + 1);
            ix[img.idx(x, y)] = 0.5 * (img.at(xp, y) - img.at(xm, y));
            iy[img.idx(x, y)] = 0.5 * (img.at(x, yp) - img.at(x, ym));
        }
    }
    std::vector<double> resp(static_cast<std::size_t>(w) * h, 0.0);
    for (int y = 0; y < h; ++y) {
        for (int x = 0; x < w; ++x) {
            double sxx = 0.0, syy = 0.0, sxy = 0.0;
            for (int dy = -1; dy <= 1; ++dy) {
                for (int dx = -1; dx <= 1; ++dx) {
                    const int nx = std::min(w - 1, std::max(0, x + dx));
                    const int ny = std::min(h - 1, std::max(0, y + dy));
                    const double gx = ix[img.idx(nx, ny)], gy = iy[img.idx(nx, ny)];
                    sxx += gx * gx;
                    syy += gy * gy;
                    sxy += gx * gy;
                }
            }
            const double det = sxx * syy - sxy * sxy;
            const double tr = sxx + syy;
            resp[img.idx(x, y)] = std::max(0.0, det - 0.05 * tr * tr);
        }
    }
    return resp;
}

}  // namespace detail

// Draws floor(density * H * W) measured pixels from the depth field, either
// uniformly or with probability proportional to a Harris-style corner
// response of the guidance image (blended with 10% uniform mass).
inline SparseMeasurement sample_sparse(const DepthField& depth, SparsePattern pattern,
                                       double density, std::uint64_t seed,
                                       const GuidanceImage* guidance = nullptr) {
    const std::size_t n = depth.size();
    const std::size_t count =
        static_cast<std::size_t>(std::floor(density * static_cast<double>(n)));
    if (count < 2) throw ParameterError("sample_sparse: density too low");
    if (count > n) throw ParameterError("sample_sparse: density above 1");

    Rng rng(seed);
    std::vector<std::size_t> chosen;
    chosen.reserve(count);

    if (pattern == SparsePattern::Uniform || count == n) {
        std::vector<std::size_t> pool(n);
        std::iota(pool.begin(), pool.end(), std::size_t{0});
        for (std::size_t k = 0; k < count; ++k) {
            const std::size_t j = k + static_cast<std::size_t>(rng.below(n - k));
            std::swap(pool[k], pool[j]);
            chosen.push_back(pool[k]);
        }
    } else {
        if (!guidance) throw ParameterError("sample_sparse: corner pattern needs guidance");
        if (guidance->width != depth.width || guidance->height != depth.height)
            throw DimensionError("sample_sparse: guidance shape mismatch");
        const std::vector<double> resp = detail::harris_response(*guidance);
        double total = 0.0;
        for (double v : resp) total += v;
        std::vector<double> weight(n);
        for (std::size_t i = 0; i < n; ++i) {
            const double corner = total > 0.0 ? 0.9 * resp[i] / total : 0.0;
            weight[i] = corner + (total > 0.0 ? 0.1 : 1.0) / static_cast<double>(n);
        }
        // Weighted sampling without replacement via exponential races:
        // smallest -log(u)/w win.
        std::vector<std::pair<double, std::size_t>> keys(n);
        for (std::size_t i = 0; i < n; ++i)
            keys[i] = {-std::log(rng.uniform()) / weight[i], i};
        std::partial_sort(keys.begin(), keys.begin() + static_cast<std::ptrdiff_t>(count),
                          keys.end());
        for (std::size_t k = 0; k < count; ++k) chosen.push_back(keys[k].second);
    }

    SparseMeasurement out(depth.width, depth.height);
    for (std::size_t i : chosen) {
        out.mask[i] = 1;
        out.values[i] = depth.values[i];
    }
    return out;
}

struct InjectResult {
    SparseMeasurement sparse;
    std::vector<std::uint8_t> labels;  // grid-shaped marks on corrupted points
    std::size_t requested = 0;
    std::size_t injected = 0;  // may fall short for see-through injection
};

// Corrupts a fraction of the measurements. "gross" adds offsets in [10, 50] m
// to random points; "see_through" replaces points within 2 px of a depth
// discontinuity by the depth of the farther adjoining surface.
inline InjectResult inject_outliers(const SparseMeasurement& sparse, const DepthField& gt,
                                    OutlierMode mode, double rate, std::uint64_t seed,
                                    double jump_min = 1.0) {
    require_same_shape(gt, sparse, "inject_outliers");
    if (rate < 0.0 || rate > 1.0) throw ParameterError("inject_outliers: rate must be in [0,1]");

    InjectResult res;
    res.sparse = sparse;
    res.labels.assign(sparse.size(), 0);
    const std::size_t total = sparse.count();
    res.requested = static_cast<std::size_t>(std::floor(rate * static_cast<double>(total)));
    if (mode == OutlierMode::None || res.requested == 0) return res;

    Rng rng(seed);
    if (mode == OutlierMode::Gross) {
        std::vector<std::size_t> measured;
        for (std::size_t i = 0; i < sparse.size(); ++i)
            if (sparse.mask[i]) measured.push_back(i);
        for (std::size_t k = 0; k < res.requested; ++k) {
            const std::size_t j = k + static_cast<std::size_t>(rng.below(measured.size() - k));
            std::swap(measured[k], measured[j]);
            const std::size_t i = measured[k];
            res.sparse.values[i] = gt.values[i] + rng.uniform(10.0, 50.0);
            res.labels[i] = 1;
        }
        res.injected = res.requested;
        return res;
    }

    // See-through: eligible points sit within 2 px of a pixel that is deeper
    // by at least jump_min; the corrupted value is that far-surface depth.
    std::vector<std::pair<std::size_t, std::size_t>> eligible;  // (point, far pixel)
    for (int y = 0; y < gt.height; ++y) {
        for (int x = 0; x < gt.width; ++x) {
            const std::size_t i = gt.idx(x, y);
            if (!sparse.mask[i]) continue;
            double far_depth = gt.values[i];
            std::size_t far_idx = i;
            for (int dy = -2; dy <= 2; ++dy) {
                for (int dx = -2; dx <= 2; ++dx) {
                    const int nx = x + dx, ny = y + dy;
                    if (nx < 0 || nx >= gt.width || ny < 0 || ny >= gt.height) continue;
                    const std::size_t q = gt.idx(nx, ny);
                    if (gt.values[q] > far_depth) {
                        far_depth = gt.values[q];
                        far_idx = q;
                    }
                }
            }
            if (far_depth - gt.values[i] >= jump_min) eligible.emplace_back(i, far_idx);
        }
    }
    const std::size_t avail = eligible.size();
    const std::size_t take = std::min(res.requested, avail);
    for (std::size_t k = 0; k < take; ++k) {
        const std::size_t j = k + static_cast<std::size_t>(rng.below(avail - k));
        std::swap(eligible[k], eligible[j]);
        const auto [i, far] = eligible[k];
        res.sparse.values[i] = gt.values[far];
        res.labels[i] = 1;
    }
    res.injected = take;
    return res;
}

// Deterministic synthetic scene: piecewise-planar metric depth from random
// half-plane splits, a shaded guidance image, a warped/noised relative depth
// map, sparse samples, and optional labeled outliers.
inline Scene synth_scene(const SceneConfig& cfg, std::uint64_t seed) {
    cfg.validate();
    const int w = cfg.width, h = cfg.height;
    const std::size_t n = static_cast<std::size_t>(w) * h;

    Scene scene;
    scene.seed = seed;
    scene.config = cfg;

    Rng rng(derive_seed(seed, 0));

    // Half-plane splits: each pixel accumulates a binary code of sides.
    std::vector<std::uint64_t> code(n, 0);
    for (int k = 0; k < cfg.plane_count; ++k) {
        const double px = rng.uniform(0.15, 0.85) * w;
        const double py = rng.uniform(0.15, 0.85) * h;
        const double theta = rng.uniform(0.0, 3.141592653589793);
        const double nx = std::cos(theta), ny = std::sin(theta);
        for (int y = 0; y < h; ++y)
            for (int x = 0; x < w; ++x) {
                const bool side = nx * (x - px) + ny * (y - py) > 0.0;
                if (side) code[static_cast<std::size_t>(y) * w + x] |= (1ULL << k);
            }
    }

    // Compact codes into cell ids in first-appearance order.
    scene.cell_id.assign(n, -1);
    std::vector<std::uint64_t> seen;
    for (std::size_t i = 0; i < n; ++i) {
        int id = -1;
        for (std::size_t s = 0; s < seen.size(); ++s)
            if (seen[s] == code[i]) {
                id = static_cast<int>(s);
                break;
            }
        if (id == -1) {
            id = static_cast<int>(seen.size());
            seen.push_back(code[i]);
        }
        scene.cell_id[i] = id;
    }

    // One slanted plane per cell, kept inside the depth range everywhere.
    const double margin = 0.15 * (cfg.depth_max - cfg.depth_min);
    const double slope_cap = 2.0 * margin / static_cast<double>(w + h);
    scene.planes.resize(seen.size());
    for (auto& plane : scene.planes) {
        plane.d0 = rng.uniform(cfg.depth_min + margin, cfg.depth_max - margin);
        plane.gx = rng.uniform(-slope_cap, slope_cap);
        plane.gy = rng.uniform(-slope_cap, slope_cap);
    }

    scene.gt = DepthField(w, h, 0.0);
    for (int y = 0; y < h; ++y)
        for (int x = 0; x < w; ++x) {
            const std::size_t i = scene.gt.idx(x, y);
            scene.gt.values[i] =
                scene.planes[static_cast<std::size_t>(scene.cell_id[i])].depth_at(x, y, w, h);
        }

    scene.guidance = detail::render_guidance(scene.cell_id, scene.planes, w, h, rng);

    // Relative depth: min-max normalized ground truth, optionally warped by a
    // random monotone gamma, plus smooth structured noise.
    double gt_min = scene.gt.values[0], gt_max = scene.gt.values[0];
    for (double v : scene.gt.values) {
        gt_min = std::min(gt_min, v);
        gt_max = std::max(gt_max, v);
    }
    const double span = gt_max - gt_min;
    const double gamma =
        cfg.warp == RelativeWarp::MonotoneGamma ? rng.uniform(0.6, 1.8) : 1.0;
    scene.relative = DepthField(w, h, 0.0);
    for (std::size_t i = 0; i < n; ++i) {
        const double u = span > 1e-12 ? (scene.gt.values[i] - gt_min) / span : 0.5;
        scene.relative.values[i] = gamma == 1.0 ? u : std::pow(u, gamma);
    }
    if (cfg.prior_noise_std > 0.0) {
        const std::vector<double> noise = detail::smooth_noise(w, h, rng);
        for (std::size_t i = 0; i < n; ++i)
            scene.relative.values[i] += cfg.prior_noise_std * noise[i];
    }

    scene.sparse = sample_sparse(scene.gt, cfg.pattern, cfg.density, derive_seed(seed, 1),
                                 &scene.guidance);

    InjectResult inj = inject_outliers(scene.sparse, scene.gt, cfg.outlier_mode,
                                       cfg.outlier_rate, derive_seed(seed, 2));
    scene.sparse = std::move(inj.sparse);
    scene.outlier_labels = std::move(inj.labels);
    return scene;
}

}  // namespace ddc
