#include <doctest.h>

#include <algorithm>
#include <cmath>
#include <numeric>

#include "ddc/metrics.hpp"
#include "ddc/scenegen.hpp"
#include "oracles.hpp"

using namespace ddc;

TEST_CASE("synth_scene is bit-deterministic in the seed") {
    SceneConfig cfg;
    cfg.outlier_mode = OutlierMode::Gross;
    cfg.outlier_rate = 0.1;
    const Scene a = synth_scene(cfg, 42);
    const Scene b = synth_scene(cfg, 42);
    CHECK(a.gt.values == b.gt.values);
    CHECK(a.relative.values == b.relative.values);
    CHECK(a.guidance.intensity == b.guidance.intensity);
    CHECK(a.sparse.values == b.sparse.values);
    CHECK(a.sparse.mask == b.sparse.mask);
    CHECK(a.outlier_labels == b.outlier_labels);

    const Scene c = synth_scene(cfg, 43);
    CHECK(a.gt.values != c.gt.values);
}

TEST_CASE("ground truth stays within the configured range, guidance within [0,1]") {
    SceneConfig cfg;
    for (std::uint64_t seed : {1ULL, 2ULL, 3ULL}) {
        const Scene s = synth_scene(cfg, seed);
        for (double v : s.gt.values) {
            CHECK(std::isfinite(v));
            CHECK(v >= cfg.depth_min);
            CHECK(v <= cfg.depth_max);
        }
        for (double v : s.guidance.intensity) {
            CHECK(v >= 0.0);
            CHECK(v <= 1.0);
        }
    }
}

TEST_CASE("noise-free identity-warp scenes have an exact affine relation") {
    SceneConfig cfg;
    cfg.prior_noise_std = 0.0;
    const Scene s = synth_scene(cfg, 7);
    std::vector<std::uint8_t> all(s.gt.size(), 1);
    const AffineFit fit = affine_fit(s.relative, s.gt, all);
    CHECK(rmse(apply_affine(s.relative, fit), s.gt) < 1e-9);
}

TEST_CASE("relative depth and ground truth are co-monotone on noise-free scenes") {
    for (auto warp : {RelativeWarp::Identity, RelativeWarp::MonotoneGamma}) {
        SceneConfig cfg;
        cfg.warp = warp;
        cfg.prior_noise_std = 0.0;
        const Scene s = synth_scene(cfg, 21);

        // Spearman correlation via rank vectors.
        const std::size_t n = s.gt.size();
        std::vector<std::size_t> order_gt(n), order_rel(n);
        std::iota(order_gt.begin(), order_gt.end(), std::size_t{0});
        order_rel = order_gt;
        std::sort(order_gt.begin(), order_gt.end(), [&](std::size_t a, std::size_t b) {
            return s.gt.values[a] < s.gt.values[b];
        });
        std::sort(order_rel.begin(), order_rel.end(), [&](std::size_t a, std::size_t b) {
            return s.relative.values[a] < s.relative.values[b];
        });
        std::vector<double> rank_gt(n), rank_rel(n);
        for (std::size_t k = 0; k < n; ++k) {
            rank_gt[order_gt[k]] = static_cast<double>(k);
            rank_rel[order_rel[k]] = static_cast<double>(k);
        }
        CHECK(oracle::pearson(rank_gt, rank_rel) == doctest::Approx(1.0).epsilon(1e-9));
    }
}

TEST_CASE("uniform sampling hits the exact floor count") {
    SceneConfig cfg;
    const Scene s = synth_scene(cfg, 3);
    CHECK(s.sparse.count() == static_cast<std::size_t>(std::floor(0.01 * 128 * 96)));
    CHECK(s.sparse.count() == 122);
}

TEST_CASE("density one measures every pixel") {
    DepthField depth(16, 12, 5.0);
    const SparseMeasurement y = sample_sparse(depth, SparsePattern::Uniform, 1.0, 9);
    CHECK(y.count() == depth.size());
}

TEST_CASE("density too low is rejected") {
    DepthField depth(10, 10, 5.0);
    CHECK_THROWS_AS(sample_sparse(depth, SparsePattern::Uniform, 0.005, 9), ParameterError);
}

TEST_CASE("corner sampling prefers high corner response") {
    SceneConfig cfg;
    int majority = 0;
    for (std::uint64_t seed = 0; seed < 100; ++seed) {
        const Scene s = synth_scene(cfg, derive_seed(400, seed));
        const auto resp = detail::harris_response(s.guidance);
        const SparseMeasurement corner =
            sample_sparse(s.gt, SparsePattern::Corner, 0.01, seed, &s.guidance);
        double overall = 0.0, chosen = 0.0;
        for (std::size_t i = 0; i < resp.size(); ++i) {
            overall += resp[i];
            if (corner.mask[i]) chosen += resp[i];
        }
        overall /= static_cast<double>(resp.size());
        chosen /= static_cast<double>(corner.count());
        majority += chosen > overall;
    }
    CHECK(majority > 50);
}

TEST_CASE("outlier injection: zero rate is the identity") {
    SceneConfig cfg;
    const Scene s = synth_scene(cfg, 5);
    const InjectResult res = inject_outliers(s.sparse, s.gt, OutlierMode::Gross, 0.0, 8);
    CHECK(res.sparse.values == s.sparse.values);
    CHECK(res.injected == 0);
    for (auto l : res.labels) CHECK(l == 0);
}

TEST_CASE("gross injection corrupts the exact count with offsets of at least 10 m") {
    SceneConfig cfg;
    const Scene s = synth_scene(cfg, 6);
    REQUIRE(s.sparse.count() == 122);
    const InjectResult res = inject_outliers(s.sparse, s.gt, OutlierMode::Gross, 0.1, 8);
    CHECK(res.requested == 12);
    CHECK(res.injected == 12);
    std::size_t labeled = 0;
    for (std::size_t i = 0; i < res.labels.size(); ++i) {
        if (!res.labels[i]) continue;
        ++labeled;
        CHECK(s.sparse.mask[i] == 1);
        CHECK(res.sparse.values[i] - s.gt.values[i] >= 10.0);
        CHECK(res.sparse.values[i] - s.gt.values[i] <= 50.0);
    }
    CHECK(labeled == 12);
}

TEST_CASE("see-through injection uses the far surface across the edge") {
    SceneConfig cfg;
    cfg.density = 0.05;
    const Scene s = synth_scene(cfg, 9);
    const InjectResult res = inject_outliers(s.sparse, s.gt, OutlierMode::SeeThrough, 0.1, 8);
    CHECK(res.injected > 0);
    for (std::size_t i = 0; i < res.labels.size(); ++i) {
        if (!res.labels[i]) continue;
        const int x = static_cast<int>(i % static_cast<std::size_t>(s.gt.width));
        const int y = static_cast<int>(i / static_cast<std::size_t>(s.gt.width));
        // The corrupted value must equal the generator-plane depth of some
        // deeper pixel within 2 px (the surface seen through the gap).
        bool matched = false;
        for (int dy = -2; dy <= 2 && !matched; ++dy) {
            for (int dx = -2; dx <= 2 && !matched; ++dx) {
                const int nx = x + dx, ny = y + dy;
                if (nx < 0 || nx >= s.gt.width || ny < 0 || ny >= s.gt.height) continue;
                const std::size_t q = s.gt.idx(nx, ny);
                const int cell = s.cell_id[q];
                const double plane_depth =
                    s.planes[static_cast<std::size_t>(cell)].depth_at(nx, ny, s.gt.width,
                                                                      s.gt.height);
                if (std::abs(res.sparse.values[i] - plane_depth) < 1e-12 &&
                    plane_depth > s.gt.values[i])
                    matched = true;
            }
        }
        CHECK(matched);
    }
}

TEST_CASE("outlier labels are confined to measured pixels") {
    SceneConfig cfg;
    cfg.outlier_mode = OutlierMode::SeeThrough;
    cfg.outlier_rate = 0.2;
    cfg.density = 0.05;
    const Scene s = synth_scene(cfg, 10);
    for (std::size_t i = 0; i < s.outlier_labels.size(); ++i)
        if (s.outlier_labels[i]) CHECK(s.sparse.mask[i] == 1);
}

TEST_CASE("indoor preset ranges") {
    const SceneConfig cfg = SceneConfig::indoor();
    const Scene s = synth_scene(cfg, 2);
    for (double v : s.gt.values) {
        CHECK(v >= 0.5);
        CHECK(v <= 10.0);
    }
    CHECK(s.sparse.count() == static_cast<std::size_t>(std::floor(0.005 * 128 * 96)));
}

TEST_CASE("infeasible configs are rejected") {
    SceneConfig bad;
    bad.density = 1e-5;
    CHECK_THROWS_AS(synth_scene(bad, 1), ParameterError);
    SceneConfig inverted;
    inverted.depth_min = 5.0;
    inverted.depth_max = 2.0;
    CHECK_THROWS_AS(synth_scene(inverted, 1), ParameterError);
}
