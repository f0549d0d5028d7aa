#pragma once

#include <cmath>
#include <cstdint>
#include <string>
#include <vector>

#include "ddc/errors.hpp"

namespace ddc {

// Dense H×W grid of depth values (meters for metric fields, unitless for
// relative/latent fields) with a per-pixel validity mask. The same container
// carries ground truth, predictions, and intermediate diffusion latents;
// non-negativity is only meaningful for metric fields and is enforced at the
// boundaries that need it (I/O, measurements, final outputs).
struct DepthField {
    int width = 0;
    int height = 0;
    std::vector<double> values;
    std::vector<std::uint8_t> valid;

    DepthField() = default;
    DepthField(int w, int h, double fill = 0.0)
        : width(w),
          height(h),
          values(static_cast<std::size_t>(w) * h, fill),
          valid(static_cast<std::size_t>(w) * h, 1) {
        if (w <= 0 || h <= 0) throw ParameterError("DepthField dimensions must be positive");
    }

    std::size_t size() const { return values.size(); }
    std::size_t idx(int x, int y) const { return static_cast<std::size_t>(y) * width + x; }

    double& at(int x, int y) { return values[idx(x, y)]; }
    double at(int x, int y) const { return values[idx(x, y)]; }

    bool same_shape(const DepthField& o) const {
        return width == o.width && height == o.height;
    }
};

inline void require_same_shape(const DepthField& a, const DepthField& b,
                               const std::string& what) {
    if (!a.same_shape(b))
        throw DimensionError(what + ": shape mismatch (" + std::to_string(a.width) + "x" +
                             std::to_string(a.height) + " vs " + std::to_string(b.width) + "x" +
                             std::to_string(b.height) + ")");
}

// Affine-invariant depth map: same storage, unitless values defined up to an
// unknown positive scale and shift.
using RelativeDepthField = DepthField;

// Grayscale guidance image with intensities in [0, 1]; its gradients modulate
// the edge-aware smoothness weights.
struct GuidanceImage {
    int width = 0;
    int height = 0;
    std::vector<double> intensity;

    GuidanceImage() = default;
    GuidanceImage(int w, int h, double fill = 0.0)
        : width(w), height(h), intensity(static_cast<std::size_t>(w) * h, fill) {
        if (w <= 0 || h <= 0) throw ParameterError("GuidanceImage dimensions must be positive");
    }

    std::size_t idx(int x, int y) const { return static_cast<std::size_t>(y) * width + x; }
    double& at(int x, int y) { return intensity[idx(x, y)]; }
    double at(int x, int y) const { return intensity[idx(x, y)]; }
};

// Sparse metric depth measurements: values on the measured pixel set, a
// boolean mask for the measurement operator.
struct SparseMeasurement {
    int width = 0;
    int height = 0;
    std::vector<double> values;        // meters; meaningful only where mask != 0
    std::vector<std::uint8_t> mask;    // measured-pixel indicator

    SparseMeasurement() = default;
    SparseMeasurement(int w, int h)
        : width(w),
          height(h),
          values(static_cast<std::size_t>(w) * h, 0.0),
          mask(static_cast<std::size_t>(w) * h, 0) {
        if (w <= 0 || h <= 0)
            throw ParameterError("SparseMeasurement dimensions must be positive");
    }

    std::size_t size() const { return values.size(); }
    std::size_t idx(int x, int y) const { return static_cast<std::size_t>(y) * width + x; }

    std::size_t count() const {
        std::size_t n = 0;
        for (auto m : mask) n += (m != 0);
        return n;
    }

    void set(int x, int y, double meters) {
        if (!(meters > 0.0) || !std::isfinite(meters))
            throw ParameterError("measured depth must be positive and finite");
        values[idx(x, y)] = meters;
        mask[idx(x, y)] = 1;
    }
};

inline void require_same_shape(const DepthField& a, const SparseMeasurement& b,
                               const std::string& what) {
    if (a.width != b.width || a.height != b.height)
        throw DimensionError(what + ": shape mismatch");
}

}  // namespace ddc
