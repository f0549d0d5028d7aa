#pragma once

#include <cmath>
#include <vector>

#include "ddc/depth_field.hpp"
#include "ddc/diffusion.hpp"
#include "ddc/errors.hpp"
#include "ddc/schedule.hpp"

namespace ddc {

// Exactly affine-invariant analytic prior: clean fields are a*D_r + b plus
// isotropic Gaussian slack of standard deviation sigma_p off the subspace.
// The subspace coordinates carry a flat prior, which makes the posterior mean
// affine-equivariant.
class AffineSubspacePrior final : public PriorModel {
   public:
    AffineSubspacePrior(RelativeDepthField reference, double sigma_p)
        : reference_(std::move(reference)), sigma_p_(sigma_p) {
        if (!(sigma_p > 0.0)) throw ParameterError("sigma_p must be positive");
        build_basis();
    }

    const RelativeDepthField& reference() const { return reference_; }
    double sigma_p() const { return sigma_p_; }

    // Orthonormal basis of span{centered-normalized reference, constant}.
    // basis_struct is empty when the reference is constant (span collapses).
    const std::vector<double>& basis_const() const { return basis_const_; }
    const std::vector<double>& basis_struct() const { return basis_struct_; }

    // Projection of an arbitrary field onto the subspace.
    DepthField project(const DepthField& z) const {
        require_same_shape(z, reference_, "AffineSubspacePrior::project");
        double c0 = 0.0, c1 = 0.0;
        for (std::size_t i = 0; i < z.size(); ++i) {
            c0 += z.values[i] * basis_const_[i];
            if (!basis_struct_.empty()) c1 += z.values[i] * basis_struct_[i];
        }
        DepthField out(z.width, z.height, 0.0);
        for (std::size_t i = 0; i < out.size(); ++i) {
            out.values[i] = c0 * basis_const_[i];
            if (!basis_struct_.empty()) out.values[i] += c1 * basis_struct_[i];
        }
        return out;
    }

    DepthField denoise(const DepthField& z_t, int t, const NoiseSchedule& schedule) const override;

   private:
    void build_basis() {
        const std::size_t n = reference_.size();
        basis_const_.assign(n, 1.0 / std::sqrt(static_cast<double>(n)));
        double mean = 0.0;
        for (double v : reference_.values) mean += v;
        mean /= static_cast<double>(n);
        std::vector<double> centered(n);
        double norm_sq = 0.0;
        for (std::size_t i = 0; i < n; ++i) {
            centered[i] = reference_.values[i] - mean;
            norm_sq += centered[i] * centered[i];
        }
        if (norm_sq > 1e-24) {
            const double inv = 1.0 / std::sqrt(norm_sq);
            basis_struct_.resize(n);
            for (std::size_t i = 0; i < n; ++i) basis_struct_[i] = centered[i] * inv;
        }
    }

    RelativeDepthField reference_;
    double sigma_p_;
    std::vector<double> basis_const_;
    std::vector<double> basis_struct_;
};

// Posterior mean under the affine-subspace prior:
//   zhat0 = P z_t / sqrt(abar) + k (I - P) z_t,
//   k = sqrt(abar) sigma_p^2 / (abar sigma_p^2 + 1 - abar).
inline DepthField affine_subspace_denoise(const DepthField& z_t, int t,
                                          const NoiseSchedule& schedule,
                                          const AffineSubspacePrior& prior) {
    require_same_shape(z_t, prior.reference(), "affine_subspace_denoise");
    const double abar = schedule.alpha_bar(t);
    const double sp2 = prior.sigma_p() * prior.sigma_p();
    const double k = std::sqrt(abar) * sp2 / (abar * sp2 + 1.0 - abar);
    const double inv_a = abar > 0.0 ? 1.0 / std::sqrt(abar) : 0.0;
    if (!(abar > 0.0)) throw NumericalError("affine_subspace_denoise: alpha_bar must be positive");

    const DepthField proj = prior.project(z_t);
    DepthField out = z_t;
    for (std::size_t i = 0; i < out.size(); ++i) {
        const double on = proj.values[i];
        const double off = z_t.values[i] - on;
        out.values[i] = on * inv_a + k * off;
    }
    return out;
}

inline DepthField AffineSubspacePrior::denoise(const DepthField& z_t, int t,
                                               const NoiseSchedule& schedule) const {
    return affine_subspace_denoise(z_t, t, schedule, *this);
}

// Gaussian Markov random field prior with precision lambda_s * L + eps_reg * I,
// L the 4-neighborhood graph Laplacian. A smoothness fixture with a closed-form
// (dense-solvable) posterior, used to cross-check the diffusion plumbing.
class GmrfPrior final : public PriorModel {
   public:
    GmrfPrior(double lambda_s, double eps_reg) : lambda_s_(lambda_s), eps_reg_(eps_reg) {
        if (lambda_s < 0.0) throw ParameterError("lambda_s must be non-negative");
        if (!(eps_reg > 0.0)) throw ParameterError("eps_reg must be positive");
    }

    double lambda_s() const { return lambda_s_; }
    double eps_reg() const { return eps_reg_; }

    // y = (lambda_s * L + (eps_reg + shift) * I) x for the 4-neighbor Laplacian.
    void apply_system(const DepthField& x, double shift, DepthField& y) const {
        const int w = x.width, h = x.height;
        for (int j = 0; j < h; ++j) {
            for (int i = 0; i < w; ++i) {
                const double c = x.at(i, j);
                double acc = 0.0;
                int deg = 0;
                if (i > 0) { acc += c - x.at(i - 1, j); ++deg; }
                if (i + 1 < w) { acc += c - x.at(i + 1, j); ++deg; }
                if (j > 0) { acc += c - x.at(i, j - 1); ++deg; }
                if (j + 1 < h) { acc += c - x.at(i, j + 1); ++deg; }
                (void)deg;
                y.at(i, j) = lambda_s_ * acc + (eps_reg_ + shift) * c;
            }
        }
    }

    DepthField denoise(const DepthField& z_t, int t, const NoiseSchedule& schedule) const override;

   private:
    double lambda_s_;
    double eps_reg_;
};

// Solves (Lambda + (abar/(1-abar)) I) zhat0 = (sqrt(abar)/(1-abar)) z_t by
// Jacobi-preconditioned conjugate gradients to relative residual 1e-10.
inline DepthField gmrf_denoise(const DepthField& z_t, int t, const NoiseSchedule& schedule,
                               const GmrfPrior& prior) {
    const double abar = schedule.alpha_bar(t);
    if (!(abar < 1.0)) return z_t;  // noiseless level: posterior mean is the input

    const double shift = abar / (1.0 - abar);
    const double rhs_scale = std::sqrt(abar) / (1.0 - abar);
    const std::size_t n = z_t.size();

    DepthField x(z_t.width, z_t.height, 0.0);
    DepthField r = z_t;
    for (auto& v : r.values) v *= rhs_scale;

    double rhs_norm_sq = 0.0;
    for (double v : r.values) rhs_norm_sq += v * v;
    if (rhs_norm_sq == 0.0) return x;

    // Jacobi diagonal: lambda_s * deg + eps_reg + shift.
    std::vector<double> inv_diag(n);
    for (int j = 0; j < z_t.height; ++j) {
        for (int i = 0; i < z_t.width; ++i) {
            int deg = (i > 0) + (i + 1 < z_t.width) + (j > 0) + (j + 1 < z_t.height);
            inv_diag[x.idx(i, j)] = 1.0 / (prior.lambda_s() * deg + prior.eps_reg() + shift);
        }
    }

    DepthField z(z_t.width, z_t.height, 0.0), p(z_t.width, z_t.height, 0.0),
        Ap(z_t.width, z_t.height, 0.0);
    for (std::size_t i = 0; i < n; ++i) z.values[i] = r.values[i] * inv_diag[i];
    p = z;
    double rz = 0.0;
    for (std::size_t i = 0; i < n; ++i) rz += r.values[i] * z.values[i];

    const double tol_sq = 1e-20 * rhs_norm_sq;  // relative residual 1e-10
    const std::size_t max_iters = 10 * n;
    for (std::size_t it = 0; it < max_iters; ++it) {
        double rr = 0.0;
        for (double v : r.values) rr += v * v;
        if (rr <= tol_sq) return x;

        prior.apply_system(p, shift, Ap);
        double pAp = 0.0;
        for (std::size_t i = 0; i < n; ++i) pAp += p.values[i] * Ap.values[i];
        const double step = rz / pAp;
        for (std::size_t i = 0; i < n; ++i) {
            x.values[i] += step * p.values[i];
            r.values[i] -= step * Ap.values[i];
        }
        for (std::size_t i = 0; i < n; ++i) z.values[i] = r.values[i] * inv_diag[i];
        double rz_new = 0.0;
        for (std::size_t i = 0; i < n; ++i) rz_new += r.values[i] * z.values[i];
        const double beta = rz_new / rz;
        rz = rz_new;
        for (std::size_t i = 0; i < n; ++i) p.values[i] = z.values[i] + beta * p.values[i];
    }
    double rr = 0.0;
    for (double v : r.values) rr += v * v;
    if (rr <= tol_sq) return x;
    throw NumericalError("gmrf_denoise: conjugate gradients did not converge");
}

inline DepthField GmrfPrior::denoise(const DepthField& z_t, int t,
                                     const NoiseSchedule& schedule) const {
    return gmrf_denoise(z_t, t, schedule, *this);
}

// Score field implied by a denoiser output: s = (sqrt(abar) zhat0 - z_t) / (1 - abar).
inline DepthField score_from_denoise(const DepthField& z_t, int t, const DepthField& z0_hat,
                                     const NoiseSchedule& schedule) {
    require_same_shape(z_t, z0_hat, "score_from_denoise");
    const double abar = schedule.alpha_bar(t);
    if (!(abar < 1.0)) throw NumericalError("score_from_denoise: alpha_bar(t) == 1");
    const double a = std::sqrt(abar);
    const double inv = 1.0 / (1.0 - abar);
    DepthField out = z_t;
    for (std::size_t i = 0; i < out.size(); ++i)
        out.values[i] = (a * z0_hat.values[i] - z_t.values[i]) * inv;
    return out;
}

}  // namespace ddc
