#pragma once

#include <algorithm>
#include <cmath>
#include <complex>
#include <vector>

#include "fft.hpp"
#include "grwlab/common.hpp"
#include "grwlab/hilbert.hpp"
#include "grwlab/rng.hpp"

namespace grwlab::grw {

// Discretized collapse-center density: p(x_k) dx = sum_m kern(x_k - x_m) w_m
// with kern(u) = sqrt(alpha/pi) exp(-alpha u^2) dx, evaluated as a circular
// convolution (grids are sized so that wrap-around mass is negligible).
class CollapseKernel {
public:
    CollapseKernel(const hilbert::Grid& grid, double alpha)
        : n_(grid.n_points), fft_(grid.n_points), kernel_hat_(grid.n_points) {
        const double dx = grid.spacing;
        const double pref = std::sqrt(alpha / kPi) * dx;
        for (int j = 0; j < n_; ++j) {
            const double d = std::min(j, n_ - j) * dx;
            kernel_hat_[j] = pref * std::exp(-alpha * d * d);
        }
        fft_.forward(kernel_hat_.data());
    }

    RVec convolve(const RVec& w) const {
        RVec p(n_);
        convolve_into(w, p);
        return p;
    }

    // Reuses an internal workspace; instances are not shareable across
    // threads.
    void convolve_into(const RVec& w, RVec& out) const {
        work_.resize(n_);
        for (int i = 0; i < n_; ++i) work_[i] = w(i);
        fft_.forward(work_.data());
        for (int i = 0; i < n_; ++i) work_[i] *= kernel_hat_[i];
        fft_.inverse(work_.data());
        out.resize(n_);
        for (int i = 0; i < n_; ++i) out(i) = std::max(work_[i].real(), 0.0);
    }

private:
    int n_;
    Fft fft_;
    std::vector<std::complex<double>> kernel_hat_;
    mutable std::vector<std::complex<double>> work_;
};

// Two-stage sampler for the discrete collapse-center density p = kern (*) w:
// draw a grid point from the marginal w, then a circular Gaussian offset from
// the kernel table. Exactly the same discrete law as inverse-CDF on the
// convolution, at the cost of two uniforms and no FFTs.
class JumpSampler {
public:
    JumpSampler(const hilbert::Grid& grid, double alpha) : n_(grid.n_points), cdf_(grid.n_points) {
        const double dx = grid.spacing;
        double cum = 0.0;
        for (int j = 0; j < n_; ++j) {
            const double d = std::min(j, n_ - j) * dx;
            cum += std::exp(-alpha * d * d);
            cdf_[j] = cum;
        }
        for (int j = 0; j < n_; ++j) cdf_[j] /= cum;
        cdf_[n_ - 1] = 1.0;
    }

    // Both stages resolve CDF plateaus toward the lower index.
    int sample_center_index(Rng& rng, const RVec& marginal) const {
        const double total = marginal.sum();
        if (total < 1e-12)
            throw NumericError("collapse-center density is degenerate (zero norm)");
        const double target = rng.uniform01_open_left() * total;
        int m = n_ - 1;
        double cum = 0.0;
        for (int k = 0; k < n_; ++k) {
            cum += marginal(k);
            if (cum >= target) {
                m = k;
                break;
            }
        }
        const double u = rng.uniform01_open_left();
        const int offset =
            static_cast<int>(std::lower_bound(cdf_.begin(), cdf_.end(), u) - cdf_.begin());
        return (m + offset) % n_;
    }

private:
    int n_;
    std::vector<double> cdf_;
};

}  // namespace grwlab::grw
