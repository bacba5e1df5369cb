#pragma once

// Thin RAII layer over FFTW3 real transforms. Plans are created with
// FFTW_ESTIMATE on fftw_malloc'd buffers so results are reproducible; the
// FFTW planner is not thread-safe, so planning is serialized.

#include <algorithm>
#include <complex>
#include <cstddef>
#include <mutex>
#include <span>
#include <vector>

#include <fftw3.h>

#include "tlsnoise/errors.hpp"

namespace tlsnoise {

namespace detail {
inline std::mutex& fftw_planner_mutex() {
    static std::mutex m;
    return m;
}
} // namespace detail

/// Forward real-to-complex transform of fixed length n (unnormalized).
class RealFft {
public:
    explicit RealFft(std::size_t n) : n_(n) {
        require(n >= 1, "RealFft: length must be >= 1");
        in_ = fftw_alloc_real(n_);
        out_ = fftw_alloc_complex(n_ / 2 + 1);
        std::lock_guard lock(detail::fftw_planner_mutex());
        plan_ = fftw_plan_dft_r2c_1d(static_cast<int>(n_), in_, out_, FFTW_ESTIMATE);
    }
    RealFft(const RealFft&) = delete;
    RealFft& operator=(const RealFft&) = delete;
    ~RealFft() {
        {
            std::lock_guard lock(detail::fftw_planner_mutex());
            fftw_destroy_plan(plan_);
        }
        fftw_free(in_);
        fftw_free(out_);
    }

    std::size_t size() const { return n_; }
    std::size_t bins() const { return n_ / 2 + 1; }

    /// out must hold bins() values.
    void forward(std::span<const double> in, std::span<std::complex<double>> out) {
        require(in.size() == n_ && out.size() == bins(), "RealFft: buffer size mismatch");
        std::copy(in.begin(), in.end(), in_);
        fftw_execute(plan_);
        for (std::size_t k = 0; k < bins(); ++k) out[k] = {out_[k][0], out_[k][1]};
    }

private:
    std::size_t n_;
    double* in_ = nullptr;
    fftw_complex* out_ = nullptr;
    fftw_plan plan_ = nullptr;
};

/// Inverse complex-to-real transform of fixed length n (unnormalized):
/// x_j = sum_k X_k exp(+2 pi i j k / n) over the Hermitian-extended spectrum.
class InverseRealFft {
public:
    explicit InverseRealFft(std::size_t n) : n_(n) {
        require(n >= 2, "InverseRealFft: length must be >= 2");
        in_ = fftw_alloc_complex(n_ / 2 + 1);
        out_ = fftw_alloc_real(n_);
        std::lock_guard lock(detail::fftw_planner_mutex());
        plan_ = fftw_plan_dft_c2r_1d(static_cast<int>(n_), in_, out_, FFTW_ESTIMATE);
    }
    InverseRealFft(const InverseRealFft&) = delete;
    InverseRealFft& operator=(const InverseRealFft&) = delete;
    ~InverseRealFft() {
        {
            std::lock_guard lock(detail::fftw_planner_mutex());
            fftw_destroy_plan(plan_);
        }
        fftw_free(in_);
        fftw_free(out_);
    }

    std::size_t bins() const { return n_ / 2 + 1; }

    void backward(std::span<const std::complex<double>> in, std::span<double> out) {
        require(in.size() == bins() && out.size() == n_, "InverseRealFft: buffer size mismatch");
        for (std::size_t k = 0; k < bins(); ++k) {
            in_[k][0] = in[k].real();
            in_[k][1] = in[k].imag();
        }
        fftw_execute(plan_);
        std::copy(out_, out_ + n_, out.begin());
    }

private:
    std::size_t n_;
    fftw_complex* in_ = nullptr;
    double* out_ = nullptr;
    fftw_plan plan_ = nullptr;
};

} // namespace tlsnoise
