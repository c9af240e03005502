#pragma once

/// @file fft.hpp
/// @brief Thin RAII layer over FFTW for the real transforms used by the
///        spectral wave solver, the corrector convolutions, and the
///        low-pass interpolator.
///
/// Plans are always created with FFTW_ESTIMATE so the chosen algorithm, and
/// hence every output bit, does not depend on timing measurements.

#include <algorithm>
#include <complex>
#include <cstddef>
#include <memory>
#include <mutex>
#include <stdexcept>
#include <vector>

#include <fftw3.h>

namespace homlat::fft {

using cplx = std::complex<double>;

inline std::mutex& planner_mutex() {
    static std::mutex m;
    return m;
}

/// Smallest n' >= n whose prime factors are all in {2, 3, 5, 7}.
inline int good_size(int n) {
    if (n <= 1) return 1;
    for (int m = n;; ++m) {
        int r = m;
        for (int p : {2, 3, 5, 7})
            while (r % p == 0) r /= p;
        if (r == 1) return m;
    }
}

template <class T>
struct FftwDeleter {
    void operator()(T* p) const { fftw_free(p); }
};

template <class T>
using fftw_buffer = std::unique_ptr<T[], FftwDeleter<T>>;

template <class T>
fftw_buffer<T> allocate(std::size_t n) {
    auto* p = static_cast<T*>(fftw_malloc(sizeof(T) * (n == 0 ? 1 : n)));
    if (!p) throw std::bad_alloc();
    return fftw_buffer<T>(p);
}

/// Real-to-complex / complex-to-real pair on a rank-1 or rank-2 grid with
/// `n0 x n1` real points (n1 == 1 for rank 1). The backward transform is
/// unnormalised, as in FFTW.
class RealTransform {
public:
    RealTransform(int rank, int n0, int n1 = 1) : rank_(rank), n0_(n0), n1_(rank == 2 ? n1 : 1) {
        if (rank != 1 && rank != 2) throw std::invalid_argument("RealTransform: rank must be 1 or 2");
        real_ = allocate<double>(real_size());
        spec_ = allocate<fftw_complex>(spectral_size());
        std::lock_guard<std::mutex> lock(planner_mutex());
        if (rank == 1) {
            fwd_ = fftw_plan_dft_r2c_1d(n0_, real_.get(), spec_.get(), FFTW_ESTIMATE);
            bwd_ = fftw_plan_dft_c2r_1d(n0_, spec_.get(), real_.get(), FFTW_ESTIMATE);
        } else {
            fwd_ = fftw_plan_dft_r2c_2d(n0_, n1_, real_.get(), spec_.get(), FFTW_ESTIMATE);
            bwd_ = fftw_plan_dft_c2r_2d(n0_, n1_, spec_.get(), real_.get(), FFTW_ESTIMATE);
        }
        if (!fwd_ || !bwd_) throw std::runtime_error("RealTransform: FFTW planning failed");
    }

    RealTransform(const RealTransform&) = delete;
    RealTransform& operator=(const RealTransform&) = delete;

    ~RealTransform() {
        std::lock_guard<std::mutex> lock(planner_mutex());
        if (fwd_) fftw_destroy_plan(fwd_);
        if (bwd_) fftw_destroy_plan(bwd_);
    }

    int rank() const { return rank_; }
    int n0() const { return n0_; }
    int n1() const { return n1_; }
    /// Number of complex coefficients stored along the last axis.
    int last_spectral() const { return rank_ == 1 ? n0_ / 2 + 1 : n1_ / 2 + 1; }
    std::size_t real_size() const { return std::size_t(n0_) * std::size_t(n1_); }
    std::size_t spectral_size() const {
        return rank_ == 1 ? std::size_t(n0_ / 2 + 1) : std::size_t(n0_) * std::size_t(n1_ / 2 + 1);
    }

    double* real() { return real_.get(); }
    cplx* spectral() { return reinterpret_cast<cplx*>(spec_.get()); }

    /// real() -> spectral(). FFTW may overwrite the input of c2r only.
    void forward() { fftw_execute(fwd_); }
    /// spectral() -> real(); destroys spectral().
    void backward() { fftw_execute(bwd_); }

private:
    int rank_, n0_, n1_;
    fftw_buffer<double> real_;
    fftw_buffer<fftw_complex> spec_;
    fftw_plan fwd_ = nullptr;
    fftw_plan bwd_ = nullptr;
};

/// Full linear convolution of two row-major 2D arrays a (a0 x a1) and
/// b (b0 x b1); the result has (a0 + b0 - 1) x (a1 + b1 - 1) entries.
/// Zero padding to at least that size removes all cyclic wraparound.
inline std::vector<double> linear_convolve_2d(const std::vector<double>& a, int a0, int a1,
                                              const std::vector<double>& b, int b0, int b1) {
    const int r0 = a0 + b0 - 1, r1 = a1 + b1 - 1;
    const int n0 = good_size(r0), n1 = good_size(r1);
    RealTransform ta(2, n0, n1), tb(2, n0, n1);
    std::fill(ta.real(), ta.real() + ta.real_size(), 0.0);
    std::fill(tb.real(), tb.real() + tb.real_size(), 0.0);
    for (int i = 0; i < a0; ++i)
        for (int k = 0; k < a1; ++k) ta.real()[std::size_t(i) * n1 + k] = a[std::size_t(i) * a1 + k];
    for (int i = 0; i < b0; ++i)
        for (int k = 0; k < b1; ++k) tb.real()[std::size_t(i) * n1 + k] = b[std::size_t(i) * b1 + k];
    ta.forward();
    tb.forward();
    const double scale = 1.0 / (double(n0) * double(n1));
    for (std::size_t k = 0; k < ta.spectral_size(); ++k) ta.spectral()[k] *= tb.spectral()[k] * scale;
    ta.backward();
    std::vector<double> out(std::size_t(r0) * r1);
    for (int i = 0; i < r0; ++i)
        for (int k = 0; k < r1; ++k) out[std::size_t(i) * r1 + k] = ta.real()[std::size_t(i) * n1 + k];
    return out;
}

/// Linear convolution of many length-`len` lines with one kernel of length
/// `klen`; each output line has len + klen - 1 entries.
inline std::vector<double> linear_convolve_lines(const std::vector<double>& lines, int count, int len,
                                                 const std::vector<double>& kernel) {
    const int klen = static_cast<int>(kernel.size());
    const int r = len + klen - 1;
    const int n = good_size(r);
    RealTransform tk(1, n), tl(1, n);
    std::fill(tk.real(), tk.real() + n, 0.0);
    std::copy(kernel.begin(), kernel.end(), tk.real());
    tk.forward();
    std::vector<cplx> kspec(tk.spectral(), tk.spectral() + tk.spectral_size());
    const double scale = 1.0 / double(n);
    std::vector<double> out(std::size_t(count) * r);
    for (int c = 0; c < count; ++c) {
        std::fill(tl.real(), tl.real() + n, 0.0);
        std::copy(lines.begin() + std::ptrdiff_t(c) * len, lines.begin() + std::ptrdiff_t(c + 1) * len, tl.real());
        tl.forward();
        for (std::size_t k = 0; k < tl.spectral_size(); ++k) tl.spectral()[k] *= kspec[k] * scale;
        tl.backward();
        std::copy(tl.real(), tl.real() + r, out.begin() + std::ptrdiff_t(c) * r);
    }
    return out;
}

}  // namespace homlat::fft
