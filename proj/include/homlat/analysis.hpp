#pragma once

/// @file analysis.hpp
/// @brief Residual of the corrected ansatz and its five-term split, the
///        absolute displacement/velocity errors, the discrete Fourier
///        transform, band-limited (sinc) interpolation, coarse-graining
///        errors, and log-log slope fits with a CSV error series.

#include <algorithm>
#include <cmath>
#include <complex>
#include <cstdint>
#include <cstdio>
#include <cstdlib>
#include <filesystem>
#include <fstream>
#include <map>
#include <numbers>
#include <sstream>
#include <stdexcept>
#include <string>
#include <vector>

#include <fftw3.h>

#include "homlat/corrector.hpp"
#include "homlat/effective_wave.hpp"
#include "homlat/fft.hpp"
#include "homlat/lattice.hpp"
#include "homlat/lattice_sim.hpp"

namespace homlat {

/// R_ε = (cT + ε^{−σ})/ε + 1.
inline double cutoff_radius(double eps, double speed, double T, double sigma) {
    return (speed * T + std::pow(eps, -sigma)) / eps + 1.0;
}

/// ∂_τ^i U (i = 0..4) and Δ_X U sampled at X = εj on a lattice window.
struct LatticeWaveSample {
    std::vector<ScalarField> d;  // d[i] = ∂_τ^i U(ε·)
    ScalarField lap_x;           // (Δ_X U)(ε·)

    const LatticeWindow& window() const { return d.at(0).window(); }

    static LatticeWaveSample from(const WaveSolution& wave, const WaveSnapshot& snap, const LatticeWindow& window) {
        auto s = wave.sample_lattice(snap, window);
        return {std::move(s.time_derivs), std::move(s.laplacian)};
    }
};

enum class AnsatzVariant { Leading, Corrected };

/// Ansatz data at one ε: leading û = ε⁻¹U, corrected ũ = û + εχU_ττ.
struct ApproximateSolution {
    double eps = 0.25;
    double sigma = 0.1;
    double radius = 0.0;  // R_ε
    AnsatzVariant variant = AnsatzVariant::Corrected;
    const CorrectorField* corrector = nullptr;  // required for Corrected

    int corrector_radius() const { return static_cast<int>(std::floor(radius)); }
};

namespace detail {
inline ScalarField zero_rim(ScalarField f, int margin = 1) {
    const auto& w = f.window();
    w.for_each([&](const Index& j) {
        if (!w.is_interior(j, margin)) f[j] = 0.0;
    });
    return f;
}
}  // namespace detail

/// Res ũ = m ü_approx − Δũ, on the interior of the sample window (0 on the rim).
inline ScalarField residual_field(const ApproximateSolution& ap, const ScalarField& masses,
                                  const LatticeWaveSample& s) {
    const double e = ap.eps;
    const auto& w = s.window();
    ScalarField uapprox = (1.0 / e) * s.d[0];
    ScalarField acc = e * s.d[2];
    if (ap.variant == AnsatzVariant::Corrected) {
        const auto& chi = ap.corrector->chi;
        uapprox += e * (chi * s.d[2]);
        acc += (e * e * e) * (chi * s.d[4]);
    }
    ScalarField res = masses * acc;
    res -= discrete_laplacian(uapprox);
    (void)w;
    return detail::zero_rim(std::move(res));
}

/// The five pieces of the residual:
///   (i)   ε⁻¹(ε²Δ_X U − ΔU)
///   (ii)  ε z 1_{D^c} U_ττ
///   (iii) −ε Σ_i δ_i(χ) δ_i⁻(U_ττ)
///   (iv)  −ε Σ_i S_i⁺(χ) Δ_i(U_ττ)
///   (v)   ε³ m χ U_ττττ
/// Their sum equals residual_field for the corrected ansatz when Δχ = z 1_D
/// and m̄ U_ττ = Δ_X U.
inline std::array<ScalarField, 5> residual_terms(const ApproximateSolution& ap, const ScalarField& masses,
                                                 double mean_mass, const LatticeWaveSample& s) {
    const double e = ap.eps;
    const auto& w = s.window();
    const int dim = w.dim();
    std::array<ScalarField, 5> t;
    t[0] = (1.0 / e) * (e * e * s.lap_x - discrete_laplacian(s.d[0]));
    const int R = ap.corrector_radius();
    t[1] = ScalarField::from_function(w, [&](const Index& j) {
        return norm_inf(j) <= R ? 0.0 : e * (masses[j] - mean_mass) * s.d[2][j];
    });
    t[2] = ScalarField(w);
    t[3] = ScalarField(w);
    t[4] = ScalarField(w);
    if (ap.variant == AnsatzVariant::Corrected) {
        const auto& chi = ap.corrector->chi_extended;
        for (int a = 0; a < dim; ++a) {
            const auto dchi = diff_centered(chi, a).restricted_to(w);
            const auto schi = shift(chi, a, +1).restricted_to(w);
            t[2] -= e * (dchi * diff_backward(s.d[2], a));
            t[3] -= e * (schi * axis_laplacian(s.d[2], a));
        }
        t[4] = (e * e * e) * (masses * (ap.corrector->chi * s.d[4]));
    } else {
        // Leading ansatz: the random part of the mass term is not corrected.
        t[1] = ScalarField::from_function(w, [&](const Index& j) { return e * (masses[j] - mean_mass) * s.d[2][j]; });
    }
    for (auto& f : t) f = detail::zero_rim(std::move(f));
    return t;
}

/// Relative gap between residual_field and the sum of the five terms.
inline double residual_assembly_gap(const ScalarField& direct, const std::array<ScalarField, 5>& terms) {
    ScalarField sum = terms[0];
    for (int k = 1; k < 5; ++k) sum += terms[k];
    const double scale = std::max(weighted_l2(direct), 1e-300);
    return weighted_l2(sum - direct) / scale;
}

struct AbsoluteErrors {
    double aed = 0.0;  // ‖u − ε⁻¹U‖
    double aev = 0.0;  // ‖u̇ − U_τ‖
    double u_norm = 0.0;
    double p_norm = 0.0;
};

/// Errors at one sample time against the leading ansatz.
inline AbsoluteErrors absolute_errors_at(const LatticeState& s, double eps, const ScalarField& U, const ScalarField& Ut) {
    AbsoluteErrors e;
    double su = 0, sp = 0, nu = 0, np = 0;
    for (std::size_t k = 0; k < s.u.size(); ++k) {
        const double du = s.u.values()[k] - U.values()[k] / eps;
        const double dp = s.p.values()[k] - Ut.values()[k];
        su += du * du;
        sp += dp * dp;
        nu += s.u.values()[k] * s.u.values()[k];
        np += s.p.values()[k] * s.p.values()[k];
    }
    e.aed = std::sqrt(su);
    e.aev = std::sqrt(sp);
    e.u_norm = std::sqrt(nu);
    e.p_norm = std::sqrt(np);
    return e;
}

/// ‖(p − p̃, δ⁺_i u − δ⁺_i ũ)‖ with ũ = ε⁻¹U + εχU_ττ and p̃ = U_τ + ε²χU_τττ.
inline double microstate_error(const LatticeState& s, double eps, const ScalarField& chi, const LatticeWaveSample& w) {
    const ScalarField ut = (1.0 / eps) * w.d[0] + eps * (chi * w.d[2]);
    const ScalarField pt = w.d[1] + (eps * eps) * (chi * w.d[3]);
    const ScalarField xi = s.u - ut;
    double sum = 0.0;
    const ScalarField dp = s.p - pt;
    for (double v : dp.values()) sum += v * v;
    for (int a = 0; a < xi.window().dim(); ++a) {
        const auto r = diff_forward(xi, a);
        for (double v : r.values()) sum += v * v;
    }
    return std::sqrt(sum);
}

// ---------------------------------------------------------------------------
// Discrete Fourier transform F[f](y) = (2π)^{−d} Σ_j e^{−i j·y} f(j) at
// y_n = 2πn/N (n = 0..N−1 per axis). With this normalisation
// ‖f‖²_{ℓ²} = (2π)^d (2π/N)^d Σ_n |F[f](y_n)|².

struct SpectralField {
    int dim = 2;
    int n = 0;
    std::vector<std::complex<double>> values;  // row-major, axis 0 outermost
    std::complex<double> at(int n0, int n1 = 0) const { return values[dim == 2 ? std::size_t(n0) * n + n1 : n0]; }
};

inline SpectralField dft(const ScalarField& f, int n = 0) {
    const auto& w = f.window();
    const int dim = w.dim();
    int need = w.extent(0);
    if (dim == 2) need = std::max(need, w.extent(1));
    if (n == 0) n = fft::good_size(need);
    if (n < need) throw std::invalid_argument("dft: transform size smaller than the window");
    const int n1 = dim == 2 ? n : 1;
    auto in = fft::allocate<fftw_complex>(std::size_t(n) * n1);
    auto out = fft::allocate<fftw_complex>(std::size_t(n) * n1);
    fftw_plan plan;
    {
        std::lock_guard<std::mutex> lock(fft::planner_mutex());
        plan = dim == 2 ? fftw_plan_dft_2d(n, n, in.get(), out.get(), FFTW_FORWARD, FFTW_ESTIMATE)
                        : fftw_plan_dft_1d(n, in.get(), out.get(), FFTW_FORWARD, FFTW_ESTIMATE);
    }
    for (std::size_t k = 0; k < std::size_t(n) * n1; ++k) in[k][0] = in[k][1] = 0.0;
    auto wrap = [n](int v) { return ((v % n) + n) % n; };
    w.for_each([&](const Index& j) {
        const std::size_t k = dim == 2 ? std::size_t(wrap(j[0])) * n + wrap(j[1]) : std::size_t(wrap(j[0]));
        in[k][0] = f[j];
    });
    fftw_execute(plan);
    {
        std::lock_guard<std::mutex> lock(fft::planner_mutex());
        fftw_destroy_plan(plan);
    }
    SpectralField sf;
    sf.dim = dim;
    sf.n = n;
    sf.values.resize(std::size_t(n) * n1);
    const double norm = std::pow(2.0 * std::numbers::pi, -dim);
    for (std::size_t k = 0; k < sf.values.size(); ++k) sf.values[k] = norm * std::complex<double>(out[k][0], out[k][1]);
    return sf;
}

/// (2π)^d (2π/N)^d Σ |F|², which equals ‖f‖²_{ℓ²}.
inline double spectral_norm_sq(const SpectralField& sf) {
    double s = 0.0;
    for (const auto& v : sf.values) s += std::norm(v);
    const double tp = 2.0 * std::numbers::pi;
    return std::pow(tp, sf.dim) * std::pow(tp / sf.n, sf.dim) * s;
}

// ---------------------------------------------------------------------------
// Low-pass interpolation L[f](x) = Σ_j f(j) Π_i sinc(x_i − j_i).

inline double sinc(double x) {
    if (std::abs(x) < 1e-8) return 1.0 - (std::numbers::pi * x) * (std::numbers::pi * x) / 6.0;
    const double px = std::numbers::pi * x;
    return std::sin(px) / px;
}

/// L[f] sampled at x = i/q for |i| <= q·(H_a + margin) on each axis.
struct FineField {
    int dim = 2;
    int q = 2;
    std::array<int, 2> half{0, 0};  // in fine nodes
    std::vector<double> values;     // row-major, axis 0 outermost
    int extent(int a) const { return 2 * half[a] + 1; }
    double at(int i0, int i1 = 0) const {
        return values[std::size_t(i0 + half[0]) * extent(1) + std::size_t(i1 + half[1])];
    }
    double coord(int i) const { return double(i) / q; }
};

/// Exact evaluation of the finite sinc sum by separable linear convolution
/// of the zero-stuffed samples with the kernel sinc(n/q).
inline FineField lowpass_interpolate(const ScalarField& f, int q, int margin) {
    if (q < 1 || margin < 0) throw std::invalid_argument("lowpass_interpolate: q >= 1, margin >= 0 required");
    const auto& w = f.window();
    const int dim = w.dim();
    FineField out;
    out.dim = dim;
    out.q = q;
    out.half = {q * (w.half_extent(0) + margin), dim == 2 ? q * (w.half_extent(1) + margin) : 0};

    // One axis: lines of coarse samples (length 2H+1) -> fine values (length 2qH'+1).
    auto along = [&](const std::vector<double>& lines, int count, int H, int fine_half) {
        const int len = q * 2 * H + 1;  // zero-stuffed line
        const int K = fine_half + q * H;  // kernel half-length: max |x − j| in fine nodes
        std::vector<double> kernel(2 * K + 1);
        for (int n = -K; n <= K; ++n) kernel[n + K] = sinc(double(n) / q);
        std::vector<double> stuffed(std::size_t(count) * len, 0.0);
        for (int c = 0; c < count; ++c)
            for (int j = 0; j <= 2 * H; ++j) stuffed[std::size_t(c) * len + std::size_t(q) * j] = lines[std::size_t(c) * (2 * H + 1) + j];
        const auto conv = fft::linear_convolve_lines(stuffed, count, len, kernel);
        const int clen = len + 2 * K;
        // Conv index m pairs stuffed position s = q(j + H) with kernel n: m = s + n + K.
        // Fine node i (|i| <= fine_half) corresponds to s + n = i + qH.
        std::vector<double> res(std::size_t(count) * (2 * fine_half + 1));
        for (int c = 0; c < count; ++c)
            for (int i = -fine_half; i <= fine_half; ++i)
                res[std::size_t(c) * (2 * fine_half + 1) + (i + fine_half)] = conv[std::size_t(c) * clen + (i + q * H + K)];
        return res;
    };

    const int H0 = w.half_extent(0), H1 = w.half_extent(1);
    if (dim == 1) {
        out.values = along(f.values(), 1, H0, out.half[0]);
        return out;
    }
    // Axis 1 first (contiguous rows), then axis 0 on the transposed result.
    const int e0 = w.extent(0);
    const int f1 = 2 * out.half[1] + 1;
    const auto rows = along(f.values(), e0, H1, out.half[1]);  // e0 x f1
    std::vector<double> cols(std::size_t(f1) * e0);
    for (int a = 0; a < e0; ++a)
        for (int b = 0; b < f1; ++b) cols[std::size_t(b) * e0 + a] = rows[std::size_t(a) * f1 + b];
    const int f0 = 2 * out.half[0] + 1;
    const auto done = along(cols, f1, H0, out.half[0]);  // f1 x f0
    out.values.resize(std::size_t(f0) * f1);
    for (int b = 0; b < f1; ++b)
        for (int a = 0; a < f0; ++a) out.values[std::size_t(a) * f1 + b] = done[std::size_t(b) * f0 + a];
    return out;
}

/// Direct truncated sinc sum at one point; test oracle.
inline double sinc_sum(const ScalarField& f, double x0, double x1 = 0.0) {
    double s = 0.0;
    const bool two = f.window().dim() == 2;
    f.window().for_each([&](const Index& j) {
        const double v = f[j];
        if (v == 0.0) return;
        s += v * sinc(x0 - j[0]) * (two ? sinc(x1 - j[1]) : 1.0);
    });
    return s;
}

// ---------------------------------------------------------------------------
// Coarse-graining: U_ε(X, τ) = ε L[u(·, τ/ε)](X/ε), ∂_τU_ε = L[p](X/ε).
//
// With s_j(X) = sinc(X/ε − j), ⟨s_j, s_k⟩ = ε^d δ_jk and ⟨s_j, V⟩ = ε^d (P V)(εj),
// P the projection onto |K_i| <= π/ε. Hence for any coefficients g,
//   ‖Σ g_j s_j − V‖² = ε^d Σ_j (g_j − PV(εj))² + ‖(I − P)V‖²,
// which is evaluated without cancellation.

struct CoarseGrainErrors {
    double displacement = 0.0;  // ‖U_ε − U‖_{L²}
    double velocity = 0.0;      // ‖∂_τU_ε − ∂_τU‖_{L²}
};

/// P ∂_τ^i U (i = 0, 1) at every lattice node of the wave grid plus the
/// out-of-band energies; shared by all realizations at one τ.
struct BandLimitedSample {
    double eps = 0.0;
    int jmax = 0;  // lattice nodes j with −jmax <= j_a < jmax
    int dim = 2;
    std::array<std::vector<double>, 2> values;
    std::array<double, 2> out_of_band_sq{0.0, 0.0};

    double at(int order, const Index& j) const {
        const int n = 2 * jmax;
        return values[order][dim == 2 ? std::size_t(j[0] + jmax) * n + std::size_t(j[1] + jmax)
                                      : std::size_t(j[0] + jmax)];
    }
};

inline BandLimitedSample band_limited_sample(const WaveSolution& wave, double tau, double eps) {
    const auto& g = wave.grid();
    if (std::abs(g.h * g.stride - eps) > 1e-12 * eps)
        throw std::invalid_argument("band_limited_sample: wave grid is not tied to this lattice scale");
    BandLimitedSample b;
    b.eps = eps;
    b.dim = g.dim;
    b.jmax = g.n / (2 * g.stride);
    const int n = 2 * b.jmax;
    for (int order = 0; order < 2; ++order) {
        const auto pv = wave.band_limited(tau, order, eps);
        auto& out = b.values[order];
        out.resize(g.dim == 2 ? std::size_t(n) * n : std::size_t(n));
        for (int a = -b.jmax; a < b.jmax; ++a)
            for (int c = (g.dim == 2 ? -b.jmax : 0); c < (g.dim == 2 ? b.jmax : 1); ++c) {
                const int i0 = g.lattice_node(a), i1 = g.dim == 2 ? g.lattice_node(c) : 0;
                out[g.dim == 2 ? std::size_t(a + b.jmax) * n + std::size_t(c + b.jmax) : std::size_t(a + b.jmax)] =
                    pv[g.offset(i0, i1)];
            }
        b.out_of_band_sq[order] = wave.out_of_band_sq(tau, order, eps);
    }
    return b;
}

inline CoarseGrainErrors coarse_grain_error_at(const LatticeState& s, const BandLimitedSample& b) {
    const auto& win = s.u.window();
    const int dim = b.dim;
    if (win.half_extent(0) >= b.jmax || (dim == 2 && win.half_extent(1) >= b.jmax))
        throw std::invalid_argument("coarse_grain_error_at: lattice window exceeds the wave grid");
    CoarseGrainErrors out;
    for (int order = 0; order < 2; ++order) {
        const auto& field = order == 0 ? s.u : s.p;
        const double coef = order == 0 ? b.eps : 1.0;
        double sum = 0.0;
        for (int a = -b.jmax; a < b.jmax; ++a)
            for (int c = (dim == 2 ? -b.jmax : 0); c < (dim == 2 ? b.jmax : 1); ++c) {
                const Index j{a, c};
                const double d = coef * field.get(j) - b.at(order, j);
                sum += d * d;
            }
        const double err_sq = std::pow(b.eps, dim) * sum + b.out_of_band_sq[order];
        (order == 0 ? out.displacement : out.velocity) = std::sqrt(std::max(0.0, err_sq));
    }
    return out;
}

inline CoarseGrainErrors coarse_grain_error_at(const LatticeState& s, double eps, const WaveSolution& wave, double tau) {
    return coarse_grain_error_at(s, band_limited_sample(wave, tau, eps));
}

/// Oracle route: U_ε by exact sinc interpolation on the fine grid X = εi/q
/// over the window plus `margin` lattice units, Riemann sum of (U_ε − U)²,
/// plus ‖U‖² from the wave grid outside that box.
inline CoarseGrainErrors coarse_grain_error_direct(const LatticeState& s, double eps, const WaveSolution& wave,
                                                   double tau, int q = 2, int margin = 16) {
    const auto& g = wave.grid();
    if (g.stride % q != 0) throw std::invalid_argument("coarse_grain_error_direct: stride must be a multiple of q");
    const int step = g.stride / q;
    const auto snap = wave.evolve(tau, 1, false);
    const int dim = g.dim;
    CoarseGrainErrors out;
    for (int order = 0; order < 2; ++order) {
        const auto fine = lowpass_interpolate(order == 0 ? s.u : s.p, q, margin);
        const double coef = order == 0 ? eps : 1.0;
        const auto& U = snap.time_derivs[order];
        double inside = 0.0;
        const int h0 = fine.half[0], h1 = fine.half[1];
        for (int a = -h0; a <= h0; ++a)
            for (int b = -h1; b <= h1; ++b) {
                const int i0 = g.n / 2 + step * a, i1 = dim == 2 ? g.n / 2 + step * b : 0;
                if (i0 < 0 || i0 >= g.n || (dim == 2 && (i1 < 0 || i1 >= g.n)))
                    throw std::invalid_argument("coarse_grain_error_direct: fine box exceeds the wave grid");
                const double d = coef * fine.at(a, b) - U[g.offset(i0, i1)];
                inside += d * d;
            }
        inside *= std::pow(eps / q, dim);
        double outside = 0.0;
        const double lim0 = eps * double(h0) / q + 0.5 * g.h, lim1 = eps * double(h1) / q + 0.5 * g.h;
        for (int a = 0; a < g.n; ++a)
            for (int b = 0; b < (dim == 2 ? g.n : 1); ++b) {
                const double x = g.coord(a), y = dim == 2 ? g.coord(b) : 0.0;
                if (std::abs(x) <= lim0 && (dim == 1 || std::abs(y) <= lim1)) continue;
                const double v = U[g.offset(a, b)];
                outside += v * v;
            }
        outside *= g.cell_volume();
        (order == 0 ? out.displacement : out.velocity) = std::sqrt(inside + outside);
    }
    return out;
}

// ---------------------------------------------------------------------------
// Log-log slope fits.

enum class Aggregation { PerRealization, Median };

inline const char* to_string(Aggregation a) { return a == Aggregation::Median ? "median" : "per-realization"; }

struct SlopeFit {
    double slope = 0.0;
    double intercept = 0.0;
    double slope_stderr = 0.0;  // standard error of the slope
    double residual_se = 0.0;   // residual standard error
    int points = 0;
    Aggregation aggregation = Aggregation::Median;
};

/// OLS of log(y) on log(x). Needs >= 2 points; fit_slope enforces >= 4 ε values.
inline SlopeFit ols_loglog(const std::vector<double>& x, const std::vector<double>& y) {
    if (x.size() != y.size() || x.size() < 2) throw std::invalid_argument("ols_loglog: need >= 2 paired points");
    const std::size_t n = x.size();
    double mx = 0, my = 0;
    std::vector<double> lx(n), ly(n);
    for (std::size_t k = 0; k < n; ++k) {
        if (!(x[k] > 0) || !(y[k] > 0)) throw std::invalid_argument("ols_loglog: values must be positive");
        lx[k] = std::log(x[k]);
        ly[k] = std::log(y[k]);
        mx += lx[k];
        my += ly[k];
    }
    mx /= n;
    my /= n;
    double sxx = 0, sxy = 0;
    for (std::size_t k = 0; k < n; ++k) {
        sxx += (lx[k] - mx) * (lx[k] - mx);
        sxy += (lx[k] - mx) * (ly[k] - my);
    }
    if (sxx <= 0) throw std::invalid_argument("ols_loglog: x values must not all coincide");
    SlopeFit f;
    f.slope = sxy / sxx;
    f.intercept = my - f.slope * mx;
    f.points = static_cast<int>(n);
    double rss = 0;
    for (std::size_t k = 0; k < n; ++k) {
        const double r = ly[k] - (f.intercept + f.slope * lx[k]);
        rss += r * r;
    }
    if (n > 2) {
        f.residual_se = std::sqrt(rss / double(n - 2));
        f.slope_stderr = f.residual_se / std::sqrt(sxx);
    }
    return f;
}

inline double median(std::vector<double> v) {
    if (v.empty()) throw std::invalid_argument("median of empty set");
    std::sort(v.begin(), v.end());
    const std::size_t n = v.size();
    return n % 2 ? v[n / 2] : 0.5 * (v[n / 2 - 1] + v[n / 2]);
}

// ---------------------------------------------------------------------------
// Error series and its CSV form.

struct ErrorRecord {
    double epsilon = 0.0;
    int realization = 0;
    std::uint64_t seed = 0;
    std::string metric;
    double value = 0.0;
};

struct ErrorSeries {
    static constexpr const char* schema = "homlat-error-series/1";
    std::vector<std::pair<std::string, std::string>> metadata;
    std::vector<ErrorRecord> records;

    void add(double eps, int realization, std::uint64_t seed, const std::string& metric, double value) {
        records.push_back({eps, realization, seed, metric, value});
    }

    std::vector<double> epsilons() const {
        std::vector<double> e;
        for (const auto& r : records)
            if (std::find(e.begin(), e.end(), r.epsilon) == e.end()) e.push_back(r.epsilon);
        std::sort(e.begin(), e.end(), std::greater<>());
        return e;
    }

    std::vector<double> values(double eps, const std::string& metric) const {
        std::vector<double> v;
        for (const auto& r : records)
            if (r.epsilon == eps && r.metric == metric) v.push_back(r.value);
        return v;
    }

    bool has_metric(const std::string& metric) const {
        for (const auto& r : records)
            if (r.metric == metric) return true;
        return false;
    }

    std::string meta(const std::string& key) const {
        for (const auto& [k, v] : metadata)
            if (k == key) return v;
        return {};
    }
};

/// Least-squares slope of log(metric) against log(ε). Median aggregation
/// fits one point per ε; per-realization fits every record.
inline SlopeFit fit_slope(const ErrorSeries& series, const std::string& metric,
                          Aggregation agg = Aggregation::Median) {
    const auto eps = series.epsilons();
    std::vector<double> x, y;
    int populated = 0;
    for (double e : eps) {
        const auto v = series.values(e, metric);
        if (v.empty()) continue;
        ++populated;
        if (agg == Aggregation::Median) {
            x.push_back(e);
            y.push_back(median(v));
        } else {
            for (double val : v) {
                x.push_back(e);
                y.push_back(val);
            }
        }
    }
    if (populated < 4) throw std::invalid_argument("fit_slope: at least 4 epsilon values required for " + metric);
    auto f = ols_loglog(x, y);
    f.aggregation = agg;
    return f;
}

inline std::string format_double(double v) {
    char buf[40];
    std::snprintf(buf, sizeof buf, "%.17g", v);
    return buf;
}

inline void write_header(std::ostream& os, const ErrorSeries& s) {
    os << "# schema=" << ErrorSeries::schema << "\n";
    for (const auto& [k, v] : s.metadata) os << "# " << k << "=" << v << "\n";
    os << "epsilon,realization,seed,metric,value\n";
}

inline void write_row(std::ostream& os, const ErrorRecord& r) {
    os << format_double(r.epsilon) << "," << r.realization << "," << r.seed << "," << r.metric << ","
       << format_double(r.value) << "\n";
}

inline void write_csv(const std::filesystem::path& file, const ErrorSeries& s) {
    if (!file.parent_path().empty()) std::filesystem::create_directories(file.parent_path());
    std::ofstream os(file);
    if (!os) throw std::runtime_error("cannot write " + file.string());
    write_header(os, s);
    for (const auto& r : s.records) write_row(os, r);
}

/// strtod rather than stod: subnormal values are valid data.
inline double parse_double(const std::string& text) {
    char* end = nullptr;
    const double v = std::strtod(text.c_str(), &end);
    if (end == text.c_str() || *end != '\0') throw std::invalid_argument("not a number: " + text);
    return v;
}

/// Parses a CSV written by write_csv. Rows that do not parse (for example a
/// torn final line) are dropped and counted in `dropped`.
inline ErrorSeries read_csv(const std::filesystem::path& file, int* dropped = nullptr) {
    std::ifstream is(file);
    if (!is) throw std::runtime_error("cannot read " + file.string());
    ErrorSeries s;
    std::string line;
    bool schema_ok = false;
    int bad = 0;
    while (std::getline(is, line)) {
        if (line.empty()) continue;
        if (line[0] == '#') {
            const auto body = line.substr(line.find_first_not_of("# "));
            const auto eq = body.find('=');
            if (eq == std::string::npos) continue;
            const auto key = body.substr(0, eq), val = body.substr(eq + 1);
            if (key == "schema") {
                if (val != ErrorSeries::schema) throw std::runtime_error("unsupported CSV schema " + val);
                schema_ok = true;
            } else {
                s.metadata.emplace_back(key, val);
            }
            continue;
        }
        if (line.rfind("epsilon,", 0) == 0) continue;
        std::stringstream ss(line);
        std::string f[5];
        int k = 0;
        while (k < 5 && std::getline(ss, f[k], ',')) ++k;
        try {
            if (k != 5 || f[4].empty()) throw std::invalid_argument("short row");
            s.records.push_back({parse_double(f[0]), std::stoi(f[1]), std::stoull(f[2]), f[3], parse_double(f[4])});
        } catch (const std::exception&) {
            ++bad;
        }
    }
    if (!schema_ok) throw std::runtime_error("CSV lacks a schema header: " + file.string());
    if (dropped) *dropped = bad;
    return s;
}

}  // namespace homlat
