#pragma once

/// @file effective_wave.hpp
/// @brief Spectral solution of the effective wave equation U_ττ = c² Δ_X U
///        on a periodic box, with plain, weighted and tail energies.
///
/// Each Fourier mode evolves exactly:
///   Û(K, τ) = cos(ωτ) φ̂(K) + sin(ωτ)/ω ψ̂(K),   ω = c|K|,
/// with sin(ωτ)/ω → τ at K = 0. Time derivatives multiply by −ω², so a
/// snapshot carries ∂_τ^i U for i <= 4 at no extra accuracy cost.
///
/// When built for a lattice at scale ε, the grid spacing is h = ε/stride, so
/// every lattice point X = εj is a grid node (index n/2 + stride·j).

#include <array>
#include <cmath>
#include <functional>
#include <map>
#include <memory>
#include <mutex>
#include <numbers>
#include <stdexcept>
#include <string>
#include <vector>

#include "homlat/fft.hpp"
#include "homlat/lattice.hpp"

namespace homlat {

class WaveError : public std::runtime_error {
public:
    using std::runtime_error::runtime_error;
};

/// Initial data (φ, ψ) of the effective equation. For 1D data the second
/// coordinate is ignored.
struct SmoothInitialData {
    std::string name;
    int dim = 2;
    std::function<double(double, double)> phi;
    std::function<double(double, double)> psi;
    double support_radius = 7.0;  // |X| beyond which both are below 1e-16 relative
};

inline double sech(double x) { return 1.0 / std::cosh(x); }

/// Registry: "paper-sech-pair" (2D pair and its 1D analogue), "gaussian",
/// "zero".
inline SmoothInitialData initial_data(const std::string& name, int dim) {
    SmoothInitialData d;
    d.name = name;
    d.dim = dim;
    if (name == "paper-sech-pair") {
        if (dim == 2) {
            d.phi = [](double x, double y) { return sech(0.5 * (x - 1) * (x - 1) + (y - 1) * (y - 1)); };
            d.psi = [](double x, double y) { return sech((x + 1) * (x + 1) + 0.5 * (y + 1) * (y + 1)); };
        } else {
            d.phi = [](double x, double) { return sech(0.5 * (x - 1) * (x - 1)); };
            d.psi = [](double x, double) { return sech((x + 1) * (x + 1)); };
        }
        d.support_radius = 7.0;
    } else if (name == "gaussian") {
        d.phi = [dim](double x, double y) { return std::exp(-(x * x + (dim == 2 ? y * y : 0.0))); };
        d.psi = [](double, double) { return 0.0; };
        d.support_radius = 7.0;
    } else if (name == "zero") {
        d.phi = d.psi = [](double, double) { return 0.0; };
        d.support_radius = 1.0;
    } else {
        throw std::invalid_argument("unknown initial data: " + name);
    }
    return d;
}

/// Sixth-order centered difference of f along `axis` (order 1 or 2) at X.
inline double fd_derivative(const std::function<double(double, double)>& f, double x, double y, int axis, int order,
                            double step = 1e-3) {
    auto at = [&](int s) { return axis == 0 ? f(x + s * step, y) : f(x, y + s * step); };
    if (order == 1)
        return (-at(-3) + 9 * at(-2) - 45 * at(-1) + 45 * at(1) - 9 * at(2) + at(3)) / (60 * step);
    if (order == 2)
        return (2 * at(-3) - 27 * at(-2) + 270 * at(-1) - 490 * at(0) + 270 * at(1) - 27 * at(2) + 2 * at(3)) /
               (180 * step * step);
    throw std::invalid_argument("fd_derivative: order must be 1 or 2");
}

/// Uniform periodic grid; node i sits at X = (i − n/2)·h on every axis.
struct WaveGrid {
    int dim = 2;
    int n = 64;
    double h = 0.1;
    int stride = 1;  // grid nodes per lattice spacing (1 if not tied to a lattice)

    double length() const { return n * h; }
    double coord(int i) const { return (i - n / 2) * h; }
    std::size_t size() const { return dim == 2 ? std::size_t(n) * n : std::size_t(n); }
    std::size_t offset(int i0, int i1) const { return dim == 2 ? std::size_t(i0) * n + i1 : std::size_t(i0); }
    /// Grid index of lattice point j along one axis.
    int lattice_node(int j) const { return n / 2 + stride * j; }
    double cell_volume() const { return dim == 2 ? h * h : h; }
};

/// Real-space samples on a WaveGrid.
struct GridField {
    WaveGrid grid;
    std::vector<double> values;
    double at(int i0, int i1 = 0) const { return values[grid.offset(i0, i1)]; }
};

/// ∂_τ^i U for i = 0..orders−1 and, optionally, Δ_X U, all at one τ.
struct WaveSnapshot {
    double tau = 0.0;
    WaveGrid grid;
    std::vector<std::vector<double>> time_derivs;
    std::vector<double> laplacian;

    GridField field(int order) const { return {grid, time_derivs.at(order)}; }
};

/// Weight w(X) = 1 + log(|X| + 1)^{3/2} for |X| >= 1, blended smoothly to 1
/// at the origin by s(r) = 6r⁵ − 15r⁴ + 10r³.
inline double weight_w(double r) {
    const double l = std::pow(std::log1p(r), 1.5);
    if (r >= 1.0) return 1.0 + l;
    const double s = r * r * r * (10.0 + r * (-15.0 + 6.0 * r));
    return 1.0 + s * l;
}

inline double weight_sigma(double r, double sigma) { return std::pow(1.0 + r, 1.0 / sigma); }

class WaveSolution {
public:
    /// Data sampled on an explicit grid. Throws WaveError if the data are not
    /// resolved (top-third spectral energy fraction >= 1e-8) or not contained
    /// (energy in the outer tenth of the box >= 1e-10 of the total).
    WaveSolution(SmoothInitialData data, double speed, WaveGrid grid, bool check_containment = true)
        : data_(std::move(data)),
          c_(speed),
          grid_(grid),
          tr_(std::make_unique<fft::RealTransform>(grid.dim, grid.n, grid.dim == 2 ? grid.n : 1)),
          mu_(std::make_unique<std::mutex>()) {
        if (grid.n % 2 != 0) throw std::invalid_argument("WaveSolution: grid size must be even");
        if (!(speed > 0)) throw std::invalid_argument("WaveSolution: speed must be positive");
        phi_hat_ = transform([&](double x, double y) { return data_.phi(x, y); });
        psi_hat_ = transform([&](double x, double y) { return data_.psi(x, y); });
        check_resolution();
        if (check_containment) check_box_mass();
    }

    /// Grid for a lattice at scale ε whose window has half extent W (per
    /// axis), over the horizon |τ| <= T. Lattice points are grid nodes; the
    /// box covers ε(W + 2) and the wave support plus a margin.
    static WaveGrid lattice_grid(int dim, double eps, int W, double speed, double T, double data_radius,
                                 double max_h = 0.125) {
        int stride = std::max(2, static_cast<int>(std::ceil(eps / max_h - 1e-12)));
        const double h = eps / stride;
        const double half = std::max(eps * (W + 2), data_radius + speed * T + 2.0);
        int n = static_cast<int>(std::ceil(2.0 * half / h));
        n = fft::good_size(n);
        while (n % (2 * stride) != 0) n = fft::good_size(n + 1);
        return {dim, n, h, stride};
    }

    const WaveGrid& grid() const { return grid_; }
    double speed() const { return c_; }
    const SmoothInitialData& data() const { return data_; }
    double top_third_fraction() const { return top_third_; }
    double boundary_fraction() const { return boundary_fraction_; }

    /// Wavenumbers and Parseval multiplicity of spectral entry s.
    void mode(std::size_t s, double& k0, double& k1, double& mult) const {
        const int n = grid_.n;
        const double dk = 2.0 * std::numbers::pi / grid_.length();
        const int half = n / 2 + 1;
        int a, b;
        if (grid_.dim == 2) {
            a = static_cast<int>(s / half);
            b = static_cast<int>(s % half);
            k0 = dk * (a <= n / 2 ? a : a - n);
            if (a == n / 2) k0 = -dk * (n / 2);
            k1 = dk * b;
            if (b == n / 2) k1 = -dk * b;
            mult = (b == 0 || b == n / 2) ? 1.0 : 2.0;
        } else {
            b = static_cast<int>(s);
            k0 = dk * b;
            if (b == n / 2) k0 = -dk * b;
            k1 = 0.0;
            mult = (b == 0 || b == n / 2) ? 1.0 : 2.0;
        }
    }

    bool is_nyquist(std::size_t s, int axis) const {
        const int half = grid_.n / 2 + 1;
        if (grid_.dim == 1) return axis == 0 && int(s) == grid_.n / 2;
        const int a = static_cast<int>(s / half), b = static_cast<int>(s % half);
        return axis == 0 ? a == grid_.n / 2 : b == grid_.n / 2;
    }

    /// Spectrum of ∂_τ^i U at τ.
    std::vector<fft::cplx> time_derivative_spectrum(double tau, int order) const {
        std::vector<fft::cplx> out(phi_hat_.size());
        for (std::size_t s = 0; s < out.size(); ++s) {
            double k0, k1, mult;
            mode(s, k0, k1, mult);
            const double w = c_ * std::sqrt(k0 * k0 + k1 * k1);
            const double cs = std::cos(w * tau), sn = std::sin(w * tau);
            const double sinc_t = w == 0.0 ? tau : sn / w;
            // (U, U_τ) of this mode, then (−ω²)^{⌊i/2⌋}.
            fft::cplx u = cs * phi_hat_[s] + sinc_t * psi_hat_[s];
            fft::cplx ut = -w * sn * phi_hat_[s] + cs * psi_hat_[s];
            fft::cplx v = (order % 2 == 0) ? u : ut;
            const double f = std::pow(-w * w, order / 2);
            out[s] = v * f;
        }
        return out;
    }

    /// Real-space values of the inverse transform of `spec` (normalised).
    std::vector<double> to_real(const std::vector<fft::cplx>& spec) const {
        std::lock_guard<std::mutex> lock(*mu_);
        std::copy(spec.begin(), spec.end(), tr_->spectral());
        tr_->backward();
        const double scale = 1.0 / double(tr_->real_size());
        std::vector<double> out(tr_->real(), tr_->real() + tr_->real_size());
        for (double& v : out) v *= scale;
        return out;
    }

    /// Multiplies `spec` by (iK₀)^{a0}(iK₁)^{a1}; odd orders drop the Nyquist mode.
    void apply_derivative(std::vector<fft::cplx>& spec, int a0, int a1) const {
        for (std::size_t s = 0; s < spec.size(); ++s) {
            double k0, k1, mult;
            mode(s, k0, k1, mult);
            if ((a0 % 2 == 1 && is_nyquist(s, 0)) || (a1 % 2 == 1 && grid_.dim == 2 && is_nyquist(s, 1))) {
                spec[s] = 0.0;
                continue;
            }
            fft::cplx m = std::pow(fft::cplx(0.0, k0), a0) * std::pow(fft::cplx(0.0, k1), a1);
            spec[s] *= m;
        }
    }

    WaveSnapshot evolve(double tau, int max_order = 4, bool with_laplacian = true) const {
        WaveSnapshot snap;
        snap.tau = tau;
        snap.grid = grid_;
        for (int i = 0; i <= max_order; ++i) snap.time_derivs.push_back(to_real(time_derivative_spectrum(tau, i)));
        if (with_laplacian) {
            auto spec = time_derivative_spectrum(tau, 0);
            for (std::size_t s = 0; s < spec.size(); ++s) {
                double k0, k1, mult;
                mode(s, k0, k1, mult);
                spec[s] *= -(k0 * k0 + k1 * k1);
            }
            snap.laplacian = to_real(spec);
        }
        return snap;
    }

    /// E(D^k ∂_τ^i U) = ½ Σ_{|α|=k} ∫ (∂_τ V_α)² + c²|∇V_α|² dX, α ordered,
    /// V_α = ∂^α ∂_τ^i U; evaluated exactly by Parseval.
    double energy(double tau, int i = 0, int k = 0) const {
        const auto v = time_derivative_spectrum(tau, i);
        const auto vt = time_derivative_spectrum(tau, i + 1);
        double sum = 0.0;
        for (std::size_t s = 0; s < v.size(); ++s) {
            double k0, k1, mult;
            mode(s, k0, k1, mult);
            const double kk = k0 * k0 + k1 * k1;
            const double dk = std::pow(kk, k);
            sum += mult * dk * (std::norm(vt[s]) + c_ * c_ * kk * std::norm(v[s]));
        }
        return 0.5 * sum * grid_.cell_volume() / double(grid_.size());
    }

    /// Σ_{|α|=k} ∫ m(X)[(∂_τ V_α)² + c²|∇V_α|²] dX with a radial mask m that
    /// is 0 inside |X| < c|τ| + ε^{−σ} and 1 outside, smeared over one cell.
    double tail_energy(double tau, double sigma, double eps, int i = 0, int k = 0) const {
        const double radius = c_ * std::abs(tau) + std::pow(eps, -sigma);
        const auto dens = energy_density(tau, i, k);
        double sum = 0.0;
        const int n = grid_.n;
        const int n1 = grid_.dim == 2 ? n : 1;
        for (int a = 0; a < n; ++a)
            for (int b = 0; b < n1; ++b) {
                const double x = grid_.coord(a), y = grid_.dim == 2 ? grid_.coord(b) : 0.0;
                const double m = std::clamp((std::hypot(x, y) - radius) / grid_.h + 0.5, 0.0, 1.0);
                sum += m * dens[grid_.offset(a, b)];
            }
        return sum * grid_.cell_volume();
    }

    /// Pointwise Σ_{|α|=k} (∂_τ V_α)² + c²|∇V_α|² on the grid.
    std::vector<double> energy_density(double tau, int i = 0, int k = 0) const {
        const auto v = time_derivative_spectrum(tau, i);
        const auto vt = time_derivative_spectrum(tau, i + 1);
        std::vector<double> dens(grid_.size(), 0.0);
        const int dim = grid_.dim;
        for (int a0 = 0; a0 <= k; ++a0) {
            const int a1 = k - a0;
            if (dim == 1 && a1 > 0) continue;
            const double mult = dim == 2 ? binomial(k, a0) : 1.0;
            auto add_sq = [&](std::vector<fft::cplx> spec, int d0, int d1, double weight) {
                apply_derivative(spec, d0, d1);
                const auto f = to_real(spec);
                for (std::size_t q = 0; q < f.size(); ++q) dens[q] += weight * f[q] * f[q];
            };
            add_sq(vt, a0, a1, mult);
            add_sq(v, a0 + 1, a1, mult * c_ * c_);
            if (dim == 2) add_sq(v, a0, a1 + 1, mult * c_ * c_);
        }
        return dens;
    }

    /// Σ_{j<=k} ‖weight·D^j f‖_{L²} for f = ∂_τ^i U(τ), with the squared
    /// ordered-multi-index sum Σ_{|α|=j} |∂^α f|².
    double weighted_norm(double tau, int i, int k, const std::function<double(double)>& weight) const {
        return weighted_norm_of(time_derivative_spectrum(tau, i), k, weight);
    }

    double weighted_norm_of(const std::vector<fft::cplx>& spec, int k,
                            const std::function<double(double)>& weight) const {
        const int n = grid_.n;
        const int n1 = grid_.dim == 2 ? n : 1;
        std::vector<double> w2(grid_.size());
        for (int a = 0; a < n; ++a)
            for (int b = 0; b < n1; ++b) {
                const double x = grid_.coord(a), y = grid_.dim == 2 ? grid_.coord(b) : 0.0;
                const double w = weight(std::hypot(x, y));
                w2[grid_.offset(a, b)] = w * w;
            }
        double total = 0.0;
        for (int j = 0; j <= k; ++j) {
            double s = 0.0;
            for (int a0 = 0; a0 <= j; ++a0) {
                const int a1 = j - a0;
                if (grid_.dim == 1 && a1 > 0) continue;
                auto d = spec;
                apply_derivative(d, a0, a1);
                const auto f = to_real(d);
                const double mult = grid_.dim == 2 ? binomial(j, a0) : 1.0;
                for (std::size_t q = 0; q < f.size(); ++q) s += mult * w2[q] * f[q] * f[q];
            }
            total += std::sqrt(s * grid_.cell_volume());
        }
        return total;
    }

    /// ‖(φ, ψ)‖ pair in H^k with the w weight or the σ weight.
    double data_norm_w(int k) const {
        return weighted_norm_of(phi_hat_, k, weight_w) + weighted_norm_of(psi_hat_, k, weight_w);
    }
    double data_norm_sigma(int k, double sigma) const {
        auto w = [sigma](double r) { return weight_sigma(r, sigma); };
        return weighted_norm_of(phi_hat_, k, w) + weighted_norm_of(psi_hat_, k, w);
    }

    /// Samples ∂_τ^i U (i = 0..4) and Δ_X U at the lattice points of `window`.
    struct LatticeSample {
        std::vector<ScalarField> time_derivs;
        ScalarField laplacian;
    };

    LatticeSample sample_lattice(const WaveSnapshot& snap, const LatticeWindow& window) const {
        LatticeSample out;
        auto pick = [&](const std::vector<double>& g) {
            return ScalarField::from_function(window, [&](const Index& j) {
                const int i0 = grid_.lattice_node(j[0]);
                const int i1 = grid_.dim == 2 ? grid_.lattice_node(j[1]) : 0;
                if (i0 < 0 || i0 >= grid_.n || i1 < 0 || (grid_.dim == 2 && i1 >= grid_.n))
                    throw WaveError("sample_lattice: lattice window exceeds the wave grid");
                return g[grid_.offset(i0, i1)];
            });
        };
        for (const auto& f : snap.time_derivs) out.time_derivs.push_back(pick(f));
        if (!snap.laplacian.empty()) out.laplacian = pick(snap.laplacian);
        return out;
    }

    /// Spectrum of ∂_τ^i U at τ restricted to |K_a| <= π/ε on every axis,
    /// boundary modes at half weight (the sinc projection of step ε).
    std::vector<double> band_limited(double tau, int order, double eps) const {
        auto spec = time_derivative_spectrum(tau, order);
        const double kc = std::numbers::pi / eps;
        const double tol = 1e-9 * kc;
        for (std::size_t s = 0; s < spec.size(); ++s) {
            double k0, k1, mult;
            mode(s, k0, k1, mult);
            double f = 1.0;
            for (double kv : {k0, k1}) {
                const double a = std::abs(kv);
                if (a > kc + tol) f = 0.0;
                else if (std::abs(a - kc) <= tol) f *= 0.5;
            }
            spec[s] *= f;
        }
        return to_real(spec);
    }

    /// ‖(I − P_ε) ∂_τ^i U(τ)‖²_{L²}: energy above the lattice band.
    double out_of_band_sq(double tau, int order, double eps) const {
        const auto spec = time_derivative_spectrum(tau, order);
        const double kc = std::numbers::pi / eps;
        const double tol = 1e-9 * kc;
        double sum = 0.0;
        for (std::size_t s = 0; s < spec.size(); ++s) {
            double k0, k1, mult;
            mode(s, k0, k1, mult);
            // Complement of the half-weighted projector, per axis factors.
            double f = 1.0;
            for (double kv : {k0, k1}) {
                const double a = std::abs(kv);
                if (a > kc + tol) f = 0.0;
                else if (std::abs(a - kc) <= tol) f *= 0.5;
            }
            sum += mult * (1.0 - f) * (1.0 - f) * std::norm(spec[s]);
        }
        return sum * grid_.cell_volume() / double(grid_.size());
    }

    /// ‖∂_τ^i U(τ)‖²_{L²}.
    double l2_sq(double tau, int order) const {
        const auto spec = time_derivative_spectrum(tau, order);
        double sum = 0.0;
        for (std::size_t s = 0; s < spec.size(); ++s) {
            double k0, k1, mult;
            mode(s, k0, k1, mult);
            sum += mult * std::norm(spec[s]);
        }
        return sum * grid_.cell_volume() / double(grid_.size());
    }

private:
    static double binomial(int n, int k) {
        double r = 1.0;
        for (int q = 1; q <= k; ++q) r = r * (n - k + q) / q;
        return r;
    }

    template <class F>
    std::vector<fft::cplx> transform(F&& f) {
        const int n = grid_.n;
        const int n1 = grid_.dim == 2 ? n : 1;
        for (int a = 0; a < n; ++a)
            for (int b = 0; b < n1; ++b)
                tr_->real()[grid_.offset(a, b)] = f(grid_.coord(a), grid_.dim == 2 ? grid_.coord(b) : 0.0);
        tr_->forward();
        return std::vector<fft::cplx>(tr_->spectral(), tr_->spectral() + tr_->spectral_size());
    }

    void check_resolution() {
        const double kmax = std::numbers::pi / grid_.h;
        double total = 0.0, top = 0.0;
        for (std::size_t s = 0; s < phi_hat_.size(); ++s) {
            double k0, k1, mult;
            mode(s, k0, k1, mult);
            const double e = mult * (std::norm(phi_hat_[s]) + std::norm(psi_hat_[s]));
            total += e;
            if (std::max(std::abs(k0), std::abs(k1)) > 2.0 * kmax / 3.0) top += e;
        }
        top_third_ = total > 0 ? top / total : 0.0;
        if (top_third_ >= 1e-8)
            throw WaveError("WaveSolution: data under-resolved, top-third spectral fraction " + std::to_string(top_third_));
    }

    void check_box_mass() {
        const int n = grid_.n;
        const int n1 = grid_.dim == 2 ? n : 1;
        const double inner = 0.4 * grid_.length();
        double total = 0.0, outer = 0.0;
        for (int a = 0; a < n; ++a)
            for (int b = 0; b < n1; ++b) {
                const double x = grid_.coord(a), y = grid_.dim == 2 ? grid_.coord(b) : 0.0;
                const double p = data_.phi(x, y), q = data_.psi(x, y);
                const double e = p * p + q * q;
                total += e;
                if (std::abs(x) > inner || std::abs(y) > inner) outer += e;
            }
        boundary_fraction_ = total > 0 ? outer / total : 0.0;
        if (boundary_fraction_ >= 1e-10)
            throw WaveError("WaveSolution: data not contained in the box, outer fraction " +
                            std::to_string(boundary_fraction_));
    }

    SmoothInitialData data_;
    double c_;
    WaveGrid grid_;
    std::unique_ptr<fft::RealTransform> tr_;
    std::unique_ptr<std::mutex> mu_;
    std::vector<fft::cplx> phi_hat_, psi_hat_;
    double top_third_ = 0.0;
    double boundary_fraction_ = 0.0;
};

}  // namespace homlat
