#pragma once

/// @file green.hpp
/// @brief Fundamental solution of the discrete Laplacian, Δφ = δ₀ with
///        φ(0) = 0, tabulated on the box |j|_∞ <= radius.
///
/// Two independent 2D backends:
///  - quadrature: one-dimensional reduction of the Fourier representation
///      φ(j) = (1/π) ∫_0^π [1 − e^{−n μ(k)} cos(m k)] / (2 sinh μ(k)) dk,
///    with n = max(|j1|,|j2|), m = min(|j1|,|j2|), cosh μ = 2 − cos k.
///    The integrand is analytic on [0, π]; composite Gauss–Legendre panels
///    are refined until the stencil residual meets the tolerance.
///  - recurrence: the stencil Δφ = 0 marched outwards from the diagonal
///    values φ(n,n) = (1/π) Σ_{k<=n} 1/(2k−1), in 300-digit arithmetic
///    (the march amplifies rounding error exponentially).
/// In 1D the solution is φ(j) = |j|/2.

#include <cmath>
#include <cstdint>
#include <filesystem>
#include <fstream>
#include <numbers>
#include <sstream>
#include <stdexcept>
#include <string>
#include <vector>

#include <boost/math/quadrature/gauss.hpp>
#include <boost/multiprecision/cpp_bin_float.hpp>

#include "homlat/lattice.hpp"

namespace homlat {

enum class GreenMethod { Quadrature, Recurrence, Exact1D };

inline const char* to_string(GreenMethod m) {
    switch (m) {
        case GreenMethod::Quadrature: return "quadrature";
        case GreenMethod::Recurrence: return "recurrence";
        case GreenMethod::Exact1D: return "exact1d";
    }
    return "?";
}

inline GreenMethod green_method_from_string(const std::string& s) {
    for (auto m : {GreenMethod::Quadrature, GreenMethod::Recurrence, GreenMethod::Exact1D})
        if (s == to_string(m)) return m;
    throw std::invalid_argument("unknown Green method: " + s);
}

class GreenError : public std::runtime_error {
public:
    GreenError(const std::string& what, double achieved) : std::runtime_error(what), achieved_(achieved) {}
    double achieved_residual() const { return achieved_; }

private:
    double achieved_;
};

/// Tabulated φ. 2D tables store the octant 0 <= m <= n <= radius and use the
/// 8-fold symmetry of the square lattice for every other read.
class GreenTable {
public:
    GreenTable() = default;
    GreenTable(int dim, int radius, GreenMethod method, double tolerance, std::vector<double> values)
        : dim_(dim), radius_(radius), method_(method), tolerance_(tolerance), values_(std::move(values)) {
        if (values_.size() != expected_size(dim, radius))
            throw std::invalid_argument("GreenTable: value count does not match radius");
    }

    static std::size_t expected_size(int dim, int radius) {
        return dim == 1 ? std::size_t(radius) + 1 : std::size_t(radius + 1) * std::size_t(radius + 2) / 2;
    }

    int dim() const { return dim_; }
    int radius() const { return radius_; }
    GreenMethod method() const { return method_; }
    double tolerance() const { return tolerance_; }
    double achieved_residual() const { return achieved_residual_; }
    void set_achieved_residual(double r) { achieved_residual_ = r; }
    const std::vector<double>& raw() const { return values_; }

    bool covers(const Index& j) const { return norm_inf(j) <= radius_; }

    double operator()(const Index& j) const {
        if (!covers(j))
            throw std::out_of_range("GreenTable: index outside tabulated radius " + std::to_string(radius_));
        if (dim_ == 1) return values_[std::size_t(std::abs(j[0]))];
        int n = std::abs(j[0]), m = std::abs(j[1]);
        if (m > n) std::swap(n, m);
        return values_[std::size_t(n) * (n + 1) / 2 + m];
    }

    /// φ on the window |j|_∞ <= r (r <= radius).
    ScalarField as_field(int r) const {
        if (r > radius_) throw std::out_of_range("GreenTable::as_field: radius exceeds table");
        return ScalarField::from_function(LatticeWindow::square(dim_, r), [&](const Index& j) { return (*this)(j); });
    }

    /// max |Δφ(j) − δ₀(j)| over |j|_∞ < radius.
    double stencil_residual() const {
        double worst = 0.0;
        const int r = radius_ - 1;
        if (r < 0) return 0.0;
        if (dim_ == 1) {
            for (int j = 0; j <= r; ++j) {
                const double lap = (*this)({j + 1, 0}) + (*this)({j - 1, 0}) - 2.0 * (*this)({j, 0});
                worst = std::max(worst, std::abs(lap - (j == 0 ? 1.0 : 0.0)));
            }
            return worst;
        }
        for (int n = 0; n <= r; ++n)
            for (int m = 0; m <= n; ++m) {
                const Index j{n, m};
                double lap = -4.0 * (*this)(j);
                for (int a = 0; a < 2; ++a) lap += (*this)(j + unit(a)) + (*this)(j - unit(a));
                worst = std::max(worst, std::abs(lap - (n == 0 && m == 0 ? 1.0 : 0.0)));
            }
        return worst;
    }

private:
    int dim_ = 2;
    int radius_ = 0;
    GreenMethod method_ = GreenMethod::Quadrature;
    double tolerance_ = 0.0;
    double achieved_residual_ = 0.0;
    std::vector<double> values_;
};

namespace detail {

/// Octant values by composite Gauss–Legendre quadrature with `panels` panels.
inline std::vector<double> green_quadrature_octant(int radius, int panels) {
    using quad = boost::math::quadrature::gauss<double, 20>;
    const auto& x = quad::abscissa();
    const auto& w = quad::weights();
    std::vector<double> nodes, weights;
    const double width = std::numbers::pi / panels;
    for (int p = 0; p < panels; ++p) {
        const double mid = (p + 0.5) * width, half = 0.5 * width;
        for (std::size_t i = 0; i < x.size(); ++i) {
            const int signs = x[i] == 0.0 ? 1 : 2;
            for (int s = 0; s < signs; ++s) {
                nodes.push_back(mid + (s == 0 ? 1.0 : -1.0) * half * x[i]);
                weights.push_back(half * w[i]);
            }
        }
    }
    const std::size_t nnodes = nodes.size();
    std::vector<double> acc(GreenTable::expected_size(2, radius), 0.0);
    std::vector<double> one_minus_pow(radius + 1), pow_n(radius + 1), two_sin2(radius + 1);
    for (std::size_t q = 0; q < nnodes; ++q) {
        const double k = nodes[q];
        const double s = std::sin(0.5 * k);
        const double xk = 2.0 * s * s;  // cosh μ − 1
        const double sinh_mu = std::sqrt(xk * (xk + 2.0));
        const double mu = std::log1p(xk + sinh_mu);
        const double scale = weights[q] / (std::numbers::pi * 2.0 * sinh_mu);
        for (int n = 0; n <= radius; ++n) {
            one_minus_pow[n] = -std::expm1(-n * mu);
            pow_n[n] = std::exp(-n * mu);
            const double sm = std::sin(0.5 * n * k);
            two_sin2[n] = 2.0 * sm * sm;
        }
        for (int n = 0; n <= radius; ++n) {
            double* row = acc.data() + std::size_t(n) * (n + 1) / 2;
            const double a = one_minus_pow[n] * scale, b = pow_n[n] * scale;
            for (int m = 0; m <= n; ++m) row[m] += a + b * two_sin2[m];
        }
    }
    return acc;
}

inline std::vector<double> green_recurrence_octant(int radius) {
    using big = boost::multiprecision::number<boost::multiprecision::cpp_bin_float<300>>;
    if (radius > 300) throw std::invalid_argument("recurrence backend supports radius <= 300");
    const big pi = boost::math::constants::pi<big>();
    // oct[n][m] for 0 <= m <= n <= radius + 1 (one extra ring feeds the march).
    const int R = radius + 1;
    std::vector<std::vector<big>> oct(R + 1);
    for (int n = 0; n <= R; ++n) oct[n].assign(n + 1, big(0));
    auto at = [&](int a, int b) -> big& {
        a = std::abs(a);
        b = std::abs(b);
        if (b > a) std::swap(a, b);
        return oct[a][b];
    };
    big harmonic = 0;
    for (int n = 1; n <= R; ++n) {
        harmonic += big(1) / big(2 * n - 1);
        oct[n][n] = harmonic / pi;
    }
    // First off-diagonal: the stencil at (n, n) sees (n+1, n) twice by symmetry.
    oct[1][0] = big(1) / 4;
    for (int n = 1; n + 1 <= R; ++n) oct[n + 1][n] = 2 * oct[n][n] - oct[n][n - 1];
    // Offsets d = j1 − j2 >= 2, swept outwards from the diagonal.
    for (int d = 2; d <= R; ++d) {
        for (int n = 0; n + d <= R; ++n) {
            const int j1 = n + d, j2 = n;
            // Stencil centred at (j1 − 1, j2), which lies at offset d − 1.
            const int c1 = j1 - 1, c2 = j2;
            const big source = (c1 == 0 && c2 == 0) ? big(1) : big(0);
            at(j1, j2) = 4 * at(c1, c2) + source - at(c1 - 1, c2) - at(c1, c2 + 1) - at(c1, c2 - 1);
        }
    }
    std::vector<double> out(GreenTable::expected_size(2, radius));
    for (int n = 0; n <= radius; ++n)
        for (int m = 0; m <= n; ++m) out[std::size_t(n) * (n + 1) / 2 + m] = static_cast<double>(oct[n][m]);
    return out;
}

}  // namespace detail

/// Tabulate the 2D fundamental solution. Throws GreenError if the stencil
/// residual cannot be brought under `tolerance`.
inline GreenTable green_function(int radius, double tolerance = 1e-10,
                                 GreenMethod method = GreenMethod::Quadrature) {
    if (radius < 1) throw std::invalid_argument("green_function: radius must be >= 1");
    if (method == GreenMethod::Recurrence) {
        GreenTable t(2, radius, method, tolerance, detail::green_recurrence_octant(radius));
        const double res = t.stencil_residual();
        t.set_achieved_residual(res);
        if (res > tolerance) throw GreenError("green_function: recurrence residual above tolerance", res);
        return t;
    }
    if (method != GreenMethod::Quadrature) throw std::invalid_argument("green_function: 2D method required");
    int panels = std::max(16, radius / 2);
    double res = 0.0;
    for (int attempt = 0; attempt < 4; ++attempt, panels *= 2) {
        GreenTable t(2, radius, method, tolerance, detail::green_quadrature_octant(radius, panels));
        res = t.stencil_residual();
        t.set_achieved_residual(res);
        if (res <= tolerance) return t;
    }
    throw GreenError("green_function: quadrature residual above tolerance after refinement", res);
}

/// φ(j) = |j|/2.
inline GreenTable green_function_1d(int radius) {
    if (radius < 1) throw std::invalid_argument("green_function_1d: radius must be >= 1");
    std::vector<double> v(std::size_t(radius) + 1);
    for (int j = 0; j <= radius; ++j) v[j] = 0.5 * j;
    GreenTable t(1, radius, GreenMethod::Exact1D, 0.0, std::move(v));
    t.set_achieved_residual(t.stencil_residual());
    return t;
}

/// Fitted far-field form φ(j) ≈ (1/2π) log|j| + C₀ + K(j)/|j|².
struct GreenAsymptotics {
    double c0 = 0.0;
    double k_max = 0.0;           // max |φ − log/(2π) − C₀|·|j|² over the fit range
    double residual_slope = 0.0;  // log–log slope of the shell-max residual against |j|
    int r_min = 8, r_max = 64;
};

/// Least-squares fit of φ − log|j|/(2π) on {1, cos 4θ/|j|², 1/|j|⁴} over
/// r_min <= |j| <= r_max; the residual after removing only C₀ is then
/// binned in unit shells to estimate its decay rate.
inline GreenAsymptotics fit_green_asymptotics(const GreenTable& t, int r_min = 8, int r_max = 64) {
    if (t.dim() != 2) throw std::invalid_argument("fit_green_asymptotics: 2D table required");
    if (r_max > t.radius()) throw std::invalid_argument("fit_green_asymptotics: r_max exceeds table radius");
    // Normal equations for 3 basis functions.
    double A[3][3] = {}, b[3] = {};
    for (int a = -r_max; a <= r_max; ++a)
        for (int c = -r_max; c <= r_max; ++c) {
            const double r = std::hypot(double(a), double(c));
            if (r < r_min || r > r_max) continue;
            const double th = std::atan2(double(c), double(a));
            const double basis[3] = {1.0, std::cos(4 * th) / (r * r), 1.0 / (r * r * r * r)};
            const double y = t({a, c}) - std::log(r) / (2 * std::numbers::pi);
            for (int p = 0; p < 3; ++p) {
                b[p] += basis[p] * y;
                for (int q = 0; q < 3; ++q) A[p][q] += basis[p] * basis[q];
            }
        }
    // Gaussian elimination (3x3, well conditioned after the 1/r scaling).
    for (int p = 0; p < 3; ++p)
        for (int q = p + 1; q < 3; ++q) {
            const double f = A[q][p] / A[p][p];
            for (int s = p; s < 3; ++s) A[q][s] -= f * A[p][s];
            b[q] -= f * b[p];
        }
    double coef[3];
    for (int p = 2; p >= 0; --p) {
        double s = b[p];
        for (int q = p + 1; q < 3; ++q) s -= A[p][q] * coef[q];
        coef[p] = s / A[p][p];
    }
    GreenAsymptotics out;
    out.c0 = coef[0];
    out.r_min = r_min;
    out.r_max = r_max;
    std::vector<double> shell_max(r_max + 1, 0.0);
    for (int a = -r_max; a <= r_max; ++a)
        for (int c = -r_max; c <= r_max; ++c) {
            const double r = std::hypot(double(a), double(c));
            if (r < r_min || r > r_max) continue;
            const double res = std::abs(t({a, c}) - std::log(r) / (2 * std::numbers::pi) - out.c0);
            out.k_max = std::max(out.k_max, res * r * r);
            const int shell = static_cast<int>(std::floor(r));
            shell_max[shell] = std::max(shell_max[shell], res);
        }
    double sx = 0, sy = 0, sxx = 0, sxy = 0;
    int cnt = 0;
    for (int s = r_min; s < r_max; ++s) {
        if (shell_max[s] <= 0) continue;
        const double lx = std::log(s + 0.5), ly = std::log(shell_max[s]);
        sx += lx;
        sy += ly;
        sxx += lx * lx;
        sxy += lx * ly;
        ++cnt;
    }
    out.residual_slope = (cnt * sxy - sx * sy) / (cnt * sxx - sx * sx);
    return out;
}

/// Squared ℓ² norm of a field over the disk D(j, r), Σ_{k ∈ D(0,r)} f(j − k)².
template <class Field>
double restricted_norm_sq(const Field& f, const Index& j, int r, int dim = 2) {
    double s = 0.0;
    const int r2 = dim == 2 ? r : 0;
    for (int a = -r; a <= r; ++a)
        for (int b = -r2; b <= r2; ++b) {
            const double v = f(j - Index{a, b});
            s += v * v;
        }
    return s;
}

// ---------------------------------------------------------------------------
// Binary cache with a plain-text header.

inline std::string green_cache_name(int dim, int radius, GreenMethod method, double tolerance) {
    std::ostringstream os;
    os << "green_d" << dim << "_r" << radius << "_" << to_string(method) << "_tol" << tolerance << ".bin";
    return os.str();
}

inline void save_green_table(const GreenTable& t, const std::filesystem::path& file) {
    std::filesystem::create_directories(file.parent_path().empty() ? "." : file.parent_path());
    const auto tmp = file.string() + ".tmp";
    {
        std::ofstream os(tmp, std::ios::binary);
        if (!os) throw std::runtime_error("cannot write Green cache " + tmp);
        os << "HOMLAT-GREEN\n"
           << "version=1\n"
           << "dim=" << t.dim() << "\n"
           << "radius=" << t.radius() << "\n"
           << "method=" << to_string(t.method()) << "\n";
        os.precision(17);
        os << "tolerance=" << t.tolerance() << "\n"
           << "achieved_residual=" << t.achieved_residual() << "\n"
           << "count=" << t.raw().size() << "\n"
           << "end\n";
        os.write(reinterpret_cast<const char*>(t.raw().data()), std::streamsize(t.raw().size() * sizeof(double)));
    }
    std::filesystem::rename(tmp, file);
}

inline GreenTable load_green_table(const std::filesystem::path& file) {
    std::ifstream is(file, std::ios::binary);
    if (!is) throw std::runtime_error("cannot open Green cache " + file.string());
    std::string line;
    std::getline(is, line);
    if (line != "HOMLAT-GREEN") throw std::runtime_error("Green cache: bad magic in " + file.string());
    int version = 0, dim = 0, radius = 0;
    std::size_t count = 0;
    double tol = 0, achieved = 0;
    GreenMethod method = GreenMethod::Quadrature;
    while (std::getline(is, line) && line != "end") {
        const auto eq = line.find('=');
        if (eq == std::string::npos) throw std::runtime_error("Green cache: malformed header line");
        const std::string key = line.substr(0, eq), val = line.substr(eq + 1);
        if (key == "version") version = std::stoi(val);
        else if (key == "dim") dim = std::stoi(val);
        else if (key == "radius") radius = std::stoi(val);
        else if (key == "method") method = green_method_from_string(val);
        else if (key == "tolerance") tol = std::stod(val);
        else if (key == "achieved_residual") achieved = std::stod(val);
        else if (key == "count") count = std::stoull(val);
    }
    if (version != 1) throw std::runtime_error("Green cache: unsupported version");
    if (count != GreenTable::expected_size(dim, radius)) throw std::runtime_error("Green cache: size mismatch");
    std::vector<double> v(count);
    is.read(reinterpret_cast<char*>(v.data()), std::streamsize(count * sizeof(double)));
    if (!is) throw std::runtime_error("Green cache: truncated payload");
    GreenTable t(dim, radius, method, tol, std::move(v));
    t.set_achieved_residual(achieved);
    return t;
}

/// Tabulate, or reuse a cached table keyed by (dim, radius, method, tolerance).
/// An empty cache directory disables caching. `cache_hit` reports reuse.
inline GreenTable cached_green_function(int dim, int radius, double tolerance, const std::filesystem::path& cache_dir,
                                        GreenMethod method = GreenMethod::Quadrature, bool* cache_hit = nullptr) {
    if (dim == 1) method = GreenMethod::Exact1D;
    if (cache_hit) *cache_hit = false;
    if (dim == 1) return green_function_1d(radius);
    if (!cache_dir.empty()) {
        const auto file = cache_dir / green_cache_name(dim, radius, method, tolerance);
        if (std::filesystem::exists(file)) {
            auto t = load_green_table(file);
            if (cache_hit) *cache_hit = true;
            return t;
        }
        auto t = green_function(radius, tolerance, method);
        save_green_table(t, file);
        return t;
    }
    return green_function(radius, tolerance, method);
}

}  // namespace homlat
