#pragma once

/// @file lattice.hpp
/// @brief Finite-window lattice fields and the discrete difference operators
///        of the harmonic lattice (Laplacian, shifts, one-sided and centered
///        differences, axis Laplacians).
///
/// A window is the full box of indices |j_i| <= half_extent_i in 1 or 2
/// dimensions. Values are stored dense, row-major with axis 1 outermost.
/// Reads outside the window return 0 (Dirichlet-zero), which keeps every
/// operator total and its algebraic identities exact on the interior.

#include <algorithm>
#include <array>
#include <cmath>
#include <cstddef>
#include <initializer_list>
#include <stdexcept>
#include <string>
#include <utility>
#include <vector>

namespace homlat {

/// Lattice index. For 1D windows the second component is always 0.
using Index = std::array<int, 2>;

class LatticeWindow {
public:
    LatticeWindow() = default;

    LatticeWindow(int dim, Index half_extent) : dim_(dim), half_(half_extent) {
        if (dim != 1 && dim != 2)
            throw std::invalid_argument("LatticeWindow: dim must be 1 or 2");
        if (half_[0] < 1 || (dim == 2 && half_[1] < 1))
            throw std::invalid_argument("LatticeWindow: half_extent must be >= 1 on every axis");
        if (dim == 1) half_[1] = 0;
    }

    static LatticeWindow square(int dim, int half_extent) {
        return LatticeWindow(dim, {half_extent, half_extent});
    }

    int dim() const { return dim_; }
    int half_extent(int axis) const { return half_[axis]; }
    const Index& half_extents() const { return half_; }
    int extent(int axis) const { return 2 * half_[axis] + 1; }
    std::size_t size() const {
        return static_cast<std::size_t>(extent(0)) * static_cast<std::size_t>(extent(1));
    }

    bool contains(const Index& j) const {
        return std::abs(j[0]) <= half_[0] && std::abs(j[1]) <= half_[1];
    }

    /// True when j and all its nearest neighbours lie in the window, shrunk by
    /// `margin` extra layers.
    bool is_interior(const Index& j, int margin = 1) const {
        for (int a = 0; a < dim_; ++a)
            if (std::abs(j[a]) > half_[a] - margin) return false;
        return true;
    }

    std::size_t offset(const Index& j) const {
        return static_cast<std::size_t>(j[0] + half_[0]) * static_cast<std::size_t>(extent(1)) +
               static_cast<std::size_t>(j[1] + half_[1]);
    }

    Index index_of(std::size_t offset) const {
        const auto n1 = static_cast<std::size_t>(extent(1));
        return {static_cast<int>(offset / n1) - half_[0], static_cast<int>(offset % n1) - half_[1]};
    }

    template <class F>
    void for_each(F&& f) const {
        for (int a = -half_[0]; a <= half_[0]; ++a)
            for (int b = -half_[1]; b <= half_[1]; ++b) f(Index{a, b});
    }

    friend bool operator==(const LatticeWindow&, const LatticeWindow&) = default;

private:
    int dim_ = 2;
    Index half_{1, 1};
};

inline Index unit(int axis) { return axis == 0 ? Index{1, 0} : Index{0, 1}; }
inline Index operator+(Index a, const Index& b) { return {a[0] + b[0], a[1] + b[1]}; }
inline Index operator-(Index a, const Index& b) { return {a[0] - b[0], a[1] - b[1]}; }
inline Index operator*(int s, Index a) { return {s * a[0], s * a[1]}; }
inline int norm_inf(const Index& j) { return std::max(std::abs(j[0]), std::abs(j[1])); }
inline double norm2(const Index& j) { return std::hypot(double(j[0]), double(j[1])); }

class ScalarField {
public:
    ScalarField() = default;
    explicit ScalarField(LatticeWindow w, double fill = 0.0) : window_(w), values_(w.size(), fill) {}
    ScalarField(LatticeWindow w, std::vector<double> values) : window_(w), values_(std::move(values)) {
        if (values_.size() != window_.size())
            throw std::invalid_argument("ScalarField: value count does not match window");
    }

    template <class F>
    static ScalarField from_function(const LatticeWindow& w, F&& f) {
        ScalarField out(w);
        std::size_t k = 0;
        w.for_each([&](const Index& j) { out.values_[k++] = f(j); });
        return out;
    }

    static ScalarField indicator(const LatticeWindow& w, const Index& at) {
        ScalarField out(w);
        if (w.contains(at)) out[at] = 1.0;
        return out;
    }

    const LatticeWindow& window() const { return window_; }
    std::size_t size() const { return values_.size(); }
    const std::vector<double>& values() const { return values_; }
    std::vector<double>& values() { return values_; }
    double* data() { return values_.data(); }
    const double* data() const { return values_.data(); }

    double& operator[](const Index& j) { return values_[window_.offset(j)]; }
    double operator[](const Index& j) const { return values_[window_.offset(j)]; }

    /// Zero-extended read.
    double get(const Index& j) const { return window_.contains(j) ? values_[window_.offset(j)] : 0.0; }

    bool all_finite() const {
        for (double v : values_)
            if (!std::isfinite(v)) return false;
        return true;
    }

    ScalarField& operator+=(const ScalarField& o) {
        check_same(o);
        for (std::size_t k = 0; k < values_.size(); ++k) values_[k] += o.values_[k];
        return *this;
    }
    ScalarField& operator-=(const ScalarField& o) {
        check_same(o);
        for (std::size_t k = 0; k < values_.size(); ++k) values_[k] -= o.values_[k];
        return *this;
    }
    ScalarField& operator*=(double s) {
        for (double& v : values_) v *= s;
        return *this;
    }
    /// Pointwise product.
    ScalarField& operator*=(const ScalarField& o) {
        check_same(o);
        for (std::size_t k = 0; k < values_.size(); ++k) values_[k] *= o.values_[k];
        return *this;
    }

    friend ScalarField operator+(ScalarField a, const ScalarField& b) { return a += b; }
    friend ScalarField operator-(ScalarField a, const ScalarField& b) { return a -= b; }
    friend ScalarField operator*(ScalarField a, const ScalarField& b) { return a *= b; }
    friend ScalarField operator*(double s, ScalarField a) { return a *= s; }

    /// Copy of this field on another window (zero-extended / truncated).
    ScalarField restricted_to(const LatticeWindow& w) const {
        return ScalarField::from_function(w, [&](const Index& j) { return get(j); });
    }

private:
    void check_same(const ScalarField& o) const {
        if (!(window_ == o.window_)) throw std::invalid_argument("ScalarField: window mismatch");
    }

    LatticeWindow window_;
    std::vector<double> values_;
};

namespace detail {
template <class F>
ScalarField map_index(const ScalarField& f, F&& op) {
    ScalarField out(f.window());
    auto& v = out.values();
    std::size_t k = 0;
    f.window().for_each([&](const Index& j) { v[k++] = op(j); });
    return out;
}
}  // namespace detail

/// S_i^± : (S f)(j) = f(j ± e_i). `sign` is +1 or -1.
inline ScalarField shift(const ScalarField& f, int axis, int sign) {
    const Index e = sign * unit(axis);
    return detail::map_index(f, [&](const Index& j) { return f.get(j + e); });
}

/// δ_i^± f(j) = ±(f(j ± e_i) − f(j)).
inline ScalarField diff_forward(const ScalarField& f, int axis) {
    const Index e = unit(axis);
    return detail::map_index(f, [&](const Index& j) { return f.get(j + e) - f[j]; });
}

inline ScalarField diff_backward(const ScalarField& f, int axis) {
    const Index e = unit(axis);
    return detail::map_index(f, [&](const Index& j) { return f[j] - f.get(j - e); });
}

/// δ_i f(j) = f(j + e_i) − f(j − e_i).
inline ScalarField diff_centered(const ScalarField& f, int axis) {
    const Index e = unit(axis);
    return detail::map_index(f, [&](const Index& j) { return f.get(j + e) - f.get(j - e); });
}

/// Δ_i f = S_i^+ f − 2f + S_i^- f.
inline ScalarField axis_laplacian(const ScalarField& f, int axis) {
    const Index e = unit(axis);
    return detail::map_index(f, [&](const Index& j) { return f.get(j + e) - 2.0 * f[j] + f.get(j - e); });
}

/// Writes Δf into `out` (same window). Interior rows take a branch-free path;
/// this is the force evaluation of the time stepper.
inline void discrete_laplacian_into(const ScalarField& f, ScalarField& out) {
    const auto& w = f.window();
    const int n1 = w.extent(0), n2 = w.extent(1);
    const double* in = f.data();
    double* o = out.data();
    if (w.dim() == 1) {
        for (int a = 0; a < n1; ++a) {
            const double l = a > 0 ? in[a - 1] : 0.0;
            const double r = a + 1 < n1 ? in[a + 1] : 0.0;
            o[a] = l + r - 2.0 * in[a];
        }
        return;
    }
    for (int a = 0; a < n1; ++a) {
        const double* row = in + static_cast<std::ptrdiff_t>(a) * n2;
        const double* up = a > 0 ? row - n2 : nullptr;
        const double* dn = a + 1 < n1 ? row + n2 : nullptr;
        double* orow = o + static_cast<std::ptrdiff_t>(a) * n2;
        for (int b = 0; b < n2; ++b) {
            double s = -4.0 * row[b];
            if (up) s += up[b];
            if (dn) s += dn[b];
            if (b > 0) s += row[b - 1];
            if (b + 1 < n2) s += row[b + 1];
            orow[b] = s;
        }
    }
}

/// Δf(j) = −2d f(j) + Σ_i f(j+e_i) + f(j−e_i).
inline ScalarField discrete_laplacian(const ScalarField& f) {
    ScalarField out(f.window());
    discrete_laplacian_into(f, out);
    return out;
}

/// Euclidean norm of the concatenation of all the given fields.
inline double weighted_l2(std::initializer_list<const ScalarField*> fields) {
    double s = 0.0;
    for (const auto* f : fields)
        for (double v : f->values()) s += v * v;
    return std::sqrt(s);
}

inline double weighted_l2(const ScalarField& f) { return weighted_l2({&f}); }

inline double sup_norm(const ScalarField& f) {
    double m = 0.0;
    for (double v : f.values()) m = std::max(m, std::abs(v));
    return m;
}

/// Sup norm over indices whose stencil of radius `margin` lies inside the window.
inline double interior_sup_norm(const ScalarField& f, int margin = 1) {
    double m = 0.0;
    f.window().for_each([&](const Index& j) {
        if (f.window().is_interior(j, margin)) m = std::max(m, std::abs(f[j]));
    });
    return m;
}

inline double dot(const ScalarField& a, const ScalarField& b) {
    double s = 0.0;
    for (std::size_t k = 0; k < a.size(); ++k) s += a.values()[k] * b.values()[k];
    return s;
}

}  // namespace homlat
