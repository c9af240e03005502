#pragma once

/// @file corrector.hpp
/// @brief Restricted corrector χ_r = Σ_{k ∈ D(0,⌊r⌋)} φ(· − k) z(k), its
///        operator images, the PDE check Δχ_r = z·1_D, and a Monte-Carlo
///        audit of the sub-Gaussian tail and growth envelopes.
///
/// D(0, r) is the box |k|_∞ <= r. The convolution runs on a cyclic grid of
/// size N >= 2G + 1, G = W + 1 + ⌊r⌋, which is alias-free for every output
/// with |j|_∞ <= W + 1 even though the full linear convolution is larger.

#include <algorithm>
#include <cmath>
#include <cstdint>
#include <map>
#include <stdexcept>
#include <string>
#include <vector>

#include "homlat/fft.hpp"
#include "homlat/green.hpp"
#include "homlat/lattice.hpp"
#include "homlat/mass_models.hpp"

namespace homlat {

enum class CorrectorOp { Identity, ShiftPlus0, ShiftMinus0, ShiftPlus1, ShiftMinus1, Centered0, Centered1 };

inline const char* to_string(CorrectorOp op) {
    switch (op) {
        case CorrectorOp::Identity: return "identity";
        case CorrectorOp::ShiftPlus0: return "shift+0";
        case CorrectorOp::ShiftMinus0: return "shift-0";
        case CorrectorOp::ShiftPlus1: return "shift+1";
        case CorrectorOp::ShiftMinus1: return "shift-1";
        case CorrectorOp::Centered0: return "centered0";
        case CorrectorOp::Centered1: return "centered1";
    }
    return "?";
}

/// Applies one of the tagged operators to a field.
inline ScalarField apply_op(CorrectorOp op, const ScalarField& f) {
    switch (op) {
        case CorrectorOp::Identity: return f;
        case CorrectorOp::ShiftPlus0: return shift(f, 0, +1);
        case CorrectorOp::ShiftMinus0: return shift(f, 0, -1);
        case CorrectorOp::ShiftPlus1: return shift(f, 1, +1);
        case CorrectorOp::ShiftMinus1: return shift(f, 1, -1);
        case CorrectorOp::Centered0: return diff_centered(f, 0);
        case CorrectorOp::Centered1: return diff_centered(f, 1);
    }
    return f;
}

/// Pointwise value of L(f)(j) with zero-extended reads through `read`.
template <class Read>
double apply_op_at(CorrectorOp op, Read&& read, const Index& j) {
    switch (op) {
        case CorrectorOp::Identity: return read(j);
        case CorrectorOp::ShiftPlus0: return read(j + unit(0));
        case CorrectorOp::ShiftMinus0: return read(j - unit(0));
        case CorrectorOp::ShiftPlus1: return read(j + unit(1));
        case CorrectorOp::ShiftMinus1: return read(j - unit(1));
        case CorrectorOp::Centered0: return read(j + unit(0)) - read(j - unit(0));
        case CorrectorOp::Centered1: return read(j + unit(1)) - read(j - unit(1));
    }
    return 0.0;
}

inline bool op_valid_for_dim(CorrectorOp op, int dim) {
    if (dim == 2) return true;
    return op == CorrectorOp::Identity || op == CorrectorOp::ShiftPlus0 || op == CorrectorOp::ShiftMinus0 ||
           op == CorrectorOp::Centered0;
}

struct CorrectorField {
    double r = 0.0;
    int radius = 0;                      // ⌊r⌋
    ScalarField chi;                     // χ_r on the evaluation window
    ScalarField chi_extended;            // χ_r on the evaluation window grown by one layer
    std::map<CorrectorOp, ScalarField> applied;

    const LatticeWindow& window() const { return chi.window(); }

    /// L(χ_r) on the evaluation window, computed on first request.
    const ScalarField& image(CorrectorOp op) {
        auto it = applied.find(op);
        if (it != applied.end()) return it->second;
        auto full = apply_op(op, chi_extended);
        return applied.emplace(op, full.restricted_to(window())).first->second;
    }
};

inline LatticeWindow grown(const LatticeWindow& w, int layers) {
    return LatticeWindow(w.dim(), {w.half_extent(0) + layers, w.dim() == 2 ? w.half_extent(1) + layers : 0});
}

/// Green radius needed to evaluate χ_r (and its one-step operator images) on `eval`.
inline int corrector_green_radius(double r, const LatticeWindow& eval) {
    const int e = std::max(eval.half_extent(0), eval.half_extent(1));
    return e + 1 + static_cast<int>(std::floor(r));
}

/// χ_r on `eval` from the fluctuation field z. z is read (zero-extended) on
/// D(0, ⌊r⌋); its window must contain that box.
inline CorrectorField corrector(const ScalarField& z, double r, const LatticeWindow& eval, const GreenTable& green,
                                std::vector<CorrectorOp> ops = {}) {
    if (!(r >= 1.0)) throw std::invalid_argument("corrector: r must be >= 1");
    const int dim = eval.dim();
    if (z.window().dim() != dim || green.dim() != dim)
        throw std::invalid_argument("corrector: dimension mismatch between z, window and Green table");
    const int R = static_cast<int>(std::floor(r));
    if (!z.window().contains({R, dim == 2 ? R : 0}))
        throw std::invalid_argument("corrector: z window does not cover D(0, floor(r))");
    const LatticeWindow ext = grown(eval, 1);
    const int G = corrector_green_radius(r, eval);
    if (green.radius() < G)
        throw std::out_of_range("corrector: Green table radius " + std::to_string(green.radius()) + " < required " +
                                std::to_string(G));

    const int N = fft::good_size(2 * G + 1);
    const int n1 = dim == 2 ? N : 1;
    const int R1 = dim == 2 ? R : 0;
    const int G1 = dim == 2 ? G : 0;
    auto wrap = [N](int v) { return ((v % N) + N) % N; };

    fft::RealTransform tz(dim, N, n1), tg(dim, N, n1);
    std::fill(tz.real(), tz.real() + tz.real_size(), 0.0);
    std::fill(tg.real(), tg.real() + tg.real_size(), 0.0);
    for (int a = -R; a <= R; ++a)
        for (int b = -R1; b <= R1; ++b)
            tz.real()[std::size_t(wrap(a)) * n1 + (dim == 2 ? wrap(b) : 0)] = z.get({a, b});
    for (int a = -G; a <= G; ++a)
        for (int b = -G1; b <= G1; ++b)
            tg.real()[std::size_t(wrap(a)) * n1 + (dim == 2 ? wrap(b) : 0)] = green({a, b});
    tz.forward();
    tg.forward();
    const double scale = 1.0 / double(tz.real_size());
    for (std::size_t k = 0; k < tz.spectral_size(); ++k) tz.spectral()[k] *= tg.spectral()[k] * scale;
    tz.backward();

    CorrectorField cf;
    cf.r = r;
    cf.radius = R;
    cf.chi_extended = ScalarField::from_function(ext, [&](const Index& j) {
        return tz.real()[std::size_t(wrap(j[0])) * n1 + (dim == 2 ? wrap(j[1]) : 0)];
    });
    cf.chi = cf.chi_extended.restricted_to(eval);
    for (auto op : ops) cf.image(op);
    return cf;
}

/// Direct O(|eval|·|D|) evaluation of L(χ_r)(j) = Σ_k L(φ)(j − k) z(k).
inline ScalarField corrector_naive(const ScalarField& z, double r, const LatticeWindow& eval, const GreenTable& green,
                                   CorrectorOp op = CorrectorOp::Identity) {
    const int R = static_cast<int>(std::floor(r));
    const int R1 = eval.dim() == 2 ? R : 0;
    return ScalarField::from_function(eval, [&](const Index& j) {
        double s = 0.0;
        for (int a = -R; a <= R; ++a)
            for (int b = -R1; b <= R1; ++b) {
                const Index k{a, b};
                const double zk = z.get(k);
                if (zk == 0.0) continue;
                s += zk * apply_op_at(op, [&](const Index& q) { return green(q - k); }, j);
            }
        return s;
    });
}

struct CorrectorPdeReport {
    double max_residual = 0.0;
    Index worst{0, 0};
    bool passed = false;
    double tolerance = 1e-8;
};

/// max over the evaluation window of |Δχ_r − z·1_{D(0,⌊r⌋)}|.
inline CorrectorPdeReport verify_corrector_pde(const CorrectorField& cf, const ScalarField& z, double tolerance = 1e-8) {
    CorrectorPdeReport rep;
    rep.tolerance = tolerance;
    const auto lap = discrete_laplacian(cf.chi_extended);
    const int R = cf.radius;
    cf.window().for_each([&](const Index& j) {
        const double src = norm_inf(j) <= R ? z.get(j) : 0.0;
        const double res = std::abs(lap[j] - src);
        if (res > rep.max_residual) {
            rep.max_residual = res;
            rep.worst = j;
        }
    });
    rep.passed = rep.max_residual <= tolerance;
    return rep;
}

/// Φ_r(j2, k1) = Σ_{|k2| <= r} φ(k1, j2 − k2): the Green function summed
/// across the constant direction of a layered medium (random along axis 0).
inline double layered_kernel(const GreenTable& green, int r, int j2, int k1) {
    double s = 0.0;
    for (int k2 = -r; k2 <= r; ++k2) s += green({k1, j2 - k2});
    return s;
}

/// χ_r for a layered z(k) = zline(k1), by the one-dimensional factorisation
/// χ_r(j) = Σ_{|k1| <= r} zline(k1)·Φ_r(j2, j1 − k1).
template <class Line>
ScalarField layered_corrector(Line&& zline, int r, const LatticeWindow& eval, const GreenTable& green) {
    return ScalarField::from_function(eval, [&](const Index& j) {
        double s = 0.0;
        for (int k1 = -r; k1 <= r; ++k1) s += zline(k1) * layered_kernel(green, r, j[1], j[0] - k1);
        return s;
    });
}

// ---------------------------------------------------------------------------
// Tail / growth audit.

struct TailAuditRow {
    int r = 0;
    CorrectorOp op = CorrectorOp::Identity;
    int realizations = 0;
    double green_norm = 0.0;       // ‖Lφ‖_{D(0,r)}
    double proxy_sd = 0.0;         // |b − a|/2 · ‖Lφ‖
    double threshold = 0.0;        // t
    double exceedance = 0.0;       // empirical P(|Lχ_r(0)| > t)
    double bound = 0.0;            // 2 exp(−2t²/((b−a)²‖Lφ‖²))
    double mc_error = 0.0;         // √(bound(1 − bound)/n)
    double empirical_sd = 0.0;
    double growth = 0.0;           // mean over realizations of max_j |Lχ_r(j)| / envelope(j, r)
    bool tail_passed = false;
};

struct TailAudit {
    std::vector<TailAuditRow> rows;
    double threshold_factor = 3.0;
    double max_growth_ratio = 4.0;
    std::map<CorrectorOp, double> growth_ratio;
    bool tail_passed = true;
    bool growth_passed = true;
    bool passed() const { return tail_passed && growth_passed; }
};

/// The theorem's envelope for |L(χ_r)(j)|: r(log⁺|j|^{3/2} + log r^{3/2})
/// for identity and shifts, log⁺|j| + log r for centered differences.
inline double growth_envelope(CorrectorOp op, const Index& j, int r) {
    const double lj = std::max(0.0, std::log(norm2(j)));
    const double lr = std::log(double(r));
    if (op == CorrectorOp::Centered0 || op == CorrectorOp::Centered1) return lj + lr;
    return r * (std::pow(lj, 1.5) + std::pow(lr, 1.5));
}

/// Monte-Carlo audit over `n_realizations` independent mass fields (seeds
/// base_seed + i). The tail threshold is `threshold_factor`·proxy-sd, so
/// the Hoeffding bound is 2 exp(−threshold_factor²/2).
inline TailAudit tail_bound_audit(const MassModel& model, const std::vector<int>& radii, int n_realizations,
                                  const std::vector<CorrectorOp>& ops, std::uint64_t base_seed = 1,
                                  double threshold_factor = 3.0, int dim = 2) {
    if (n_realizations < 50) throw std::invalid_argument("tail_bound_audit: at least 50 realizations required");
    model.validate();
    TailAudit audit;
    audit.threshold_factor = threshold_factor;
    const double spread = model.upper() - model.lower();
    const double mbar = model.mean();
    int rmax = 0;
    for (int r : radii) rmax = std::max(rmax, r);
    const GreenTable green = dim == 2 ? green_function(2 * rmax + 1, 1e-10) : green_function_1d(2 * rmax + 1);

    for (int r : radii) {
        const auto eval = LatticeWindow::square(dim, r);
        std::vector<std::vector<double>> at_origin(ops.size());
        std::vector<double> growth_sum(ops.size(), 0.0);
        for (int i = 0; i < n_realizations; ++i) {
            const auto mf = sample_masses(model, LatticeWindow::square(dim, r), base_seed + std::uint64_t(i));
            ScalarField z = mf.masses;
            for (double& v : z.values()) v -= mbar;
            auto cf = corrector(z, r, eval, green);
            for (std::size_t o = 0; o < ops.size(); ++o) {
                const auto& img = cf.image(ops[o]);
                at_origin[o].push_back(img[{0, 0}]);
                double g = 0.0;
                eval.for_each([&](const Index& j) { g = std::max(g, std::abs(img[j]) / growth_envelope(ops[o], j, r)); });
                growth_sum[o] += g;
            }
        }
        for (std::size_t o = 0; o < ops.size(); ++o) {
            TailAuditRow row;
            row.r = r;
            row.op = ops[o];
            row.realizations = n_realizations;
            double norm_sq = 0.0;
            const int r1 = dim == 2 ? r : 0;
            for (int a = -r; a <= r; ++a)
                for (int b = -r1; b <= r1; ++b)
                    norm_sq += std::pow(apply_op_at(ops[o], [&](const Index& q) { return green(q - Index{a, b}); },
                                                    Index{0, 0}),
                                        2);
            row.green_norm = std::sqrt(norm_sq);
            row.proxy_sd = 0.5 * spread * row.green_norm;
            row.threshold = threshold_factor * row.proxy_sd;
            int over = 0;
            double ss = 0.0;
            for (double v : at_origin[o]) {
                if (std::abs(v) > row.threshold) ++over;
                ss += v * v;
            }
            row.empirical_sd = std::sqrt(ss / n_realizations);
            row.exceedance = double(over) / n_realizations;
            row.bound = norm_sq > 0 ? 2.0 * std::exp(-2.0 * row.threshold * row.threshold / (spread * spread * norm_sq))
                                    : 2.0 * std::exp(-0.5 * threshold_factor * threshold_factor);
            if (!(spread > 0)) row.bound = 2.0 * std::exp(-0.5 * threshold_factor * threshold_factor);
            const double p = std::min(1.0, row.bound);
            row.mc_error = std::sqrt(p * (1.0 - p) / n_realizations);
            row.tail_passed = row.exceedance <= row.bound + 3.0 * row.mc_error;
            row.growth = growth_sum[o] / n_realizations;
            audit.tail_passed = audit.tail_passed && row.tail_passed;
            audit.rows.push_back(row);
        }
    }
    for (auto op : ops) {
        double lo = INFINITY, hi = 0.0;
        for (const auto& row : audit.rows)
            if (row.op == op) {
                lo = std::min(lo, row.growth);
                hi = std::max(hi, row.growth);
            }
        const double ratio = hi == 0.0 ? 1.0 : hi / lo;
        audit.growth_ratio[op] = ratio;
        audit.growth_passed = audit.growth_passed && std::isfinite(ratio) && ratio <= audit.max_growth_ratio;
    }
    return audit;
}

}  // namespace homlat
