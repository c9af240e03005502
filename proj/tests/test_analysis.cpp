#include <cmath>
#include <complex>
#include <filesystem>
#include <numbers>
#include <random>

#include <gtest/gtest.h>

#include "homlat/analysis.hpp"
#include "homlat/mass_models.hpp"

using namespace homlat;
using std::numbers::pi;

namespace {

struct Setup {
    double eps;
    SimConfig sc;
    WaveSolution wave;
    double R;
};

Setup make_setup(int dim, double eps, const MassModel& model, double T = 1.0) {
    const auto data = initial_data("paper-sech-pair", dim);
    const double c = effective_speed(model);
    auto sc = SimConfig::make(dim, eps, T, model.lower(), data.support_radius, 9, 8, 0.1);
    const int W = sc.window.half_extent(0);
    WaveSolution wave(data, c, WaveSolution::lattice_grid(dim, eps, W, c, T, data.support_radius));
    return {eps, sc, std::move(wave), cutoff_radius(eps, c, T, 0.1)};
}

// U = cos(k·X − ωτ) with ω = |k|, sampled with exact derivatives.
LatticeWaveSample plane_wave_sample(const LatticeWindow& w, double eps, double tau, double k0, double k1) {
    const double om = std::hypot(k0, k1);
    LatticeWaveSample s;
    for (int i = 0; i <= 4; ++i)
        s.d.push_back(ScalarField::from_function(w, [&](const Index& j) {
            const double ph = k0 * eps * j[0] + k1 * eps * j[1] - om * tau;
            // ∂_τ^i cos(ph) = ω^i cos(ph + iπ/2)
            return std::pow(om, i) * std::cos(ph + i * pi / 2);
        }));
    s.lap_x = (-om * om) * s.d[0];
    return s;
}

}  // namespace

TEST(Residual, CutoffRadius) {
    EXPECT_NEAR(cutoff_radius(0.25, 1.0, 1.0, 0.1), (1.0 + std::pow(0.25, -0.1)) / 0.25 + 1.0, 1e-14);
    ApproximateSolution ap;
    ap.radius = 12.9;
    EXPECT_EQ(ap.corrector_radius(), 12);
}

TEST(Residual, ZeroDataZeroResidual) {
    const auto w = LatticeWindow::square(2, 10);
    LatticeWaveSample s;
    for (int i = 0; i <= 4; ++i) s.d.emplace_back(w);
    s.lap_x = ScalarField(w);
    ApproximateSolution ap;
    ap.eps = 0.25;
    ap.variant = AnsatzVariant::Leading;
    EXPECT_EQ(sup_norm(residual_field(ap, ScalarField(w, 1.0), s)), 0.0);
}

// Constant masses: Res = ε⁻¹(ε²Δ_X U − ΔU(ε·)) = O(ε³) for the leading ansatz.
TEST(Residual, LeadingTermCubicInEpsilon) {
    std::vector<double> sup;
    for (double eps : {0.2, 0.1, 0.05}) {
        const auto w = LatticeWindow::square(2, static_cast<int>(std::round(2.0 / eps)));
        const auto s = plane_wave_sample(w, eps, 0.3, 1.3, -0.7);
        ApproximateSolution ap;
        ap.eps = eps;
        ap.variant = AnsatzVariant::Leading;
        ap.radius = 1.0;
        sup.push_back(interior_sup_norm(residual_field(ap, ScalarField(w, 1.0), s)));
        const auto terms = residual_terms(ap, ScalarField(w, 1.0), 1.0, s);
        for (int k = 1; k < 5; ++k) EXPECT_EQ(sup_norm(terms[k]), 0.0);
    }
    for (int k = 0; k < 2; ++k) {
        EXPECT_GE(sup[k] / sup[k + 1], 6.0);
        EXPECT_LE(sup[k] / sup[k + 1], 10.0);
    }
}

TEST(Residual, FiveTermAssemblyMatchesDirect) {
    const auto model = MassModel::iid_two_point(0.5, 1.5);
    for (double eps : {0.5, 0.25}) {
        auto st = make_setup(2, eps, model);
        const auto mf = sample_masses(model, st.sc.window, 5);
        const auto z = fluctuation_field(mf);
        const int G = corrector_green_radius(st.R, st.sc.window);
        const auto green = green_function(G, 1e-10);
        const auto cf = corrector(z, st.R, st.sc.window, green);
        ApproximateSolution ap;
        ap.eps = eps;
        ap.radius = st.R;
        ap.corrector = &cf;
        for (double tau : {0.0, 0.6}) {
            const auto snap = st.wave.evolve(tau);
            const auto s = LatticeWaveSample::from(st.wave, snap, st.sc.window);
            const auto direct = residual_field(ap, mf.masses, s);
            const auto terms = residual_terms(ap, mf.masses, model.mean(), s);
            EXPECT_LE(residual_assembly_gap(direct, terms), 1e-8) << "eps=" << eps << " tau=" << tau;
        }
    }
}

TEST(Residual, ConstantMassesLeaveOnlyFirstTerm) {
    const auto model = MassModel::constant(1.0);
    auto st = make_setup(2, 0.5, model);
    const auto mf = sample_masses(model, st.sc.window, 1);
    const auto z = fluctuation_field(mf);
    const auto cf = corrector(z, st.R, st.sc.window, green_function(corrector_green_radius(st.R, st.sc.window), 1e-10));
    ApproximateSolution ap;
    ap.eps = 0.5;
    ap.radius = st.R;
    ap.corrector = &cf;
    const auto s = LatticeWaveSample::from(st.wave, st.wave.evolve(0.5), st.sc.window);
    const auto terms = residual_terms(ap, mf.masses, 1.0, s);
    EXPECT_GT(sup_norm(terms[0]), 0.0);
    for (int k = 1; k < 5; ++k) EXPECT_EQ(sup_norm(terms[k]), 0.0);
}

TEST(Errors, SelfComparisonIsZero) {
    const auto w = LatticeWindow::square(2, 6);
    const auto U = ScalarField::from_function(w, [](const Index& j) { return std::exp(-0.1 * (j[0] * j[0] + j[1] * j[1])); });
    const auto Ut = 0.5 * U;
    LatticeState s{(1.0 / 0.25) * U, Ut, 0.0};
    const auto e = absolute_errors_at(s, 0.25, U, Ut);
    EXPECT_EQ(e.aed, 0.0);
    EXPECT_EQ(e.aev, 0.0);
    EXPECT_GT(e.u_norm, 0.0);
}

TEST(Dft, DeltaAndParseval) {
    const auto w = LatticeWindow::square(2, 7);
    const auto d = dft(ScalarField::indicator(w, {0, 0}), 16);
    for (const auto& v : d.values) EXPECT_NEAR(std::abs(v - std::complex<double>(1.0 / (4 * pi * pi), 0)), 0.0, 1e-16);
    std::mt19937_64 g(1);
    std::normal_distribution<double> nd;
    for (int dim : {1, 2}) {
        const auto f = ScalarField::from_function(LatticeWindow::square(dim, 9), [&](const Index&) { return nd(g); });
        EXPECT_NEAR(spectral_norm_sq(dft(f)), std::pow(weighted_l2(f), 2), 1e-10);
    }
    // Shift theorem against a direct sum at one frequency.
    const auto f = ScalarField::from_function(w, [&](const Index&) { return nd(g); });
    const auto F = dft(f, 15);
    std::complex<double> direct = 0;
    const double y0 = 2 * pi * 4 / 15, y1 = 2 * pi * 11 / 15;
    w.for_each([&](const Index& j) { direct += f[j] * std::exp(std::complex<double>(0, -(j[0] * y0 + j[1] * y1))); });
    EXPECT_NEAR(std::abs(F.at(4, 11) - direct / (4 * pi * pi)), 0.0, 1e-13);
}

TEST(Interpolation, SincSamplesReproduceSinc) {
    const auto w = LatticeWindow::square(2, 8);
    const auto fine = lowpass_interpolate(ScalarField::indicator(w, {0, 0}), 2, 4);
    for (int a = -fine.half[0]; a <= fine.half[0]; ++a)
        for (int b = -fine.half[1]; b <= fine.half[1]; ++b)
            EXPECT_NEAR(fine.at(a, b), sinc(fine.coord(a)) * sinc(fine.coord(b)), 1e-8);
}

TEST(Interpolation, MatchesDirectSincSum) {
    std::mt19937_64 g(3);
    std::uniform_real_distribution<double> u(-1, 1);
    for (int dim : {1, 2}) {
        const auto f = ScalarField::from_function(LatticeWindow::square(dim, 16), [&](const Index&) { return u(g); });
        const auto fine = lowpass_interpolate(f, 4, 3);
        double worst = 0.0;
        for (int a = -fine.half[0]; a <= fine.half[0]; a += 3)
            for (int b = -fine.half[1]; b <= fine.half[1]; b += (dim == 2 ? 5 : 1))
                worst = std::max(worst, std::abs(fine.at(a, b) - sinc_sum(f, fine.coord(a), fine.coord(b))));
        EXPECT_LE(worst, 1e-6) << "dim=" << dim;
        // Integer nodes return the samples.
        f.window().for_each([&](const Index& j) { EXPECT_NEAR(fine.at(4 * j[0], 4 * j[1]), f[j], 1e-12); });
    }
}

// The direct route truncates the interpolant tails at the box edge, so it
// approaches the Plancherel value from below as the box widens.
TEST(CoarseGrain, PlancherelRouteMatchesDirectQuadrature) {
    const auto model = MassModel::iid_two_point(0.5, 1.5);
    const double eps = 0.5;
    for (int dim : {1, 2}) {
        const auto data = initial_data("paper-sech-pair", dim);
        const auto sc = SimConfig::make(dim, eps, 1.0, model.lower(), data.support_radius, 9, 8, 0.1);
        const int W = sc.window.half_extent(0) + 84;
        const WaveSolution wave(data, 1.0, WaveSolution::lattice_grid(dim, eps, W, 1.0, 1.0, data.support_radius));
        const auto mf = sample_masses(model, sc.window, 2);
        LatticeSimulation sim(sc, mf.masses, initialize(data, eps, sc.window));
        sim.advance_to(1.0);
        const auto fast = coarse_grain_error_at(sim.state(), eps, wave, eps * 1.0);
        double prev_gap = INFINITY;
        for (int margin : {20, 40, 80}) {
            const auto slow = coarse_grain_error_direct(sim.state(), eps, wave, eps * 1.0, 2, margin);
            const double gap = std::abs(fast.displacement - slow.displacement) + std::abs(fast.velocity - slow.velocity);
            EXPECT_LE(gap, prev_gap * (1 + 1e-9)) << "dim=" << dim << " margin=" << margin;
            prev_gap = gap;
            if (margin == 80) {
                EXPECT_NEAR(fast.displacement, slow.displacement, 1e-3 * slow.displacement) << "dim=" << dim;
                EXPECT_NEAR(fast.velocity, slow.velocity, 1e-3 * slow.velocity) << "dim=" << dim;
            }
        }
    }
}

// Lattice data equal to the sampled wave: only interpolation error remains,
// and it shrinks with ε.
TEST(CoarseGrain, SampledWaveLeavesInterpolationError) {
    double prev = INFINITY;
    for (double eps : {0.5, 0.25, 0.125}) {
        auto st = make_setup(2, eps, MassModel::constant(1.0));
        const auto snap = st.wave.evolve(0.4, 1, false);
        const auto s = LatticeWaveSample::from(st.wave, snap, st.sc.window);
        LatticeState state{(1.0 / eps) * s.d[0], s.d[1], 0.0};
        const auto e = coarse_grain_error_at(state, eps, st.wave, 0.4);
        const double scale = std::sqrt(st.wave.l2_sq(0.4, 0));
        EXPECT_LT(e.displacement, 0.05 * scale);
        EXPECT_LT(e.displacement, prev);
        prev = e.displacement;
    }
}

TEST(SlopeFit, SyntheticCurves) {
    const std::vector<double> eps{0.5, 0.25, 0.125, 0.0625, 0.03125};
    auto series_of = [&](auto f) {
        ErrorSeries s;
        for (double e : eps)
            for (int r = 0; r < 3; ++r) s.add(e, r, r + 1, "m", f(e) * (1.0 + 0.01 * (r - 1)));
        return s;
    };
    const auto sq = fit_slope(series_of([](double e) { return e * e; }), "m");
    EXPECT_NEAR(sq.slope, 2.0, 1e-12);
    EXPECT_EQ(sq.points, 5);
    EXPECT_NEAR(sq.slope_stderr, 0.0, 1e-12);
    EXPECT_NEAR(fit_slope(series_of([](double) { return 3.0; }), "m").slope, 0.0, 1e-12);
    const auto per = fit_slope(series_of([](double e) { return e * e; }), "m", Aggregation::PerRealization);
    EXPECT_EQ(per.points, 15);
    EXPECT_NEAR(per.slope, 2.0, 1e-12);
    EXPECT_GT(per.slope_stderr, 0.0);
    // ε·log(1/ε)^{3/2}: the log factor pulls the apparent slope far below 1.
    std::vector<double> lx, ly;
    for (double e : eps) {
        lx.push_back(std::log(e));
        ly.push_back(std::log(e * std::pow(std::log(1 / e), 1.5)));
    }
    const double mx = (lx[0] + lx[1] + lx[2] + lx[3] + lx[4]) / 5, my = (ly[0] + ly[1] + ly[2] + ly[3] + ly[4]) / 5;
    double sxy = 0, sxx = 0;
    for (int k = 0; k < 5; ++k) {
        sxy += (lx[k] - mx) * (ly[k] - my);
        sxx += (lx[k] - mx) * (lx[k] - mx);
    }
    const auto lg = fit_slope(series_of([](double e) { return e * std::pow(std::log(1 / e), 1.5); }), "m");
    EXPECT_NEAR(lg.slope, sxy / sxx, 1e-12);
    EXPECT_GT(lg.slope, 0.1);
    EXPECT_LT(lg.slope, 0.2);
}

TEST(SlopeFit, NeedsFourEpsilons) {
    ErrorSeries s;
    for (double e : {0.5, 0.25, 0.125}) s.add(e, 0, 1, "m", e);
    EXPECT_THROW(fit_slope(s, "m"), std::invalid_argument);
    s.add(0.0625, 0, 1, "other", 1.0);
    EXPECT_THROW(fit_slope(s, "m"), std::invalid_argument);
}

TEST(Csv, RoundTripIsExact) {
    ErrorSeries s;
    s.metadata = {{"name", "x"}, {"config_hash", "0123"}};
    s.add(0.125, 2, 3, "aed", 1.0 / 3.0);
    s.add(0.0625, 0, 1, "aev", 6.02214076e23);
    s.add(0.5, 1, 2, "boundary_ratio", 4.9e-324);
    const auto file = std::filesystem::temp_directory_path() / "homlat_csv_test.csv";
    write_csv(file, s);
    int dropped = -1;
    const auto back = read_csv(file, &dropped);
    EXPECT_EQ(dropped, 0);
    ASSERT_EQ(back.records.size(), s.records.size());
    for (std::size_t k = 0; k < s.records.size(); ++k) {
        EXPECT_EQ(back.records[k].value, s.records[k].value);
        EXPECT_EQ(back.records[k].epsilon, s.records[k].epsilon);
        EXPECT_EQ(back.records[k].metric, s.records[k].metric);
        EXPECT_EQ(back.records[k].seed, s.records[k].seed);
    }
    EXPECT_EQ(back.meta("config_hash"), "0123");
    EXPECT_EQ(back.epsilons(), (std::vector<double>{0.5, 0.125, 0.0625}));
    {
        std::ofstream os(file, std::ios::app);
        os << "0.25,0,1,aed,";
    }
    EXPECT_EQ(read_csv(file, &dropped).records.size(), 3u);
    EXPECT_EQ(dropped, 1);
    {
        std::ofstream os(file);
        os << "# schema=other/9\nepsilon,realization,seed,metric,value\n";
    }
    EXPECT_THROW(read_csv(file), std::runtime_error);
    std::filesystem::remove(file);
}

TEST(Stats, Median) {
    EXPECT_EQ(median({3.0, 1.0, 2.0}), 2.0);
    EXPECT_EQ(median({4.0, 1.0, 3.0, 2.0}), 2.5);
    EXPECT_THROW(median({}), std::invalid_argument);
}
