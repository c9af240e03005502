#include <cmath>
#include <filesystem>
#include <numbers>

#include <Eigen/Dense>
#include <gtest/gtest.h>

#include "homlat/lattice_sim.hpp"
#include "homlat/mass_models.hpp"

using namespace homlat;
using std::numbers::pi;

namespace {

SimConfig plain_config(int dim, int half, double dt, std::vector<double> times, double mass_lower = 0.5,
                       int safety = 4) {
    SimConfig c;
    c.eps = 0.25;
    c.T = 1.0;
    c.dt = dt;
    c.window = LatticeWindow::square(dim, half);
    c.sample_times = std::move(times);
    c.mass_lower = mass_lower;
    c.safety = safety;
    return c;
}

LatticeState bump_state(const LatticeWindow& w, double width, double shift = 0.0) {
    LatticeState s;
    s.u = ScalarField::from_function(w, [&](const Index& j) {
        const double r2 = (j[0] - shift) * (j[0] - shift) + (w.dim() == 2 ? double(j[1] * j[1]) : 0.0);
        return std::exp(-r2 / (width * width));
    });
    s.p = ScalarField::from_function(w, [&](const Index& j) { return 0.3 * std::sin(0.2 * j[0]) * s.u[j]; });
    return s;
}

LatticeState evolve(const ScalarField& masses, LatticeState s, double dt, int steps) {
    VerletStepper st(masses);
    for (int k = 0; k < steps; ++k) st.step(s, dt);
    return s;
}

double state_distance(const LatticeState& a, const LatticeState& b) {
    return weighted_l2({&a.u, &a.p}) == 0 && weighted_l2({&b.u, &b.p}) == 0
               ? 0.0
               : std::sqrt(std::pow(weighted_l2(a.u - b.u), 2) + std::pow(weighted_l2(a.p - b.p), 2));
}

}  // namespace

TEST(SimConfig, StabilityAndWindow) {
    auto c = SimConfig::make(2, 0.25, 1.0, 0.5, 7.0);
    EXPECT_NO_THROW(c.validate());
    EXPECT_NEAR(c.dt, 0.25 * std::sqrt(0.25), 1e-15);
    EXPECT_EQ(c.window.half_extent(0), static_cast<int>(std::ceil((7.0 + 1.0 / std::sqrt(0.5)) / 0.25)) + 8);
    EXPECT_EQ(c.sample_times.size(), 33u);
    EXPECT_DOUBLE_EQ(c.sample_times.back(), 4.0);
    c.dt = 0.51 * std::sqrt(0.25);
    EXPECT_THROW(c.validate(), std::invalid_argument);
    c = SimConfig::make(2, 0.25, 1.0, 0.5, 7.0);
    c.sample_times = {1.0, 0.5};
    EXPECT_THROW(c.validate(), std::invalid_argument);
}

TEST(Initialize, ScalingAndValues) {
    const auto data = initial_data("paper-sech-pair", 2);
    const auto s1 = initialize(data, 1.0, LatticeWindow::square(2, 4));
    EXPECT_EQ((s1.u[Index{0, 0}]), data.phi(0, 0));
    EXPECT_EQ((s1.p[Index{1, -1}]), data.psi(1, -1));
    const auto zero = initialize(initial_data("zero", 2), 0.1, LatticeWindow::square(2, 4));
    EXPECT_EQ(weighted_l2({&zero.u, &zero.p}), 0.0);
    // ‖(p, δ⁺u)‖ ≈ ε^{−1}·(continuum norm) in 2D.
    std::vector<double> norms;
    for (double eps : {0.2, 0.1, 0.05}) {
        const auto s = initialize(data, eps, LatticeWindow::square(2, static_cast<int>(8 / eps)));
        const auto d0 = diff_forward(s.u, 0), d1 = diff_forward(s.u, 1);
        norms.push_back(weighted_l2({&s.p, &d0, &d1}));
    }
    for (int k = 0; k < 2; ++k) {
        EXPECT_GE(norms[k + 1] / norms[k], 1.9);
        EXPECT_LE(norms[k + 1] / norms[k], 2.1);
    }
}

TEST(Verlet, ZeroStateStaysZero) {
    const auto w = LatticeWindow::square(2, 6);
    LatticeState s{ScalarField(w), ScalarField(w), 0.0};
    const auto out = evolve(ScalarField(w, 1.0), s, 0.1, 50);
    EXPECT_EQ(weighted_l2({&out.u, &out.p}), 0.0);
}

// Dirichlet eigenmode sin(k(j + W + 1)) with k = πm/(2W + 2): Verlet maps it
// to cos(nθ)·u₀ with cos θ = 1 − ω²dt²/2 and ω² = 4 sin²(k/2) per axis.
TEST(Verlet, LatticeDispersion) {
    const int W = 15, m0 = 3, m1 = 5;
    const auto w = LatticeWindow::square(2, W);
    const double k0 = pi * m0 / (2 * W + 2), k1 = pi * m1 / (2 * W + 2);
    auto mode = [&](const Index& j) { return std::sin(k0 * (j[0] + W + 1)) * std::sin(k1 * (j[1] + W + 1)); };
    const double omega = std::sqrt(4 * std::pow(std::sin(k0 / 2), 2) + 4 * std::pow(std::sin(k1 / 2), 2));
    const double dt = 0.05;
    const int steps = 400;
    LatticeState s{ScalarField::from_function(w, mode), ScalarField(w), 0.0};
    const auto out = evolve(ScalarField(w, 1.0), s, dt, steps);
    const double theta = std::acos(1 - 0.5 * omega * omega * dt * dt);
    double discrete = 0.0, continuous = 0.0;
    w.for_each([&](const Index& j) {
        discrete = std::max(discrete, std::abs(out.u[j] - std::cos(steps * theta) * mode(j)));
        continuous = std::max(continuous, std::abs(out.u[j] - std::cos(omega * steps * dt) * mode(j)));
    });
    EXPECT_LE(discrete, 1e-11);
    EXPECT_LE(continuous, omega * omega * omega * dt * dt * steps * dt / 24 * 1.1);
    EXPECT_GT(continuous, 1e-6);
}

TEST(Verlet, SecondOrderSelfConvergence) {
    const auto w = LatticeWindow::square(2, 24);
    const auto masses = sample_masses(MassModel::iid_two_point(0.5, 1.5), w, 3).masses;
    const auto s0 = bump_state(w, 4.0);
    const double dt = 0.1;
    const auto ref = evolve(masses, s0, dt / 8, 8 * 40);
    const double e1 = state_distance(evolve(masses, s0, dt, 40), ref);
    const double e2 = state_distance(evolve(masses, s0, dt / 2, 80), ref);
    // (1 − 1/64)/(1/4 − 1/64) ≈ 4.2 for a clean second-order method.
    EXPECT_GE(e1 / e2, 3.5);
    EXPECT_LE(e1 / e2, 4.5);
}

// M ü = Δu on a 65-site chain: exact solution from the eigen-decomposition
// of M^{−1/2}(−Δ)M^{−1/2}.
TEST(Verlet, OneDimensionalEigenOracle) {
    const int W = 32, n = 2 * W + 1;
    const auto w = LatticeWindow::square(1, W);
    const auto masses = sample_masses(MassModel::iid_two_point(0.5, 1.5), w, 21).masses;
    const auto s0 = bump_state(w, 6.0, 3.0);
    Eigen::MatrixXd K = Eigen::MatrixXd::Zero(n, n);
    for (int a = 0; a < n; ++a) {
        K(a, a) = 2.0;
        if (a > 0) K(a, a - 1) = -1.0;
        if (a + 1 < n) K(a, a + 1) = -1.0;
    }
    Eigen::VectorXd ms(n), u0(n), p0(n);
    for (int a = 0; a < n; ++a) {
        ms[a] = std::sqrt(masses.values()[a]);
        u0[a] = s0.u.values()[a];
        p0[a] = s0.p.values()[a];
    }
    const Eigen::MatrixXd A = ms.cwiseInverse().asDiagonal() * K * ms.cwiseInverse().asDiagonal();
    Eigen::SelfAdjointEigenSolver<Eigen::MatrixXd> es(A);
    const Eigen::VectorXd om = es.eigenvalues().cwiseSqrt();
    const Eigen::VectorXd a0 = es.eigenvectors().transpose() * ms.cwiseProduct(u0);
    const Eigen::VectorXd b0 = es.eigenvectors().transpose() * ms.cwiseProduct(p0);
    const double T = 6.0;
    Eigen::VectorXd c(n);
    for (int q = 0; q < n; ++q) c[q] = std::cos(om[q] * T) * a0[q] + std::sin(om[q] * T) / om[q] * b0[q];
    const Eigen::VectorXd exact = ms.cwiseInverse().cwiseProduct(es.eigenvectors() * c);

    const auto out = evolve(masses, s0, T / 12000, 12000);
    double worst = 0.0;
    for (int a = 0; a < n; ++a) worst = std::max(worst, std::abs(out.u.values()[a] - exact[a]));
    EXPECT_LE(worst, 1e-6);
}

TEST(Verlet, Linearity) {
    const auto w = LatticeWindow::square(2, 10);
    const auto masses = sample_masses(MassModel::iid_uniform(0.5, 1.5), w, 8).masses;
    const auto a = bump_state(w, 3.0), b = bump_state(w, 2.0, 2.0);
    LatticeState mix{2.0 * a.u + (-1.5) * b.u, 2.0 * a.p + (-1.5) * b.p, 0.0};
    const auto ea = evolve(masses, a, 0.1, 60), eb = evolve(masses, b, 0.1, 60), em = evolve(masses, mix, 0.1, 60);
    LatticeState combo{2.0 * ea.u + (-1.5) * eb.u, 2.0 * ea.p + (-1.5) * eb.p, 0.0};
    EXPECT_LE(state_distance(em, combo), 1e-12);
}

TEST(Verlet, TimeReversible) {
    const auto w = LatticeWindow::square(2, 12);
    const auto masses = sample_masses(MassModel::iid_two_point(0.5, 1.5), w, 4).masses;
    const auto s0 = bump_state(w, 3.0);
    auto fwd = evolve(masses, s0, 0.15, 100);
    fwd.p *= -1.0;
    auto back = evolve(masses, fwd, 0.15, 100);
    back.p *= -1.0;
    EXPECT_LE(state_distance(back, s0), 1e-11);
}

TEST(Verlet, DetectsNonFiniteState) {
    const auto w = LatticeWindow::square(2, 4);
    LatticeState s{ScalarField(w), ScalarField(w), 0.0};
    s.u[Index{2, -1}] = NAN;
    try {
        VerletStepper::check_finite(s);
        FAIL();
    } catch (const SimulationError& e) {
        EXPECT_NE(std::string(e.what()).find("(2,-1)"), std::string::npos);
    }
}

TEST(Run, MirrorSymmetryForSymmetricData) {
    auto cfg = SimConfig::make(2, 0.25, 1.0, 1.0, 7.0, 5);
    const auto masses = ScalarField(cfg.window, 1.0);
    auto data = initial_data("gaussian", 2);
    const auto tr = run(cfg, masses, data, {}, true);
    for (const auto& s : tr.snapshots)
        cfg.window.for_each([&](const Index& j) {
            EXPECT_NEAR(s.u[j], (s.u[Index{-j[0], -j[1]}]), 1e-10);
            EXPECT_NEAR(s.u[j], (s.u[Index{j[1], j[0]}]), 1e-10);
        });
}

TEST(Run, SampleTimesHitExactly) {
    auto cfg = SimConfig::make(1, 0.125, 1.0, 0.5, 7.0, 7);
    const auto masses = sample_masses(MassModel::iid_two_point(0.5, 1.5), cfg.window, 2).masses;
    const auto tr = run(cfg, masses, initial_data("paper-sech-pair", 1));
    ASSERT_EQ(tr.times.size(), cfg.sample_times.size());
    for (std::size_t k = 0; k < tr.times.size(); ++k) EXPECT_DOUBLE_EQ(tr.times[k], cfg.sample_times[k]);
}

// 257² window, t ∈ [0, 16] with random masses.
TEST(Run, HamiltonianDriftAndContainment) {
    SimConfig cfg = plain_config(2, 128, 0.25 * std::sqrt(0.25), {}, 0.5, 8);
    for (int k = 0; k <= 16; ++k) cfg.sample_times.push_back(double(k));
    cfg.eps = 0.1;
    const auto masses = sample_masses(MassModel::iid_two_point(0.5, 1.5), cfg.window, 9).masses;
    const auto tr = run(cfg, masses, initial_data("paper-sech-pair", 2));
    EXPECT_LE(tr.max_relative_drift(), 1e-4);
    EXPECT_LE(std::abs(tr.secular_drift_rate()), 1e-6);
    EXPECT_LE(tr.max_boundary_ratio(), 1e-8);
}

TEST(Run, BoundaryBreachIsReported) {
    SimConfig cfg = plain_config(2, 20, 0.2, {0.0, 5.0, 40.0}, 1.0, 4);
    const auto masses = ScalarField(cfg.window, 1.0);
    LatticeSimulation sim(cfg, masses, bump_state(cfg.window, 3.0));
    sim.advance_to(5.0);
    EXPECT_NO_THROW(sim.audit());
    sim.advance_to(40.0);
    EXPECT_THROW(sim.audit(), SimulationError);
}

TEST(Energy, WallBondsCounted) {
    const auto w = LatticeWindow::square(1, 1);
    LatticeState s{ScalarField(w), ScalarField(w), 0.0};
    s.u[Index{0, 0}] = 1.0;
    EXPECT_EQ(lattice_energy(s, ScalarField(w, 1.0)), 1.0);
    s.u[Index{1, 0}] = 1.0;
    // bonds: (−1,0)-(0,0): 1, (1,0)-wall: 1.
    EXPECT_EQ(lattice_energy(s, ScalarField(w, 1.0)), 1.0);
}

TEST(Snapshot, RoundTripAndMissingSidecar) {
    const auto dir = std::filesystem::temp_directory_path() / "homlat_snapshot_test";
    std::filesystem::remove_all(dir);
    const auto w = LatticeWindow(2, {5, 3});
    const auto f = ScalarField::from_function(w, [](const Index& j) { return j[0] * 0.5 - j[1] * 1e-3; });
    SnapshotMeta meta;
    meta.eps = 0.125;
    meta.t = 3.5;
    meta.seed = 17;
    meta.model_hash = "abc";
    write_snapshot(dir / "u_000", f, meta);
    SnapshotMeta back;
    const auto g = read_snapshot(dir / "u_000", &back);
    EXPECT_EQ(g.values(), f.values());
    EXPECT_EQ(g.window(), w);
    EXPECT_EQ(back.eps, 0.125);
    EXPECT_EQ(back.seed, 17u);
    EXPECT_EQ(back.model_hash, "abc");
    std::filesystem::remove(dir / "u_000.txt");
    EXPECT_THROW(read_snapshot(dir / "u_000"), std::runtime_error);
    std::filesystem::remove_all(dir);
}
