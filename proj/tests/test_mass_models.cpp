#include <cmath>
#include <set>

#include <gtest/gtest.h>

#include "homlat/mass_models.hpp"

using namespace homlat;

TEST(MassModel, Validation) {
    EXPECT_THROW(MassModel::iid_two_point(0.0, 1.0).validate(), std::invalid_argument);
    EXPECT_THROW(MassModel::iid_two_point(2.0, 1.0).validate(), std::invalid_argument);
    EXPECT_THROW(MassModel::constant(-1.0).validate(), std::invalid_argument);
    EXPECT_THROW(MassModel::periodic_biaxial({1.0, 2.0}).validate(), std::invalid_argument);
    EXPECT_THROW(sample_masses(MassModel::iid_uniform(-0.5, 1.0), LatticeWindow::square(2, 2), 1), std::invalid_argument);
}

TEST(MassModel, AnalyticMoments) {
    EXPECT_EQ(MassModel::constant(1.0).mean(), 1.0);
    EXPECT_EQ(MassModel::iid_two_point(0.5, 1.5).mean(), 1.0);
    EXPECT_EQ(MassModel::iid_two_point(0.5, 1.5).variance(), 0.25);
    EXPECT_EQ(MassModel::iid_uniform(0.5, 1.5).mean(), 1.0);
    EXPECT_NEAR(MassModel::iid_uniform(0.5, 1.5).variance(), 1.0 / 12.0, 1e-16);
    EXPECT_EQ(effective_speed(MassModel::constant(4.0)), 0.5);
    EXPECT_EQ(effective_speed(MassModel::iid_uniform(0.5, 1.5)), 1.0);
}

TEST(SampleMasses, ConstantModel) {
    const auto mf = sample_masses(MassModel::constant(1.0), LatticeWindow::square(2, 5), 9);
    for (double v : mf.masses.values()) EXPECT_EQ(v, 1.0);
    const auto z = fluctuation_field(mf);
    for (double v : z.values()) EXPECT_EQ(v, 0.0);
}

TEST(SampleMasses, TwoPointSupportAndFluctuation) {
    const auto mf = sample_masses(MassModel::iid_two_point(0.5, 1.5), LatticeWindow::square(2, 20), 3);
    std::set<double> seen(mf.masses.values().begin(), mf.masses.values().end());
    EXPECT_EQ(seen, (std::set<double>{0.5, 1.5}));
    const auto z = fluctuation_field(mf);
    for (double v : z.values()) EXPECT_TRUE(v == -0.5 || v == 0.5);
}

TEST(SampleMasses, UniformWithinBounds) {
    const auto mf = sample_masses(MassModel::iid_uniform(0.5, 1.5), LatticeWindow::square(2, 30), 4);
    for (double v : mf.masses.values()) {
        EXPECT_GE(v, 0.5);
        EXPECT_LE(v, 1.5);
    }
}

TEST(SampleMasses, DeterministicAndWindowIndependent) {
    const auto model = MassModel::iid_two_point(0.5, 1.5);
    const auto a = sample_masses(model, LatticeWindow::square(2, 10), 42);
    const auto b = sample_masses(model, LatticeWindow::square(2, 10), 42);
    EXPECT_EQ(a.masses.values(), b.masses.values());
    const auto big = sample_masses(model, LatticeWindow::square(2, 25), 42);
    a.window().for_each([&](const Index& j) { EXPECT_EQ(a.masses[j], big.masses[j]); });
    const auto other = sample_masses(model, LatticeWindow::square(2, 10), 43);
    EXPECT_NE(a.masses.values(), other.masses.values());
}

// Sample mean of z over 512² sites within 3 standard errors of 0, and the
// lag-1 sample autocorrelation near zero.
TEST(SampleMasses, CentralLimitAndIndependence) {
    for (const auto& model : {MassModel::iid_two_point(0.5, 1.5), MassModel::iid_uniform(0.5, 1.5)}) {
        const auto mf = sample_masses(model, LatticeWindow(2, {256, 256}), 17);
        const auto z = fluctuation_field(mf);
        double s = 0.0;
        for (double v : z.values()) s += v;
        const double n = double(z.size());
        EXPECT_LE(std::abs(s / n), 3.0 * std::sqrt(model.variance() / n));
        for (int a = 0; a < 2; ++a) {
            double c = 0.0, cnt = 0.0;
            z.window().for_each([&](const Index& j) {
                if (!z.window().contains(j + unit(a))) return;
                c += z[j] * z[j + unit(a)];
                cnt += 1.0;
            });
            EXPECT_LT(std::abs(c / cnt / model.variance()), 0.02);
        }
    }
}

TEST(SampleMasses, LayeredConstantAlongOtherAxis) {
    const auto mf = sample_masses(MassModel::layered_two_point(0.5, 1.5, 0), LatticeWindow::square(2, 30), 5);
    std::set<double> row_values;
    mf.window().for_each([&](const Index& j) {
        EXPECT_EQ(mf.masses[j], (mf.masses[Index{j[0], 0}]));
        row_values.insert(mf.masses[j]);
    });
    EXPECT_EQ(row_values.size(), 2u);
    // Rows are not all equal.
    int flips = 0;
    for (int a = -30; a < 30; ++a) flips += mf.masses[Index{a, 0}] != mf.masses[Index{a + 1, 0}];
    EXPECT_GT(flips, 10);
}

TEST(SampleMasses, PeriodicStructure) {
    const auto bi = sample_masses(MassModel::periodic_biaxial({0.5, 1.5, 1.5, 0.5}), LatticeWindow::square(2, 9), 1);
    const auto lay = sample_masses(MassModel::periodic_layered({0.5, 1.5}, 0), LatticeWindow::square(2, 9), 1);
    bi.window().for_each([&](const Index& j) {
        for (int a = 0; a < 2; ++a)
            if (bi.window().contains(j + 2 * unit(a))) {
                EXPECT_EQ(bi.masses[j], bi.masses[j + 2 * unit(a)]);
                EXPECT_EQ(lay.masses[j], lay.masses[j + 2 * unit(a)]);
            }
        if (bi.window().contains(j + unit(1))) EXPECT_EQ(lay.masses[j], lay.masses[j + unit(1)]);
    });
    EXPECT_EQ(MassModel::periodic_biaxial({0.5, 1.5, 1.5, 0.5}).mean(), 1.0);
}

TEST(MassModel, JsonRoundTrip) {
    for (const auto& m : {MassModel::constant(2.0), MassModel::iid_two_point(0.5, 1.5, 0.3),
                          MassModel::iid_uniform(0.25, 2.0), MassModel::layered_two_point(0.5, 1.5, 1),
                          MassModel::periodic_biaxial({1, 2, 3, 4}), MassModel::periodic_layered({1, 3}, 1)}) {
        const nlohmann::json j = m;
        EXPECT_EQ(j.get<MassModel>(), m);
    }
}
